"""Command-line entry point: ``partsforge <subcommand> ...``.

Exit codes: 0 success, 1 expected domain failure (diagnostics, faults,
unmet ``--expect``), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from . import _backend
from .attack import (AdversaryScript, Verdict, execute_attack, get_scenario, guess_attempts,
                     run_scenario, sibling_average_guesses, simulate_bruteforce)
from .costmodel import CycleModel, EventCounters, estimate_overhead, pa_analogue_rewrite
from .instrument import LowerError, SchemeSet, lower
from .pa_core import ContractError, KeySet, VaConfig, macvec_lines
from .resources import fixture_path
from .tir import TirError, parse, print_program
from .vm import AsmError, assemble, process_start


@dataclass(frozen=True)
class RunConfig:
    va_bits: int = 39
    tagging: bool = False
    seed: int = 0
    schemes: SchemeSet = SchemeSet()
    fuel: int = 10**8
    report: str = "text"

    @property
    def va(self) -> VaConfig:
        return VaConfig(self.va_bits, self.tagging)


class UsageError(Exception):
    pass


def _default_seed() -> int:
    env = os.environ.get("PARTSFORGE_SEED")
    if env is None:
        return 0
    try:
        return int(env, 0)
    except ValueError:
        raise UsageError(f"PARTSFORGE_SEED must be an integer, got {env!r}") from None


def _config(args) -> RunConfig:
    seed = args.seed if getattr(args, "seed", None) is not None else _default_seed()
    try:
        schemes = SchemeSet.parse(getattr(args, "schemes", None))
    except ValueError as e:
        raise UsageError(str(e)) from None
    cfg = RunConfig(getattr(args, "va_bits", 39), getattr(args, "tagging", False), seed, schemes,
                    getattr(args, "fuel", 10**8), getattr(args, "report", None) or "text")
    try:
        cfg.va
    except ContractError as e:
        raise UsageError(str(e)) from None
    return cfg


def _read(path: str) -> str:
    p = Path(path)
    if not p.exists():
        alt = fixture_path(p.name)
        if alt.exists():
            return alt.read_text()
        raise UsageError(f"no such file: {path}")
    return p.read_text()


def _emit_json(obj):
    print(json.dumps(obj, indent=2, sort_keys=True))


def _load_program(path: str, cfg: RunConfig):
    """(assembly text, manifest or None) for a .tir or .tvm file."""
    text = _read(path)
    if path.endswith(".tvm"):
        return text, None
    ip = lower(parse(text), cfg.schemes, cfg.seed)
    return ip.assembly, ip.manifest


# -- subcommands -------------------------------------------------------------
def cmd_check(args) -> int:
    prog = parse(_read(args.file))
    if args.print:
        sys.stdout.write(print_program(prog))
    else:
        print(f"ok: {len(prog.functions)} functions, {len(prog.globals)} globals, "
              f"{len(prog.records)} records")
    return 0


def cmd_instrument(args) -> int:
    cfg = _config(args)
    ip = lower(parse(_read(args.file)), cfg.schemes, cfg.seed)
    if args.output:
        Path(args.output).write_text(ip.assembly)
    else:
        sys.stdout.write(ip.assembly)
    if args.manifest:
        Path(args.manifest).write_text(json.dumps(ip.manifest, indent=2, sort_keys=True) + "\n")
    return 0


def _report_dict(rep) -> dict:
    f = rep.fault
    return {
        "status": rep.status,
        "exit_value": rep.exit_value,
        "output": list(rep.output),
        "fault": None if f is None else {"kind": f.kind, "pc": f.pc, "address": f.address,
                                          "failure_kind": f.failure_kind},
        "marker": rep.marker,
        "instructions": rep.instructions,
        "pa_executed": rep.pa_executed,
        "counters": rep.counters.as_dict(),
    }


def cmd_run(args) -> int:
    cfg = _config(args)
    asm, _ = _load_program(args.file, cfg)
    if args.analogue:
        asm = pa_analogue_rewrite(asm, value_preserving=args.value_preserving)
    m = process_start(assemble(asm), cfg.seed, cfg.va, pa_disabled=args.pa_disabled or args.analogue)
    rep = m.run(cfg.fuel)
    if cfg.report == "json":
        _emit_json(_report_dict(rep))
    else:
        for v in rep.output:
            print(v)
        if rep.status != "halted":
            print(f"[{rep.status}] {rep.fault or rep.marker or ''}", file=sys.stderr)
    return 0 if rep.status == "halted" else 1


def cmd_attack(args) -> int:
    cfg = _config(args)
    if not args.scenario and not args.script:
        raise UsageError("attack needs --scenario or --script")
    script = json.loads(_read(args.script)) if args.script else None
    if args.scenario:
        try:
            sc = get_scenario(args.scenario)
        except KeyError as e:
            raise UsageError(str(e.args[0])) from None
        source = _read(args.file) if args.file else None
        if args.file and args.file.endswith(".tvm"):
            out = execute_attack(source, AdversaryScript.from_dict(script or sc.script),
                                 cfg.seed, cfg.schemes, cfg.va)
            out.scenario = sc.name
        else:
            out = run_scenario(sc, cfg.schemes, cfg.seed, cfg.va, source=source, script=script)
    else:
        if not args.file:
            raise UsageError("attack with --script needs a program file")
        asm, man = _load_program(args.file, cfg)
        out = execute_attack(asm, AdversaryScript.from_dict(script), cfg.seed, cfg.schemes,
                             cfg.va, manifest=man)
    if cfg.report == "json":
        _emit_json(out.as_dict())
    else:
        print(f"{out.scenario or 'script'} [{cfg.schemes}]: {out.verdict.value}")
    if args.expect:
        return 0 if out.verdict == Verdict(args.expect.upper()) else 1
    return 0


def cmd_guess(args) -> int:
    cfg = _config(args)
    if args.simulate:
        if args.trials < 1:
            raise UsageError("--trials must be >= 1")
        stats = simulate_bruteforce(args.pac_bits, args.policy, args.trials, cfg.seed,
                                    args.max_attempts)
        d = stats.as_dict()
        if args.policy == "restart":
            d["predicted_attempts_for_half"] = guess_attempts(0.5, args.pac_bits)
        else:
            d["predicted_mean"] = sibling_average_guesses(args.pac_bits)
        if cfg.report == "json":
            _emit_json(d)
        else:
            for k in sorted(d):
                print(f"{k}: {d[k]}")
        return 0
    n = guess_attempts(args.p, args.pac_bits)
    if cfg.report == "json":
        _emit_json({"pac_bits": args.pac_bits, "p": args.p, "attempts": n,
                    "sibling_average": sibling_average_guesses(args.pac_bits)})
    else:
        print(n)
    return 0


def _cycles(counters: EventCounters, model: CycleModel) -> dict:
    out = {}
    for name in ("ras", "cps", "dps"):
        out[name] = list(estimate_overhead(counters, model, SchemeSet.parse(name)))
    out["all"] = list(estimate_overhead(counters, model, SchemeSet(True, True, True)))
    return out


def _table(rows: list) -> str:
    """One row per program, one column per scheme.  With a measured
    baseline the cells are modeled run-time ratios, otherwise cycle ranges."""
    cols = ("ras", "cps", "dps", "all")
    head = f"{'program':<20}" + "".join(f"{c:>24}" for c in cols)
    lines = [head, "-" * len(head)]
    for r in rows:
        c = r["cycles"]
        base = r.get("instructions", {}).get("baseline")
        if base:
            cells = [f"{1 + c[k][0] / base:.4f}-{1 + c[k][1] / base:.4f}" for k in cols]
        else:
            cells = [f"{c[k][0]}-{c[k][1]}" for k in cols]
        lines.append(f"{r['program']:<20}" + "".join(f"{x:>24}" for x in cells))
    return "\n".join(lines)


def cmd_bench(args) -> int:
    cfg = _config(args)
    model = CycleModel(args.pa_cycles, (args.setup_min, args.setup_max))
    model_d = {"pa_instr_cycles": model.pa_instr_cycles,
               "modifier_setup_cycles": list(model.modifier_setup_cycles),
               "per_pac_op_cycles": list(model.per_pac_op_cycles),
               "per_nonleaf_call_cycles": list(model.per_nonleaf_call_cycles)}
    rows = []
    if args.from_counts:
        data = json.loads(_read(args.from_counts))
        for row in data["rows"] if isinstance(data, dict) else data:
            counters = EventCounters(**{k: row[k] for k in EventCounters.__dataclass_fields__})
            rows.append({"program": row.get("test", "?"), "counters": counters.as_dict(),
                         "cycles": _cycles(counters, model),
                         "selected": list(estimate_overhead(counters, model, cfg.schemes))})
    else:
        if not args.file:
            raise UsageError("bench needs a program or --from-counts")
        prog = parse(_read(args.file))
        base_ip = lower(prog, SchemeSet(), cfg.seed)
        ip = lower(prog, cfg.schemes, cfg.seed)
        base = process_start(assemble(base_ip.assembly), cfg.seed, cfg.va).run(cfg.fuel)
        inst = process_start(assemble(ip.assembly), cfg.seed, cfg.va).run(cfg.fuel)
        ana = process_start(assemble(pa_analogue_rewrite(ip.assembly)), cfg.seed, cfg.va,
                            pa_disabled=True).run(cfg.fuel)
        rows.append({
            "program": Path(args.file).name,
            "counters": inst.counters.as_dict(),
            "cycles": _cycles(inst.counters, model),
            "selected": list(estimate_overhead(inst.counters, model, cfg.schemes)),
            "instructions": {"baseline": base.instructions, "instrumented": inst.instructions,
                             "analogue": ana.instructions},
            "pa_executed": inst.pa_executed,
        })
    report = {"schemes": str(cfg.schemes), "model": model_d, "rows": rows}
    if cfg.report == "json":
        _emit_json(report)
    else:
        print(_table(rows))
    return 0


def cmd_macvec(args) -> int:
    cfg = _config(args)
    for line in macvec_lines(args.count, cfg.seed, cfg.va):
        print(line)
    return 0


def cmd_keygen(args) -> int:
    cfg = _config(args)
    keys = KeySet.generate(cfg.seed)
    for name in ("ia", "ib", "da", "db", "ga"):
        k = getattr(keys, name)
        print(f"{name} {k >> 64:016x} {k & (2**64 - 1):016x}")
    return 0


# -- parser ------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="partsforge",
                                description="Pointer-authentication hardening laboratory.")
    p.add_argument("--version", action="version", version=f"%(prog)s (kernels: {_backend.NAME})")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, schemes=True, report=True, va=True):
        sp.add_argument("--seed", type=lambda s: int(s, 0), default=None,
                        help="determinism seed (default: $PARTSFORGE_SEED or 0)")
        if schemes:
            sp.add_argument("--schemes", default="none",
                            help="comma list of ras,cps,dps; 'all' or 'none'")
        if report:
            sp.add_argument("--report", choices=["text", "json", "table"], default=None)
        if va:
            sp.add_argument("--va-bits", type=int, default=39)
            sp.add_argument("--tagging", action="store_true", help="top-byte tagging on")

    sp = sub.add_parser("check", help="parse and type-check a .tir file")
    sp.add_argument("file")
    sp.add_argument("--print", action="store_true", help="print the canonical form")
    sp.set_defaults(fn=cmd_check)

    sp = sub.add_parser("instrument", help="lower .tir to .tvm assembly")
    sp.add_argument("file")
    sp.add_argument("-o", "--output")
    sp.add_argument("--manifest")
    common(sp, report=False, va=False)
    sp.set_defaults(fn=cmd_instrument)

    sp = sub.add_parser("run", help="run a .tir or .tvm program")
    sp.add_argument("file")
    sp.add_argument("--fuel", type=int, default=10**8)
    sp.add_argument("--pa-disabled", action="store_true")
    sp.add_argument("--analogue", action="store_true", help="run the PA-analogue rewrite")
    sp.add_argument("--value-preserving", action="store_true")
    common(sp)
    sp.set_defaults(fn=cmd_run)

    sp = sub.add_parser("attack", help="run an attack scenario or script")
    sp.add_argument("file", nargs="?")
    sp.add_argument("--scenario")
    sp.add_argument("--script", help="JSON adversary script")
    sp.add_argument("--expect", choices=["detected", "succeeded", "benign"])
    sp.add_argument("--fuel", type=int, default=10**8)
    common(sp)
    sp.set_defaults(fn=cmd_attack)

    sp = sub.add_parser("guess", help="PAC guessing effort")
    sp.add_argument("--pac-bits", type=int, default=16)
    sp.add_argument("--p", type=float, default=0.5)
    sp.add_argument("--simulate", action="store_true")
    sp.add_argument("--policy", choices=["restart", "sibling"], default="restart")
    sp.add_argument("--trials", type=int, default=100_000)
    sp.add_argument("--max-attempts", type=int, default=None)
    common(sp, schemes=False, va=False)
    sp.set_defaults(fn=cmd_guess)

    sp = sub.add_parser("bench", help="event counts and modeled PA overhead")
    sp.add_argument("file", nargs="?")
    sp.add_argument("--from-counts")
    sp.add_argument("--pa-cycles", type=int, default=4)
    sp.add_argument("--setup-min", type=int, default=2)
    sp.add_argument("--setup-max", type=int, default=4)
    sp.add_argument("--fuel", type=int, default=10**8)
    common(sp)
    sp.set_defaults(fn=cmd_bench)

    sp = sub.add_parser("macvec", help="emit MAC test vectors")
    sp.add_argument("--count", type=int, default=16)
    common(sp, schemes=False, report=False)
    sp.set_defaults(fn=cmd_macvec)

    sp = sub.add_parser("keygen", help="print the key set derived from a seed")
    common(sp, schemes=False, report=False, va=False)
    sp.set_defaults(fn=cmd_keygen)
    return p


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.fn(args)
    except UsageError as e:
        print(f"partsforge: error: {e}", file=sys.stderr)
        return 2
    except TirError as e:
        print(e, file=sys.stderr)
        return 1
    except (AsmError, LowerError, ContractError, ValueError) as e:
        print(f"partsforge: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
