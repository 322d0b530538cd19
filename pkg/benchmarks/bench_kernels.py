"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--trials N] [--pac-bits B]
"""

import argparse
import time

import numpy as np

from partsforge import _pykernels

try:
    from partsforge import _kernels
except ImportError:
    _kernels = None


def _time(fn, *args, repeat=3):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def _toymac_loop(mod, n):
    acc = 0
    for i in range(n):
        acc ^= mod.toymac(i, 0x5EED, 0x0123456789ABCDEF, 0xFEDCBA9876543210)
    return acc


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--pac-bits", type=int, default=12)
    ap.add_argument("--macs", type=int, default=200_000)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled kernels not built; run `pip install -e . --no-build-isolation`")
        return

    b, n = args.pac_bits, args.trials
    cases = [
        ("toymac x%d" % args.macs, _toymac_loop, (args.macs,)),
        ("restart b=%d trials=%d" % (b, n),
         lambda k, *a: k.bruteforce_restart(*a), (b, n, 1, 64 << b, 0x400000, 0x5EED)),
        ("sibling b=%d trials=%d" % (b, n),
         lambda k, *a: k.bruteforce_sibling(*a), (b, n, 1, 0x400000, 0x5EED)),
    ]
    print(f"{'kernel':<32}{'python s':>12}{'cython s':>12}{'speedup':>10}")
    for name, fn, a in cases:
        tp, rp = _time(fn, _pykernels, *a, repeat=1)
        tc, rc = _time(fn, _kernels, *a)
        same = np.array_equal(np.asarray(rp), np.asarray(rc))
        print(f"{name:<32}{tp:>12.4f}{tc:>12.4f}{tp / tc:>9.0f}x" + ("" if same else "  MISMATCH"))


if __name__ == "__main__":
    main()
