"""High-precision reference for the restart guessing count, using mpmath
so it shares no floating-point path with the package.

Run as a script to regenerate tests/fixtures/guess_values.json.
"""
import json
import pathlib
import sys

import mpmath

mpmath.mp.dps = 60

CASES = [(0.5, 16), (0.5, 24), (0.9, 16), (0.5, 3), (0.99, 31)]


def attempts(p, b):
    p = mpmath.mpf(str(p))
    return int(mpmath.floor(mpmath.log(1 - p) / mpmath.log(1 - mpmath.mpf(2) ** -b)))


def main(out):
    rows = [{"p": p, "pac_bits": b, "attempts": attempts(p, b)} for p, b in CASES]
    text = "[\n" + ",\n".join(" " + json.dumps(r) for r in rows) + "\n]\n"
    pathlib.Path(out).write_text(text)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/fixtures/guess_values.json")
