"""Regenerate the high-precision reference tables under tests/data/.

Run once with mpmath installed:

    python scripts/make_reference_tables.py

The tables are committed; the test suite only reads them.
"""

import json
from pathlib import Path

import mpmath as mp

mp.mp.dps = 50
OUT = Path(__file__).resolve().parent.parent / "tests" / "data"

NORMAL_POINTS = [
    -37.5, -20.0, -12.0, -8.0, -6.0, -5.0, -4.0, -3.0, -2.5, -1.96, -1.5, -1.0,
    -0.5, 0.0, 0.3, 0.5, 1.0, 1.5, 1.96, 2.5, 3.0, 4.0, 6.0, 8.0, 12.0,
]

GAMMA_POINTS = [
    (0.5, 0.1), (0.5, 2.0), (1.0, 1.0), (1.0, 30.0), (2.5, 0.01), (4.0, 4.0),
    (4.0, 10.0), (10.0, 5.0), (10.0, 11.0), (10.0, 20.0), (37.0, 36.0),
    (100.0, 90.0), (100.0, 100.0), (100.0, 101.0), (100.0, 130.0),
    (1000.0, 950.0), (1000.0, 1000.0), (1000.0, 1031.6), (5000.0, 5100.0),
    (10000.0, 9800.0), (10000.0, 10000.0), (10000.0, 10100.0),
    (123456.0, 123000.0), (123456.0, 124000.0), (1e6, 1e6 + 1000.0),
]


def normal_table():
    rows = []
    for x in NORMAL_POINTS:
        xv = mp.mpf(x)
        rows.append({"x": x, "cdf": mp.nstr(mp.ncdf(xv), 30), "pdf": mp.nstr(mp.npdf(xv), 30)})
    return rows


def gamma_table():
    rows = []
    for a, x in GAMMA_POINTS:
        val = mp.gammainc(mp.mpf(a), 0, mp.mpf(x), regularized=True)
        rows.append({"a": a, "x": x, "p": mp.nstr(val, 30)})
    return rows


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "normal_cdf_reference.json").write_text(json.dumps(normal_table(), indent=1) + "\n")
    (OUT / "gammainc_reference.json").write_text(json.dumps(gamma_table(), indent=1) + "\n")


if __name__ == "__main__":
    main()
