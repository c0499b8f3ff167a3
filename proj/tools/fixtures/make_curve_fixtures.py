#!/usr/bin/env python3
"""Writes the synthetic liquid absorption and filter curves under core/data.

The liquid curves are smooth Gaussian bands placed where the solvents absorb
in the telecom window; they are stand-ins, not measured spectra.

    python3 tools/fixtures/make_curve_fixtures.py core/data
"""
import math
import sys
from pathlib import Path


def gaussian(x, centre, fwhm):
    s = fwhm / (2 * math.sqrt(2 * math.log(2)))
    return math.exp(-0.5 * ((x - centre) / s) ** 2)


def grid(lo, hi, step):
    n = int(round((hi - lo) / step))
    return [lo + i * step for i in range(n + 1)]


def main():
    root = Path(sys.argv[1] if len(sys.argv) > 1 else "core/data")
    (root / "liquids").mkdir(parents=True, exist_ok=True)
    (root / "filters").mkdir(parents=True, exist_ok=True)
    xs = grid(1300.0, 1900.0, 0.5)

    rows = ["# synthetic ethanol band model: OH/CH overtone envelope near 1580 nm",
            "lambda_nm,mu_per_cm"]
    for x in xs:
        mu = 0.02 + 1.5 * gaussian(x, 1580.0, 80.0) + 0.4 * gaussian(x, 1695.0, 40.0)
        rows.append(f"{x:.1f},{mu:.6g}")
    (root / "liquids" / "ethanol_mu.csv").write_text("\n".join(rows) + "\n")

    rows = ["# synthetic dichloromethane band model: CH overtone near 1630 nm",
            "lambda_nm,mu_per_cm"]
    for x in xs:
        mu = 0.005 + 0.1 * gaussian(x, 1630.0, 20.0) + 0.04 * gaussian(x, 1690.0, 25.0)
        rows.append(f"{x:.1f},{mu:.6g}")
    (root / "liquids" / "dcm_mu.csv").write_text("\n".join(rows) + "\n")

    rows = ["# bandpass interference filter, 1550 nm centre, 12 nm FWHM, 0.9 peak",
            "lambda_nm,T"]
    for x in grid(1300.0, 1900.0, 0.1):
        t = 0.9 * gaussian(x, 1550.0, 12.0)
        rows.append(f"{x:.1f},{t:.6g}")
    (root / "filters" / "bandpass_1550.csv").write_text("\n".join(rows) + "\n")


if __name__ == "__main__":
    main()
