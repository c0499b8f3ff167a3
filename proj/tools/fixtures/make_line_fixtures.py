#!/usr/bin/env python3
"""Writes the band-model line lists shipped under core/data/lines.

The lists are rigid-rotor P/R branch models with HITRAN-like parameters, not
HITRAN extracts. Rerun after changing a band constant:

    python3 tools/fixtures/make_line_fixtures.py core/data/lines
"""
import math
import sys
from pathlib import Path

C2 = 1.4387769  # cm K
T_REF = 296.0


def fortran_f(value, width, decimals):
    text = f"{value:{width}.{decimals}f}"
    if len(text) > width:
        text = text.replace("0.", ".", 1)
    if len(text) != width:
        raise ValueError(f"{value} does not fit F{width}.{decimals}")
    return text


def record(mol, iso, nu, s, a, g_air, g_self, e_low, n_air, delta, branch, j_low, g_up, g_low):
    text = (
        f"{mol:2d}{iso:1d}{nu:12.6f}{s:10.3E}{a:10.3E}"
        + fortran_f(g_air, 5, 4)
        + fortran_f(g_self, 5, 4)
        + fortran_f(e_low, 10, 4)
        + fortran_f(n_air, 4, 2)
        + fortran_f(delta, 8, 6)
        + f"{'0 0 0 0 0':>15}"
        + f"{'0 0 0 0 0':>15}"
        + " " * 15
        + f"{branch:>6}{j_low:3d}e     "
        + "454332"
        + " 1 1 1 1 1 1"
        + " "
        + f"{g_up:7.1f}{g_low:7.1f}"
    )
    assert len(text) == 160, len(text)
    return text


def band(nu0, b_low, b_up, j_max, s_max, parity, g_air0, g_self0, delta0, a0, spin=lambda j: 1):
    lines = []
    for j in range(0, j_max + 1):
        if parity == "even" and j % 2:
            continue
        e_low = b_low * j * (j + 1)
        for branch in ("P", "R"):
            if branch == "P":
                if j == 0:
                    continue
                m = -j
                j_up = j - 1
                hl = j
            else:
                m = j + 1
                j_up = j + 1
                hl = j + 1
            nu = nu0 + (b_up + b_low) * m + (b_up - b_low) * m * m
            boltz = math.exp(-C2 * e_low / T_REF) * (1 - math.exp(-C2 * nu / T_REF))
            weight = spin(j) * hl * boltz * nu
            g_air = max(0.055, g_air0 - 0.0012 * abs(m))
            g_self = max(0.08, g_self0 - 0.0012 * abs(m))
            delta = delta0 - 0.00005 * abs(m)
            a = a0 * hl / (2 * j_up + 1)
            lines.append(dict(nu=nu, w=weight, e=e_low, g_air=g_air, g_self=g_self,
                              delta=delta, a=a, branch=branch, j=j,
                              g_up=spin(j) * (2 * j_up + 1), g_low=spin(j) * (2 * j + 1)))
    top = max(l["w"] for l in lines)
    for l in lines:
        l["s"] = s_max * l["w"] / top
    lines.sort(key=lambda l: l["nu"])
    return lines


def write(out_dir, stem, mol, lines, n_air):
    par = []
    csv = ["nu0_cm,S,gamma_air,gamma_self,n_air,E_lower,delta_air,molecule,iso"]
    for l in lines:
        rec = record(mol, 1, l["nu"], l["s"], l["a"], l["g_air"], l["g_self"], l["e"], n_air,
                     l["delta"], l["branch"], l["j"], l["g_up"], l["g_low"])
        par.append(rec)
        fields = [rec[3:15], rec[15:25], rec[35:40], rec[40:45], rec[55:59], rec[45:55], rec[59:67]]
        csv.append(",".join([repr(float(f)) for f in fields] + [str(mol), "1"]))
    (out_dir / f"{stem}.par").write_text("\n".join(par) + "\n")
    (out_dir / f"{stem}.csv").write_text("\n".join(csv) + "\n")


def main():
    out_dir = Path(sys.argv[1] if len(sys.argv) > 1 else "core/data/lines")
    out_dir.mkdir(parents=True, exist_ok=True)
    # Acetylene nu1+nu3 combination band; ortho/para 3:1 spin weights.
    c2h2 = band(6556.4877, 1.176646, 1.169572, 25, 1.20e-20, "all", 0.092, 0.165, -0.0070, 21.0,
                spin=lambda j: 3 if j % 2 else 1)
    write(out_dir, "c2h2_nu1nu3", 26, c2h2, 0.75)
    # Carbon dioxide 30012 <- 00001; even lower J only.
    co2 = band(6347.8508, 0.390219, 0.387338, 28, 1.80e-23, "even", 0.080, 0.105, -0.0060, 0.012)
    write(out_dir, "co2_30012", 2, co2, 0.73)


if __name__ == "__main__":
    main()
