#!/usr/bin/env python3
"""Regenerate the shipped run configurations in configs/.

Spacing grids are derived from target cross-ratio windows so the fit
windows are well covered at each (k, width); rerun after changing target
windows. Quick-tier configs use translated placements of each geometry to
pool statistics per realization; stated-tier configs use the single
placement and the full iteration counts the acceptance bands were
specified at (hardware permitting).
"""
import json
import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from mocsim.analysis import eta_1d
from mocsim.measures import place_subregions_1d

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "configs"


def spacings_for(k: int, w: int, n: int, eta_lo: float, eta_hi: float,
                 thin: float = 1.5) -> list[int]:
    """Integer spacings whose cross-ratio lands in [eta_lo, eta_hi],
    log-thinned to roughly even coverage."""
    etas = []
    for s in range(w, (n - w) // (k - 1) + 1):
        try:
            eta = eta_1d(place_subregions_1d(k, w, n, s))
        except ValueError:
            continue
        if eta_lo <= eta <= eta_hi:
            etas.append((s, eta))
    picked, last = [], None
    for s, e in sorted(etas, key=lambda t: -t[1]):
        if last is None or e < last / thin:
            picked.append(s)
            last = e
    return sorted(picked)


def chain_exponent_config(n, depth, iterations, offsets, grids, fit, seed):
    return {
        "family": "moc1d", "num_sites": n, "depth": depth, "prob": 0.5,
        "iterations": iterations, "master_seed": seed,
        "block_size": max(1000, min(20000, iterations // 40)),
        "geometry_1d": {"grids": grids, "offsets": offsets},
        "fit": fit,
    }


def write(name: str, cfg: dict) -> None:
    path = OUT / name
    path.write_text(json.dumps(cfg, indent=2) + "\n")
    print(f"wrote {path}")


def main() -> None:
    OUT.mkdir(exist_ok=True)

    # --- chain-family GME exponents (N=128, depth 256) -----------------
    n = 128
    grids = []
    for k, widths in ((2, (2, 4, 8)), (3, (2, 4, 8)), (4, (2, 4, 8))):
        for w in widths:
            hi = 0.4 if k < 4 else 0.45
            sp = spacings_for(k, w, n, 0.006, hi)
            if sp:
                grids.append({"k": k, "width": w, "spacings": sp})
    fit = {"enabled": True, "min_events": 10,
           "gme_window": [0.01, 0.3],
           "gme_windows": {"4": [0.04, 0.35]},
           "mi_window": [0.002, 0.3]}
    write("exponents_1d_quick.json", chain_exponent_config(
        n, 256, 2_000_000, list(range(0, n, 16)), grids, fit, 2026))
    write("exponents_1d_smoke.json", chain_exponent_config(
        n, 256, 10_000_000, [0], grids, fit, 2026))
    write("exponents_1d_full.json", chain_exponent_config(
        n, 256, 100_000_000, [0], grids, fit, 2026))

    # --- chain-family MI exponents (N=512, depth 1024, width 8) --------
    n = 512
    grids = [{"k": k, "width": 8, "spacings": spacings_for(k, 8, n, 8e-4, 0.36)}
             for k in (2, 3, 4)]
    fit = {"enabled": True, "min_events": 10,
           "gme_window": [0.01, 0.3], "mi_window": [8e-4, 0.05]}
    write("mi_1d_quick.json", chain_exponent_config(
        n, 1024, 30_000, list(range(0, n, 32)), grids, fit, 2027))
    write("mi_1d_stated.json", chain_exponent_config(
        n, 1024, 1_000_000, [0], grids, fit, 2027))

    # --- brickwork swap family pair-connection law ----------------------
    for tag, iters, all_pos in (("quick", 20_000, True),
                                ("stated", 1_000_000, False)):
        for p in (0.25, 0.5, 0.75):
            write(f"dyck_pairs_p{int(p * 100)}_{tag}.json", {
                "family": "dyck", "num_sites": 1024, "depth": 2048, "prob": p,
                "iterations": iters, "master_seed": 2028,
                "block_size": 500 if tag == "quick" else 10000,
                "measures": {"gme": True, "mi": False, "indirect": False},
                "geometry_pairs": {
                    "distances": [9, 13, 17, 23, 31, 41, 51, 63],
                    "all_positions": all_pos},
                "fit": {"enabled": True, "min_events": 10,
                        "distance_window": [8.5, 64.0]},
            })

    # --- torus family, angle-averaged exponents (L=48, depth 96) -------
    for tag, iters, offsets in (
            ("quick", 600_000, [[0, 0], [24, 0], [0, 24], [24, 24]]),
            ("stated", 10_000_000, [[0, 0]])):
        write(f"exponents_2d_{tag}.json", {
            "family": "moc2d", "num_sites": 48 * 48, "depth": 96,
            "prob": 0.248812, "iterations": iters, "master_seed": 2029,
            "block_size": 2000 if tag == "quick" else 10000,
            "geometry_2d": {"ks": [2], "radii_sq": [1, 2, 4, 5, 8],
                            "eta_min": 0.12, "offsets": offsets},
            "fit": {"enabled": True, "min_events": 10, "num_angles": 64,
                    "eta2d_windows": {"2": [0.2, 0.85]}, "eta2d_points": 12},
        })

    # --- tree-structured family decay reference -------------------------
    write("hyperbolic_pairs_quick.json", {
        "family": "hyperbolic", "num_sites": 1024, "depth": 1,
        "prob": 0.5, "aux_prob": 0.25,
        "iterations": 200_000, "master_seed": 2030, "block_size": 5000,
        "measures": {"gme": True, "mi": False, "indirect": False},
        "geometry_pairs": {"distances": [9, 13, 17, 23, 31, 41, 51, 63],
                           "all_positions": False},
        "fit": {"enabled": True, "min_events": 10,
                "distance_window": [8.5, 64.0]},
    })

    # --- measure-weighted graph demo ------------------------------------
    write("weighted_graph_demo.json", {
        "family": "moc1d", "num_sites": 64, "depth": 64, "prob": 0.5,
        "iterations": 20_000, "master_seed": 2031, "block_size": 2000,
        "geometry_1d": {"grids": [{"k": 2, "width": 4, "spacings": [12]}]},
        "fit": {"enabled": False},
        "weighted_graph": {"enabled": True, "measure": "mi", "k": 2,
                           "width": 4, "spacing": 12, "offset": 20,
                           "depth_window": 48},
    })


if __name__ == "__main__":
    main()
