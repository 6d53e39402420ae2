"""End-to-end cross-checks between the three independent cluster routes:
rolling union-find engine, flood fill on the materialized graph, and the
stabilizer tableau (small systems only)."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

from .clusters import run_realization, surface_partition
from .ensembles import EnsembleConfig, Family
from .reference import canonical, materialized_surface_partition
from .rng import draw_u64
from .stabilizer import replay_realization


@dataclass
class CrossCheckReport:
    trials: int = 0
    matched: int = 0
    mismatches: list[dict] = field(default_factory=list)
    duration_s: float = 0.0
    by_family: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.trials > 0 and self.matched == self.trials

    def as_dict(self) -> dict:
        return {"trials": self.trials, "matched": self.matched,
                "mismatches": self.mismatches[:20], "passed": self.passed,
                "duration_s": self.duration_s, "by_family": self.by_family}


def _random_case(family: Family, seed: int, index: int, max_sites: int,
                 max_depth: int, probs: list[float]) -> EnsembleConfig:
    def pick(tag, n):
        return draw_u64(seed, index, 0, 200 + tag, 0) % n

    p = probs[pick(1, len(probs))]
    if family is Family.MOC2D:
        max_side = max(int(math.isqrt(max_sites)), 2)
        side = 2 + pick(2, max_side - 1)
        sites = side * side
    elif family is Family.HYPERBOLIC:
        n_max = max(max_sites.bit_length() - 1, 2)
        sites = 2 ** (2 + pick(2, max(n_max - 1, 1)))
    elif family is Family.DYCK:
        sites = 2 * (1 + pick(2, max_sites // 2))
        sites = max(sites, 4)
    else:
        sites = 2 + pick(2, max_sites - 1)
    depth = 1 + pick(3, max_depth)
    q = None
    if family is Family.HYPERBOLIC:
        q = min(0.2, 1.0 - p)
    return EnsembleConfig(family, sites, depth, p, q)


def engine_vs_floodfill(families: list[Family], trials: int, max_sites: int,
                        max_depth: int, probs: list[float],
                        seed: int = 0) -> CrossCheckReport:
    """Rolling engine partitions against the materialized-graph flood fill."""
    report = CrossCheckReport()
    t0 = time.perf_counter()
    for fam in families:
        fam_ok = 0
        for t in range(trials):
            cfg = _random_case(fam, seed, t, max_sites, max_depth, probs)
            got = canonical(surface_partition(run_realization(cfg, seed, t)))
            want = canonical(materialized_surface_partition(cfg, seed, t))
            report.trials += 1
            if got == want:
                report.matched += 1
                fam_ok += 1
            else:
                report.mismatches.append({
                    "family": fam.value, "trial": t, "num_sites": cfg.num_sites,
                    "depth": cfg.depth, "prob": cfg.prob,
                    "engine": got, "floodfill": want})
        report.by_family[fam.value] = {"trials": trials, "matched": fam_ok}
    report.duration_s = time.perf_counter() - t0
    return report


def engine_vs_tableau(families: list[Family], trials: int, max_sites: int,
                      max_depth: int, probs: list[float],
                      seed: int = 0) -> CrossCheckReport:
    """Percolation partition against the cat-state partition read off the
    stabilizer tableau, replaying the identical sampled circuit."""
    report = CrossCheckReport()
    t0 = time.perf_counter()
    for fam in families:
        fam_ok = 0
        for t in range(trials):
            cfg = _random_case(fam, seed, t, max_sites, max_depth, probs)
            got = canonical(surface_partition(run_realization(cfg, seed, t)))
            tab = replay_realization(cfg, seed, t)
            want = canonical(tab.extract_cat_partition())
            report.trials += 1
            if got == want:
                report.matched += 1
                fam_ok += 1
            else:
                report.mismatches.append({
                    "family": fam.value, "trial": t, "num_sites": cfg.num_sites,
                    "depth": cfg.depth, "prob": cfg.prob,
                    "engine": got, "tableau": want})
        report.by_family[fam.value] = {"trials": trials, "matched": fam_ok}
    report.duration_s = time.perf_counter() - t0
    return report
