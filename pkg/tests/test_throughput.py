"""Performance regression gates.

The simulation is the product's hot path: a chain run at production shape
(N=512, depth 1024) must sustain enough realizations per second per core
that the overnight-scale exponent runs stay feasible, and per-site work
must stay near-constant as N grows (index recycling keeps the engine
O(N) per layer). Thresholds are set ~2x below healthy single-core numbers
measured on modest hardware so contended CI boxes do not flap.
"""
import time

import numpy as np
import pytest

from mocsim.experiment import parse_config, run_experiment


def chain_cfg(n, depth, iters, seed=1):
    return parse_config({
        "family": "moc1d", "num_sites": n, "depth": depth, "prob": 0.5,
        "iterations": iters, "master_seed": seed,
        "block_size": max(iters // 4, 1),
        "geometry_1d": {"grids": [{"k": 2, "width": 2, "spacings": [4]}]},
        "fit": {"enabled": False}})


@pytest.mark.slow
def test_chain_throughput_floor():
    run_experiment(chain_cfg(512, 1024, 4))      # compile + warm
    iters = 60
    t0 = time.perf_counter()
    run_experiment(chain_cfg(512, 1024, iters))
    rate = iters / (time.perf_counter() - t0)
    assert rate > 15.0, f"throughput regressed: {rate:.1f} realizations/s"


@pytest.mark.slow
def test_per_site_cost_stays_flat():
    # amortized per-site per-layer cost ratio between N=16384 and N=256 < 2
    def per_site_cost(n, iters):
        depth = 64
        cfg = chain_cfg(n, depth, iters)
        run_experiment(cfg)    # warm
        t0 = time.perf_counter()
        run_experiment(chain_cfg(n, depth, iters, seed=2))
        dt = time.perf_counter() - t0
        return dt / (iters * depth * n)

    small = per_site_cost(256, 256)
    big = per_site_cost(16384, 4)
    assert big / small < 2.0, (small, big)
