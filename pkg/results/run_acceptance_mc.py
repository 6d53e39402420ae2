"""Sequential driver for the cached acceptance Monte Carlo runs."""
import json
import sys
import time
from pathlib import Path

sys.path.insert(0, "/root/pkg/src")
from mocsim.experiment import load_config, run_experiment

REPO = Path("/root/pkg")
CACHE = REPO / "results" / "acceptance"

NAMES = [
    "dyck_pairs_p25_quick", "dyck_pairs_p50_quick", "dyck_pairs_p75_quick",
    "mi_1d_quick",
    "exponents_1d_quick",
    "hyperbolic_pairs_quick",
    "exponents_2d_quick",
]

for name in NAMES:
    cfg = load_config(REPO / "configs" / f"{name}.json")
    cfg = cfg.model_copy(update={"out_dir": str(CACHE / name),
                                 "checkpoint_every_blocks": 5,
                                 "resume": True})
    t0 = time.time()
    last = [t0]

    def progress(done, total):
        now = time.time()
        if now - last[0] > 120:
            last[0] = now
            rate = done / max(now - t0, 1e-9)
            eta_s = (total - done) / max(rate, 1e-9)
            print(f"  {name}: {done}/{total} blocks, ~{eta_s/60:.0f} min left",
                  flush=True)

    print(f"=== {name} starting ({cfg.iterations} realizations)", flush=True)
    res = run_experiment(cfg, progress=progress)
    print(f"=== {name} done in {time.time()-t0:.0f}s; "
          f"{res.meta['realizations_per_s']:.0f} real/s", flush=True)
    if res.report:
        summary = {}
        for sec in ("gme", "mi", "pair_decay"):
            if sec in res.report:
                summary[sec] = res.report[sec]
        print(json.dumps(summary, default=str)[:2000], flush=True)
print("ALL DONE", flush=True)
