"""Pilot run that sets the committed d/log n constant for the tracking check.

The pilot uses its own seed, distinct from the acceptance seed, and takes
the largest max_{n >= 100} d(w_n, gamma)/log n over all pilot trials,
rounded up to the next 0.25.  Run with --write to store it in
configs/tracking.json.
"""
from __future__ import annotations

import argparse
import json
import math
from pathlib import Path

import numpy as np

from horowalk.estimators import tracking_experiment
from horowalk.walks import StepDistribution

ROOT = Path(__file__).resolve().parents[1]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=7001)
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--write", action="store_true")
    args = ap.parse_args()

    ex = tracking_experiment(StepDistribution.uniform(), args.n, args.trials, args.seed)
    r = ex.max_log_ratios()
    bound = math.ceil(r.max() * 4) / 4
    print(f"pilot seed {args.seed}: {len(r)} resolved, {ex.unresolved} unresolved")
    print("max d/log n percentiles 50/95/99/max: "
          + " ".join(f"{q:.3f}" for q in np.percentile(r, [50, 95, 99, 100])))
    print(f"committed bound: {bound}")
    if args.write:
        path = ROOT / "configs" / "tracking.json"
        cfg = json.loads(path.read_text())
        cfg["params"]["log_bound"] = bound
        cfg["params"]["pilot"] = {"seed": args.seed, "trials": args.trials,
                                  "p95": round(float(np.percentile(r, 95)), 4)}
        path.write_text(json.dumps(cfg, indent=2) + "\n")


if __name__ == "__main__":
    main()
