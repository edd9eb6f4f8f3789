"""Run every experiment config in configs/ and print one summary line each."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from horowalk.config import ConfigError, read_config, write_atomic
from horowalk.experiments import run

ROOT = Path(__file__).resolve().parents[1]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("names", nargs="*", help="config stems to run (default: all)")
    ap.add_argument("--out-dir", default=str(ROOT / "results"))
    args = ap.parse_args()
    paths = sorted((ROOT / "configs").glob("*.json"))
    if args.names:
        paths = [p for p in paths if p.stem in args.names]
    for path in paths:
        try:
            cfg = read_config(path)
        except ConfigError:
            continue  # not an estimator config (e.g. stationarity)
        table, rec = run(cfg)
        out = Path(args.out_dir) / f"{path.stem}.csv"
        write_atomic(out, table.csv())
        write_atomic(out.with_suffix(".json"), rec.to_json())
        print(f"{path.stem:12s} {rec.wall_clock:7.1f}s  {json.dumps(rec.payload, default=str)[:160]}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
