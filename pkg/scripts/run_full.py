"""Full-scale reproduction on the whole 60/20/20 split (several CPU hours).

    python scripts/run_full.py --out runs/full
    pytest tests/test_acceptance.py --full-preset      # compares against the reference table
"""
import argparse
import logging
from pathlib import Path

from geneo_lab.experiments import PRESETS, cmd_rescaled, cmd_run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/full")
    ap.add_argument("--data", default=None)
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    cfg = PRESETS["full"]()
    cfg.data_dir, cfg.threads = args.data, args.threads
    res = cmd_run(cfg, Path(args.out))
    cmd_rescaled(cfg, Path(args.out), blackbox=res.blackbox)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
