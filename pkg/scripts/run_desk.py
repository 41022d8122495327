"""Desk-scale experiment: black-box CNN, the model table and the 14x14 rescaled rows.

    python scripts/run_desk.py --out runs/desk [--data /path/to/mnist] [--skip-rescaled]
"""
import argparse
import logging
from pathlib import Path

from geneo_lab.experiments import PRESETS, cmd_rescaled, cmd_run, load_config


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=None, help="config JSON (default: the desk preset)")
    ap.add_argument("--out", default="runs/desk")
    ap.add_argument("--data", default=None)
    ap.add_argument("--skip-rescaled", action="store_true")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    cfg = load_config(args.config) if args.config else PRESETS["desk"]()
    if args.data:
        cfg.data_dir = args.data
    out = Path(args.out)
    res = cmd_run(cfg, out)
    print(f"black box test accuracy {100 * res.blackbox.test_accuracy:.2f}%")
    for r in res.rows:
        print(f"{r.model_id:<16} C1 {r.c1:>6} C2 {r.c2:>4}  acc {100 * r.accuracy:5.1f}%  fid {100 * r.fidelity:5.1f}%")
    if not args.skip_rescaled:
        # reuse the trained black box instead of training it again
        res14 = cmd_rescaled(cfg, out, blackbox=res.blackbox)
        for r in res14.rows:
            print(f"14x14 {r.model_id:<10} C1 {r.c1:>6}  acc {100 * r.accuracy:5.1f}%  fid {100 * r.fidelity:5.1f}%")


if __name__ == "__main__":
    main()
