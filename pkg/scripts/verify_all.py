"""Run every randomized verification suite with its default instance count and print one line each.

    python scripts/verify_all.py [--seed 0] [--synthetic]
"""
import argparse
import sys

from geneo_lab.data import load_mnist_dir, mnist_available
from geneo_lab.randomized import DEFAULT_INSTANCES, SUITES, run_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--synthetic", action="store_true", help="synthetic images even when MNIST is present")
    args = ap.parse_args()
    data = None
    if not args.synthetic and mnist_available():
        ds = load_mnist_dir()
        data = (ds.raw[60000:], ds.labels[60000:])
    ok = True
    for name in SUITES:
        kw = {"data": data} if name in ("gradient-check", "invariance") else {}
        res = run_suite(name, DEFAULT_INSTANCES[name], args.seed, **kw)
        print(res.summary())
        for f in res.failures[:3]:
            print("  counterexample:", f)
        ok &= res.passed
    sys.exit(0 if ok else 1)


if __name__ == "__main__":
    main()
