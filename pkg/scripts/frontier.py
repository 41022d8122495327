"""Complexity/accuracy frontier of a results.csv for both observers.

A row is on the frontier when no other row is at most as complex and strictly
more accurate.

    python scripts/frontier.py runs/desk/results.csv
"""
import sys

from geneo_lab.experiments import read_results


def frontier(rows, key):
    pts = sorted(rows, key=lambda r: (int(r[key]), -float(r["accuracy"])))
    out, best = [], -1.0
    for r in pts:
        if float(r["accuracy"]) > best:
            out.append(r)
            best = float(r["accuracy"])
    return out


def main():
    rows = read_results(sys.argv[1] if len(sys.argv) > 1 else "runs/desk/results.csv")
    for key in ("c1", "c2"):
        print(f"{key.upper()} frontier")
        for r in frontier(rows, key):
            print(f"  {r['model_id']:<16} {int(r[key]):>7}  {100 * float(r['accuracy']):5.1f}%")


if __name__ == "__main__":
    main()
