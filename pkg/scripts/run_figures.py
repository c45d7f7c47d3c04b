"""Run the bundled fixed-matrix and varying-matrix experiments and print a comparison.

usage: python3 scripts/run_figures.py [--out DIR] [--realizations N] [--workers K]
"""
import argparse
import os

from recsparse.cli import load_config
from recsparse.harness import export, run_experiment, write_svg


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="results")
    ap.add_argument("--realizations", type=int)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    summaries = {}
    for name in ("fig5", "fig6"):
        cfg, _ = load_config(name)
        if args.realizations:
            cfg.realizations = args.realizations
        cfg.workers = args.workers
        series = run_experiment(cfg)
        out = os.path.join(args.out, name)
        os.makedirs(out, exist_ok=True)
        export(series, os.path.join(out, "metrics.csv"), "csv")
        export(series, os.path.join(out, "metrics.json"), "json")
        write_svg(series, os.path.join(out, "metrics.svg"))
        summaries[name] = series.summary()
    print(f"{'algorithm':10s} {'fixed A':>10s} {'varying A':>10s}   (steady-state NMSE)")
    for alg in summaries["fig5"]:
        print(f"{alg:10s} {summaries['fig5'][alg]['nmse']:10.5f} {summaries['fig6'][alg]['nmse']:10.5f}")


if __name__ == "__main__":
    main()
