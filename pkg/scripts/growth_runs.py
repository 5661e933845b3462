"""Run the growth configs and write a report for each.

    python3 scripts/growth_runs.py scripts/configs/cubic_2d_growth.toml scripts/configs/subcubic_3d.toml
"""

import argparse

from nlsgrowth.config import load_config
from nlsgrowth.report import format_report_text, write_report
from nlsgrowth.runs import run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("configs", nargs="+")
    ap.add_argument("--root", help="put each run under this directory instead of its output_dir")
    ap.add_argument("--window", default="1,", help="fit window tmin,tmax")
    args = ap.parse_args()
    lo, hi = (float(v) if v else None for v in args.window.split(","))

    for path in args.configs:
        cfg = load_config(path)
        if args.root:
            cfg = cfg.with_output_dir(f"{args.root}/{cfg.output_dir.rstrip('/').split('/')[-1]}")
        res = run_experiment(cfg)
        rep = write_report(res.path, window=(lo, hi))
        print(format_report_text(rep))


if __name__ == "__main__":
    main()
