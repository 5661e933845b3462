"""Command-line entry point: ``nlsgrowth {simulate,verify,probe,fit,report}``.

Exit codes: 0 success, 1 invalid input (message names the field or path),
2 runtime failure (I/O, non-finite blow-up; the diagnostic path is printed).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, load_config
from .energies import EnergySpec, identity_check
from .fitting import fit_growth
from .initial import make_initial
from .integrator import BlowUpError, evolve
from .report import format_report_text, write_report
from .runs import RunAborted, RunConfig, read_manifest, read_series, run_experiment
from .spectral import GridSpec
from .studies import norm_equivalence_probe

__all__ = ["main", "build_parser", "RUNS_ENV"]

RUNS_ENV = "NLSGROWTH_RUNS"


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _window(text: str) -> tuple[float | None, float | None]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"window must be 'tmin,tmax' (either may be empty), got {text!r}")
    return tuple(float(p) if p.strip() else None for p in parts)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nlsgrowth", description="Defocusing NLS growth experiments on flat tori.")
    ap.add_argument("--version", action="version", version=f"nlsgrowth {__version__} (numpy {np.__version__})")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a configured simulation")
    s.add_argument("--config", required=True, help="TOML run configuration")
    s.add_argument("--output-dir", help=f"run directory (default: config output_dir, else ${RUNS_ENV}/<config name>)")
    s.add_argument("--t-end", type=float, help="override params.t_end")
    s.add_argument("--dt", type=float, help="override params.dt")
    s.add_argument("--seed", type=int, help="override init.seed")
    s.add_argument("--cadence", type=int, help="override cadence_steps")
    s.add_argument("--ensemble", type=int, default=1, help="number of members with seeds seed, seed+1, ...")
    s.add_argument("--jobs", type=int, default=1, help="worker processes for ensemble members")
    s.add_argument("--no-resume", action="store_true", help="discard an existing partial run")

    v = sub.add_parser("verify", help="check a modified-energy identity along a trajectory")
    v.add_argument("--config", required=True)
    v.add_argument("--energy", choices=("even", "odd", "f2"), required=True)
    v.add_argument("--k", type=int, default=1)
    v.add_argument("--p", type=float, help="override params.p")
    v.add_argument("--widths", type=_floats, required=True, help="comma-separated differencing widths")
    v.add_argument("--eps", type=float, default=1e-8, help="modulus regularization for f2")
    v.add_argument("--integrator", choices=("strang", "rk4"), default="rk4")
    v.add_argument("--output", help="write the IdentityReport JSON here")

    p = sub.add_parser("probe", help="norm-equivalence ratio statistics")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--p", type=int, default=3)
    p.add_argument("--ensemble", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", help="write the result JSON here")

    f = sub.add_parser("fit", help="fit growth of a recorded Sobolev norm")
    f.add_argument("--run", required=True, help="run directory")
    f.add_argument("--model", choices=("polynomial", "exponential"))
    f.add_argument("--norm", default="H2", help="observable name, e.g. H2")
    f.add_argument("--window", type=_window, default=(1.0, None), help="tmin,tmax (default '1,')")

    r = sub.add_parser("report", help="write report.json and plots for a run")
    r.add_argument("--run", required=True)
    r.add_argument("--format", choices=("json", "text"), default="text")
    r.add_argument("--model", choices=("polynomial", "exponential"))
    r.add_argument("--window", type=_window, default=(1.0, None))
    r.add_argument("--no-plots", action="store_true")
    return ap


def _default_out(config_path: str) -> str:
    root = os.environ.get(RUNS_ENV, "runs")
    return str(Path(root) / Path(config_path).stem)


def _load(args, extra: dict | None = None) -> RunConfig:
    import tomli

    ov = {k: v for k, v in (extra or {}).items() if v is not None}
    path = Path(args.config)
    if not path.is_file():
        raise ConfigError(f"config: file not found: {path}")
    raw = tomli.loads(path.read_text())
    if "output_dir" not in raw and "output_dir" not in ov:
        ov["output_dir"] = _default_out(args.config)
    return load_config(path, ov)


def _run_member(cfg_dict: dict, resume: bool) -> tuple[str, int]:
    cfg = RunConfig.from_dict(cfg_dict)
    res = run_experiment(cfg, resume=resume)
    return str(res.path), len(res.records)


def cmd_simulate(args) -> int:
    cfg = _load(
        args,
        {
            "output_dir": args.output_dir,
            "params.t_end": args.t_end,
            "params.dt": args.dt,
            "init.seed": args.seed,
            "cadence_steps": args.cadence,
        },
    )
    if args.ensemble < 1 or args.jobs < 1:
        raise ConfigError("--ensemble and --jobs must be >= 1")
    if args.ensemble == 1:
        res = run_experiment(cfg, resume=not args.no_resume)
        print(f"{res.path}: {len(res.records)} records")
        return 0
    base = cfg.to_dict()
    members = []
    for i in range(args.ensemble):
        d = json.loads(json.dumps(base))
        d["init"]["seed"] = cfg.init.seed + i
        d["output_dir"] = str(Path(cfg.output_dir) / f"member-{i:04d}")
        members.append(d)
    with ProcessPoolExecutor(max_workers=args.jobs) as ex:
        futs = [ex.submit(_run_member, d, not args.no_resume) for d in members]
        for fu in futs:
            path, n = fu.result()
            print(f"{path}: {n} records")
    return 0


def cmd_verify(args) -> int:
    cfg = _load(args, {"params.p": args.p, "params.integrator": args.integrator})
    spec = EnergySpec(args.energy, args.k, cfg.params.p, args.eps)
    dt = cfg.params.dt
    hmin = min(args.widths)
    cad = int(round(hmin / dt))
    if cad < 1 or abs(cad * dt - hmin) > 1e-9 * hmin:
        raise ConfigError(f"widths: {hmin} is not a multiple of params.dt={dt}")
    u0 = make_initial(cfg.init, cfg.grid)
    traj = evolve(u0, cfg.params, cadence=cad)
    rep = identity_check(traj, spec, args.widths)
    print(f"identity check {spec.name} (p={spec.p}) on {cfg.grid.n}, {len(rep.rhs)} centers")
    print(f"{'width':>10} {'max |lhs - rhs|':>16} {'relative':>10}")
    for h, r in zip(rep.widths, rep.max_residual):
        print(f"{h:>10.4g} {r:>16.4e} {r / rep.scale:>10.3e}")
    order = "at floor" if rep.at_floor else f"{rep.order:.3f}"
    print(f"fitted order: {order}  (floor estimate {rep.floor:.3e}, scale {rep.scale:.3e})")
    if args.output:
        Path(args.output).parent.mkdir(parents=True, exist_ok=True)
        Path(args.output).write_text(rep.to_json(indent=2) + "\n")
    return 0


def cmd_probe(args) -> int:
    grid = GridSpec.cube(args.dim, args.n)
    res = norm_equivalence_probe(grid, args.k, args.s, args.p, args.ensemble, args.seed)
    print(f"grid {grid.n}, k={args.k}, s={args.s:g}, p={args.p}, {len(res.ratios)} samples ({res.skipped} skipped)")
    print(f"  ratio over H^{args.s + 2 * args.k - 1:g}: max {res.max_ratio:.6g} median {res.median_ratio:.6g}")
    print(f"  ratio over H^{args.s + 2 * args.k:g}: max {res.max_strong:.6g} median {res.median_strong:.6g}")
    if args.output:
        Path(args.output).parent.mkdir(parents=True, exist_ok=True)
        Path(args.output).write_text(json.dumps(res.to_dict(), indent=2) + "\n")
    return 0


def _need_run(path: str) -> Path:
    p = Path(path)
    if not (p / "manifest.json").is_file():
        raise ConfigError(f"run: no manifest.json in {p}")
    return p


def cmd_fit(args) -> int:
    run = _need_run(args.run)
    m = read_manifest(run)
    recs = read_series(run)
    if not recs or args.norm not in recs[0].values:
        raise ConfigError(f"norm: {args.norm!r} not recorded in {run}")
    prm = m["config"]["params"]
    order = float(args.norm[1:]) if args.norm.startswith("H") else 2.0
    fit = fit_growth(
        [r.t for r in recs], [r.values[args.norm] for r in recs], args.model, args.window, dim=prm["dim"], p=prm["p"], m=order
    )
    print(f"{args.norm} {fit.model} exponent {fit.exponent_or_rate:.6g}")
    print(json.dumps(fit.to_dict(), sort_keys=True))
    return 0


def cmd_report(args) -> int:
    run = _need_run(args.run)
    rep = write_report(run, plots=not args.no_plots, model=args.model, window=args.window)
    if args.format == "json":
        print(json.dumps(rep, indent=2, sort_keys=True))
    else:
        print(format_report_text(rep))
    return 0


_COMMANDS = {"simulate": cmd_simulate, "verify": cmd_verify, "probe": cmd_probe, "fit": cmd_fit, "report": cmd_report}


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors; those are validation failures here
        return 0 if exc.code in (0, None) else 1
    try:
        return _COMMANDS[args.command](args)
    except RunAborted as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(f"diagnostic: {exc.diagnostic}", file=sys.stderr)
        return 2
    except BlowUpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, ValueError, NotImplementedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
