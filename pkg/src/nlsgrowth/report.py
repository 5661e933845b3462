"""Aggregate a finished run directory into ``report.json`` and SVG plots."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .fitting import ENVELOPE_MARGIN, fit_growth
from .plots import write_line_plot
from .runs import read_manifest, read_series

__all__ = ["build_report", "write_report", "format_report_text"]


def _clean(v):
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return v


def _sobolev_order(name: str) -> float | None:
    if name.startswith("H"):
        try:
            return float(name[1:])
        except ValueError:
            return None
    return None


def build_report(
    run_dir,
    model: str | None = None,
    window: tuple[float | None, float | None] = (1.0, None),
    margin: float = ENVELOPE_MARGIN,
) -> dict:
    """Growth fits for every recorded Sobolev norm plus conservation checks.

    Fits use ``window``; the same fit is repeated on the last half and last
    quarter of the window to show sensitivity to the choice of window.
    """
    run_dir = Path(run_dir)
    manifest = read_manifest(run_dir)
    records = read_series(run_dir)
    if not records:
        raise ValueError(f"{run_dir}: no records in series.ndjson")
    cfg = manifest["config"]
    dim, p = cfg["params"]["dim"], cfg["params"]["p"]
    t = np.array([r.t for r in records])
    names = list(records[0].values)
    rep = {
        "run": str(run_dir),
        "n_records": len(records),
        "t_range": [float(t[0]), float(t[-1])],
        "margin_policy": margin,
        "fits": {},
        "conservation": {},
        "findings": [],
    }
    for name in names:
        m = _sobolev_order(name)
        if m is None:
            continue
        y = np.array([r.values[name] for r in records])
        entry = {}
        try:
            fit = fit_growth(t, y, model, window, dim=dim, p=p, m=m, margin=margin)
            entry["fit"] = fit.to_dict()
            lo = fit.fit_window[0]
            hi = fit.fit_window[1]
            sens = {}
            for label, frac in (("last_half", 0.5), ("last_quarter", 0.25)):
                w0 = hi - frac * (hi - lo)
                try:
                    sens[label] = fit_growth(t, y, fit.model, (w0, hi), dim=dim, p=p, m=m, margin=margin).exponent_or_rate
                except ValueError as exc:
                    sens[label] = str(exc)
            entry["window_sensitivity"] = sens
            if not fit.within_envelope:
                rep["findings"].append(
                    f"envelope-exceeded: {name} {fit.model} exponent {fit.exponent_or_rate:.4g} "
                    f"> envelope {fit.envelope_exponent:.4g} + margin {margin:g}"
                )
        except ValueError as exc:
            entry["error"] = str(exc)
        rep["fits"][name] = entry
    for name in ("mass", "hamiltonian"):
        if name in names:
            y = np.array([r.values[name] for r in records])
            rep["conservation"][name] = {
                "initial": float(y[0]),
                "max_relative_drift": float(np.max(np.abs(y - y[0])) / max(abs(y[0]), 1e-300)),
            }
    if "H1" in names and "mass" in names and "hamiltonian" in names:
        bound = records[0].values["mass"] + records[0].values["hamiltonian"]
        worst = max(r.values["H1"] ** 2 for r in records)
        ok = worst <= bound * (1 + 1e-9)
        rep["conservation"]["h1_bound"] = {"bound": bound, "max_h1_squared": worst, "holds": ok}
        if not ok:
            rep["findings"].append(f"h1-bound-violated: max ||u||_H1^2 = {worst:.6g} > {bound:.6g}")
    return _clean(rep)


def format_report_text(rep: dict) -> str:
    lines = [f"run {rep['run']}: {rep['n_records']} records, t in [{rep['t_range'][0]:g}, {rep['t_range'][1]:g}]"]
    for name, e in rep["fits"].items():
        if "error" in e:
            lines.append(f"  {name}: no fit ({e['error']})")
            continue
        f = e["fit"]
        env = f["envelope_exponent"]
        lines.append(
            f"  {name}: {f['model']} exponent {f['exponent_or_rate']:.6g} (r^2 {f['r_squared']:.4f}, "
            f"window {f['fit_window'][0]:g}..{f['fit_window'][1]:g}, envelope {env}, within {f['within_envelope']})"
        )
    for name, c in rep["conservation"].items():
        if name == "h1_bound":
            lines.append(f"  H1 bound: max ||u||_H1^2 {c['max_h1_squared']:.6g} <= {c['bound']:.6g}: {c['holds']}")
        else:
            lines.append(f"  {name}: max relative drift {c['max_relative_drift']:.3e}")
    for f in rep["findings"]:
        lines.append(f"  finding: {f}")
    return "\n".join(lines)


def write_report(run_dir, plots: bool = True, **kw) -> dict:
    run_dir = Path(run_dir)
    rep = build_report(run_dir, **kw)
    (run_dir / "report.json").write_text(json.dumps(rep, indent=2, sort_keys=True) + "\n")
    if plots:
        records = read_series(run_dir)
        t = [r.t for r in records]
        norms = {n: (t, [r.values[n] for r in records]) for n in records[0].values if _sobolev_order(n) is not None}
        if norms:
            write_line_plot(run_dir / "plots" / "norms.svg", norms, title="Sobolev norms", xlabel="t", ylabel="norm", logy=True)
        cons = {}
        for n in ("mass", "hamiltonian"):
            if n in records[0].values:
                y0 = records[0].values[n]
                cons[n] = (t, [abs(r.values[n] - y0) / max(abs(y0), 1e-300) for r in records])
        if cons:
            write_line_plot(run_dir / "plots" / "drift.svg", cons, title="relative drift", xlabel="t", ylabel="drift", logy=True)
    return rep
