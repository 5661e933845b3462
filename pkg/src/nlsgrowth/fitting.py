"""Growth-exponent fits of norm time series against regime envelopes."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .integrator import regime_of

__all__ = ["GrowthFit", "fit_growth", "envelope_for", "ENVELOPE_MARGIN", "MIN_SAMPLES"]

ENVELOPE_MARGIN = 0.5
MIN_SAMPLES = 10


@dataclass(frozen=True)
class GrowthFit:
    """Result of a least-squares growth fit.

    ``envelope_exponent`` is the upper bound for the run's regime (``inf``
    when the bound has no explicit constant, ``nan`` when no regime applies);
    ``within_envelope`` compares the fitted value with it plus ``margin``.
    ``reference_exponent`` carries the generic-manifold value for 2d runs.
    """

    model: str
    exponent_or_rate: float
    prefactor: float
    fit_window: tuple[float, float]
    r_squared: float
    n_samples: int
    envelope_exponent: float
    within_envelope: bool
    margin: float = ENVELOPE_MARGIN
    reference_exponent: float = math.nan
    regime: str | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["fit_window"] = list(self.fit_window)
        return d


def envelope_for(dim: int | None, p: float | None, m: float) -> tuple[str | None, str, float, float]:
    """(regime, model, envelope, reference) for an H^m growth fit."""
    regime = regime_of(dim, p) if dim is not None and p is not None else None
    if regime == "2d-odd":
        return regime, "polynomial", m - 1.0, 2.0 * (m - 1.0)
    if regime == "3d-cubic":
        return regime, "exponential", math.inf, math.nan
    if regime == "3d-subcubic":
        env = 4.0 / (3.0 - p) if m == 2 else math.nan
        return regime, "polynomial", env, math.nan
    return regime, "polynomial", math.nan, math.nan


_FLAT_TOL = 1e-12


def r_squared(y: np.ndarray, yhat: np.ndarray) -> float:
    """Coefficient of determination; 1 for data constant to within ``_FLAT_TOL``."""
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum((y - yhat) ** 2))
    if ss_tot <= len(y) * _FLAT_TOL**2 * max(1.0, float(np.max(np.abs(y)))) ** 2:
        return 1.0
    return float(min(1.0, max(0.0, 1.0 - ss_res / ss_tot)))


def fit_growth(
    times,
    values,
    model: str | None = None,
    window: tuple[float | None, float | None] = (1.0, None),
    *,
    dim: int | None = None,
    p: float | None = None,
    m: float = 2.0,
    envelope: float | None = None,
    margin: float = ENVELOPE_MARGIN,
) -> GrowthFit:
    """Fit ``y ~ C t^a`` (polynomial) or ``y ~ C e^{a t}`` (exponential).

    Samples with ``window[0] <= t <= window[1]`` are used; ``None`` leaves a
    side open. ``model=None`` picks the regime's natural model. An explicit
    ``envelope`` overrides the regime table.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise ValueError("times and values must be 1-d sequences of equal length")
    regime, natural, env, ref = envelope_for(dim, p, m)
    model = model or natural
    if model not in ("polynomial", "exponential"):
        raise ValueError(f"model must be 'polynomial' or 'exponential', got {model!r}")
    if envelope is not None:
        env = float(envelope)
    lo = -math.inf if window[0] is None else float(window[0])
    hi = math.inf if window[1] is None else float(window[1])
    sel = (t >= lo) & (t <= hi)
    if model == "polynomial":
        sel &= t > 0
    t, y = t[sel], y[sel]
    if len(t) < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples in window [{lo}, {hi}], got {len(t)}")
    if not np.all(np.isfinite(y)) or np.any(y <= 0):
        raise ValueError("values in the fit window must be finite and positive")
    x = np.log(t) if model == "polynomial" else t
    ly = np.log(y)
    slope, icpt = np.polyfit(x, ly, 1)
    r2 = r_squared(ly, slope * x + icpt)
    slope = float(slope)
    within = bool(math.isnan(env) or slope <= env + margin)
    return GrowthFit(
        model=model,
        exponent_or_rate=slope,
        prefactor=float(np.exp(icpt)),
        fit_window=(float(t.min()), float(t.max())),
        r_squared=r2,
        n_samples=int(len(t)),
        envelope_exponent=float(env),
        within_envelope=within,
        margin=float(margin),
        reference_exponent=float(ref),
        regime=regime,
    )
