"""Convergence, norm-equivalence and residual-scaling studies."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import calculus as sym
from .energies import EnergySpec, fit_order, residual_r2k
from .fitting import r_squared
from .initial import InitSpec, make_initial
from .integrator import NLSParams, evolve
from .spectral import (
    GridSpec,
    SpectralField,
    hamiltonian,
    mass,
    sobolev_norm,
)

__all__ = [
    "ProbeResult",
    "norm_equivalence_probe",
    "ConvergenceReport",
    "convergence_study",
    "OracleReport",
    "dt_power_oracle",
    "SubordinationReport",
    "residual_subordination",
    "shell_field",
    "nonlinear_remainder",
    "nonlinear_remainder_expr",
]


def _json_ready(d):
    if isinstance(d, dict):
        return {k: _json_ready(v) for k, v in d.items()}
    if isinstance(d, (list, tuple)):
        return [_json_ready(v) for v in d]
    if isinstance(d, float) and not math.isfinite(d):
        return None if math.isnan(d) else ("inf" if d > 0 else "-inf")
    return d


# -- norm equivalence ----------------------------------------------------------


@dataclass
class ProbeResult:
    """Per-sample ratios ``||d_t^k u - i^k Lap^k u||_{H^s} / ||u||_{H^r}``.

    ``ratios`` use ``r = s + 2k - 1``; ``strong_ratios`` use ``r = s + 2k``.
    """

    n: tuple[int, ...]
    k: int
    s: float
    p: int
    ratios: list[float]
    strong_ratios: list[float]
    skipped: int

    @property
    def max_ratio(self) -> float:
        return max(self.ratios) if self.ratios else math.nan

    @property
    def median_ratio(self) -> float:
        return float(np.median(self.ratios)) if self.ratios else math.nan

    @property
    def max_strong(self) -> float:
        return max(self.strong_ratios) if self.strong_ratios else math.nan

    @property
    def median_strong(self) -> float:
        return float(np.median(self.strong_ratios)) if self.strong_ratios else math.nan

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(
            max_ratio=self.max_ratio,
            median_ratio=self.median_ratio,
            max_strong=self.max_strong,
            median_strong=self.median_strong,
        )
        return _json_ready(d)


def nonlinear_remainder(u: SpectralField, k: int, p: int) -> SpectralField:
    """``d_t^k u - i^k Lap^k u`` through the symbolic substitution rule."""
    return sym.evaluate(nonlinear_remainder_expr(k, p, u.grid.dim), u)


def nonlinear_remainder_expr(k: int, p: int, dim: int) -> sym.SymExpr:
    lin = sym.var(dim)
    for _ in range(k):
        lin = lin.lap()
    return sym.dt_power(k, p, dim) - lin * sym.const(dim, _ipow(k))


def _ipow(k: int) -> sym.QQi:
    return [sym.QQi(1), sym.QQi(0, 1), sym.QQi(-1), sym.QQi(0, -1)][k % 4]


def probe_fields(u: SpectralField, k: int, s: float, p: int) -> tuple[float, float] | None:
    den = sobolev_norm(u, s + 2 * k - 1)
    if den == 0:
        return None
    num = sobolev_norm(nonlinear_remainder(u, k, p), s)
    return num / den, num / sobolev_norm(u, s + 2 * k)


def norm_equivalence_probe(
    grid: GridSpec,
    k: int,
    s: float,
    p: int,
    ensemble_size: int,
    seed: int = 0,
    amplitude: float = 1.0,
) -> ProbeResult:
    """Ratio statistics over ``random_sobolev`` fields normalized in ``H^{s+2k-1}``.

    Member ``i`` uses seed ``seed + i``. Zero fields are skipped.
    """
    if ensemble_size < 1:
        raise ValueError("ensemble_size must be >= 1")
    sym.dt_power(k, p, grid.dim)
    ratios, strong, skipped = [], [], 0
    for i in range(ensemble_size):
        u = make_initial(InitSpec("random_sobolev", amplitude=amplitude, s=s + 2 * k - 1, seed=seed + i), grid)
        r = probe_fields(u, k, s, p)
        if r is None:
            skipped += 1
            continue
        ratios.append(float(r[0]))
        strong.append(float(r[1]))
    return ProbeResult(grid.n, k, s, p, ratios, strong, skipped)


# -- self-convergence of conserved quantities ----------------------------------


@dataclass
class ConvergenceReport:
    quantity: str
    integrator: str
    dts: list[float]
    drifts: list[float]
    slope: float
    misfit: float
    exact: bool

    @property
    def status(self) -> str:
        return "exact" if self.exact else f"slope {self.slope:.3f}"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["status"] = self.status
        return _json_ready(d)


def convergence_study(
    u0: SpectralField,
    params: NLSParams,
    dts,
    quantity: str = "hamiltonian",
    exact_tol: float = 1e-12,
    samples: int = 10,
) -> ConvergenceReport:
    """Relative drift of ``quantity`` for each ``dt``.

    The drift is the largest relative deviation from the initial value over
    about ``samples`` equally spaced times in ``(0, t_end]``. The slope is a least-squares fit of log drift against log dt. When every
    drift is below ``exact_tol`` the quantity is conserved to roundoff and the
    slope is reported as NaN with ``exact=True``.
    """
    dts = sorted((float(d) for d in dts), reverse=True)
    if len(dts) < 3:
        raise ValueError("convergence_study needs at least 3 refinement levels")
    fn = {"hamiltonian": lambda u: hamiltonian(u, params.p), "mass": mass}.get(quantity)
    if fn is None:
        raise ValueError(f"quantity must be 'hamiltonian' or 'mass', got {quantity!r}")
    q0 = fn(u0)
    drifts = []
    for dt in dts:
        prm = NLSParams(**{**params.to_dict(), "dt": dt})
        n = prm.n_steps
        traj = evolve(u0, prm, cadence=max(n // samples, 1))
        drifts.append(max(abs(fn(st) - q0) for st in traj.states[1:]) / max(abs(q0), 1e-300))
    if max(drifts) <= exact_tol:
        return ConvergenceReport(quantity, params.integrator, dts, drifts, math.nan, math.nan, True)
    slope, misfit = fit_order(dts, [max(d, 1e-300) for d in drifts])
    return ConvergenceReport(quantity, params.integrator, dts, drifts, slope, misfit, False)


# -- finite-difference oracle for d_t^k u --------------------------------------


@dataclass
class OracleReport:
    k: int
    p: int
    widths: list[float]
    rel_errors: list[float]
    order: float
    misfit: float

    def to_dict(self) -> dict:
        return _json_ready(asdict(self))


_FD_STENCILS = {
    1: (np.array([-1, 0, 1]), np.array([-0.5, 0.0, 0.5])),
    2: (np.array([-1, 0, 1]), np.array([1.0, -2.0, 1.0])),
    3: (np.array([-2, -1, 0, 1, 2]), np.array([-0.5, 1.0, 0.0, -1.0, 0.5])),
}


def dt_power_oracle(u0: SpectralField, k: int, p: int, widths, substeps: int = 4) -> OracleReport:
    """Compare ``dt_power(k)`` at ``t = T`` with central differences in time.

    The trajectory is integrated with RK4 (step ``h / substeps``) around
    ``T = max(width) * 2``; the error is the relative L^2 distance of the
    difference quotient from the symbolic value at the same state.
    """
    if k not in _FD_STENCILS:
        raise ValueError(f"finite-difference oracle supports k in {sorted(_FD_STENCILS)}")
    widths = sorted((float(h) for h in widths), reverse=True)
    if len(widths) < 2:
        raise ValueError("need at least two widths")
    offsets, weights = _FD_STENCILS[k]
    dim = u0.grid.dim
    expr = sym.dt_power(k, p, dim)
    errs = []
    reach = int(np.max(np.abs(offsets)))
    t_c = reach * widths[0]
    for h in widths:
        dt = h / substeps
        m = int(round(t_c / dt))
        prm = NLSParams(dim, p, dt, (m + reach * substeps) * dt, integrator="rk4", allow_any_regime=True)
        traj = evolve(u0, prm, cadence=substeps)
        states = {int(round(t / h)): st for t, st in traj}
        ic = int(round(t_c / h))
        fd = sum(w * states[ic + o].coeffs for o, w in zip(offsets, weights) if w != 0) / h**k
        exact = sym.evaluate(expr, states[ic]).coeffs
        errs.append(float(np.linalg.norm(fd - exact) / np.linalg.norm(exact)))
    order, misfit = fit_order(widths, errs)
    return OracleReport(k, p, widths, errs, order, misfit)


# -- residual subordination ----------------------------------------------------


def shell_field(grid: GridSpec, K: float, seed: int = 0, h1: float = 1.0) -> SpectralField:
    """Random-phase field on the frequency shell ``K <= |k| < K + 1``, ``||u||_{H^1} = h1``."""
    rng = np.random.default_rng(seed)
    kn = np.sqrt(sum(k.astype(float) ** 2 for k in grid.k_int))
    shell = (kn >= K) & (kn < K + 1)
    if not shell.any():
        raise ValueError(f"no lattice points with {K} <= |k| < {K + 1}")
    c = np.where(shell, np.exp(2j * np.pi * rng.random(grid.shape)), 0)
    u = SpectralField(grid, c)
    return u * (h1 / sobolev_norm(u, 1))


@dataclass
class SubordinationReport:
    k: int
    p: int
    shells: list[float]
    h2k_norms: list[float]
    residuals: list[float]
    slope: float
    r_squared: float
    bound_exponent: float

    def to_dict(self) -> dict:
        return _json_ready(asdict(self))


def residual_subordination(
    grid: GridSpec,
    shells,
    k: int = 1,
    p: int = 3,
    seed: int = 0,
    h1: float = 1.0,
) -> SubordinationReport:
    """Log-log slope of ``|R_{2k}(u)|`` against ``||u||_{H^{2k}}`` at fixed ``||u||_{H^1}``.

    The ensemble is one random-phase shell field per entry of ``shells``;
    moving the shell outward raises ``||u||_{H^{2k}}`` while the H^1 norm stays
    fixed. ``bound_exponent`` is ``(4k - 4) / (2k - 1)``.
    """
    spec = EnergySpec("even", k, p)
    hs, rs = [], []
    for i, K in enumerate(shells):
        u = shell_field(grid, K, seed + i, h1)
        hs.append(sobolev_norm(u, 2 * k))
        rs.append(abs(residual_r2k(u, spec)))
    x, y = np.log(hs), np.log(rs)
    slope, icpt = np.polyfit(x, y, 1)
    return SubordinationReport(
        k, p, [float(K) for K in shells], hs, rs, float(slope), r_squared(y, slope * x + icpt), (4 * k - 4) / (2 * k - 1)
    )
