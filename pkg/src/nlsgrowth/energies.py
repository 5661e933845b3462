"""Modified energies and checks of their exact time-derivative identities.

Energies for odd integer ``p`` are assembled symbolically and evaluated on the
grid; their time derivatives come from :func:`calculus.dt_of_functional`.
The sub-cubic energy ``F_2`` (non-integer ``2 < p < 3``) is evaluated directly
with ``|u|`` regularized as ``sqrt(|u|^2 + eps^2)`` wherever it divides.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import calculus as sym
from .integrator import Trajectory, nls_rhs
from .spectral import SpectralField, gradient, to_physical

__all__ = [
    "EnergySpec",
    "IdentityReport",
    "even_integrands",
    "odd_integrand",
    "energy_even",
    "energy_odd",
    "energy_f2",
    "energy",
    "residual_r2k",
    "dtk_norm2",
    "f2_rhs",
    "even_identity_rhs",
    "odd_identity_rhs",
    "identity_rhs",
    "identity_check",
]

_IMAG_TOL = 1e-10


@dataclass(frozen=True)
class EnergySpec:
    kind: str
    k: int = 1
    p: float = 3
    eps_reg: float = 1e-8

    def __post_init__(self):
        if self.kind not in ("even", "odd", "f2"):
            raise ValueError(f"kind must be 'even', 'odd' or 'f2', got {self.kind!r}")
        if self.kind in ("even", "odd"):
            p = self.p
            if not (float(p).is_integer() and int(p) % 2 == 1 and p >= 3):
                raise ValueError(f"{self.kind} energies need an odd integer p >= 3, got {p}")
            object.__setattr__(self, "p", int(p))
            if self.k < 1:
                raise ValueError("k must be >= 1")
            if self.k > sym.DEFAULT_MAX_K:
                raise sym.CapExceededError(f"k={self.k} exceeds the symbolic cap {sym.DEFAULT_MAX_K}")
            if self.kind == "odd" and self.k != 1:
                raise NotImplementedError("odd energies are supported for k = 1 only")
        elif not 2 < self.p < 3:
            raise ValueError(f"f2 needs 2 < p < 3, got {self.p}")
        if self.eps_reg < 0:
            raise ValueError("eps_reg must be non-negative")

    @property
    def name(self) -> str:
        if self.kind == "f2":
            return "energy_f2"
        return f"energy_{self.kind}_k{self.k}"

    def to_dict(self) -> dict:
        return asdict(self)


# -- symbolic integrands -------------------------------------------------------


@dataclass(frozen=True)
class EvenIntegrands:
    """Pieces of ``E_2k``: ``|d_t^k u|^2 + residual``."""

    dtk: sym.SymExpr
    gradient_part: sym.SymExpr
    nonlinear: sym.SymExpr
    residual: sym.SymExpr
    full: sym.SymExpr


@lru_cache(maxsize=None)
def even_integrands(k: int, p: int, dim: int) -> EvenIntegrands:
    n = (p - 1) // 2
    u = sym.var(dim)
    a = u * sym.var(dim, conj=True)
    dtk = sym.dt_power(k, p, dim)
    grads = [a.d(j) for j in range(dim)]
    nl = sym.nonlinearity_expr(p, dim)
    for _ in range(k - 1):
        grads = [sym.time_derivative(g, p) for g in grads]
        nl = sym.time_derivative(nl, p)
    gsq = sym.SymExpr(dim)
    for g in grads:
        gsq = gsq + g * g.conj()
    gradient_part = gsq * a ** (n - 1)
    nonlinear = nl * nl.conj()
    residual = gradient_part * Fraction(-(p - 1), 4) - nonlinear
    return EvenIntegrands(dtk, gradient_part, nl, residual, dtk * dtk.conj() + residual)


@lru_cache(maxsize=None)
def odd_integrand(p: int, dim: int) -> sym.SymExpr:
    """Integrand of ``E_3``."""
    n = (p - 1) // 2
    u = sym.var(dim)
    a = u * sym.var(dim, conj=True)
    d1 = sym.dt_power(1, p, dim)
    out = sym.SymExpr(dim)
    for j in range(dim):
        g = d1.d(j)
        out = out + g * g.conj() * Fraction(1, 2)
    out = out + a**n * d1 * d1.conj() * Fraction(1, 2)
    da = sym.time_derivative(a, p)
    out = out + a ** (n - 1) * da * da * Fraction(p - 1, 8)
    return out


@lru_cache(maxsize=None)
def even_identity_expr(k: int, p: int, dim: int) -> sym.SymExpr:
    return sym.dt_of_functional(even_integrands(k, p, dim).full, p, max_order=2 * k + 4)


@lru_cache(maxsize=None)
def odd_identity_expr(p: int, dim: int) -> sym.SymExpr:
    return sym.dt_of_functional(odd_integrand(p, dim), p)


def _real(z: complex, what: str) -> float:
    if abs(z.imag) > _IMAG_TOL * (1 + abs(z.real)):
        raise ArithmeticError(f"{what} has imaginary part {z.imag:.3e} (real part {z.real:.6e})")
    return float(z.real)


# -- energies ------------------------------------------------------------------


def dtk_norm2(u: SpectralField, k: int, p: int) -> float:
    """``||d_t^k u||^2`` with ``d_t^k u`` realized from the symbolic expansion."""
    f = sym.evaluate(sym.dt_power(k, p, u.grid.dim), u)
    return float(np.sum(f.coeffs.real**2 + f.coeffs.imag**2))


def residual_r2k(u: SpectralField, spec: EnergySpec) -> float:
    """``E_2k - ||d_t^k u||^2``: the two lower-order correction integrals."""
    if spec.kind != "even":
        raise ValueError("residual_r2k needs an even EnergySpec")
    parts = even_integrands(spec.k, spec.p, u.grid.dim)
    grad_part = _real(sym.integrate(parts.gradient_part, u), "gradient correction")
    nl = sym.evaluate(parts.nonlinear, u)
    nl2 = float(np.sum(nl.coeffs.real**2 + nl.coeffs.imag**2))
    return -(spec.p - 1) / 4 * grad_part - nl2


def energy_even(u: SpectralField, spec: EnergySpec) -> float:
    if spec.kind != "even":
        raise ValueError("energy_even needs an even EnergySpec")
    return dtk_norm2(u, spec.k, spec.p) + residual_r2k(u, spec)


def energy_odd(u: SpectralField, spec: EnergySpec) -> float:
    if spec.kind != "odd":
        raise ValueError("energy_odd needs an odd EnergySpec")
    return _real(sym.integrate(odd_integrand(spec.p, u.grid.dim), u), "E_3")


def _f2_pieces(u: SpectralField, p: float, eps: float):
    x = to_physical(u)
    ut = to_physical(nls_rhs(u, p))
    a2 = x.real**2 + x.imag**2
    a = np.sqrt(a2)
    ae = np.sqrt(a2 + eps**2)
    grads = [to_physical(g) for g in gradient(u)]
    grad_abs2 = sum((np.real(np.conj(x) * g) / ae) ** 2 for g in grads)
    grad_u2 = sum(g.real**2 + g.imag**2 for g in grads)
    dt_abs = np.real(np.conj(x) * ut) / ae
    return x, ut, a, grad_abs2, grad_u2, dt_abs


def energy_f2(u: SpectralField, spec: EnergySpec) -> float:
    """``int |u_t|^2 - (p-1) int |u|^{p-1} |grad|u||^2 - (p-1)/p int |u|^{2p}``."""
    if spec.kind != "f2":
        raise ValueError("energy_f2 needs an f2 EnergySpec")
    p = spec.p
    _, ut, a, grad_abs2, _, _ = _f2_pieces(u, p, spec.eps_reg)
    return float(
        np.mean(ut.real**2 + ut.imag**2)
        - (p - 1) * np.mean(a ** (p - 1) * grad_abs2)
        - (p - 1) / p * np.mean(a ** (2 * p))
    )


def f2_rhs(u: SpectralField, spec: EnergySpec) -> float:
    """Right-hand side of the ``F_2`` identity."""
    if spec.kind != "f2":
        raise ValueError("f2_rhs needs an f2 EnergySpec")
    p = spec.p
    _, _, a, grad_abs2, grad_u2, dt_abs = _f2_pieces(u, p, spec.eps_reg)
    w = a ** (p - 2) * dt_abs
    return float((p - 1) * (p - 3) * np.mean(w * grad_abs2) + 2 * (p - 1) * np.mean(w * grad_u2))


def even_identity_rhs(u: SpectralField, spec: EnergySpec) -> float:
    if spec.kind != "even":
        raise ValueError("even_identity_rhs needs an even EnergySpec")
    if spec.k > 2:
        raise sym.CapExceededError("even identities are supported for k <= 2")
    return float(sym.integrate(even_identity_expr(spec.k, spec.p, u.grid.dim), u).real)


def odd_identity_rhs(u: SpectralField, spec: EnergySpec) -> float:
    if spec.kind != "odd":
        raise ValueError("odd_identity_rhs needs an odd EnergySpec")
    return float(sym.integrate(odd_identity_expr(spec.p, u.grid.dim), u).real)


def energy(u: SpectralField, spec: EnergySpec) -> float:
    return {"even": energy_even, "odd": energy_odd, "f2": energy_f2}[spec.kind](u, spec)


def identity_rhs(u: SpectralField, spec: EnergySpec) -> float:
    return {"even": even_identity_rhs, "odd": odd_identity_rhs, "f2": f2_rhs}[spec.kind](u, spec)


# -- identity check ------------------------------------------------------------


@dataclass
class IdentityReport:
    spec: dict
    times: list[float]
    widths: list[float]
    lhs: list[list[float]]
    rhs: list[float]
    residuals: list[list[float]]
    max_residual: list[float]
    scale: float
    floor: float
    order: float
    order_fit_residual: float
    order_widths: list[float] = field(default_factory=list)

    @property
    def at_floor(self) -> bool:
        return math.isnan(self.order)

    def to_json(self, **kw) -> str:
        d = asdict(self)
        d["at_floor"] = self.at_floor
        return json.dumps(d, allow_nan=True, **kw)


def fit_order(widths, residuals) -> tuple[float, float]:
    """Least-squares slope of log(residual) against log(width) and its RMS misfit."""
    x = np.log(np.asarray(widths, dtype=float))
    y = np.log(np.asarray(residuals, dtype=float))
    slope, icpt = np.polyfit(x, y, 1)
    misfit = float(np.sqrt(np.mean((y - (slope * x + icpt)) ** 2)))
    return float(slope), misfit


def identity_check(
    traj: Trajectory,
    spec: EnergySpec,
    widths,
    max_centers: int = 5,
    floor_factor: float = 10.0,
) -> IdentityReport:
    """Compare central differences of an energy along ``traj`` with its identity.

    Each width must be a multiple of the (uniform) sample spacing.  Residuals
    are evaluated at up to ``max_centers`` sample times valid for every width.
    The integrator floor is estimated from the Richardson-extrapolated
    difference quotient of the two smallest widths; the order is fitted over
    widths whose residual exceeds ``floor_factor`` times that floor (NaN when
    fewer than two qualify).
    """
    times = np.asarray(traj.times, dtype=float)
    if len(times) < 3:
        raise ValueError("insufficient samples: need at least 3 trajectory states")
    steps = np.diff(times)
    tau = float(steps.mean())
    if np.max(np.abs(steps - tau)) > 1e-9 * max(1.0, tau):
        raise ValueError("trajectory samples must be uniformly spaced")
    widths = sorted((float(h) for h in widths), reverse=True)
    ms = []
    for h in widths:
        m = int(round(h / tau))
        if m < 1 or abs(m * tau - h) > 1e-6 * h:
            raise ValueError(f"width {h} is not a multiple of the sample spacing {tau}")
        ms.append(m)
    mmax = max(ms)
    valid = np.arange(mmax, len(times) - mmax)
    if len(valid) == 0:
        raise ValueError("insufficient samples for the largest width")
    if len(valid) > max_centers:
        valid = valid[np.round(np.linspace(0, len(valid) - 1, max_centers)).astype(int)]
    centers = [int(c) for c in valid]

    e_cache: dict[int, float] = {}

    def e_at(i):
        if i not in e_cache:
            e_cache[i] = energy(traj.states[i], spec)
        return e_cache[i]

    rhs = [identity_rhs(traj.states[c], spec) for c in centers]
    lhs, res = [], []
    for h, m in zip(widths, ms):
        row = [(e_at(c + m) - e_at(c - m)) / (2 * h) for c in centers]
        lhs.append(row)
        res.append([l - r for l, r in zip(row, rhs)])
    max_res = [float(np.max(np.abs(r))) for r in res]
    scale = float(max(np.max(np.abs(rhs)), max(abs(v) for v in e_cache.values()) * 1e-3, 1e-300))

    floor = 1e-13 * scale
    if len(widths) >= 2:
        hb, hs = widths[-2], widths[-1]
        r2 = (hb / hs) ** 2
        extrap = [(r2 * ls - lb) / (r2 - 1) for lb, ls in zip(lhs[-2], lhs[-1])]
        floor = max(floor, float(np.max(np.abs(np.subtract(extrap, rhs)))))
    use = [i for i, r in enumerate(max_res) if r > floor_factor * floor]
    if len(use) >= 2:
        order, misfit = fit_order([widths[i] for i in use], [max_res[i] for i in use])
    else:
        order, misfit = float("nan"), float("nan")
    return IdentityReport(
        spec=spec.to_dict(),
        times=[float(times[c]) for c in centers],
        widths=widths,
        lhs=lhs,
        rhs=rhs,
        residuals=res,
        max_residual=max_res,
        scale=scale,
        floor=floor,
        order=order,
        order_fit_residual=misfit,
        order_widths=[widths[i] for i in use],
    )
