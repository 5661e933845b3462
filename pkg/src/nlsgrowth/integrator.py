"""Time stepping for the defocusing NLS ``i u_t + Lap u = |u|^{p-1} u``.

Two fixed-step integrators are provided: Strang splitting (linear half step,
exact nonlinear phase rotation, linear half step) and a fourth-order
integrating-factor Runge-Kutta scheme used as a reference.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable

import numpy as np

from .spectral import GridSpec, SpectralField, Transform

__all__ = [
    "NLSParams",
    "Trajectory",
    "BlowUpError",
    "nls_rhs",
    "step_strang",
    "step_rk4",
    "evolve",
    "Stepper",
    "regime_of",
]


def regime_of(dim: int, p: float) -> str | None:
    """Name of the supported (dim, p) regime, or None."""
    if dim == 2 and float(p).is_integer() and int(p) % 2 == 1 and p >= 3:
        return "2d-odd"
    if dim == 3 and p == 3:
        return "3d-cubic"
    if dim == 3 and 2 < p < 3:
        return "3d-subcubic"
    return None


@dataclass(frozen=True)
class NLSParams:
    dim: int
    p: float
    dt: float
    t_end: float
    dealias: bool = False
    integrator: str = "strang"
    allow_any_regime: bool = False
    transform: str = "auto"

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_end >= 0:
            raise ValueError(f"t_end must be non-negative, got {self.t_end}")
        if self.integrator not in ("strang", "rk4"):
            raise ValueError(f"integrator must be 'strang' or 'rk4', got {self.integrator!r}")
        if self.transform not in ("auto", "fft", "dft"):
            raise ValueError(f"transform must be 'auto', 'fft' or 'dft', got {self.transform!r}")
        if not self.p > 1:
            raise ValueError(f"p must exceed 1, got {self.p}")
        if not self.allow_any_regime and regime_of(self.dim, self.p) is None:
            raise ValueError(
                f"(dim, p) = ({self.dim}, {self.p}) is outside the supported regimes "
                "(2, odd p >= 3), (3, 3), (3, 2 < p < 3); set allow_any_regime to override"
            )

    @property
    def n_steps(self) -> int:
        n = int(round(self.t_end / self.dt))
        if abs(n * self.dt - self.t_end) > 1e-9 * max(1.0, self.t_end):
            raise ValueError(f"t_end={self.t_end} is not a multiple of dt={self.dt}")
        return n

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Trajectory:
    times: list[float] = field(default_factory=list)
    states: list[SpectralField] = field(default_factory=list)

    def append(self, t: float, u: SpectralField):
        if self.times and not t > self.times[-1]:
            raise ValueError("trajectory times must increase")
        if self.states and u.grid != self.states[0].grid:
            raise ValueError("trajectory states must share one grid")
        self.times.append(float(t))
        self.states.append(u)

    def __len__(self):
        return len(self.times)

    def __iter__(self):
        return iter(zip(self.times, self.states))


class BlowUpError(RuntimeError):
    """A non-finite value appeared during time stepping."""

    def __init__(self, message: str, t: float, step: int, last_finite: SpectralField | None):
        super().__init__(message)
        self.t = t
        self.step = step
        self.last_finite = last_finite


def _power_nl(x: np.ndarray, p: float) -> np.ndarray:
    """``|x|^{p-1}`` computed as ``(|x|^2)^{(p-1)/2}``."""
    a2 = x.real**2 + x.imag**2
    if float(p) == 3.0:
        return a2
    if float(p).is_integer() and int(p) % 2 == 1:
        return a2 ** ((int(p) - 1) // 2)
    return a2 ** ((p - 1) / 2)


def nls_rhs(u: SpectralField, p: float | NLSParams) -> SpectralField:
    """``du/dt = i (Lap u - |u|^{p-1} u)``."""
    if isinstance(p, NLSParams):
        p = p.p
    g = u.grid
    x = np.fft.ifftn(u.coeffs) * g.size
    nl = np.fft.fftn(_power_nl(x, p) * x) / g.size
    return SpectralField(g, 1j * (-g.xi2 * u.coeffs - nl))


class Stepper:
    """Precomputed propagators for repeated stepping on raw coefficient arrays.

    ``advance`` fuses the trailing half linear step of one Strang step with
    the leading half step of the next, so ``advance(c, n)`` applies one full
    linear propagator per step. This is the same map as ``n`` calls to
    ``step`` but with half the rounding in the linear part.
    """

    def __init__(
        self,
        grid: GridSpec,
        p: float,
        dt: float,
        method: str = "strang",
        dealias: bool = False,
        transform: str = "auto",
    ):
        if method not in ("strang", "rk4"):
            raise ValueError(f"unknown integrator {method!r}")
        self.grid = grid
        self.p = p
        self.dt = dt
        self.method = method
        self.mask = grid.dealias_mask if dealias else None
        self.tr = Transform(grid, transform)
        self.half = np.exp(-1j * grid.xi2 * (dt / 2))
        self.full = np.exp(-1j * grid.xi2 * dt)

    def _nl(self, c: np.ndarray) -> np.ndarray:
        x = self.tr.backward(c)
        return -1j * self.tr.forward(_power_nl(x, self.p) * x)

    def _phase(self, c: np.ndarray) -> np.ndarray:
        x = self.tr.backward(c)
        c = self.tr.forward(x * np.exp(-1j * self.dt * _power_nl(x, self.p)))
        if self.mask is not None:
            c = np.where(self.mask, c, 0)
        return c

    def _rk4(self, c: np.ndarray) -> np.ndarray:
        dt, E2, E = self.dt, self.half, self.full
        k1 = self._nl(c)
        k2 = self._nl(E2 * (c + 0.5 * dt * k1))
        k3 = self._nl(E2 * c + 0.5 * dt * k2)
        k4 = self._nl(E * c + dt * E2 * k3)
        c = E * c + (dt / 6) * (E * k1 + 2 * E2 * (k2 + k3) + k4)
        if self.mask is not None:
            c = np.where(self.mask, c, 0)
        return c

    def step(self, c: np.ndarray) -> np.ndarray:
        return self.advance(c, 1)

    def advance(self, c: np.ndarray, n: int) -> np.ndarray:
        if n <= 0:
            return c
        # overflow shows up as inf/nan, which callers check for
        with np.errstate(over="ignore", invalid="ignore"):
            return self._advance(c, n)

    def _advance(self, c: np.ndarray, n: int) -> np.ndarray:
        if self.method == "rk4":
            for _ in range(n):
                c = self._rk4(c)
            return c
        c = self.half * c
        for i in range(n):
            c = self._phase(c)
            c = (self.full if i < n - 1 else self.half) * c
        return c


def step_strang(u: SpectralField, dt: float, params: NLSParams | float) -> SpectralField:
    p = params.p if isinstance(params, NLSParams) else params
    dealias = params.dealias if isinstance(params, NLSParams) else False
    transform = params.transform if isinstance(params, NLSParams) else "auto"
    return SpectralField(u.grid, Stepper(u.grid, p, dt, "strang", dealias, transform).step(u.coeffs))


def step_rk4(u: SpectralField, dt: float, params: NLSParams | float) -> SpectralField:
    p = params.p if isinstance(params, NLSParams) else params
    dealias = params.dealias if isinstance(params, NLSParams) else False
    transform = params.transform if isinstance(params, NLSParams) else "auto"
    return SpectralField(u.grid, Stepper(u.grid, p, dt, "rk4", dealias, transform).step(u.coeffs))


Observer = Callable[[float, SpectralField], None]


def evolve(
    u0: SpectralField,
    params: NLSParams,
    observers: Iterable[Observer] = (),
    cadence: int = 1,
    store: bool = True,
    start_step: int = 0,
) -> Trajectory:
    """Step ``u0`` to ``params.t_end``.

    Observers are called with ``(t, u)`` at ``t = step * dt`` for every step
    that is a multiple of ``cadence`` (including the initial state), and the
    same states are stored in the returned trajectory when ``store`` is set.
    The final state is always emitted.
    ``start_step`` lets a resumed run keep its original time axis.
    """
    if u0.grid.dim != params.dim:
        raise ValueError(f"grid dimension {u0.grid.dim} does not match params.dim={params.dim}")
    if cadence < 1:
        raise ValueError("cadence must be >= 1")
    observers = list(observers)
    stepper = Stepper(u0.grid, params.p, params.dt, params.integrator, params.dealias, params.transform)
    traj = Trajectory()
    n_total = params.n_steps

    def emit(step: int, c: np.ndarray):
        t = step * params.dt
        u = SpectralField(u0.grid, c)
        if store:
            traj.append(t, u)
        for obs in observers:
            obs(t, u)

    c = np.array(u0.coeffs)
    if not np.all(np.isfinite(c)):
        raise BlowUpError("initial datum is not finite", start_step * params.dt, start_step, None)
    emit(start_step, c)
    last_good = c
    step = start_step
    while step < n_total:
        nxt = min((step // cadence + 1) * cadence, n_total)
        c = stepper.advance(c, nxt - step)
        step = nxt
        if not np.all(np.isfinite(c)):
            raise BlowUpError(
                f"non-finite state at t={step * params.dt:.6g}",
                step * params.dt,
                step,
                SpectralField(u0.grid, last_good),
            )
        last_good = c
        emit(step, c)
    return traj
