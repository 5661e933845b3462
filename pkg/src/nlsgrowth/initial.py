"""Initial data generators."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .spectral import GridSpec, SpectralField, sobolev_norm

__all__ = ["InitSpec", "make_initial"]

_KINDS = ("plane_wave", "random_sobolev", "gaussian_bump")


@dataclass(frozen=True)
class InitSpec:
    """Initial datum description.

    ``plane_wave``: ``amplitude * exp(i k0 . x)``.
    ``random_sobolev``: complex Gaussian coefficients scaled by
    ``(1 + |xi|^2)^{-(s/2 + d/4 + 0.01)}``, optionally restricted to
    ``max_j |k_j| <= kmax``, then rescaled so that ``||u||_{H^s} = amplitude``.
    ``gaussian_bump``: ``amplitude * exp(-|x - c|^2 / (2 width^2))`` centered
    in the box.

    ``background`` is a constant added after construction (so the H^s
    normalization refers to the random part only).
    """

    kind: str
    amplitude: float = 1.0
    k0: tuple[int, ...] | None = None
    s: float = 2.0
    seed: int = 0
    width: float = 0.5
    kmax: int | None = None
    background: complex = 0.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}, got {self.kind!r}")
        if not self.amplitude > 0:
            raise ValueError(f"amplitude must be positive, got {self.amplitude}")
        if self.kind == "plane_wave" and self.k0 is None:
            raise ValueError("plane_wave needs k0")
        if self.k0 is not None:
            object.__setattr__(self, "k0", tuple(int(v) for v in self.k0))
        if self.kind == "gaussian_bump" and not self.width > 0:
            raise ValueError("gaussian_bump needs a positive width")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["k0"] = list(self.k0) if self.k0 is not None else None
        b = complex(self.background)
        d["background"] = [b.real, b.imag]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "InitSpec":
        d = dict(d)
        b = d.get("background", 0.0)
        if isinstance(b, (list, tuple)):
            d["background"] = complex(b[0], b[1])
        if d.get("k0") is not None:
            d["k0"] = tuple(d["k0"])
        return cls(**d)


def make_initial(spec: InitSpec, grid: GridSpec) -> SpectralField:
    if spec.kind == "plane_wave":
        if len(spec.k0) != grid.dim:
            raise ValueError(f"k0 {spec.k0} does not match dim={grid.dim}")
        u = SpectralField.plane_wave(grid, spec.k0, spec.amplitude)
    elif spec.kind == "random_sobolev":
        rng = np.random.default_rng(spec.seed)
        c = (rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)) / np.sqrt(2)
        c = c * (1.0 + grid.xi2) ** -(spec.s / 2 + grid.dim / 4 + 0.01)
        keep = np.ones(grid.shape, dtype=bool)
        for m in grid.nyquist_masks:
            keep &= m
        if spec.kmax is not None:
            for k in grid.k_int:
                keep &= np.abs(k) <= spec.kmax
        c = np.where(keep, c, 0)
        u = SpectralField(grid, c)
        u = u * (spec.amplitude / sobolev_norm(u, spec.s))
    else:
        r2 = sum((x - L / 2) ** 2 for x, L in zip(grid.coords(), grid.length))
        samples = spec.amplitude * np.exp(-r2 / (2 * spec.width**2))
        u = SpectralField.from_samples(grid, np.broadcast_to(samples, grid.shape))
    if spec.background:
        c = np.array(u.coeffs)
        c.flat[0] += spec.background
        u = SpectralField(grid, c)
    return u
