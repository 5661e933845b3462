import json
import math

import numpy as np
import pytest

from nlsgrowth.integrator import NLSParams
from nlsgrowth.spectral import GridSpec, SpectralField, sobolev_norm
from nlsgrowth.studies import (
    convergence_study,
    dt_power_oracle,
    nonlinear_remainder,
    norm_equivalence_probe,
    probe_fields,
    residual_subordination,
    shell_field,
)

from conftest import random_field


@pytest.mark.parametrize("s", [0.0, 1.0, 2.5])
def test_remainder_on_plane_wave(grid2, s):
    A = 0.8
    u = SpectralField.plane_wave(grid2, (1, 2), A)
    num = sobolev_norm(nonlinear_remainder(u, 1, 3), s)
    assert num == pytest.approx(A**3 * 6 ** (s / 2), rel=1e-10)
    r, strong = probe_fields(u, 1, s, 3)
    assert r == pytest.approx(A**2 * 6 ** -0.5, rel=1e-10)
    assert strong == pytest.approx(A**2 / 6, rel=1e-10)


def test_remainder_of_k2_on_plane_wave(grid2):
    # d_t^2 u = -(|xi|^2 + A^2)^2 u while Lap^2 u = |xi|^4 u
    A = 0.5
    u = SpectralField.plane_wave(grid2, (1, 0), A)
    got = nonlinear_remainder(u, 2, 3).coeff((1, 0))
    assert got == pytest.approx(-((1 + A**2) ** 2 - 1) * A, rel=1e-12)


def test_zero_field_is_skipped(grid2):
    assert probe_fields(SpectralField.zeros(grid2), 1, 1.0, 3) is None


def test_probe_statistics():
    res = norm_equivalence_probe(GridSpec.cube(2, 32), 1, 1.0, 3, 6, seed=2)
    assert len(res.ratios) == 6 and res.skipped == 0
    assert res.max_ratio >= res.median_ratio > 0
    assert all(s <= r for s, r in zip(res.strong_ratios, res.ratios))
    d = json.loads(json.dumps(res.to_dict()))
    assert d["max_ratio"] == res.max_ratio
    again = norm_equivalence_probe(GridSpec.cube(2, 32), 1, 1.0, 3, 6, seed=2)
    assert again.ratios == res.ratios
    with pytest.raises(ValueError):
        norm_equivalence_probe(GridSpec.cube(2, 32), 1, 1.0, 3, 0)


def test_convergence_exact_for_plane_wave(grid2):
    u = SpectralField.plane_wave(grid2, (1, 1), 0.9)
    rep = convergence_study(u, NLSParams(2, 3, 0.01, 1.0), [0.1, 0.05, 0.025])
    assert rep.exact and rep.status == "exact"
    assert math.isnan(rep.slope)
    assert json.loads(json.dumps(rep.to_dict()))["status"] == "exact"


def test_convergence_slopes(grid2):
    u0 = random_field(grid2, seed=3, kmax=3)
    strang = convergence_study(u0, NLSParams(2, 3, 0.01, 0.5), [0.02, 0.01, 0.005])
    assert strang.slope == pytest.approx(2.0, abs=0.2)
    rk4 = convergence_study(u0, NLSParams(2, 3, 0.01, 0.5, integrator="rk4"), [0.02, 0.01, 0.005])
    assert rk4.slope == pytest.approx(4.0, abs=0.4)
    assert rk4.status.startswith("slope ")


def test_convergence_errors(grid2):
    u0 = random_field(grid2, seed=3, kmax=3)
    with pytest.raises(ValueError, match="3 refinement"):
        convergence_study(u0, NLSParams(2, 3, 0.01, 0.5), [0.02, 0.01])
    with pytest.raises(ValueError, match="quantity"):
        convergence_study(u0, NLSParams(2, 3, 0.01, 0.5), [0.02, 0.01, 0.005], quantity="H2")


@pytest.mark.parametrize("k", [1, 2])
def test_oracle_second_order(k):
    u0 = random_field(GridSpec.cube(2, 32), seed=1, s=2, kmax=2)
    rep = dt_power_oracle(u0, k, 3, [4e-3, 2e-3, 1e-3])
    assert rep.order == pytest.approx(2.0, abs=0.3)
    assert rep.rel_errors[-1] < 1e-4


def test_oracle_errors(smooth2):
    with pytest.raises(ValueError):
        dt_power_oracle(smooth2, 4, 3, [1e-3, 5e-4])
    with pytest.raises(ValueError):
        dt_power_oracle(smooth2, 1, 3, [1e-3])


def test_shell_field(grid2):
    u = shell_field(grid2, 5, seed=1, h1=2.0)
    assert sobolev_norm(u, 1) == pytest.approx(2.0, rel=1e-12)
    kn = np.sqrt(sum(k.astype(float) ** 2 for k in grid2.k_int))
    assert not np.any(u.coeffs[(kn < 5) | (kn >= 6)])
    with pytest.raises(ValueError):
        shell_field(grid2, 100)


def test_subordination_small():
    rep = residual_subordination(GridSpec.cube(2, 128), [1, 2, 4, 8, 16, 32])
    assert rep.bound_exponent == 0.0
    assert rep.slope <= rep.bound_exponent + 0.3
    assert rep.r_squared >= 0.9
    assert json.loads(json.dumps(rep.to_dict()))["k"] == 1
