import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nlsgrowth.initial import InitSpec, make_initial
from nlsgrowth.spectral import GridSpec, mass, sobolev_norm, to_physical


@given(st.integers(0, 2**31), st.floats(0.5, 4.0), st.floats(0.1, 3.0))
def test_random_sobolev_normalized(seed, s, amp):
    g = GridSpec.cube(2, 16)
    u = make_initial(InitSpec("random_sobolev", amplitude=amp, s=s, seed=seed), g)
    assert sobolev_norm(u, s) == pytest.approx(amp, rel=1e-12)


def test_random_sobolev_deterministic(grid3):
    spec = InitSpec("random_sobolev", seed=3, s=1.5)
    a, b = make_initial(spec, grid3), make_initial(spec, grid3)
    assert np.array_equal(a.coeffs, b.coeffs)
    c = make_initial(InitSpec("random_sobolev", seed=4, s=1.5), grid3)
    assert not np.array_equal(a.coeffs, c.coeffs)


def test_random_sobolev_band_and_nyquist(grid2):
    u = make_initial(InitSpec("random_sobolev", seed=1, kmax=3), grid2)
    big = np.zeros(grid2.shape, dtype=bool)
    for k in grid2.k_int:
        big |= np.abs(k) > 3
    assert not np.any(u.coeffs[big])
    v = make_initial(InitSpec("random_sobolev", seed=1), grid2)
    assert not np.any(v.coeffs[16, :]) and not np.any(v.coeffs[:, 16])


def test_plane_wave(grid3):
    u = make_initial(InitSpec("plane_wave", amplitude=0.5, k0=(1, -2, 3)), grid3)
    x, y, z = grid3.coords()
    assert np.allclose(to_physical(u), 0.5 * np.exp(1j * (x - 2 * y + 3 * z)), atol=1e-14)


def test_gaussian_bump(grid2):
    u = make_initial(InitSpec("gaussian_bump", amplitude=2.0, width=0.4), grid2)
    x = to_physical(u)
    assert np.max(np.abs(x.imag)) < 1e-14
    assert np.unravel_index(np.argmax(x.real), grid2.shape) == (16, 16)
    assert x.real.max() == pytest.approx(2.0, rel=1e-12)


def test_background_shifts_mean(grid2):
    u = make_initial(InitSpec("random_sobolev", seed=2, background=0.5 + 0.25j), grid2)
    v = make_initial(InitSpec("random_sobolev", seed=2), grid2)
    assert u.coeffs[0, 0] - v.coeffs[0, 0] == pytest.approx(0.5 + 0.25j)
    assert mass(u) > mass(v) - 1e-12


@pytest.mark.parametrize(
    "kw",
    [
        dict(kind="spiral"),
        dict(kind="plane_wave"),
        dict(kind="random_sobolev", amplitude=0),
        dict(kind="gaussian_bump", width=0),
    ],
)
def test_spec_validation(kw):
    with pytest.raises(ValueError):
        InitSpec(**kw)


def test_plane_wave_dim_mismatch(grid2):
    with pytest.raises(ValueError):
        make_initial(InitSpec("plane_wave", k0=(1, 0, 0)), grid2)


def test_dict_round_trip():
    spec = InitSpec("plane_wave", amplitude=0.3, k0=[1, 2], background=1j)
    assert spec.k0 == (1, 2)
    assert InitSpec.from_dict(spec.to_dict()) == spec
