import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nlsgrowth.fitting import ENVELOPE_MARGIN, MIN_SAMPLES, envelope_for, fit_growth, r_squared

T = np.linspace(0, 100, 201)


def test_power_law_recovered():
    f = fit_growth(T, 3 * np.maximum(T, 1e-9) ** 1.5, "polynomial", dim=2, p=3, m=2)
    assert f.exponent_or_rate == pytest.approx(1.5, abs=1e-6)
    assert f.prefactor == pytest.approx(3.0, rel=1e-6)
    assert f.r_squared >= 0.999999
    assert f.fit_window == (1.0, 100.0)
    assert f.envelope_exponent == 1.0 and f.reference_exponent == 2.0
    assert f.within_envelope  # 1.5 <= 1 + 0.5


def test_exponential_recovered():
    f = fit_growth(T, 2 * np.exp(0.3 * T), "exponential", (0, None))
    assert f.exponent_or_rate == pytest.approx(0.3, abs=1e-6)
    assert f.prefactor == pytest.approx(2.0, rel=1e-6)
    assert f.n_samples == len(T)


def test_constant_series():
    f = fit_growth(T, np.full_like(T, 4.2), dim=2, p=3)
    assert abs(f.exponent_or_rate) <= 1e-9
    assert f.r_squared == 1.0
    assert f.within_envelope


def test_roundoff_noise_counts_as_flat():
    y = 4.2 * (1 + 1e-15 * np.sin(7 * T))
    assert fit_growth(T, y, dim=2, p=3).r_squared == 1.0


def test_envelope_exceeded():
    f = fit_growth(T, np.maximum(T, 1) ** 2.0, dim=2, p=3, m=2)
    assert not f.within_envelope
    g = fit_growth(T, np.maximum(T, 1) ** 2.0, dim=2, p=3, m=2, envelope=2.0)
    assert g.within_envelope


def test_envelope_table():
    assert envelope_for(2, 5, 3) == ("2d-odd", "polynomial", 2.0, 4.0)
    reg, model, env, ref = envelope_for(3, 3, 2)
    assert (reg, model, env) == ("3d-cubic", "exponential", math.inf) and math.isnan(ref)
    reg, model, env, _ = envelope_for(3, 2.5, 2)
    assert (reg, model, env) == ("3d-subcubic", "polynomial", 8.0)
    assert math.isnan(envelope_for(3, 2.5, 3)[2])
    assert envelope_for(None, None, 2)[0] is None


def test_default_model_follows_regime():
    y = np.exp(0.1 * T)
    assert fit_growth(T, y, dim=3, p=3).model == "exponential"
    assert fit_growth(T, y + 1, dim=2, p=3).model == "polynomial"


def test_unknown_envelope_is_within():
    f = fit_growth(T, np.maximum(T, 1) ** 9, dim=3, p=2.5, m=3)
    assert math.isnan(f.envelope_exponent) and f.within_envelope


def test_window_selection():
    f = fit_growth(T, np.maximum(T, 1), window=(10, 50))
    assert f.fit_window == (10.0, 50.0)
    assert f.n_samples == 81


def test_errors():
    with pytest.raises(ValueError, match="at least"):
        fit_growth(T[:MIN_SAMPLES], T[:MIN_SAMPLES] + 1, window=(None, None))
    with pytest.raises(ValueError, match="positive"):
        fit_growth(T, T - 50)
    with pytest.raises(ValueError, match="model"):
        fit_growth(T, T + 1, "logistic")
    with pytest.raises(ValueError):
        fit_growth(T, T[:-1])


def test_r_squared_bounds():
    y = np.array([1.0, 2.0, 3.0])
    assert r_squared(y, y) == 1.0
    assert r_squared(y, -y) == 0.0


@given(st.floats(-2, 4), st.floats(0.01, 100))
def test_planted_exponent(a, c):
    t = np.linspace(1, 50, 40)
    f = fit_growth(t, c * t**a, "polynomial")
    assert f.exponent_or_rate == pytest.approx(a, abs=1e-8)
    assert f.margin == ENVELOPE_MARGIN


def test_to_dict():
    d = fit_growth(T, T + 1).to_dict()
    assert isinstance(d["fit_window"], list)
    assert set(d) >= {"model", "exponent_or_rate", "r_squared", "envelope_exponent", "within_envelope"}
