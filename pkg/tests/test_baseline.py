import numpy as np
import pytest

from harvestkit import evalkit, harvest
from harvestkit.baseline import ARModel, fit_ar, predict_ar, predict_ar_at


def ar1(n, coef=0.9, y0=1.0):
    y = np.empty(n)
    y[0] = y0
    for t in range(1, n):
        y[t] = coef * y[t - 1]
    return y


def test_constant_series():
    for p in (1, 3, 6):
        model = fit_ar(np.full(30, 0.4), p, 1)
        assert model.intercept == pytest.approx(0.4)
        np.testing.assert_allclose(predict_ar(model, np.full(10, 0.4)), 0.4, atol=1e-12)


def test_recovers_ar1_coefficient():
    model = fit_ar(ar1(40), 1, 1)
    assert model.coefficients[0] == pytest.approx(0.9, abs=1e-8)
    assert abs(model.intercept) < 1e-8


def test_ar1_held_out_nrmse():
    y = ar1(80, y0=5.0)
    model = fit_ar(y[:40], 1, 1)
    pred = predict_ar(model, y[40:])[:-1]
    assert evalkit.nrmse(y[41:], pred) < 1e-6


def test_recovers_ar2_oscillator():
    # an undamped oscillator about 0.5 obeys an exact AR(2) recursion
    w = 0.3
    c = np.array([-1.0, 2 * np.cos(w)])  # oldest first
    y = 0.5 + np.sin(w * np.arange(200) + 0.2)
    model = fit_ar(y[:120], 2, 1)
    np.testing.assert_allclose(model.coefficients, c, atol=1e-6)
    assert model.intercept == pytest.approx(0.5 * (1 - c.sum()), abs=1e-6)
    pred = predict_ar(model, y[120:])[:-1]
    assert evalkit.nrmse(y[122:], pred) < 1e-6


def test_direct_multi_step():
    # y(t + 3) = 0.9^3 y(t) for the AR(1) generator
    model = fit_ar(ar1(60), 1, 3)
    assert model.coefficients[0] == pytest.approx(0.9 ** 3, abs=1e-8)


def test_paper_order_runs():
    y = np.sin(np.arange(14) * 0.7)
    model = fit_ar(y, 6, 7)
    assert model.coefficients.shape == (6,)


def test_too_short():
    with pytest.raises(ValueError):
        fit_ar(np.ones(13), 6, 7)
    with pytest.raises(ValueError):
        predict_ar(ARModel(3, np.zeros(3), 0.0), np.ones(2))


def test_zero_coefficients_constant():
    model = ARModel(2, np.zeros(2), 0.4)
    assert predict_ar(model, np.arange(5.0)).tolist() == [0.4] * 4


def test_least_squares_optimality():
    rng = np.random.default_rng(8)
    y = rng.normal(size=100).cumsum()
    p, tau = 4, 2
    model = fit_ar(y, p, tau)

    def rss(coef, b):
        pred = predict_ar(ARModel(p, coef, b, tau), y)[:-tau]
        return np.sum((y[p - 1 + tau:] - pred) ** 2)

    base = rss(model.coefficients, model.intercept)
    for j in range(p + 1):
        for sign in (-1, 1):
            c, b = model.coefficients.copy(), model.intercept
            if j < p:
                c[j] += sign * 1e-3
            else:
                b += sign * 1e-3
            assert rss(c, b) >= base


def test_predict_at_alignment():
    y = np.arange(30, dtype=float)
    model = ARModel(2, np.array([0.0, 1.0]), 0.0, tau=3)  # forecasts y(t+3) as y(t)
    times = np.array([10, 11, 29])
    assert predict_ar_at(model, y, times).tolist() == [7.0, 8.0, 26.0]
    with pytest.raises(ValueError):
        predict_ar_at(model, y, np.array([3]))


def test_ar_model_file(tmp_path):
    model = fit_ar(ar1(40), 2, 1)
    harvest.save_model(model, tmp_path / "ar.json")
    back = harvest.load_model(tmp_path / "ar.json")
    assert isinstance(back, ARModel)
    assert back.coefficients.tolist() == model.coefficients.tolist()
    assert back.intercept == model.intercept
