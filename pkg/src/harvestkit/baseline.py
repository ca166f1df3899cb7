"""Autoregressive baseline predicting a series from its own past.

The model is fitted in direct form: ``y(t + tau)`` is regressed on the window
``y(t - p + 1), ..., y(t)`` plus a constant, so it answers the same question
as the harvesting readout for the same horizon.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .harvest import FORMAT_VERSION


@dataclass(frozen=True, eq=False)
class ARModel:
    p: int
    coefficients: np.ndarray  # oldest lag first: c_{t-p+1} ... c_t
    intercept: float
    tau: int = 1

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float)
        object.__setattr__(self, "coefficients", c)
        if self.p < 1:
            raise ValueError("AR order must be >= 1")
        if c.shape != (self.p,):
            raise ValueError(f"expected {self.p} coefficients, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("AR coefficients must be finite")


def lag_windows(y: np.ndarray, p: int) -> np.ndarray:
    """Rows ``[y(t-p+1), ..., y(t)]`` for ``t = p-1 .. len(y)-1``."""
    return np.lib.stride_tricks.sliding_window_view(np.asarray(y, dtype=float), p)


def fit_ar(y_train, p: int, tau: int = 1) -> ARModel:
    y = np.asarray(y_train, dtype=float)
    if p < 1 or tau < 1:
        raise ValueError("p and tau must be >= 1")
    if len(y) < p + tau + 1:
        raise ValueError(f"need at least p + tau + 1 = {p + tau + 1} samples, got {len(y)}")
    X = lag_windows(y, p)[: len(y) - p + 1 - tau]
    target = y[p - 1 + tau:]
    # centring keeps the intercept out of the minimum-norm solve
    xm, ym = X.mean(axis=0), target.mean()
    # cutoff scaled by the raw data so centring round-off is not fitted
    U, sv, Vt = np.linalg.svd(X - xm, full_matrices=False)
    scale = max(np.linalg.norm(X, 2), np.finfo(float).tiny)
    keep = sv > 1e-10 * scale
    coef = Vt[keep].T @ ((U[:, keep].T @ (target - ym)) / sv[keep])
    return ARModel(p, coef, float(ym - xm @ coef), tau)


def predict_ar(model: ARModel, history) -> np.ndarray:
    """Direct predictions from every full window of ``history``.

    Element ``i`` forecasts ``history[i + p - 1 + tau]``; the last ``tau``
    entries lie beyond the end of ``history``.
    """
    h = np.asarray(history, dtype=float)
    if len(h) < model.p:
        raise ValueError(f"history of length {len(h)} shorter than order {model.p}")
    return lag_windows(h, model.p) @ model.coefficients + model.intercept


def predict_ar_at(model: ARModel, y, target_times) -> np.ndarray:
    """Forecast ``y`` at the given indices using only values up to ``t - tau``."""
    t = np.asarray(target_times) - model.tau
    if np.any(t < model.p - 1):
        raise ValueError("not enough history before the first target time")
    return predict_ar(model, y)[t - (model.p - 1)]


def ar_to_dict(model: ARModel) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "type": "ar",
        "p": model.p,
        "tau": model.tau,
        "coefficients": model.coefficients.tolist(),
        "intercept": model.intercept,
    }


def ar_from_dict(d: dict) -> ARModel:
    if d.get("type") != "ar":
        raise ValueError("not an AR model")
    return ARModel(int(d["p"]), np.array(d["coefficients"]), float(d["intercept"]), int(d["tau"]))
