"""Linear readout over observed traffic series.

The readout is a ridge regression, ``w = argmin |y - X w|^2 + beta |w|^2``,
with feature rows in ``X`` (T x F).  It is solved through the SVD of ``X``
so the same code covers the regularised case and the ``beta = 0``
minimum-norm pseudo-inverse.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .ingest import NormStats, split_fraction

FORMAT_VERSION = 1
RCOND = 1e-10
DEFAULT_BETA = 1e-3


class NumericalError(ArithmeticError):
    """Non-finite input or output in a fit."""


@dataclass(frozen=True, eq=False)
class HarvestModel:
    weights: np.ndarray
    intercept: float
    beta: float
    feature_labels: tuple[tuple[str, int], ...]
    tau: int = 1
    interval_s: float = 1.0
    p: int = 0
    norm_stats: NormStats | None = None
    target_name: str = ""
    fit_intercept: bool = True

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "feature_labels", tuple((str(s), int(l)) for s, l in self.feature_labels))
        if w.ndim != 1 or len(w) != len(self.feature_labels):
            raise ValueError(f"{len(w)} weights for {len(self.feature_labels)} feature labels")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")

    @property
    def series(self) -> list[str]:
        """Distinct feature series, in label order."""
        return list(dict.fromkeys(s for s, _ in self.feature_labels))


def _validate(X, y=None):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"feature rows must be 2-D, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise NumericalError("features contain non-finite values")
    if y is None:
        return X
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or len(y) != X.shape[0]:
        raise ValueError(f"{X.shape[0]} feature rows but target of shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise NumericalError("target contains non-finite values")
    return X, y


def ridge_solve(X: np.ndarray, y: np.ndarray, beta: float) -> np.ndarray:
    """Ridge weights through the thin SVD of ``X``.

    Singular values below ``RCOND * s_max`` are discarded, which makes
    ``beta = 0`` return the minimum-norm least-squares solution.
    """
    if X.shape[1] == 0:
        return np.zeros(0)
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros(X.shape[1])
    keep = s > RCOND * s[0]
    s, U, Vt = s[keep], U[:, keep], Vt[keep]
    filt = s / (s * s + beta)
    return Vt.T @ (filt * (U.T @ y))


def fit_ridge(
    X,
    y,
    beta: float = DEFAULT_BETA,
    feature_labels: Sequence[tuple[str, int]] | None = None,
    fit_intercept: bool = True,
    **meta,
) -> HarvestModel:
    """Fit the readout.

    With ``fit_intercept`` a constant-1 column is appended to ``X`` and is
    regularised like every other feature.  ``meta`` fills the remaining
    :class:`HarvestModel` fields (tau, p, interval_s, norm_stats, target_name).
    """
    X, y = _validate(X, y)
    if X.shape[0] < 2:
        raise ValueError("need at least two rows to fit")
    if not beta >= 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    if feature_labels is None:
        feature_labels = [(f"x{j}", 0) for j in range(X.shape[1])]
    if len(feature_labels) != X.shape[1]:
        raise ValueError(f"{len(feature_labels)} labels for {X.shape[1]} columns")
    A = np.column_stack([X, np.ones(len(y))]) if fit_intercept else X
    w = ridge_solve(A, y, beta)
    if not np.all(np.isfinite(w)):
        raise NumericalError("ridge solve produced non-finite weights")
    weights, intercept = (w[:-1], float(w[-1])) if fit_intercept else (w, 0.0)
    return HarvestModel(weights, intercept, float(beta), tuple(feature_labels), fit_intercept=fit_intercept, **meta)


def predict(model: HarvestModel, X) -> np.ndarray:
    X = _validate(X)
    if X.shape[1] != len(model.weights):
        raise ValueError(f"model has {len(model.weights)} weights, features have {X.shape[1]} columns")
    out = X @ model.weights + model.intercept
    if not np.all(np.isfinite(out)):
        raise NumericalError("prediction is not finite")
    return out


def ridge_objective(model: HarvestModel, X, y) -> float:
    """Training loss ``|y - X w - b|^2 + beta |(w, b)|^2`` minimised by :func:`fit_ridge`."""
    resid = np.asarray(y, dtype=float) - predict(model, X)
    penalty = float(model.weights @ model.weights)
    if model.fit_intercept:
        penalty += model.intercept ** 2
    return float(resid @ resid) + model.beta * penalty


# -- online update ------------------------------------------------------------

def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5 + 1e-9))


def update_length(r1: float, r2: float, T: int) -> int:
    """Rows predicted per update, ``round((1/r2 - 1) * r1 * T)``."""
    return round_half_up((1.0 / r2 - 1.0) * r1 * T)


@dataclass
class OnlineRound:
    train_end: int
    predict_range: tuple[int, int]
    model: HarvestModel


@dataclass
class OnlineSchedule:
    r1: float
    r2: float
    delta: int
    rounds: list[OnlineRound] = field(default_factory=list)

    @property
    def start(self) -> int:
        return self.rounds[0].predict_range[0]


def online_fit_predict(
    X,
    y,
    r1: float,
    r2: float,
    beta: float = DEFAULT_BETA,
    feature_labels=None,
    fit_intercept: bool = True,
    **meta,
) -> tuple[np.ndarray, OnlineSchedule]:
    """Refit on a growing prefix, predicting ``delta`` rows after each fit.

    The first fit uses the first ``floor(r1 * T)`` rows (the same split as a
    one-shot fit with ``r = r1``).  Each later fit uses every row before its
    prediction window.  With ``r1 == r2`` there is a single round.
    """
    X, y = _validate(X, y)
    T = len(y)
    if not 0 < r1 <= r2 <= 1:
        raise ValueError(f"need 0 < r1 <= r2 <= 1, got r1={r1}, r2={r2}")
    n0 = split_fraction(r1, T)
    if n0 < 2 or n0 >= T:
        raise ValueError(f"r1={r1} leaves no usable training or prediction rows in {T}")
    if r1 == r2:
        delta = T - n0
    else:
        delta = update_length(r1, r2, T)
        if delta < 1:
            raise ValueError(f"update length is 0 for r1={r1}, r2={r2}, T={T}; schedule cannot advance")

    sched = OnlineSchedule(r1, r2, delta)
    pred = np.empty(T - n0)
    start = n0
    while start < T:
        stop = min(start + delta, T)
        model = fit_ridge(X[:start], y[:start], beta, feature_labels, fit_intercept, **meta)
        pred[start - n0:stop - n0] = predict(model, X[start:stop])
        sched.rounds.append(OnlineRound(start, (start, stop), model))
        start = stop
    return pred, sched


# -- ablation -----------------------------------------------------------------

FIXED = "fixed"
RELEARN = "relearn"


@dataclass(frozen=True)
class AblationSpec:
    removed_series: tuple[str, ...]
    mode: str = FIXED

    def __post_init__(self):
        object.__setattr__(self, "removed_series", tuple(self.removed_series))
        if self.mode not in (FIXED, RELEARN):
            raise ValueError(f"mode must be {FIXED!r} or {RELEARN!r}")


def keep_columns(labels: Sequence[tuple[str, int]], removed: Sequence[str]) -> list[int]:
    removed = set(removed)
    return [j for j, (s, _) in enumerate(labels) if s not in removed]


def drop_series(X, labels, removed):
    """Remove every lag of the ``removed`` series from feature rows."""
    idx = keep_columns(labels, removed)
    return np.asarray(X)[:, idx], [tuple(labels[j]) for j in idx]


def ablate(model: HarvestModel, spec: AblationSpec, X=None, y=None) -> HarvestModel:
    """Remove series from a readout.

    ``fixed`` deletes the series' weights and keeps the rest unchanged;
    ``relearn`` refits on the reduced training rows ``X``, ``y`` (the full
    feature matrix the model was trained on).
    """
    present = set(model.series)
    missing = [s for s in spec.removed_series if s not in present]
    if missing:
        raise KeyError(f"series not in model features: {', '.join(missing)}")
    idx = keep_columns(model.feature_labels, spec.removed_series)
    if not idx:
        raise ValueError("ablation would remove every feature")
    labels = tuple(model.feature_labels[j] for j in idx)
    if spec.mode == FIXED:
        return replace(model, weights=model.weights[idx].copy(), feature_labels=labels)
    if X is None or y is None:
        raise ValueError("relearn mode needs the training rows X and y")
    X = np.asarray(X, dtype=float)
    if X.shape[1] != len(model.feature_labels):
        raise ValueError("X must have the model's full feature set")
    return fit_ridge(
        X[:, idx],
        y,
        model.beta,
        labels,
        model.fit_intercept,
        tau=model.tau,
        interval_s=model.interval_s,
        p=model.p,
        norm_stats=model.norm_stats,
        target_name=model.target_name,
    )


# -- model file ---------------------------------------------------------------

def model_to_dict(model: HarvestModel) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "type": "harvest",
        "target_name": model.target_name,
        "tau": model.tau,
        "interval_s": model.interval_s,
        "p": model.p,
        "beta": model.beta,
        "fit_intercept": model.fit_intercept,
        "intercept": model.intercept,
        "feature_labels": [[s, lag] for s, lag in model.feature_labels],
        "weights": model.weights.tolist(),
        "norm_stats": model.norm_stats.to_dict() if model.norm_stats else None,
    }


def model_from_dict(d: dict) -> HarvestModel:
    if d.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {d.get('format_version')!r}")
    if d.get("type") != "harvest":
        raise ValueError(f"not a harvest model: type {d.get('type')!r}")
    ns = d.get("norm_stats")
    return HarvestModel(
        np.array(d["weights"], dtype=float),
        float(d["intercept"]),
        float(d["beta"]),
        tuple((s, int(lag)) for s, lag in d["feature_labels"]),
        tau=int(d["tau"]),
        interval_s=float(d["interval_s"]),
        p=int(d["p"]),
        norm_stats=NormStats.from_dict(ns) if ns else None,
        target_name=d["target_name"],
        fit_intercept=bool(d["fit_intercept"]),
    )


def save_model(model, path: str | Path, extra: dict | None = None) -> None:
    """Write a harvest or AR model as JSON; floats survive the round trip exactly."""
    from .baseline import ARModel, ar_to_dict

    d = ar_to_dict(model) if isinstance(model, ARModel) else model_to_dict(model)
    if extra:
        d["extra"] = extra
    Path(path).write_text(json.dumps(d, indent=1) + "\n", encoding="utf-8")


def load_model(path: str | Path):
    from .baseline import ar_from_dict

    d = json.loads(Path(path).read_text(encoding="utf-8"))
    if d.get("type") == "ar":
        return ar_from_dict(d)
    return model_from_dict(d)
