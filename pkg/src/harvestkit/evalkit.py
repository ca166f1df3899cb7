"""Evaluation instruments: error, attractor distance, spectra, weight ranking, sweeps."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment, linprog

from . import harvest
from .ingest import DEFAULT_EXCLUDE, EventLog, bin_counts, build_task

# replicate points into an assignment problem up to this size, else use an LP
MAX_ASSIGNMENT = 4096


def nrmse(actual, predicted) -> float:
    """RMSE divided by the population standard deviation of ``actual``.

    The constant mean predictor scores exactly 1.
    """
    y = np.asarray(actual, dtype=float)
    yhat = np.asarray(predicted, dtype=float)
    if y.shape != yhat.shape or y.ndim != 1:
        raise ValueError(f"shape mismatch: {y.shape} vs {yhat.shape}")
    if len(y) < 2:
        raise ValueError("need at least two samples")
    sd = np.std(y)
    if sd == 0:
        raise ValueError("actual series has zero variance")
    d = yhat - y
    return float(np.sqrt(np.mean(d * d)) / sd)


@dataclass
class AttractorCloud:
    """Delay-coordinate points; column ``j`` is ``y(t - j*lag)``."""

    points: np.ndarray
    source_length: int
    dim: int = 3
    lag: int = 1

    def __len__(self):
        return self.points.shape[0]


def delay_embed(y, dim: int = 3, lag: int = 1) -> AttractorCloud:
    y = np.asarray(y, dtype=float)
    if dim < 1 or lag < 1:
        raise ValueError("dim and lag must be >= 1")
    span = (dim - 1) * lag
    if len(y) <= span:
        raise ValueError(f"series of length {len(y)} too short for dim={dim}, lag={lag}")
    n = len(y) - span
    idx = np.arange(n)[:, None] + (span - lag * np.arange(dim))[None, :]
    return AttractorCloud(y[idx], len(y), dim, lag)


def _points(c) -> np.ndarray:
    pts = c.points if isinstance(c, AttractorCloud) else np.asarray(c, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    return pts


def _subsample(pts, max_points, rng):
    if len(pts) <= max_points:
        return pts
    idx = np.sort(rng.choice(len(pts), size=max_points, replace=False))
    return pts[idx]


def _sq_cost(a, b):
    d = a[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", d, d)


def _transport_cost(a: np.ndarray, b: np.ndarray) -> float:
    """Mean squared cost of the optimal coupling of two uniform clouds."""
    n, m = len(a), len(b)
    L = n * m // math.gcd(n, m)
    if L <= MAX_ASSIGNMENT:
        # uniform marginals with common denominator L: an assignment between
        # replicated points spans the same vertices as the transport polytope
        C = _sq_cost(np.repeat(a, L // n, axis=0), np.repeat(b, L // m, axis=0))
        r, c = linear_sum_assignment(C)
        return float(C[r, c].sum() / L)
    C = _sq_cost(a, b)
    A_eq = np.zeros((n + m, n * m))
    for i in range(n):
        A_eq[i, i * m:(i + 1) * m] = 1.0
    for j in range(m):
        A_eq[n + j, j::m] = 1.0
    b_eq = np.concatenate([np.full(n, 1.0 / n), np.full(m, 1.0 / m)])
    res = linprog(C.ravel(), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if not res.success:
        raise harvest.NumericalError(f"transport LP failed: {res.message}")
    return float(res.fun)


def _order_key(pts: np.ndarray):
    return (len(pts), pts.shape[1], np.ascontiguousarray(pts).tobytes())


def wasserstein(A, B, max_points: int = 512, seed: int = 0) -> float:
    """2-Wasserstein distance between the uniform measures on two clouds.

    Clouds over ``max_points`` are subsampled without replacement using
    ``seed``.  The pair is put in a canonical order first so the value is
    exactly symmetric.
    """
    a, b = _points(A), _points(B)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("cannot compare empty clouds")
    if a.shape[1] != b.shape[1]:
        raise ValueError("clouds live in different dimensions")
    if _order_key(b) < _order_key(a):
        a, b = b, a
    # one stream per cloud: identical clouds get identical subsamples
    a = _subsample(a, max_points, np.random.default_rng(seed))
    b = _subsample(b, max_points, np.random.default_rng(seed))
    return math.sqrt(max(_transport_cost(a, b), 0.0))


@dataclass
class Spectrum:
    frequencies: np.ndarray
    power: np.ndarray

    def to_csv(self) -> str:
        lines = ["freq,power"]
        lines.extend(f"{f!r},{p!r}" for f, p in zip(self.frequencies.tolist(), self.power.tolist()))
        return "\n".join(lines) + "\n"


def power_spectrum(y) -> Spectrum:
    """One-sided periodogram of the de-meaned series, unwindowed.

    Scaled so the powers sum to the de-meaned energy ``sum((y - mean)^2)``.
    """
    y = np.asarray(y, dtype=float)
    n = len(y)
    if n < 2:
        raise ValueError("need at least two samples")
    Y = np.fft.rfft(y - y.mean())
    power = np.abs(Y) ** 2 / n
    # every bin except DC and (even n) Nyquist stands for a +/- pair
    if n % 2 == 0:
        power[1:-1] *= 2
    else:
        power[1:] *= 2
    return Spectrum(np.fft.rfftfreq(n), power)


def rank_features(model: harvest.HarvestModel, top_k: int | None = None) -> list[tuple[str, int, float]]:
    """Features by decreasing ``|weight|``; ties fall back to (series, lag)."""
    if top_k is not None and top_k < 1:
        raise ValueError("top_k must be >= 1")
    ranked = sorted(
        ((s, lag, float(w)) for (s, lag), w in zip(model.feature_labels, model.weights)),
        key=lambda t: (-abs(t[2]), t[0], t[1]),
    )
    return ranked[:top_k] if top_k else ranked


def top_series(model: harvest.HarvestModel, k: int) -> list[str]:
    """First ``k`` distinct series met while walking the |weight| ranking."""
    out: list[str] = []
    for s, _, _ in rank_features(model):
        if s not in out:
            out.append(s)
        if len(out) == k:
            break
    return out


# -- parameter sweep ----------------------------------------------------------

OK = "ok"


@dataclass
class SweepResult:
    taus: list[int]
    intervals: list[float]
    nrmse: np.ndarray  # len(taus) x len(intervals), nan where failed
    status: list[list[str]]
    p: int
    r: float
    beta: float
    target_name: str = ""

    def cells(self):
        for i, tau in enumerate(self.taus):
            for j, iv in enumerate(self.intervals):
                yield tau, iv, float(self.nrmse[i, j]), self.status[i][j]

    def to_csv(self) -> str:
        lines = ["tau,interval_s,nrmse,status"]
        for tau, iv, e, st in self.cells():
            lines.append(f"{tau},{iv!r},{e!r},{st}")
        return "\n".join(lines) + "\n"


def single_run_nrmse(
    log: EventLog,
    target: str,
    tau: int,
    interval_s: float,
    p: int,
    r: float,
    beta: float = harvest.DEFAULT_BETA,
    exclude: Iterable[str] = DEFAULT_EXCLUDE,
) -> float:
    """Test NRMSE of a one-shot fit at one (tau, interval) point."""
    m = bin_counts(log, interval_s)
    task, _ = build_task(m, target, tau, p, r, exclude)
    model = harvest.fit_ridge(task.X_train, task.y_train, beta, task.feature_labels)
    return nrmse(task.y_test, harvest.predict(model, task.X_test))


def sweep(
    log: EventLog,
    target: str,
    tau_range: Sequence[int],
    interval_range: Sequence[float],
    p: int,
    r: float,
    beta: float = harvest.DEFAULT_BETA,
    exclude: Iterable[str] = DEFAULT_EXCLUDE,
) -> SweepResult:
    """Test NRMSE over a (tau x interval) grid, re-binning the events per interval.

    A cell that cannot be evaluated is recorded as failed with its reason.
    """
    taus, intervals = list(tau_range), list(interval_range)
    if not taus or not intervals:
        raise ValueError("sweep ranges must be non-empty")
    exclude = tuple(exclude)
    grid = np.full((len(taus), len(intervals)), np.nan)
    status = [[OK] * len(intervals) for _ in taus]
    for i, tau in enumerate(taus):
        for j, iv in enumerate(intervals):
            try:
                grid[i, j] = single_run_nrmse(log, target, tau, iv, p, r, beta, exclude)
            except (ValueError, KeyError, ArithmeticError) as exc:
                status[i][j] = "failed: " + str(exc).replace(",", ";").replace("\n", " ")
    if all(st != OK for row in status for st in row):
        raise ValueError("every sweep cell failed; first reason: " + status[0][0])
    return SweepResult(taus, intervals, grid, status, p, r, beta, target)
