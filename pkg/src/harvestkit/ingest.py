"""From stop-line crossing events to aligned regression tasks.

The pipeline is::

    parse_events -> bin_counts -> normalize -> multiplex -> make_task

Series are named ``<intersection number><approach letter>``, e.g. ``5e`` for
vehicles entering intersection 5 from the east.
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

SERIES_RE = re.compile(r"^(\d+)([nsew])$")
EVENT_HEADER = ("time_s", "series", "count")
DEFAULT_EXCLUDE = ("5n", "5s", "5w")


class ParseError(ValueError):
    """Malformed event or series CSV; the message names the offending line."""


class CausalityError(ValueError):
    """Feature shifts reach the forecast target time (tau <= p)."""


def split_fraction(r: float, n: int) -> int:
    """Number of leading rows given to training: ``floor(r * n)``."""
    # guard against 0.8 * 100 = 80.00000000000001 style round-off
    return int(math.floor(r * n + 1e-9))


@dataclass
class EventLog:
    times: np.ndarray
    series: list[str]
    counts: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.counts = np.asarray(self.counts, dtype=float)
        if not (len(self.times) == len(self.series) == len(self.counts)):
            raise ValueError("times, series and counts must have equal length")
        order = sorted(
            range(len(self.series)),
            key=lambda i: (self.times[i], self.series[i][:-1], self.series[i][-1], self.counts[i]),
        )
        self.times = self.times[order]
        self.counts = self.counts[order]
        self.series = [self.series[i] for i in order]

    def __len__(self):
        return len(self.series)

    def __eq__(self, other):
        if not isinstance(other, EventLog):
            return NotImplemented
        return (
            self.series == other.series
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.counts, other.counts)
        )

    @property
    def names(self) -> list[str]:
        """Distinct series names in natural (intersection, direction) order."""
        return sort_names(set(self.series))

    def to_csv(self) -> str:
        lines = [",".join(EVENT_HEADER)]
        lines.extend(
            f"{t!r},{s},{c!r}" for t, s, c in zip(self.times.tolist(), self.series, self.counts.tolist())
        )
        return "\n".join(lines) + "\n"


def sort_names(names: Iterable[str]) -> list[str]:
    def key(name):
        m = SERIES_RE.match(name)
        return (int(m.group(1)), m.group(2)) if m else (math.inf, name)

    return sorted(names, key=key)


def parse_events(stream: str | io.TextIOBase) -> EventLog:
    """Parse event CSV text with header ``time_s,series,count``.

    The count column may be omitted (each row is then one vehicle).
    """
    text = stream if isinstance(stream, str) else stream.read()
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ParseError("line 1: missing header") from None
    if header not in (list(EVENT_HEADER), list(EVENT_HEADER[:2])):
        raise ParseError(f"line 1: expected header 'time_s,series[,count]', got {','.join(header)!r}")
    has_count = len(header) == 3

    times, names, counts = [], [], []
    errors = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header) and not (has_count and len(row) == 2):
            errors.append(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
            continue
        t_raw, name = row[0].strip(), row[1].strip()
        try:
            t = float(t_raw)
        except ValueError:
            errors.append(f"line {lineno}: non-numeric time {t_raw!r}")
            continue
        if not math.isfinite(t) or t < 0:
            errors.append(f"line {lineno}: time must be finite and non-negative, got {t_raw!r}")
            continue
        m = SERIES_RE.match(name)
        if m is None:
            errors.append(
                f"line {lineno}: series {name!r} must be an intersection number followed by n/s/e/w"
            )
            continue
        c = 1.0
        if has_count and len(row) == 3 and row[2].strip():
            try:
                c = float(row[2])
            except ValueError:
                errors.append(f"line {lineno}: non-numeric count {row[2]!r}")
                continue
            if not math.isfinite(c) or c < 0:
                errors.append(f"line {lineno}: count must be finite and non-negative, got {row[2]!r}")
                continue
        times.append(t)
        names.append(name)
        counts.append(c)
    if errors:
        raise ParseError("; ".join(errors))
    return EventLog(np.array(times, dtype=float), names, np.array(counts, dtype=float))


@dataclass
class SeriesMatrix:
    """Binned series, rows are time bins and columns are named series."""

    names: list[str]
    values: np.ndarray
    interval_s: float = 1.0
    t0_s: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[1] != len(self.names):
            raise ValueError(
                f"values shape {self.values.shape} does not match {len(self.names)} names"
            )
        if len(set(self.names)) != len(self.names):
            raise ValueError("series names must be unique")
        if self.values.shape[0] < 1:
            raise ValueError("a series matrix needs at least one time step")

    @property
    def T(self) -> int:
        return self.values.shape[0]

    def column(self, name: str) -> np.ndarray:
        try:
            return self.values[:, self.names.index(name)]
        except ValueError:
            raise KeyError(f"series {name!r} not present") from None

    def select(self, names: Sequence[str]) -> "SeriesMatrix":
        missing = [n for n in names if n not in self.names]
        if missing:
            raise KeyError(f"series not present: {', '.join(missing)}")
        idx = [self.names.index(n) for n in names]
        return SeriesMatrix(list(names), self.values[:, idx], self.interval_s, self.t0_s)

    def rows(self, start: int, stop: int) -> "SeriesMatrix":
        return SeriesMatrix(
            list(self.names),
            self.values[start:stop],
            self.interval_s,
            self.t0_s + start * self.interval_s,
        )

    def __eq__(self, other):
        if not isinstance(other, SeriesMatrix):
            return NotImplemented
        return (
            self.names == other.names
            and self.interval_s == other.interval_s
            and self.t0_s == other.t0_s
            and np.array_equal(self.values, other.values)
        )

    def to_csv(self) -> str:
        lines = ["t," + ",".join(self.names)]
        for i, row in enumerate(self.values.tolist()):
            lines.append(f"{i}," + ",".join(repr(v) for v in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str, interval_s: float = 1.0, t0_s: float = 0.0) -> "SeriesMatrix":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or not rows[0] or rows[0][0] != "t":
            raise ParseError("line 1: series CSV must start with a 't' column")
        names = rows[0][1:]
        values = []
        for lineno, row in enumerate(rows[1:], start=2):
            if not row:
                continue
            if len(row) != len(names) + 1:
                raise ParseError(f"line {lineno}: expected {len(names) + 1} fields, got {len(row)}")
            try:
                values.append([float(v) for v in row[1:]])
            except ValueError as exc:
                raise ParseError(f"line {lineno}: {exc}") from None
        return cls(names, np.array(values, dtype=float).reshape(-1, len(names)), interval_s, t0_s)


def bin_counts(
    log: EventLog,
    interval_s: float,
    names: Sequence[str] | None = None,
    t0_s: float | None = None,
    t_end_s: float | None = None,
) -> SeriesMatrix:
    """Sum event counts into bins ``[t0 + b*interval, t0 + (b+1)*interval)``.

    ``t0_s`` defaults to the first event time.  Without ``t_end_s`` the bins
    run up to and including the one holding the last event; with it there
    are ``ceil((t_end - t0) / interval)`` bins and later events are dropped.
    """
    if not interval_s > 0:
        raise ValueError("interval_s must be positive")
    if names is not None:
        present = set(log.series)
        missing = [n for n in names if n not in present]
        if missing:
            raise KeyError(f"series missing from event log: {', '.join(missing)}")
        names = list(names)
    else:
        names = log.names

    if t0_s is None:
        if len(log) == 0:
            raise ValueError("cannot bin an empty event log without an explicit time span")
        t0_s = float(log.times[0])
    if t_end_s is None:
        if len(log) == 0:
            raise ValueError("cannot bin an empty event log without an explicit time span")
        T = int(math.floor((log.times[-1] - t0_s) / interval_s)) + 1
    else:
        span = t_end_s - t0_s
        if not span > 0:
            raise ValueError(f"empty time span [{t0_s}, {t_end_s})")
        T = int(math.ceil(span / interval_s))
    if T < 1:
        raise ValueError("no bins in the requested span")

    values = np.zeros((T, len(names)))
    col = {n: j for j, n in enumerate(names)}
    bins = np.floor((log.times - t0_s) / interval_s).astype(np.int64)
    for b, s, c in zip(bins.tolist(), log.series, log.counts.tolist()):
        j = col.get(s)
        if j is not None and 0 <= b < T:
            values[b, j] += c
    return SeriesMatrix(names, values, float(interval_s), float(t0_s))


@dataclass
class NormStats:
    names: list[str]
    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        self.mins = np.asarray(self.mins, dtype=float)
        self.maxs = np.asarray(self.maxs, dtype=float)
        if np.any(self.maxs < self.mins):
            raise ValueError("max must be >= min for every series")

    @classmethod
    def fit(cls, m: SeriesMatrix) -> "NormStats":
        return cls(list(m.names), m.values.min(axis=0), m.values.max(axis=0))

    def to_dict(self) -> dict:
        return {"names": self.names, "min": self.mins.tolist(), "max": self.maxs.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "NormStats":
        return cls(list(d["names"]), d["min"], d["max"])

    def apply(self, name: str, x: np.ndarray) -> np.ndarray:
        j = self.names.index(name)
        lo, hi = self.mins[j], self.maxs[j]
        x = np.asarray(x, dtype=float)
        if hi == lo:
            return np.zeros_like(x)
        return (x - lo) / (hi - lo)


def normalize(m: SeriesMatrix, stats: NormStats | None = None) -> tuple[SeriesMatrix, NormStats]:
    """Min-max scale each series; pass training ``stats`` to scale test data."""
    if stats is None:
        stats = NormStats.fit(m)
    missing = [n for n in m.names if n not in stats.names]
    if missing:
        raise KeyError(f"normalisation stats lack series: {', '.join(missing)}")
    out = np.empty_like(m.values)
    for j, name in enumerate(m.names):
        out[:, j] = stats.apply(name, m.values[:, j])
    return SeriesMatrix(list(m.names), out, m.interval_s, m.t0_s), stats


@dataclass
class FeatureMatrix:
    """Series together with their forward-shifted copies.

    Column ``(s, lag)`` at row ``t`` holds ``source[s][t + lag]``; only the
    ``T - p`` rows where every shift exists are kept.
    """

    column_labels: list[tuple[str, int]]
    values: np.ndarray
    p: int
    source: SeriesMatrix
    alignment: int = 0

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]


def multiplex(m: SeriesMatrix, p: int) -> FeatureMatrix:
    if p < 0:
        raise ValueError("p must be >= 0")
    if p >= m.T:
        raise ValueError(f"shift p={p} needs more than {m.T} time steps")
    n = m.T - p
    labels = [(s, lag) for s in m.names for lag in range(p + 1)]
    cols = [m.values[lag:lag + n, j] for j in range(len(m.names)) for lag in range(p + 1)]
    values = np.column_stack(cols) if cols else np.empty((n, 0))
    return FeatureMatrix(labels, values, p, m)


@dataclass
class Task:
    """Aligned regression task.

    Row ``i`` predicts the target at bin ``target_times[i]`` from features
    observed at bins ``target_times[i] - tau .. target_times[i] - tau + p``.
    """

    X: np.ndarray
    y: np.ndarray
    feature_labels: list[tuple[str, int]]
    target_name: str
    tau: int
    p: int
    n_train: int
    target_times: np.ndarray

    @property
    def X_train(self):
        return self.X[: self.n_train]

    @property
    def y_train(self):
        return self.y[: self.n_train]

    @property
    def X_test(self):
        return self.X[self.n_train:]

    @property
    def y_test(self):
        return self.y[self.n_train:]

    def split(self):
        return self.X_train, self.y_train, self.X_test, self.y_test


def check_causal(tau: int, p: int) -> None:
    if tau < 1:
        raise ValueError(f"tau must be >= 1, got {tau}")
    if p < 0:
        raise ValueError(f"p must be >= 0, got {p}")
    if tau <= p:
        raise CausalityError(
            f"tau={tau} must exceed p={p}: shifted features would see the target time"
        )


def make_task(
    features: FeatureMatrix,
    target_name: str,
    tau: int,
    exclude: Iterable[str] = (),
    r: float = 0.8,
) -> Task:
    """Pair feature rows with the target ``tau`` bins ahead and split by time."""
    if not 0 < r < 1:
        raise ValueError(f"training fraction r must lie in (0, 1), got {r}")
    check_causal(tau, features.p)
    src = features.source
    if target_name not in src.names:
        raise KeyError(f"target series {target_name!r} not present")
    drop = {target_name, *exclude}
    keep = [j for j, (s, _) in enumerate(features.column_labels) if s not in drop]
    if not keep:
        raise ValueError("no feature series left after removing target and exclusions")

    n = src.T - tau
    if n < 2:
        raise ValueError(f"series of length {src.T} too short for tau={tau}")
    X = features.values[:n, keep]
    times = np.arange(n) + tau
    y = src.column(target_name)[times]
    n_train = split_fraction(r, n)
    if n_train < 1 or n_train >= n:
        raise ValueError(f"split r={r} of {n} rows leaves an empty segment")
    return Task(
        X, y, [features.column_labels[j] for j in keep], target_name, tau, features.p, n_train, times
    )


def build_task(
    m: SeriesMatrix,
    target_name: str,
    tau: int,
    p: int,
    r: float,
    exclude: Iterable[str] = DEFAULT_EXCLUDE,
    stats: NormStats | None = None,
    feature_names: Sequence[str] | None = None,
) -> tuple[Task, NormStats]:
    """Normalise, multiplex and split ``m`` in one go.

    Unless given, normalisation stats come from the bins a model trained on
    the first ``floor(r * (T - tau))`` rows has seen, i.e. bins
    ``[0, n_train + tau)``.
    """
    check_causal(tau, p)
    if not 0 < r < 1:
        raise ValueError(f"training fraction r must lie in (0, 1), got {r}")
    if target_name not in m.names:
        raise KeyError(f"target series {target_name!r} not present")
    exclude = set(exclude)
    if feature_names is None:
        feature_names = [s for s in m.names if s != target_name and s not in exclude]
    m = m.select([*feature_names, target_name])
    if stats is None:
        n_train = split_fraction(r, m.T - tau)
        stats = NormStats.fit(m.rows(0, n_train + tau))
    normed, stats = normalize(m, stats)
    task = make_task(multiplex(normed, p), target_name, tau, exclude, r)
    return task, stats
