"""End-to-end runs shared by the CLI and the acceptance checks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import baseline, evalkit, harvest, trafficnet
from .ingest import DEFAULT_EXCLUDE, EventLog, NormStats, SeriesMatrix, Task, build_task, parse_events


@dataclass
class HarvestRun:
    task: Task
    stats: NormStats
    model: harvest.HarvestModel
    pred_train: np.ndarray
    pred_test: np.ndarray
    ar_model: baseline.ARModel | None = None
    ar_test: np.ndarray | None = None

    @property
    def nrmse_train(self) -> float:
        return evalkit.nrmse(self.task.y_train, self.pred_train)

    @property
    def nrmse_test(self) -> float:
        return evalkit.nrmse(self.task.y_test, self.pred_test)

    @property
    def ar_nrmse_test(self) -> float:
        return evalkit.nrmse(self.task.y_test, self.ar_test)


def normalized_target(m: SeriesMatrix, target: str, stats: NormStats) -> np.ndarray:
    return stats.apply(target, m.column(target))


def run_harvest(
    m: SeriesMatrix,
    target: str,
    tau: int,
    p: int,
    r: float,
    beta: float = harvest.DEFAULT_BETA,
    exclude: Iterable[str] = DEFAULT_EXCLUDE,
    ar_order: int | None = None,
    feature_names: Sequence[str] | None = None,
) -> HarvestRun:
    """One-shot fit on the first ``r`` of the rows, optionally with an AR baseline.

    The AR model sees the same normalised target up to the end of the
    training targets and forecasts the same test bins.
    """
    task, stats = build_task(m, target, tau, p, r, exclude, feature_names=feature_names)
    model = harvest.fit_ridge(
        task.X_train,
        task.y_train,
        beta,
        task.feature_labels,
        tau=tau,
        interval_s=m.interval_s,
        p=p,
        norm_stats=stats,
        target_name=target,
    )
    run = HarvestRun(
        task,
        stats,
        model,
        harvest.predict(model, task.X_train),
        harvest.predict(model, task.X_test),
    )
    if ar_order:
        y = normalized_target(m, target, stats)
        train_end = int(task.target_times[task.n_train - 1]) + 1
        run.ar_model = baseline.fit_ar(y[:train_end], ar_order, tau)
        run.ar_test = baseline.predict_ar_at(run.ar_model, y, task.target_times[task.n_train:])
    return run


def simulate_log(
    rows: int,
    cols: int,
    steps: int,
    seed: int,
    per_link: float = 10.0,
    template: trafficnet.SignalTemplate | None = None,
    seconds_per_step: float = 1.0,
    switch_at: int | None = None,
    switch_template: trafficnet.SignalTemplate | None = None,
):
    """Simulate a torus and return ``(network, trajectory, log)``.

    With ``switch_at`` the signals are redrawn from ``switch_template`` at
    that step (same roads and turning ratios), making the traffic
    non-stationary.
    """
    net = trafficnet.build_lattice(rows, cols, template, seed=seed)
    init = trafficnet.uniform_state(net, per_link)
    if switch_at is None:
        traj, log = trafficnet.simulate(net, init, steps, seconds_per_step)
        return net, traj, log
    if not 0 < switch_at < steps:
        raise ValueError("switch_at must fall inside the run")
    traj1, log1 = trafficnet.simulate(net, init, switch_at, seconds_per_step)
    net2 = trafficnet.with_signals(net, switch_template or template or trafficnet.SignalTemplate(), seed + 1)
    traj2, log2 = trafficnet.simulate(net2, traj1[-1], steps - switch_at, seconds_per_step)
    log = trafficnet.CrossingLog(log1.records + log2.records)
    return net, traj1 + traj2[1:], log


def crossing_to_events(log: trafficnet.CrossingLog) -> EventLog:
    return parse_events(log.to_csv())
