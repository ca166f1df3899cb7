"""Command-line front end.

Exit codes: 0 success, 2 usage or validation error, 3 data error,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__, baseline, evalkit, experiment, harvest, plotting, trafficnet
from .ingest import (
    DEFAULT_EXCLUDE,
    CausalityError,
    EventLog,
    ParseError,
    bin_counts,
    build_task,
    check_causal,
    multiplex,
    normalize,
    parse_events,
)

log = logging.getLogger("harvestkit")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


@dataclass
class RunConfig:
    events: str | None = None
    network: str | None = None
    target: str = "5e"
    tau: int = 7
    interval_s: float = 18.0
    p: int = 6
    beta: float = harvest.DEFAULT_BETA
    r: float = 0.8
    r1: float = 0.5
    r2: float = 0.9
    exclude: list[str] = field(default_factory=lambda: list(DEFAULT_EXCLUDE))
    seed: int = 0
    out: str = "run"

    def validate(self, need_events: bool = True) -> None:
        try:
            check_causal(self.tau, self.p)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if not 0 < self.r < 1:
            raise UsageError(f"r must lie in (0, 1), got {self.r}")
        if not 0 < self.r1 <= self.r2 <= 1:
            raise UsageError(f"need 0 < r1 <= r2 <= 1, got r1={self.r1}, r2={self.r2}")
        if not self.interval_s > 0:
            raise UsageError("interval must be positive")
        if not self.beta >= 0:
            raise UsageError("beta must be >= 0")
        if need_events:
            if not self.events:
                raise UsageError("an events file is required (--events or config 'events')")
            if not Path(self.events).is_file():
                raise DataError(f"events file not found: {self.events}")


_CONFIG_KEYS = {f.name for f in fields(RunConfig)}


def load_config(args: argparse.Namespace) -> RunConfig:
    """Config file values, overridden by explicit flags, then by ``CH_SEED``."""
    values: dict = {}
    if getattr(args, "config", None):
        try:
            raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        unknown = set(raw) - _CONFIG_KEYS
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        values.update(raw)
    for key in _CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    if isinstance(values.get("exclude"), str):
        values["exclude"] = _names(values["exclude"])
    if os.environ.get("CH_SEED"):
        try:
            values["seed"] = int(os.environ["CH_SEED"])
        except ValueError:
            raise UsageError(f"CH_SEED must be an integer, got {os.environ['CH_SEED']!r}") from None
    return RunConfig(**values)


def _names(text: str) -> list[str]:
    return [s.strip() for s in text.split(",") if s.strip()]


def _floats(text: str) -> list[float]:
    """Comma list or ``start:stop:step`` range (inclusive) of numbers."""
    if ":" in text:
        parts = [float(x) for x in text.split(":")]
        start, stop = parts[0], parts[1]
        step = parts[2] if len(parts) > 2 else 1.0
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + k * step, 10) for k in range(n)]
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(round(v)) for v in _floats(text)]


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create output directory {out}: {exc}") from None
    if not os.access(out, os.W_OK):
        raise DataError(f"output directory not writable: {out}")
    return out


def _write(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8")
    log.info("wrote %s", path)
    return path


def _csv(header: Sequence[str], rows) -> str:
    def fmt(v):
        if isinstance(v, (float, np.floating)):
            return repr(float(v))
        return str(v)

    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def _load_events(path: str) -> EventLog:
    try:
        return parse_events(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read events: {exc}") from None


def _bin(cfg: RunConfig, events: EventLog, interval_s: float | None = None):
    return bin_counts(events, interval_s or cfg.interval_s)


def _params(cfg: RunConfig) -> list[tuple[str, object]]:
    return [
        ("target", cfg.target),
        ("tau", cfg.tau),
        ("interval_s", float(cfg.interval_s)),
        ("p", cfg.p),
        ("beta", float(cfg.beta)),
        ("r", float(cfg.r)),
        ("exclude", " ".join(cfg.exclude)),
    ]


# -- commands -------------------------------------------------------------------

def cmd_simulate(args) -> int:
    cfg = load_config(args)
    if args.steps < 1:
        raise UsageError("steps must be >= 1")
    if args.rows < 2 or args.cols < 2:
        raise UsageError("rows and cols must be >= 2")
    if not args.seconds_per_step > 0:
        raise UsageError("seconds per step must be positive")
    out = _out_dir(cfg)
    template = trafficnet.SignalTemplate(period_range=(args.period_min, args.period_max))
    net, traj, crossing = experiment.simulate_log(
        args.rows,
        args.cols,
        args.steps,
        cfg.seed,
        per_link=args.per_link,
        template=template,
        seconds_per_step=args.seconds_per_step,
        switch_at=args.switch_at,
    )
    trafficnet.save_network(net, out / "network.json")
    _write(out / "events.csv", crossing.to_csv())
    _write(out / "trajectory.csv", trafficnet.trajectory_to_csv(traj, net.link_names))
    meta = {
        "command": "simulate",
        "seed": cfg.seed,
        "rows": args.rows,
        "cols": args.cols,
        "steps": args.steps,
        "per_link": args.per_link,
        "period_range": [args.period_min, args.period_max],
        "seconds_per_step": args.seconds_per_step,
        "switch_at": args.switch_at,
        "versions": _versions(),
    }
    _write(out / "metadata.json", json.dumps(meta, indent=1) + "\n")
    print(f"simulated {args.steps} steps on {args.rows}x{args.cols}: {len(crossing)} crossing records")
    return EXIT_OK


def _versions() -> dict:
    import matplotlib
    import scipy

    return {"harvestkit": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "matplotlib": matplotlib.__version__}


def cmd_fit(args) -> int:
    cfg = load_config(args)
    cfg.validate()
    out = _out_dir(cfg)
    events = _load_events(cfg.events)
    m = _bin(cfg, events)
    run = experiment.run_harvest(m, cfg.target, cfg.tau, cfg.p, cfg.r, cfg.beta, cfg.exclude,
                                 ar_order=args.ar_order)
    harvest.save_model(run.model, out / "model.json",
                       extra={"t0_s": m.t0_s, "n_train": run.task.n_train})
    harvest.save_model(run.ar_model, out / "ar_model.json")

    task = run.task
    rows = [("nrmse_train", run.nrmse_train), ("nrmse_test", run.nrmse_test),
            ("ar_nrmse_test", run.ar_nrmse_test), ("n_train", task.n_train),
            ("n_test", len(task.y_test)), ("n_features", len(task.feature_labels)),
            ("ar_order", args.ar_order)]
    _write(out / "fit_report.csv", _csv(("key", "value"), _params(cfg) + rows))
    ranked = evalkit.rank_features(run.model, args.top_k)
    _write(out / "ranking.csv", _csv(("rank", "series", "lag", "weight"),
                                     [(k + 1, s, lag, w) for k, (s, lag, w) in enumerate(ranked)]))
    ar_full = np.full(len(task.y), np.nan)
    ar_full[task.n_train:] = run.ar_test
    split = ["train"] * task.n_train + ["test"] * len(task.y_test)
    pred = np.concatenate([run.pred_train, run.pred_test])
    _write(out / "prediction.csv", _csv(("t", "split", "actual", "predicted", "ar"),
                                        zip(task.target_times.tolist(), split, task.y, pred, ar_full)))
    print(f"nrmse_train={run.nrmse_train:.4f} nrmse_test={run.nrmse_test:.4f} "
          f"ar_nrmse_test={run.ar_nrmse_test:.4f}")
    return EXIT_OK


def model_rows(m, model: harvest.HarvestModel):
    """Feature rows, target bins and actual target for a stored model."""
    names = list(model.series) + [model.target_name]
    missing = [n for n in names if n not in m.names]
    if missing:
        raise DataError(f"series required by the model are missing: {', '.join(missing)}")
    if model.norm_stats is None:
        raise DataError("model file carries no normalisation stats")
    normed, _ = normalize(m.select(names), model.norm_stats)
    fm = multiplex(normed, model.p)
    cols = [fm.column_labels.index(lbl) for lbl in model.feature_labels]
    n = m.T - model.tau
    if n < 1:
        raise DataError(f"{m.T} bins are too few for tau={model.tau}")
    times = np.arange(n) + model.tau
    return fm.values[:n][:, cols], times, normed.column(model.target_name)[times]


def cmd_predict(args) -> int:
    cfg = load_config(args)
    if not args.model:
        raise UsageError("--model is required")
    if not cfg.events:
        raise UsageError("--events is required")
    out = _out_dir(cfg)
    try:
        model = harvest.load_model(args.model)
    except (OSError, ValueError, KeyError) as exc:
        raise DataError(f"cannot load model {args.model}: {exc}") from None
    if not isinstance(model, harvest.HarvestModel):
        raise UsageError("predict needs a harvest model, not an AR model")
    m = bin_counts(_load_events(cfg.events), model.interval_s)
    X, times, actual = model_rows(m, model)
    pred = harvest.predict(model, X)
    _write(out / "prediction.csv", _csv(("t", "actual", "predicted"), zip(times.tolist(), actual, pred)))
    e = evalkit.nrmse(actual, pred)
    _write(out / "predict_report.csv", _csv(("key", "value"), [("nrmse", e), ("rows", len(pred))]))
    print(f"nrmse={e:.4f} over {len(pred)} rows")
    return EXIT_OK


def cmd_online(args) -> int:
    cfg = load_config(args)
    cfg.validate()
    out = _out_dir(cfg)
    m = _bin(cfg, _load_events(cfg.events))
    grid = _floats(args.grid)

    cells = []
    tasks = {}
    for r1 in grid:
        for r2 in grid:
            if r2 < r1:
                continue
            try:
                if r1 not in tasks:
                    tasks[r1] = build_task(m, cfg.target, cfg.tau, cfg.p, min(r1, 1 - 1e-12), cfg.exclude)[0]
                task = tasks[r1]
                pred, sched = harvest.online_fit_predict(task.X, task.y, r1, r2, cfg.beta, task.feature_labels)
                e = evalkit.nrmse(task.y[sched.start:], pred)
                cells.append((r1, r2, sched.delta, len(sched.rounds), e, "ok"))
            except (ValueError, KeyError, ArithmeticError) as exc:
                cells.append((r1, r2, 0, 0, float("nan"), "failed: " + str(exc).replace(",", ";")))
    if not any(c[-1] == "ok" for c in cells):
        raise DataError("every online grid cell failed")
    _write(out / "online_grid.csv", _csv(("r1", "r2", "delta", "rounds", "nrmse", "status"), cells))

    task, _ = build_task(m, cfg.target, cfg.tau, cfg.p, min(cfg.r1, 1 - 1e-12), cfg.exclude)
    pred, sched = harvest.online_fit_predict(task.X, task.y, cfg.r1, cfg.r2, cfg.beta, task.feature_labels)
    rows = []
    for k, rnd in enumerate(sched.rounds):
        a, b = rnd.predict_range
        for i in range(a, b):
            rows.append((int(task.target_times[i]), k + 1, task.y[i], pred[i - sched.start]))
    _write(out / "online_prediction.csv", _csv(("t", "round", "actual", "predicted"), rows))
    _write(out / "online_schedule.csv", _csv(
        ("round", "train_end", "predict_start", "predict_stop"),
        [(k + 1, rnd.train_end, *rnd.predict_range) for k, rnd in enumerate(sched.rounds)]))
    e = evalkit.nrmse(task.y[sched.start:], pred)
    print(f"r1={cfg.r1} r2={cfg.r2} delta={sched.delta} rounds={len(sched.rounds)} nrmse={e:.4f}")
    return EXIT_OK


def cmd_ablate(args) -> int:
    cfg = load_config(args)
    if args.model:
        try:
            stored = harvest.load_model(args.model)
        except (OSError, ValueError, KeyError) as exc:
            raise DataError(f"cannot load model {args.model}: {exc}") from None
        cfg.tau, cfg.p, cfg.interval_s, cfg.beta, cfg.target = (
            stored.tau, stored.p, stored.interval_s, stored.beta, stored.target_name)
    cfg.validate()
    out = _out_dir(cfg)
    m = _bin(cfg, _load_events(cfg.events))
    feature_names = list(stored.series) if args.model else None
    run = experiment.run_harvest(m, cfg.target, cfg.tau, cfg.p, cfg.r, cfg.beta, cfg.exclude,
                                 feature_names=feature_names)
    model, task = run.model, run.task
    if args.model:
        model = stored
        if model.feature_labels != tuple(task.feature_labels):
            raise DataError("stored model features do not match the events file")
        run.pred_test = harvest.predict(model, task.X_test)

    if args.remove_top:
        removed = evalkit.top_series(model, args.remove_top)
    else:
        removed = _names(args.remove or "")
    missing = [s for s in removed if s not in model.series]
    if missing:
        raise UsageError(f"series not among the model features: {', '.join(missing)}")

    Xtr, _ = harvest.drop_series(task.X_train, task.feature_labels, removed)
    Xte, _ = harvest.drop_series(task.X_test, task.feature_labels, removed)
    try:
        fixed = harvest.ablate(model, harvest.AblationSpec(removed, harvest.FIXED))
        relearn = harvest.ablate(model, harvest.AblationSpec(removed, harvest.RELEARN), task.X_train, task.y_train)
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    preds = {"full": harvest.predict(model, task.X_test),
             "fixed": harvest.predict(fixed, Xte),
             "relearn": harvest.predict(relearn, Xte)}
    report = [
        ("full", "", evalkit.nrmse(task.y_test, preds["full"]),
         harvest.ridge_objective(model, task.X_train, task.y_train)),
        ("fixed", " ".join(removed), evalkit.nrmse(task.y_test, preds["fixed"]),
         harvest.ridge_objective(fixed, Xtr, task.y_train)),
        ("relearn", " ".join(removed), evalkit.nrmse(task.y_test, preds["relearn"]),
         harvest.ridge_objective(relearn, Xtr, task.y_train)),
    ]
    _write(out / "ablation_report.csv", _csv(("mode", "removed", "nrmse_test", "train_objective"), report))
    times = task.target_times[task.n_train:].tolist()
    _write(out / "ablation_prediction.csv", _csv(
        ("t", "actual", "full", "fixed", "relearn"),
        zip(times, task.y_test, preds["full"], preds["fixed"], preds["relearn"])))
    print(f"removed {' '.join(removed) or '(none)'}: " +
          " ".join(f"{mode}={e:.4f}" for mode, _, e, _ in report))
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = load_config(args)
    cfg.validate()
    taus, intervals = _ints(args.taus), _floats(args.intervals)
    if not taus or not intervals:
        raise UsageError("empty sweep ranges")
    out = _out_dir(cfg)
    events = _load_events(cfg.events)
    try:
        res = evalkit.sweep(events, cfg.target, taus, intervals, cfg.p, cfg.r, cfg.beta, cfg.exclude)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    _write(out / "sweep.csv", res.to_csv())
    ok = [c for c in res.cells() if c[3] == evalkit.OK]
    best = min(ok, key=lambda c: c[2])
    print(f"{len(ok)}/{len(taus) * len(intervals)} cells ok; best tau={best[0]} interval={best[1]:g} "
          f"nrmse={best[2]:.4f}")
    return EXIT_OK


def _prediction_columns(path: str, split: str | None):
    cols = plotting.read_table(path, ("t",))
    if split and "split" in cols:
        keep = [i for i, s in enumerate(cols["split"]) if s == split]
    else:
        keep = list(range(len(cols["t"])))
    data = {}
    for k, v in cols.items():
        if k in ("t", "split", "round"):
            continue
        arr = plotting.floats([v[i] for i in keep], path)
        if np.all(np.isfinite(arr)):
            data[k] = arr
    return data


def cmd_spectrum(args) -> int:
    cfg = load_config(args)
    out = _out_dir(cfg)
    series: dict[str, np.ndarray] = {}
    if args.prediction:
        series = _prediction_columns(args.prediction, args.split)
    else:
        if not cfg.events:
            raise UsageError("give --prediction or --events with --series")
        m = _bin(cfg, _load_events(cfg.events))
        names = _names(args.series) if args.series else [cfg.target]
        if args.model:
            model = harvest.load_model(args.model)
            names += [s for s in evalkit.top_series(model, args.top_k) if s not in names]
        for name in names:
            try:
                series[name] = m.column(name)
            except KeyError as exc:
                raise DataError(str(exc)) from None
    if not series:
        raise DataError("no series to analyse")
    for name, y in series.items():
        _write(out / f"spectrum_{name}.csv", evalkit.power_spectrum(y).to_csv())
    return EXIT_OK


def _cloud_csv(cloud: evalkit.AttractorCloud) -> str:
    header = [f"lag{j}" for j in range(cloud.dim)]
    return _csv(header, cloud.points.tolist())


def cmd_embed(args) -> int:
    cfg = load_config(args)
    out = _out_dir(cfg)
    if args.prediction:
        series = _prediction_columns(args.prediction, args.split)
    elif cfg.events and args.series:
        m = _bin(cfg, _load_events(cfg.events))
        series = {n: m.column(n) for n in _names(args.series)}
    else:
        raise UsageError("give --prediction, or --events with --series")
    for name, y in series.items():
        _write(out / f"attractor_{name}.csv", _cloud_csv(evalkit.delay_embed(y, args.dim, args.lag)))
    return EXIT_OK


def _read_cloud(path: str) -> np.ndarray:
    cols = plotting.read_table(path)
    return np.column_stack([plotting.floats(v, path) for v in cols.values()])


def cmd_wd(args) -> int:
    cfg = load_config(args)
    rows = []
    if args.prediction:
        series = _prediction_columns(args.prediction, args.split)
        if "actual" not in series:
            raise DataError("prediction file has no 'actual' column")
        ref = evalkit.delay_embed(series.pop("actual"), args.dim, args.lag)
        for name, y in series.items():
            d = evalkit.wasserstein(ref, evalkit.delay_embed(y, args.dim, args.lag), args.max_points, cfg.seed)
            rows.append(("actual", name, d))
    elif args.a and args.b:
        d = evalkit.wasserstein(_read_cloud(args.a), _read_cloud(args.b), args.max_points, cfg.seed)
        rows.append((Path(args.a).stem, Path(args.b).stem, d))
    else:
        raise UsageError("give --prediction, or both --a and --b attractor files")
    out = _out_dir(cfg)
    _write(out / "wd.csv", _csv(("a", "b", "wd"), rows))
    for a, b, d in rows:
        print(f"WD({a}, {b}) = {d:.6f}")
    return EXIT_OK


def cmd_report(args) -> int:
    run_dir = Path(args.run)
    if not run_dir.is_dir():
        raise DataError(f"run directory not found: {run_dir}")
    try:
        made = plotting.render_run(run_dir, args.out)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    if not made:
        raise DataError(f"no recognised artifacts in {run_dir}")
    for p in made:
        print(p)
    return EXIT_OK


# -- parser -----------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser, data: bool = True) -> None:
    p.add_argument("--config", help="JSON run config; flags override its values")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int)
    if not data:
        return
    p.add_argument("--events", help="event CSV (time_s,series,count)")
    p.add_argument("--target", help="target series (default 5e)")
    p.add_argument("--tau", type=int, help="forecast horizon in bins (default 7)")
    p.add_argument("--interval", dest="interval_s", type=float, help="bin width in seconds (default 18)")
    p.add_argument("--p", type=int, help="maximum feature shift (default 6)")
    p.add_argument("--beta", type=float, help="ridge parameter (default 1e-3)")
    p.add_argument("--r", type=float, help="training fraction (default 0.8)")
    p.add_argument("--exclude", help="comma list of series kept out of the features (default 5n,5s,5w)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="harvestkit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a signalised lattice and log crossings")
    _add_common(p, data=False)
    p.add_argument("--rows", type=int, default=4)
    p.add_argument("--cols", type=int, default=4)
    p.add_argument("--steps", type=int, default=16000)
    p.add_argument("--per-link", type=float, default=10.0, help="initial vehicles per link")
    p.add_argument("--period-min", type=float, default=8.0, help="shortest signal period (steps)")
    p.add_argument("--period-max", type=float, default=16.0, help="longest signal period (steps)")
    p.add_argument("--seconds-per-step", type=float, default=1.0)
    p.add_argument("--switch-at", type=int, help="redraw signal periods at this step")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit the readout and the AR baseline")
    _add_common(p)
    p.add_argument("--ar-order", type=int, default=6)
    p.add_argument("--top-k", type=int, default=10)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="apply a stored model to an events file")
    _add_common(p, data=False)
    p.add_argument("--model", required=True)
    p.add_argument("--events", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("online", help="real-time refitting over an (r1, r2) grid")
    _add_common(p)
    p.add_argument("--r1", type=float, help="first training fraction for the detailed run")
    p.add_argument("--r2", type=float, help="update ratio for the detailed run")
    p.add_argument("--grid", default="0.1:0.9:0.1", help="r values for the grid")
    p.set_defaults(func=cmd_online)

    p = sub.add_parser("ablate", help="remove series from the readout in both modes")
    _add_common(p)
    p.add_argument("--model", help="use a stored model instead of fitting")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--remove", help="comma list of series to remove, e.g. 9w,9s,8n")
    g.add_argument("--remove-top", type=int, help="remove the k series with the largest |weight|")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("sweep", help="test NRMSE over a (tau x interval) grid")
    _add_common(p)
    p.add_argument("--taus", default="7:15", help="comma list or start:stop[:step]")
    p.add_argument("--intervals", default="6:30:6", help="comma list or start:stop[:step] in seconds")
    p.set_defaults(func=cmd_sweep)

    for name, fn, helptext in (("spectrum", cmd_spectrum, "power spectra of series"),
                               ("embed", cmd_embed, "delay-coordinate attractors"),
                               ("wd", cmd_wd, "Wasserstein distance between attractors")):
        p = sub.add_parser(name, help=helptext)
        _add_common(p)
        p.add_argument("--prediction", help="prediction CSV; every numeric column is used")
        p.add_argument("--split", default="test", help="rows of a fit prediction file to use")
        if name in ("spectrum", "embed"):
            p.add_argument("--series", help="comma list of series from the events file")
        if name == "spectrum":
            p.add_argument("--model", help="add the model's top-ranked series")
            p.add_argument("--top-k", type=int, default=3)
        if name in ("embed", "wd"):
            p.add_argument("--dim", type=int, default=3)
            p.add_argument("--lag", type=int, default=1)
        if name == "wd":
            p.add_argument("--a", help="attractor CSV")
            p.add_argument("--b", help="attractor CSV")
            p.add_argument("--max-points", type=int, default=512)
        p.set_defaults(func=fn)

    p = sub.add_parser("report", help="render SVG figures from a run directory")
    p.add_argument("run", help="directory holding artifact CSVs")
    p.add_argument("--out", help="where to write SVGs (default: the run directory)")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, CausalityError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (harvest.NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, ParseError, KeyError, ValueError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
