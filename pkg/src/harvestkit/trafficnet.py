"""Signal-gated traffic reservoir on a directed lattice.

Vehicles are a fluid quantity living on directed links.  At every step each
link whose approach is shown a green light releases its whole load, which is
redistributed over the (at most three) legal out-going links of its head node
by a fixed column-stochastic transition matrix.  Links facing red keep their
load, so the total number of vehicles on a torus never changes.

Link counts are advanced as::

    X(k+1) = W (g(k) * X(k)) + (1 - g(k)) * X(k)

where ``g(k)`` is the 0/1 gate vector derived from each node's signal phase.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

TWO_PI = 2.0 * np.pi

DIRECTIONS = ("n", "s", "e", "w")
# row/col offsets of the neighbour lying in each compass direction
_OFFSETS = {"n": (-1, 0), "s": (1, 0), "e": (0, 1), "w": (0, -1)}
_OPPOSITE = {"n": "s", "s": "n", "e": "w", "w": "e"}

NS = "NS"
EW = "EW"


class DimensionError(ValueError):
    """Raised for lattice sizes or state vectors of the wrong shape."""


@dataclass(frozen=True)
class SignalSpec:
    """Periodic signal at one intersection.

    ``theta0`` is the initial phase, ``tau`` the phase advance per step and
    ``axis_offset`` the extra phase seen by the east-west approaches.
    """

    theta0: float
    tau: float
    axis_offset: float = np.pi

    def __post_init__(self):
        # tau == 0 freezes the signal in its initial phase
        if not self.tau >= 0:
            raise ValueError(f"signal rate must be non-negative, got {self.tau}")
        if not 0.0 <= self.theta0 < TWO_PI:
            raise ValueError(f"theta0 must lie in [0, 2pi), got {self.theta0}")
        if not 0.0 <= self.axis_offset < TWO_PI:
            raise ValueError(f"axis_offset must lie in [0, 2pi), got {self.axis_offset}")

    @property
    def period(self) -> float:
        return TWO_PI / self.tau if self.tau > 0 else np.inf


@dataclass(frozen=True)
class SignalTemplate:
    """Ranges from which per-node signals are drawn by :func:`build_lattice`.

    Periods (in steps) are drawn uniformly from ``period_range``; the initial
    phase is uniform on [0, 2pi) unless ``theta0`` is fixed.
    """

    period_range: tuple[float, float] = (8.0, 16.0)
    axis_offset: float = np.pi
    theta0: float | None = None

    def __post_init__(self):
        lo, hi = self.period_range
        if not 0 < lo <= hi:
            raise ValueError(f"invalid period range {self.period_range}")


@dataclass(frozen=True)
class Link:
    id: int
    tail: int
    head: int
    direction: str  # approach side at the head node: vehicles arrive *from* here

    @property
    def axis(self) -> str:
        return NS if self.direction in ("n", "s") else EW


@dataclass(frozen=True, eq=False)
class LatticeNetwork:
    rows: int
    cols: int
    links: tuple[Link, ...]
    W: np.ndarray
    signals: tuple[SignalSpec, ...]
    torus: bool = True
    seed: int | None = None

    @property
    def n_links(self) -> int:
        return len(self.links)

    @property
    def n_nodes(self) -> int:
        return self.rows * self.cols

    def node_id(self, node: int) -> str:
        """Intersection number used in series names (1-based, row-major)."""
        return str(node + 1)

    def link_name(self, link: Link | int) -> str:
        if isinstance(link, (int, np.integer)):
            link = self.links[int(link)]
        return f"{self.node_id(link.head)}{link.direction}"

    @property
    def link_names(self) -> list[str]:
        return [self.link_name(lk) for lk in self.links]

    def link_index(self, name: str) -> int:
        try:
            return self.link_names.index(name)
        except ValueError:
            raise KeyError(f"no link named {name!r}") from None

    def __eq__(self, other):
        if not isinstance(other, LatticeNetwork):
            return NotImplemented
        return (
            self.rows == other.rows
            and self.cols == other.cols
            and self.links == other.links
            and self.signals == other.signals
            and self.torus == other.torus
            and np.array_equal(self.W, other.W)
        )


@dataclass(frozen=True, eq=False)
class TrafficState:
    """Vehicle load per link at step ``step``.

    External input is part of the reservoir equation but is held at zero so
    that the number of vehicles is preserved; non-zero values are rejected.
    """

    counts: np.ndarray
    step: int = 0
    external_weights: np.ndarray | None = None
    external_input: np.ndarray | None = None

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=float)
        if counts.ndim != 1:
            raise DimensionError("counts must be a vector")
        if np.any(counts < 0):
            raise ValueError("counts must be non-negative")
        object.__setattr__(self, "counts", counts)
        for name in ("external_weights", "external_input"):
            val = getattr(self, name)
            if val is not None and np.any(np.asarray(val) != 0):
                raise ValueError(f"{name} must be zero: external inflow is not modelled")

    @property
    def total(self) -> float:
        return float(self.counts.sum())

    def __eq__(self, other):
        if not isinstance(other, TrafficState):
            return NotImplemented
        return self.step == other.step and np.array_equal(self.counts, other.counts)


@dataclass(frozen=True)
class CrossingRecord:
    time_s: float
    node_id: str
    direction: str
    count: float

    @property
    def series(self) -> str:
        return f"{self.node_id}{self.direction}"


@dataclass
class CrossingLog:
    records: list[CrossingRecord] = field(default_factory=list)

    def __post_init__(self):
        self.records.sort(key=lambda r: (r.time_s, r.node_id, r.direction))

    def __len__(self):
        return len(self.records)

    def to_csv(self) -> str:
        """Render in the event CSV format read by :func:`harvestkit.ingest.parse_events`."""
        lines = ["time_s,series,count"]
        lines.extend(f"{r.time_s!r},{r.series},{r.count!r}" for r in self.records)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "CrossingLog":
        from .ingest import parse_events

        log = parse_events(text)
        recs = [
            CrossingRecord(float(t), name[:-1], name[-1], float(c))
            for t, name, c in zip(log.times, log.series, log.counts)
        ]
        return cls(recs)


def _node_index(r: int, c: int, cols: int) -> int:
    return r * cols + c


def build_lattice(
    rows: int,
    cols: int,
    signal_config: SignalTemplate | SignalSpec | None = None,
    seed: int = 0,
    torus: bool = True,
) -> LatticeNetwork:
    """Build a random directed lattice with signalised nodes.

    Every pair of neighbouring nodes is joined by two links, one per
    direction.  Each in-coming link splits its released load over the
    straight, left and right exits with probabilities drawn uniformly on the
    simplex; U-turns are not allowed.

    Parameters
    ----------
    rows, cols : int
        Lattice size, both at least 2.
    signal_config : SignalTemplate or SignalSpec, optional
        A template to draw per-node signals from, or one spec copied to all
        nodes.
    seed : int
        Seed for the transition probabilities and signal draws.
    torus : bool
        Wrap the lattice at its edges.  Open boundaries drop the links that
        would leave the grid.
    """
    if rows < 2 or cols < 2:
        raise DimensionError(f"lattice needs rows, cols >= 2, got {rows}x{cols}")
    rng = np.random.default_rng(seed)
    signal_config = SignalTemplate() if signal_config is None else signal_config

    links: list[Link] = []
    # out_link[(node, exit_direction)] -> link id
    out_link: dict[tuple[int, str], int] = {}
    for r in range(rows):
        for c in range(cols):
            tail = _node_index(r, c, cols)
            for d in DIRECTIONS:
                dr, dc = _OFFSETS[d]
                rr, cc = r + dr, c + dc
                if torus:
                    rr, cc = rr % rows, cc % cols
                elif not (0 <= rr < rows and 0 <= cc < cols):
                    continue
                head = _node_index(rr, cc, cols)
                lid = len(links)
                # leaving towards d means arriving from the opposite side
                links.append(Link(lid, tail, head, _OPPOSITE[d]))
                out_link[(tail, d)] = lid

    n = len(links)
    W = np.zeros((n, n))
    for lk in links:
        # arriving from side d, the exit back towards d is a U-turn
        exits = [
            out_link[(lk.head, d)]
            for d in DIRECTIONS
            if d != lk.direction and (lk.head, d) in out_link
        ]
        probs = rng.dirichlet(np.ones(len(exits)))
        W[exits, lk.id] = probs / probs.sum()

    if isinstance(signal_config, SignalSpec):
        signals = tuple(signal_config for _ in range(rows * cols))
    else:
        lo, hi = signal_config.period_range
        periods = rng.uniform(lo, hi, size=rows * cols)
        if signal_config.theta0 is None:
            phases = rng.uniform(0.0, TWO_PI, size=rows * cols)
        else:
            phases = np.full(rows * cols, signal_config.theta0)
        signals = tuple(
            SignalSpec(float(th) % TWO_PI, float(TWO_PI / per), signal_config.axis_offset)
            for th, per in zip(phases, periods)
        )
    return LatticeNetwork(rows, cols, tuple(links), W, signals, torus, seed)


def with_signals(net: LatticeNetwork, signals: SignalTemplate | Sequence[SignalSpec], seed: int = 0):
    """Copy of ``net`` with new signals but the same roads and turning ratios."""
    if isinstance(signals, SignalTemplate):
        fresh = build_lattice(net.rows, net.cols, signals, seed=seed, torus=net.torus)
        signals = fresh.signals
    signals = tuple(signals)
    if len(signals) != net.n_nodes:
        raise DimensionError(f"need {net.n_nodes} signals, got {len(signals)}")
    return replace(net, signals=signals)


def _phase(spec: SignalSpec, step, axis: str):
    offset = 0.0 if axis == NS else spec.axis_offset
    return np.mod(spec.theta0 + spec.tau * step + offset, TWO_PI)


def signal_gate(spec: SignalSpec, step: int, approach_axis: str) -> str:
    """``"go"`` when the approach's phase lies strictly inside (0, pi)."""
    if approach_axis not in (NS, EW):
        raise ValueError(f"approach axis must be {NS!r} or {EW!r}")
    ph = _phase(spec, step, approach_axis)
    return "go" if 0.0 < ph < np.pi else "stop"


def _gate_arrays(net: LatticeNetwork):
    theta0 = np.array([net.signals[lk.head].theta0 for lk in net.links])
    tau = np.array([net.signals[lk.head].tau for lk in net.links])
    offset = np.array(
        [0.0 if lk.axis == NS else net.signals[lk.head].axis_offset for lk in net.links]
    )
    return theta0, tau, offset


def gate_vector(net: LatticeNetwork, step: int) -> np.ndarray:
    """0/1 release vector over links at ``step``."""
    theta0, tau, offset = _gate_arrays(net)
    ph = np.mod(theta0 + tau * step + offset, TWO_PI)
    return ((ph > 0.0) & (ph < np.pi)).astype(float)


def _advance(W, counts, g):
    released = g * counts
    return W @ released + (counts - released), released


def step(net: LatticeNetwork, state: TrafficState) -> tuple[TrafficState, np.ndarray]:
    """Advance one step; returns the new state and the released load per link."""
    if state.counts.shape != (net.n_links,):
        raise DimensionError(
            f"state has {state.counts.shape[0]} links, network has {net.n_links}"
        )
    g = gate_vector(net, state.step)
    new, released = _advance(net.W, state.counts, g)
    return TrafficState(new, state.step + 1), released


def simulate(
    net: LatticeNetwork,
    init: TrafficState,
    steps: int,
    seconds_per_step: float = 1.0,
) -> tuple[list[TrafficState], CrossingLog]:
    """Run ``steps`` steps from ``init``.

    Every positive release becomes one crossing record stamped with the
    release step's start time ``k * seconds_per_step``.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if not seconds_per_step > 0:
        raise ValueError("seconds_per_step must be positive")
    if init.counts.shape != (net.n_links,):
        raise DimensionError(
            f"state has {init.counts.shape[0]} links, network has {net.n_links}"
        )

    theta0, tau, offset = _gate_arrays(net)
    names = [(net.node_id(lk.head), lk.direction) for lk in net.links]
    # emit records in (node_id, direction) order within a step
    order = sorted(range(net.n_links), key=lambda i: names[i])

    trajectory = [init]
    records: list[CrossingRecord] = []
    counts = init.counts
    k0 = init.step
    for k in range(k0, k0 + steps):
        ph = np.mod(theta0 + tau * k + offset, TWO_PI)
        g = ((ph > 0.0) & (ph < np.pi)).astype(float)
        counts, released = _advance(net.W, counts, g)
        trajectory.append(TrafficState(counts, k + 1))
        t = k * seconds_per_step
        for i in order:
            if released[i] > 0:
                node, d = names[i]
                records.append(CrossingRecord(t, node, d, float(released[i])))
    return trajectory, CrossingLog(records)


def released_matrix(trajectory: Sequence[TrafficState], net: LatticeNetwork) -> np.ndarray:
    """Recompute the (steps x links) released loads along a trajectory."""
    out = np.empty((len(trajectory) - 1, net.n_links))
    for i, st in enumerate(trajectory[:-1]):
        out[i] = gate_vector(net, st.step) * st.counts
    return out


def uniform_state(net: LatticeNetwork, per_link: float = 10.0) -> TrafficState:
    return TrafficState(np.full(net.n_links, float(per_link)))


# -- serialisation ----------------------------------------------------------

def network_to_dict(net: LatticeNetwork) -> dict:
    rows_i, cols_i = np.nonzero(net.W)
    return {
        "rows": net.rows,
        "cols": net.cols,
        "torus": net.torus,
        "seed": net.seed,
        "links": [
            {
                "id": lk.id,
                "tail": net.node_id(lk.tail),
                "head": net.node_id(lk.head),
                "direction": lk.direction,
                "name": net.link_name(lk),
            }
            for lk in net.links
        ],
        # (out_link, in_link, probability)
        "W": [[int(i), int(j), float(net.W[i, j])] for i, j in zip(rows_i, cols_i)],
        "signals": [
            {"theta0": s.theta0, "tau": s.tau, "axis_offset": s.axis_offset}
            for s in net.signals
        ],
    }


def network_from_dict(d: dict) -> LatticeNetwork:
    links = tuple(
        Link(int(x["id"]), int(x["tail"]) - 1, int(x["head"]) - 1, x["direction"])
        for x in d["links"]
    )
    n = len(links)
    W = np.zeros((n, n))
    for i, j, v in d["W"]:
        W[int(i), int(j)] = float(v)
    signals = tuple(SignalSpec(**s) for s in d["signals"])
    return LatticeNetwork(
        int(d["rows"]), int(d["cols"]), links, W, signals, bool(d["torus"]), d.get("seed")
    )


def save_network(net: LatticeNetwork, path: str | Path) -> None:
    Path(path).write_text(json.dumps(network_to_dict(net), indent=1) + "\n", encoding="utf-8")


def load_network(path: str | Path) -> LatticeNetwork:
    return network_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def trajectory_to_csv(trajectory: Iterable[TrafficState], names: Sequence[str]) -> str:
    lines = ["step," + ",".join(names)]
    for st in trajectory:
        lines.append(f"{st.step}," + ",".join(repr(float(v)) for v in st.counts))
    return "\n".join(lines) + "\n"
