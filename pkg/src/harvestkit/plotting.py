"""SVG views of run artifacts.

Every figure is drawn from numbers read back out of the run's CSV files;
nothing is recomputed here.  Output is byte-stable: no timestamps and a
fixed id salt.
"""

from __future__ import annotations

import csv
import io
import re
from pathlib import Path
from typing import Sequence

import matplotlib
import numpy as np
from matplotlib import colormaps
from matplotlib.colors import Normalize, to_hex
from matplotlib.figure import Figure
from matplotlib.patches import Rectangle

from .ingest import ParseError

CMAP = "viridis"
FAILED_COLOR = "#bbbbbb"

STYLE = {
    "svg.hashsalt": "harvestkit",
    "svg.fonttype": "path",
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def read_table(path: str | Path, required: Sequence[str] = ()) -> dict[str, list[str]]:
    """Columns of a headed CSV as lists of strings."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from None
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or not rows[0]:
        raise ParseError(f"{path}: empty file")
    header = rows[0]
    missing = [c for c in required if c not in header]
    if missing:
        raise ParseError(f"{path}: missing columns {', '.join(missing)}")
    cols: dict[str, list[str]] = {h: [] for h in header}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(f"{path}: line {lineno}: expected {len(header)} fields, got {len(row)}")
        for h, v in zip(header, row):
            cols[h].append(v)
    return cols


def floats(values: Sequence[str], where: str = "") -> np.ndarray:
    try:
        return np.array([float(v) for v in values], dtype=float)
    except ValueError as exc:
        raise ParseError(f"{where}: {exc}") from None


def _save(fig: Figure, path: Path) -> Path:
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    return path


def heatmap(
    row_values: Sequence,
    col_values: Sequence,
    grid: np.ndarray,
    path: str | Path,
    row_label: str,
    col_label: str,
    title: str = "",
) -> Path:
    """Colour grid with one tagged rectangle per cell (``gid="cell-i-j"``).

    NaN cells are drawn grey and tagged ``cell-i-j-failed``.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("nothing to plot: empty grid")
    finite = grid[np.isfinite(grid)]
    if finite.size == 0:
        raise ValueError("nothing to plot: every cell failed")
    norm = Normalize(finite.min(), finite.max() if finite.max() > finite.min() else finite.min() + 1)
    cmap = colormaps[CMAP]
    with matplotlib.rc_context(STYLE):
        fig = Figure(figsize=(1.2 + 0.5 * len(col_values), 1.0 + 0.4 * len(row_values)))
        ax = fig.add_subplot()
        for i in range(grid.shape[0]):
            for j in range(grid.shape[1]):
                v = grid[i, j]
                if np.isfinite(v):
                    rect = Rectangle((j, i), 1, 1, facecolor=to_hex(cmap(norm(v))), edgecolor="none")
                    rect.set_gid(f"cell-{i}-{j}")
                else:
                    rect = Rectangle((j, i), 1, 1, facecolor=FAILED_COLOR, edgecolor="none", hatch="//")
                    rect.set_gid(f"cell-{i}-{j}-failed")
                ax.add_patch(rect)
        ax.set_xlim(0, grid.shape[1])
        ax.set_ylim(0, grid.shape[0])
        ax.set_xticks(np.arange(grid.shape[1]) + 0.5, [f"{v:g}" for v in col_values])
        ax.set_yticks(np.arange(grid.shape[0]) + 0.5, [f"{v:g}" for v in row_values])
        ax.set_xlabel(col_label)
        ax.set_ylabel(row_label)
        if title:
            ax.set_title(title)
        sm = matplotlib.cm.ScalarMappable(norm=norm, cmap=cmap)
        fig.colorbar(sm, ax=ax, label="NRMSE")
        fig.tight_layout()
        return _save(fig, Path(path))


_CELL_RE = re.compile(r'<g id="(cell-\d+-\d+(?:-failed)?)">\s*<path[^>]*style="fill:\s*(#[0-9a-fA-F]{6}|url\(#[^)]+\))')


def svg_cell_fills(svg_text: str) -> dict[str, str]:
    """Map of cell gid to fill in a heatmap SVG.

    Finite cells map to a hex colour; hatched failed cells to their pattern ``url(...)``.
    """
    return {gid: color.lower() for gid, color in _CELL_RE.findall(svg_text)}


def colormap_position(hex_color: str, n: int = 256) -> int:
    """Index of the nearest entry in the heatmap colormap sampled at ``n`` points."""
    table = colormaps[CMAP](np.linspace(0, 1, n))[:, :3]
    rgb = np.array([int(hex_color[k:k + 2], 16) / 255 for k in (1, 3, 5)])
    return int(np.argmin(((table - rgb) ** 2).sum(axis=1)))


def line_plot(t: np.ndarray, series: dict[str, np.ndarray], path: str | Path, title: str = "") -> Path:
    with matplotlib.rc_context(STYLE):
        fig = Figure(figsize=(7.0, 2.8))
        ax = fig.add_subplot()
        for k, (name, y) in enumerate(series.items()):
            ax.plot(t, y, lw=1.0 if k == 0 else 0.9, color="k" if k == 0 else None,
                    ls="-" if k == 0 else "--", label=name)
        ax.set_xlabel("time step")
        ax.set_ylabel("normalised volume")
        ax.legend(loc="upper right", frameon=False, ncols=len(series))
        if title:
            ax.set_title(title)
        fig.tight_layout()
        return _save(fig, Path(path))


def attractor_plot(clouds: dict[str, np.ndarray], path: str | Path) -> Path:
    with matplotlib.rc_context(STYLE):
        n = len(clouds)
        fig = Figure(figsize=(3.0 * n, 3.0))
        for k, (name, pts) in enumerate(clouds.items()):
            ax = fig.add_subplot(1, n, k + 1, projection="3d" if pts.shape[1] >= 3 else None)
            if pts.shape[1] >= 3:
                ax.scatter(pts[:, 0], pts[:, 1], pts[:, 2], s=2, depthshade=False)
                ax.set_zlabel("y(t-2)")
            else:
                ax.scatter(pts[:, 0], pts[:, 1], s=2)
            ax.set_xlabel("y(t)")
            ax.set_ylabel("y(t-1)")
            ax.set_title(name)
        return _save(fig, Path(path))


def spectrum_plot(spectra: dict[str, tuple[np.ndarray, np.ndarray]], path: str | Path) -> Path:
    with matplotlib.rc_context(STYLE):
        fig = Figure(figsize=(5.0, 3.2))
        ax = fig.add_subplot()
        for name, (f, pw) in spectra.items():
            keep = (f > 0) & (pw > 0)
            ax.loglog(f[keep], pw[keep], lw=0.9, label=name)
        ax.set_xlabel("frequency (cycles / bin)")
        ax.set_ylabel("power")
        ax.legend(frameon=False)
        fig.tight_layout()
        return _save(fig, Path(path))


# -- artifact readers -----------------------------------------------------------

def plot_sweep(csv_path: str | Path, out: str | Path) -> Path:
    cols = read_table(csv_path, ("tau", "interval_s", "nrmse", "status"))
    if not cols["tau"]:
        raise ParseError(f"{csv_path}: sweep has no cells")
    taus = sorted(set(int(v) for v in cols["tau"]))
    ivs = sorted(set(floats(cols["interval_s"], str(csv_path)).tolist()))
    grid = np.full((len(taus), len(ivs)), np.nan)
    vals = floats(cols["nrmse"], str(csv_path))
    for tau, iv, v, st in zip(cols["tau"], cols["interval_s"], vals, cols["status"]):
        if st == "ok":
            grid[taus.index(int(tau)), ivs.index(float(iv))] = v
    return heatmap(taus, ivs, grid, out, "tau (bins)", "interval (s)", "test NRMSE")


def plot_online_grid(csv_path: str | Path, out: str | Path) -> Path:
    cols = read_table(csv_path, ("r1", "r2", "nrmse", "status"))
    if not cols["r1"]:
        raise ParseError(f"{csv_path}: online grid has no cells")
    r1s = sorted(set(floats(cols["r1"], str(csv_path)).tolist()))
    r2s = sorted(set(floats(cols["r2"], str(csv_path)).tolist()))
    grid = np.full((len(r1s), len(r2s)), np.nan)
    for a, b, v, st in zip(cols["r1"], cols["r2"], cols["nrmse"], cols["status"]):
        if st == "ok":
            grid[r1s.index(float(a)), r2s.index(float(b))] = float(v)
    return heatmap(r1s, r2s, grid, out, "r1", "r2", "online NRMSE")


def plot_prediction(csv_path: str | Path, out: str | Path) -> Path:
    cols = read_table(csv_path, ("t", "actual"))
    t = floats(cols["t"], str(csv_path))
    skip = {"t", "split", "round"}
    series = {k: floats(v, str(csv_path)) for k, v in cols.items() if k not in skip}
    return line_plot(t, series, out, Path(csv_path).stem)


def plot_attractors(paths: Sequence[str | Path], out: str | Path) -> Path:
    clouds = {}
    for p in paths:
        cols = read_table(p)
        clouds[Path(p).stem.removeprefix("attractor_")] = np.column_stack(
            [floats(v, str(p)) for v in cols.values()]
        )
    return attractor_plot(clouds, out)


def plot_spectra(paths: Sequence[str | Path], out: str | Path) -> Path:
    spectra = {}
    for p in paths:
        cols = read_table(p, ("freq", "power"))
        spectra[Path(p).stem.removeprefix("spectrum_")] = (
            floats(cols["freq"], str(p)),
            floats(cols["power"], str(p)),
        )
    return spectrum_plot(spectra, out)


def render_run(run_dir: str | Path, out_dir: str | Path | None = None) -> list[Path]:
    """Render every recognised artifact CSV in ``run_dir`` to SVG."""
    run_dir = Path(run_dir)
    out_dir = Path(out_dir) if out_dir else run_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    made: list[Path] = []
    if (run_dir / "sweep.csv").exists():
        made.append(plot_sweep(run_dir / "sweep.csv", out_dir / "sweep_heatmap.svg"))
    if (run_dir / "online_grid.csv").exists():
        made.append(plot_online_grid(run_dir / "online_grid.csv", out_dir / "online_heatmap.svg"))
    for name in ("prediction", "online_prediction", "ablation_prediction"):
        if (run_dir / f"{name}.csv").exists():
            made.append(plot_prediction(run_dir / f"{name}.csv", out_dir / f"{name}.svg"))
    att = sorted(run_dir.glob("attractor_*.csv"))
    if att:
        made.append(plot_attractors(att, out_dir / "attractors.svg"))
    spec = sorted(run_dir.glob("spectrum_*.csv"))
    if spec:
        made.append(plot_spectra(spec, out_dir / "spectra.svg"))
    return made
