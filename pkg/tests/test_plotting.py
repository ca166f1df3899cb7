import numpy as np
import pytest

from harvestkit import plotting
from harvestkit.ingest import ParseError


def test_heatmap_fills_follow_values(tmp_path):
    grid = np.array([[0.2, 0.4, 0.6], [0.8, np.nan, 1.0]])
    path = plotting.heatmap([7, 8], [6.0, 12.0, 18.0], grid, tmp_path / "h.svg", "tau", "interval")
    fills = plotting.svg_cell_fills(path.read_text())
    assert set(fills) == {"cell-0-0", "cell-0-1", "cell-0-2", "cell-1-0", "cell-1-1-failed", "cell-1-2"}
    order = ["cell-0-0", "cell-0-1", "cell-0-2", "cell-1-0", "cell-1-2"]
    pos = [plotting.colormap_position(fills[g]) for g in order]
    assert pos == sorted(pos)
    assert pos[0] == 0 and pos[-1] == 255
    assert fills["cell-1-1-failed"].startswith("url(#")


def test_heatmap_single_cell(tmp_path):
    path = plotting.heatmap([7], [18.0], np.array([[0.5]]), tmp_path / "one.svg", "tau", "interval")
    assert list(plotting.svg_cell_fills(path.read_text())) == ["cell-0-0"]


def test_heatmap_empty_raises(tmp_path):
    with pytest.raises(ValueError):
        plotting.heatmap([], [], np.zeros((0, 0)), tmp_path / "e.svg", "a", "b")
    with pytest.raises(ValueError):
        plotting.heatmap([1], [1], np.array([[np.nan]]), tmp_path / "e.svg", "a", "b")


def test_heatmap_bytes_stable(tmp_path):
    grid = np.arange(6.0).reshape(2, 3)
    a = plotting.heatmap([1, 2], [1, 2, 3], grid, tmp_path / "a.svg", "r", "c").read_bytes()
    b = plotting.heatmap([1, 2], [1, 2, 3], grid, tmp_path / "b.svg", "r", "c").read_bytes()
    assert a == b


def test_plot_sweep_from_csv(tmp_path):
    csv = tmp_path / "sweep.csv"
    csv.write_text(
        "tau,interval_s,nrmse,status\n"
        "7,6.0,0.5,ok\n7,12.0,0.7,ok\n8,6.0,nan,failed: too short\n8,12.0,0.9,ok\n"
    )
    fills = plotting.svg_cell_fills(plotting.plot_sweep(csv, tmp_path / "s.svg").read_text())
    assert "cell-1-0-failed" in fills and len(fills) == 4


@pytest.mark.parametrize(
    "text",
    ["", "tau,interval_s\n7,6\n", "tau,interval_s,nrmse,status\n7,6.0,abc,ok\n",
     "tau,interval_s,nrmse,status\n7,6.0\n"],
)
def test_malformed_csv_raises(tmp_path, text):
    csv = tmp_path / "sweep.csv"
    csv.write_text(text)
    with pytest.raises(ParseError):
        plotting.plot_sweep(csv, tmp_path / "s.svg")


def test_missing_file_raises(tmp_path):
    with pytest.raises(ParseError):
        plotting.read_table(tmp_path / "absent.csv")


def test_render_run_writes_expected(tmp_path):
    (tmp_path / "prediction.csv").write_text("t,actual,predicted\n1,0.1,0.2\n2,0.3,0.25\n3,0.2,0.2\n")
    (tmp_path / "spectrum_5e.csv").write_text("freq,power\n0.0,0.0\n0.25,1.0\n0.5,0.5\n")
    (tmp_path / "attractor_5e.csv").write_text("lag0,lag1,lag2\n1,2,3\n2,3,4\n3,4,5\n")
    written = {p.name for p in plotting.render_run(tmp_path)}
    assert {"prediction.svg", "spectra.svg", "attractors.svg"} <= written
    for name in written:
        assert (tmp_path / name).read_text().startswith("<?xml")
