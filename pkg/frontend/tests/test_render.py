"""Tests for the triptych renderer.

The renderer consumes only the ten-column CSV contract, so most tests
fabricate CSVs directly; the last test drives the numerical package's
command line as an external process to render a real comparison grid,
and skips when that package is not installed.
"""

import subprocess
import sys

import numpy as np
import pytest

from panel_render import (EXPECTED_HEADER, ContractError, PanelSpec,
                          build_figure, load_grid, panel_series, render)


def write_grid_csv(path, n_rows=64, kde_equals_gaussian=False):
    """A well-formed contract CSV with smooth synthetic columns."""
    x = np.linspace(-4.0, 4.0, n_rows)
    phi = np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)
    cols = {
        "x": x,
        "gaussian": phi,
        "kde": phi if kde_equals_gaussian else phi * (1.0 + 0.05 * x),
        "edgeworth": phi * (1.0 + 0.1 * x ** 3 / 6.0),
        "gaussian_d1": -x * phi,
        "kde_d1": -x * phi if kde_equals_gaussian else -x * phi * 1.01,
        "edgeworth_d1": -x * phi * 0.99,
        "gaussian_d2": (x * x - 1.0) * phi,
        "kde_d2": (x * x - 1.0) * phi if kde_equals_gaussian
        else (x * x - 1.0) * phi * 0.98,
        "edgeworth_d2": (x * x - 1.0) * phi * 1.02,
    }
    names = EXPECTED_HEADER.split(",")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(EXPECTED_HEADER + "\n")
        for i in range(n_rows):
            fh.write(",".join(repr(float(cols[n][i])) for n in names) + "\n")
    return path


def test_load_grid_round_trips_columns(tmp_path):
    path = write_grid_csv(tmp_path / "grid.csv")
    grid = load_grid(path)
    assert sorted(grid) == sorted(EXPECTED_HEADER.split(","))
    assert grid["x"].shape == (64,)
    assert grid["gaussian"][32] > 0


def test_header_mismatch_is_rejected_quoting_the_contract(tmp_path):
    path = tmp_path / "bad.csv"
    shuffled = "x,kde,gaussian,edgeworth,gaussian_d1,kde_d1,edgeworth_d1," \
               "gaussian_d2,kde_d2,edgeworth_d2"
    path.write_text(shuffled + "\n0,0,0,0,0,0,0,0,0,0\n")
    with pytest.raises(ContractError) as err:
        load_grid(path)
    assert EXPECTED_HEADER in str(err.value)


def test_too_few_rows_is_rejected(tmp_path):
    path = tmp_path / "short.csv"
    path.write_text(EXPECTED_HEADER + "\n" + ",".join(["0.0"] * 10) + "\n")
    with pytest.raises(ContractError, match="at least 2"):
        load_grid(path)


def test_malformed_rows_are_rejected(tmp_path):
    path = tmp_path / "ragged.csv"
    path.write_text(EXPECTED_HEADER + "\n0,0,0\n")
    with pytest.raises(ContractError, match="fields"):
        load_grid(path)
    path.write_text(EXPECTED_HEADER + "\n"
                    + ",".join(["0.0"] * 9 + ["frog"]) + "\n"
                    + ",".join(["0.0"] * 10) + "\n")
    with pytest.raises(ContractError, match="non-numeric"):
        load_grid(path)


def test_figure_has_three_panels_with_the_legend_contract(tmp_path):
    grid = load_grid(write_grid_csv(tmp_path / "grid.csv"))
    fig = build_figure(grid, title="demo")
    try:
        axes = [ax for ax in fig.axes if ax.get_title()]
        assert len(axes) == 3
        assert [ax.get_title() for ax in axes] == \
            ["density", "first derivative", "second derivative"]
        for ax in axes:
            lines = ax.get_lines()[:3]
            assert [line.get_color() for line in lines] == \
                ["red", "blue", "green"]
        legend = axes[0].get_legend()
        assert [t.get_text() for t in legend.get_texts()] == \
            ["Gaussian", "KDE", "Edgeworth"]
    finally:
        import matplotlib.pyplot as plt
        plt.close(fig)


def test_render_writes_a_raster_image(tmp_path):
    path = write_grid_csv(tmp_path / "grid.csv")
    out = render(PanelSpec(csv_path=str(path), title="demo"))
    assert out == str(tmp_path / "grid.png")
    data = (tmp_path / "grid.png").read_bytes()
    assert len(data) > 1000
    assert data[:8] == b"\x89PNG\r\n\x1a\n"


def test_cli_entry_point(tmp_path):
    from panel_render.render import main
    path = write_grid_csv(tmp_path / "grid.csv")
    out = tmp_path / "fig.png"
    assert main([str(path), "--out", str(out), "--title", "demo"]) == 0
    assert out.stat().st_size > 1000
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\n1,2\n")
    assert main([str(bad)]) == 3
    assert main([str(tmp_path / "missing.csv")]) == 3


def test_identical_kde_and_gaussian_series_coincide(tmp_path):
    grid = load_grid(write_grid_csv(tmp_path / "same.csv",
                                    kde_equals_gaussian=True))
    for _title, series in panel_series(grid):
        by_label = {label: y for label, _color, y in series}
        dev = float(np.max(np.abs(by_label["Gaussian"] - by_label["KDE"])))
        assert dev == 0.0


def test_series_mapping_is_a_pure_function_of_the_csv(tmp_path):
    path = write_grid_csv(tmp_path / "grid.csv")
    first = panel_series(load_grid(path))
    second = panel_series(load_grid(path))
    for (t1, s1), (t2, s2) in zip(first, second):
        assert t1 == t2
        for (l1, c1, y1), (l2, c2, y2) in zip(s1, s2):
            assert (l1, c1) == (l2, c2)
            assert y1.tobytes() == y2.tobytes()


def test_renders_a_real_comparison_grid(tmp_path):
    """End-to-end: drive the numerical CLI, then render its artifact."""
    argv = [sys.executable, "-m", "chaos_edgeworth.cli", "compare",
            "--model", "fbm", "--hurst", "0.5", "--p", "2", "--n", "64",
            "--m", "1", "--samples", "100000", "--seed", "4242",
            "--grid=-8:8:1001", "--out", "compare.csv"]
    proc = subprocess.run(argv, cwd=tmp_path, capture_output=True,
                          text=True)
    if proc.returncode != 0 and "No module named" in proc.stderr:
        pytest.skip("numerical package not installed")
    assert proc.returncode == 0, proc.stderr
    out = render(PanelSpec(csv_path=str(tmp_path / "compare.csv"),
                           title="fbm, H=0.5, p=2, n=64, m=1"))
    assert (tmp_path / "compare.png").exists()
    assert (tmp_path / "compare.png").stat().st_size > 1000
    assert out.endswith("compare.png")
