"""Render density/derivative triptychs from the ten-column CSV contract.

This is a dumb view layer: it never recomputes statistics, it just maps
the columns of a comparison CSV onto one row of three panels (density,
first derivative, second derivative), each overlaying the Gaussian
reference (red), the kernel density estimate (blue), and the corrected
signed density (green), with legend labels "Gaussian", "KDE",
"Edgeworth".  The mapping is a pure function of the CSV bytes plus the
spec, so re-rendering identical inputs yields an identical series
mapping.

Script usage::

    render_panels <csv> [--out <png>] [--title <str>]

Exit codes: 0 ok; 2 usage error; 3 contract or I/O error.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402


EXPECTED_HEADER = ("x,gaussian,kde,edgeworth,"
                   "gaussian_d1,kde_d1,edgeworth_d1,"
                   "gaussian_d2,kde_d2,edgeworth_d2")

# (panel title, column suffix); the legend/color order is fixed.
_PANELS = (("density", ""),
           ("first derivative", "_d1"),
           ("second derivative", "_d2"))
_SERIES = (("Gaussian", "red", "gaussian"),
           ("KDE", "blue", "kde"),
           ("Edgeworth", "green", "edgeworth"))


class ContractError(ValueError):
    """The input file does not follow the comparison-CSV contract."""


@dataclass(frozen=True)
class PanelSpec:
    """One rendering job: input CSV, optional title, output image path.

    ``out_path`` defaults to the CSV path with a ``.png`` suffix.  The
    columns-to-series mapping is fixed by the ten-column contract and is
    not configurable.
    """

    csv_path: str
    title: str = ""
    out_path: str | None = None

    @property
    def resolved_out(self) -> str:
        if self.out_path is not None:
            return self.out_path
        root, _ = os.path.splitext(self.csv_path)
        return root + ".png"


def load_grid(csv_path: str) -> dict:
    """Read a contract CSV into ``{column name: float array}``.

    Raises
    ------
    ContractError
        If the header differs from the exact contract string (the
        message quotes the expected header), a row has the wrong width
        or a non-numeric entry, or fewer than 2 data rows are present.
    """
    with open(csv_path, newline="", encoding="utf-8") as fh:
        first = fh.readline().rstrip("\r\n")
        if first != EXPECTED_HEADER:
            raise ContractError(
                "header mismatch in %r: expected exactly '%s'"
                % (csv_path, EXPECTED_HEADER))
        names = EXPECTED_HEADER.split(",")
        columns = [[] for _ in names]
        for row in csv.reader(fh):
            if len(row) != len(names):
                raise ContractError(
                    "%r: row %d has %d fields, expected %d"
                    % (csv_path, len(columns[0]) + 2, len(row), len(names)))
            try:
                for store, field in zip(columns, row):
                    store.append(float(field))
            except ValueError:
                raise ContractError(
                    "%r: non-numeric entry in row %d"
                    % (csv_path, len(columns[0]) + 2))
    if len(columns[0]) < 2:
        raise ContractError("%r: need at least 2 data rows, got %d"
                            % (csv_path, len(columns[0])))
    return {name: np.asarray(col, dtype=float)
            for name, col in zip(names, columns)}


def panel_series(grid: dict):
    """The fixed columns-to-series mapping, one entry per panel.

    Returns a list of ``(panel title, [(label, color, y-array), ...])``
    in rendering order; the series order inside every panel is
    Gaussian (red), KDE (blue), Edgeworth (green).
    """
    panels = []
    for panel_title, suffix in _PANELS:
        series = [(label, color, grid[column + suffix])
                  for label, color, column in _SERIES]
        panels.append((panel_title, series))
    return panels


def build_figure(grid: dict, title: str = ""):
    """Assemble the one-row, three-panel figure (caller closes it)."""
    fig, axes = plt.subplots(1, 3, figsize=(13.5, 4.0), sharex=True)
    x = grid["x"]
    for ax, (panel_title, series) in zip(axes, panel_series(grid)):
        for label, color, y in series:
            ax.plot(x, y, color=color, label=label, linewidth=1.2)
        ax.set_title(panel_title)
        ax.set_xlabel("x")
        ax.axhline(0.0, color="0.8", linewidth=0.6, zorder=0)
    axes[0].legend(loc="upper left", frameon=False)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    return fig


def render(spec: PanelSpec) -> str:
    """Render one spec to a raster image; returns the output path."""
    grid = load_grid(spec.csv_path)
    fig = build_figure(grid, spec.title)
    out = spec.resolved_out
    try:
        fig.savefig(out, dpi=150)
    finally:
        plt.close(fig)
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render_panels",
        description="Render a density-comparison CSV as a three-panel "
                    "figure (density, first and second derivatives; "
                    "Gaussian red, KDE blue, Edgeworth green).")
    parser.add_argument("csv", help="input CSV following the ten-column "
                                    "comparison contract")
    parser.add_argument("--out", default=None,
                        help="output image path (default: CSV path "
                             "with .png suffix)")
    parser.add_argument("--title", default="",
                        help="figure title")
    ns = parser.parse_args(argv)
    spec = PanelSpec(csv_path=ns.csv, title=ns.title, out_path=ns.out)
    try:
        out = render(spec)
    except (ContractError, OSError) as exc:
        print("render_panels: %s" % exc, file=sys.stderr)
        return 3
    print("wrote %s" % out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
