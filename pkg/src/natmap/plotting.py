"""Figure output for the command line tool.

Every figure is written as a CSV of its plotted columns; a PNG is added when
matplotlib (the ``plot`` extra) is importable.  The CSV alone is enough to
redraw any figure with another plotter.
"""

import logging
from pathlib import Path

import numpy as np

from .io import write_rows_csv

log = logging.getLogger(__name__)


def _pyplot():
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        log.warning("matplotlib not installed; writing CSV data only")
        return None
    return plt


def _save(fig, plt, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _emit(out_dir, stem, header, rows, draw):
    """Write ``stem.csv`` and, if possible, ``stem.png`` drawn by ``draw(ax, columns)``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{stem}.csv"
    write_rows_csv(csv_path, header, rows)
    written = [csv_path]
    plt = _pyplot()
    if plt is not None:
        cols = {h: np.array([r[i] for r in rows], dtype=float) for i, h in enumerate(header)}
        fig, ax = plt.subplots(figsize=(5.0, 3.6))
        draw(ax, cols)
        png = out_dir / f"{stem}.png"
        _save(fig, plt, png)
        written.append(png)
    return written


def busemann_figure(results: dict, out_dir, space_label: str = ""):
    """Residual / tolerance per Busemann property (bars below 1 pass)."""
    names = sorted(results)
    rows = [(i, results[n]["residual"], results[n]["tolerance"]) for i, n in enumerate(names)]

    def draw(ax, c):
        ratio = np.maximum(c["residual"] / c["tolerance"], 1e-20)
        ax.bar(c["index"], ratio, color="0.4")
        ax.axhline(1.0, color="r", lw=0.8)
        ax.set_yscale("log")
        ax.set_xticks(c["index"], names, rotation=45, ha="right", fontsize=7)
        ax.set_ylabel("residual / tolerance")
        ax.set_title(f"Busemann checks {space_label}".strip())

    return _emit(out_dir, "busemann_residuals", ["index", "residual", "tolerance"], rows, draw)


def jacobian_figure(jacs, out_dir):
    """Histogram of the Jacobians over the evaluated points."""
    rows = [(i, float(j)) for i, j in enumerate(jacs)]

    def draw(ax, c):
        ax.hist(c["jacobian"], bins=min(30, max(5, len(rows) // 3)), color="0.4")
        ax.axvline(1.0, color="r", lw=0.8)
        ax.set_xlabel("Jacobian")
        ax.set_ylabel("points")

    return _emit(out_dir, "natmap_jacobians", ["point", "jacobian"], rows, draw)


def spectrum_figure(probe: dict, out_dir, max_value: float):
    """Near-maximal set diameters against eps, and phi along the degenerate path."""
    written = []
    rows = [(e, d) for e, d in zip(probe["eps"], probe["diameters"])]

    def draw_diam(ax, c):
        ax.loglog(c["eps"], c["diameter"], "o-", color="k")
        ax.set_xlabel("eps")
        ax.set_ylabel("diameter of near-maximal set")

    written += _emit(out_dir, "spectrum_diameters", ["eps", "diameter"], rows, draw_diam)
    path_rows = [(p["eigenvalue"], p["phi"], max_value) for p in probe["degenerate_path"]]

    def draw_path(ax, c):
        ax.semilogx(c["eigenvalue"], c["phi"], "o-", color="k", label="phi")
        ax.axhline(max_value, color="r", lw=0.8, label="maximum")
        ax.set_xlabel("smallest eigenvalue")
        ax.set_ylabel("phi")
        ax.legend(fontsize=7)

    written += _emit(out_dir, "spectrum_degenerate_path", ["eigenvalue", "phi", "maximum"], path_rows, draw_path)
    return written


def rigidity_figure(records, out_dir):
    """Unnormalised drift and representation distances along the schedule."""
    rows = [(r["n"], r["drift"], r["distance_unnormalized"], r["distance_normalized"]) for r in records]

    def draw(ax, c):
        ax.plot(c["n"], c["drift"], "o-", color="k", label="drift")
        ax.set_xlabel("n")
        ax.set_ylabel("drift")
        ax2 = ax.twinx()
        ax2.semilogy(c["n"], np.maximum(c["distance_unnormalized"], 1e-300), "s--", color="0.5", label="unnormalised")
        ax2.semilogy(c["n"], np.maximum(c["distance_normalized"], 1e-300), "^:", color="r", label="normalised")
        ax2.set_ylabel("distance to standard representation")
        ax2.legend(fontsize=7, loc="center right")

    return _emit(out_dir, "rigidity_demo", ["n", "drift", "distance_unnormalized", "distance_normalized"], rows, draw)
