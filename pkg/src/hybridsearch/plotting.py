"""PNG rendering of the CSV outputs (needs the optional matplotlib extra).

Nothing else in the package imports this module, so the simulation core runs
without matplotlib installed.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .io import is_matrix_csv, read_csv, read_matrix_csv


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_matrix(path, out=None) -> Path:
    """Heat map of an axis-headed matrix CSV (surfaces and strategy maps)."""
    plt = _pyplot()
    path = Path(path)
    row_name, col_name, rows, cols, values = read_matrix_csv(path)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    extent = None
    if rows.size > 1 and cols.size > 1:
        extent = [cols[0], cols[-1], rows[0], rows[-1]]
    im = ax.imshow(values, origin="lower", aspect="auto", extent=extent, interpolation="nearest")
    fig.colorbar(im, ax=ax, label=path.stem)
    ax.set_xlabel(col_name)
    ax.set_ylabel(row_name)
    if "surface" in path.stem and np.nanmax(values) > 0.9:
        levels = [lv for lv in (0.9, 0.99, 0.999) if np.nanmax(values) > lv]
        if extent is not None and levels:
            ax.contour(cols, rows, values, levels=levels, colors="w", linewidths=0.8)
    return _save(fig, path, out)


def render_table(path, out=None) -> Path:
    """Line plot of every column against the first one."""
    plt = _pyplot()
    path = Path(path)
    header, data = read_csv(path)
    fig, ax = plt.subplots(figsize=(6, 4))
    x = data[:, 0]
    cols = range(1, len(header))
    if header[0] == "n":
        # gapscan: the positive spectral quantities on a log axis
        cols = [header.index(c) for c in ("g_min", "gap02_min", "p_max_deficit", "width") if c in header]
        ax.set_yscale("log")
    for j in cols:
        y = data[:, j]
        ok = np.isfinite(y) & ((y > 0) if ax.get_yscale() == "log" else True)
        ax.plot(x[ok], y[ok], marker="." if x.size < 100 else None, label=header[j])
    ax.set_xlabel(header[0])
    if len(header) > 2:
        ax.legend(fontsize="small")
    else:
        ax.set_ylabel(header[1])
    return _save(fig, path, out)


def render_csv(path, out=None) -> Path:
    """Render ``path`` to a PNG beside it and return the PNG path."""
    path = Path(path)
    if is_matrix_csv(path):
        return render_matrix(path, out)
    try:
        read_csv(path)
    except ValueError:
        raise ValueError(f"{path} is not a numeric table") from None
    return render_table(path, out)


def _save(fig, path: Path, out) -> Path:
    out = Path(out) if out is not None else path.with_suffix(".png")
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    import matplotlib.pyplot as plt

    plt.close(fig)
    return out
