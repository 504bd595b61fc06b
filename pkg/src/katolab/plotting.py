"""Figures written next to CSV tables."""

from __future__ import annotations

import os
import tempfile
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def plot_table(
    path: str,
    columns: Sequence[str],
    rows: Sequence[Sequence[float]],
    x: str,
    y: str,
    logx: bool = False,
    logy: bool = False,
    title: str | None = None,
) -> str:
    """Plot column ``y`` against column ``x`` and save a PNG atomically.

    Non-positive values are dropped from logarithmic axes.  Returns ``path``.
    """
    data = np.array(rows, dtype=float).reshape(len(rows), len(columns))
    xs = data[:, list(columns).index(x)] if len(rows) else np.array([])
    ys = data[:, list(columns).index(y)] if len(rows) else np.array([])
    keep = np.isfinite(xs) & np.isfinite(ys)
    if logx:
        keep &= xs > 0
    if logy:
        keep &= ys > 0
    fig, ax = plt.subplots(figsize=(5.0, 3.6), dpi=120)
    ax.plot(xs[keep], ys[keep], "o-", ms=4, lw=1.2)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(x)
    ax.set_ylabel(y)
    if title:
        ax.set_title(title, fontsize=10)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(suffix=".png", dir=d)
    os.close(fd)
    try:
        fig.savefig(tmp, format="png", metadata={"Software": None})
        os.replace(tmp, path)
    finally:
        plt.close(fig)
        if os.path.exists(tmp):
            os.unlink(tmp)
    return path
