"""Figure style and the two chart types used by the reports.

SVGs are written with a fixed hash salt and no date stamp so reruns are
byte-identical.
"""
from __future__ import annotations

from contextlib import contextmanager
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

GOLDEN = (np.sqrt(5) - 1.0) / 2.0
FIG_WIDTH = 6.4
FIG_SIZE = (FIG_WIDTH, FIG_WIDTH * GOLDEN)

# one colour per technology, wind last so it sits on top of the stack
PALETTE = {
    "electric-only": "#4c72b0",
    "chp-1dof": "#dd8452",
    "chp-2dof": "#c44e52",
    "heat-only": "#8c8c8c",
    "p2h": "#8172b3",
    "storage": "#64b5cd",
    "wind": "#55a868",
}
OVERLOAD = "#c44e52"
NORMAL = "#4c72b0"

STYLE = {
    "figure.figsize": FIG_SIZE,
    "font.family": "sans-serif",
    "font.sans-serif": ["DejaVu Sans"],
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.fontsize": 8,
    "legend.frameon": False,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.0,
    "svg.fonttype": "path",
    "svg.hashsalt": "chpuc",
}


@contextmanager
def styled():
    with matplotlib.rc_context(STYLE):
        yield


def save_svg(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None}, bbox_inches="tight")
    plt.close(fig)
    return path


def line_usage_chart(usage: dict, title: str, path, constrained: bool = True) -> Path:
    """Bar chart of max and mean line loading in percent of rating.

    ``usage`` maps a line label to ``(max, mean)`` fractions. Bars above
    100 % are drawn in the overload colour.
    """
    labels = list(usage)
    peak = np.array([usage[k][0] for k in labels]) * 100.0
    mean = np.array([usage[k][1] for k in labels]) * 100.0
    with styled():
        fig, ax = plt.subplots()
        x = np.arange(len(labels))
        colors = [OVERLOAD if v > 100.0 + 1e-6 else NORMAL for v in peak]
        ax.bar(x - 0.2, peak, width=0.4, color=colors, label="max")
        ax.bar(x + 0.2, mean, width=0.4, color=NORMAL, alpha=0.45, label="mean")
        ax.axhline(100.0, color="k", lw=0.8, ls="--")
        ax.set_xticks(x)
        ax.set_xticklabels(labels, rotation=45, ha="right")
        ax.set_ylabel("flow / rating [%]")
        top = max(110.0, float(peak.max()) * 1.1) if len(peak) else 110.0
        ax.set_ylim(0, top)
        suffix = "" if constrained else " (ratings not enforced)"
        ax.set_title(title + suffix)
        ax.legend(loc="upper right")
        return save_svg(fig, path)


def stacked_dispatch_chart(hours, layers: list, demand, title: str, ylabel: str, path) -> Path:
    """Stacked areas of positive contributions with the demand curve on top.

    ``layers`` is a list of ``(label, colour, series)``. Negative series
    (power-to-heat consumption, storage charging) are stacked below zero.
    """
    hours = np.asarray(hours)
    with styled():
        fig, ax = plt.subplots()
        pos_base = np.zeros(len(hours))
        neg_base = np.zeros(len(hours))
        for label, color, series in layers:
            s = np.asarray(series, dtype=float)
            up, down = np.clip(s, 0, None), np.clip(s, None, 0)
            if up.any():
                ax.fill_between(hours, pos_base, pos_base + up, step="mid", color=color,
                                label=label, lw=0)
                pos_base = pos_base + up
            if down.any():
                ax.fill_between(hours, neg_base + down, neg_base, step="mid", color=color,
                                alpha=0.6, label=None if up.any() else label, lw=0)
                neg_base = neg_base + down
        ax.step(hours, demand, where="mid", color="k", lw=1.2, label="demand")
        ax.axhline(0.0, color="k", lw=0.5)
        ax.set_xlabel("hour")
        ax.set_ylabel(ylabel)
        ax.set_xlim(hours[0] - 0.5, hours[-1] + 0.5)
        ax.set_title(title)
        ax.legend(loc="upper left", ncol=3)
        return save_svg(fig, path)
