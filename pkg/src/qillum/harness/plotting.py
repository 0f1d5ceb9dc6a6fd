"""Static figure rendering next to the CSV output."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "font.size": 10,
    "axes.labelsize": 11,
    "legend.fontsize": 8,
    "figure.figsize": (4.5, 3.2),
    "figure.dpi": 150,
    "lines.linewidth": 1.4,
}


def render(recipe_id, recipe, rows, path: Path) -> Path:
    axes = recipe.spec.axes
    x_axis = axes[-1]
    series = defaultdict(list)
    for row in rows:
        y = getattr(row, recipe.y)
        if y is None:
            continue
        key = getattr(row, axes[0].name) if len(axes) > 1 else None
        series[key].append((getattr(row, x_axis.name), y))

    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for key, pts in series.items():
            xs, ys = zip(*pts)
            label = None if key is None else f"{axes[0].name} = {key:g}"
            ax.plot(xs, ys, marker="o" if len(xs) < 20 else None, ms=3, label=label)
        if x_axis.scale == "log":
            ax.set_xscale("log")
        if recipe.y in ("gain", "gain_prime"):
            ax.axhline(1.0, color="0.6", lw=0.8, ls="--")
        ax.set_xlabel(recipe.xlabel)
        ax.set_ylabel(recipe.ylabel)
        ax.set_title(recipe_id, fontsize=9)
        if len(series) > 1:
            ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return path
