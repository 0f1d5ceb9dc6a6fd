"""Figure recipes: the sweeps behind the gain, averaged-gain and QCB panels."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from qillum.harness import plotting
from qillum.harness.rows import Settings
from qillum.harness.sweep import Axis, SweepSpec, compute, header_comment
from qillum.harness.rows import encode

# defaults for the gain panels; cos^2(phi) = 1 via phi = pi
GAIN_DEFAULTS = {"eta": 0.8, "n_th": 100.0, "n_t": 110.0, "phi": math.pi}
P_GRID = (0.1, 0.3, 0.5, 0.8, 1.0)
# QCB panels; phi and p chosen to match the reference endpoints
QCB_DEFAULTS = {"eta": 0.8, "n_th": 3.0, "n_t": 4.0, "p": 0.3, "phi": math.pi / 2}


@dataclass(frozen=True)
class Recipe:
    spec: SweepSpec
    y: str
    xlabel: str
    ylabel: str


def _gain(axes, fixed, metric="gain") -> SweepSpec:
    swept = {a.name for a in axes}
    base = {k: v for k, v in {**GAIN_DEFAULTS, **fixed}.items() if k not in swept}
    return SweepSpec(Settings(state="tmss", metrics=(metric,)), tuple(axes), base)


def _qcb(state: str, n_max: float, steps: int) -> SweepSpec:
    return SweepSpec(
        Settings(state=state, dim=20, metrics=("qcb",)),
        (Axis.range("N", 0.0, n_max, steps),),
        dict(QCB_DEFAULTS),
    )


N_LOG = Axis.range("N", 1e-3, 10.0, 50, "log")

RECIPES: dict[str, Recipe] = {
    "fig3a": Recipe(_gain([Axis("p", P_GRID), N_LOG], {}), "gain", "N", "G"),
    "fig3b": Recipe(_gain([Axis.range("n_th", 0, 110, 111)], {"N": 0.1, "p": 0.3}), "gain", "n_th", "G"),
    "fig3c": Recipe(_gain([Axis.range("n_t", 0, 110, 111)], {"N": 0.1, "p": 0.3}), "gain", "n_t", "G"),
    "fig3d": Recipe(_gain([Axis.range("eta", 0, 1, 101)], {"N": 0.1, "p": 0.3}), "gain", "eta", "G"),
    "fig3e": Recipe(_gain([Axis.range("p", 0, 1, 101)], {"N": 0.1}), "gain", "p", "G"),
    "fig3f": Recipe(_gain([Axis.range("phi", -math.pi, math.pi, 101)], {"N": 0.1, "p": 0.3}), "gain", "phi", "G"),
    "fig4": Recipe(_gain([Axis("p", P_GRID), N_LOG], {}, "gain_prime"), "gain_prime", "N", "G'"),
    "fig5a": Recipe(_qcb("cs", 1.0, 11), "qcb_cs", "N", "QCB (CS)"),
    "fig5b": Recipe(_qcb("tmss", 0.56, 8), "qcb_tmss", "N", "QCB (TMSS)"),
}


def figure(recipe_id: str, out_dir: str | Path, jobs: int = 1, plot: bool = True) -> list[Path]:
    """Run one recipe; write ``<id>.csv`` and, unless disabled, ``<id>.png``."""
    try:
        recipe = RECIPES[recipe_id]
    except KeyError:
        raise KeyError(f"unknown figure recipe {recipe_id!r}; choose from {sorted(RECIPES)}") from None
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = compute(recipe.spec, jobs)
    csv_path = out_dir / f"{recipe_id}.csv"
    csv_path.write_text(encode(rows, False, header_comment()), encoding="utf-8", newline="\n")
    written = [csv_path]
    if plot:
        written.append(plotting.render(recipe_id, recipe, rows, out_dir / f"{recipe_id}.png"))
    return written
