"""Truncation-dimension studies for a single parameter point."""

from __future__ import annotations

from dataclasses import replace
from typing import Sequence

from qillum.channel import Probe, ProtocolParams
from qillum.harness.rows import ResultRow, Settings, evaluate
from qillum.metrics import numeric_snr_fixed

TRACKED = {"qcb": None, "helstrom": "helstrom", "snr_num": "snr_num", "snr": "snr_q", "gain": "gain"}


def _tracked_value(row: ResultRow, metric: str) -> float | None:
    if metric == "qcb":
        return row.qcb_cs if row.state == "cs" else row.qcb_tmss
    return getattr(row, TRACKED[metric])


def convergence(
    params: ProtocolParams, settings: Settings, dims: Sequence[int], metric: str = "qcb", rtol: float = 1e-4
) -> tuple[list[ResultRow], int | None]:
    """Evaluate ``metric`` at each dimension.

    Returns the rows and the smallest dimension whose value differs from the
    previous one by less than ``rtol`` (relative), or ``None``.
    """
    if metric not in TRACKED:
        raise ValueError(f"metric must be one of {sorted(TRACKED)}")
    if list(dims) != sorted(dims) or len(set(dims)) != len(dims):
        raise ValueError("dimensions must be strictly ascending")
    rows = []
    converged = None
    prev = None
    for d in dims:
        s = replace(settings, dim=d, metrics=() if metric == "snr_num" else (metric,))
        row = evaluate(params, s, catch=False)
        if metric == "snr_num":
            res = numeric_snr_fixed(Probe(s.state, params.N), params, d, s.tail_tol)
            row.snr_num, row.snr_num_dim = res.value, d
        value = _tracked_value(row, metric)
        if converged is None and prev is not None and value is not None:
            scale = max(abs(value), abs(prev))
            if scale == 0 or abs(value - prev) < rtol * scale:
                converged = d
        prev = value
        rows.append(row)
    return rows, converged
