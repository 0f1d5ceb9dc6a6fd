"""One result row per parameter point, and its CSV encoding."""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from dataclasses import dataclass, field, fields
from typing import Iterable, Optional

from qillum import fock
from qillum.channel import DEFAULT_CONVENTION, PortConvention, Probe, ProtocolParams, hypothesis_states
from qillum.metrics import (
    gain,
    gain_db,
    helstrom,
    numeric_snr,
    phase_averaged_gain,
    qcb,
    snr_classical,
    snr_quantum,
)

log = logging.getLogger(__name__)

SCHEMA = "qillum-results/1"
NA = "NA"
METRICS = ("snr", "gain", "gain_prime", "snr_num", "qcb", "helstrom")
NUMERIC_ERRORS = (ArithmeticError,)


@dataclass(frozen=True)
class Settings:
    """Numerical controls echoed into every row."""

    state: str = "tmss"
    dim: int = 20
    tail_tol: float = fock.DEFAULT_TAIL_TOL
    convention: PortConvention = DEFAULT_CONVENTION
    metrics: tuple[str, ...] = ("snr", "gain")
    timing: bool = False

    def __post_init__(self):
        Probe(self.state, 0.0)
        object.__setattr__(self, "convention", PortConvention(self.convention))
        bad = [m for m in self.metrics if m not in METRICS]
        if bad:
            raise ValueError(f"unknown metrics {bad}; choose from {METRICS}")


@dataclass
class ResultRow:
    state: str
    N: float
    eta: float
    p: float
    phi: float
    n_th: float
    n_t: float
    dim: int
    tail_tol: float
    convention: str
    snr_c: Optional[float] = None
    snr_q: Optional[float] = None
    gain: Optional[float] = None
    gain_db: Optional[float] = None
    gain_0over0: Optional[int] = None
    gain_prime: Optional[float] = None
    snr_num: Optional[float] = None
    snr_num_dim: Optional[int] = None
    qcb_cs: Optional[float] = None
    qcb_tmss: Optional[float] = None
    b_opt: Optional[float] = None
    helstrom: Optional[float] = None
    tail_probe: Optional[float] = None
    tail_h: Optional[float] = None
    tail_t: Optional[float] = None
    tail_skipped: Optional[float] = None
    error: Optional[str] = None
    wall_ms: Optional[float] = field(default=None, metadata={"timing": True})


def columns(timing: bool = False) -> list[str]:
    return [f.name for f in fields(ResultRow) if timing or not f.metadata.get("timing")]


def _fmt(value) -> str:
    if value is None:
        return NA
    if isinstance(value, float):
        return repr(float(f"{value:.12g}"))
    return str(value)


def encode(rows: Iterable[ResultRow], timing: bool = False, header_comment: str | None = None) -> str:
    buf = io.StringIO()
    if header_comment is not None:
        buf.write(f"# {header_comment}\n")
    cols = columns(timing)
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for row in rows:
        writer.writerow([_fmt(getattr(row, c)) for c in cols])
    return buf.getvalue()


def evaluate(params: ProtocolParams, settings: Settings, catch: bool = True) -> ResultRow:
    """Compute the requested metrics at one point.

    With ``catch`` set, numeric failures are recorded in the ``error`` column
    instead of propagating.
    """
    start = time.perf_counter()
    row = ResultRow(
        state=settings.state,
        N=params.N,
        eta=params.eta,
        p=params.p,
        phi=params.phi,
        n_th=params.n_th,
        n_t=params.n_t,
        dim=settings.dim,
        tail_tol=settings.tail_tol,
        convention=settings.convention.value,
    )
    try:
        _fill(row, params, settings)
    except NUMERIC_ERRORS as exc:
        if not catch:
            raise
        row.error = f"{type(exc).__name__}: {exc}"
    if settings.timing:
        row.wall_ms = (time.perf_counter() - start) * 1e3
    return row


def _fill(row: ResultRow, params: ProtocolParams, s: Settings) -> None:
    wanted = set(s.metrics)
    if wanted & {"snr", "gain"}:
        c, q = snr_classical(params), snr_quantum(params)
        row.snr_c, row.snr_q = c.value, q.value
    if "gain" in wanted:
        row.gain = gain(params)
        row.gain_db = gain_db(row.gain)
        row.gain_0over0 = int(row.snr_c == 0 and row.snr_q == 0)
    if "gain_prime" in wanted:
        row.gain_prime = phase_averaged_gain(params)
    if "snr_num" in wanted:
        res, d = numeric_snr(Probe(s.state, params.N), params, tail_tol=s.tail_tol)
        row.snr_num, row.snr_num_dim = res.value, d
    if wanted & {"qcb", "helstrom"}:
        pair = hypothesis_states(Probe(s.state, params.N), params, s.dim, s.convention, s.tail_tol)
        rep = pair.tail_report
        row.tail_probe, row.tail_h, row.tail_t, row.tail_skipped = rep["probe"], rep["h"], rep["t"], rep["skipped"]
        if max(rep["h"], rep["t"]) > 0:
            log.info("thermal truncation tail %.3g at dim %d", max(rep["h"], rep["t"]), s.dim)
        if "qcb" in wanted:
            res = qcb(pair)
            setattr(row, "qcb_cs" if s.state == "cs" else "qcb_tmss", res.xi)
            row.b_opt, row.helstrom = res.b_opt, res.helstrom
        else:
            row.helstrom = helstrom(pair)
    for name in columns(timing=True):
        v = getattr(row, name)
        if isinstance(v, float) and not math.isfinite(v):
            raise ArithmeticError(f"non-finite {name}")
