"""Declarative parameter sweeps.

A sweep config is an INI-style file: a ``[sweep]`` section with numerical
controls, an optional ``[fixed]`` section, and one section per swept
parameter holding either ``range = start/stop/steps/scale`` or
``values = v1, v2, ...``::

    [sweep]
    state = tmss
    metrics = gain
    dim = 20

    [fixed]
    eta = 0.8
    n_th = 100
    n_t = 110
    phi = pi

    [N]
    range = 1e-3/10/50/log
"""

from __future__ import annotations

import configparser
import datetime as dt
import itertools
import math
import multiprocessing
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from qillum.channel import ProtocolParams
from qillum.harness.rows import SCHEMA, ResultRow, Settings, encode, evaluate

PARAMS = ("N", "eta", "p", "phi", "n_th", "n_t")
DEFAULTS = {"N": 0.1, "eta": 0.8, "p": 0.3, "phi": math.pi, "n_th": 100.0, "n_t": 110.0}

_PI_RE = re.compile(r"^([+-]?(?:\d+\.?\d*|\.\d+)?)\s*\*?\s*pi\s*(?:/\s*(\d+\.?\d*))?$")


class ConfigError(ValueError):
    pass


def parse_angle(text: str) -> float:
    """Float or a ``pi`` expression such as ``pi``, ``-pi/2``, ``0.5pi``, ``2*pi``."""
    s = str(text).strip().lower()
    m = _PI_RE.match(s)
    if m:
        coef = m.group(1)
        c = -1.0 if coef == "-" else 1.0 if coef in ("", "+") else float(coef)
        return c * math.pi / (float(m.group(2)) if m.group(2) else 1.0)
    try:
        return float(s)
    except ValueError:
        raise ValueError(f"not a number or pi expression: {text!r}") from None


def _number(name: str, text: str) -> float:
    return parse_angle(text) if name == "phi" else float(text)


@dataclass(frozen=True)
class Axis:
    name: str
    values: tuple[float, ...]
    scale: str = "linear"

    @classmethod
    def range(cls, name: str, start: float, stop: float, steps: int, scale: str = "linear") -> "Axis":
        if steps < 1:
            raise ConfigError(f"[{name}] steps must be >= 1")
        if scale == "log":
            if start <= 0 or stop <= 0:
                raise ConfigError(f"[{name}] log scale requires positive endpoints")
            vals = np.geomspace(start, stop, steps) if steps > 1 else np.array([start])
        elif scale == "linear":
            vals = np.linspace(start, stop, steps) if steps > 1 else np.array([start])
        else:
            raise ConfigError(f"[{name}] scale must be 'linear' or 'log', got {scale!r}")
        return cls(name, tuple(float(v) for v in vals), scale)


@dataclass(frozen=True)
class SweepSpec:
    settings: Settings
    axes: tuple[Axis, ...] = ()
    fixed: dict = field(default_factory=dict)

    def __post_init__(self):
        names = [a.name for a in self.axes]
        for n in list(names) + list(self.fixed):
            if n not in PARAMS:
                raise ConfigError(f"unknown parameter {n!r}; expected one of {PARAMS}")
        if len(set(names)) != len(names):
            raise ConfigError("a parameter is swept twice")
        clash = set(names) & set(self.fixed)
        if clash:
            raise ConfigError(f"parameters both fixed and swept: {sorted(clash)}")

    def points(self) -> list[ProtocolParams]:
        """Grid points in lexicographic order of the axes as declared."""
        base = {**DEFAULTS, **self.fixed}
        out = []
        for combo in itertools.product(*(a.values for a in self.axes)):
            values = dict(base)
            values.update(zip((a.name for a in self.axes), combo))
            out.append(ProtocolParams(**values))
        return out


def parse_config(text: str) -> SweepSpec:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # parameter names are case-sensitive (N vs n_t)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    sw = cp["sweep"] if cp.has_section("sweep") else {}
    try:
        settings = Settings(
            state=sw.get("state", "tmss"),
            dim=int(sw.get("dim", 20)),
            tail_tol=float(sw.get("tail_tol", 1e-6)),
            convention=sw.get("absent_port", "signal"),
            metrics=tuple(m.strip() for m in sw.get("metrics", "snr, gain").split(",") if m.strip()),
            timing=sw.get("timing", "false").lower() in ("1", "true", "yes"),
        )
    except ValueError as exc:
        raise ConfigError(f"[sweep] {exc}") from None
    fixed = {}
    if cp.has_section("fixed"):
        for key, val in cp["fixed"].items():
            try:
                fixed[key] = _number(key, val)
            except ValueError as exc:
                raise ConfigError(f"[fixed] {key}: {exc}") from None
    axes = []
    for name in cp.sections():
        if name in ("sweep", "fixed"):
            continue
        sec = cp[name]
        if ("range" in sec) == ("values" in sec):
            raise ConfigError(f"[{name}] needs exactly one of 'range' or 'values'")
        try:
            if "range" in sec:
                parts = [x.strip() for x in sec["range"].split("/")]
                if len(parts) not in (3, 4):
                    raise ConfigError(f"[{name}] range must be start/stop/steps[/scale]")
                scale = parts[3] if len(parts) == 4 else "linear"
                axes.append(Axis.range(name, _number(name, parts[0]), _number(name, parts[1]), int(parts[2]), scale))
            else:
                vals = tuple(_number(name, v) for v in sec["values"].split(",") if v.strip())
                if not vals:
                    raise ConfigError(f"[{name}] values is empty")
                axes.append(Axis(name, vals))
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"[{name}] {exc}") from None
    spec = SweepSpec(settings, tuple(axes), fixed)
    try:
        spec.points()
    except ValueError as exc:
        raise ConfigError(f"invalid parameter point: {exc}") from None
    return spec


def _evaluate_one(args: tuple[ProtocolParams, Settings]) -> ResultRow:
    params, settings = args
    return evaluate(params, settings, catch=True)


def compute(spec: SweepSpec, jobs: int = 1) -> list[ResultRow]:
    """Evaluate every grid point; rows come back in grid order."""
    work = [(pt, spec.settings) for pt in spec.points()]
    if jobs <= 1 or len(work) <= 1:
        return [_evaluate_one(w) for w in work]
    ctx = multiprocessing.get_context("spawn")
    with ProcessPoolExecutor(max_workers=jobs, mp_context=ctx) as pool:
        return list(pool.map(_evaluate_one, work))


def header_comment() -> str:
    stamp = dt.datetime.now(dt.timezone.utc).replace(microsecond=0).isoformat()
    return f"{SCHEMA} run={stamp}"


def run_sweep(spec: SweepSpec, out: str | Path | None, jobs: int = 1) -> str:
    """Run ``spec`` and write the CSV to ``out`` (or just return it when ``None``)."""
    rows = compute(spec, jobs)
    text = encode(rows, spec.settings.timing, header_comment())
    if out is not None:
        Path(out).write_text(text, encoding="utf-8", newline="\n")
    return text


def csv_body(text: str) -> str:
    """CSV text without ``#`` comment lines."""
    return "".join(line for line in text.splitlines(keepends=True) if not line.startswith("#"))


def read_rows(path: str | Path) -> list[dict[str, str]]:
    import csv

    body = csv_body(Path(path).read_text(encoding="utf-8"))
    return list(csv.DictReader(body.splitlines()))


def sweep_columns(spec: SweepSpec) -> Sequence[str]:
    return [a.name for a in spec.axes]
