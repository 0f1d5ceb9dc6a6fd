"""Sequential interaction model: environment BS, phase shift, target BS.

Mode labels are fixed globally as ``i`` (idler), ``s`` (signal), ``h``
(environment) and ``t`` (target), in that row-major order.

Beam-splitter convention: ``U = exp(theta (a†b - a b†))`` with
``theta = arccos(sqrt(r))`` so that the kept port transforms as
``U† a U = sqrt(r) a + sqrt(1 - r) b``. With this choice the returned
signal is ``[sqrt(p eta) a_s + sqrt(p(1-eta)) a_h + sqrt(1-p) a_t] e^{i phi}``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from qillum import fock
from qillum.fock import MixedState, ModeLayout, ModeOperator, PureState, TruncatedModeSpace

WEIGHT_CUTOFF = 1e-10


class PortConvention(str, enum.Enum):
    """Which mode the detector sees when the target is absent.

    ``LITERAL_EQ5`` traces out signal and target and keeps the environment
    output port ``h`` next to the idler. ``RETURNED_SIGNAL`` keeps the signal
    port after the environment splitter, i.e. ``a_s' = sqrt(eta) a_s +
    sqrt(1-eta) a_h``, with no target splitter acting.
    """

    LITERAL_EQ5 = "literal-eq5"
    RETURNED_SIGNAL = "signal"


DEFAULT_CONVENTION = PortConvention.RETURNED_SIGNAL


@dataclass(frozen=True)
class ProtocolParams:
    N: float
    eta: float
    p: float
    phi: float = math.pi
    n_th: float = 0.0
    n_t: float = 0.0

    def __post_init__(self):
        if self.N < 0:
            raise ValueError(f"N must be >= 0, got {self.N}")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if self.n_th < 0 or self.n_t < 0:
            raise ValueError("thermal photon numbers must be >= 0")
        if not math.isfinite(self.phi):
            raise ValueError("phi must be finite")

    def replace(self, **changes) -> "ProtocolParams":
        values = {k: getattr(self, k) for k in ("N", "eta", "p", "phi", "n_th", "n_t")}
        values.update(changes)
        return ProtocolParams(**values)


@dataclass(frozen=True)
class Probe:
    """Probe state: ``"cs"`` (coherent, real alpha = sqrt(N)) or ``"tmss"``."""

    kind: str
    N: float

    def __post_init__(self):
        if self.kind not in ("cs", "tmss"):
            raise ValueError(f"probe kind must be 'cs' or 'tmss', got {self.kind!r}")
        if self.N < 0:
            raise ValueError(f"N must be >= 0, got {self.N}")

    @property
    def has_idler(self) -> bool:
        return self.kind == "tmss"

    def state(self, dim: int, tail_tol: float = fock.DEFAULT_TAIL_TOL, renormalize: bool = True) -> PureState:
        if self.kind == "cs":
            return fock.coherent_state(math.sqrt(self.N), dim, "s", tail_tol, renormalize)
        return fock.tmss(self.N, dim, dim, tail_tol, renormalize)


@dataclass(frozen=True)
class HypothesisPair:
    rho0: MixedState
    rho1: MixedState
    params: ProtocolParams
    convention: PortConvention
    dim: int
    tail_report: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.rho0.layout.dims != self.rho1.layout.dims:
            raise fock.LayoutError("hypothesis states must share a layout")

    @property
    def layout(self) -> ModeLayout:
        return self.rho1.layout

    def swapped(self) -> "HypothesisPair":
        return HypothesisPair(self.rho1, self.rho0, self.params, self.convention, self.dim, self.tail_report)


# --- unitaries -------------------------------------------------------------


def beam_splitter_unitary(
    space_a: TruncatedModeSpace | int,
    space_b: TruncatedModeSpace | int,
    reflectivity: float,
    labels: tuple[str, str] = ("s", "h"),
) -> ModeOperator:
    """Two-mode mixer keeping ``sqrt(r) a + sqrt(1-r) b`` in the first port."""
    if not 0.0 <= reflectivity <= 1.0:
        raise ValueError(f"reflectivity must lie in [0, 1], got {reflectivity}")
    layout = ModeLayout.of((labels[0], space_a), (labels[1], space_b))
    a = fock.embed(fock.annihilation(layout.dims[0], labels[0]), layout).matrix
    b = fock.embed(fock.annihilation(layout.dims[1], labels[1]), layout).matrix
    gen = ModeOperator(layout, a.conj().T @ b - a @ b.conj().T)
    theta = math.acos(math.sqrt(reflectivity))
    return fock.expm_skew(gen, theta, fock.photon_number_sectors(layout))


@lru_cache(maxsize=64)
def _bs_tensor(dim: int, reflectivity: float) -> np.ndarray:
    """Cached ``U[a_out, b_out, a_in, b_in]`` for two modes of equal dimension."""
    u = beam_splitter_unitary(dim, dim, reflectivity).matrix.reshape(dim, dim, dim, dim)
    u.setflags(write=False)
    return u


def phase_unitary(space: TruncatedModeSpace | int, phi: float, label: str = "s") -> ModeOperator:
    space = fock._as_space(space)
    return ModeOperator(ModeLayout.of((label, space)), np.diag(np.exp(1j * phi * np.arange(space.dim))))


# --- evolution -------------------------------------------------------------


def _as_isx(state: PureState, has_idler: bool, dim: int) -> np.ndarray:
    """Probe amplitudes as an (i, s) array; CS gets a dummy idler axis of size 1."""
    return state.amplitudes.reshape((dim, dim) if has_idler else (1, dim))


def _apply_bs(psi: np.ndarray, u: np.ndarray, in_fock: int) -> np.ndarray:
    """Mix axis 1 of ``psi`` (i, s, ...) with a fresh mode in Fock state ``in_fock``.

    Returns amplitudes with the new mode appended as the last axis.
    """
    w = u[:, :, :, in_fock]  # (s_out, new_out, s_in)
    out = np.tensordot(psi, w, axes=([1], [2]))  # (i, ..., s_out, new_out)
    return np.moveaxis(out, -2, 1)


def evolve_probe(
    probe: Probe,
    params: ProtocolParams,
    env_fock: int,
    target_fock: int,
    dim: int,
    tail_tol: float = fock.DEFAULT_TAIL_TOL,
) -> PureState:
    """Full pure state after U1 on (s, h), phase on s, U2 on (s, t).

    Layout is ``(i, s, h, t)`` for TMSS and ``(s, h, t)`` for CS.
    """
    if not (0 <= env_fock < dim and 0 <= target_fock < dim):
        raise ValueError("thermal branch Fock indices must lie below the truncation dimension")
    start = probe.state(dim, tail_tol)
    psi = _as_isx(start, probe.has_idler, dim)
    psi = _apply_bs(psi, _bs_tensor(dim, params.eta), env_fock)  # (i, s, h)
    psi = psi * np.exp(1j * params.phi * np.arange(dim))[None, :, None]
    psi = _apply_bs(psi, _bs_tensor(dim, params.p), target_fock)  # (i, s, h, t)
    labels = ("i", "s", "h", "t") if probe.has_idler else ("s", "h", "t")
    layout = ModeLayout.of(*((label, dim) for label in labels))
    return PureState(layout, psi.reshape(-1), start.tail_deficit)


def _thermal_weights(nbar: float, dim: int, renormalize: bool) -> tuple[np.ndarray, float]:
    w = fock.thermal_probabilities(nbar, dim)
    tail = (nbar / (1 + nbar)) ** dim if nbar > 0 else 0.0
    if renormalize:
        w = w / w.sum()
    return w, tail


def _after_environment(
    psi: np.ndarray, weights: np.ndarray, eta: float, dim: int, keep: str
) -> tuple[np.ndarray, float]:
    """Sum over pure environment branches; keep the (i, s) or (i, h) pair.

    Returns the (un-normalized) reduced matrix and the skipped weight.
    """
    u = _bs_tensor(dim, eta)
    ni = psi.shape[0]
    rho = np.zeros((ni * dim, ni * dim), dtype=complex)
    skipped = 0.0
    for n, w in enumerate(weights):
        if w < WEIGHT_CUTOFF:
            skipped += w
            continue
        branch = _apply_bs(psi, u, n)  # (i, s, h)
        if keep == "h":
            branch = branch.transpose(0, 2, 1)
        m = branch.reshape(ni * dim, dim)
        rho += w * (m @ m.conj().T)
    return rho, skipped


def _target_channel(
    sigma: np.ndarray, weights: np.ndarray, p: float, dim: int, ni: int
) -> tuple[np.ndarray, float]:
    """Mix the signal of ``sigma`` (i, s) with a thermal target mode and trace it out."""
    u = _bs_tensor(dim, p)
    # superoperator S[o, q, a, b] = sum_m w_m sum_t K_mt[o, a] conj(K_mt[q, b])
    sup = np.zeros((dim, dim, dim, dim), dtype=complex)
    skipped = 0.0
    for m, w in enumerate(weights):
        if w < WEIGHT_CUTOFF:
            skipped += w
            continue
        k = u[:, :, :, m]  # (s_out, t_out, s_in): one Kraus operator per t_out
        sup += w * np.tensordot(k, k.conj(), axes=([1], [1])).transpose(0, 2, 1, 3)
    s4 = sigma.reshape(ni, dim, ni, dim).transpose(1, 3, 0, 2).reshape(dim * dim, ni * ni)
    out = sup.reshape(dim * dim, dim * dim) @ s4  # (o q, i j)
    out = out.reshape(dim, dim, ni, ni).transpose(2, 0, 3, 1)
    return out.reshape(ni * dim, ni * dim), skipped


def _hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def _kept_layout(has_idler: bool, dim: int, port: str) -> ModeLayout:
    return ModeLayout.of(("i", dim), (port, dim)) if has_idler else ModeLayout.of((port, dim))


def returned_state(
    probe: Probe,
    params: ProtocolParams,
    dim: int = 20,
    tail_tol: float = fock.DEFAULT_TAIL_TOL,
    renormalize_thermal: bool = True,
) -> tuple[MixedState, dict]:
    """Target-present state of the kept (idler, returned signal) modes."""
    start = probe.state(dim, tail_tol)
    psi = _as_isx(start, probe.has_idler, dim)
    ni = psi.shape[0]
    w_h, tail_h = _thermal_weights(params.n_th, dim, renormalize_thermal)
    w_t, tail_t = _thermal_weights(params.n_t, dim, renormalize_thermal)
    sigma, skip_h = _after_environment(psi, w_h, params.eta, dim, "s")
    ph = np.tile(np.exp(1j * params.phi * np.arange(dim)), ni)
    sigma = ph[:, None] * sigma * ph.conj()[None, :]
    rho, skip_t = _target_channel(sigma, w_t, params.p, dim, ni)
    rho = _hermitize(rho)
    rho /= np.trace(rho).real
    report = {
        "probe": start.tail_deficit,
        "h": tail_h,
        "t": tail_t,
        "skipped": skip_h + skip_t,
    }
    return MixedState(_kept_layout(probe.has_idler, dim, "s"), rho, tail_h + tail_t), report


def absent_state(
    probe: Probe,
    params: ProtocolParams,
    dim: int = 20,
    convention: PortConvention = DEFAULT_CONVENTION,
    tail_tol: float = fock.DEFAULT_TAIL_TOL,
    renormalize_thermal: bool = True,
) -> tuple[MixedState, dict]:
    """Target-absent state; depends only on the probe, ``eta`` and ``n_th``."""
    convention = PortConvention(convention)
    start = probe.state(dim, tail_tol)
    psi = _as_isx(start, probe.has_idler, dim)
    w_h, tail_h = _thermal_weights(params.n_th, dim, renormalize_thermal)
    port = "h" if convention is PortConvention.LITERAL_EQ5 else "s"
    rho, skip_h = _after_environment(psi, w_h, params.eta, dim, port)
    rho = _hermitize(rho)
    rho /= np.trace(rho).real
    report = {"probe": start.tail_deficit, "h": tail_h, "skipped": skip_h}
    return MixedState(_kept_layout(probe.has_idler, dim, port), rho, tail_h), report


def hypothesis_states(
    probe: Probe,
    params: ProtocolParams,
    dim: int = 20,
    convention: PortConvention = DEFAULT_CONVENTION,
    tail_tol: float = fock.DEFAULT_TAIL_TOL,
    renormalize_thermal: bool = True,
) -> HypothesisPair:
    """Target-absent ``rho0`` and target-present ``rho1`` for one parameter point."""
    convention = PortConvention(convention)
    rho1, rep1 = returned_state(probe, params, dim, tail_tol, renormalize_thermal)
    rho0, rep0 = absent_state(probe, params, dim, convention, tail_tol, renormalize_thermal)
    report = {
        "probe": rep1["probe"],
        "h": rep1["h"],
        "t": rep1["t"],
        "skipped": rep0["skipped"] + rep1["skipped"],
    }
    # rho0 keeps (i, h) under the literal convention; both share one basis shape
    rho0 = MixedState(rho1.layout, rho0.matrix, rho0.tail_deficit)
    return HypothesisPair(rho0, rho1, params, convention, dim, report)


# --- moments ---------------------------------------------------------------


@dataclass(frozen=True)
class ReturnedMoments:
    mean_a: complex
    mean_n: float
    cross: complex | None
    quadrature_means: dict[float, float]


def returned_moments(
    probe: Probe,
    params: ProtocolParams,
    dim: int = 20,
    thetas: Sequence[float] = (),
    tail_tol: float = fock.DEFAULT_TAIL_TOL,
) -> ReturnedMoments:
    """``<a>``, ``<a†a>``, ``<a_s a_i>`` and ``<X(theta)>`` of the returned signal."""
    rho, _ = returned_state(probe, params, dim, tail_tol)
    layout = rho.layout
    a = fock.embed(fock.annihilation(dim, "s"), layout)
    mean_a = rho.expect(a)
    mean_n = rho.expect(a.dag() @ a).real
    cross = None
    if probe.has_idler:
        ai = fock.embed(fock.annihilation(dim, "i"), layout)
        cross = rho.expect(a @ ai)
    x, pq = (fock.embed(q, layout) for q in fock.quadratures(dim, "s"))
    quads = {float(th): rho.expect(x.scale(math.cos(th)) + pq.scale(math.sin(th))).real for th in thetas}
    return ReturnedMoments(mean_a, mean_n, cross, quads)
