"""Detection figures of merit: SNRs, gains, Chernoff and Helstrom bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate, optimize

from qillum import fock
from qillum.channel import HypothesisPair, PortConvention, Probe, ProtocolParams, returned_state


class NonConvergenceError(ArithmeticError):
    pass


@dataclass(frozen=True)
class SnrResult:
    value: float
    numerator: float
    denominator: float


@dataclass(frozen=True)
class QcbResult:
    xi: float
    b_opt: float
    q_of_b_samples: list[tuple[float, float]]
    helstrom: float
    convention: PortConvention
    dim: int
    tail_report: dict = field(default_factory=dict)


# --- closed forms ----------------------------------------------------------


def _classical_noise(params: ProtocolParams) -> float:
    """Denominator of SNR_C: quadrature variance of the returned coherent signal."""
    p, eta = params.p, params.eta
    return p * (1 - eta) * params.n_th + (1 - p) * params.n_t + 0.5


def _quantum_noise(params: ProtocolParams, cos2: float | None = None) -> float:
    N, p, eta = params.N, params.p, params.eta
    cos2 = math.cos(params.phi) ** 2 if cos2 is None else cos2
    return (
        p * eta * (1 + 4 * N * (N + 1) * cos2)
        + p * (1 - eta) * (2 * params.n_th * N + params.n_th + N + 1)
        + (1 - p) * (2 * params.n_t * N + params.n_t + N + 1)
    )


def snr_classical(params: ProtocolParams) -> SnrResult:
    num = 2 * params.eta * params.p * params.N * (1 - math.cos(params.phi)) ** 2
    den = _classical_noise(params)
    return SnrResult(num / den, num, den)


def snr_quantum(params: ProtocolParams) -> SnrResult:
    N = params.N
    num = 4 * params.p * params.eta * N * (N + 1) * (1 - math.cos(params.phi)) ** 2
    den = _quantum_noise(params)
    return SnrResult(num / den, num, den)


def gain(params: ProtocolParams) -> float:
    """SNR_Q / SNR_C in closed form; finite even where both SNRs vanish."""
    return 2 * (params.N + 1) * _classical_noise(params) / _quantum_noise(params)


def gain_db(g: float) -> float:
    if g <= 0:
        raise ValueError(f"gain must be positive to express in dB, got {g}")
    return 10 * math.log10(g)


def phase_averaged_gain_closed_form(params: ProtocolParams) -> float:
    N = params.N
    dc = _classical_noise(params)
    a = _quantum_noise(params, cos2=0.0)
    b = 4 * params.p * params.eta * N * (N + 1)
    if b == 0:
        return gain(params)
    # (2pi/B)(1 - sqrt(A/(A+B))) rewritten to avoid cancellation when B << A
    integral = 2 * math.pi / math.sqrt(a * (a + b)) + 2 * math.pi / ((a + b) * (1 + math.sqrt(a / (a + b))))
    return 2 * (N + 1) * dc * integral / (3 * math.pi)


def phase_averaged_gain(params: ProtocolParams, check_tol: float = 1e-8) -> float:
    """Ratio of the phase-integrated SNRs over ``[-pi, pi]``.

    Both integrals are evaluated by adaptive quadrature and compared against
    the closed form; a disagreement above ``check_tol`` raises.
    """
    if 4 * params.p * params.eta * params.N * (params.N + 1) == 0:
        # integrands are proportional (or both identically zero)
        return gain(params)
    ref_q = snr_quantum(params.replace(phi=math.pi)).value
    ref_c = snr_classical(params.replace(phi=math.pi)).value
    opts = dict(epsabs=1e-10, epsrel=1e-12, limit=200)
    num, _ = integrate.quad(lambda f: snr_quantum(params.replace(phi=f)).value / ref_q, -math.pi, math.pi, **opts)
    den, _ = integrate.quad(lambda f: snr_classical(params.replace(phi=f)).value / ref_c, -math.pi, math.pi, **opts)
    value = (num * ref_q) / (den * ref_c)
    closed = phase_averaged_gain_closed_form(params)
    if abs(value - closed) > check_tol:
        raise ArithmeticError(f"phase-averaged gain quadrature {value!r} disagrees with closed form {closed!r}")
    return value


# --- numeric SNR -----------------------------------------------------------


def _snr_observable(probe: Probe, layout: fock.ModeLayout) -> fock.ModeOperator:
    d = layout.space("s").dim
    xs, ps = (fock.embed(q, layout) for q in fock.quadratures(d, "s"))
    if not probe.has_idler:
        return xs
    xi, pi_ = (fock.embed(q, layout) for q in fock.quadratures(d, "i"))
    o = xs @ xi - ps @ pi_
    return fock.ModeOperator(layout, 0.5 * (o.matrix + o.matrix.conj().T), hermitian=True)


def numeric_snr_fixed(
    probe: Probe, params: ProtocolParams, dim: int, tail_tol: float = fock.DEFAULT_TAIL_TOL
) -> SnrResult:
    rho, _ = returned_state(probe, params, dim, tail_tol)
    ref, _ = returned_state(probe, params.replace(phi=0.0), dim, tail_tol)
    obs = _snr_observable(probe, rho.layout)
    mean = rho.expect(obs).real
    mean_ref = ref.expect(obs).real
    var = rho.expect(obs @ obs).real - mean**2
    num = (mean_ref - mean) ** 2
    return SnrResult(num / var, num, var)


def numeric_snr(
    probe: Probe,
    params: ProtocolParams,
    dims: Sequence[int] = (10, 15, 20, 25),
    rtol: float = 1e-4,
    tail_tol: float = fock.DEFAULT_TAIL_TOL,
) -> tuple[SnrResult, int]:
    """SNR from Fock-space moments of the returned state.

    CS probes measure ``x`` of the returned signal; TMSS probes measure
    ``x_s x_i - p_s p_i``. Returns the converged result and the dimension at
    which successive values first agreed to ``rtol``.
    """
    prev = None
    for d in dims:
        res = numeric_snr_fixed(probe, params, d, tail_tol)
        if prev is not None:
            scale = max(abs(res.value), abs(prev.value))
            if scale == 0 or abs(res.value - prev.value) <= rtol * scale:
                return res, d
        prev = res
    raise NonConvergenceError(f"numeric SNR not converged to {rtol:g} over dims {tuple(dims)}")


# --- discrimination bounds -------------------------------------------------


class _Chernoff:
    """``Q(b) = Tr[rho0^b rho1^(1-b)]`` from cached eigensystems."""

    def __init__(self, pair: HypothesisPair):
        w0, v0 = fock.eigensystem(pair.rho0)
        w1, v1 = fock.eigensystem(pair.rho1)
        self.w0 = np.where(w0 < fock.EIG_CLAMP, 0.0, w0)
        self.w1 = np.where(w1 < fock.EIG_CLAMP, 0.0, w1)
        # |<v0_j|v1_k>|^2 turns the trace into a real bilinear form
        self.overlap = np.abs(v0.conj().T @ v1) ** 2

    @staticmethod
    def _pow(w: np.ndarray, e: float) -> np.ndarray:
        out = np.zeros_like(w)
        nz = w > 0
        out[nz] = w[nz] ** e
        return out

    def __call__(self, b: float) -> float:
        return float(self._pow(self.w0, b) @ self.overlap @ self._pow(self.w1, 1 - b))


_CACHE_ATTR = "_chernoff_cache"


def _chernoff_for(pair: HypothesisPair) -> _Chernoff:
    cached = pair.__dict__.get(_CACHE_ATTR)
    if cached is None:
        cached = _Chernoff(pair)
        object.__setattr__(pair, _CACHE_ATTR, cached)
    return cached


def chernoff_q(pair: HypothesisPair, b: float) -> float:
    if not 0.0 <= b <= 1.0:
        raise ValueError(f"Chernoff parameter must lie in [0, 1], got {b}")
    return _chernoff_for(pair)(b)


def helstrom(pair: HypothesisPair) -> float:
    """Single-copy minimum error probability for equal priors."""
    return 0.5 * (1 - 0.5 * fock.trace_norm_distance(pair.rho0, pair.rho1))


def qcb(pair: HypothesisPair, xtol: float = 1e-6, grid: int = 21) -> QcbResult:
    """Single-copy quantum Chernoff bound ``xi = min_b Q(b) / 2``.

    ``Q`` is log-convex in ``b``, so a coarse grid brackets the minimum and a
    bounded Brent search refines it; the endpoints are always candidates.
    """
    q = _chernoff_for(pair)
    samples = [(float(b), q(float(b))) for b in np.linspace(0.0, 1.0, grid)]
    k = min(range(grid), key=lambda j: samples[j][1])
    lo = samples[max(k - 1, 0)][0]
    hi = samples[min(k + 1, grid - 1)][0]
    res = optimize.minimize_scalar(q, bounds=(lo, hi), method="bounded", options={"xatol": xtol})
    samples.append((float(res.x), float(res.fun)))
    b_opt, q_min = min(samples, key=lambda s: s[1])
    return QcbResult(
        xi=0.5 * q_min,
        b_opt=b_opt,
        q_of_b_samples=sorted(samples),
        helstrom=helstrom(pair),
        convention=pair.convention,
        dim=pair.dim,
        tail_report=dict(pair.tail_report),
    )


def multi_copy_bound(xi: float, M: int) -> float:
    """Chernoff bound for ``M`` copies given the single-copy ``xi``."""
    if int(M) != M or M < 1:
        raise ValueError(f"number of copies must be a positive integer, got {M!r}")
    if not 0.0 <= xi <= 0.5 + 1e-12:
        raise ValueError(f"xi must lie in [0, 1/2], got {xi}")
    return 0.5 * (2 * xi) ** int(M)
