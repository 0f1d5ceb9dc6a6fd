"""Truncated Fock-space linear algebra.

Every multi-mode object carries a :class:`ModeLayout`; the joint basis is
row-major, so the leftmost label is the slowest-varying tensor index.
States are plain numpy arrays wrapped in frozen dataclasses and are never
mutated after construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np
from scipy import constants, special

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
EIG_CLAMP = 1e-12
DEFAULT_TAIL_TOL = 1e-6


class InvalidSpaceError(ValueError):
    pass


class LayoutError(ValueError):
    pass


class TruncationError(ArithmeticError):
    """The analytic tail mass of a state exceeds the configured tolerance."""

    def __init__(self, message: str, required_dim: int | None = None):
        super().__init__(message)
        self.required_dim = required_dim


@dataclass(frozen=True)
class TruncatedModeSpace:
    """Fock levels ``0 .. dim-1`` of a single bosonic mode."""

    dim: int

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise InvalidSpaceError(f"mode dimension must be an integer >= 2, got {self.dim!r}")


def _as_space(space: Union[TruncatedModeSpace, int]) -> TruncatedModeSpace:
    return space if isinstance(space, TruncatedModeSpace) else TruncatedModeSpace(int(space))


@dataclass(frozen=True)
class ModeLayout:
    modes: tuple[tuple[str, TruncatedModeSpace], ...]

    def __post_init__(self):
        labels = [label for label, _ in self.modes]
        if len(set(labels)) != len(labels):
            raise LayoutError(f"duplicate mode labels in {labels}")
        if not labels:
            raise LayoutError("a layout needs at least one mode")

    @classmethod
    def of(cls, *pairs: tuple[str, Union[TruncatedModeSpace, int]]) -> "ModeLayout":
        return cls(tuple((label, _as_space(space)) for label, space in pairs))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.modes)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(space.dim for _, space in self.modes)

    @property
    def size(self) -> int:
        return int(np.prod(self.dims))

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LayoutError(f"unknown mode label {label!r}; layout has {self.labels}") from None

    def space(self, label: str) -> TruncatedModeSpace:
        return self.modes[self.index(label)][1]

    def subset(self, labels: Iterable[str]) -> "ModeLayout":
        """Sub-layout with the given labels, in this layout's order."""
        wanted = set(labels)
        for label in wanted:
            self.index(label)
        return ModeLayout(tuple(m for m in self.modes if m[0] in wanted))

    def __add__(self, other: "ModeLayout") -> "ModeLayout":
        return ModeLayout(self.modes + other.modes)


@dataclass(frozen=True)
class PureState:
    layout: ModeLayout
    amplitudes: np.ndarray
    tail_deficit: float = 0.0

    def __post_init__(self):
        if self.amplitudes.shape != (self.layout.size,):
            raise LayoutError(
                f"amplitude vector of shape {self.amplitudes.shape} does not match layout size {self.layout.size}"
            )

    @property
    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def renormalized(self) -> "PureState":
        return PureState(self.layout, self.amplitudes / math.sqrt(self.norm2), self.tail_deficit)

    def density(self) -> "MixedState":
        psi = self.amplitudes
        return MixedState(self.layout, np.outer(psi, psi.conj()), self.tail_deficit)

    def expect(self, op: "ModeOperator") -> complex:
        _check_same_layout(self.layout, op.layout)
        return complex(np.vdot(self.amplitudes, op.matrix @ self.amplitudes))


@dataclass(frozen=True)
class MixedState:
    layout: ModeLayout
    matrix: np.ndarray
    tail_deficit: float = 0.0

    def __post_init__(self):
        n = self.layout.size
        if self.matrix.shape != (n, n):
            raise LayoutError(f"matrix of shape {self.matrix.shape} does not match layout size {n}")

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def renormalized(self) -> "MixedState":
        return MixedState(self.layout, self.matrix / self.trace, self.tail_deficit)

    def expect(self, op: "ModeOperator") -> complex:
        _check_same_layout(self.layout, op.layout)
        # Tr[rho A] without forming the product
        return complex(np.einsum("ij,ji->", self.matrix, op.matrix))

    def check(self, hermitian_tol: float = HERMITIAN_TOL, psd_tol: float = PSD_TOL) -> None:
        """Raise ``ValueError`` unless Hermitian and positive semidefinite."""
        dev = np.max(np.abs(self.matrix - self.matrix.conj().T))
        if dev > hermitian_tol:
            raise ValueError(f"state is not Hermitian (max deviation {dev:.3e})")
        lowest = np.linalg.eigvalsh(self.matrix)[0]
        if lowest < -psd_tol:
            raise ValueError(f"state is not positive semidefinite (lowest eigenvalue {lowest:.3e})")


@dataclass(frozen=True)
class ModeOperator:
    layout: ModeLayout
    matrix: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        n = self.layout.size
        if self.matrix.shape != (n, n):
            raise LayoutError(f"matrix of shape {self.matrix.shape} does not match layout size {n}")
        if self.hermitian and np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0) > HERMITIAN_TOL:
            raise ValueError("operator flagged Hermitian is not")

    def dag(self) -> "ModeOperator":
        return ModeOperator(self.layout, self.matrix.conj().T, self.hermitian)

    def __matmul__(self, other: "ModeOperator") -> "ModeOperator":
        _check_same_layout(self.layout, other.layout)
        return ModeOperator(self.layout, self.matrix @ other.matrix)

    def __add__(self, other: "ModeOperator") -> "ModeOperator":
        _check_same_layout(self.layout, other.layout)
        return ModeOperator(self.layout, self.matrix + other.matrix, self.hermitian and other.hermitian)

    def __sub__(self, other: "ModeOperator") -> "ModeOperator":
        _check_same_layout(self.layout, other.layout)
        return ModeOperator(self.layout, self.matrix - other.matrix, self.hermitian and other.hermitian)

    def scale(self, c: complex) -> "ModeOperator":
        return ModeOperator(self.layout, c * self.matrix, self.hermitian and np.imag(c) == 0)


def _check_same_layout(a: ModeLayout, b: ModeLayout) -> None:
    if a != b:
        raise LayoutError(f"layout mismatch: {a.labels}{a.dims} vs {b.labels}{b.dims}")


# --- operators -------------------------------------------------------------


def annihilation(space: Union[TruncatedModeSpace, int], label: str = "a") -> ModeOperator:
    """Lowering operator with ``a|n> = sqrt(n)|n-1>``."""
    space = _as_space(space)
    matrix = np.diag(np.sqrt(np.arange(1, space.dim, dtype=float)), k=1).astype(complex)
    return ModeOperator(ModeLayout.of((label, space)), matrix)


def number(space: Union[TruncatedModeSpace, int], label: str = "a") -> ModeOperator:
    space = _as_space(space)
    return ModeOperator(ModeLayout.of((label, space)), np.diag(np.arange(space.dim)).astype(complex), hermitian=True)


def identity(layout: ModeLayout) -> ModeOperator:
    return ModeOperator(layout, np.eye(layout.size, dtype=complex), hermitian=True)


def quadratures(space: Union[TruncatedModeSpace, int], label: str = "a") -> tuple[ModeOperator, ModeOperator]:
    """Return ``x = (a + a†)/√2`` and ``p = i(a† - a)/√2``."""
    a = annihilation(space, label)
    x = ModeOperator(a.layout, (a.matrix + a.matrix.conj().T) / math.sqrt(2), hermitian=True)
    p = ModeOperator(a.layout, 1j * (a.matrix.conj().T - a.matrix) / math.sqrt(2), hermitian=True)
    return x, p


def photon_number_sectors(layout: ModeLayout, labels: Sequence[str] | None = None) -> np.ndarray:
    """Total occupation of ``labels`` (default: all modes) for every joint basis index."""
    labels = layout.labels if labels is None else labels
    occ = np.indices(layout.dims).reshape(len(layout.dims), -1)
    return sum(occ[layout.index(label)] for label in labels)


# --- states ----------------------------------------------------------------


def coherent_tail(alpha: complex, dim: int) -> float:
    """Poisson weight at photon numbers >= ``dim``."""
    x = abs(alpha) ** 2
    return 0.0 if x == 0 else float(special.gammainc(dim, x))


def _required_dim(tail, tol: float, start: int, limit: int = 100_000) -> int:
    d = max(start, 2)
    while tail(d) > tol and d < limit:
        d += 1
    return d


def coherent_state(
    alpha: complex,
    space: Union[TruncatedModeSpace, int],
    label: str = "s",
    tail_tol: float = DEFAULT_TAIL_TOL,
    renormalize: bool = False,
) -> PureState:
    space = _as_space(space)
    d = space.dim
    tail = coherent_tail(alpha, d)
    if tail > tail_tol:
        need = _required_dim(lambda k: coherent_tail(alpha, k), tail_tol, d)
        raise TruncationError(
            f"coherent state |alpha|={abs(alpha):.4g} loses {tail:.3e} > {tail_tol:.1e} at dim {d}; "
            f"dim >= {need} required",
            need,
        )
    n = np.arange(d)
    log_fact = special.gammaln(n + 1)
    if alpha == 0:
        amps = np.zeros(d, dtype=complex)
        amps[0] = 1.0
    else:
        mag = np.exp(-abs(alpha) ** 2 / 2 + n * math.log(abs(alpha)) - log_fact / 2)
        amps = mag * np.exp(1j * np.angle(alpha) * n)
    state = PureState(ModeLayout.of((label, space)), amps.astype(complex), tail)
    return state.renormalized() if renormalize else state


def tmss_lambda(N: float) -> float:
    return math.sqrt(N / (N + 1))


def tmss(
    N: float,
    space_s: Union[TruncatedModeSpace, int],
    space_i: Union[TruncatedModeSpace, int],
    tail_tol: float = DEFAULT_TAIL_TOL,
    renormalize: bool = False,
) -> PureState:
    """Two-mode squeezed vacuum with ``N`` mean photons per mode, layout ``(i, s)``."""
    if N < 0:
        raise ValueError(f"mean photon number must be >= 0, got {N}")
    space_s, space_i = _as_space(space_s), _as_space(space_i)
    d = min(space_s.dim, space_i.dim)
    lam2 = N / (N + 1)
    tail = lam2**d
    if tail > tail_tol:
        need = math.ceil(math.log(tail_tol) / math.log(lam2))
        raise TruncationError(
            f"TMSS with N={N:.4g} loses {tail:.3e} > {tail_tol:.1e} at dim {d}; dim >= {need} required", need
        )
    layout = ModeLayout.of(("i", space_i), ("s", space_s))
    amps = np.zeros((space_i.dim, space_s.dim), dtype=complex)
    n = np.arange(d)
    amps[n, n] = math.sqrt(1 - lam2) * np.sqrt(lam2) ** n
    state = PureState(layout, amps.ravel(), tail)
    return state.renormalized() if renormalize else state


def thermal_probabilities(nbar: float, dim: int) -> np.ndarray:
    """Bose-Einstein occupation probabilities for levels ``0 .. dim-1`` (not renormalized)."""
    if nbar < 0:
        raise ValueError(f"mean occupation must be >= 0, got {nbar}")
    n = np.arange(dim)
    if nbar == 0:
        return (n == 0).astype(float)
    return nbar**n / (1 + nbar) ** (n + 1)


def thermal_state(
    nbar: float, space: Union[TruncatedModeSpace, int], label: str = "a", renormalize: bool = True
) -> MixedState:
    space = _as_space(space)
    probs = thermal_probabilities(nbar, space.dim)
    tail = (nbar / (1 + nbar)) ** space.dim
    if renormalize:
        probs = probs / probs.sum()
    return MixedState(ModeLayout.of((label, space)), np.diag(probs).astype(complex), tail)


def thermal_occupation(omega: float, T: float) -> float:
    """Bose-Einstein mean occupation for angular frequency ``omega`` [rad/s] at ``T`` [K]."""
    if omega <= 0 or T <= 0:
        raise ValueError("angular frequency and temperature must be positive")
    x = constants.hbar * omega / (constants.k * T)
    return float(1.0 / np.expm1(x)) if x < 700 else 0.0


# --- composition -----------------------------------------------------------

_Composable = Union[PureState, MixedState, ModeOperator]


def tensor(*items: _Composable) -> _Composable:
    """Kronecker product; labels are concatenated in argument order."""
    if not items:
        raise ValueError("tensor needs at least one argument")
    kind = type(items[0])
    if any(type(x) is not kind for x in items):
        raise TypeError("tensor arguments must all be of the same kind")
    layout = items[0].layout
    for x in items[1:]:
        layout = layout + x.layout
    if kind is PureState:
        amps = items[0].amplitudes
        keep = 1 - items[0].tail_deficit
        for x in items[1:]:
            amps = np.kron(amps, x.amplitudes)
            keep *= 1 - x.tail_deficit
        return PureState(layout, amps, 1 - keep)
    mat = items[0].matrix
    for x in items[1:]:
        mat = np.kron(mat, x.matrix)
    if kind is MixedState:
        keep = float(np.prod([1 - x.tail_deficit for x in items]))
        return MixedState(layout, mat, 1 - keep)
    return ModeOperator(layout, mat, all(x.hermitian for x in items))


def embed(op: ModeOperator, target: ModeLayout) -> ModeOperator:
    """Lift ``op`` to ``target``, acting as the identity on the other modes."""
    for label, space in op.layout.modes:
        if target.space(label) != space:
            raise LayoutError(f"mode {label!r} has a different dimension in the target layout")
    rest = [m for m in target.modes if m[0] not in op.layout.labels]
    full = op.matrix
    if rest:
        rest_layout = ModeLayout(tuple(rest))
        full = np.kron(op.matrix, np.eye(rest_layout.size))
        order = op.layout.labels + rest_layout.labels
    else:
        order = op.layout.labels
    if order != target.labels:
        k = len(order)
        dims = [target.space(label).dim for label in order]
        perm = [order.index(label) for label in target.labels]
        full = full.reshape(dims + dims).transpose(perm + [k + j for j in perm]).reshape(target.size, target.size)
    return ModeOperator(target, np.ascontiguousarray(full), op.hermitian)


def partial_trace(state: Union[PureState, MixedState], keep: Iterable[str]) -> MixedState:
    """Reduced density operator on ``keep`` (returned in the state's layout order)."""
    keep = set(keep)
    if not keep:
        raise LayoutError("partial trace needs a non-empty set of modes to keep")
    layout = state.layout
    kept = layout.subset(keep)
    kidx = [layout.index(label) for label in kept.labels]
    tidx = [i for i in range(len(layout.dims)) if i not in kidx]
    K = kept.size
    T = layout.size // K
    dims = list(layout.dims)
    if isinstance(state, PureState):
        m = state.amplitudes.reshape(dims).transpose(kidx + tidx).reshape(K, T)
        rho = m @ m.conj().T
    else:
        n = len(dims)
        t = state.matrix.reshape(dims + dims).transpose(kidx + tidx + [n + i for i in kidx + tidx])
        rho = np.einsum("itjt->ij", t.reshape(K, T, K, T))
    return MixedState(kept, rho, state.tail_deficit)


# --- matrix functions ------------------------------------------------------


def expm_skew(generator: ModeOperator, angle: float, sectors: np.ndarray | None = None) -> ModeOperator:
    """``exp(angle * K)`` for anti-Hermitian ``K``.

    ``sectors`` labels each basis index with a conserved quantity (e.g. total
    photon number); the exponential is then taken block by block.
    """
    k = generator.matrix
    dev = np.max(np.abs(k + k.conj().T), initial=0.0)
    if dev > HERMITIAN_TOL:
        raise ValueError(f"generator is not anti-Hermitian (max deviation {dev:.3e})")
    n = k.shape[0]
    if sectors is None:
        sectors = np.zeros(n, dtype=int)
    out = np.zeros_like(k, dtype=complex)
    for value in np.unique(sectors):
        idx = np.flatnonzero(sectors == value)
        block = k[np.ix_(idx, idx)]
        leak = np.abs(k[np.ix_(idx, np.flatnonzero(sectors != value))])
        if leak.size and leak.max() > 0:
            raise ValueError("generator couples different sectors")
        # K = -iH with H Hermitian
        w, v = np.linalg.eigh(1j * block)
        out[np.ix_(idx, idx)] = (v * np.exp(-1j * angle * w)) @ v.conj().T
    return ModeOperator(generator.layout, out)


def eigensystem(state: MixedState) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and the unitary of eigenvectors."""
    m = state.matrix
    dev = np.max(np.abs(m - m.conj().T))
    if dev > HERMITIAN_TOL:
        raise ValueError(f"state is not Hermitian (max deviation {dev:.3e})")
    return np.linalg.eigh(m)


def spectral_power(eigvals: np.ndarray, eigvecs: np.ndarray, exponent: float) -> np.ndarray:
    """``V diag(w**exponent) V†`` with tiny eigenvalues clamped and ``0**0 = 0``."""
    w = np.where(eigvals < EIG_CLAMP, 0.0, eigvals)
    wp = np.zeros_like(w)
    support = w > 0
    wp[support] = w[support] ** exponent
    return (eigvecs * wp) @ eigvecs.conj().T


def fractional_power(
    state: MixedState, exponent: float, eig: tuple[np.ndarray, np.ndarray] | None = None
) -> ModeOperator:
    if not 0.0 <= exponent <= 1.0:
        raise ValueError(f"exponent must lie in [0, 1], got {exponent}")
    w, v = eig if eig is not None else eigensystem(state)
    m = spectral_power(w, v, exponent)
    return ModeOperator(state.layout, 0.5 * (m + m.conj().T), hermitian=True)


def trace_norm_distance(a: MixedState, b: MixedState) -> float:
    """``||a - b||_1``, the sum of absolute eigenvalues of the difference."""
    _check_same_layout(a.layout, b.layout)
    diff = a.matrix - b.matrix
    return float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T)))))
