"""Independent brute-force references used by the tests.

Nothing here calls into ``qillum.channel``; operators are assembled with
plain ``np.kron`` and exponentiated with ``scipy.linalg.expm``.
"""

import itertools
import math

import numpy as np
from scipy.linalg import expm


def lowering(d):
    a = np.zeros((d, d))
    for n in range(1, d):
        a[n - 1, n] = math.sqrt(n)
    return a


def op_on(op, k, dims):
    """Embed single-mode ``op`` at position ``k`` of a row-major product space."""
    mats = [np.eye(d) for d in dims]
    mats[k] = op
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def dense_bs(j, k, dims, r):
    """exp(theta (a_j† a_k - a_j a_k†)) on the full space, theta = arccos sqrt(r)."""
    aj = op_on(lowering(dims[j]), j, dims)
    ak = op_on(lowering(dims[k]), k, dims)
    gen = aj.T @ ak - aj @ ak.T
    return expm(math.acos(math.sqrt(r)) * gen)


def dense_phase(k, dims, phi):
    return op_on(np.diag(np.exp(1j * phi * np.arange(dims[k]))), k, dims)


def brute_partial_trace(rho, dims, keep):
    """Explicit index loops; ``keep`` is a list of positions in ascending order."""
    traced = [i for i in range(len(dims)) if i not in keep]
    kdims = [dims[i] for i in keep]
    K = int(np.prod(kdims))
    out = np.zeros((K, K), dtype=complex)
    strides = [int(np.prod(dims[i + 1:])) for i in range(len(dims))]
    for kr in itertools.product(*(range(d) for d in kdims)):
        for kc in itertools.product(*(range(d) for d in kdims)):
            acc = 0.0
            for t in itertools.product(*(range(dims[i]) for i in traced)):
                r = [0] * len(dims)
                c = [0] * len(dims)
                for pos, v in zip(keep, kr):
                    r[pos] = v
                for pos, v in zip(keep, kc):
                    c[pos] = v
                for pos, v in zip(traced, t):
                    r[pos] = v
                    c[pos] = v
                acc += rho[sum(a * s for a, s in zip(r, strides)), sum(a * s for a, s in zip(c, strides))]
            out[np.ravel_multi_index(kr, kdims), np.ravel_multi_index(kc, kdims)] = acc
    return out


def thermal_diag(nbar, d):
    p = np.array([nbar**n / (1 + nbar) ** (n + 1) for n in range(d)])
    return np.diag(p / p.sum())


def probe_vector(kind, N, d):
    if kind == "cs":
        a = math.sqrt(N)
        v = np.array([math.exp(-N / 2) * a**n / math.sqrt(math.factorial(n)) for n in range(d)], dtype=complex)
        return v / np.linalg.norm(v)
    lam = math.sqrt(N / (N + 1))
    m = np.zeros((d, d), dtype=complex)
    for n in range(d):
        m[n, n] = math.sqrt(1 - lam**2) * lam**n
    v = m.ravel()  # (i, s)
    return v / np.linalg.norm(v)


def dense_hypotheses(kind, params, d, convention):
    """Evolve the full probe x thermal(h) x thermal(t) density matrix explicitly.

    Target absent: ``literal-eq5`` keeps (i, h) after U1 and a p=0 target
    splitter; ``signal`` keeps (i, s) with no target splitter.
    """
    has_idler = kind == "tmss"
    dims = [d] * (4 if has_idler else 3)
    s, h, t = (1, 2, 3) if has_idler else (0, 1, 2)
    psi = probe_vector(kind, params.N, d)
    rho_in = np.outer(psi, psi.conj())
    rho = np.kron(np.kron(rho_in, thermal_diag(params.n_th, d)), thermal_diag(params.n_t, d))

    u1 = dense_bs(s, h, dims, params.eta)
    ph = dense_phase(s, dims, params.phi)
    u2 = dense_bs(s, t, dims, params.p)
    present = u2 @ ph @ u1
    rho1 = brute_partial_trace(present @ rho @ present.conj().T, dims, [0, s] if has_idler else [s])

    if convention == "literal-eq5":
        absent = dense_bs(s, t, dims, 0.0) @ u1
        keep = [0, h] if has_idler else [h]
    else:
        absent = u1
        keep = [0, s] if has_idler else [s]
    rho0 = brute_partial_trace(absent @ rho @ absent.conj().T, dims, keep)
    return rho0, rho1
