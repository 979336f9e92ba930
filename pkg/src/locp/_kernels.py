"""Hot numeric kernels, JIT-compiled with numba when available.

The three batch-heavy inner loops of the package live here:

* assembly of pairwise-product block matrices ``G[(p,a),(q,b)] =
  sum_m pq[p,q,m] * imgs[m,a,b]`` (the positivity-certificate matrix and
  the dilation Gram matrix are both of this form),
* Kraus conjugation ``imgs[k] = sum_r V_r^H a_k V_r``,
* the brute-force amplified-positivity sampler.

Each kernel has a pure-numpy implementation and a numba ``@njit``
twin compiled from the same loop nest.  Selection happens at import
time: numba is used when importable unless the environment variable
``LOCP_NO_NUMBA`` is set to a truthy value.  Both paths compute the
same floating-point result (the random inputs are drawn outside the
kernels).  ``benchmarks/bench_kernels.py`` compares the two.
"""
from __future__ import annotations

import os

import numpy as np

_DISABLE = os.environ.get("LOCP_NO_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

try:
    from numba import njit as _njit
    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

USING_NUMBA = _HAVE_NUMBA and not _DISABLE


# --------------------------------------------------------------------------
# pairwise product blocks
# --------------------------------------------------------------------------

def pair_blocks_numpy(pq: np.ndarray, imgs: np.ndarray) -> np.ndarray:
    """Assemble the (d*k) x (d*k) matrix with (p,q) block sum_m pq[p,q,m]*imgs[m].

    pq : (d, d, d) complex, imgs : (d, k, k) complex.
    """
    d = pq.shape[0]
    k = imgs.shape[1]
    g = np.einsum("pqm,mab->paqb", pq, imgs, optimize=True)
    return np.ascontiguousarray(g.reshape(d * k, d * k))


def _pair_blocks_loops(pq, imgs):
    d = pq.shape[0]
    k = imgs.shape[1]
    g = np.zeros((d * k, d * k), dtype=np.complex128)
    for p in range(d):
        for q in range(d):
            for m in range(d):
                c = pq[p, q, m]
                if c != 0:
                    for a in range(k):
                        for b in range(k):
                            g[p * k + a, q * k + b] += c * imgs[m, a, b]
    return g


# --------------------------------------------------------------------------
# Kraus conjugation
# --------------------------------------------------------------------------

def kraus_conjugate_numpy(vs: np.ndarray, amats: np.ndarray) -> np.ndarray:
    """imgs[k] = sum_r vs[r]^H @ amats[k] @ vs[r].

    vs : (R, n_src, n_tgt) complex, amats : (d, n_src, n_src) complex.
    Returns (d, n_tgt, n_tgt).
    """
    if vs.shape[0] == 0:
        d = amats.shape[0]
        n = vs.shape[2]
        return np.zeros((d, n, n), dtype=np.complex128)
    return np.einsum("rai,kab,rbj->kij", vs.conj(), amats, vs, optimize=True)


def _kraus_conjugate_loops(vs, amats):
    nr = vs.shape[0]
    d = amats.shape[0]
    nt = vs.shape[2]
    out = np.zeros((d, nt, nt), dtype=np.complex128)
    for k in range(d):
        for r in range(nr):
            out[k] += vs[r].conj().T @ (amats[k] @ vs[r])
    return out


# --------------------------------------------------------------------------
# amplified-positivity sampler
# --------------------------------------------------------------------------

def oracle_samples_numpy(pq, imgs_l, kimgs_l, bs, ys, ns):
    """Evaluate the amplified image of sampled locally positive elements.

    For sample s the element is X = [b_i^* b_j] + Y with b_i the random
    algebra elements bs[s, i, :] and Y the matrix of kernel elements with
    coordinates ys[s, i, j, :].  The kernel assembles the image block
    matrix restricted to the checked level,

        M[(i,a),(j,b)] = sum_m xc[i,j,m] imgs_l[m,a,b]
                         + sum_t ys[s,i,j,t] kimgs_l[t,a,b],

    and returns per-sample (min eig of hermitian part, hermiticity
    residual, spectral scale).

    pq      : (d, d, d) product-of-adjoint coordinate tensor
    imgs_l  : (d, k, k) map images restricted to the level
    kimgs_l : (t, k, k) images of the kernel basis restricted to the level
    bs      : (S, n_max, d) random coordinates
    ys      : (S, n_max, n_max, t) random kernel coordinates
    ns      : (S,) sample sizes, each in 1..n_max
    """
    s_count = bs.shape[0]
    out = np.empty((s_count, 3), dtype=np.float64)
    for s in range(s_count):
        n = int(ns[s])
        b = bs[s, :n, :]
        # xc[i,j,m] = sum_{p,q} conj(b[i,p]) b[j,q] pq[p,q,m]
        xc = np.einsum("ip,jq,pqm->ijm", b.conj(), b, pq, optimize=True)
        m = np.einsum("ijm,mab->iajb", xc, imgs_l, optimize=True)
        if kimgs_l.shape[0] > 0:
            m = m + np.einsum("ijt,tab->iajb", ys[s, :n, :n, :], kimgs_l,
                              optimize=True)
        k = imgs_l.shape[1]
        mat = m.reshape(n * k, n * k)
        herm_res = np.linalg.norm(mat - mat.conj().T)
        w = np.linalg.eigvalsh(0.5 * (mat + mat.conj().T))
        out[s, 0] = w[0] if w.size else 0.0
        out[s, 1] = herm_res
        out[s, 2] = max(abs(w[0]), abs(w[-1])) if w.size else 0.0
    return out


def _oracle_samples_loops(pq, imgs_l, kimgs_l, bs, ys, ns):
    s_count = bs.shape[0]
    d = pq.shape[0]
    k = imgs_l.shape[1]
    t_count = kimgs_l.shape[0]
    out = np.empty((s_count, 3), dtype=np.float64)
    for s in range(s_count):
        n = int(ns[s])
        xc = np.zeros((n, n, d), dtype=np.complex128)
        for i in range(n):
            for j in range(n):
                for p in range(d):
                    bip = np.conj(bs[s, i, p])
                    if bip == 0:
                        continue
                    for q in range(d):
                        c = bip * bs[s, j, q]
                        for m in range(d):
                            xc[i, j, m] += c * pq[p, q, m]
        mat = np.zeros((n * k, n * k), dtype=np.complex128)
        for i in range(n):
            for j in range(n):
                for m in range(d):
                    c = xc[i, j, m]
                    if c != 0:
                        for a in range(k):
                            for b in range(k):
                                mat[i * k + a, j * k + b] += c * imgs_l[m, a, b]
                for t in range(t_count):
                    c = ys[s, i, j, t]
                    if c != 0:
                        for a in range(k):
                            for b in range(k):
                                mat[i * k + a, j * k + b] += c * kimgs_l[t, a, b]
        herm = 0.5 * (mat + mat.conj().T)
        acc = 0.0
        for a in range(n * k):
            for b in range(n * k):
                diff = mat[a, b] - np.conj(mat[b, a])
                acc += diff.real * diff.real + diff.imag * diff.imag
        herm_res = np.sqrt(acc)
        w = np.linalg.eigvalsh(herm)
        if w.size:
            out[s, 0] = w[0]
            out[s, 1] = herm_res
            out[s, 2] = max(abs(w[0]), abs(w[-1]))
        else:
            out[s, 0] = 0.0
            out[s, 1] = herm_res
            out[s, 2] = 0.0
    return out


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------

if USING_NUMBA:
    pair_blocks_numba = _njit(cache=True)(_pair_blocks_loops)
    kraus_conjugate_numba = _njit(cache=True)(_kraus_conjugate_loops)
    oracle_samples_numba = _njit(cache=True)(_oracle_samples_loops)
    pair_blocks = pair_blocks_numba
    kraus_conjugate = kraus_conjugate_numba
    oracle_samples = oracle_samples_numba
else:
    pair_blocks_numba = None
    kraus_conjugate_numba = None
    oracle_samples_numba = None
    pair_blocks = pair_blocks_numpy
    kraus_conjugate = kraus_conjugate_numpy
    oracle_samples = oracle_samples_numpy
