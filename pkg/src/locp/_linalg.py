"""Small dense linear-algebra helpers shared across the package.

Everything here is numpy-only and deterministic (LAPACK drivers with
fixed ordering; ties in rank cuts resolved by keeping the larger index
set, matching the inclusive-threshold convention used by the dilation).
"""
from __future__ import annotations

import numpy as np

from .errors import SpectrumError


def as_complex(a) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(a, dtype=np.complex128))


def frob(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


def spec_norm(a: np.ndarray) -> float:
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def herm_part(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


def herm_residual(a: np.ndarray) -> float:
    return frob(a - a.conj().T)


def min_eig_herm(a: np.ndarray) -> float:
    """Smallest eigenvalue of the hermitian part of a (0.0 for empty)."""
    if a.size == 0:
        return 0.0
    return float(np.linalg.eigvalsh(herm_part(a))[0])


def polar_unitary(a: np.ndarray) -> np.ndarray:
    """Unitary factor of the polar decomposition of a square matrix."""
    if a.size == 0:
        return a.copy()
    u, _, vh = np.linalg.svd(a)
    return u @ vh


def herm_sqrt(a: np.ndarray, clip: float = 0.0) -> np.ndarray:
    """Principal square root of a hermitian PSD matrix.

    Eigenvalues in [-clip, 0) are clipped to zero; anything below -clip
    raises SpectrumError.
    """
    if a.size == 0:
        return a.copy()
    w, v = np.linalg.eigh(herm_part(a))
    if w[0] < -clip:
        raise SpectrumError(
            f"matrix is not PSD: min eigenvalue {w[0]:.3e} < {-clip:.3e}")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def orthonormal_columns(m: np.ndarray, rank_tol: float,
                        ref: float | None = None) -> np.ndarray:
    """Orthonormal basis of the column space of m (columns of the result).

    Rank cut at rank_tol relative to the largest singular value,
    inclusive (singular values equal to the threshold are kept).  Pass
    ref to cut against an external scale instead (needed when m is a
    deflated residual whose own largest singular value may be roundoff).
    """
    if m.size == 0:
        return np.zeros((m.shape[0], 0), dtype=np.complex128)
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    top = s[0] if ref is None else ref
    if s.size == 0 or top <= 0.0:
        return np.zeros((m.shape[0], 0), dtype=np.complex128)
    keep = s >= rank_tol * top
    return np.ascontiguousarray(u[:, keep])


def adapted_frame(col_blocks: list[np.ndarray], dim: int,
                  rank_tol: float) -> tuple[np.ndarray, list[int]]:
    """Orthonormal frame of C^dim adapted to a nested chain of column spans.

    col_blocks[l] holds the generators of the l-th subspace (each block
    contains the previous one's generators).  Returns (frame, dims): the
    first dims[l] columns of frame span the l-th space.  If the last
    space does not exhaust C^dim the frame is completed with the
    orthogonal complement.
    """
    basis = np.zeros((dim, 0), dtype=np.complex128)
    dims: list[int] = []
    for block in col_blocks:
        block = as_complex(block)
        ref = spec_norm(block)
        if block.size and basis.shape[1]:
            block = block - basis @ (basis.conj().T @ block)
        new = orthonormal_columns(block, rank_tol, ref=ref)
        if new.shape[1] and basis.shape[1]:
            # one reorthogonalization pass for numerical hygiene
            new = new - basis @ (basis.conj().T @ new)
            new = orthonormal_columns(new, 0.5)
        basis = np.hstack([basis, new]) if new.shape[1] else basis
        dims.append(basis.shape[1])
    if basis.shape[1] < dim:
        comp = np.eye(dim, dtype=np.complex128) - basis @ basis.conj().T
        extra = orthonormal_columns(comp, 0.5)
        basis = np.hstack([basis, extra[:, : dim - basis.shape[1]]])
    return np.ascontiguousarray(basis), dims


def null_space_psd(m: np.ndarray, rank_tol: float) -> np.ndarray:
    """Orthonormal null-space basis (columns) of a hermitian PSD matrix."""
    if m.shape[0] == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    w, v = np.linalg.eigh(herm_part(m))
    top = max(w[-1], 0.0)
    keep = w <= rank_tol * top if top > 0 else np.ones_like(w, dtype=bool)
    return np.ascontiguousarray(v[:, keep])


def null_space(m: np.ndarray, rank_tol: float) -> np.ndarray:
    """Orthonormal basis (columns) of the null space of a general matrix."""
    if m.size == 0:
        n = m.shape[1]
        return np.eye(n, dtype=np.complex128)
    _, s, vh = np.linalg.svd(m)
    n = m.shape[1]
    top = s[0] if s.size else 0.0
    if top <= 0.0:
        return np.eye(n, dtype=np.complex128)
    rank = int(np.sum(s > rank_tol * top))
    return np.ascontiguousarray(vh[rank:, :].conj().T)


def eig_factor(gram: np.ndarray, rank_tol: float):
    """Rank-revealing factorization Q^H Q = gram of a hermitian PSD matrix.

    Returns (q, q_pinv, eigvals) with q of shape (r, n), rows ordered by
    descending eigenvalue, and q_pinv = q^+ of shape (n, r).  The rank
    cut keeps eigenvalues >= rank_tol * max (inclusive); a PSD-violating
    eigenvalue is reported by the caller, not here.
    """
    w, v = np.linalg.eigh(herm_part(gram))
    w = w[::-1]
    v = v[:, ::-1]
    top = max(w[0], 0.0) if w.size else 0.0
    if top <= 0.0:
        keep = np.zeros(w.shape, dtype=bool)
    else:
        keep = w >= rank_tol * top
        keep &= w > 0
    wk = w[keep]
    vk = v[:, keep]
    q = (np.sqrt(wk)[:, None]) * vk.conj().T
    q_pinv = vk * (1.0 / np.sqrt(wk))[None, :] if wk.size else vk
    return np.ascontiguousarray(q), np.ascontiguousarray(q_pinv), w
