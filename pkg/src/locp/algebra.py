"""Concrete unital *-closed algebras of square flag-compatible operators.

A :class:`LocalAlgebra` is a linearly independent family of square
BlockOps on a common flag whose span is closed under products and
adjoints and contains the identity.  Structure constants (product
tensor, star matrix, unit coordinates) are computed once and reused by
every map-level certificate; they are always recomputed from the basis,
never trusted from serialized data.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _linalg as la
from .config import Tolerances, resolve
from .errors import (ClosureError, DegeneracyError, DimensionError,
                     ValidationError)
from .flags import BlockOp, Flag, check_block_op

__all__ = ["LocalAlgebra", "build_algebra", "algebra_from_basis",
           "element", "kernel_basis"]


@dataclass(eq=False)
class LocalAlgebra:
    domain: Flag
    basis: list[BlockOp]
    unit_coords: np.ndarray
    mult_tensor: np.ndarray     # c[i,j,k]: a_i a_j = sum_k c[i,j,k] a_k
    star_matrix: np.ndarray     # s[k,i]:  a_i^*  = sum_k s[k,i] a_k
    mats: np.ndarray = field(repr=False, default=None)   # (d, N, N) canonical
    pq_tensor: np.ndarray = field(repr=False, default=None)
    _vec_pinv: np.ndarray = field(repr=False, default=None)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def coords(self, matrix, tol: float | None = None,
               tols: Tolerances | None = None) -> np.ndarray:
        """Coordinates of a (canonical-coordinates) matrix in the basis.

        Raises ValidationError when the matrix is not in the span to the
        given relative tolerance.
        """
        t = resolve(tols)
        tol = t.eq if tol is None else tol
        m = matrix.mat if isinstance(matrix, BlockOp) else la.as_complex(matrix)
        v = m.reshape(-1)
        c = self._vec_pinv @ v
        res = la.frob(np.tensordot(c, self.mats, axes=(0, 0)) - m)
        if res > tol * max(1.0, la.frob(m)):
            raise ValidationError(
                f"matrix lies outside the algebra span (residual {res:.3e})")
        return c

    def element(self, coords) -> BlockOp:
        c = np.asarray(coords, dtype=np.complex128)
        if c.shape != (self.dim,):
            raise DimensionError(
                f"coordinate vector has length {c.shape}, expected {self.dim}")
        return BlockOp(np.tensordot(c, self.mats, axes=(0, 0)),
                       self.domain, self.domain)

    def star_coords(self, coords) -> np.ndarray:
        """Coordinates of the adjoint of the element with given coordinates."""
        return self.star_matrix @ np.conj(coords)


def _as_canonical_mat(g, domain: Flag, tols: Tolerances | None) -> np.ndarray:
    if isinstance(g, BlockOp):
        if not (g.source is domain or (g.source.ambient == domain.ambient
                                       and g.source.dims == domain.dims)):
            raise ValidationError("generator lives on a different flag")
        if not g.is_square:
            raise ValidationError("generators must be square")
        return g.mat
    return check_block_op(g, domain, domain, tols=tols).mat


def algebra_from_basis(domain: Flag, basis_mats, tols: Tolerances | None = None
                       ) -> LocalAlgebra:
    """Build a LocalAlgebra from an explicit basis, validating closure.

    basis_mats may be BlockOps or matrices in ambient coordinates.  The
    given basis is kept as-is; structure constants are solved by least
    squares against the vectorized basis.
    """
    t = resolve(tols)
    mats = np.stack([_as_canonical_mat(b, domain, tols) for b in basis_mats])
    d, n = mats.shape[0], domain.ambient
    stack = mats.reshape(d, n * n).T               # (n^2, d)
    sv = np.linalg.svd(stack, compute_uv=False)
    if sv.size == 0 or sv[-1] <= t.rank * sv[0]:
        raise DegeneracyError("basis matrices are linearly dependent")
    vec_pinv = np.linalg.pinv(stack)

    def solve(m: np.ndarray, what: str, exc) -> np.ndarray:
        c = vec_pinv @ m.reshape(-1)
        res = la.frob(np.tensordot(c, mats, axes=(0, 0)) - m)
        if res > t.eq * max(1.0, la.frob(m)):
            raise exc(f"{what} lies outside the span (residual {res:.3e})")
        return c

    unit = solve(np.eye(n, dtype=np.complex128), "the identity", ValidationError)
    mult = np.empty((d, d, d), dtype=np.complex128)
    pq = np.empty((d, d, d), dtype=np.complex128)
    for i in range(d):
        for j in range(d):
            mult[i, j] = solve(mats[i] @ mats[j], f"a_{i} a_{j}", ClosureError)
            pq[i, j] = solve(mats[i].conj().T @ mats[j],
                             f"a_{i}^* a_{j}", ClosureError)
    star = np.empty((d, d), dtype=np.complex128)
    for i in range(d):
        star[:, i] = solve(mats[i].conj().T, f"a_{i}^*", ClosureError)

    basis = [BlockOp(mats[i], domain, domain) for i in range(d)]
    return LocalAlgebra(domain, basis, unit, mult, star,
                        mats=mats, pq_tensor=pq, _vec_pinv=vec_pinv)


def build_algebra(domain: Flag, generators,
                  tols: Tolerances | None = None) -> LocalAlgebra:
    """Close generators into a unital *-algebra of BlockOps on the domain.

    The basis is produced by stabilized Gram-Schmidt on vectorizations,
    seeded with the generators, their adjoints and the identity, then
    grown with products (in generation order) until the span is stable.
    Growth is capped at N^2 dimensions.
    """
    t = resolve(tols)
    n = domain.ambient
    cap = n * n
    seeds = [_as_canonical_mat(g, domain, tols) for g in generators]
    seeds += [m.conj().T for m in seeds] + [np.eye(n, dtype=np.complex128)]

    vecs: list[np.ndarray] = []   # orthonormal vectorizations
    mats: list[np.ndarray] = []

    def try_add(m: np.ndarray) -> bool:
        v = m.reshape(-1).copy()
        nrm0 = np.linalg.norm(v)
        if nrm0 <= max(t.rank, 1e-300):
            return False
        for _ in range(2):  # twice-is-enough reorthogonalization
            for b in vecs:
                v -= (b.conj() @ v) * b
        nrm = np.linalg.norm(v)
        if nrm <= t.rank * nrm0:
            return False
        v /= nrm
        vecs.append(v)
        mats.append(v.reshape(n, n))
        return True

    for s in seeds:
        try_add(s)
    changed = True
    passes = 0
    while changed:
        if passes > cap:
            raise ClosureError("span growth failed to stabilize")
        passes += 1
        changed = False
        current = list(mats)
        for a in current:
            for b in current:
                if try_add(a @ b):
                    changed = True
                    if len(mats) > cap:
                        raise ClosureError(
                            f"span grew past the N^2 = {cap} bound")
    return algebra_from_basis(domain, mats, tols=tols)


def element(alg: LocalAlgebra, coords) -> BlockOp:
    """The algebra element with the given coordinates, as a BlockOp."""
    return alg.element(coords)


def kernel_basis(alg: LocalAlgebra, level: int,
                 tols: Tolerances | None = None) -> list[np.ndarray]:
    """Coordinate basis of the ideal of elements vanishing on a level.

    Solves the null space of the restriction map x -> x|_{H_level} on
    algebra coordinates; the empty list means the restriction is
    injective on the algebra.
    """
    t = resolve(tols)
    k = alg.domain.k(level)
    r = alg.mats[:, :k, :k].reshape(alg.dim, k * k).T   # (k^2, d)
    ns = la.null_space(r, t.rank)
    return [np.ascontiguousarray(ns[:, j]) for j in range(ns.shape[1])]
