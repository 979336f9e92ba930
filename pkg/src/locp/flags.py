"""Finite flags of nested subspaces and flag-compatible block operators.

A :class:`Flag` is a desk-scale quantized domain: an ambient complex
dimension N together with a chain of subspace dimensions
k_1 <= ... <= k_L = N and a unitary frame whose first k_l columns span
the l-th subspace.  A :class:`BlockOp` is a matrix that maps every
level of a source flag into the corresponding level of a target flag
and does the same for the orthocomplements; equivalently it is
block-diagonal with respect to the successive-difference decompositions
once both spaces are rotated into their frame bases.

Internally every flag is canonicalized: BlockOp matrices are stored in
frame coordinates, where the l-th subspace is the span of the first k_l
standard basis vectors and compatibility is a literal sparsity pattern.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import _linalg as la
from .config import Tolerances, resolve
from .errors import (CompatibilityError, DimensionError, FrameError,
                     LevelError)

__all__ = [
    "Flag", "BlockOp", "LocalOrder", "make_flag", "check_block_op",
    "seminorm", "local_order", "flags_equal",
]


@dataclass(eq=False)
class Flag:
    """A chain of nested subspaces of C^ambient, given by dimensions."""

    ambient: int
    dims: tuple[int, ...]
    frame: np.ndarray | None = None  # None means the identity frame

    @property
    def levels(self) -> int:
        return len(self.dims)

    def k(self, level: int) -> int:
        """Dimension of the level-th subspace (1-based level index)."""
        self.check_level(level)
        return self.dims[level - 1]

    def check_level(self, level: int) -> None:
        if not 1 <= level <= self.levels:
            raise LevelError(
                f"level {level} out of range 1..{self.levels}")

    def frame_matrix(self) -> np.ndarray:
        if self.frame is None:
            return np.eye(self.ambient, dtype=np.complex128)
        return self.frame

    def projection(self, level: int) -> np.ndarray:
        """Orthogonal projection onto the level-th subspace, ambient coords."""
        k = self.k(level)
        f = self.frame_matrix()[:, :k]
        return f @ f.conj().T

    def block_mask(self, other: "Flag | None" = None) -> np.ndarray:
        """Boolean mask of allowed entries for ops self -> other (canonical).

        other defaults to self.  Entry (a, b) is allowed iff row a and
        column b belong to the same successive-difference block.
        """
        tgt = self if other is None else other
        if tgt.levels != self.levels:
            raise DimensionError("flags have different level counts")
        rows = _level_of_index(tgt)
        cols = _level_of_index(self)
        return rows[:, None] == cols[None, :]

    def __repr__(self) -> str:  # concise, frame elided
        tag = "" if self.frame is None else ", framed"
        return f"Flag({self.ambient}, dims={list(self.dims)}{tag})"


def _level_of_index(flag: Flag) -> np.ndarray:
    """level_of[i] = smallest l (1-based) with i < k_l."""
    out = np.empty(flag.ambient, dtype=np.int64)
    prev = 0
    for l, k in enumerate(flag.dims, start=1):
        out[prev:k] = l
        prev = max(prev, k)
    return out


class LocalOrder(Enum):
    ZERO = "zero"
    POSITIVE = "positive"
    SELF_ADJOINT = "self_adjoint"
    NONE = "none"


@dataclass(eq=False)
class BlockOp:
    """A flag-compatible operator, stored in canonical (frame) coordinates."""

    mat: np.ndarray
    source: Flag
    target: Flag

    @property
    def is_square(self) -> bool:
        return self.source is self.target or (
            self.source.ambient == self.target.ambient
            and self.source.dims == self.target.dims)

    def ambient_matrix(self) -> np.ndarray:
        """The matrix in the ambient coordinates of source and target."""
        m = self.mat
        if self.target.frame is not None:
            m = self.target.frame @ m
        if self.source.frame is not None:
            m = m @ self.source.frame.conj().T
        return m

    def restrict(self, level: int) -> np.ndarray:
        """Matrix of the restriction to the level-th subspaces."""
        ks = self.source.k(level)
        kt = self.target.k(level)
        return self.mat[:kt, :ks]

    def adjoint(self) -> "BlockOp":
        return BlockOp(self.mat.conj().T.copy(), self.target, self.source)

    def __matmul__(self, other: "BlockOp") -> "BlockOp":
        if other.target is not self.source and not flags_equal(
                other.target, self.source):
            raise DimensionError("flag mismatch in composition")
        return BlockOp(self.mat @ other.mat, other.source, self.target)

    def __add__(self, other: "BlockOp") -> "BlockOp":
        return BlockOp(self.mat + other.mat, self.source, self.target)

    def __sub__(self, other: "BlockOp") -> "BlockOp":
        return BlockOp(self.mat - other.mat, self.source, self.target)

    def scale(self, c: complex) -> "BlockOp":
        return BlockOp(c * self.mat, self.source, self.target)


def flags_equal(a: Flag, b: Flag, tols: Tolerances | None = None) -> bool:
    if a is b:
        return True
    t = resolve(tols)
    if a.ambient != b.ambient or a.dims != b.dims:
        return False
    fa, fb = a.frame_matrix(), b.frame_matrix()
    return la.frob(fa - fb) <= t.eq * max(1.0, np.sqrt(a.ambient))


def make_flag(ambient_dim: int, level_dims, frame=None,
              tols: Tolerances | None = None) -> Flag:
    """Validate and build a flag.

    level_dims must be nondecreasing positive integers ending at
    ambient_dim (so the union space is the whole ambient space); frame,
    if given, must be unitary to the eq tolerance.
    """
    t = resolve(tols)
    n = int(ambient_dim)
    if n <= 0:
        raise DimensionError(f"ambient dimension must be positive, got {n}")
    dims = tuple(int(k) for k in level_dims)
    if not dims:
        raise DimensionError("at least one level is required")
    if any(k <= 0 for k in dims):
        raise DimensionError(f"level dims must be positive, got {list(dims)}")
    if any(a > b for a, b in zip(dims, dims[1:])):
        raise DimensionError(f"level dims must be nondecreasing: {list(dims)}")
    if dims[-1] != n:
        raise DimensionError(
            f"top level dim {dims[-1]} must equal ambient dim {n}")
    if frame is None:
        return Flag(n, dims, None)
    f = la.as_complex(frame)
    if f.shape != (n, n):
        raise FrameError(f"frame shape {f.shape} does not match ambient {n}")
    res = la.frob(f.conj().T @ f - np.eye(n))
    if res > t.eq * max(1.0, np.sqrt(n)):
        raise FrameError(f"frame is not unitary (residual {res:.3e})")
    if la.frob(f - np.eye(n)) == 0.0:
        return Flag(n, dims, None)
    return Flag(n, dims, f)


def block_residuals(mat: np.ndarray, source: Flag, target: Flag) -> np.ndarray:
    """Per-level invariance residuals of a canonical-coordinates matrix.

    residual[l-1] = ||offdiag mass that maps level l into its complement||_F
                    + ||mass that maps the complement into level l||_F.
    """
    out = np.zeros(source.levels)
    for l in range(1, source.levels + 1):
        ks, kt = source.dims[l - 1], target.dims[l - 1]
        out[l - 1] = (np.linalg.norm(mat[kt:, :ks])
                      + np.linalg.norm(mat[:kt, ks:]))
    return out


def check_block_op(matrix, source: Flag, target: Flag,
                   tol: float | None = None,
                   tols: Tolerances | None = None,
                   ambient: bool = True) -> BlockOp:
    """Validate flag compatibility of a matrix and wrap it as a BlockOp.

    The matrix is given in ambient coordinates (set ambient=False if it
    is already in frame coordinates).  Each of the 2L invariance
    residuals must stay below tol relative to max(1, ||matrix||_F);
    tol defaults to the eq tolerance.
    """
    t = resolve(tols)
    tol = t.eq if tol is None else tol
    m = la.as_complex(matrix)
    if m.shape != (target.ambient, source.ambient):
        raise DimensionError(
            f"matrix shape {m.shape} does not match flags "
            f"({target.ambient} x {source.ambient})")
    if source.levels != target.levels:
        raise DimensionError("source and target must have equal level counts")
    if ambient:
        if target.frame is not None:
            m = target.frame.conj().T @ m
        if source.frame is not None:
            m = m @ source.frame
    scale = max(1.0, la.frob(m))
    res = block_residuals(m, source, target)
    bad = np.nonzero(res > tol * scale)[0]
    if bad.size:
        l = int(bad[0]) + 1
        raise CompatibilityError(l, float(res[bad[0]]))
    return BlockOp(np.ascontiguousarray(m), source, target)


def seminorm(op: BlockOp, level: int) -> float:
    """The level seminorm: operator norm of the restriction to level."""
    return la.spec_norm(op.restrict(level))


def local_order(op: BlockOp, level: int, tol: float | None = None,
                tols: Tolerances | None = None) -> LocalOrder:
    """Classify the restriction of a square op at a level.

    Returns the strongest of ZERO (the restriction vanishes), POSITIVE
    (hermitian with spectrum >= -tol), SELF_ADJOINT (hermitian only),
    or NONE.  tol defaults to the eq tolerance times max(1, ||restriction||).
    """
    if not op.is_square:
        raise DimensionError("local order is defined for square ops only")
    a = op.restrict(level)
    norm = la.spec_norm(a)
    if tol is None:
        tol = resolve(tols).eq * max(1.0, norm)
    if norm <= tol:
        return LocalOrder.ZERO
    if la.herm_residual(a) <= tol:
        if la.min_eig_herm(a) >= -tol:
            return LocalOrder.POSITIVE
        return LocalOrder.SELF_ADJOINT
    return LocalOrder.NONE
