"""Radon-Nikodym derivatives of dominated local CP maps.

Given a minimal dilation of phi and a map psi dominated by phi, the
generator-to-generator contraction S : H^phi -> H^psi with
S(pi_phi(a) V_phi h) = pi_psi(a) V_psi h yields the derivative
T = S^H S, the unique positive contraction in the commutant of the
representation (intersected with the dilation-flag operators) that
reproduces psi by compression: psi(a) = V^H T pi(a) V.  Conversely any
such T induces a dominated map through the same formula; the
correspondence is affine and order preserving.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _linalg as la
from .config import Tolerances, resolve
from .cpmaps import LocalCPMap, dominates, make_map
from .errors import (CommutantError, DominationError, EmptyCommutantError,
                     SpectrumError)
from .flags import BlockOp, block_residuals, check_block_op
from .reports import CertificateReport
from .stinespring import StinespringRep, _check_same_frame, dilate_minimal

__all__ = [
    "RNCertificate", "intertwiner", "derivative", "map_from_derivative",
    "commutant_basis", "sample_contraction_in_commutant",
]


@dataclass(eq=False)
class RNCertificate:
    t_matrix: np.ndarray
    s_matrix: np.ndarray = field(repr=False, default=None)
    residual_reconstruction: float = 0.0
    residual_commutant: float = 0.0
    spectrum_bounds: tuple[float, float] = (0.0, 0.0)
    values: dict = field(default_factory=dict)
    passed: bool = True

    def to_dict(self) -> dict:
        return {
            "residual_reconstruction": self.residual_reconstruction,
            "residual_commutant": self.residual_commutant,
            "spectrum_min": self.spectrum_bounds[0],
            "spectrum_max": self.spectrum_bounds[1],
            "pass": self.passed,
            **self.values,
        }


def intertwiner(rep_phi: StinespringRep, rep_psi: StinespringRep,
                tols: Tolerances | None = None) -> np.ndarray:
    """The contraction S mapping phi-dilation generators to psi's.

    S is well defined exactly when psi is dominated by phi; a kernel
    mismatch or an operator norm above 1 raises DominationError.  S maps
    every dilation-flag level of phi into the matching level of psi and
    the complements likewise.
    """
    t = resolve(tols)
    m_phi, m_psi = rep_phi.map_ref, rep_psi.map_ref
    c = _check_same_frame(m_phi, m_psi, t)  # MapMismatchError on mismatch
    n = m_phi.target_flag.ambient
    if rep_psi.dil_dim == 0:
        return np.zeros((0, rep_phi.dil_dim), dtype=np.complex128)
    if rep_phi.dil_dim == 0:
        raise DominationError("a nonzero map cannot be dominated by zero")
    m1 = rep_phi.q_factor @ np.kron(c, np.eye(n, dtype=np.complex128))
    s = rep_psi.q_factor @ np.linalg.pinv(m1)
    defect = la.frob(s @ m1 - rep_psi.q_factor)
    if defect > 1e3 * t.eq * max(1.0, la.frob(rep_psi.q_factor)):
        raise DominationError(
            f"generator map is not well defined (residual {defect:.3e}); "
            "the claimed domination fails")
    norm = la.spec_norm(s)
    if norm > 1.0 + 1e3 * t.eq:
        raise DominationError(
            f"generator map has norm {norm:.6f} > 1; "
            "the claimed domination fails")
    return s


def derivative(rep_phi: StinespringRep, psi: LocalCPMap,
               tols: Tolerances | None = None) -> RNCertificate:
    """Radon-Nikodym derivative of psi with respect to the dilated phi.

    Requires dominates(phi, psi); dilates psi minimally, forms the
    intertwiner S and returns T = S^H S with its residuals: the
    reconstruction identity psi(a_i) = V^H T pi(a_i) V, membership in
    the commutant, hermitian spectrum bounds, flag compatibility, and
    the intertwining relations of S itself.
    """
    t = resolve(tols)
    dom = dominates(rep_phi.map_ref, psi, tols=t)
    if not dom.passed:
        worst = min((e.values.get("min_eig", 0.0) for e in dom.levels),
                    default=0.0)
        raise DominationError(
            f"psi is not dominated by phi (worst certificate eigenvalue "
            f"{worst:.3e})")
    rep_psi = dilate_minimal(psi, tols=t)
    s = intertwiner(rep_phi, rep_psi, tols=t)
    t_mat = la.herm_part(s.conj().T @ s)

    c = _check_same_frame(rep_phi.map_ref, psi, t)
    v = rep_phi.v_embed
    rec = 0.0
    for j in range(psi.dim):
        pi_c = rep_phi.pi_of(c[:, j])
        rec = max(rec, la.frob(psi.img_mats[j]
                               - v.conj().T @ t_mat @ pi_c @ v))
    comm = 0.0
    inter = 0.0
    for i in range(rep_phi.dim):
        comm = max(comm, la.frob(t_mat @ rep_phi.pi_mats[i]
                                 - rep_phi.pi_mats[i] @ t_mat))
    for j in range(psi.dim):
        inter = max(inter, la.frob(s @ rep_phi.pi_of(c[:, j])
                                   - rep_psi.pi_mats[j] @ s))
    w = (np.linalg.eigvalsh(t_mat) if t_mat.size
         else np.zeros(1))
    block_res = (float(np.max(block_residuals(
        t_mat, rep_phi.dil_flag, rep_phi.dil_flag)))
        if rep_phi.dil_dim else 0.0)

    scale = max(1.0, la.spec_norm(v) ** 2,
                max((la.spec_norm(p) for p in rep_phi.pi_mats), default=0.0))
    tol = 1e3 * t.eq * scale
    passed = (rec <= tol and comm <= tol and block_res <= tol
              and w[0] >= -t.psd * max(1.0, float(w[-1]))
              and w[-1] <= 1.0 + tol)
    return RNCertificate(
        t_matrix=t_mat, s_matrix=s,
        residual_reconstruction=float(rec),
        residual_commutant=float(comm),
        spectrum_bounds=(float(w[0]), float(w[-1])),
        values={"residual_intertwine": float(inter),
                "residual_block": block_res,
                "s_norm": la.spec_norm(s)},
        passed=passed)


def map_from_derivative(rep_phi: StinespringRep, t_mat,
                        tols: Tolerances | None = None) -> LocalCPMap:
    """The dominated map induced by a positive contraction in the commutant.

    images[i] = V^H t pi(a_i) V with the witness inherited from phi.
    Preconditions: t hermitian with spectrum in [0, 1] (SpectrumError),
    commuting with the representation (CommutantError), and
    flag-compatible on the dilation flag (CompatibilityError).
    """
    t = resolve(tols)
    tm = la.as_complex(t_mat)
    r = rep_phi.dil_dim
    if tm.shape != (r, r):
        raise SpectrumError(f"derivative must be {r} x {r}, got {tm.shape}")
    scale = max(1.0, la.spec_norm(tm))
    if la.herm_residual(tm) > t.eq * scale:
        raise SpectrumError("derivative is not hermitian")
    if r:
        w = np.linalg.eigvalsh(la.herm_part(tm))
        if w[0] < -t.psd * scale or w[-1] > 1.0 + t.psd * scale:
            raise SpectrumError(
                f"derivative spectrum [{w[0]:.3e}, {w[-1]:.3e}] "
                "is not within [0, 1]")
    pscale = max(1.0, max((la.spec_norm(p) for p in rep_phi.pi_mats),
                          default=0.0))
    for i in range(rep_phi.dim):
        res = la.frob(tm @ rep_phi.pi_mats[i] - rep_phi.pi_mats[i] @ tm)
        if res > 1e3 * t.eq * scale * pscale:
            raise CommutantError(
                f"derivative does not commute with the representation "
                f"(residual {res:.3e} at basis element {i})")
    check_block_op(tm, rep_phi.dil_flag, rep_phi.dil_flag, ambient=False,
                   tols=t)

    m = rep_phi.map_ref
    v = rep_phi.v_embed
    images = [BlockOp(v.conj().T @ tm @ rep_phi.pi_mats[i] @ v,
                      m.target_flag, m.target_flag)
              for i in range(rep_phi.dim)]
    return make_map(m.source, m.target_flag, images, witness=m.witness,
                    tols=t)


def _offblock_penalty(flag) -> np.ndarray:
    """Diagonal 0/1 penalty on vec(X) for entries outside the block mask."""
    mask = flag.block_mask()
    return np.diag((~mask).reshape(-1).astype(np.float64))


def commutant_basis(rep: StinespringRep,
                    tols: Tolerances | None = None) -> list[np.ndarray]:
    """Frobenius-orthonormal basis of the hermitian commutant.

    The space of hermitian r x r matrices X with X pi(a_i) = pi(a_i) X
    for every basis element and X block-diagonal on the dilation flag.
    Computed as the null space of the PSD operator summing all squared
    constraints; the hermitian part is extracted by real-linear
    orthonormalization (the constraint space is *-closed).
    """
    t = resolve(tols)
    r = rep.dil_dim
    if r == 0:
        return []
    eye = np.eye(r, dtype=np.complex128)
    m = np.zeros((r * r, r * r), dtype=np.complex128)
    for i in range(rep.dim):
        a = np.kron(rep.pi_mats[i], eye) - np.kron(eye, rep.pi_mats[i].T)
        m += a.conj().T @ a
    m += _offblock_penalty(rep.dil_flag)
    null = la.null_space_psd(m, t.rank)

    # hermitian real span of the *-closed complex null space
    cands = []
    for j in range(null.shape[1]):
        x = null[:, j].reshape(r, r)
        cands.append(0.5 * (x + x.conj().T))
        cands.append((x - x.conj().T) / 2j)
    if not cands:
        return []
    real_stack = np.stack([np.concatenate([c.real.ravel(), c.imag.ravel()])
                           for c in cands], axis=1)
    u, sv, _ = np.linalg.svd(real_stack, full_matrices=False)
    keep = sv > max(sv[0], 1.0) * 1e-8 if sv.size else []
    out = []
    for j in range(int(np.sum(keep))):
        col = u[:, j]
        x = (col[:r * r] + 1j * col[r * r:]).reshape(r, r)
        out.append(la.herm_part(x))
    return out


def sample_contraction_in_commutant(basis: list[np.ndarray], seed: int,
                                    tols: Tolerances | None = None
                                    ) -> np.ndarray:
    """Seeded positive contraction in the span of a hermitian commutant basis.

    Draws a random real combination X and rescales it by spectral
    clipping, T = (X + ||X|| I) / (2 ||X||): since the representation is
    unital, I is in the commutant, so T stays in the span while its
    spectrum lands in [0, 1].
    """
    if not basis:
        raise EmptyCommutantError("commutant basis is empty")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal(len(basis))
    x = sum(gk * bk for gk, bk in zip(g, basis))
    nx = la.spec_norm(x)
    r = basis[0].shape[0]
    if nx < 1e-14:
        return 0.5 * np.eye(r, dtype=np.complex128)
    return la.herm_part((x + nx * np.eye(r)) / (2.0 * nx))
