"""Minimal dilation of certified local CP and CC maps.

The dilation is the finite-dimensional GNS construction on the tensor
product of algebra coordinates with the target space: the sesquilinear
form <a (x) h, b (x) g> = <h, phi(a^* b) g> has Gram matrix G assembled
from the map's pairwise-product images; an eigenvalue factorization
Q^H Q = G realizes the quotient by the form's kernel, the representation
acts by left multiplication through the pseudo-inverse of Q, and the
embedding V sends h to the class of 1 (x) h.

The dilation space carries its own flag: level l is the span of the
classes of A (x) H_l, which equals the span of pi(A) V H_l, so the
construction is minimal by definition.  All representation data is
rotated into a frame adapted to that flag, making the dilation flag
canonical (block structure is a literal sparsity pattern downstream).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as kern
from . import _linalg as la
from .config import Tolerances, resolve
from .cpmaps import LocalCPMap, verify_local_cc, verify_local_cp
from .errors import (CertificateError, DimensionError, MapMismatchError,
                     RankError, ValidationError)
from .flags import BlockOp, Flag, block_residuals, check_block_op, flags_equal
from .reports import CertificateReport, LevelCheck

__all__ = [
    "StinespringRep", "dilate_minimal", "verify_minimality",
    "verify_perp_identity", "unitary_equivalence", "reconstruct",
    "gns_gram",
]


@dataclass(eq=False)
class StinespringRep:
    map_ref: LocalCPMap
    dil_dim: int
    q_factor: np.ndarray          # (r, d*N) quotient of algebra (x) target
    pi_mats: np.ndarray           # (d, r, r) representation images
    v_embed: np.ndarray           # (r, N) embedding of the target space
    dil_flag: Flag
    build_report: CertificateReport = field(repr=False, default=None)

    @property
    def dim(self) -> int:
        return self.map_ref.dim

    def pi_of(self, coords) -> np.ndarray:
        c = np.asarray(coords, dtype=np.complex128)
        if c.shape != (self.dim,):
            raise DimensionError(
                f"coordinate vector has length {c.shape}, expected {self.dim}")
        return np.tensordot(c, self.pi_mats, axes=(0, 0))

    def level_projection_residual(self, u: np.ndarray, level: int) -> float:
        """Off-level mass of a square matrix on the dilation flag."""
        r = self.dil_flag.dims[level - 1]
        return float(np.linalg.norm(u[r:, :r]) + np.linalg.norm(u[:r, r:]))


def gns_gram(m: LocalCPMap) -> np.ndarray:
    """Gram matrix of the GNS form on algebra coordinates (x) target space."""
    return kern.pair_blocks(m.source.pq_tensor, m.img_mats)


def dilate_minimal(m: LocalCPMap, tols: Tolerances | None = None
                   ) -> StinespringRep:
    """Construct the minimal dilation (pi, V, dilation flag) of a map.

    Requires passing CP and CC certificates.  Raises RankError when the
    Gram matrix contradicts the positivity certificate and
    CertificateError when left multiplication fails to preserve the
    Gram kernel (both signal inconsistent tolerances).
    """
    t = resolve(tols)
    cp = verify_local_cp(m, tols=t)
    if not cp.passed:
        raise CertificateError("map failed the local CP certificate")
    cc = verify_local_cc(m, tols=t, cp_report=cp)
    if not cc.passed:
        raise CertificateError("map failed the local CC certificate")

    d = m.dim
    n = m.target_flag.ambient
    g = gns_gram(m)
    q, q_pinv, eigvals = la.eig_factor(g, t.rank)
    gnorm = float(max(abs(eigvals[0]), abs(eigvals[-1]))) if eigvals.size else 0.0
    if eigvals.size and eigvals[-1] < -t.psd * max(gnorm, 1.0):
        raise RankError(
            f"GNS Gram matrix has negative eigenvalue {eigvals[-1]:.3e}; "
            "positivity certificate is inconsistent")
    r = q.shape[0]

    eye_n = np.eye(n, dtype=np.complex128)
    proj = q_pinv @ q                      # projection onto the Gram range
    pi = np.empty((d, r, r), dtype=np.complex128)
    for i in range(d):
        left = np.kron(m.source.mult_tensor[i].T, eye_n)
        ql = q @ left
        defect = la.frob(ql - ql @ proj)
        if defect > 1e3 * t.eq * max(1.0, la.frob(ql)):
            raise CertificateError(
                f"left multiplication by basis element {i} does not preserve "
                f"the Gram kernel (residual {defect:.3e})")
        pi[i] = ql @ q_pinv
    v = q @ np.kron(m.source.unit_coords.reshape(d, 1), eye_n)

    # flag on the dilation space: level l spans the classes of A (x) H_l
    blocks = []
    q3 = q.reshape(r, d, n)
    for l in range(m.target_flag.levels):
        k = m.target_flag.dims[l]
        blocks.append(q3[:, :, :k].reshape(r, d * k))
    frame, rdims = la.adapted_frame(blocks, r, t.rank)
    if rdims and rdims[-1] != r:
        raise RankError(
            f"top dilation level has rank {rdims[-1]} but the space has "
            f"dimension {r}")
    fh = frame.conj().T
    q = fh @ q
    v = fh @ v
    for i in range(d):
        pi[i] = fh @ pi[i] @ frame
    dil_flag = Flag(r, tuple(rdims), None)

    rep = StinespringRep(m, r, q, pi, v, dil_flag)
    rep.build_report = _build_report(rep, t)
    if not rep.build_report.passed:
        raise CertificateError(
            "dilation failed its structural residual checks:\n"
            + rep.build_report.summary())
    return rep


def _build_report(rep: StinespringRep, t: Tolerances) -> CertificateReport:
    """Structural residuals of a freshly built dilation.

    These hold by construction up to roundoff; the report exists so the
    CLI can print them and so inconsistent inputs surface early.  The
    pass thresholds are intentionally loose (1e3 x eq); the acceptance
    suite asserts the tight bounds.
    """
    m = rep.map_ref
    d, r = rep.dim, rep.dil_dim
    alg = m.source
    values: dict = {}
    pscale = max(1.0, max((la.spec_norm(p) for p in rep.pi_mats), default=0.0))

    rec = 0.0
    for i in range(d):
        rec = max(rec, la.frob(rep.v_embed.conj().T @ rep.pi_mats[i]
                               @ rep.v_embed - m.img_mats[i]))
    values["reconstruction_residual"] = rec

    unit_res = la.frob(rep.pi_of(alg.unit_coords) - np.eye(r))
    prod_res = 0.0
    star_res = 0.0
    for i in range(d):
        for j in range(d):
            prod_res = max(prod_res, la.frob(
                rep.pi_mats[i] @ rep.pi_mats[j]
                - rep.pi_of(alg.mult_tensor[i, j])))
        star_res = max(star_res, la.frob(
            rep.pi_mats[i].conj().T - rep.pi_of(alg.star_matrix[:, i])))
    values["unit_residual"] = unit_res
    values["product_residual"] = prod_res
    values["star_residual"] = star_res

    values["v_norm"] = la.spec_norm(rep.v_embed)
    unit_img = m.unit_image().mat
    if la.frob(unit_img - np.eye(m.target_flag.ambient)) <= t.eq * max(
            1.0, np.sqrt(m.target_flag.ambient)):
        values["isometry_residual"] = la.frob(
            rep.v_embed.conj().T @ rep.v_embed
            - np.eye(m.target_flag.ambient))

    flag_res = 0.0
    for l in range(1, m.target_flag.levels + 1):
        k = m.target_flag.dims[l - 1]
        rl = rep.dil_flag.dims[l - 1]
        flag_res = max(flag_res, float(np.linalg.norm(rep.v_embed[rl:, :k])))
    values["v_flag_residual"] = flag_res

    compat = 0.0
    for i in range(d):
        compat = max(compat, float(np.max(block_residuals(
            rep.pi_mats[i], rep.dil_flag, rep.dil_flag)))) if r else 0.0
    values["pi_compat_residual"] = compat

    loose = 1e3 * t.eq * max(1.0, pscale) * max(1.0, np.sqrt(max(r, 1)))
    ok = (rec <= loose and unit_res <= loose and prod_res <= loose
          and star_res <= loose and values["v_norm"] <= 1.0 + loose
          and flag_res <= loose and compat <= loose)
    return CertificateReport("dilation_build", ok, [], values)


def reconstruct(rep: StinespringRep, coords) -> BlockOp:
    """Compress the representation back to the target: V^H pi(a) V."""
    mat = rep.v_embed.conj().T @ rep.pi_of(coords) @ rep.v_embed
    return check_block_op(mat, rep.map_ref.target_flag,
                          rep.map_ref.target_flag, ambient=False)


def _span_projection(cols: np.ndarray, rank_tol: float) -> np.ndarray:
    basis = la.orthonormal_columns(cols, rank_tol)
    return basis @ basis.conj().T


def verify_minimality(rep: StinespringRep,
                      tols: Tolerances | None = None) -> CertificateReport:
    """Check the dilation flag levels equal the spans of pi(A) V H_l.

    Also checks the union identity: the top-level span is the whole
    dilation space.
    """
    t = resolve(tols)
    r = rep.dil_dim
    if r == 0:
        return CertificateReport("minimality", True, [
            LevelCheck(l, True, values={"projection_residual": 0.0})
            for l in range(1, rep.map_ref.target_flag.levels + 1)],
            {"union_residual": 0.0})
    tol = t.eq * max(1.0, np.sqrt(r))
    levels = []
    union_res = 0.0
    for l in range(1, rep.map_ref.target_flag.levels + 1):
        k = rep.map_ref.target_flag.dims[l - 1]
        cols = np.hstack([rep.pi_mats[i] @ rep.v_embed[:, :k]
                          for i in range(rep.dim)])
        p_span = _span_projection(cols, t.rank)
        rl = rep.dil_flag.dims[l - 1]
        p_flag = np.zeros((r, r), dtype=np.complex128)
        p_flag[:rl, :rl] = np.eye(rl)
        res = la.frob(p_span - p_flag)
        levels.append(LevelCheck(l, res <= tol,
                                 values={"projection_residual": float(res)}))
        if l == rep.map_ref.target_flag.levels:
            union_res = la.frob(p_span - np.eye(r))
    passed = all(e.passed for e in levels) and union_res <= tol
    return CertificateReport("minimality", passed, levels,
                             {"union_residual": float(union_res)})


def verify_perp_identity(rep: StinespringRep,
                         tols: Tolerances | None = None) -> CertificateReport:
    """Check span(pi(A) V H_l-perp) equals the complement of the l-th level."""
    t = resolve(tols)
    r = rep.dil_dim
    if r == 0:
        return CertificateReport("perp_identity", True, [
            LevelCheck(l, True, values={"projection_residual": 0.0})
            for l in range(1, rep.map_ref.target_flag.levels + 1)])
    tol = t.eq * max(1.0, np.sqrt(r))
    levels = []
    for l in range(1, rep.map_ref.target_flag.levels + 1):
        k = rep.map_ref.target_flag.dims[l - 1]
        cols = np.hstack([rep.pi_mats[i] @ rep.v_embed[:, k:]
                          for i in range(rep.dim)])
        p_span = _span_projection(cols, t.rank)
        rl = rep.dil_flag.dims[l - 1]
        p_comp = np.zeros((r, r), dtype=np.complex128)
        p_comp[rl:, rl:] = np.eye(r - rl)
        res = la.frob(p_span - p_comp)
        levels.append(LevelCheck(l, res <= tol,
                                 values={"projection_residual": float(res)}))
    return CertificateReport("perp_identity", all(e.passed for e in levels),
                             levels)


def basis_change(alg_from, alg_to, tols: Tolerances | None = None
                 ) -> np.ndarray:
    """Matrix C with (to-basis)_j = sum_i C[i, j] (from-basis)_i.

    Raises MapMismatchError when the two algebras do not share a span.
    """
    if alg_from is alg_to:
        return np.eye(alg_from.dim, dtype=np.complex128)
    if alg_from.dim != alg_to.dim or not flags_equal(alg_from.domain,
                                                     alg_to.domain):
        raise MapMismatchError("algebras are not identifiable")
    c = np.empty((alg_from.dim, alg_to.dim), dtype=np.complex128)
    try:
        for j in range(alg_to.dim):
            c[:, j] = alg_from.coords(alg_to.basis[j], tols=tols)
    except ValidationError as exc:
        raise MapMismatchError(f"algebra bases do not share a span: {exc}")
    return c


def _check_same_frame(m1: LocalCPMap, m2: LocalCPMap,
                      t: Tolerances) -> np.ndarray:
    """Verify shared source/target/witness; return the source basis change."""
    if not flags_equal(m1.target_flag, m2.target_flag):
        raise MapMismatchError("maps have different target flags")
    if m1.witness != m2.witness:
        raise MapMismatchError("maps have different witness functions")
    return basis_change(m1.source, m2.source, tols=t)


def _check_same_map(m1: LocalCPMap, m2: LocalCPMap,
                    t: Tolerances) -> np.ndarray:
    """Verify m1 and m2 are the same map up to a basis change; return it."""
    c = _check_same_frame(m1, m2, t)
    scale = max(1.0, float(np.max(np.abs(m1.img_mats)))
                if m1.img_mats.size else 1.0)
    for j in range(m2.dim):
        res = la.frob(m2.img_mats[j]
                      - np.tensordot(c[:, j], m1.img_mats, axes=(0, 0)))
        if res > 1e3 * t.eq * scale:
            raise MapMismatchError(
                f"images disagree under the basis change (residual {res:.3e})")
    return c


def unitary_equivalence(rep1: StinespringRep, rep2: StinespringRep,
                        tols: Tolerances | None = None):
    """Unitary intertwiner between two minimal dilations of the same map.

    The two representations may use different (e.g. permuted) algebra
    bases; the correspondence is recovered from the bases themselves.
    Returns (U, report) with U defined on generators by
    Q_1(a (x) h) -> Q_2(a (x) h) and re-unitarized by polar
    decomposition; the report certifies unitarity, U V_1 = V_2, the
    intertwining relations and preservation of every flag level.
    """
    t = resolve(tols)
    if rep1 is rep2:
        u = np.eye(rep1.dil_dim, dtype=np.complex128)
        return u, CertificateReport("unitary_equivalence", True, [], {
            "unitarity_residual": 0.0, "v_residual": 0.0,
            "intertwine_residual": 0.0, "flag_residual": 0.0})
    c = _check_same_map(rep1.map_ref, rep2.map_ref, t)
    if rep1.dil_dim != rep2.dil_dim:
        raise DimensionError(
            f"dilation dimensions differ ({rep1.dil_dim} vs {rep2.dil_dim}); "
            "a minimal pair cannot do this, so one input is not minimal")
    r = rep1.dil_dim
    n = rep1.map_ref.target_flag.ambient
    if r == 0:
        u = np.zeros((0, 0), dtype=np.complex128)
        return u, CertificateReport("unitary_equivalence", True, [], {
            "unitarity_residual": 0.0, "v_residual": 0.0,
            "intertwine_residual": 0.0, "flag_residual": 0.0})
    m1 = rep1.q_factor @ np.kron(c, np.eye(n, dtype=np.complex128))
    u = la.polar_unitary(rep2.q_factor @ np.linalg.pinv(m1))

    unit_res = la.frob(u.conj().T @ u - np.eye(r))
    v_res = la.frob(u @ rep1.v_embed - rep2.v_embed)
    inter = 0.0
    for j in range(rep2.dim):
        inter = max(inter, la.frob(
            u @ rep1.pi_of(c[:, j]) - rep2.pi_mats[j] @ u))
    levels = []
    flag_res = 0.0
    for l in range(1, rep1.map_ref.target_flag.levels + 1):
        r1 = rep1.dil_flag.dims[l - 1]
        r2 = rep2.dil_flag.dims[l - 1]
        if r1 != r2:
            levels.append(LevelCheck(l, False,
                                     values={"flag_residual": float("inf")}))
            flag_res = float("inf")
            continue
        res = float(np.linalg.norm(u[r2:, :r1]) + np.linalg.norm(u[:r2, r1:]))
        flag_res = max(flag_res, res)
        levels.append(LevelCheck(l, res <= t.eq * max(1.0, np.sqrt(r)),
                                 values={"flag_residual": res}))
    tol = t.eq * max(1.0, np.sqrt(r))
    passed = (unit_res <= tol and v_res <= tol and inter <= tol
              and all(e.passed for e in levels))
    report = CertificateReport("unitary_equivalence", passed, levels, {
        "unitarity_residual": float(unit_res),
        "v_residual": float(v_res),
        "intertwine_residual": float(inter),
        "flag_residual": float(flag_res),
    })
    return u, report
