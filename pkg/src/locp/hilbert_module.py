"""Hilbert modules of rectangular flag ops and CP-inducing module maps.

A :class:`HilbertModule` is a finitely generated right module over a
:class:`LocalAlgebra`, realized as rectangular flag-compatible operators
x : H_A -> K with inner product <x, y> = x^H y taking values in the
algebra.  A :class:`CPInducingMap` sends the module into rectangular
ops between two target flags so that <Phi(x), Phi(y)> = phi(<x, y>) for
a certified CP and CC map phi.

The module dilation extends the minimal dilation of phi: the dilation
space of the module is spanned by the columns of the images, the
module representation rho is defined on GNS generators by
rho(x) (pi(a) V h) = W Phi(x a) h, and the pair (rho, W) reconstructs
Phi(x) = W^H rho(x) V.  The module Radon-Nikodym derivative of a
dominated pair is the pair of absolute values of the algebra- and
module-level intertwiners.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _linalg as la
from .algebra import LocalAlgebra
from .config import Tolerances, resolve
from .cpmaps import (LocalCPMap, dominates, make_map, verify_local_cc,
                     verify_local_cp)
from .errors import (ClosureError, CommutantError, DegeneracyError,
                     DimensionError, DominationError, EmptyCommutantError,
                     EquivalenceError, InnerProductError, MapMismatchError,
                     MismatchError, RankError, SpectrumError, ValidationError)
from .flags import (BlockOp, Flag, block_residuals, check_block_op,
                    flags_equal, seminorm)
from .radon_nikodym import intertwiner, map_from_derivative
from .reports import CertificateReport, LevelCheck
from .stinespring import StinespringRep, dilate_minimal

__all__ = [
    "HilbertModule", "CPInducingMap", "ModuleDilation", "ModuleRNResult",
    "build_module", "module_over_self", "make_inducing", "verify_phi_map",
    "module_dilate", "module_unitary_equivalence",
    "equivalence_partial_isometry", "map_from_commutant_pair", "module_rn",
    "pair_commutant_basis", "sample_commutant_pair", "phi_map_from_kraus",
]


# --------------------------------------------------------------------------
# modules
# --------------------------------------------------------------------------

@dataclass(eq=False)
class HilbertModule:
    algebra: LocalAlgebra
    carrier_flag: Flag
    basis: list[BlockOp]
    action_tensor: np.ndarray    # act[i,j,k]: x_i a_j = sum_k act[i,j,k] x_k
    gram_tensor: np.ndarray      # gr[i,j,:]: algebra coords of x_i^H x_j
    xmats: np.ndarray = field(repr=False, default=None)  # (m, Nc, Na)
    _vec_pinv: np.ndarray = field(repr=False, default=None)

    @property
    def rank(self) -> int:
        return len(self.basis)

    def coords(self, matrix, tol: float | None = None,
               tols: Tolerances | None = None) -> np.ndarray:
        t = resolve(tols)
        tol = t.eq if tol is None else tol
        m = matrix.mat if isinstance(matrix, BlockOp) else la.as_complex(matrix)
        c = self._vec_pinv @ m.reshape(-1)
        res = la.frob(np.tensordot(c, self.xmats, axes=(0, 0)) - m)
        if res > tol * max(1.0, la.frob(m)):
            raise ValidationError(
                f"matrix lies outside the module span (residual {res:.3e})")
        return c


def build_module(alg: LocalAlgebra, carrier_flag: Flag, basis,
                 tols: Tolerances | None = None) -> HilbertModule:
    """Validate a generating family as a module over the algebra.

    Checks linear independence, closure of the right action (each x_i a_j
    stays in the span), that all inner products x_i^H x_j lie in the
    algebra, positivity of the diagonal inner products at every level,
    and a Cauchy-Schwarz spot check over all basis pairs.
    """
    t = resolve(tols)
    ops = []
    for b in basis:
        if isinstance(b, BlockOp):
            if not flags_equal(b.source, alg.domain) or not flags_equal(
                    b.target, carrier_flag):
                raise ValidationError("module element lives on wrong flags")
            ops.append(b)
        else:
            ops.append(check_block_op(b, alg.domain, carrier_flag, tols=t))
    m = len(ops)
    if m == 0:
        raise DegeneracyError("module needs at least one generator")
    xmats = np.stack([op.mat for op in ops])
    stack = xmats.reshape(m, -1).T
    sv = np.linalg.svd(stack, compute_uv=False)
    if sv[-1] <= t.rank * sv[0]:
        raise DegeneracyError("module basis is linearly dependent")
    vec_pinv = np.linalg.pinv(stack)

    d = alg.dim
    act = np.empty((m, d, m), dtype=np.complex128)
    for i in range(m):
        for j in range(d):
            prod = xmats[i] @ alg.mats[j]
            c = vec_pinv @ prod.reshape(-1)
            res = la.frob(np.tensordot(c, xmats, axes=(0, 0)) - prod)
            if res > t.eq * max(1.0, la.frob(prod)):
                raise ClosureError(
                    f"x_{i} a_{j} escapes the module span (residual {res:.3e})")
            act[i, j] = c
    gram = np.empty((m, m, d), dtype=np.complex128)
    for i in range(m):
        for j in range(m):
            try:
                gram[i, j] = alg.coords(xmats[i].conj().T @ xmats[j], tols=t)
            except ValidationError as exc:
                raise InnerProductError(
                    f"<x_{i}, x_{j}> lies outside the algebra: {exc}")

    mod = HilbertModule(alg, carrier_flag, ops, act, gram,
                        xmats=xmats, _vec_pinv=vec_pinv)
    _validate_inner_products(mod, t)
    return mod


def _validate_inner_products(mod: HilbertModule, t: Tolerances) -> None:
    alg = mod.algebra
    grams = [BlockOp(mod.xmats[i].conj().T @ mod.xmats[i],
                     alg.domain, alg.domain) for i in range(mod.rank)]
    for i, g in enumerate(grams):
        scale = max(1.0, la.spec_norm(g.mat))
        for l in range(1, alg.domain.levels + 1):
            a = g.restrict(l)
            if la.min_eig_herm(a) < -t.psd * scale:
                raise DegeneracyError(
                    f"<x_{i}, x_{i}> is not positive at level {l}")
    for i in range(mod.rank):
        for j in range(mod.rank):
            gij = BlockOp(mod.xmats[i].conj().T @ mod.xmats[j],
                          alg.domain, alg.domain)
            for l in range(1, alg.domain.levels + 1):
                lhs = seminorm(gij, l) ** 2
                rhs = seminorm(grams[i], l) * seminorm(grams[j], l)
                if lhs > rhs + t.eq * max(1.0, rhs):
                    raise ValidationError(
                        f"Cauchy-Schwarz fails for ({i}, {j}) at level {l}")


def module_over_self(alg: LocalAlgebra,
                     tols: Tolerances | None = None) -> HilbertModule:
    """The algebra as a module over itself (basis = algebra basis)."""
    return build_module(alg, alg.domain, alg.basis, tols=tols)


def _same_module(a: HilbertModule, b: HilbertModule) -> bool:
    if a is b:
        return True
    if a.rank != b.rank or a.algebra.dim != b.algebra.dim:
        return False
    if not flags_equal(a.carrier_flag, b.carrier_flag):
        return False
    return all(la.frob(x.mat - y.mat) <= 1e-12 * max(1.0, la.frob(x.mat))
               for x, y in zip(a.basis, b.basis))


# --------------------------------------------------------------------------
# CP-inducing maps
# --------------------------------------------------------------------------

@dataclass(eq=False)
class CPInducingMap:
    module: HilbertModule
    phi: LocalCPMap
    target_dst_flag: Flag
    images: list[BlockOp]
    img_mats: np.ndarray = field(repr=False, default=None)  # (m, Nd, Ns)

    @property
    def target_src_flag(self) -> Flag:
        return self.phi.target_flag

    def image_of(self, coords) -> BlockOp:
        c = np.asarray(coords, dtype=np.complex128)
        return BlockOp(np.tensordot(c, self.img_mats, axes=(0, 0)),
                       self.target_src_flag, self.target_dst_flag)


def make_inducing(module: HilbertModule, phi: LocalCPMap,
                  target_dst_flag: Flag, images,
                  tols: Tolerances | None = None) -> CPInducingMap:
    t = resolve(tols)
    if phi.source is not module.algebra and not _same_algebra(
            phi.source, module.algebra):
        raise MismatchError("phi is not defined on the module's algebra")
    if len(images) != module.rank:
        raise DimensionError(
            f"{len(images)} images for a rank-{module.rank} module")
    ops = []
    for im in images:
        if isinstance(im, BlockOp):
            if not flags_equal(im.source, phi.target_flag) or not flags_equal(
                    im.target, target_dst_flag):
                raise ValidationError("image lives on wrong flags")
            ops.append(im)
        else:
            ops.append(check_block_op(im, phi.target_flag, target_dst_flag,
                                      tols=t))
    mats = (np.stack([op.mat for op in ops]) if ops else
            np.zeros((0, target_dst_flag.ambient, phi.target_flag.ambient),
                     dtype=np.complex128))
    return CPInducingMap(module, phi, target_dst_flag, ops, img_mats=mats)


def _same_algebra(a: LocalAlgebra, b: LocalAlgebra) -> bool:
    if a is b:
        return True
    if a.dim != b.dim or not flags_equal(a.domain, b.domain):
        return False
    return all(la.frob(x.mat - y.mat) <= 1e-12 * max(1.0, la.frob(x.mat))
               for x, y in zip(a.basis, b.basis))


def verify_phi_map(cand: CPInducingMap,
                   tols: Tolerances | None = None) -> CertificateReport:
    """Check <Phi(x_i), Phi(x_j)> = phi(<x_i, x_j>) on all basis pairs."""
    t = resolve(tols)
    mod = cand.module
    worst = 0.0
    scale = max(1.0, float(np.max(np.abs(cand.img_mats)) ** 2)
                if cand.img_mats.size else 1.0)
    for i in range(mod.rank):
        for j in range(mod.rank):
            lhs = cand.img_mats[i].conj().T @ cand.img_mats[j]
            rhs = cand.phi.image_of(mod.gram_tensor[i, j]).mat
            worst = max(worst, la.frob(lhs - rhs))
    passed = worst <= 1e2 * t.eq * scale
    return CertificateReport("phi_map", passed, [],
                             {"max_residual": float(worst)})


def phi_map_from_kraus(module: HilbertModule, target_flag: Flag,
                       kraus: np.ndarray,
                       tols: Tolerances | None = None) -> CPInducingMap:
    """A CP-inducing map built from the Kraus family of its inducing map.

    With phi(a) = sum_r V_r^H a V_r, the stack Phi(x) = [x V_1; ...; x V_R]
    satisfies <Phi(x), Phi(y)> = phi(<x, y>).  The stacked codomain is
    reordered so its flag is canonical (all level-1 rows of every copy
    first, and so on).
    """
    from ._kernels import kraus_conjugate

    t = resolve(tols)
    alg = module.algebra
    phi = make_map(alg, target_flag, [
        BlockOp(m, target_flag, target_flag)
        for m in kraus_conjugate(kraus, alg.mats)], tols=t)
    carrier = module.carrier_flag
    nc = carrier.ambient
    rcount = kraus.shape[0]
    lev = np.empty(nc, dtype=np.int64)
    prev = 0
    for l, k in enumerate(carrier.dims, start=1):
        lev[prev:k] = l
        prev = max(prev, k)
    order = sorted(range(rcount * nc),
                   key=lambda idx: (lev[idx % nc], idx // nc, idx % nc))
    dst = Flag(rcount * nc, tuple(rcount * k for k in carrier.dims), None)
    images = []
    for i in range(module.rank):
        raw = np.vstack([module.xmats[i] @ kraus[r] for r in range(rcount)]) \
            if rcount else np.zeros((0, target_flag.ambient),
                                    dtype=np.complex128)
        images.append(BlockOp(np.ascontiguousarray(raw[order, :]),
                              target_flag, dst))
    return CPInducingMap(module, phi, dst, images,
                         img_mats=np.stack([im.mat for im in images])
                         if images else None)


# --------------------------------------------------------------------------
# module dilation
# --------------------------------------------------------------------------

@dataclass(eq=False)
class ModuleDilation:
    cand: CPInducingMap
    stine: StinespringRep
    rho_mats: np.ndarray          # (m, k, r)
    k_dim: int
    k_flag: Flag
    w_embed: np.ndarray           # (k, Nd) coisometry onto the dilation space
    build_report: CertificateReport = field(repr=False, default=None)

    def rho_of(self, coords) -> np.ndarray:
        c = np.asarray(coords, dtype=np.complex128)
        return np.tensordot(c, self.rho_mats, axes=(0, 0))

    def generator_matrix(self) -> np.ndarray:
        """hstack of rho(x_i) V, whose columns span every dilation level."""
        if self.k_dim == 0:
            n = self.cand.target_src_flag.ambient
            return np.zeros((0, self.cand.module.rank * n),
                            dtype=np.complex128)
        return np.hstack([self.rho_mats[i] @ self.stine.v_embed
                          for i in range(self.cand.module.rank)])


def module_dilate(cand: CPInducingMap,
                  tols: Tolerances | None = None) -> ModuleDilation:
    """Dilate a CP-inducing map to a module representation.

    Dilates the inducing map minimally, spans the module dilation space
    with the image columns level by level, stores the coisometry W onto
    it and assembles rho on GNS generators.
    """
    t = resolve(tols)
    phi_rep = dilate_minimal(cand.phi, tols=t)
    check = verify_phi_map(cand, tols=t)
    if not check.passed:
        raise ValidationError(
            "candidate is not a phi-map: " + check.summary())

    mod = cand.module
    m = mod.rank
    nd = cand.target_dst_flag.ambient
    ns = cand.target_src_flag.ambient
    d = mod.algebra.dim

    blocks = []
    for l in range(cand.target_src_flag.levels):
        k = cand.target_src_flag.dims[l]
        blocks.append(np.hstack([cand.img_mats[i][:, :k] for i in range(m)])
                      if m else np.zeros((nd, 0), dtype=np.complex128))
    frame, kdims = la.adapted_frame(blocks, nd, t.rank)
    k_dim = kdims[-1] if kdims else 0
    w = frame[:, :k_dim].conj().T
    k_flag = Flag(k_dim, tuple(kdims), None)

    # xa_imgs[i, j] = Phi(x_i a_j) through the action tensor
    xa = np.einsum("ijk,kab->ijab", mod.action_tensor, cand.img_mats,
                   optimize=True) if m else np.zeros((0, d, nd, ns))
    r = phi_rep.dil_dim
    q_pinv = np.linalg.pinv(phi_rep.q_factor) if r else np.zeros(
        (d * ns, 0), dtype=np.complex128)
    proj = q_pinv @ phi_rep.q_factor if r else None
    rho = np.empty((m, k_dim, r), dtype=np.complex128)
    for i in range(m):
        gen = w @ xa[i].transpose(1, 0, 2).reshape(nd, d * ns) \
            if k_dim else np.zeros((0, d * ns), dtype=np.complex128)
        if r:
            defect = la.frob(gen - gen @ proj)
            if defect > 1e3 * t.eq * max(1.0, la.frob(gen)):
                raise RankError(
                    f"module generator map is not well defined on the GNS "
                    f"quotient (residual {defect:.3e})")
        rho[i] = gen @ q_pinv

    dil = ModuleDilation(cand, phi_rep, rho, k_dim, k_flag, w)
    dil.build_report = _module_build_report(dil, t)
    if not dil.build_report.passed:
        raise ValidationError(
            "module dilation failed its structural checks:\n"
            + dil.build_report.summary())
    return dil


def _module_build_report(dil: ModuleDilation, t: Tolerances
                         ) -> CertificateReport:
    cand = dil.cand
    mod = cand.module
    m = mod.rank
    values: dict = {}

    morph = 0.0
    for i in range(m):
        for j in range(m):
            morph = max(morph, la.frob(
                dil.rho_mats[i].conj().T @ dil.rho_mats[j]
                - dil.stine.pi_of(mod.gram_tensor[i, j])))
    values["morphism_residual"] = morph

    rec = 0.0
    for i in range(m):
        rec = max(rec, la.frob(
            cand.img_mats[i]
            - dil.w_embed.conj().T @ dil.rho_mats[i] @ dil.stine.v_embed))
    values["reconstruction_residual"] = rec

    values["coisometry_residual"] = la.frob(
        dil.w_embed @ dil.w_embed.conj().T - np.eye(dil.k_dim))

    minim = 0.0
    gen = (dil.generator_matrix().reshape(dil.k_dim, m, -1)
           if m and dil.k_dim else None)
    for l in range(1, cand.target_src_flag.levels + 1):
        k = cand.target_src_flag.dims[l - 1]
        kl = dil.k_flag.dims[l - 1]
        if dil.k_dim == 0:
            continue
        cols = gen[:, :, :k].reshape(dil.k_dim, -1)
        basis = la.orthonormal_columns(cols, t.rank)
        p_span = basis @ basis.conj().T
        p_flag = np.zeros((dil.k_dim, dil.k_dim), dtype=np.complex128)
        p_flag[:kl, :kl] = np.eye(kl)
        minim = max(minim, la.frob(p_span - p_flag))
    values["minimality_residual"] = minim

    compat = 0.0
    if dil.k_dim and dil.stine.dil_dim:
        for i in range(m):
            compat = max(compat, float(np.max(block_residuals(
                dil.rho_mats[i], dil.stine.dil_flag, dil.k_flag))))
    values["rho_compat_residual"] = compat

    scale = max(1.0, float(np.max(np.abs(cand.img_mats)))
                if cand.img_mats.size else 1.0)
    loose = 1e3 * t.eq * scale * max(1.0, np.sqrt(max(dil.k_dim, 1)))
    ok = (morph <= loose and rec <= loose
          and values["coisometry_residual"] <= loose
          and minim <= loose and compat <= loose)
    return CertificateReport("module_dilation_build", ok, [], values)


# --------------------------------------------------------------------------
# uniqueness and equivalence
# --------------------------------------------------------------------------

def _module_basis_change(m_from: HilbertModule, m_to: HilbertModule,
                         t: Tolerances) -> np.ndarray:
    if m_from is m_to:
        return np.eye(m_from.rank, dtype=np.complex128)
    if m_from.rank != m_to.rank or not flags_equal(m_from.carrier_flag,
                                                   m_to.carrier_flag):
        raise MapMismatchError("modules are not identifiable")
    c = np.empty((m_from.rank, m_to.rank), dtype=np.complex128)
    try:
        for j in range(m_to.rank):
            c[:, j] = m_from.coords(m_to.basis[j], tols=t)
    except ValidationError as exc:
        raise MapMismatchError(f"module bases do not share a span: {exc}")
    return c


def module_unitary_equivalence(d1: ModuleDilation, d2: ModuleDilation,
                               tols: Tolerances | None = None):
    """Unitaries (U_phi, U_Phi) intertwining two minimal module dilations.

    U_phi comes from the uniqueness of the inducing map's dilation;
    U_Phi is defined on generators rho_1(x) V_1 h -> rho_2(x) V_2 h and
    polar-corrected.  The report certifies U_Phi rho_1(x_i) =
    rho_2(x_i) U_phi, U_Phi W_1 = W_2, unitarity and level preservation.
    """
    from .stinespring import unitary_equivalence

    t = resolve(tols)
    u_phi, phi_report = unitary_equivalence(d1.stine, d2.stine, tols=t)
    cm = _module_basis_change(d1.cand.module, d2.cand.module, t)
    scale = max(1.0, float(np.max(np.abs(d1.cand.img_mats)))
                if d1.cand.img_mats.size else 1.0)
    for j in range(d2.cand.module.rank):
        res = la.frob(d2.cand.img_mats[j] - np.tensordot(
            cm[:, j], d1.cand.img_mats, axes=(0, 0)))
        if res > 1e3 * t.eq * scale:
            raise MapMismatchError(
                f"module images disagree under the basis change "
                f"(residual {res:.3e})")
    if d1.k_dim != d2.k_dim:
        raise DimensionError(
            f"module dilation dimensions differ ({d1.k_dim} vs {d2.k_dim})")
    k = d1.k_dim
    if k == 0:
        u = np.zeros((0, 0), dtype=np.complex128)
        return u_phi, u, CertificateReport(
            "module_unitary_equivalence", phi_report.passed, [],
            {"unitarity_residual": 0.0, "w_residual": 0.0,
             "intertwine_residual": 0.0, "flag_residual": 0.0})
    v1, v2 = d1.stine.v_embed, d2.stine.v_embed
    n1 = np.hstack([d1.rho_of(cm[:, j]) @ v1
                    for j in range(d2.cand.module.rank)])
    n2 = np.hstack([d2.rho_mats[j] @ v2
                    for j in range(d2.cand.module.rank)])
    u = la.polar_unitary(n2 @ np.linalg.pinv(n1))

    unit_res = la.frob(u.conj().T @ u - np.eye(k))
    w_res = la.frob(u @ d1.w_embed - d2.w_embed)
    inter = 0.0
    for j in range(d2.cand.module.rank):
        inter = max(inter, la.frob(
            u @ d1.rho_of(cm[:, j]) - d2.rho_mats[j] @ u_phi))
    levels = []
    flag_res = 0.0
    for l in range(1, d1.cand.target_src_flag.levels + 1):
        k1 = d1.k_flag.dims[l - 1]
        k2 = d2.k_flag.dims[l - 1]
        if k1 != k2:
            levels.append(LevelCheck(l, False,
                                     values={"flag_residual": float("inf")}))
            flag_res = float("inf")
            continue
        res = float(np.linalg.norm(u[k2:, :k1]) + np.linalg.norm(u[:k2, k1:]))
        flag_res = max(flag_res, res)
        levels.append(LevelCheck(l, res <= t.eq * max(1.0, np.sqrt(k)),
                                 values={"flag_residual": res}))
    tol = t.eq * max(1.0, np.sqrt(k))
    passed = (phi_report.passed and unit_res <= tol and w_res <= tol
              and inter <= tol and all(e.passed for e in levels))
    report = CertificateReport("module_unitary_equivalence", passed, levels, {
        "unitarity_residual": float(unit_res),
        "w_residual": float(w_res),
        "intertwine_residual": float(inter),
        "flag_residual": float(flag_res),
        "phi_unitarity_residual": phi_report.values.get(
            "unitarity_residual", 0.0),
    })
    return u_phi, u, report


def equivalence_partial_isometry(c1: CPInducingMap, c2: CPInducingMap,
                                 tols: Tolerances | None = None):
    """Partial isometry W on the codomain with c2(x) = W c1(x).

    Requires the two maps to share the module and have equal inducing
    maps (EquivalenceError otherwise).  W^H W and W W^H are the
    projections onto the two module dilation spaces.
    """
    t = resolve(tols)
    if not _same_module(c1.module, c2.module):
        raise MismatchError("maps do not share the module")
    if not flags_equal(c1.target_dst_flag, c2.target_dst_flag) or \
            not flags_equal(c1.target_src_flag, c2.target_src_flag):
        raise MismatchError("maps do not share the codomain flags")
    scale = max(1.0, float(np.max(np.abs(c1.phi.img_mats)))
                if c1.phi.img_mats.size else 1.0)
    for i in range(c1.phi.dim):
        res = la.frob(c1.phi.img_mats[i] - c2.phi.img_mats[i])
        if res > 1e3 * t.eq * scale:
            raise EquivalenceError(
                f"inducing maps differ at basis element {i} "
                f"(residual {res:.3e})")
    d1 = module_dilate(c1, tols=t)
    d2 = module_dilate(c2, tols=t)
    if d1.k_dim != d2.k_dim:
        raise EquivalenceError(
            "module dilation spaces have different dimensions; the Gram "
            "data cannot agree")
    n1 = d1.generator_matrix()
    n2 = d2.generator_matrix()
    u = la.polar_unitary(n2 @ np.linalg.pinv(n1)) if d1.k_dim else \
        np.zeros((0, 0), dtype=np.complex128)
    w = d2.w_embed.conj().T @ u @ d1.w_embed

    p1 = d1.w_embed.conj().T @ d1.w_embed
    p2 = d2.w_embed.conj().T @ d2.w_embed
    res_p1 = la.frob(w.conj().T @ w - p1)
    res_p2 = la.frob(w @ w.conj().T - p2)
    rec = 0.0
    for i in range(c1.module.rank):
        rec = max(rec, la.frob(c2.img_mats[i] - w @ c1.img_mats[i]))
    nd = c1.target_dst_flag.ambient
    tol = t.eq * max(1.0, np.sqrt(max(nd, 1))) * scale
    passed = res_p1 <= tol and res_p2 <= tol and rec <= tol
    report = CertificateReport("equivalence_partial_isometry", passed, [], {
        "projection1_residual": float(res_p1),
        "projection2_residual": float(res_p2),
        "reconstruction_residual": float(rec),
    })
    return w, report


# --------------------------------------------------------------------------
# commutant pairs and the module Radon-Nikodym derivative
# --------------------------------------------------------------------------

def map_from_commutant_pair(d: ModuleDilation, t_mat, s_mat,
                            tols: Tolerances | None = None) -> CPInducingMap:
    """The dominated module map induced by a commutant pair (t, s).

    images[i] = W^H sqrt(s) rho(x_i) sqrt(t) V; the inducing map is the
    compression by t^2.  Preconditions: 0 <= t (+) s <= I
    (SpectrumError), the pair intertwines rho and its adjoints
    (CommutantError), and both parts are flag-compatible.
    """
    t = resolve(tols)
    r = d.stine.dil_dim
    k = d.k_dim
    tm = la.as_complex(t_mat)
    sm = la.as_complex(s_mat)
    if tm.shape != (r, r) or sm.shape != (k, k):
        raise DimensionError(
            f"pair must be {r} x {r} and {k} x {k}, got {tm.shape}, {sm.shape}")
    for name, mat in (("t", tm), ("s", sm)):
        if mat.size == 0:
            continue
        scale = max(1.0, la.spec_norm(mat))
        if la.herm_residual(mat) > t.eq * scale:
            raise SpectrumError(f"{name} is not hermitian")
        w = np.linalg.eigvalsh(la.herm_part(mat))
        if w[0] < -t.psd * scale or w[-1] > 1.0 + t.psd * scale:
            raise SpectrumError(
                f"{name} spectrum [{w[0]:.3e}, {w[-1]:.3e}] not within [0, 1]")
    pair_res = _pair_commutant_residual(d, tm, sm)
    scale = max(1.0, float(np.max(np.abs(d.rho_mats))) if d.rho_mats.size
                else 1.0)
    if pair_res > 1e3 * t.eq * scale:
        raise CommutantError(
            f"(t, s) is not a commutant pair (residual {pair_res:.3e})")
    if r:
        check_block_op(tm, d.stine.dil_flag, d.stine.dil_flag,
                       ambient=False, tols=t)
    if k:
        check_block_op(sm, d.k_flag, d.k_flag, ambient=False, tols=t)

    sqrt_t = la.herm_sqrt(tm, clip=t.psd * max(1.0, la.spec_norm(tm)))
    sqrt_s = la.herm_sqrt(sm, clip=t.psd * max(1.0, la.spec_norm(sm)))
    cand = d.cand
    images = [BlockOp(
        d.w_embed.conj().T @ sqrt_s @ d.rho_mats[i] @ sqrt_t
        @ d.stine.v_embed, cand.target_src_flag, cand.target_dst_flag)
        for i in range(cand.module.rank)]
    phi_out = map_from_derivative(d.stine, la.herm_part(tm @ tm), tols=t)
    return make_inducing(cand.module, phi_out, cand.target_dst_flag, images,
                         tols=t)


def _pair_commutant_residual(d: ModuleDilation, tm, sm) -> float:
    res = 0.0
    for i in range(d.cand.module.rank):
        rho = d.rho_mats[i]
        res = max(res, la.frob(sm @ rho - rho @ tm))
        res = max(res, la.frob(tm @ rho.conj().T - rho.conj().T @ sm))
    return res


def pair_commutant_basis(d: ModuleDilation,
                         tols: Tolerances | None = None
                         ) -> list[tuple[np.ndarray, np.ndarray]]:
    """Frobenius-orthonormal hermitian pairs (t, s) commuting with rho.

    The constraints are s rho(x_i) = rho(x_i) t, t rho(x_i)^H =
    rho(x_i)^H s, plus block-diagonality of t on the inducing dilation
    flag and of s on the module dilation flag.
    """
    t = resolve(tols)
    r = d.stine.dil_dim
    k = d.k_dim
    nt, nk = r * r, k * k
    if nt + nk == 0:
        return []
    eye_r = np.eye(r, dtype=np.complex128)
    eye_k = np.eye(k, dtype=np.complex128)
    m = np.zeros((nt + nk, nt + nk), dtype=np.complex128)
    for i in range(d.cand.module.rank):
        rho = d.rho_mats[i]
        c1 = np.zeros((k * r, nt + nk), dtype=np.complex128)
        c1[:, :nt] = -np.kron(rho, eye_r)
        c1[:, nt:] = np.kron(eye_k, rho.T)
        m += c1.conj().T @ c1
        c2 = np.zeros((r * k, nt + nk), dtype=np.complex128)
        c2[:, :nt] = np.kron(eye_r, rho.conj())
        c2[:, nt:] = -np.kron(rho.conj().T, eye_k)
        m += c2.conj().T @ c2
    if r:
        mask_t = (~d.stine.dil_flag.block_mask()).reshape(-1)
        m[:nt, :nt] += np.diag(mask_t.astype(np.float64))
    if k:
        mask_s = (~d.k_flag.block_mask()).reshape(-1)
        m[nt:, nt:] += np.diag(mask_s.astype(np.float64))
    null = la.null_space_psd(m, t.rank)

    cands = []
    for j in range(null.shape[1]):
        xt = null[:nt, j].reshape(r, r)
        xs = null[nt:, j].reshape(k, k)
        cands.append((0.5 * (xt + xt.conj().T), 0.5 * (xs + xs.conj().T)))
        cands.append(((xt - xt.conj().T) / 2j, (xs - xs.conj().T) / 2j))
    if not cands:
        return []
    real_stack = np.stack([
        np.concatenate([p[0].real.ravel(), p[0].imag.ravel(),
                        p[1].real.ravel(), p[1].imag.ravel()])
        for p in cands], axis=1)
    u, sv, _ = np.linalg.svd(real_stack, full_matrices=False)
    keep = int(np.sum(sv > max(sv[0], 1.0) * 1e-8)) if sv.size else 0
    out = []
    for j in range(keep):
        col = u[:, j]
        xt = (col[:nt] + 1j * col[nt:2 * nt]).reshape(r, r)
        xs = (col[2 * nt:2 * nt + nk]
              + 1j * col[2 * nt + nk:]).reshape(k, k)
        out.append((la.herm_part(xt) if r else xt,
                    la.herm_part(xs) if k else xs))
    return out


def sample_commutant_pair(basis: list[tuple[np.ndarray, np.ndarray]],
                          seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Seeded pair (t, s) with 0 <= t (+) s <= I in the commutant span.

    Spectral clipping against the joint norm keeps the pair in the span
    because (I, I) is itself a commutant pair.
    """
    if not basis:
        raise EmptyCommutantError("pair commutant basis is empty")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal(len(basis))
    xt = sum(gk * b[0] for gk, b in zip(g, basis))
    xs = sum(gk * b[1] for gk, b in zip(g, basis))
    c = max(la.spec_norm(xt), la.spec_norm(xs))
    r = basis[0][0].shape[0]
    k = basis[0][1].shape[0]
    if c < 1e-14:
        return (0.5 * np.eye(r, dtype=np.complex128),
                0.5 * np.eye(k, dtype=np.complex128))
    tm = la.herm_part((xt + c * np.eye(r)) / (2.0 * c)) if r else xt
    sm = la.herm_part((xs + c * np.eye(k)) / (2.0 * c)) if k else xs
    return tm, sm


@dataclass(eq=False)
class ModuleRNResult:
    t_abs: np.ndarray
    s_abs: np.ndarray
    phi_r: CPInducingMap
    report: CertificateReport


def module_rn(dom: CPInducingMap, sub: CPInducingMap,
              tols: Tolerances | None = None) -> ModuleRNResult:
    """Module Radon-Nikodym derivative of a dominated pair.

    Requires dominates(phi_dom, phi_sub).  Builds both module dilations,
    the algebra intertwiner T and the module intertwiner S on
    generators, and returns R = (|T|, |S|) together with the induced map
    Phi_R and a certificate that sub is equivalent to Phi_R (equal
    inducing maps).
    """
    t = resolve(tols)
    if not _same_module(dom.module, sub.module):
        raise MismatchError("maps do not share the module")
    dom_rep = dominates(dom.phi, sub.phi, tols=t)
    if not dom_rep.passed:
        worst = min((e.values.get("min_eig", 0.0) for e in dom_rep.levels),
                    default=0.0)
        raise DominationError(
            f"inducing maps are not ordered (worst certificate eigenvalue "
            f"{worst:.3e})")
    d_dom = module_dilate(dom, tols=t)
    d_sub = module_dilate(sub, tols=t)

    t_int = intertwiner(d_dom.stine, d_sub.stine, tols=t)
    n_dom = d_dom.generator_matrix()
    n_sub = d_sub.generator_matrix()
    if d_dom.k_dim:
        s_mod = n_sub @ np.linalg.pinv(n_dom)
        defect = la.frob(s_mod @ n_dom - n_sub)
        if defect > 1e3 * t.eq * max(1.0, la.frob(n_sub)):
            raise DominationError(
                f"module generator map is not well defined "
                f"(residual {defect:.3e})")
        if la.spec_norm(s_mod) > 1.0 + 1e3 * t.eq:
            raise DominationError(
                f"module generator map has norm {la.spec_norm(s_mod):.6f} > 1")
    else:
        s_mod = np.zeros((d_sub.k_dim, 0), dtype=np.complex128)
    tt = la.herm_part(t_int.conj().T @ t_int)
    ss = la.herm_part(s_mod.conj().T @ s_mod)
    t_abs = la.herm_sqrt(tt, clip=t.psd * max(1.0, la.spec_norm(tt)))
    s_abs = la.herm_sqrt(ss, clip=t.psd * max(1.0, la.spec_norm(ss)))

    pair_res = _pair_commutant_residual(d_dom, t_abs, s_abs)
    phi_r = map_from_commutant_pair(d_dom, t_abs, s_abs, tols=t)

    equiv = 0.0
    scale = max(1.0, float(np.max(np.abs(sub.phi.img_mats)))
                if sub.phi.img_mats.size else 1.0)
    for i in range(sub.phi.dim):
        equiv = max(equiv, la.frob(sub.phi.img_mats[i]
                                   - phi_r.phi.img_mats[i]))
    tol = 1e3 * t.eq * scale * max(1.0, np.sqrt(max(d_dom.k_dim, 1)))
    passed = pair_res <= tol and equiv <= tol
    report = CertificateReport("module_rn", passed, [], {
        "commutant_pair_residual": float(pair_res),
        "equivalence_residual": float(equiv),
        "t_norm": la.spec_norm(t_abs),
        "s_norm": la.spec_norm(s_abs),
    })
    return ModuleRNResult(t_abs, s_abs, phi_r, report)
