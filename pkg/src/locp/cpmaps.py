"""Local completely positive / completely contractive maps and certificates.

A :class:`LocalCPMap` is a linear map from a :class:`LocalAlgebra` into
the flag-compatible operators on a target flag, stored through its
basis images together with a witness function assigning to every target
level the source level that certifies it.

Complete positivity at a pair (level, witness) is decided by a finite
certificate: annihilation of the witness-level kernel ideal plus
positive semidefiniteness of the pairwise-product block matrix
[phi(a_p^* a_q)] restricted to the level.  Complete contractivity of a
certified CP map reduces to ||phi(1)|| <= 1 level-wise.  A seeded
brute-force sampler of amplified positivity is provided as an
independent oracle for the certificate.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as kern
from . import _linalg as la
from .algebra import LocalAlgebra, kernel_basis
from .config import Tolerances, resolve
from .errors import (ContractionError, DimensionError, MismatchError,
                     PositivityError, PreconditionError, ValidationError)
from .flags import BlockOp, Flag, check_block_op, flags_equal, seminorm
from .reports import CertificateReport, LevelCheck

__all__ = [
    "LocalCPMap", "make_map", "apply", "amplify_apply", "verify_local_cp",
    "verify_local_cc", "dominates", "schur_map", "random_local_cp",
    "random_kraus_ops", "cp_oracle",
]


@dataclass(eq=False)
class LocalCPMap:
    source: LocalAlgebra
    target_flag: Flag
    images: list[BlockOp]
    witness: tuple[int, ...]
    img_mats: np.ndarray = field(repr=False, default=None)  # (d, Nt, Nt)
    _cp_report: CertificateReport | None = field(repr=False, default=None)
    _cc_report: CertificateReport | None = field(repr=False, default=None)

    @property
    def dim(self) -> int:
        return self.source.dim

    def image_of(self, coords) -> BlockOp:
        c = np.asarray(coords, dtype=np.complex128)
        if c.shape != (self.dim,):
            raise DimensionError(
                f"coordinate vector has length {c.shape}, expected {self.dim}")
        return BlockOp(np.tensordot(c, self.img_mats, axes=(0, 0)),
                       self.target_flag, self.target_flag)

    def unit_image(self) -> BlockOp:
        return self.image_of(self.source.unit_coords)


def make_map(source: LocalAlgebra, target_flag: Flag, images,
             witness=None, tols: Tolerances | None = None) -> LocalCPMap:
    """Assemble a map from basis images, validating shapes and witness.

    images may be BlockOps on the target flag or matrices in its ambient
    coordinates; witness defaults to the identity assignment (requires
    equal level counts).
    """
    if len(images) != source.dim:
        raise DimensionError(
            f"{len(images)} images for a dimension-{source.dim} algebra")
    ops = []
    for im in images:
        if isinstance(im, BlockOp):
            if not flags_equal(im.target, target_flag) or not im.is_square:
                raise ValidationError("image lives on the wrong flag")
            ops.append(im)
        else:
            ops.append(check_block_op(im, target_flag, target_flag, tols=tols))
    if witness is None:
        if target_flag.levels != source.domain.levels:
            raise ValidationError(
                "identity witness needs equal level counts")
        witness = tuple(range(1, target_flag.levels + 1))
    else:
        witness = tuple(int(w) for w in witness)
        if len(witness) != target_flag.levels:
            raise DimensionError("witness length must match target levels")
        for w in witness:
            source.domain.check_level(w)
    mats = np.stack([op.mat for op in ops]) if ops else np.zeros(
        (0, target_flag.ambient, target_flag.ambient), dtype=np.complex128)
    return LocalCPMap(source, target_flag, ops, witness, img_mats=mats)


def apply(m: LocalCPMap, coords) -> BlockOp:
    """Evaluate the map on the element with the given coordinates."""
    return m.image_of(coords)


def amplify_apply(m: LocalCPMap, entries) -> np.ndarray:
    """Apply the n-amplification to an n x n array of coordinate vectors.

    Returns the (n*N) x (n*N) matrix with (i, j) block the image of
    entries[i][j], the matrix picture of the amplified map on the n-fold
    direct sum of the target space.
    """
    n = len(entries)
    nt = m.target_flag.ambient
    out = np.zeros((n * nt, n * nt), dtype=np.complex128)
    for i in range(n):
        row = entries[i]
        if len(row) != n:
            raise DimensionError("entries must form a square array")
        for j in range(n):
            out[i * nt:(i + 1) * nt, j * nt:(j + 1) * nt] = \
                m.image_of(row[j]).mat
    return out


def _image_scale(m: LocalCPMap) -> float:
    if m.img_mats.size == 0:
        return 1.0
    return max(1.0, float(np.max(np.sqrt(
        np.sum(np.abs(m.img_mats) ** 2, axis=(1, 2))))))


def verify_local_cp(m: LocalCPMap, tols: Tolerances | None = None,
                    refresh: bool = False) -> CertificateReport:
    """Certificate of local complete positivity, level by level.

    For each target level l with witness a = witness(l) the check is:
    (i) every kernel-ideal basis element of the witness level maps to
    zero on level l, and (ii) the block matrix [phi(a_p^* a_q)]
    restricted to level l is PSD (hermitian to the eq tolerance, minimal
    eigenvalue above -psd * spectral norm).
    """
    if m._cp_report is not None and not refresh:
        return m._cp_report
    t = resolve(tols)
    scale = _image_scale(m)
    pq = m.source.pq_tensor
    levels = []
    ker_cache: dict[int, list[np.ndarray]] = {}
    for l in range(1, m.target_flag.levels + 1):
        alpha = m.witness[l - 1]
        if alpha not in ker_cache:
            ker_cache[alpha] = kernel_basis(m.source, alpha, tols=t)
        k = m.target_flag.dims[l - 1]
        ker_res = 0.0
        for b in ker_cache[alpha]:
            ker_res = max(ker_res, la.frob(m.image_of(b).mat[:k, :k]))
        imgs_l = np.ascontiguousarray(m.img_mats[:, :k, :k])
        g = kern.pair_blocks(pq, imgs_l)
        herm_res = la.herm_residual(g)
        gh = la.herm_part(g)
        w = np.linalg.eigvalsh(gh) if gh.size else np.zeros(0)
        min_eig = float(w[0]) if w.size else 0.0
        gnorm = float(max(abs(w[0]), abs(w[-1]))) if w.size else 0.0
        ok = (ker_res <= t.eq * scale
              and herm_res <= t.eq * max(1.0, gnorm)
              and min_eig >= -t.psd * max(gnorm, 1.0))
        levels.append(LevelCheck(l, ok, alpha, {
            "min_eig": min_eig,
            "kernel_residual": ker_res,
            "herm_residual": herm_res,
        }))
    report = CertificateReport("local_cp", all(e.passed for e in levels), levels)
    m._cp_report = report
    return report


def verify_local_cc(m: LocalCPMap, tols: Tolerances | None = None,
                    cp_report: CertificateReport | None = None
                    ) -> CertificateReport:
    """Complete contractivity certificate for a map already certified CP.

    For CP maps the level-wise completely bounded norm equals the norm
    of the unit image, so the check is seminorm(phi(1), l) <= 1.
    """
    t = resolve(tols)
    cp = cp_report or verify_local_cp(m, tols=t)
    if not cp.passed:
        raise PreconditionError(
            "complete contractivity requires a passing CP certificate")
    unit_img = m.unit_image()
    levels = []
    for l in range(1, m.target_flag.levels + 1):
        value = seminorm(unit_img, l)
        levels.append(LevelCheck(l, value <= 1.0 + t.eq, m.witness[l - 1],
                                 {"cc_value": value}))
    report = CertificateReport("local_cc", all(e.passed for e in levels), levels)
    m._cc_report = report
    return report


def _same_map_frame(a: LocalCPMap, b: LocalCPMap) -> bool:
    if a.source is not b.source:
        if a.source.dim != b.source.dim:
            return False
        if not flags_equal(a.source.domain, b.source.domain):
            return False
        if any(la.frob(x.mat - y.mat) > 1e-12 * max(1.0, la.frob(x.mat))
               for x, y in zip(a.source.basis, b.source.basis)):
            return False
    return flags_equal(a.target_flag, b.target_flag) and a.witness == b.witness


def difference(phi: LocalCPMap, psi: LocalCPMap) -> LocalCPMap:
    if not _same_map_frame(phi, psi):
        raise MismatchError(
            "maps must share source algebra, target flag and witness")
    return make_map(phi.source, phi.target_flag,
                    [BlockOp(x.mat - y.mat, x.source, x.target)
                     for x, y in zip(phi.images, psi.images)],
                    witness=phi.witness)


def dominates(phi: LocalCPMap, psi: LocalCPMap,
              tols: Tolerances | None = None) -> CertificateReport:
    """Certificate that psi <= phi, i.e. phi - psi is local CP and CC."""
    t = resolve(tols)
    diff = difference(phi, psi)
    cp = verify_local_cp(diff, tols=t)
    if not cp.passed:
        return CertificateReport("domination", False, cp.levels, cp.values)
    cc = verify_local_cc(diff, tols=t, cp_report=cp)
    return cp.merge(cc, "domination")


def schur_map(a_matrix, flag: Flag, alg: LocalAlgebra,
              tols: Tolerances | None = None) -> LocalCPMap:
    """The entrywise-product map T -> [a_pq t_pq] in the flag frame.

    a_matrix must be PSD and contractive; the resulting map sends each
    algebra basis element to its entrywise product with a_matrix, is
    local CP and local CC with the identity witness.
    """
    t = resolve(tols)
    if not flags_equal(alg.domain, flag):
        raise MismatchError("algebra does not live on the given flag")
    a = la.as_complex(a_matrix)
    if a.shape != (flag.ambient, flag.ambient):
        raise DimensionError(
            f"entrywise-product matrix must be {flag.ambient} x {flag.ambient}")
    norm = la.spec_norm(a)
    if la.herm_residual(a) > t.eq * max(1.0, norm):
        raise PositivityError("entrywise-product matrix is not hermitian")
    if la.min_eig_herm(a) < -t.psd * max(1.0, norm):
        raise PositivityError(
            f"entrywise-product matrix has a negative eigenvalue "
            f"({la.min_eig_herm(a):.3e})")
    if norm > 1.0 + t.eq:
        raise ContractionError(
            f"entrywise-product matrix has norm {norm:.6f} > 1")
    images = [BlockOp(a * b.mat, b.source, b.target) for b in alg.basis]
    return make_map(alg, flag, images)


def random_kraus_ops(seed_or_rng, source_flag: Flag, target_flag: Flag,
                     count: int, normalize: bool = True) -> np.ndarray:
    """Seeded flag-compatible maps V_r : target -> source, jointly contractive.

    Each V_r is block-diagonal with respect to the successive-difference
    decompositions (canonical coordinates); when normalize is set the
    family is rescaled so ||sum_r V_r^H V_r|| <= 1.
    """
    if source_flag.levels != target_flag.levels:
        raise DimensionError("flags must have equal level counts")
    rng = (seed_or_rng if isinstance(seed_or_rng, np.random.Generator)
           else np.random.default_rng(seed_or_rng))
    ns, nt = source_flag.ambient, target_flag.ambient
    vs = np.zeros((count, ns, nt), dtype=np.complex128)
    sprev = tprev = 0
    bounds = list(zip(source_flag.dims, target_flag.dims))
    for r in range(count):
        sprev = tprev = 0
        for ks, kt in bounds:
            if ks > sprev and kt > tprev:
                block = (rng.standard_normal((ks - sprev, kt - tprev))
                         + 1j * rng.standard_normal((ks - sprev, kt - tprev)))
                vs[r, sprev:ks, tprev:kt] = block / np.sqrt(2.0)
            sprev, tprev = max(sprev, ks), max(tprev, kt)
    if normalize and count:
        s = sum(v.conj().T @ v for v in vs)
        top = la.spec_norm(s)
        if top > 1.0:
            vs /= np.sqrt(top)
    return vs


def random_local_cp(seed, alg: LocalAlgebra, target_flag: Flag,
                    kraus_count: int, tols: Tolerances | None = None,
                    return_kraus: bool = False):
    """A seeded local CP and CC map built from flag-compatible Kraus ops.

    images[i] = sum_r V_r^H a_i V_r with the V_r jointly contractive,
    which passes both certificates with the identity witness by
    construction.  Reproducible for a fixed seed.
    """
    vs = random_kraus_ops(seed, alg.domain, target_flag, kraus_count)
    mats = kern.kraus_conjugate(vs, alg.mats)
    images = [BlockOp(mats[i], target_flag, target_flag)
              for i in range(alg.dim)]
    m = make_map(alg, target_flag, images, tols=tols)
    return (m, vs) if return_kraus else m


def cp_oracle(m: LocalCPMap, samples: int = 200, seed: int = 0,
              tol: float = 1e-8, n_max: int | None = None,
              tols: Tolerances | None = None) -> CertificateReport:
    """Brute-force amplified-positivity sampler, independent of the certificate.

    For each target level l with witness a, draws locally positive
    elements of every matrix size n <= dim: X = [b_i^* b_j] + Y with the
    b_i random algebra elements and Y an arbitrary matrix over the
    witness-level kernel ideal.  The amplified image restricted to level
    l must be hermitian PSD for every sample; tol is relative to each
    sample's spectral scale.
    """
    t = resolve(tols)
    rng = np.random.default_rng(seed)
    d = m.dim
    n_max = d if n_max is None else min(n_max, d)
    pq = m.source.pq_tensor
    levels = []
    for l in range(1, m.target_flag.levels + 1):
        alpha = m.witness[l - 1]
        k = m.target_flag.dims[l - 1]
        kb = kernel_basis(m.source, alpha, tols=t)
        kimgs = (np.stack([m.image_of(b).mat[:k, :k] for b in kb])
                 if kb else np.zeros((0, k, k), dtype=np.complex128))
        ns = rng.integers(1, n_max + 1, size=samples)
        bs = (rng.standard_normal((samples, n_max, d))
              + 1j * rng.standard_normal((samples, n_max, d))) / np.sqrt(2.0)
        ys = (rng.standard_normal((samples, n_max, n_max, len(kb)))
              + 1j * rng.standard_normal((samples, n_max, n_max, len(kb)))
              ) / np.sqrt(2.0)
        imgs_l = np.ascontiguousarray(m.img_mats[:, :k, :k])
        stats = kern.oracle_samples(pq, imgs_l, np.ascontiguousarray(kimgs),
                                    np.ascontiguousarray(bs),
                                    np.ascontiguousarray(ys), ns)
        scales = np.maximum(stats[:, 2], 1.0)
        worst_eig = float(np.min(stats[:, 0] / scales))
        worst_herm = float(np.max(stats[:, 1] / scales))
        ok = worst_eig >= -tol and worst_herm <= tol
        levels.append(LevelCheck(l, ok, alpha, {
            "worst_min_eig": worst_eig,
            "worst_herm_residual": worst_herm,
            "samples": samples,
        }))
    return CertificateReport("cp_oracle", all(e.passed for e in levels), levels)
