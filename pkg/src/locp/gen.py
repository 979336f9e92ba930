"""Deterministic fixture generators.

Every generator is a pure function of its seed and size parameters, so
identical invocations produce identical instances (and identical files
once serialized).  Dominated pairs and module pairs record their ground
truth derivatives for round-trip checking.
"""
from __future__ import annotations

import numpy as np

from .algebra import LocalAlgebra, build_algebra
from .config import Tolerances, resolve
from .cpmaps import random_kraus_ops, random_local_cp, schur_map
from .errors import ParamError
from .flags import Flag, make_flag
from .hilbert_module import (map_from_commutant_pair, module_dilate,
                             module_over_self, pair_commutant_basis,
                             phi_map_from_kraus, sample_commutant_pair)
from .radon_nikodym import (commutant_basis, map_from_derivative,
                            sample_contraction_in_commutant)
from .serialize import Instance
from .stinespring import dilate_minimal

__all__ = [
    "block_matrix_units", "random_flag", "random_algebra",
    "random_cp_instance", "schur_instance", "dominated_pair_instance",
    "module_pair_instance", "generate",
]


def block_matrix_units(flag: Flag) -> list[np.ndarray]:
    """Matrix units of the successive-difference blocks of a flag.

    Their span is the whole algebra of flag-compatible operators.
    """
    units = []
    prev = 0
    for k in flag.dims:
        for a in range(prev, k):
            for b in range(prev, k):
                m = np.zeros((flag.ambient, flag.ambient), dtype=np.complex128)
                m[a, b] = 1.0
                units.append(m)
        prev = max(prev, k)
    return units


def random_flag(rng: np.random.Generator, n_max: int = 6,
                l_max: int = 3) -> Flag:
    n = int(rng.integers(2, n_max + 1))
    levels = int(rng.integers(1, l_max + 1))
    if levels == 1:
        return make_flag(n, [n])
    cuts = sorted(int(rng.integers(1, n + 1)) for _ in range(levels - 1))
    return make_flag(n, cuts + [n])


def random_algebra(rng: np.random.Generator, flag: Flag, d_max: int = 8,
                   tols: Tolerances | None = None) -> LocalAlgebra:
    """A structurally random algebra on the flag with dimension <= d_max."""
    n = flag.ambient
    deltas = np.diff(np.concatenate([[0], np.maximum.accumulate(flag.dims)]))
    kinds = []
    if n <= d_max:
        kinds += ["diag", "herm"]
    if int(np.sum(deltas ** 2)) <= d_max:
        kinds.append("block")
    if flag.levels == 1 and n * n <= d_max:
        kinds.append("full")
    if not kinds:
        raise ParamError(
            f"no algebra of dimension <= {d_max} fits ambient {n}")
    kind = kinds[int(rng.integers(0, len(kinds)))]
    if kind == "diag":
        gens = [np.diag(np.arange(1.0, n + 1.0)).astype(np.complex128)]
    elif kind == "herm":
        b = random_kraus_ops(rng, flag, flag, 1, normalize=False)[0]
        gens = [0.5 * (b + b.conj().T)]
    elif kind == "block":
        gens = block_matrix_units(flag)
    else:
        gens = block_matrix_units(flag)
    return build_algebra(flag, gens, tols=tols)


def random_cp_instance(seed: int, n_max: int = 6, l_max: int = 3,
                       d_max: int = 8, kraus: int | None = None,
                       tols: Tolerances | None = None) -> Instance:
    """A seeded instance with one flag, one algebra and one CP+CC map."""
    t = resolve(tols)
    rng = np.random.default_rng(seed)
    flag = random_flag(rng, n_max, l_max)
    alg = random_algebra(rng, flag, d_max, tols=t)
    count = int(rng.integers(1, 4)) if kraus is None else kraus
    phi = random_local_cp(int(rng.integers(0, 2 ** 31)), alg, flag, count,
                          tols=t)
    inst = Instance(tolerances=t)
    inst.flags["H"] = flag
    inst.algebras["A"] = alg
    inst.maps["phi"] = phi
    return inst


def schur_instance(n: int, dims=None,
                   tols: Tolerances | None = None) -> Instance:
    """The entrywise-product map with the rank-one averaging matrix J/n."""
    t = resolve(tols)
    if n < 1:
        raise ParamError("n must be positive")
    flag = make_flag(n, list(range(1, n + 1)) if dims is None else dims,
                     tols=t)
    alg = build_algebra(flag, block_matrix_units(flag), tols=t)
    a = np.ones((n, n), dtype=np.complex128) / n
    inst = Instance(tolerances=t)
    inst.flags["H"] = flag
    inst.algebras["A"] = alg
    inst.maps["schur"] = schur_map(a, flag, alg, tols=t)
    return inst


def dominated_pair_instance(seed: int, n_max: int = 4, l_max: int = 3,
                            d_max: int = 6, kraus: int | None = None,
                            tols: Tolerances | None = None) -> Instance:
    """An instance with maps phi >= psi = phi_T and the ground-truth T."""
    t = resolve(tols)
    inst = random_cp_instance(seed, n_max, l_max, d_max, kraus, tols=t)
    phi = inst.maps["phi"]
    rep = dilate_minimal(phi, tols=t)
    basis = commutant_basis(rep, tols=t)
    t0 = sample_contraction_in_commutant(basis, seed + 1, tols=t)
    inst.maps["psi"] = map_from_derivative(rep, t0, tols=t)
    inst.ground_truth["t"] = t0
    return inst


def module_pair_instance(seed: int, n_max: int = 3, l_max: int = 2,
                         d_max: int = 4, kraus: int | None = None,
                         tols: Tolerances | None = None) -> Instance:
    """An instance with module maps Phi >= Psi = Phi_{T (+) S} and (T, S)."""
    t = resolve(tols)
    rng = np.random.default_rng(seed)
    flag = random_flag(rng, n_max, l_max)
    alg = random_algebra(rng, flag, d_max, tols=t)
    mod = module_over_self(alg, tols=t)
    count = int(rng.integers(1, 3)) if kraus is None else kraus
    vs = random_kraus_ops(int(rng.integers(0, 2 ** 31)), flag, flag, count)
    dom = phi_map_from_kraus(mod, flag, vs, tols=t)
    dil = module_dilate(dom, tols=t)
    basis = pair_commutant_basis(dil, tols=t)
    t0, s0 = sample_commutant_pair(basis, seed + 1)
    sub = map_from_commutant_pair(dil, t0, s0, tols=t)

    inst = Instance(tolerances=t)
    inst.flags["H"] = flag
    inst.flags["K"] = dom.target_dst_flag
    inst.algebras["A"] = alg
    inst.maps["phi"] = dom.phi
    inst.maps["psi"] = sub.phi
    inst.modules["E"] = mod
    inst.inducing_maps["Phi"] = dom
    inst.inducing_maps["Psi"] = sub
    inst.ground_truth["t"] = t0
    inst.ground_truth["s"] = s0
    return inst


def generate(kind: str, seed: int = 0, n: int | None = None,
             dims=None, kraus: int | None = None,
             tols: Tolerances | None = None) -> Instance:
    """Dispatch for the CLI fixture generator."""
    if kind == "schur":
        return schur_instance(3 if n is None else n, dims, tols=tols)
    if kind == "random-cp":
        return random_cp_instance(seed, n_max=n or 6, kraus=kraus, tols=tols)
    if kind == "dominated-pair":
        return dominated_pair_instance(seed, n_max=n or 4, kraus=kraus,
                                       tols=tols)
    if kind == "module-pair":
        return module_pair_instance(seed, n_max=n or 3, kraus=kraus,
                                    tols=tols)
    raise ParamError(
        f"unknown fixture kind {kind!r}; expected schur, random-cp, "
        "dominated-pair or module-pair")
