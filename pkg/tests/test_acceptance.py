"""Acceptance suite: one test per criterion, at its stated tolerance.

Each test prints one summary line (visible with ``pytest -s``); the
pytest verdict itself is the pass/fail line per criterion.  Fixture
pools are seeded and deterministic.
"""
import time

import numpy as np
import pytest

import locp
from locp.algebra import algebra_from_basis
from locp.errors import EquivalenceError
from locp.gen import (dominated_pair_instance, module_pair_instance,
                      random_cp_instance)

from conftest import full_algebra, random_block_unitary


# --------------------------------------------------------------------------
# shared pools
# --------------------------------------------------------------------------

@pytest.fixture(scope="module")
def cp_pool():
    """50 seeded CP+CC instances with N <= 6, L <= 3, d <= 8."""
    instances = []
    for seed in range(50):
        inst = random_cp_instance(1000 + seed, n_max=6, l_max=3, d_max=8)
        instances.append(inst.maps["phi"])
    return instances


@pytest.fixture(scope="module")
def dilated_pool(cp_pool):
    return [locp.dilate_minimal(m) for m in cp_pool]


def test_criterion_01_dilation_reconstruction(cp_pool):
    locp.dilate_minimal(cp_pool[0])     # warm the JIT path before timing
    start = time.perf_counter()
    worst = 0.0
    for m in cp_pool:
        rep = locp.dilate_minimal(m)
        for i in range(m.dim):
            res = np.linalg.norm(
                rep.v_embed.conj().T @ rep.pi_mats[i] @ rep.v_embed
                - m.img_mats[i])
            bound = 1e-9 * np.linalg.norm(m.img_mats[i]) + 1e-12
            assert res <= bound
            worst = max(worst, res)
    elapsed = time.perf_counter() - start
    assert elapsed <= 10.0
    print(f"criterion 1 (dilation reconstruction): PASS — 50 instances, "
          f"worst residual {worst:.2e}, {elapsed:.2f}s")


def test_criterion_02_minimality_and_perp(dilated_pool):
    worst = 0.0
    for rep in dilated_pool:
        minim = locp.verify_minimality(rep)
        perp = locp.verify_perp_identity(rep)
        for entry in minim.levels + perp.levels:
            res = entry.values["projection_residual"]
            assert res <= 1e-8
            worst = max(worst, res)
        assert minim.values["union_residual"] <= 1e-8
    print(f"criterion 2 (minimality & perp identity): PASS — "
          f"worst projection residual {worst:.2e}")


def test_criterion_03_uniqueness_up_to_unitary(cp_pool, dilated_pool):
    rng = np.random.default_rng(77)
    worst = 0.0
    for m, rep1 in zip(cp_pool[:20], dilated_pool[:20]):
        perm = rng.permutation(m.dim)
        alg2 = algebra_from_basis(m.source.domain,
                                  [m.source.basis[p] for p in perm])
        m2 = locp.make_map(alg2, m.target_flag, [m.images[p] for p in perm],
                           witness=m.witness)
        rep2 = locp.dilate_minimal(m2)
        u, report = locp.unitary_equivalence(rep1, rep2)
        for key in ("unitarity_residual", "v_residual",
                    "intertwine_residual", "flag_residual"):
            assert report.values[key] <= 1e-8
            worst = max(worst, report.values[key])
        assert rep1.dil_flag.dims == rep2.dil_flag.dims
    print(f"criterion 3 (uniqueness up to unitary): PASS — 20 instances, "
          f"worst residual {worst:.2e}")


def test_criterion_04_rn_round_trip():
    worst = 0.0
    for seed in range(50):
        inst = dominated_pair_instance(2000 + seed)
        rep = locp.dilate_minimal(inst.maps["phi"])
        cert = locp.derivative(rep, inst.maps["psi"])
        err = np.linalg.norm(cert.t_matrix - inst.ground_truth["t"])
        assert err <= 1e-7
        assert cert.residual_reconstruction <= 1e-8
        assert cert.residual_commutant <= 1e-8
        worst = max(worst, err)
    print(f"criterion 4 (RN round trip): PASS — 50 pairs, "
          f"worst |T - T0| {worst:.2e}")


def test_criterion_05_order_isomorphism():
    checked = 0
    for seed in range(5):
        inst = dominated_pair_instance(3000 + seed)
        rep = locp.dilate_minimal(inst.maps["phi"])
        basis = locp.commutant_basis(rep)
        r = rep.dil_dim
        scale = max(1.0, float(np.max(np.abs(rep.map_ref.img_mats))))
        for k in range(20):
            t1 = locp.sample_contraction_in_commutant(basis, 10 * k)
            t2 = locp.sample_contraction_in_commutant(basis, 10 * k + 1)
            m1 = locp.map_from_derivative(rep, t1)
            m2 = locp.map_from_derivative(rep, t2)
            for p in (0.0, 0.25, 0.5, 1.0):
                mix = locp.map_from_derivative(rep, p * t1 + (1 - p) * t2)
                assert np.linalg.norm(
                    mix.img_mats - (p * m1.img_mats + (1 - p) * m2.img_mats)
                ) <= 1e-12
            # order: t1 <= s implies the induced maps are ordered
            s = t1 + 0.5 * (np.eye(r) - t1)
            assert locp.dominates(locp.map_from_derivative(rep, s),
                                  m1).passed
            # injectivity: images agree only when derivatives agree
            img_dist = max(np.linalg.norm(a.mat - b.mat)
                           for a, b in zip(m1.images, m2.images))
            if img_dist <= 1e-9 * scale:
                assert np.linalg.norm(t1 - t2) <= 1e-7
            checked += 1
    print(f"criterion 5 (order isomorphism): PASS — {checked} commutant "
          f"pairs across 5 instances")


def test_criterion_06_schur_example():
    rng = np.random.default_rng(5)
    for n in (2, 3, 4):
        flag, alg = full_algebra(n)
        avg = locp.schur_map(np.ones((n, n)) / n, flag, alg)
        diag = locp.schur_map(np.eye(n), flag, alg)
        for m, a in ((avg, np.ones((n, n)) / n), (diag, np.eye(n))):
            assert locp.verify_local_cp(m).passed
            assert locp.verify_local_cc(m).passed
            # factorization through V e_i = e_i (x) e_i
            v = np.zeros((n * n, n))
            for i in range(n):
                v[i * n + i, i] = 1.0
            for k in range(alg.dim):
                factored = v.conj().T @ np.kron(a, alg.basis[k].mat) @ v
                assert np.linalg.norm(m.img_mats[k] - factored) <= 1e-10
        t = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        assert np.linalg.norm(
            locp.apply(avg, alg.coords(t)).mat - t / n) <= 1e-12
        assert np.linalg.norm(
            locp.apply(diag, alg.coords(t)).mat
            - np.diag(np.diag(t))) <= 1e-12
    print("criterion 6 (entrywise-product example): PASS — n = 2, 3, 4")


def _module_fixture(seed):
    inst = module_pair_instance(4000 + seed)
    return inst.inducing_maps["Phi"]


def test_criterion_07_module_dilation():
    rng = np.random.default_rng(123)
    worst_build = 0.0
    worst_equiv = 0.0
    for seed in range(20):
        cand = _module_fixture(seed)
        d1 = locp.module_dilate(cand)
        assert d1.build_report.values["morphism_residual"] <= 1e-9
        assert d1.build_report.values["reconstruction_residual"] <= 1e-9
        worst_build = max(worst_build,
                          d1.build_report.values["morphism_residual"],
                          d1.build_report.values["reconstruction_residual"])
        mod = cand.module
        perm = rng.permutation(mod.rank)
        mod2 = locp.build_module(mod.algebra, mod.carrier_flag,
                                 [mod.basis[p] for p in perm])
        cand2 = locp.make_inducing(mod2, cand.phi, cand.target_dst_flag,
                                   [cand.images[p] for p in perm])
        d2 = locp.module_dilate(cand2)
        _, _, report = locp.module_unitary_equivalence(d1, d2)
        assert report.passed
        for key in ("unitarity_residual", "w_residual",
                    "intertwine_residual", "flag_residual"):
            assert report.values[key] <= 1e-8
            worst_equiv = max(worst_equiv, report.values[key])
    print(f"criterion 7 (module dilation): PASS — 20 fixtures, worst build "
          f"residual {worst_build:.2e}, worst equivalence {worst_equiv:.2e}")


def test_criterion_08_partial_isometry_equivalence():
    rng = np.random.default_rng(321)
    worst = 0.0
    for seed in range(20):
        cand = _module_fixture(100 + seed)
        v0 = random_block_unitary(rng, cand.target_dst_flag)
        cand2 = locp.make_inducing(cand.module, cand.phi,
                                   cand.target_dst_flag,
                                   [v0 @ m for m in cand.img_mats])
        w, report = locp.equivalence_partial_isometry(cand, cand2)
        assert report.passed
        for key in ("projection1_residual", "projection2_residual",
                    "reconstruction_residual"):
            assert report.values[key] <= 1e-8
            worst = max(worst, report.values[key])
        half_phi = locp.make_map(cand.phi.source, cand.phi.target_flag,
                                 [im.scale(0.5) for im in cand.phi.images],
                                 witness=cand.phi.witness)
        scaled = locp.make_inducing(cand.module, half_phi,
                                    cand.target_dst_flag,
                                    [m / np.sqrt(2.0)
                                     for m in cand.img_mats])
        with pytest.raises(EquivalenceError):
            locp.equivalence_partial_isometry(cand, scaled)
    print(f"criterion 8 (partial-isometry equivalence): PASS — 20 pairs, "
          f"worst residual {worst:.2e}; unequal inducing maps rejected")


def test_criterion_09_module_rn_round_trip():
    worst = 0.0
    for seed in range(30):
        inst = module_pair_instance(5000 + seed)
        res = locp.module_rn(inst.inducing_maps["Phi"],
                             inst.inducing_maps["Psi"])
        err_t = np.linalg.norm(res.t_abs - inst.ground_truth["t"])
        err_s = np.linalg.norm(res.s_abs - inst.ground_truth["s"])
        assert err_t <= 1e-6 and err_s <= 1e-6
        assert res.report.values["equivalence_residual"] <= 1e-8
        worst = max(worst, err_t, err_s)
    print(f"criterion 9 (module RN round trip): PASS — 30 fixtures, "
          f"worst derivative error {worst:.2e}")


def _oracle_instances():
    """CP and non-CP maps with d <= 4 and every level dim <= 3."""
    out = []
    for seed in range(4):
        rng = np.random.default_rng(6000 + seed)
        n = int(rng.integers(2, 4))
        dims = sorted(int(rng.integers(1, n + 1))
                      for _ in range(int(rng.integers(1, 3)) - 1)) + [n]
        flag = locp.make_flag(n, dims)
        alg = locp.build_algebra(flag, [np.diag(np.arange(1.0, n + 1.0))])
        assert alg.dim <= 4 and max(flag.dims) <= 3
        phi = locp.random_local_cp(seed, alg, flag, 2)
        out.append(phi)
        out.append(locp.make_map(alg, flag,
                                 [im.scale(-1.0) for im in phi.images]))
        kb = locp.kernel_basis(alg, 1)
        if kb:
            j = int(np.argmax(np.abs(kb[0])))
            bumped = [im.mat.copy() for im in phi.images]
            bump = np.zeros((n, n), dtype=complex)
            bump[0, 0] = 0.5
            bumped[j] = bumped[j] + bump
            out.append(locp.make_map(alg, flag, bumped))
    return out


def test_criterion_10_oracle_agreement():
    disagreements = 0
    maps_checked = 0
    for m in _oracle_instances():
        verdict = locp.verify_local_cp(m)
        oracle = locp.cp_oracle(m, samples=200, seed=99)
        for ve, oe in zip(verdict.levels, oracle.levels):
            if bool(ve.passed) != bool(oe.passed):
                disagreements += 1
        maps_checked += 1
    assert disagreements == 0
    print(f"criterion 10 (certificate vs sampler): PASS — {maps_checked} "
          f"maps, 200 samples each, zero disagreements")
