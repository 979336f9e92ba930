import numpy as np
import pytest

import locp
from locp.errors import (ContractionError, MismatchError, PositivityError,
                         PreconditionError)

from conftest import diag_algebra, full_algebra, identity_map


def hadamard_oracle(a, t):
    """Independent entrywise product, written as explicit loops."""
    out = np.zeros_like(t, dtype=complex)
    for p in range(t.shape[0]):
        for q in range(t.shape[1]):
            out[p, q] = a[p, q] * t[p, q]
    return out


def test_apply_identity_map(rng):
    flag, alg = full_algebra(2)
    m = identity_map(alg)
    assert np.allclose(locp.apply(m, alg.unit_coords).mat, np.eye(2))
    assert np.allclose(locp.apply(m, np.zeros(alg.dim)).mat, 0)


def test_apply_schur_halves_entries(rng):
    flag, alg = full_algebra(2)
    a = np.ones((2, 2)) / 2.0
    m = locp.schur_map(a, flag, alg)
    t = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    coords = alg.coords(t)
    assert np.allclose(locp.apply(m, coords).mat, hadamard_oracle(a, t),
                       atol=1e-12)


def test_amplify_n1_equals_apply(rng):
    flag, alg = full_algebra(2)
    m = identity_map(alg)
    coords = rng.standard_normal(alg.dim) + 1j * rng.standard_normal(alg.dim)
    assert np.allclose(locp.amplify_apply(m, [[coords]]),
                       locp.apply(m, coords).mat)


def test_amplify_identity_blocks():
    flag, alg = full_algebra(2)
    m = identity_map(alg)
    u = alg.unit_coords
    z = np.zeros(alg.dim)
    big = locp.amplify_apply(m, [[u, z], [z, u]])
    assert np.allclose(big, np.eye(4))


def test_amplify_scalar_derivative():
    # the halved identity map commutes through the 1x1 amplification
    flag, alg = full_algebra(2)
    m = identity_map(alg)
    rep = locp.dilate_minimal(m)
    half = locp.map_from_derivative(rep, 0.5 * np.eye(rep.dil_dim))
    out = locp.amplify_apply(half, [[alg.unit_coords]])
    assert np.allclose(out, 0.5 * np.eye(2), atol=1e-12)


def test_verify_local_cp_schur_passes():
    flag, alg = full_algebra(3)
    rng = np.random.default_rng(5)
    g = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    a = g @ g.conj().T
    a /= np.linalg.norm(a, 2)
    report = locp.verify_local_cp(locp.schur_map(a, flag, alg))
    assert report.passed


def test_verify_local_cp_negated_fails_with_eigenvalue():
    flag, alg = full_algebra(2)
    phi = locp.random_local_cp(3, alg, flag, 2)
    neg = locp.make_map(alg, flag, [im.scale(-1.0) for im in phi.images])
    report = locp.verify_local_cp(neg)
    assert not report.passed
    assert report.levels[-1].values["min_eig"] < -1e-6


def test_verify_local_cp_zero_map():
    flag, alg = full_algebra(2)
    zero = locp.make_map(alg, flag,
                         [im.scale(0.0) for im in identity_map(alg).images])
    assert locp.verify_local_cp(zero).passed


def test_verify_local_cc_unital_and_scaled():
    flag, alg = full_algebra(2)
    m = identity_map(alg)
    cc = locp.verify_local_cc(m)
    assert cc.passed
    assert cc.levels[0].values["cc_value"] == pytest.approx(1.0)
    doubled = locp.make_map(alg, flag, [im.scale(2.0) for im in m.images])
    cc2 = locp.verify_local_cc(doubled)
    assert not cc2.passed
    assert cc2.levels[0].values["cc_value"] == pytest.approx(2.0)


def test_verify_local_cc_schur_half():
    flag, alg = full_algebra(2)
    m = locp.schur_map(np.ones((2, 2)) / 2.0, flag, alg)
    cc = locp.verify_local_cc(m)
    assert cc.passed
    assert cc.levels[0].values["cc_value"] == pytest.approx(0.5)


def test_verify_local_cc_requires_cp():
    flag, alg = full_algebra(2)
    phi = locp.random_local_cp(3, alg, flag, 2)
    neg = locp.make_map(alg, flag, [im.scale(-1.0) for im in phi.images])
    with pytest.raises(PreconditionError):
        locp.verify_local_cc(neg)


def test_dominates_reflexive_and_strict():
    flag, alg = full_algebra(2)
    phi = locp.random_local_cp(11, alg, flag, 2)
    half = locp.make_map(alg, flag, [im.scale(0.5) for im in phi.images])
    assert locp.dominates(phi, phi).passed
    assert locp.dominates(phi, half).passed
    assert not locp.dominates(half, phi).passed


def test_dominates_requires_shared_frame():
    flag, alg = full_algebra(2)
    flag2, alg2 = diag_algebra([1, 2])
    phi = locp.random_local_cp(1, alg, flag, 1)
    psi = locp.random_local_cp(1, alg2, flag2, 1)
    with pytest.raises(MismatchError):
        locp.dominates(phi, psi)


def test_schur_identity_gives_diagonal_part(rng):
    flag, alg = full_algebra(3)
    m = locp.schur_map(np.eye(3), flag, alg)
    t = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    out = locp.apply(m, alg.coords(t)).mat
    assert np.allclose(out, np.diag(np.diag(t)), atol=1e-12)


def test_schur_averaging_scales(rng):
    for n in (2, 3, 4):
        flag, alg = full_algebra(n)
        m = locp.schur_map(np.ones((n, n)) / n, flag, alg)
        t = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        out = locp.apply(m, alg.coords(t)).mat
        assert np.allclose(out, t / n, atol=1e-12)


def test_schur_rejects_indefinite_and_expansive():
    flag, alg = full_algebra(2)
    with pytest.raises(PositivityError):
        locp.schur_map(np.diag([1.0, -0.5]), flag, alg)
    with pytest.raises(ContractionError):
        locp.schur_map(2.0 * np.eye(2), flag, alg)


def test_schur_tensor_factorization():
    # psi_A(T) = V^H (A (x) T) V with V e_n = e_n (x) e_n
    for n in (2, 3, 4):
        flag, alg = full_algebra(n)
        rng = np.random.default_rng(n)
        g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        a = g @ g.conj().T
        a /= np.linalg.norm(a, 2)
        m = locp.schur_map(a, flag, alg)
        v = np.zeros((n * n, n))
        for i in range(n):
            v[i * n + i, i] = 1.0
        for k in range(alg.dim):
            t = alg.basis[k].mat
            factored = v.conj().T @ np.kron(a, t) @ v
            assert np.linalg.norm(m.img_mats[k] - factored) < 1e-10


def test_random_local_cp_zero_kraus_is_zero_map():
    flag, alg = diag_algebra([1, 2, 3])
    m = locp.random_local_cp(0, alg, flag, 0)
    assert np.allclose(m.img_mats, 0)
    assert locp.verify_local_cp(m).passed


def test_random_local_cp_passes_certificates():
    flag, alg = diag_algebra([2, 4])
    for seed in range(5):
        m = locp.random_local_cp(seed, alg, flag, 1 + seed % 3)
        assert locp.verify_local_cp(m).passed
        assert locp.verify_local_cc(m).passed


def test_random_local_cp_deterministic():
    flag, alg = diag_algebra([1, 3])
    m1 = locp.random_local_cp(42, alg, flag, 2)
    m2 = locp.random_local_cp(42, alg, flag, 2)
    assert np.array_equal(m1.img_mats, m2.img_mats)


def test_kraus_map_accepts_larger_witness():
    # any witness level above the target level certifies a Kraus map
    flag, alg = diag_algebra([1, 2, 3])
    m = locp.random_local_cp(9, alg, flag, 2)
    top = locp.make_map(alg, flag, m.images,
                        witness=(3, 3, 3))
    assert locp.verify_local_cp(top).passed


def test_cp_preserves_local_positive_elements(rng):
    flag, alg = diag_algebra([1, 3])
    m = locp.random_local_cp(17, alg, flag, 2)
    assert locp.verify_local_cp(m).passed
    # a locally positive element: positive plus something vanishing at level 1
    b = rng.standard_normal(alg.dim) + 1j * rng.standard_normal(alg.dim)
    pos = alg.element(np.einsum("p,q,pqk->k", b.conj(), b, alg.pq_tensor))
    kb = locp.kernel_basis(alg, 1)
    if kb:
        pos = pos + alg.element(kb[0]).scale(0.7 + 0.2j)
    assert locp.local_order(pos, 1) in (locp.LocalOrder.POSITIVE,
                                        locp.LocalOrder.ZERO)
    img = locp.apply(m, alg.coords(pos.mat))
    assert locp.local_order(img, 1) in (locp.LocalOrder.POSITIVE,
                                        locp.LocalOrder.ZERO)


def test_cp_oracle_agrees_on_smoke_pair():
    flag, alg = diag_algebra([1, 2])
    phi = locp.random_local_cp(23, alg, flag, 2)
    assert locp.verify_local_cp(phi).passed
    assert locp.cp_oracle(phi, samples=60, seed=1).passed
    neg = locp.make_map(alg, flag, [im.scale(-1.0) for im in phi.images])
    assert not locp.verify_local_cp(neg).passed
    assert not locp.cp_oracle(neg, samples=60, seed=1).passed
