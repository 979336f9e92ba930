import numpy as np
import pytest

import locp
from locp.errors import (CommutantError, CompatibilityError, DominationError,
                         EmptyCommutantError, SpectrumError)

from conftest import diag_algebra, full_algebra, identity_map


@pytest.fixture(scope="module")
def dilated_pair():
    flag, alg = diag_algebra([2, 4])
    phi = locp.random_local_cp(7, alg, flag, 2)
    rep = locp.dilate_minimal(phi)
    return flag, alg, phi, rep


def test_intertwiner_same_map_is_unitary(dilated_pair):
    _, _, phi, rep = dilated_pair
    rep2 = locp.dilate_minimal(phi)
    s = locp.intertwiner(rep, rep2)
    assert np.allclose(s.conj().T @ s, np.eye(rep.dil_dim), atol=1e-10)


def test_intertwiner_zero_map(dilated_pair):
    flag, alg, phi, rep = dilated_pair
    zero = locp.make_map(alg, flag, [b.scale(0.0) for b in phi.images],
                         witness=phi.witness)
    rep_zero = locp.dilate_minimal(zero)
    s = locp.intertwiner(rep, rep_zero)
    assert s.shape == (0, rep.dil_dim)


def test_intertwiner_half_has_norm_inv_sqrt2(dilated_pair):
    # psi = phi_{I/2} scales the Gram by 1/2, so every singular value of S
    # equals 1/sqrt(2)
    _, _, phi, rep = dilated_pair
    half = locp.map_from_derivative(rep, 0.5 * np.eye(rep.dil_dim))
    rep_half = locp.dilate_minimal(half)
    s = locp.intertwiner(rep, rep_half)
    sv = np.linalg.svd(s, compute_uv=False)
    assert np.allclose(sv, 1.0 / np.sqrt(2.0), atol=1e-9)


def test_derivative_of_self_is_identity(dilated_pair):
    _, _, phi, rep = dilated_pair
    cert = locp.derivative(rep, phi)
    assert np.linalg.norm(cert.t_matrix - np.eye(rep.dil_dim)) < 1e-9
    assert cert.passed


def test_derivative_of_half_is_half_identity(dilated_pair):
    _, _, phi, rep = dilated_pair
    half = locp.map_from_derivative(rep, 0.5 * np.eye(rep.dil_dim))
    cert = locp.derivative(rep, half)
    assert np.linalg.norm(cert.t_matrix - 0.5 * np.eye(rep.dil_dim)) < 1e-9


def test_derivative_round_trip(dilated_pair):
    _, _, _, rep = dilated_pair
    basis = locp.commutant_basis(rep)
    for seed in range(6):
        t0 = locp.sample_contraction_in_commutant(basis, seed)
        psi = locp.map_from_derivative(rep, t0)
        cert = locp.derivative(rep, psi)
        assert np.linalg.norm(cert.t_matrix - t0) <= 1e-7
        assert cert.residual_reconstruction <= 1e-8
        assert cert.residual_commutant <= 1e-8


def test_derivative_rejects_non_dominated(dilated_pair):
    flag, alg, phi, rep = dilated_pair
    doubled = locp.make_map(alg, flag, [im.scale(2.0) for im in phi.images],
                            witness=phi.witness)
    half = locp.map_from_derivative(rep, 0.5 * np.eye(rep.dil_dim))
    rep_half = locp.dilate_minimal(half)
    with pytest.raises(DominationError):
        locp.derivative(rep_half, phi)
    with pytest.raises(DominationError):
        locp.derivative(rep, doubled)


def test_map_from_derivative_identity_and_zero(dilated_pair):
    _, _, phi, rep = dilated_pair
    same = locp.map_from_derivative(rep, np.eye(rep.dil_dim))
    assert max(np.linalg.norm(a.mat - b.mat)
               for a, b in zip(same.images, phi.images)) < 1e-10
    zero = locp.map_from_derivative(rep, np.zeros((rep.dil_dim,
                                                   rep.dil_dim)))
    assert np.allclose(zero.img_mats, 0, atol=1e-12)


def test_map_from_derivative_half(dilated_pair):
    _, _, phi, rep = dilated_pair
    half = locp.map_from_derivative(rep, 0.5 * np.eye(rep.dil_dim))
    for a, b in zip(half.images, phi.images):
        assert np.linalg.norm(a.mat - 0.5 * b.mat) < 1e-10


def test_map_from_derivative_precondition_errors(dilated_pair):
    _, _, _, rep = dilated_pair
    r = rep.dil_dim
    with pytest.raises(SpectrumError):
        locp.map_from_derivative(rep, 2.0 * np.eye(r))
    with pytest.raises(SpectrumError):
        locp.map_from_derivative(rep, 1j * np.eye(r))
    # a hermitian contraction that fails to commute
    bad = np.zeros((r, r), dtype=complex)
    bad[0, 0] = 1.0
    bad[1, 1] = 0.25
    if any(np.linalg.norm(bad @ p - p @ bad) > 1e-6 for p in rep.pi_mats):
        with pytest.raises((CommutantError, CompatibilityError)):
            locp.map_from_derivative(rep, bad)


def test_commutant_of_irreducible_rep_is_scalar():
    flag, alg = full_algebra(2)
    rep = locp.dilate_minimal(identity_map(alg))
    basis = locp.commutant_basis(rep)
    assert len(basis) == 1
    b = basis[0]
    assert np.allclose(b, b[0, 0] * np.eye(rep.dil_dim), atol=1e-10)
    assert np.linalg.norm(b) == pytest.approx(1.0, abs=1e-10)


def test_commutant_of_doubled_map_has_multiplicity():
    # phi (+) phi on a doubled flag: the commutant picks up 2x2 intertwiners
    flag, alg = full_algebra(2)
    m = identity_map(alg)
    big_flag = locp.make_flag(4, [4])
    doubled = locp.make_map(alg, big_flag, [
        np.kron(np.eye(2), im.mat) for im in m.images], witness=(1,))
    rep = locp.dilate_minimal(doubled)
    basis = locp.commutant_basis(rep)
    assert len(basis) >= 4


def test_commutant_zero_map_empty():
    flag, alg = full_algebra(2)
    zero = locp.make_map(alg, flag, [b.scale(0.0) for b in alg.basis])
    rep = locp.dilate_minimal(zero)
    assert locp.commutant_basis(rep) == []
    with pytest.raises(EmptyCommutantError):
        locp.sample_contraction_in_commutant([], 0)


def test_sample_contraction_properties(dilated_pair):
    _, _, _, rep = dilated_pair
    basis = locp.commutant_basis(rep)
    t1 = locp.sample_contraction_in_commutant(basis, 5)
    t2 = locp.sample_contraction_in_commutant(basis, 5)
    assert np.array_equal(t1, t2)
    w = np.linalg.eigvalsh(t1)
    assert w[0] >= -1e-12 and w[-1] <= 1.0 + 1e-12
    # satisfies every precondition of the induced-map construction
    locp.map_from_derivative(rep, t1)


def test_sample_contraction_scalar_commutant():
    flag, alg = full_algebra(2)
    rep = locp.dilate_minimal(identity_map(alg))
    basis = locp.commutant_basis(rep)
    t = locp.sample_contraction_in_commutant(basis, 9)
    assert np.allclose(t, t[0, 0] * np.eye(rep.dil_dim), atol=1e-12)
    assert 0.0 - 1e-12 <= t[0, 0].real <= 1.0 + 1e-12


def test_correspondence_is_affine(dilated_pair):
    _, _, _, rep = dilated_pair
    basis = locp.commutant_basis(rep)
    t1 = locp.sample_contraction_in_commutant(basis, 1)
    t2 = locp.sample_contraction_in_commutant(basis, 2)
    m1 = locp.map_from_derivative(rep, t1)
    m2 = locp.map_from_derivative(rep, t2)
    for p in (0.0, 0.25, 0.5, 1.0):
        mix = locp.map_from_derivative(rep, p * t1 + (1 - p) * t2)
        expected = p * m1.img_mats + (1 - p) * m2.img_mats
        assert np.linalg.norm(mix.img_mats - expected) <= 1e-12


def test_correspondence_preserves_order(dilated_pair):
    _, _, _, rep = dilated_pair
    basis = locp.commutant_basis(rep)
    r = rep.dil_dim
    for seed in range(5):
        t = locp.sample_contraction_in_commutant(basis, seed)
        s = t + 0.5 * (np.eye(r) - t)     # t <= s <= I, still in the span
        m_t = locp.map_from_derivative(rep, t)
        m_s = locp.map_from_derivative(rep, s)
        assert locp.dominates(m_s, m_t).passed


def test_correspondence_is_injective(dilated_pair):
    _, _, _, rep = dilated_pair
    basis = locp.commutant_basis(rep)
    scale = max(1.0, float(np.max(np.abs(rep.map_ref.img_mats))))
    for seed in range(10):
        t = locp.sample_contraction_in_commutant(basis, seed)
        s = locp.sample_contraction_in_commutant(basis, seed + 100)
        m_t = locp.map_from_derivative(rep, t)
        m_s = locp.map_from_derivative(rep, s)
        img_dist = max(np.linalg.norm(a.mat - b.mat)
                       for a, b in zip(m_t.images, m_s.images))
        if img_dist <= 1e-9 * scale:
            assert np.linalg.norm(t - s) <= 1e-7


def test_intertwining_relations(dilated_pair):
    _, _, _, rep = dilated_pair
    basis = locp.commutant_basis(rep)
    t0 = locp.sample_contraction_in_commutant(basis, 13)
    psi = locp.map_from_derivative(rep, t0)
    cert = locp.derivative(rep, psi)
    assert cert.values["residual_intertwine"] <= 1e-8
