import numpy as np
import pytest
import scipy.linalg

from nmrtwin import qmat
from conftest import I2, SX, SY, SZ


def test_matmul_pauli_product():
    assert np.array_equal(qmat.matmul(SX, SZ), np.array([[0, -1], [1, 0]]))


def test_matmul_shape_error():
    with pytest.raises(qmat.ShapeError):
        qmat.matmul(np.eye(2), np.eye(4))


def test_as_matrix_rejects_non_square():
    with pytest.raises(qmat.ShapeError):
        qmat.as_matrix(np.zeros((2, 3)))


def test_kron_examples():
    assert np.array_equal(qmat.kron(SZ, I2), np.diag([1, 1, -1, -1]))
    assert np.array_equal(qmat.kron(I2, SZ), np.diag([1, -1, 1, -1]))
    assert np.array_equal(qmat.kron(SZ / 2, SZ / 2), np.diag([0.25, -0.25, -0.25, 0.25]))


def test_trace_and_dagger():
    assert qmat.trace(np.diag([1, 0.5981, -0.5981, -1])) == pytest.approx(0)
    assert qmat.trace(I2) == 2
    m = np.array([[1, 2j], [3, 4 - 1j]])
    assert np.array_equal(qmat.dagger(m), m.conj().T)


def test_expm_pi_rotation_about_x():
    w1 = 2 * np.pi * 25e3
    u = qmat.expm_generator(-w1 * SX / 2, np.pi / w1)
    assert np.allclose(u, 1j * SX, atol=1e-12)


def test_expm_j_delay_diagonal():
    j = 208.0
    h = 2 * np.pi * j * np.kron(SZ / 2, SZ / 2)
    u = qmat.expm_generator(h, 1 / (2 * j))
    e = np.exp(-1j * np.pi / 4)
    assert np.allclose(u, np.diag([e, e.conjugate(), e.conjugate(), e]), atol=1e-12)


def test_expm_zero_time_is_identity():
    assert np.allclose(qmat.expm_generator(SY, 0.0), I2)


def test_expm_rejects_non_hermitian():
    with pytest.raises(qmat.ContractError):
        qmat.expm_generator(np.array([[0, 1], [0, 0]]), 1.0)


def test_expm_matches_scipy_oracle(rng):
    for dim in (2, 4):
        h = qmat.random_hermitian(dim, rng)
        t = rng.uniform(-2, 2)
        assert np.allclose(qmat.expm_generator(h, t), scipy.linalg.expm(-1j * t * h), atol=1e-10)


def test_spectral_norm_example_and_oracle(rng):
    assert qmat.spectral_norm(SZ) == pytest.approx(1.0)
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    # independent route: largest eigenvalue of the Hermitian dilation
    dil = np.block([[np.zeros((4, 4)), a], [a.conj().T, np.zeros((4, 4))]])
    assert qmat.spectral_norm(a) == pytest.approx(np.linalg.eigvalsh(dil).max(), rel=1e-12)


def test_spectral_norm_printed_s1_residual():
    teo = np.diag([1.0, -1.0])
    exp = np.array([[0.9603, -0.0501 - 0.0822j], [-0.0501 + 0.0822j, -0.9603]])
    assert qmat.spectral_norm(teo - exp) == pytest.approx(0.104129, abs=1e-5)


def test_predicates():
    assert qmat.is_hermitian(SY)
    assert not qmat.is_hermitian(np.array([[0, 1], [0, 0]]))
    assert qmat.is_unitary(1j * SX)
    assert not qmat.is_unitary(2 * I2)


def test_phase_equivalence():
    assert qmat.phase_equivalent(SX, np.exp(0.7j) * SX)
    assert not qmat.phase_equivalent(SX, SZ)
    assert qmat.phase_fidelity(SX, SZ) == pytest.approx(0.0)


def test_hermitian_basis_is_orthonormal():
    for dim, n in ((2, 3), (4, 15)):
        basis = qmat.hermitian_basis(dim)
        assert len(basis) == n
        gram = np.array([[np.trace(a.conj().T @ b) for b in basis] for a in basis])
        assert np.allclose(gram, np.eye(n))
        assert all(abs(np.trace(b)) < 1e-12 for b in basis)
    assert len(qmat.hermitian_basis(4, traceless=False)) == 16


def test_random_unitary(rng):
    assert qmat.is_unitary(qmat.random_unitary(4, rng))


@pytest.mark.parametrize("case", range(50))
def test_group_law_and_norm_invariance(case):
    rng = np.random.default_rng(case)
    h = qmat.random_hermitian(4, rng)
    s, t = rng.uniform(-1, 1, size=2)
    u = qmat.expm_generator(h, s + t)
    assert np.allclose(u, qmat.expm_generator(h, s) @ qmat.expm_generator(h, t), atol=1e-10)
    assert qmat.is_unitary(u)
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    assert qmat.spectral_norm(u @ a @ u.conj().T) == pytest.approx(qmat.spectral_norm(a), rel=1e-10)
