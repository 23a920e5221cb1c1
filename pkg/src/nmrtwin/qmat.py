"""Dense complex linear algebra on the small (2x2, 4x4) matrices used throughout.

Matrices are plain ``numpy.ndarray`` objects of dtype complex128. Hamiltonians
are stored divided by hbar, in rad/s, so propagators are ``exp(-i t h)``.
"""

import numpy as np

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

# spin-1/2 operators, I = sigma / 2
I_X = SIGMA_X / 2
I_Y = SIGMA_Y / 2
I_Z = SIGMA_Z / 2
I_PLUS = I_X + 1j * I_Y


class ShapeError(ValueError):
    """Operands have incompatible or non-square shapes."""


class ContractError(ValueError):
    """An input violates a documented precondition (e.g. non-Hermitian generator)."""


def as_matrix(a):
    """Return ``a`` as a square complex128 array, raising ShapeError otherwise."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise ShapeError(f"expected a non-empty square matrix, got shape {m.shape}")
    return m


def dagger(a):
    return as_matrix(a).conj().T


def matmul(a, b):
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        raise ShapeError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a @ b


def kron(a, b):
    """Kronecker product with ``a`` as the slow (left) index."""
    return np.kron(as_matrix(a), as_matrix(b))


def trace(a):
    return complex(np.trace(as_matrix(a)))


def _scale(a):
    return max(1.0, float(np.max(np.abs(a))))


def is_hermitian(a, tol=HERMITIAN_TOL):
    """Entrywise Hermiticity check; ``tol`` is relative to the largest entry when that exceeds 1."""
    a = as_matrix(a)
    return bool(np.max(np.abs(a - a.conj().T)) <= tol * _scale(a))


def is_unitary(u, tol=UNITARY_TOL):
    u = as_matrix(u)
    return bool(np.max(np.abs(u @ u.conj().T - np.eye(len(u)))) <= tol)


def expm_generator(h, t):
    """Propagator ``exp(-i t h)`` for a Hermitian generator ``h`` (rad/s) and duration ``t`` (s).

    Computed through the eigendecomposition of ``h``, so the result is unitary
    to round-off regardless of ``t``.
    """
    h = as_matrix(h)
    if not is_hermitian(h):
        raise ContractError("expm_generator requires a Hermitian generator")
    h = (h + h.conj().T) / 2
    evals, evecs = np.linalg.eigh(h)
    phases = np.exp(-1j * float(t) * evals)
    return (evecs * phases) @ evecs.conj().T


def spectral_norm(a):
    """Largest singular value, as the square root of the top eigenvalue of A^dagger A."""
    a = as_matrix(a)
    evals = np.linalg.eigvalsh(a.conj().T @ a)
    return float(np.sqrt(max(evals[-1], 0.0)))


def phase_equivalent(a, b, tol=1e-9):
    """True when unitaries ``a`` and ``b`` agree up to a global phase.

    Uses ``|Tr(a^dagger b)| / dim`` which equals 1 exactly for phase-equivalent unitaries.
    """
    return phase_fidelity(a, b) > 1 - tol


def phase_fidelity(a, b):
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        raise ShapeError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return abs(np.trace(a.conj().T @ b)) / len(a)


def hermitian_basis(dim, traceless=True):
    """Orthonormal (Hilbert-Schmidt) basis of Hermitian ``dim x dim`` matrices.

    The traceless variant has ``dim**2 - 1`` elements: the symmetric and
    antisymmetric off-diagonal units plus ``dim - 1`` generalized diagonal
    Gell-Mann matrices.  Without ``traceless`` the normalized identity is appended.
    """
    basis = []
    for i in range(dim):
        for j in range(i + 1, dim):
            e = np.zeros((dim, dim), dtype=complex)
            e[i, j] = e[j, i] = 1 / np.sqrt(2)
            basis.append(e)
            e = np.zeros((dim, dim), dtype=complex)
            e[i, j] = -1j / np.sqrt(2)
            e[j, i] = 1j / np.sqrt(2)
            basis.append(e)
    for k in range(1, dim):
        d = np.zeros(dim)
        d[:k] = 1
        d[k] = -k
        basis.append(np.diag(d / np.sqrt(k * (k + 1))).astype(complex))
    if not traceless:
        basis.append(np.eye(dim, dtype=complex) / np.sqrt(dim))
    return basis


def random_hermitian(dim, rng, traceless=False):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = (a + a.conj().T) / 2
    if traceless:
        h -= np.trace(h) / dim * np.eye(dim)
    return h


def random_unitary(dim, rng):
    """Haar-random unitary via QR of a complex Gaussian matrix."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
