"""Dense complex matrix kernels: Kronecker products, commutators,
Hermitian-generated exponentials and trace inner products.

Everything here is a pure function of numpy arrays. Matrices are dense
complex128 and stay small (N <= 64), so there is no sparse or structured
path anywhere.
"""

import numpy as np

# Relative tolerance of the Hermiticity guard, scaled by the largest entry
# magnitude of the matrix under test. A violation means a construction bug
# upstream, so it is an error rather than a silent symmetrization.
HERMITIAN_RTOL = 1e-10


def dagger(a):
    """Conjugate transpose."""
    return np.asarray(a).conj().T


def is_hermitian(a, tol):
    """True iff max|A - A^dagger| <= tol elementwise."""
    a = np.asarray(a)
    return bool(np.abs(a - a.conj().T).max() <= tol)


def is_unitary(a, tol):
    """True iff max|A^dagger A - I| <= tol elementwise."""
    a = np.asarray(a)
    gram = a.conj().T @ a
    return bool(np.abs(gram - np.eye(a.shape[0])).max() <= tol)


def require_hermitian(a, name="matrix"):
    """Raise ValueError unless a is Hermitian to HERMITIAN_RTOL (relative)."""
    a = np.asarray(a)
    scale = np.abs(a).max()
    bound = HERMITIAN_RTOL * (scale if scale > 0 else 1.0)
    dev = np.abs(a - a.conj().T).max()
    if dev > bound:
        raise ValueError(
            f"{name} is not Hermitian: max|A - A^dagger| = {dev:.3e} exceeds {bound:.3e}"
        )


def kron(a, b):
    """Kronecker product with block layout (a kron b)[i*db+p, j*db+q] = a[i,j] b[p,q]."""
    return np.kron(a, b)


def commutator(a, b):
    """ab - ba."""
    return a @ b - b @ a


def nested_commutator(x, b, j):
    """Apply ad_x = [x, .] j times to b; j = 0 returns a copy of b."""
    if j < 0:
        raise ValueError("j must be nonnegative")
    out = np.array(b, dtype=complex)
    for _ in range(j):
        out = x @ out - out @ x
    return out


def expm_hermitian_generator(h, theta):
    """exp(-i * theta * h) for Hermitian h, via eigendecomposition.

    The eigendecomposition route keeps the result unitary to rounding,
    which is what keeps long products of step propagators on the unitary
    group. Non-Hermitian input is rejected.
    """
    h = np.asarray(h, dtype=complex)
    require_hermitian(h, "generator")
    lam, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * theta * lam)) @ v.conj().T


def overlap_trace(a, b):
    """Tr(a^dagger b) as a complex number."""
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))
