"""Controlled quantum system, piecewise-constant control grids and the
propagation of the evolution operator across time slices."""

from dataclasses import dataclass

import numpy as np

from .linalg import dagger, expm_hermitian_generator, is_unitary, require_hermitian

# Tolerance for unitarity of propagator prefixes. Rounding in the
# eigendecomposition-based exponentials stays orders of magnitude below
# this even after a thousand slice products.
UNITARY_TOL = 1e-10


def _readonly(a):
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class QuantumSystem:
    """Drift Hamiltonian plus n control Hamiltonians, all N x N Hermitian."""

    h0: np.ndarray
    controls: np.ndarray  # shape (n, N, N)

    def __post_init__(self):
        h0 = np.array(self.h0, dtype=complex)
        controls = np.array(self.controls, dtype=complex)
        if h0.ndim != 2 or h0.shape[0] != h0.shape[1]:
            raise ValueError("h0 must be a square matrix")
        if controls.ndim != 3 or controls.shape[1:] != h0.shape:
            raise ValueError("controls must have shape (n, N, N) matching h0")
        if controls.shape[0] < 1:
            raise ValueError("at least one control Hamiltonian is required")
        require_hermitian(h0, "h0")
        for k, hk in enumerate(controls):
            require_hermitian(hk, f"controls[{k}]")
        object.__setattr__(self, "h0", _readonly(h0))
        object.__setattr__(self, "controls", _readonly(controls))

    @property
    def dim(self):
        return self.h0.shape[0]

    @property
    def n_controls(self):
        return self.controls.shape[0]


@dataclass(frozen=True, eq=False)
class ControlGrid:
    """Piecewise-constant control amplitudes on L equal slices of [0, T].

    Row k of amplitudes holds the values of control k on slices 1..L.
    """

    t_final: float
    amplitudes: np.ndarray  # shape (n, L)

    def __post_init__(self):
        if not self.t_final > 0:
            raise ValueError("T must be positive")
        amps = np.array(self.amplitudes, dtype=float)
        if amps.ndim != 2 or amps.shape[0] < 1 or amps.shape[1] < 1:
            raise ValueError("amplitudes must have shape (n, L) with n, L >= 1")
        if not np.isfinite(amps).all():
            raise ValueError("amplitudes must be finite")
        object.__setattr__(self, "amplitudes", _readonly(amps))

    @property
    def n_controls(self):
        return self.amplitudes.shape[0]

    @property
    def n_slices(self):
        return self.amplitudes.shape[1]

    @property
    def dt(self):
        return self.t_final / self.n_slices

    def with_amplitudes(self, amplitudes):
        """Same time span, new amplitude values."""
        return ControlGrid(self.t_final, amplitudes)


@dataclass(frozen=True, eq=False)
class GateTarget:
    """A unitary gate to synthesize, with a short label for reporting."""

    matrix: np.ndarray
    label: str

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("target must be a square matrix")
        if not is_unitary(m, UNITARY_TOL):
            raise ValueError(f"target '{self.label}' is not unitary to {UNITARY_TOL:g}")
        object.__setattr__(self, "matrix", _readonly(m))

    @property
    def dim(self):
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class PropagationCache:
    """Prefix propagators P_l = U(t_l, 0) together with the slice
    eigensystems that produced them (reused by the gradient engine)."""

    prefixes: np.ndarray  # (L+1, N, N), prefixes[0] = I
    eigvals: np.ndarray   # (L, N), eigenvalues of each slice Hamiltonian
    eigvecs: np.ndarray   # (L, N, N)

    @property
    def total(self):
        """U(T, 0)."""
        return self.prefixes[-1]

    @property
    def n_slices(self):
        return self.prefixes.shape[0] - 1


def _check_slice(n_slices, l):
    if not 1 <= l <= n_slices:
        raise IndexError(f"slice index {l} out of range 1..{n_slices}")


def slice_hamiltonians(sys, grid):
    """All L slice Hamiltonians at once, shape (L, N, N)."""
    return sys.h0[None, :, :] + np.einsum("kl,kab->lab", grid.amplitudes, sys.controls)


def slice_hamiltonian(sys, grid, l):
    """Hamiltonian on slice l (1-based): h0 + sum_k eps[k][l] H_k."""
    _check_slice(grid.n_slices, l)
    return sys.h0 + np.tensordot(grid.amplitudes[:, l - 1], sys.controls, axes=1)


def step_propagator(sys, grid, l):
    """exp(-i * dt * H_l) for slice l (1-based)."""
    return expm_hermitian_generator(slice_hamiltonian(sys, grid, l), grid.dt)


def propagate(sys, grid, check_unitarity=False):
    """All prefix propagators P_0..P_L, with later slices applied on the left.

    One batched eigendecomposition covers every slice; the eigensystems are
    kept in the cache because the gradient engine reuses them for the exact
    slice averages.
    """
    hams = slice_hamiltonians(sys, grid)
    lam, vecs = np.linalg.eigh(hams)
    vh = vecs.conj().transpose(0, 2, 1)
    steps = (vecs * np.exp(-1j * grid.dt * lam)[:, None, :]) @ vh
    n_slices, dim = grid.n_slices, sys.dim
    prefixes = np.empty((n_slices + 1, dim, dim), dtype=complex)
    prefixes[0] = np.eye(dim)
    for l in range(n_slices):
        prefixes[l + 1] = steps[l] @ prefixes[l]
    cache = PropagationCache(prefixes=prefixes, eigvals=lam, eigvecs=vecs)
    if check_unitarity:
        defect = unitarity_defect(cache)
        if defect > UNITARY_TOL:
            raise RuntimeError(
                f"propagator prefixes drifted off the unitary group: "
                f"max|P^dagger P - I| = {defect:.3e}"
            )
    return cache


def unitarity_defect(cache):
    """max over all prefixes of max|P^dagger P - I|."""
    p = cache.prefixes
    gram = p.conj().transpose(0, 2, 1) @ p
    return float(np.abs(gram - np.eye(p.shape[-1])).max())


def backward_propagator(cache, l):
    """U(T, t_{l-1}) = P_L P_{l-1}^dagger, valid because prefixes are unitary."""
    _check_slice(cache.n_slices, l)
    return cache.total @ dagger(cache.prefixes[l - 1])
