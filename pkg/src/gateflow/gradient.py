"""Objective and flow right-hand sides for the control gradient flow.

The flow moves the piecewise-constant amplitudes along the descent
direction of J = 1/2 - Re Tr(target^dagger U(T,0)) / (2N). The exact
descent direction involves the average of U^dagger(tau) H_k U(tau) over
each slice; the series variants replace that average with its commutator
expansion truncated at a chosen order, which is cheaper per evaluation
but only accurate to O((dt ||H||)^(m+1)).
"""

import math
from dataclasses import dataclass

import numpy as np

from .linalg import dagger
from .system import (UNITARY_TOL, propagate, slice_hamiltonian, slice_hamiltonians,
                     unitarity_defect)

# Truncation orders past this are a sign of misuse: the factorial
# denominators push the extra terms below rounding while the nested
# commutators keep costing matrix products.
MAX_SERIES_ORDER = 8

# Marker for the exact slice-average mode of the right-hand side.
EXACT = "exact"


def normalize_order(order):
    """Validate a correction order: an integer in 0..MAX_SERIES_ORDER or 'exact'."""
    if order == EXACT:
        return EXACT
    if isinstance(order, (int, np.integer)) and not isinstance(order, bool):
        if 0 <= order <= MAX_SERIES_ORDER:
            return int(order)
        raise ValueError(f"correction order must be in 0..{MAX_SERIES_ORDER}, got {order}")
    raise ValueError(f"correction order must be an integer or '{EXACT}', got {order!r}")


@dataclass
class FlowRhs:
    """Flow velocities deps/ds, one row per control, plus the number of
    propagation passes spent computing them."""

    values: np.ndarray  # shape (n, L)
    evaluations: int = 1


@dataclass
class RhsEvaluation:
    """Everything one propagation pass yields: velocities, the objective,
    and the optional diagnostics the integrator can ask for."""

    rhs: FlowRhs
    objective: float
    unitarity_defect: float | None = None
    exact_rhs: np.ndarray | None = None


def objective(u_final, target):
    """J = 1/2 - Re Tr(target^dagger u_final) / (2N).

    Zero when the evolution hits the target exactly, one when it lands on
    the negated target; in [0, 1] for unitary input.
    """
    if target.matrix.shape != u_final.shape:
        raise ValueError(f"shape mismatch: {target.matrix.shape} vs {u_final.shape}")
    n = u_final.shape[0]
    return 0.5 - np.vdot(target.matrix, u_final).real / (2 * n)


def phi1(z):
    """(e^z - 1) / z with the removable singularity filled in.

    Below |z| = 1e-4 the closed form loses digits to cancellation, so a
    short Taylor series takes over there.
    """
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-4
    safe = np.where(small, 1.0, z)
    closed = (np.exp(safe) - 1.0) / safe
    series = 1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0
    return np.where(small, series, closed)


def control_average_series(h_slice, h_control, dt, order):
    """Commutator-series approximation of the slice average of
    U^dagger(tau) H_k U(tau): sum_{j=0}^{order} dt^j/(j+1)! ad_{iH}^j(H_k)."""
    order = normalize_order(order)
    if order == EXACT:
        return control_average_exact(h_slice, h_control, dt)
    ih = 1j * np.asarray(h_slice)
    cur = np.asarray(h_control, dtype=complex)
    acc = cur
    for j in range(1, order + 1):
        cur = ih @ cur - cur @ ih
        acc = acc + (dt**j / math.factorial(j + 1)) * cur
    return acc


def control_average_exact(h_slice, h_control, dt):
    """Exact slice average (1/dt) integral of U^dagger(tau) H_k U(tau).

    In the eigenbasis of the slice Hamiltonian the integrand is diagonal in
    phase: entry (a, b) picks up phi1(i (lam_a - lam_b) dt).
    """
    lam, v = np.linalg.eigh(np.asarray(h_slice))
    b = v.conj().T @ np.asarray(h_control) @ v
    gaps = lam[:, None] - lam[None, :]
    return v @ (b * phi1(1j * gaps * dt)) @ v.conj().T


def interval_average_exact(sys, grid, l, k):
    """Exact average of U^dagger(tau) H_k U(tau) over slice l (1-based);
    k is the 0-based control index."""
    if not 0 <= k < sys.n_controls:
        raise IndexError(f"control index {k} out of range 0..{sys.n_controls - 1}")
    return control_average_exact(slice_hamiltonian(sys, grid, l), sys.controls[k], grid.dt)


def _series_averages(hams, controls, dt, order):
    """Series slice averages for every (control, slice) pair, batched."""
    n = controls.shape[0]
    out = np.empty((n,) + hams.shape, dtype=complex)
    ih = 1j * hams
    for k in range(n):
        cur = controls[k]
        acc = np.broadcast_to(cur, hams.shape)
        for j in range(1, order + 1):
            cur = ih @ cur - cur @ ih
            acc = acc + (dt**j / math.factorial(j + 1)) * cur
        out[k] = acc
    return out


def _exact_averages(lam, vecs, controls, dt):
    """Exact slice averages for every (control, slice) pair, batched over
    the already-computed slice eigensystems."""
    vh = vecs.conj().transpose(0, 2, 1)
    gaps = lam[:, :, None] - lam[:, None, :]
    phases = phi1(1j * gaps * dt)
    out = np.empty((controls.shape[0],) + vecs.shape, dtype=complex)
    for k in range(controls.shape[0]):
        b = vh @ controls[k] @ vecs
        out[k] = vecs @ (b * phases) @ vh
    return out


def flow_evaluation(sys, grid, target, order=1, *, check_unitarity=False,
                    exact_reference=False):
    """One propagation pass: flow velocities and the objective value.

    Entry (k, l) of the velocities is Im Tr[W_l M_k^l] / (2N) with
    W_l = P_{l-1} (target^dagger P_L) P_{l-1}^dagger and M_k^l the slice
    average of control k (series-truncated or exact, per order). With
    check_unitarity the prefixes are verified against UNITARY_TOL and the
    measured defect is reported; with exact_reference the exact-average
    velocities come along for descent diagnostics, reusing the same
    eigensystems.
    """
    order = normalize_order(order)
    cache = propagate(sys, grid)
    defect = None
    if check_unitarity:
        defect = unitarity_defect(cache)
        if defect > UNITARY_TOL:
            raise RuntimeError(
                f"propagator prefixes drifted off the unitary group: "
                f"max|P^dagger P - I| = {defect:.3e}"
            )
    n_slices, dim = grid.n_slices, sys.dim
    a = dagger(target.matrix) @ cache.total
    j_value = 0.5 - np.trace(a).real / (2 * dim)
    p = cache.prefixes[:n_slices]
    w = p @ a @ p.conj().transpose(0, 2, 1)

    def trace_values(avgs):
        return np.einsum("lij,klji->kl", w, avgs).imag / (2 * dim)

    if order == EXACT:
        values = trace_values(_exact_averages(cache.eigvals, cache.eigvecs,
                                              sys.controls, grid.dt))
        exact_values = values if exact_reference else None
    else:
        hams = slice_hamiltonians(sys, grid)
        values = trace_values(_series_averages(hams, sys.controls, grid.dt, order))
        exact_values = None
        if exact_reference:
            exact_values = trace_values(_exact_averages(cache.eigvals, cache.eigvecs,
                                                        sys.controls, grid.dt))
    return RhsEvaluation(rhs=FlowRhs(values=values, evaluations=1),
                         objective=j_value,
                         unitarity_defect=defect,
                         exact_rhs=exact_values)


def rhs_corrected(sys, grid, target, order=1):
    """Flow velocities with the commutator-series correction at the given
    order (or the exact slice average for order='exact')."""
    return flow_evaluation(sys, grid, target, order).rhs


def rhs_original(sys, grid, target):
    """Uncorrected flow velocities; identical to rhs_corrected at order 0."""
    return rhs_corrected(sys, grid, target, order=0)


def descent_rate(grid, exact_rhs, followed_rhs):
    """Estimated dJ/ds: the objective gradient (-dt times the exact
    velocities) contracted with the velocities actually followed.
    Negative as long as the truncated direction still descends."""
    return float(-grid.dt * np.sum(exact_rhs * followed_rhs))


def finite_difference_gradient(sys, grid, target, delta):
    """Central-difference dJ/deps, one propagation per perturbation.

    Matches -dt times the exact-order velocities; series velocities differ
    from that by their O(dt^(m+1)) truncation error.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    amps = grid.amplitudes
    out = np.empty_like(amps)
    for k in range(amps.shape[0]):
        for l in range(amps.shape[1]):
            plus = amps.copy()
            plus[k, l] += delta
            minus = amps.copy()
            minus[k, l] -= delta
            j_plus = objective(propagate(sys, grid.with_amplitudes(plus)).total, target)
            j_minus = objective(propagate(sys, grid.with_amplitudes(minus)).total, target)
            out[k, l] = (j_plus - j_minus) / (2 * delta)
    return out
