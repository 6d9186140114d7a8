"""Adaptive Dormand-Prince integration of the control flow in the
artificial flow variable s."""

from dataclasses import dataclass

import numpy as np

from .gradient import descent_rate, flow_evaluation, normalize_order
from .system import ControlGrid

# Dormand-Prince 5(4) tableau: stage nodes C, stage matrix A, propagation
# weights B (fifth order) and embedded error weights E = B - B_hat. The
# seventh stage sits at the fifth-order solution, so its evaluation is the
# first stage of the next step (FSAL). The flow is autonomous, so the
# nodes are listed only to complete the tableau.
DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
DP_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
DP_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])

SAFETY = 0.9
MIN_SHRINK = 0.2
MAX_GROW = 5.0

STOP_J_REACHED = "j_reached"
STOP_HORIZON = "horizon"
STOP_UNDERFLOW = "step_underflow"
STOP_BUDGET = "eval_budget"


class NonFiniteRhsError(ValueError):
    """The right-hand side produced a non-finite entry."""

    def __init__(self, flat_index, message):
        super().__init__(message)
        self.flat_index = flat_index


@dataclass
class FlowConfig:
    """Integration limits and tolerances for one flow run."""

    s_max: float
    abs_tol: float = 1e-4
    rel_tol: float = 1e-4
    j_stop: float = 1e-7
    h_init: float = 1.0
    h_min: float = 1e-12
    max_rhs_evals: int = 1_000_000
    check_unitarity: bool = False
    track_descent: bool = False

    def __post_init__(self):
        for name in ("abs_tol", "rel_tol", "j_stop"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.h_min < self.h_init < self.s_max:
            raise ValueError("step bounds must satisfy 0 < h_min < h_init < s_max")
        if self.max_rhs_evals < 1:
            raise ValueError("max_rhs_evals must be a positive integer")


@dataclass
class FlowResult:
    """Outcome of one flow run.

    j_trace rows are (s, J) at s = 0 and at every accepted step; s_stop is
    where integration ended; descent_trace rows are (s, estimated dJ/ds)
    when descent tracking was on.
    """

    final_grid: ControlGrid
    j_trace: np.ndarray
    stop_reason: str
    s_stop: float
    rhs_evals: int
    accepted_steps: int
    rejected_steps: int
    max_unitarity_defect: float | None = None
    descent_trace: np.ndarray | None = None


def _stages(f, y, h, k1):
    """One embedded step: returns (y5, error vector, last stage).

    The last stage is f at y5 and doubles as k1 of the next step.
    """
    k = np.empty((7,) + y.shape)
    k[0] = k1
    for i in range(1, 6):
        k[i] = f(y + h * np.tensordot(DP_A[i], k[:i], axes=1))
    y5 = y + h * np.tensordot(DP_A[6], k[:6], axes=1)
    k[6] = f(y5)
    err = h * np.tensordot(DP_E, k, axes=1)
    return y5, err, k[6]


def dormand_prince_step(f, y, h, k1=None):
    """Single step of the embedded pair for a plain f(y) -> dy/ds.

    Returns (y_new, error_vector, f_at_y_new); pass f_at_y_new back as k1
    to chain steps without re-evaluating.
    """
    y = np.asarray(y, dtype=float)
    if k1 is None:
        k1 = f(y)
    return _stages(f, y, h, np.asarray(k1, dtype=float))


def integrate_adaptive(f, y0, cfg):
    """Drive dy/ds = f(y) from s = 0 until a stop condition fires.

    f returns (dy, aux) where aux is a tuple whose first entry is the
    objective value used by the stop rule; aux of each accepted point is
    kept. Stop conditions are checked in priority order: objective at or
    below j_stop, horizon reached, step size underflow, evaluation budget
    exhausted.

    Returns (y, accepted, stop_reason, s_stop, evals, n_accepted, n_rejected)
    where accepted is a list of (s, aux) starting with the initial point.
    """
    y = np.array(y0, dtype=float)
    evals = 0
    aux_box = [None]

    def fr(state):
        nonlocal evals
        dy, aux = f(state)
        dy = np.asarray(dy, dtype=float)
        bad = ~np.isfinite(dy)
        if bad.any():
            idx = int(np.flatnonzero(bad)[0])
            raise NonFiniteRhsError(idx, f"right-hand side not finite at flat index {idx}")
        evals += 1
        aux_box[0] = aux
        return dy

    k1 = fr(y)
    accepted = [(0.0, aux_box[0])]
    s = 0.0
    n_acc = n_rej = 0
    if accepted[0][1][0] <= cfg.j_stop:
        return y, accepted, STOP_J_REACHED, s, evals, n_acc, n_rej

    h = cfg.h_init
    while True:
        remaining = cfg.s_max - s
        if remaining <= cfg.h_min:
            return y, accepted, STOP_HORIZON, min(s, cfg.s_max), evals, n_acc, n_rej
        h = min(h, remaining)
        y_new, err, k_last = _stages(fr, y, h, k1)
        scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = float(np.abs(err / scale).max()) if y.size else 0.0
        if err_norm <= 1.0:
            s += h
            y = y_new
            k1 = k_last
            n_acc += 1
            aux = aux_box[0]
            accepted.append((s, aux))
            if aux[0] <= cfg.j_stop:
                return y, accepted, STOP_J_REACHED, s, evals, n_acc, n_rej
            if s >= cfg.s_max:
                return y, accepted, STOP_HORIZON, min(s, cfg.s_max), evals, n_acc, n_rej
            if evals >= cfg.max_rhs_evals:
                return y, accepted, STOP_BUDGET, s, evals, n_acc, n_rej
        else:
            n_rej += 1
            if evals >= cfg.max_rhs_evals:
                return y, accepted, STOP_BUDGET, s, evals, n_acc, n_rej
        factor = SAFETY * err_norm ** -0.2 if err_norm > 0 else MAX_GROW
        h *= min(MAX_GROW, max(MIN_SHRINK, factor))
        if h < cfg.h_min:
            return y, accepted, STOP_UNDERFLOW, s, evals, n_acc, n_rej


def integrate_flow(sys, grid0, target, order, cfg):
    """Flow the control grid along the chosen velocity field until the
    objective target, the horizon, or a step/budget limit is hit."""
    order = normalize_order(order)
    shape = grid0.amplitudes.shape
    n_slices = grid0.n_slices
    defect_box = [0.0]

    def f(y):
        grid = grid0.with_amplitudes(y.reshape(shape))
        ev = flow_evaluation(sys, grid, target, order,
                             check_unitarity=cfg.check_unitarity,
                             exact_reference=cfg.track_descent)
        if cfg.check_unitarity:
            defect_box[0] = max(defect_box[0], ev.unitarity_defect)
        rate = None
        if cfg.track_descent:
            rate = descent_rate(grid, ev.exact_rhs, ev.rhs.values)
        return ev.rhs.values.ravel(), (ev.objective, rate)

    try:
        y, accepted, reason, s_stop, evals, n_acc, n_rej = integrate_adaptive(
            f, grid0.amplitudes.ravel(), cfg)
    except NonFiniteRhsError as exc:
        control = exc.flat_index // n_slices
        sl = exc.flat_index % n_slices + 1
        raise ValueError(
            f"flow right-hand side not finite at control {control}, slice {sl}"
        ) from exc

    j_trace = np.array([(s, aux[0]) for s, aux in accepted])
    descent = None
    if cfg.track_descent:
        descent = np.array([(s, aux[1]) for s, aux in accepted])
    return FlowResult(
        final_grid=grid0.with_amplitudes(y.reshape(shape)),
        j_trace=j_trace,
        stop_reason=reason,
        s_stop=s_stop,
        rhs_evals=evals,
        accepted_steps=n_acc,
        rejected_steps=n_rej,
        max_unitarity_defect=defect_box[0] if cfg.check_unitarity else None,
        descent_trace=descent,
    )


def error_tolerance_check(result, cfg):
    """True iff the run hit the objective target and the trace respects the
    run invariants: s strictly increasing and J never rising by more than
    10 * abs_tol between accepted steps."""
    trace = np.asarray(result.j_trace)
    if trace[-1, 1] > cfg.j_stop:
        return False
    if len(trace) > 1:
        if not (np.diff(trace[:, 0]) > 0).all():
            return False
        if not (np.diff(trace[:, 1]) <= 10 * cfg.abs_tol).all():
            return False
    return True
