"""Reference generation and linear MPC for waypoint-path tracking.

Each control step relinearizes the vessel model around the current state
and previous input, builds the position-tracking cost over the horizon

    sum_{t=0}^{T-1} || p_{t+1} - p^d_{t+1} ||^2

subject to the affine dynamics and input box bounds, condenses the states
out, and solves the resulting box-constrained QP with an internal projected
Newton method. Speed is not bounded in the QP; the plant clamp and the
v_des-paced reference keep it in range.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .dynamics import (ControlInput, LinearDiscreteModel, VesselParams,
                       VesselState, linearize_discretize)
from .waypoints import WaypointPlan

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 2000


@dataclass
class ReferenceTrajectory:
    """Desired positions p^d_0 .. p^d_N along the waypoint path."""

    positions: np.ndarray     # (N+1, 2)
    dt: float


def get_reference(plan: WaypointPlan, state: VesselState,
                  params: VesselParams) -> ReferenceTrajectory:
    """Sample the waypoint polyline at v_des spacing ahead of the vessel.

    The current position is projected onto the segment from the last
    reached waypoint to the next active one (clamped to the segment); the
    reference then walks the remaining polyline in steps of v_des * dt and
    holds the final point once the path is exhausted.
    """
    if not plan.active:
        raise ValueError("get_reference needs a non-empty active plan")
    points = [np.asarray(plan.last_reached, dtype=float)]
    points.extend(wp.position for wp in plan.active)

    a = points[0]
    b = points[1]
    seg = b - a
    seg_len2 = float(seg @ seg)
    if seg_len2 == 0.0:
        proj = a.copy()
    else:
        t = float((state.position - a) @ seg) / seg_len2
        proj = a + min(max(t, 0.0), 1.0) * seg

    # remaining polyline, dropping zero-length pieces
    poly = [proj]
    for p in points[1:]:
        if float(np.hypot(*(p - poly[-1]))) > 0.0:
            poly.append(p)
    poly = np.asarray(poly)

    n = params.horizon
    if len(poly) == 1:
        positions = np.repeat(poly, n + 1, axis=0)
        return ReferenceTrajectory(positions=positions, dt=params.dt)

    seg_lens = np.linalg.norm(np.diff(poly, axis=0), axis=1)
    cum = np.concatenate(([0.0], np.cumsum(seg_lens)))
    arcs = params.v_des * params.dt * np.arange(n + 1)
    xs = np.interp(arcs, cum, poly[:, 0])
    ys = np.interp(arcs, cum, poly[:, 1])
    return ReferenceTrajectory(positions=np.column_stack([xs, ys]),
                               dt=params.dt)


@dataclass
class QPProblem:
    """Condensed box QP: min 0.5 u'Hu + q'u + const, lb <= u <= ub."""

    H: np.ndarray
    q: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    const: float = 0.0


@dataclass
class QPSolution:
    inputs: np.ndarray           # (N, 2) rows [a, omega]
    objective: float
    status: str                  # "optimal" or "max_iter"
    iterations: int
    pg_norm: float
    objective_history: list[float]


def build_qp(state: VesselState, ref: ReferenceTrajectory,
             model: LinearDiscreteModel, params: VesselParams) -> QPProblem:
    """Condense the affine dynamics into an input-only tracking QP.

    With s_{t+1} = A s_t + B u_{t+1} + c, stacked positions are
    P s = G u + f, so the cost sum ||P s_t - ref_t||^2 becomes
    u' (2 G'G) u / 2 + (2 G'r)' u + r'r with r = f - ref. A small input
    cost rho_u ||u||^2 is added on top; without it the tracking objective
    is minimized by weaving across the leg in sync with the sample grid,
    and the heading never settles (see VesselParams.rho_u).
    """
    n = params.horizon
    A, B, c = model.A, model.B, model.c
    s0 = state.as_array()

    # input-to-position blocks C_k = P A^k B and free response positions
    blocks = np.empty((n, 2, 2))
    m = B.copy()
    free = np.empty((n, 2))
    s_free = s0.copy()
    for k in range(n):
        blocks[k] = m[:2]
        m = A @ m
        s_free = A @ s_free + c
        free[k] = s_free[:2]

    G = np.zeros((n, 2, n, 2))
    rows = np.arange(n)
    for lag in range(n):
        G[rows[lag:], :, rows[: n - lag], :] = blocks[lag]
    G = G.reshape(2 * n, 2 * n)

    r = (free - ref.positions[1:]).reshape(-1)
    H = 2.0 * (G.T @ G)
    H = 0.5 * (H + H.T)
    if params.rho_u > 0.0:
        H[np.diag_indices_from(H)] += 2.0 * params.rho_u
    q = 2.0 * (G.T @ r)
    const = float(r @ r)

    lb = np.tile([-params.a_max, -params.omega_max], n)
    ub = np.tile([params.a_max, params.omega_max], n)
    return QPProblem(H=H, q=q, lb=lb, ub=ub, const=const)


def _objective(qp: QPProblem, u: np.ndarray, hu: np.ndarray) -> float:
    return 0.5 * float(u @ hu) + float(qp.q @ u) + qp.const


def _search_projected(H, u, d, g, lb, ub):
    """Minimize the quadratic along the projected path clip(u + alpha d).

    Walks the path's breakpoints in order, snapping each variable exactly
    onto its bound as it clamps, and stops at the first segment whose 1-D
    minimizer lies inside it. Returns the path point (always a descent
    point when g'd < 0 at the start).
    """
    x = u.copy()
    dcur = d.copy()
    gcur = g.copy()
    hd = H @ dcur
    n = len(u)
    with np.errstate(divide="ignore", invalid="ignore"):
        br = np.where(dcur > 0.0, (ub - u) / dcur,
                      np.where(dcur < 0.0, (lb - u) / dcur, math.inf))
    order = np.argsort(br)
    ptr = 0
    alpha = 0.0
    for _ in range(n + 1):
        gd = float(gcur @ dcur)
        if gd >= 0.0:
            break
        dhd = float(dcur @ hd)
        while ptr < n and (br[order[ptr]] <= alpha or dcur[order[ptr]] == 0.0):
            ptr += 1
        seg_end = br[order[ptr]] if ptr < n else math.inf
        alpha_loc = alpha - gd / dhd if dhd > 0.0 else math.inf
        if alpha_loc <= seg_end:
            if not math.isfinite(alpha_loc):
                break
            x = x + (alpha_loc - alpha) * dcur
            return np.clip(x, lb, ub)
        if not math.isfinite(seg_end):
            break
        step = seg_end - alpha
        x = x + step * dcur
        gcur = gcur + step * hd
        alpha = seg_end
        while ptr < n and br[order[ptr]] <= alpha:
            i = order[ptr]
            ptr += 1
            if dcur[i] != 0.0:
                x[i] = ub[i] if dcur[i] > 0.0 else lb[i]
                hd = hd - dcur[i] * H[:, i]
                dcur[i] = 0.0
        if not dcur.any():
            break
    return np.clip(x, lb, ub)


def _face_newton(qp: QPProblem, u, hu, obj, history, tol, budget):
    """Newton iterations restricted to the face of plausibly-active bounds.

    A bound counts as pinned only while the gradient points out of the box,
    so released variables rejoin the free set on the next pass. Steps are
    line-searched along the projected path and accepted on descent; ties
    within float resolution of the objective still move the iterate (the
    true decrease of a terminal refinement step drowns in rounding when
    the objective is ~1e6). Returns (u, hu, obj, iters, pg_norm, optimal).
    """
    H, q, lb, ub = qp.H, qp.q, qp.lb, qp.ub
    n = len(q)
    ridge = 1e-9 * max(float(np.max(np.diag(H))), 1.0)
    bound_eps = 1e-9 * (ub - lb)
    tie_slack = lambda o: 1e-12 * abs(o) + 1e-9
    pg_norm = math.inf
    iterations = 0
    for iterations in range(1, budget + 1):
        g = hu + q
        pg = u - np.clip(u - g, lb, ub)
        pg_norm = float(np.max(np.abs(pg))) if n else 0.0
        if pg_norm <= tol:
            return u, hu, obj, iterations, pg_norm, True
        at_lb = (u - lb) <= bound_eps
        at_ub = (ub - u) <= bound_eps
        pinned = (at_lb & (g > 0.0)) | (at_ub & (g < 0.0))
        free = ~pinned
        if not free.any():
            break
        d = np.zeros(n)
        h_ff = H[np.ix_(free, free)]   # advanced indexing copies
        h_ff[np.diag_indices_from(h_ff)] += ridge
        try:
            cf = cho_factor(h_ff, lower=True, check_finite=False)
            d[free] = cho_solve(cf, -g[free], check_finite=False)
        except np.linalg.LinAlgError:
            d[free] = -g[free]
        if not d.any():
            break
        u_try = _search_projected(H, u, d, g, lb, ub)
        hu_try = H @ u_try
        obj_try = _objective(qp, u_try, hu_try)
        if obj_try > obj + tie_slack(obj):
            # Newton step rejected (wrong face or rounding); retry along
            # the steepest-descent path before giving up
            u_try = _search_projected(H, u, -g, g, lb, ub)
            hu_try = H @ u_try
            obj_try = _objective(qp, u_try, hu_try)
        if obj_try < obj:
            u, hu, obj = u_try, hu_try, obj_try
            if obj < history[-1]:
                history.append(obj)
        elif obj_try <= obj + tie_slack(obj):
            u, hu = u_try, hu_try
            obj = min(obj, obj_try)
        else:
            break
    g = hu + q
    pg = u - np.clip(u - g, lb, ub)
    pg_norm = float(np.max(np.abs(pg))) if n else 0.0
    return u, hu, obj, iterations, pg_norm, pg_norm <= tol


def _max_step(v: np.ndarray, dv: np.ndarray) -> float:
    """Largest step in (0, 1] keeping v + step*dv nonnegative."""
    neg = dv < 0.0
    if not neg.any():
        return 1.0
    return min(1.0, float(np.min(-v[neg] / dv[neg])))


def _solve_ip(qp: QPProblem, tol, budget, history,
              step_frac: float = 0.995, sigma_min: float = 1e-8):
    """Mehrotra predictor-corrector interior point for the box QP.

    Insensitive to the Hessian's conditioning (the condensed tracking
    Hessian runs around 1e10), unlike active-set identification. Always
    starts from the box midpoint: seeding it from a stalled active-set
    iterate skews the initial complementarity enough to trip the mu floor
    early. Iterates are recorded into `history` through an incumbent
    filter: only strictly improving objectives are appended, keeping the
    reported history non-increasing even though barrier iterates
    themselves need not be. step_frac/sigma_min trade speed against
    robustness: shorter steps with heavier centering avoid the rare pinch
    where complementarity collapses before primal optimality. Returns
    (u, hu, obj, iterations).
    """
    H, q, lb, ub = qp.H, qp.q, qp.lb, qp.ub
    n = len(q)
    width = ub - lb
    u = 0.5 * (lb + ub)
    hu = H @ u
    g = hu + q
    zl = np.abs(g) + 1.0
    zu = zl.copy()
    obj = _objective(qp, u, hu)
    mu0 = None
    iterations = 0
    for iterations in range(1, budget + 1):
        sl = u - lb
        su = ub - u
        mu = (float(sl @ zl) + float(su @ zu)) / (2 * n)
        if mu0 is None:
            mu0 = max(mu, 1.0)
        pg = u - np.clip(u - g, lb, ub)
        if float(np.max(np.abs(pg))) <= 0.5 * tol or mu <= 1e-13 * mu0:
            break
        dl = zl / sl
        du = zu / su
        m = H + np.diag(dl + du)
        try:
            cf = cho_factor(m, lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            m[np.diag_indices_from(m)] += 1e-8 * float(np.max(np.diag(m)))
            cf = cho_factor(m, lower=True, check_finite=False)
        solve = lambda rhs: cho_solve(cf, rhs, check_finite=False)
        rd = g - zl + zu
        # affine predictor (mu = 0 target)
        da_u = solve(-rd - zl + zu)
        da_zl = -zl - dl * da_u
        da_zu = -zu + du * da_u
        ap = _max_step(np.concatenate([sl, su]), np.concatenate([da_u, -da_u]))
        ad = _max_step(np.concatenate([zl, zu]), np.concatenate([da_zl, da_zu]))
        mu_aff = (float((sl + ap * da_u) @ (zl + ad * da_zl))
                  + float((su - ap * da_u) @ (zu + ad * da_zu))) / (2 * n)
        sigma = min(1.0, max((mu_aff / mu) ** 3, sigma_min))
        # corrector with Mehrotra second-order term
        rl = sl * zl + da_u * da_zl - sigma * mu
        ru = su * zu - da_u * da_zu - sigma * mu
        d_u = solve(-rd - rl / sl + ru / su)
        d_zl = (-rl - zl * d_u) / sl
        d_zu = (-ru + zu * d_u) / su
        ap = step_frac * _max_step(np.concatenate([sl, su]),
                                   np.concatenate([d_u, -d_u]))
        ad = step_frac * _max_step(np.concatenate([zl, zu]),
                                   np.concatenate([d_zl, d_zu]))
        u = np.clip(u + ap * d_u, lb + 1e-14 * width, ub - 1e-14 * width)
        zl = np.maximum(zl + ad * d_zl, 1e-300)
        zu = np.maximum(zu + ad * d_zu, 1e-300)
        hu = H @ u
        g = hu + q
        obj = _objective(qp, u, hu)
        if obj < history[-1]:
            history.append(obj)
    return u, hu, obj, iterations


def solve_qp(qp: QPProblem, tol: float = DEFAULT_TOL,
             max_iter: int = DEFAULT_MAX_ITER,
             u0: np.ndarray | None = None) -> QPSolution:
    """Solve the box QP to projected-gradient tolerance.

    Runs a face-Newton pass first, which converges in a couple of
    factorizations from a good warm start (the shifted previous plan in
    closed loop). If that stalls above tolerance, falls back to a
    predictor-corrector interior-point solve, whose iteration count does
    not depend on the active-set combinatorics, then polishes the face
    with Newton steps to push the projected gradient to tolerance. The
    recorded objective history is non-increasing (improving iterates
    only); termination is on the infinity norm of the projected gradient.
    """
    H, q, lb, ub = qp.H, qp.q, qp.lb, qp.ub
    n = len(q)
    u = np.clip(u0 if u0 is not None else np.zeros(n), lb, ub)
    hu = H @ u
    obj = _objective(qp, u, hu)
    history = [obj]

    # warm starts usually converge here in 1-3 factorizations; cold starts
    # get a token budget before handing off to the interior point
    budget = 10 if u0 is not None else 3
    u, hu, obj, iterations, pg_norm, optimal = _face_newton(
        qp, u, hu, obj, history, tol, budget=min(budget, max_iter))

    # interior-point rounds: the fast profile covers nearly every step; the
    # slow profile (short steps, heavy centering) catches the rare pinch
    # where the fast one collapses complementarity prematurely
    for ip_budget, step_frac, sigma_min in ((60, 0.995, 1e-8),
                                            (90, 0.9, 0.1)):
        if optimal or iterations >= max_iter:
            break
        u2, hu2, obj2, ip_iters = _solve_ip(
            qp, tol, min(ip_budget, max_iter - iterations), history,
            step_frac=step_frac, sigma_min=sigma_min)
        iterations += ip_iters
        # snap barrier iterate onto the bounds it approached, then polish
        width = ub - lb
        snap_lb = (u2 - lb) <= 1e-7 * width
        snap_ub = (ub - u2) <= 1e-7 * width
        u2 = np.where(snap_lb, lb, np.where(snap_ub, ub, u2))
        hu2 = H @ u2
        obj2 = _objective(qp, u2, hu2)
        u2, hu2, obj2, fn_iters, pg2, opt2 = _face_newton(
            qp, u2, hu2, obj2, history, tol,
            budget=min(60, max(max_iter - iterations, 1)))
        iterations += fn_iters
        if opt2 or obj2 < obj:
            u, hu, obj, pg_norm, optimal = u2, hu2, obj2, pg2, opt2

    if obj < history[-1]:
        history.append(obj)
    status = "optimal" if optimal else "max_iter"
    return QPSolution(inputs=u.reshape(-1, 2), objective=obj, status=status,
                      iterations=iterations, pg_norm=pg_norm,
                      objective_history=history)


def predict_states(model: LinearDiscreteModel, state: VesselState,
                   inputs: np.ndarray) -> np.ndarray:
    """Roll the affine model over an input sequence; returns (N+1, 4)."""
    states = np.empty((len(inputs) + 1, 4))
    states[0] = state.as_array()
    for k, u in enumerate(inputs):
        states[k + 1] = model.A @ states[k] + model.B @ u + model.c
    return states


@dataclass
class MpcInfo:
    reference: ReferenceTrajectory
    status: str
    objective: float
    iterations: int
    pg_norm: float
    inputs: np.ndarray


def shift_plan(inputs: np.ndarray) -> np.ndarray:
    """Warm start for the next step: drop the applied input, repeat the last."""
    return np.vstack([inputs[1:], inputs[-1:]])


def mpc_step(state: VesselState, control_prev: ControlInput,
             plan: WaypointPlan, params: VesselParams,
             tol: float = DEFAULT_TOL,
             max_iter: int = DEFAULT_MAX_ITER,
             warm_start: np.ndarray | None = None) -> tuple[ControlInput, MpcInfo]:
    """One full control step: reference, linearization, QP, first input.

    `warm_start` takes the previous step's input plan (use `shift_plan`),
    which typically saves the solver its interior-point phase.
    """
    ref = get_reference(plan, state, params)
    model = linearize_discretize(state, control_prev, params.dt)
    qp = build_qp(state, ref, model, params)
    u0 = None if warm_start is None else np.asarray(warm_start).reshape(-1)
    sol = solve_qp(qp, tol=tol, max_iter=max_iter, u0=u0)
    if sol.status != "optimal":
        log.warning("QP not converged (pg_norm %.3e after %d iterations)",
                    sol.pg_norm, sol.iterations)
    u1 = sol.inputs[0]
    info = MpcInfo(reference=ref, status=sol.status, objective=sol.objective,
                   iterations=sol.iterations, pg_norm=sol.pg_norm,
                   inputs=sol.inputs)
    return ControlInput(a=float(u1[0]), omega=float(u1[1])), info
