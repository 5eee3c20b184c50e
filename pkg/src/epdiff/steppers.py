"""Time steppers: midpoint-implicit predictor-corrector, two explicit/implicit
two-step schemes, an RK4 reference, and the integration driver.

All schemes evolve the momentum M and recover the velocity U by inverting
Q = 1 - alpha^2 Lap.  The two-step schemes need a first step produced by a
one-step bootstrap (RK4 by default).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Optional, Union

import numpy as np
import scipy.sparse.linalg

from .core import (
    State,
    _gamma_arrays,
    energy_half_scheme2,
    energy_half_scheme3,
    energy_scheme1,
    linear_momenta,
)
from .diagnostics import RunRecord, SeriesRow
from .errors import NonConvergenceError, NumericalFailureError
from .grid import (
    FieldPair,
    GridSpec,
    _apply_q_arr,
    _check_same_grid,
    _solve_q_checked,
    _solve_q_stack_arr,
    norm,
)

__all__ = [
    "SchemeKind",
    "BootstrapKind",
    "FixedCount",
    "Tolerance",
    "SchemeConfig",
    "StepResult",
    "step_scheme1_pc",
    "step_scheme2",
    "step_scheme3",
    "step_rk4",
    "bootstrap_first_step",
    "solvability_dt_bound",
    "integrate",
]

# Hard ceiling on the relative residual of the linearly-implicit solve; the
# default target is tighter so energy stays conserved over 1e4-step runs.
SCHEME3_RESIDUAL_CAP = 1e-10
SCHEME3_RTOL = 1e-13

_CONSECUTIVE_T_ATOL = 1e-12


class SchemeKind(str, Enum):
    SCHEME1_PC = "scheme1"
    SCHEME2 = "scheme2"
    SCHEME3 = "scheme3"
    RK4 = "rk4"


class BootstrapKind(str, Enum):
    RK4 = "rk4"
    SCHEME1_FIXED_POINT = "scheme1"


@dataclass(frozen=True)
class FixedCount:
    """Run exactly ``count`` corrector passes per step."""

    count: int

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("corrector count must be at least 1")


@dataclass(frozen=True)
class Tolerance:
    """Iterate the corrector until successive momentum iterates agree to
    ``rtol`` in relative grid norm, up to ``max_iter`` passes."""

    rtol: float
    max_iter: int

    def __post_init__(self):
        if not 0.0 < self.rtol < 1.0:
            raise ValueError("corrector rtol must lie in (0, 1)")
        if self.max_iter < 1:
            raise ValueError("corrector max_iter must be at least 1")


CorrectorMode = Union[FixedCount, Tolerance]


@dataclass(frozen=True)
class SchemeConfig:
    kind: SchemeKind
    dt: float
    corrector: CorrectorMode = Tolerance(rtol=1e-14, max_iter=200)
    bootstrap: BootstrapKind = BootstrapKind.RK4

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")


@dataclass(frozen=True)
class StepResult:
    """State after one step plus solver bookkeeping.

    ``corrector_iters`` is 0 for the explicit schemes;
    ``linear_solve_residual`` is the relative residual of whichever linear or
    fixed-point solve produced the state; ``corrector_increments`` holds the
    norms of successive corrector updates (predictor-corrector only).
    """

    state: State
    corrector_iters: int
    linear_solve_residual: float
    corrector_increments: tuple[float, ...] = ()


def _require_consecutive(s_nm1: State, s_n: State, dt: float):
    _check_same_grid(s_nm1.u, s_n.u)
    if abs(s_n.t - (s_nm1.t + dt)) > _CONSECUTIVE_T_ATOL:
        raise ValueError(
            f"states are not consecutive: t={s_nm1.t} then {s_n.t} with dt={dt}"
        )


def _pair_norm(a1: np.ndarray, a2: np.ndarray, area: float) -> float:
    return math.sqrt((np.sum(a1 * a1) + np.sum(a2 * a2)) * area)


def step_scheme2(s_nm1: State, s_n: State, dt: float) -> StepResult:
    """Explicit two-step leapfrog: M advances over 2*dt with the bracket
    frozen at the middle level; conserves energy and both momenta."""
    _require_consecutive(s_nm1, s_n, dt)
    grid = s_n.grid
    g1, g2 = _gamma_arrays(
        s_n.m.c1.values, s_n.m.c2.values, s_n.u.c1.values, s_n.u.c2.values,
        grid.dx, grid.dy,
    )
    m_new = np.stack(
        [s_nm1.m.c1.values - (2.0 * dt) * g1, s_nm1.m.c2.values - (2.0 * dt) * g2]
    )
    u_new, res = _solve_q_checked(m_new, grid)
    state = State(
        u=FieldPair.from_arrays(grid, u_new[0], u_new[1]),
        m=FieldPair.from_arrays(grid, m_new[0], m_new[1]),
        t=s_n.t + dt,
    )
    return StepResult(state, corrector_iters=0, linear_solve_residual=res)


def _scheme3_operator(m_n: FieldPair, dt: float, grid: GridSpec):
    """x -> Q x + dt*Gamma(m_n, x), the left-hand operator of the two-step
    linearly implicit scheme."""
    m1 = m_n.c1.values
    m2 = m_n.c2.values

    def apply(x1: np.ndarray, x2: np.ndarray):
        g1, g2 = _gamma_arrays(m1, m2, x1, x2, grid.dx, grid.dy)
        return (
            _apply_q_arr(x1, grid) + dt * g1,
            _apply_q_arr(x2, grid) + dt * g2,
        )

    return apply


def step_scheme3(
    s_nm1: State,
    s_n: State,
    dt: float,
    *,
    rtol: float = SCHEME3_RTOL,
    residual_cap: float = SCHEME3_RESIDUAL_CAP,
) -> StepResult:
    """Linearly implicit two-step scheme: solves the coupled system
    (Q + dt*Gamma_n) U_new = (Q - dt*Gamma_n) U_old in the 2*K*J velocity
    unknowns, with the bracket coefficients frozen at the middle level.

    Conserves energy but not the linear momenta.  The system is solved
    matrix-free by GMRES preconditioned with the spectral Q-inverse; the
    operator is Q plus an O(dt) skew perturbation, so a handful of iterations
    suffice.  Fails if the relative residual cannot be pushed below
    ``residual_cap``.
    """
    _require_consecutive(s_nm1, s_n, dt)
    grid = s_n.grid
    shape = grid.shape
    n_pts = grid.K * grid.J

    lhs = _scheme3_operator(s_n.m, dt, grid)

    # Using the stored momentum for Q u_old keeps the evolved variable exact.
    g1, g2 = _gamma_arrays(
        s_n.m.c1.values, s_n.m.c2.values,
        s_nm1.u.c1.values, s_nm1.u.c2.values,
        grid.dx, grid.dy,
    )
    b1 = s_nm1.m.c1.values - dt * g1
    b2 = s_nm1.m.c2.values - dt * g2
    b = np.concatenate([b1.ravel(), b2.ravel()])

    def matvec(x: np.ndarray) -> np.ndarray:
        y1, y2 = lhs(x[:n_pts].reshape(shape), x[n_pts:].reshape(shape))
        return np.concatenate([y1.ravel(), y2.ravel()])

    def precond(x: np.ndarray) -> np.ndarray:
        return _solve_q_stack_arr(x.reshape((2,) + shape), grid).ravel()

    op = scipy.sparse.linalg.LinearOperator((2 * n_pts, 2 * n_pts), matvec=matvec)
    prec = scipy.sparse.linalg.LinearOperator((2 * n_pts, 2 * n_pts), matvec=precond)

    # Linear extrapolation from the two known levels is a second-order guess.
    x0 = np.concatenate(
        [
            (2.0 * s_n.u.c1.values - s_nm1.u.c1.values).ravel(),
            (2.0 * s_n.u.c2.values - s_nm1.u.c2.values).ravel(),
        ]
    )

    iteration_cap = max(1, math.ceil(10.0 * math.sqrt(2.0 * n_pts)))
    restart = min(64, iteration_cap)
    iters = 0

    def count(_):
        nonlocal iters
        iters += 1

    x, info = scipy.sparse.linalg.gmres(
        op,
        b,
        x0=x0,
        rtol=rtol,
        atol=0.0,
        restart=restart,
        maxiter=max(1, math.ceil(iteration_cap / restart)),
        M=prec,
        callback=count,
        callback_type="pr_norm",
    )
    norm_b = float(np.linalg.norm(b))
    rel_res = (
        float(np.linalg.norm(matvec(x) - b)) / norm_b if norm_b > 0.0 else 0.0
    )
    if not np.all(np.isfinite(x)) or rel_res > residual_cap:
        raise NonConvergenceError(
            f"linear solve stalled at relative residual {rel_res:.3e} "
            f"(cap {residual_cap:.1e}, {iters} iterations)",
            residual=rel_res,
        )

    u1 = x[:n_pts].reshape(shape)
    u2 = x[n_pts:].reshape(shape)
    state = State(
        u=FieldPair.from_arrays(grid, u1, u2),
        m=FieldPair.from_arrays(grid, _apply_q_arr(u1, grid), _apply_q_arr(u2, grid)),
        t=s_n.t + dt,
    )
    return StepResult(state, corrector_iters=0, linear_solve_residual=rel_res)


def step_scheme1_pc(
    s_nm1: Optional[State],
    s_n: State,
    dt: float,
    cfg: SchemeConfig,
) -> StepResult:
    """Predictor-corrector realization of the midpoint-implicit scheme.

    The predictor is one explicit leapfrog step (skipped when no previous
    level exists, in which case the current momentum seeds the iteration).
    Each corrector pass evaluates

        M_c = M_n - (dt/4) * Gamma(M_n + M_p, U_n + U_p)

    and replaces the guess; by bilinearity of the bracket this is exactly the
    fixed-point map of the implicit scheme, so at convergence the energy and
    both momenta are conserved to the stopping tolerance.  In tolerance mode
    iteration stops when successive momentum iterates agree to ``rtol``
    relative; exceeding ``max_iter`` raises :class:`NonConvergenceError`.
    """
    if s_nm1 is not None:
        _require_consecutive(s_nm1, s_n, dt)
    grid = s_n.grid
    area = grid.cell_area
    mn1 = s_n.m.c1.values
    mn2 = s_n.m.c2.values
    un1 = s_n.u.c1.values
    un2 = s_n.u.c2.values

    if s_nm1 is not None:
        g1, g2 = _gamma_arrays(mn1, mn2, un1, un2, grid.dx, grid.dy)
        mp = np.stack(
            [s_nm1.m.c1.values - (2.0 * dt) * g1, s_nm1.m.c2.values - (2.0 * dt) * g2]
        )
        up = _solve_q_stack_arr(mp, grid)
    else:
        mp = np.stack([mn1, mn2])
        up = np.stack([un1, un2])

    mode = cfg.corrector
    max_passes = mode.count if isinstance(mode, FixedCount) else mode.max_iter
    increments = []
    converged = isinstance(mode, FixedCount)
    quarter_dt = 0.25 * dt

    for _ in range(max_passes):
        g1, g2 = _gamma_arrays(
            mn1 + mp[0], mn2 + mp[1], un1 + up[0], un2 + up[1], grid.dx, grid.dy
        )
        mc = np.stack([mn1 - quarter_dt * g1, mn2 - quarter_dt * g2])
        delta = _pair_norm(mc[0] - mp[0], mc[1] - mp[1], area)
        increments.append(delta)
        mp = mc
        up = _solve_q_stack_arr(mp, grid)
        if isinstance(mode, Tolerance):
            if delta <= mode.rtol * _pair_norm(mc[0], mc[1], area):
                converged = True
                break

    norm_mc = _pair_norm(mp[0], mp[1], area)
    rel = increments[-1] / norm_mc if norm_mc > 0.0 else 0.0
    if not converged:
        raise NonConvergenceError(
            f"corrector did not reach rtol={mode.rtol:.1e} within "
            f"{mode.max_iter} passes (last relative increment {rel:.3e})",
            residual=rel,
        )

    state = State(
        u=FieldPair.from_arrays(grid, up[0], up[1]),
        m=FieldPair.from_arrays(grid, mp[0], mp[1]),
        t=s_n.t + dt,
    )
    return StepResult(
        state,
        corrector_iters=len(increments),
        linear_solve_residual=rel,
        corrector_increments=tuple(increments),
    )


def step_rk4(s_n: State, dt: float) -> StepResult:
    """Classical four-stage Runge-Kutta step on dM/dt = -Gamma(M, Q^-1 M).

    Each stage recovers the stage velocity with a Helmholtz solve.  Kept as a
    non-conservative reference; it does not preserve the discrete energy.
    """
    grid = s_n.grid

    def f(m1, m2, u1, u2):
        g1, g2 = _gamma_arrays(m1, m2, u1, u2, grid.dx, grid.dy)
        return -g1, -g2

    m1 = s_n.m.c1.values
    m2 = s_n.m.c2.values
    k1a, k1b = f(m1, m2, s_n.u.c1.values, s_n.u.c2.values)

    def stage(ma, mb):
        u = _solve_q_stack_arr(np.stack([ma, mb]), grid)
        return f(ma, mb, u[0], u[1])

    k2a, k2b = stage(m1 + 0.5 * dt * k1a, m2 + 0.5 * dt * k1b)
    k3a, k3b = stage(m1 + 0.5 * dt * k2a, m2 + 0.5 * dt * k2b)
    k4a, k4b = stage(m1 + dt * k3a, m2 + dt * k3b)

    m_new = np.stack(
        [
            m1 + (dt / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a),
            m2 + (dt / 6.0) * (k1b + 2.0 * k2b + 2.0 * k3b + k4b),
        ]
    )
    u_new, res = _solve_q_checked(m_new, grid)
    state = State(
        u=FieldPair.from_arrays(grid, u_new[0], u_new[1]),
        m=FieldPair.from_arrays(grid, m_new[0], m_new[1]),
        t=s_n.t + dt,
    )
    return StepResult(state, corrector_iters=0, linear_solve_residual=res)


def _bootstrap_result(s_0: State, dt: float, cfg: SchemeConfig) -> StepResult:
    if cfg.bootstrap is BootstrapKind.RK4:
        return step_rk4(s_0, dt)
    pc_cfg = replace(cfg, corrector=Tolerance(rtol=1e-14, max_iter=200))
    return step_scheme1_pc(None, s_0, dt, pc_cfg)


def bootstrap_first_step(s_0: State, dt: float, cfg: SchemeConfig) -> State:
    """Produce the second time level for the two-step schemes."""
    return _bootstrap_result(s_0, dt, cfg).state


def solvability_dt_bound(m_n: FieldPair) -> float:
    """Largest dt for which the midpoint-implicit step provably has a unique
    solution and a contracting corrector:

        dt <= sqrt(2(sqrt5 - 2))/5 * sqrt(dx^3 dy^3/(dx^2 + dy^2)) / ||M||.

    Returns +inf for the zero momentum (any dt works at the trivial state).
    """
    nm = norm(m_n)
    if nm == 0.0:
        return math.inf
    grid = m_n.grid
    dx, dy = grid.dx, grid.dy
    c = math.sqrt(2.0 * (math.sqrt(5.0) - 2.0)) / 5.0
    return c * math.sqrt(dx**3 * dy**3 / (dx**2 + dy**2)) / nm


def _resolve_step_count(t0: float, t_final: float, dt: float) -> int:
    if not t_final > t0:
        raise ValueError("t_final must exceed the initial time")
    ratio = (t_final - t0) / dt
    n = round(ratio)
    if n < 1 or abs(ratio - n) > 1e-9 * max(1.0, abs(ratio)):
        raise ValueError(
            f"(t_final - t0)/dt = {ratio} is not within 1e-9 of a positive integer"
        )
    return n


def integrate(
    initial: State,
    cfg: SchemeConfig,
    t_final: float,
    observer: Optional[Callable[[StepResult], None]] = None,
    *,
    snapshot_every: int = 0,
    seed_second_state: Optional[State] = None,
) -> RunRecord:
    """Run the configured stepper from ``initial`` to ``t_final``.

    The two-level schemes bootstrap their second level with ``cfg.bootstrap``
    unless ``seed_second_state`` supplies it directly (used by the
    reversibility protocol).  ``observer`` is invoked with every
    :class:`StepResult`; ``snapshot_every`` > 0 stores the velocity every
    that many steps (step 0 included).  Stepper failures abort with the step
    index attached.
    """
    kind = cfg.kind
    dt = cfg.dt
    n_steps = _resolve_step_count(initial.t, t_final, dt)
    multistep = kind is not SchemeKind.RK4
    if seed_second_state is not None and not multistep:
        raise ValueError("a seed pair only makes sense for two-level schemes")

    record = RunRecord(scheme=kind.value, grid=initial.grid, dt=dt)

    def snapshot(step: int, s: State):
        if snapshot_every > 0 and step % snapshot_every == 0:
            record.snapshots.append((s.t, s.u))

    def scheme_energy(prev: Optional[State], cur: State) -> float:
        if kind is SchemeKind.SCHEME2:
            return energy_half_scheme2(prev, cur)
        if kind is SchemeKind.SCHEME3:
            return energy_half_scheme3(prev, cur)
        return energy_scheme1(cur)

    def add_row(step: int, s: State, energy: float, res: StepResult | None, wall: float):
        mx, my = linear_momenta(s)
        record.series.append(
            SeriesRow(
                step=step,
                t=s.t,
                energy=energy,
                momentum_x=mx,
                momentum_y=my,
                corrector_iters=res.corrector_iters if res else 0,
                wall_seconds=wall,
            )
        )

    prev: Optional[State] = None
    cur = initial
    snapshot(0, cur)

    step0_energy_pending = multistep  # needs the bootstrapped level
    if not multistep:
        add_row(0, cur, energy_scheme1(cur), None, 0.0)

    try:
        for step in range(1, n_steps + 1):
            t_start = time.perf_counter()
            if step == 1 and multistep:
                if seed_second_state is not None:
                    _require_consecutive(cur, seed_second_state, dt)
                    result = StepResult(
                        seed_second_state, corrector_iters=0, linear_solve_residual=0.0
                    )
                else:
                    result = _bootstrap_result(cur, dt, cfg)
            elif kind is SchemeKind.SCHEME2:
                result = step_scheme2(prev, cur, dt)
            elif kind is SchemeKind.SCHEME3:
                result = step_scheme3(prev, cur, dt)
            elif kind is SchemeKind.SCHEME1_PC:
                result = step_scheme1_pc(prev, cur, dt, cfg)
            else:
                result = step_rk4(cur, dt)
            wall = time.perf_counter() - t_start

            prev, cur = cur, result.state
            if step0_energy_pending:
                add_row(0, prev, scheme_energy(prev, cur), None, 0.0)
                step0_energy_pending = False
            add_row(step, cur, scheme_energy(prev, cur), result, wall)
            snapshot(step, cur)
            if observer is not None:
                observer(result)
    except NumericalFailureError as exc:
        raise type(exc)(
            f"{exc} (while computing step {len(record.series)})",
            residual=exc.residual,
        ) from exc

    record.states_tail = (prev, cur) if prev is not None else (cur,)
    return record
