"""Damped Newton solver for the truncated-cylinder problem and the
continuation driver that walks it in flow amplitude, half-length L, and
regularization delta.

The nonlinear map is the pointwise residual of fields.residual_phi with
strong Dirichlet ends; the Jacobian is assembled analytically,

    h -> -m h lap(p) - m p lap(h) + (c+alpha) h_x - 2 grad(p).grad(h),

with the advection stencil of h_x frozen to the same centered/upwind choice
the residual made at p.  Existence machinery is replaced by homotopy from
the exactly-solvable planar case; the planar barriers survive as monitored
runtime certificates (sandwich and monotonicity are checked, never
projected).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.interpolate import PchipInterpolator

from .fields import (
    Grid,
    NonPositiveFieldError,
    ScalarField2D,
    advective_gradient,
    residual_phi,
    upwind_rows_from_floor,
)
from .flow import FlowProfile, WaveParams
from .planar import PlanarProfile, barrier_pair, profile_from_anchor

__all__ = [
    "JacobianMatrix",
    "SolveReport",
    "SolverError",
    "StageSpec",
    "assemble_jacobian",
    "linear_solve",
    "jacobian_fd_check",
    "solve_truncated",
    "standard_stages",
    "continuation",
]

NEWTON_TOL_FACTOR = 1e-9  # convergence: ||Phi||_inf <= this * c1^2
LINEAR_RESIDUAL_TOL = 1e-10
ARMIJO_FACTORS = tuple(0.5**k for k in range(7))  # 1, 1/2, ..., 1/64
ARMIJO_SLOPE = 1e-4
MAX_NEWTON_ITERS = 50
MAX_SCHEDULE_HALVINGS = 8


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class JacobianMatrix:
    """Sparse linearization over the interior unknowns, y-periodic couplings
    included.  Row sparsity is at most 6 (diagonal, x-1, x-2, x+1, y+/-1);
    the pattern is transpose-symmetric wherever the centered advection
    stencil is active (upwind rows add an x-2 leg)."""

    matrix: sp.csc_matrix
    Nx: int
    Ny: int
    min_p: float


def _interior_index(Nx: int, Ny: int) -> np.ndarray:
    return np.arange((Nx - 2) * Ny).reshape(Nx - 2, Ny)


def assemble_jacobian(p: ScalarField2D, flow: FlowProfile,
                      params: WaveParams,
                      upwind_rows: np.ndarray | None = None) -> JacobianMatrix:
    """Analytic Gateaux derivative of the discrete residual at p (with the
    same advection stencil selection as the residual)."""
    g = p.grid
    Nx, Ny = g.Nx, g.Ny
    hx, hy = g.hx, g.hy
    vals = p.values
    m = params.m

    px, scheme = advective_gradient(vals, g, params, upwind_rows)
    q = vals - vals.mean(axis=1, keepdims=True)
    py = (np.roll(q, -1, axis=1) - np.roll(q, 1, axis=1)) / (2.0 * hy)
    lap = np.zeros_like(vals)
    lap[1:-1] = (vals[2:] - 2.0 * vals[1:-1] + vals[:-2]) / hx**2
    lap += (np.roll(q, -1, axis=1) - 2.0 * q
            + np.roll(q, 1, axis=1)) / hy**2

    sl = slice(1, -1)
    pc = vals[sl]
    a = (params.c + flow(g.y)[None, :]) - 2.0 * px[sl]
    sch = scheme[sl]
    K = _interior_index(Nx, Ny)

    adv_diag = np.where(sch == 1, 1.0 / hx,
                        np.where(sch == 2, 1.5 / hx, 0.0))
    adv_xp1 = np.where(sch == 0, 0.5 / hx, 0.0)
    adv_xm1 = np.where(sch == 1, -1.0 / hx,
                       np.where(sch == 2, -2.0 / hx, -0.5 / hx))
    adv_xm2 = np.where(sch == 2, 0.5 / hx, 0.0)

    diag = -m * lap[sl] + 2.0 * m * pc * (1.0 / hx**2 + 1.0 / hy**2) \
        + a * adv_diag
    xp1 = -m * pc / hx**2 + a * adv_xp1
    xm1 = -m * pc / hx**2 + a * adv_xm1
    xm2 = a * adv_xm2
    yp1 = -m * pc / hy**2 - py[sl] / hy
    ym1 = -m * pc / hy**2 + py[sl] / hy

    rows, cols, data = [], [], []

    def leg(coeff, col_index, mask=None):
        if mask is None:
            rows.append(K.ravel())
            cols.append(col_index.ravel())
            data.append(coeff.ravel())
        else:
            rows.append(K[mask])
            cols.append(col_index[mask])
            data.append(coeff[mask])

    ni = Nx - 2
    i_idx = np.arange(ni)[:, None] + np.zeros((1, Ny), dtype=int)
    leg(diag, K)
    leg(xp1, K + Ny, mask=i_idx < ni - 1)          # x+1 neighbor interior
    leg(xm1, K - Ny, mask=i_idx > 0)               # x-1 neighbor interior
    leg(xm2, K - 2 * Ny, mask=(i_idx > 1) & (adv_xm2 != 0.0))
    leg(yp1, (K // Ny) * Ny + (K + 1) % Ny)
    leg(ym1, (K // Ny) * Ny + (K - 1) % Ny)

    n = ni * Ny
    matrix = sp.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    ).tocsc()
    return JacobianMatrix(matrix=matrix, Nx=Nx, Ny=Ny,
                          min_p=float(vals[sl].min()))


def linear_solve(J: JacobianMatrix, rhs: np.ndarray) -> np.ndarray:
    """Direct sparse LU solve of J h = rhs to relative residual <= 1e-10."""
    b = rhs.ravel()
    if not np.any(b):
        return np.zeros_like(rhs)
    try:
        lu = spla.splu(J.matrix)
        h = lu.solve(b)
        # iterative refinement toward the residual contract
        for _ in range(3):
            res = b - J.matrix @ h
            if np.linalg.norm(res) <= 0.1 * LINEAR_RESIDUAL_TOL * np.linalg.norm(b):
                break
            h = h + lu.solve(res)
    except RuntimeError as exc:
        raise SolverError(
            f"linear solve breakdown (min p = {J.min_p:.6e}, "
            "possible loss of ellipticity)"
        ) from exc
    res_norm = np.linalg.norm(J.matrix @ h - b)
    rel = res_norm / np.linalg.norm(b)
    if not np.isfinite(rel):
        raise SolverError(
            f"linear solve produced non-finite iterate (min p = {J.min_p:.6e})"
        )
    if rel > LINEAR_RESIDUAL_TOL:
        # the plain relative residual is floored at eps*cond(J); accept the
        # solve iff the normwise backward error is at machine level, which
        # is the attainable meaning of "solved to working precision"
        scale = spla.norm(J.matrix, 1) * np.linalg.norm(h) + np.linalg.norm(b)
        backward = res_norm / scale
        if backward > 1e-14:
            raise SolverError(
                f"linear solve residual {rel:.3e} exceeds contract "
                f"{LINEAR_RESIDUAL_TOL:.0e} with backward error "
                f"{backward:.3e} (min p = {J.min_p:.6e})"
            )
    return h.reshape(rhs.shape)


def jacobian_fd_check(p: ScalarField2D, flow: FlowProfile, params: WaveParams,
                      rng: np.random.Generator, n_dirs: int = 3,
                      t: float = 1e-6,
                      upwind_rows: np.ndarray | None = None) -> float:
    """Max relative disagreement between (Phi(p+t h)-Phi(p))/t and J h over
    random interior directions h."""
    J = assemble_jacobian(p, flow, params, upwind_rows)
    r0 = residual_phi(p, flow, params, upwind_rows).values
    worst = 0.0
    for _ in range(n_dirs):
        h = rng.standard_normal(p.values.shape)
        h[0] = 0.0
        h[-1] = 0.0
        h /= np.max(np.abs(h))
        r1 = residual_phi(p.with_values(p.values + t * h), flow, params,
                          upwind_rows).values
        fd = (r1[1:-1] - r0[1:-1]) / t
        jh = (J.matrix @ h[1:-1].ravel()).reshape(fd.shape)
        denom = max(float(np.max(np.abs(jh))), 1e-30)
        worst = max(worst, float(np.max(np.abs(fd - jh))) / denom)
    return worst


@dataclass
class SolveReport:
    converged: bool
    newton_iters: int
    final_residual_norm: float
    damping_trace: list = field(default_factory=list)
    sandwich_violation: float = 0.0
    min_px: float = 0.0
    max_px: float = 0.0
    wall_time: float = 0.0
    stage: tuple | None = None  # (amplitude, delta, L)
    tolerance: float = 0.0
    upwind_rows: np.ndarray | None = None  # row mask frozen for the solve

    def digest(self) -> dict:
        return {
            "converged": self.converged,
            "newton_iters": self.newton_iters,
            "final_residual_norm": self.final_residual_norm,
            "damping_trace": list(self.damping_trace),
            "sandwich_violation": self.sandwich_violation,
            "min_px": self.min_px,
            "max_px": self.max_px,
            "wall_time": self.wall_time,
            "stage": list(self.stage) if self.stage else None,
            "tolerance": self.tolerance,
            "upwind_row_count": (int(self.upwind_rows.sum())
                                 if self.upwind_rows is not None else 0),
        }


def _interior_norm(r: np.ndarray) -> float:
    return float(np.max(np.abs(r[1:-1])))




def _try_residual(p: ScalarField2D, flow, params, upwind_rows=None):
    try:
        r = residual_phi(p, flow, params, upwind_rows)
    except NonPositiveFieldError:
        return None, np.inf
    return r, _interior_norm(r.values)


def solve_truncated(params: WaveParams, flow: FlowProfile, grid: Grid,
                    initial_guess: ScalarField2D | None = None,
                    barriers=None, A_weight: float = 0.5,
                    tol_factor: float = NEWTON_TOL_FACTOR):
    """Damped Newton on the Dirichlet problem; returns (field, report).

    Boundary data come from the planar barrier pair (A on the left, B on
    the right).  The sandwich p_minus <= p <= p_plus and the slope bounds
    0 < p_x <= c1 are monitored and reported, never enforced.
    """
    t_start = time.perf_counter()
    if barriers is None:
        barriers = barrier_pair(params, A_weight=A_weight,
                                span=(grid.x_lo, grid.x_hi))
    p_minus, p_plus, A, B = barriers

    xs = grid.x
    if initial_guess is None:
        vals = np.tile(p_plus(xs)[:, None], (1, grid.Ny))
    else:
        vals = initial_guess.values.copy()
    vals[0] = A
    vals[-1] = B
    p = ScalarField2D(grid, vals, bc="dirichlet", A=A, B=B)

    # stencil selection is frozen for the whole solve, keyed to the
    # certified lower barrier rather than the moving iterate
    mask = upwind_rows_from_floor(p_minus(xs), grid, params)

    # convergence target: the requested fraction of the natural residual
    # scale c1^2, floored by the roundoff level of the residual evaluation
    # itself (the Laplacian term cancels to eps * m * B^2 / hx^2, which for
    # large right boundary values B exceeds any fixed absolute tolerance)
    roundoff_floor = 100.0 * np.finfo(float).eps * params.m * B**2 / grid.hx**2
    report = SolveReport(converged=False, newton_iters=0,
                         final_residual_norm=np.inf,
                         tolerance=tol_factor * params.c1**2 + roundoff_floor,
                         upwind_rows=mask)
    r, rn = _try_residual(p, flow, params, mask)
    if r is None:
        raise SolverError("initial guess not positive on interior")

    fails = 0
    for it in range(1, MAX_NEWTON_ITERS + 1):
        if rn <= report.tolerance:
            report.converged = True
            break
        J = assemble_jacobian(p, flow, params, mask)
        du = linear_solve(J, -r.values[1:-1])

        accepted = None
        best = (np.inf, None, None)
        for t_step in ARMIJO_FACTORS:
            trial_vals = p.values.copy()
            trial_vals[1:-1] += t_step * du
            trial = p.with_values(trial_vals)
            r_t, rn_t = _try_residual(trial, flow, params, mask)
            if rn_t < best[0]:
                best = (rn_t, trial, r_t)
            if rn_t <= rn * (1.0 - ARMIJO_SLOPE * t_step):
                accepted = (t_step, trial, r_t, rn_t)
                break
        if accepted is None:
            stalled = not np.isfinite(best[0]) or best[0] >= rn
            fails = fails + 1 if stalled else 0
            if (stalled and fails >= 3) or not np.isfinite(best[0]):
                report.newton_iters = it
                report.final_residual_norm = rn
                report.wall_time = time.perf_counter() - t_start
                raise SolverError(
                    f"Newton stalled at residual {rn:.3e} "
                    f"(tolerance {report.tolerance:.3e})"
                )
            accepted = (ARMIJO_FACTORS[-1], best[1], best[2], best[0])
        else:
            fails = 0
        t_step, p, r, rn = accepted
        report.damping_trace.append(t_step)
        report.newton_iters = it
    else:
        report.wall_time = time.perf_counter() - t_start
        report.final_residual_norm = rn
        raise SolverError(
            f"Newton did not converge in {MAX_NEWTON_ITERS} iterations "
            f"(residual {rn:.3e}, tolerance {report.tolerance:.3e})"
        )

    report.final_residual_norm = rn
    upper = p_plus(xs)[:, None]
    lower = p_minus(xs)[:, None]
    report.sandwich_violation = float(np.max(
        np.maximum(lower - p.values, p.values - upper)
    ))
    px = np.gradient(p.values, grid.hx, axis=0)
    report.min_px = float(px.min())
    report.max_px = float(px.max())
    report.wall_time = time.perf_counter() - t_start
    return p, report


@dataclass(frozen=True)
class StageSpec:
    amplitude: float
    delta: float
    L: float
    Nx: int
    Ny: int
    x_lo: float | None = None  # None: symmetric domain [-L, L]

    def key(self):
        return (self.amplitude, self.delta, self.L, self.x_lo)

    def make_grid(self) -> Grid:
        if self.x_lo is None:
            return Grid.symmetric(self.Nx, self.Ny, self.L)
        return Grid(self.Nx, self.Ny, self.x_lo, self.x_lo + 2.0 * self.L)


def standard_stages(amplitude_schedule, L_schedule, delta_schedule,
                    grid_schedule, Ny: int):
    """The default continuation order: amplitude ramp at the first (L, delta),
    then L growth, then delta decay at the final L.  grid_schedule maps each
    L to its Nx."""
    stages = []
    L0 = L_schedule[0]
    d0 = delta_schedule[0]
    for a in amplitude_schedule:
        stages.append(StageSpec(a, d0, L0, grid_schedule[L0], Ny))
    a_final = amplitude_schedule[-1]
    for L in L_schedule[1:]:
        stages.append(StageSpec(a_final, d0, L, grid_schedule[L], Ny))
    L_final = L_schedule[-1]
    for d in delta_schedule[1:]:
        stages.append(StageSpec(a_final, d, L_final, grid_schedule[L_final], Ny))
    return stages


def _regrid(prev: ScalarField2D, prev_params: WaveParams,
            new_grid: Grid, new_params: WaveParams,
            barriers) -> ScalarField2D:
    """Warm start on a new grid: monotone cubic interpolation in x on the
    overlap; outside the old window, extend each y-line with the planar
    slow-drift profile translated to match the seam value (smooth,
    monotone, asymptotically correct on both sides)."""
    _, p_plus, A, B = barriers
    old_g = prev.grid
    xs = new_grid.x
    vals = np.empty((new_grid.Nx, new_grid.Ny))
    inside = (xs >= old_g.x_lo) & (xs <= old_g.x_hi)
    left = xs < old_g.x_lo
    right = xs > old_g.x_hi
    canonical = profile_from_anchor(
        new_params.c0, new_params.m, new_params.delta, 0.0, 1.0,
        x_max=2.0 * new_params.L + 2.0,
    )
    for j in range(new_grid.Ny):
        line = PchipInterpolator(old_g.x, prev.values[:, j])
        vals[inside, j] = line(xs[inside])
        if np.any(left):
            seam = max(float(prev.values[0, j]),
                       new_params.delta * (1.0 + 1e-9))
            shift = old_g.x_lo - canonical.x_at(seam)
            vals[left, j] = canonical(xs[left] - shift)
        if np.any(right):
            seam = float(prev.values[-1, j])
            shift = old_g.x_hi - canonical.x_at(seam)
            vals[right, j] = canonical(xs[right] - shift)
    vals[0] = A
    vals[-1] = B
    return ScalarField2D(new_grid, vals, bc="dirichlet", A=A, B=B)


def _interpolate_same_L(prev: ScalarField2D, new_grid: Grid, A, B):
    if (prev.grid.Nx, prev.grid.Ny) == (new_grid.Nx, new_grid.Ny):
        vals = prev.values.copy()
    else:
        tmp = np.empty((new_grid.Nx, prev.grid.Ny))
        for j in range(prev.grid.Ny):
            tmp[:, j] = PchipInterpolator(prev.grid.x, prev.values[:, j])(new_grid.x)
        if prev.grid.Ny == new_grid.Ny:
            vals = tmp
        else:
            vals = np.empty((new_grid.Nx, new_grid.Ny))
            ys_old = np.arange(prev.grid.Ny + 1) / prev.grid.Ny
            for i in range(new_grid.Nx):
                vals[i] = np.interp(new_grid.y, ys_old,
                                    np.append(tmp[i], tmp[i, 0]))
    vals[0] = A
    vals[-1] = B
    return vals


def continuation(stages, flow_full: FlowProfile, *, m: float, c: float,
                 K: float = 100.0, A_weight: float = 0.5,
                 tol_factor: float = NEWTON_TOL_FACTOR,
                 stage_callback=None, warm_start=None):
    """Walk the stage list, warm-starting each solve from the previous one.

    A failed stage first retries from a cold (planar) start -- warm starts
    can land outside the Newton basin after a large stencil-mask change --
    then triggers step halving toward the last success (amplitude midpoint,
    delta geometric mean, L midpoint).  The driver aborts after 8
    consecutive failures (every accepted stage resets the count, so slow
    ramps that genuinely need many small steps are allowed) or when the
    halved step underflows the minimum relative step, which is how a hard
    wall in parameter space presents.  Returns the list of
    (StageSpec, WaveParams, field, report) for every accepted stage.

    warm_start, when given, is a (StageSpec, WaveParams, field) triple from
    an earlier run (e.g. a loaded checkpoint); the first stage then starts
    from that field instead of the planar barrier.
    """
    results = []
    if warm_start is None:
        prev_field = prev_params = prev_stage = None
    else:
        prev_stage, prev_params, prev_field = warm_start
    pending = list(stages)
    consecutive_failures = 0

    while pending:
        stage = pending[0]
        flow = flow_full.scaled(stage.amplitude)
        params = WaveParams.from_flow(flow, m=m, c=c, delta=stage.delta,
                                      L=stage.L, K=K)
        err = validate_params(params)
        if err is not None:
            raise SolverError(str(err))
        grid = stage.make_grid()
        barriers = barrier_pair(params, A_weight=A_weight,
                                span=(grid.x_lo, grid.x_hi))
        _, _, A, B = barriers

        if prev_field is None:
            guess = None
        elif (prev_field.grid.x_lo, prev_field.grid.x_hi) \
                != (grid.x_lo, grid.x_hi):
            guess = _regrid(prev_field, prev_params, grid, params, barriers)
        else:
            vals = _interpolate_same_L(prev_field, grid, A, B)
            guess = ScalarField2D(grid, vals, bc="dirichlet", A=A, B=B)

        try:
            p, report = solve_truncated(params, flow, grid,
                                        initial_guess=guess,
                                        barriers=barriers,
                                        A_weight=A_weight,
                                        tol_factor=tol_factor)
        except SolverError:
            p = report = None
            if guess is not None:
                try:
                    p, report = solve_truncated(params, flow, grid,
                                                initial_guess=None,
                                                barriers=barriers,
                                                A_weight=A_weight,
                                                tol_factor=tol_factor)
                except SolverError:
                    p = report = None
            if p is None:
                consecutive_failures += 1
                if consecutive_failures > MAX_SCHEDULE_HALVINGS \
                        or prev_stage is None:
                    raise
                mid = _midpoint_stage(prev_stage, stage)
                if _step_underflow(prev_stage, mid):
                    raise SolverError(
                        "continuation step underflow between accepted stage "
                        f"{prev_stage.key()} and target {stage.key()}: "
                        "no converged stage reachable by step halving"
                    )
                pending.insert(0, mid)
                continue

        consecutive_failures = 0
        report.stage = stage.key()
        results.append((stage, params, p, report))
        if stage_callback is not None:
            stage_callback(stage, params, p, report)
        prev_field, prev_params, prev_stage = p, params, stage
        pending.pop(0)

    return results


def _step_underflow(prev: StageSpec, mid: StageSpec,
                    rel: float = 1e-3) -> bool:
    """True when mid is so close to prev in every continuation coordinate
    that accepting it cannot constitute progress (the signature of halving
    against a hard wall)."""
    da = abs(mid.amplitude - prev.amplitude)
    dL = abs(mid.L - prev.L)
    dlog_delta = abs(np.log(mid.delta / prev.delta))
    return (da <= rel * max(1.0, abs(prev.amplitude))
            and dL <= rel * max(1.0, prev.L)
            and dlog_delta <= rel)


def _midpoint_stage(prev: StageSpec, target: StageSpec) -> StageSpec:
    amplitude = 0.5 * (prev.amplitude + target.amplitude)
    delta = float(np.sqrt(prev.delta * target.delta))
    L = 0.5 * (prev.L + target.L)
    Nx = max(prev.Nx, target.Nx)
    if prev.x_lo is None and target.x_lo is None:
        x_lo = None
    else:
        a = -prev.L if prev.x_lo is None else prev.x_lo
        b = -target.L if target.x_lo is None else target.x_lo
        x_lo = 0.5 * (a + b)
    return StageSpec(amplitude, delta, L, Nx, target.Ny, x_lo)


def validate_params(params: WaveParams):
    from .flow import validate_speed

    return validate_speed(params)
