"""Newton solver, Jacobian assembly, and the continuation driver."""

import numpy as np
import pytest

from pmewaves.fields import Grid, ScalarField2D
from pmewaves.flow import WaveParams, make_flow
from pmewaves.solver import (
    SolverError,
    StageSpec,
    _midpoint_stage,
    _step_underflow,
    continuation,
    jacobian_fd_check,
    solve_truncated,
    standard_stages,
)

FLOW = make_flow([0.3], [0.4])


def test_jacobian_matches_finite_differences():
    params = WaveParams.from_flow(FLOW, m=2.0, c=4.0, delta=1e-1, L=4.0)
    g = Grid.symmetric(64, 8, 4.0)
    rng = np.random.default_rng(0)
    vals = np.tile(np.linspace(0.2, 8.0, 64)[:, None], (1, 8))
    vals += 0.01 * np.abs(rng.standard_normal(vals.shape))
    p = ScalarField2D(g, vals, bc="dirichlet", A=0.2, B=8.0)
    rel = jacobian_fd_check(p, FLOW, params, rng)
    assert rel < 1e-5


def test_solve_truncated_planar_converges():
    flow = make_flow([], [])
    params = WaveParams.from_flow(flow, m=2.0, c=1.0, delta=1e-1, L=4.0)
    g = Grid.symmetric(128, 8, 4.0)
    p, report = solve_truncated(params, flow, g)
    assert report.converged
    assert report.final_residual_norm <= report.tolerance
    assert report.min_px > -1e-10
    assert report.max_px <= params.c1 + 1e-6
    # boundary data held exactly
    assert np.all(p.values[0] == p.A)
    assert np.all(p.values[-1] == p.B)
    # warm restart from the solution converges immediately
    p2, report2 = solve_truncated(params, flow, g, initial_guess=p)
    assert report2.newton_iters <= 1
    assert np.max(np.abs(p2.values - p.values)) < 1e-8


def test_solve_truncated_generic_flow():
    params = WaveParams.from_flow(FLOW.scaled(0.5), m=2.0, c=4.0,
                                  delta=1e-1, L=4.0)
    g = Grid.symmetric(128, 16, 4.0)
    p, report = solve_truncated(params, FLOW.scaled(0.5), g)
    assert report.converged
    # genuinely two-dimensional
    osc = float(np.max(p.values.max(axis=1) - p.values.min(axis=1)))
    assert osc > 1e-4


def test_standard_stages_ordering():
    stages = standard_stages([0.0, 1.0], [4.0, 8.0], [1e-1, 1e-2],
                             {4.0: 64, 8.0: 128}, 8)
    keys = [(s.amplitude, s.delta, s.L, s.Nx) for s in stages]
    assert keys == [
        (0.0, 1e-1, 4.0, 64), (1.0, 1e-1, 4.0, 64),
        (1.0, 1e-1, 8.0, 128), (1.0, 1e-2, 8.0, 128),
    ]


def test_continuation_walks_schedule_and_reports():
    stages = [StageSpec(a, 1e-1, 4.0, 128, 8) for a in (0.0, 1.0)]
    stages += [StageSpec(1.0, 3e-2, 4.0, 128, 8)]
    seen = []
    results = continuation(stages, FLOW, m=2.0, c=4.0,
                           stage_callback=lambda s, prm, p, r:
                           seen.append(s.key()))
    assert len(results) == 3
    assert seen == [s.key() for s in stages]
    for stage, params, p, report in results:
        assert report.converged
        assert report.stage == stage.key()


def test_continuation_warm_start_resumes():
    stages = [StageSpec(a, 1e-1, 4.0, 128, 8) for a in (0.0, 0.5, 1.0)]
    full = continuation(stages, FLOW, m=2.0, c=4.0)
    part = continuation(stages[:2], FLOW, m=2.0, c=4.0)
    resumed = continuation(stages[2:], FLOW, m=2.0, c=4.0,
                           warm_start=(part[-1][0], part[-1][1], part[-1][2]))
    assert np.array_equal(resumed[-1][2].values, full[-1][2].values)


def test_continuation_rejects_inadmissible_speed():
    stages = [StageSpec(1.0, 1e-1, 4.0, 64, 8)]
    with pytest.raises(SolverError):
        continuation(stages, FLOW, m=2.0, c=0.4)  # c below c* at amplitude 1


def test_midpoint_stage_and_underflow_guard():
    a = StageSpec(0.0, 1e-1, 4.0, 64, 8)
    b = StageSpec(1.0, 1e-3, 8.0, 128, 8)
    mid = _midpoint_stage(a, b)
    assert mid.amplitude == 0.5
    assert mid.delta == pytest.approx(1e-2)
    assert mid.L == 6.0
    assert mid.Nx == 128
    assert not _step_underflow(a, mid)
    # a midpoint indistinguishable from the accepted stage signals a wall
    close = StageSpec(1e-5, 1e-1 * (1.0 + 1e-5), 4.0, 64, 8)
    assert _step_underflow(a, close)
    # asymmetric domains midpoint their left edge too
    c = StageSpec(1.0, 1e-1, 8.0, 64, 8, x_lo=-2.0)
    mid2 = _midpoint_stage(a, c)
    assert mid2.x_lo == pytest.approx(-3.0)
