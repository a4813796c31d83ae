"""Grids, discrete operators, transforms, and field persistence."""

import numpy as np
import pytest

from pmewaves.fields import (
    Grid,
    NonPositiveFieldError,
    ScalarField2D,
    advective_gradient,
    bump_test,
    diff_ops,
    load_field,
    residual_phi,
    save_field,
    upwind_rows_from_floor,
    w_inverse,
    w_transform,
    weak_residual,
)
from pmewaves.flow import WaveParams, make_flow
from pmewaves.planar import profile_from_anchor


def _grid(Nx=64, Ny=16, L=4.0):
    return Grid.symmetric(Nx, Ny, L)


def test_grid_properties_and_shift():
    g = Grid(33, 8, -2.0, 6.0)
    assert g.hx == pytest.approx(0.25)
    assert g.hy == pytest.approx(0.125)
    assert g.x[0] == -2.0 and g.x[-1] == 6.0
    s = g.shifted(1.5)
    assert s.x_lo == -3.5 and s.x_hi == 4.5
    assert s.hx == g.hx
    with pytest.raises(ValueError):
        Grid(4, 8, 0.0, 1.0)  # Nx too small
    with pytest.raises(ValueError):
        Grid(33, 7, 0.0, 1.0)  # odd Ny


def test_diff_ops_exact_on_quadratic_and_trig():
    g = _grid()
    X = g.x[:, None]
    Y = g.y[None, :]
    p = ScalarField2D(g, 1.0 + 0.5 * X**2 + np.cos(2.0 * np.pi * Y))
    px, py, lap = diff_ops(p)
    # centered differences are exact on quadratics in x
    assert np.max(np.abs(px.values[1:-1] - X[1:-1])) < 1e-12
    # trigonometric y-derivatives converge at second order: quadrupling
    # error reduction when Ny doubles
    def y_errors(Ny):
        gf = _grid(Ny=Ny)
        Yf = gf.y[None, :]
        Xf = gf.x[:, None]
        pf = ScalarField2D(gf, 1.0 + 0.5 * Xf**2 + np.cos(2.0 * np.pi * Yf))
        _, pyf, lapf = diff_ops(pf)
        e_py = np.max(np.abs(
            pyf.values + 2.0 * np.pi * np.sin(2.0 * np.pi * Yf)))
        e_lap = np.max(np.abs(
            lapf.values[1:-1]
            - (1.0 - 4.0 * np.pi**2 * np.cos(2.0 * np.pi * Yf))))
        return e_py, e_lap

    coarse = y_errors(16)
    fine = y_errors(32)
    assert coarse[0] / fine[0] > 3.5
    assert coarse[1] / fine[1] > 3.5


def test_residual_vanishes_on_planar_solution():
    # the planar profile solves the 1-D reduction; its discrete residual is
    # second-order small on centered rows
    flow = make_flow([], [])
    params = WaveParams.from_flow(flow, m=2.0, c=1.0, delta=5e-2, L=4.0)
    g = _grid(Nx=128, Ny=8)
    prof = profile_from_anchor(1.0, 2.0, 5e-2, 0.0, 1.0, x_max=5.0)
    p = ScalarField2D(g, np.tile(prof(g.x)[:, None], (1, 8)))
    r = residual_phi(p, flow, params)
    assert np.max(np.abs(r.values[1:-1])) < 5e-3

    g2 = _grid(Nx=256, Ny=8)
    p2 = ScalarField2D(g2, np.tile(prof(g2.x)[:, None], (1, 8)))
    r2 = residual_phi(p2, flow, params)
    # second-order convergence of the truncation error
    ratio = np.max(np.abs(r.values[1:-1])) / np.max(np.abs(r2.values[1:-1]))
    assert ratio > 3.0


def test_residual_rejects_nonpositive_field():
    g = _grid()
    vals = np.ones((g.Nx, g.Ny))
    vals[10, 3] = -1e-8
    flow = make_flow([], [])
    params = WaveParams.from_flow(flow, m=2.0, c=1.0, delta=1e-2, L=4.0)
    with pytest.raises(NonPositiveFieldError):
        residual_phi(ScalarField2D(g, vals), flow, params)


def test_upwind_mask_and_scheme_markers():
    g = _grid(Nx=64, Ny=8)
    flow = make_flow([], [])
    params = WaveParams.from_flow(flow, m=2.0, c=1.0, delta=1e-3, L=4.0)
    floor = np.full(g.Nx, 10.0)
    floor[:10] = 1e-3  # Peclet = c*hx/(m*p) >> 2 on the tail
    mask = upwind_rows_from_floor(floor, g, params)
    assert mask[1] and mask[5]
    assert not mask[0] and not mask[-1] and not mask[30]

    vals = np.tile(np.linspace(1.0, 2.0, g.Nx)[:, None], (1, g.Ny))
    px, scheme = advective_gradient(vals, g, params, mask)
    assert scheme[1, 0] == 1       # first-order at the first interior row
    assert scheme[5, 0] == 2       # second-order upwind inside the mask
    assert scheme[30, 0] == 0      # centered elsewhere
    # both schemes are exact on linear data
    slope = (2.0 - 1.0) / (g.x_hi - g.x_lo)
    assert np.max(np.abs(px[1:-1] - slope)) < 1e-12


def test_w_transform_roundtrip():
    p = np.linspace(0.0, 5.0, 101)
    for m in (1.5, 2.0, 2.5):
        assert np.allclose(w_inverse(w_transform(p, m), m), p, atol=1e-12)
    with pytest.raises(ValueError):
        w_transform(np.array([-1.0]), 2.0)


def test_weak_residual_small_for_planar_solution():
    flow = make_flow([], [])
    params = WaveParams.from_flow(flow, m=2.0, c=1.0, delta=1e-2, L=4.0)
    prof = profile_from_anchor(1.0, 2.0, 1e-2, 0.0, 1.0, x_max=5.0)
    psi = bump_test(0.5, 0.5, 0.4)

    def resid(Nx, Ny):
        g = _grid(Nx=Nx, Ny=Ny)
        p = ScalarField2D(g, np.tile(prof(g.x)[:, None], (1, Ny)))
        return weak_residual(p, flow, params, psi)

    # the bump's derivatives spike near its support edge, so the y-rule
    # needs enough points; convergence there is faster than any power
    assert abs(resid(512, 64)) < 5e-3
    assert abs(resid(512, 64)) < 0.1 * abs(resid(256, 32))
    g = _grid(Nx=256, Ny=16)
    p = ScalarField2D(g, np.tile(prof(g.x)[:, None], (1, 16)))
    with pytest.raises(ValueError):
        weak_residual(p, flow, params, bump_test(3.9, 0.5, 0.4))


def test_save_load_roundtrip_exact(tmp_path):
    g = Grid(16, 8, -1.0, 3.0)
    rng = np.random.default_rng(7)
    p = ScalarField2D(g, np.exp(rng.standard_normal((16, 8))))
    path = tmp_path / "field.csv"
    save_field(p, path)
    q = load_field(path)
    assert q.grid == g
    assert np.array_equal(q.values, p.values)  # bit-exact round trip
    assert path.read_text().splitlines()[0] == "x,y,p"
