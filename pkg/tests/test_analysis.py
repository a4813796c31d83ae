"""Post-solve diagnostics on synthetic and analytic fields."""

import numpy as np
import pytest

from pmewaves.analysis import (
    align_translates,
    expansion_fit,
    flux_invariant,
    free_boundary_extract,
    monotonicity_report,
    oscillation_profile,
    pin_translate,
)
from pmewaves.fields import Grid, ScalarField2D
from pmewaves.flow import WaveParams, make_flow
from pmewaves.planar import profile_from_anchor

FLOW0 = make_flow([], [])


def _linear_field(c=2.0, b=5.0, Nx=128, Ny=8, L=8.0):
    g = Grid.symmetric(Nx, Ny, L)
    vals = np.tile((c * g.x + b)[:, None], (1, Ny))
    return ScalarField2D(g, vals)


def test_pin_translate_linear_oracle():
    c, b, K = 2.0, 5.0, 12.0
    p = _linear_field(c, b)
    pin = pin_translate(p, K)
    # line mass of c x + b is c x + b, so x* = (K - b)/c
    assert pin.x_star == pytest.approx((K - b) / c, abs=1e-10)
    assert pin.K1 == pytest.approx(K, abs=1e-8)
    assert pin.K2 == pytest.approx(K, abs=1e-8)
    # idempotence: re-pinning shifts by less than a sub-cell tolerance
    pin2 = pin_translate(pin.field, K)
    assert abs(pin2.x_star) < 1e-8
    with pytest.raises(ValueError):
        pin_translate(p, 1e6)


def test_monotonicity_report_extrema():
    p = _linear_field(c=2.0, b=20.0)
    params = WaveParams.from_flow(FLOW0, m=2.0, c=2.0, delta=1e-2, L=8.0)
    rep = monotonicity_report(p, params)
    assert rep.min_px == pytest.approx(2.0, abs=1e-10)
    assert rep.max_px == pytest.approx(2.0, abs=1e-10)
    assert rep.min_px_positive_set == pytest.approx(2.0, abs=1e-10)


def test_flux_invariant_planar_exact_value():
    # F = u^{1/m}(u' - c) collapses to -c delta^{1/m} along the slope law
    m, c, delta = 2.0, 1.0, 1e-2
    params = WaveParams.from_flow(FLOW0, m=m, c=c, delta=delta, L=16.0)
    g = Grid.symmetric(512, 8, 16.0)
    prof = profile_from_anchor(c, m, delta, 0.0, 1.0, x_max=17.0)
    vals = np.tile(prof(g.x)[:, None], (1, 8))
    px = np.tile(prof.derivative(g.x)[:, None], (1, 8))
    fr = flux_invariant(ScalarField2D(g, vals), FLOW0, params, px_values=px)
    assert abs(fr.C_delta + c * delta ** (1.0 / m)) < 1e-8
    assert fr.drift < 1e-8  # analytic derivative: no differencing error


def test_oscillation_profile_planar_is_silent():
    p = _linear_field(c=1.0, b=10.0)
    params = WaveParams.from_flow(FLOW0, m=2.0, c=1.0, delta=1e-2, L=8.0)
    osc = oscillation_profile(p, params, x_ref=-8.0)
    assert np.max(osc.O) == 0.0
    assert osc.exponent is None  # fit refused on vanishing oscillation
    assert osc.fourier_constant == 0.0


def test_oscillation_decay_fit_on_synthetic():
    g = Grid(256, 8, 1.0, 121.0)
    base = 2.0 * g.x
    wiggle = (5.0 / g.x)[:, None] * np.cos(2.0 * np.pi * g.y)[None, :]
    p = ScalarField2D(g, np.maximum(base[:, None] + wiggle, 1e-6))
    params = WaveParams.from_flow(FLOW0, m=2.0, c=2.0, delta=1e-2, L=50.0)
    osc = oscillation_profile(p, params, x_ref=0.0)
    assert osc.exponent == pytest.approx(-1.0, abs=0.05)


def test_free_boundary_levels_ordered_and_constant():
    p = _linear_field(c=2.0, b=5.0)
    params = WaveParams.from_flow(FLOW0, m=2.0, c=2.0, delta=1e-2, L=8.0)
    fb = free_boundary_extract([(1e-2, p)], (0.1, 0.5, 1.0), params)
    # monotone field: larger level sits further right
    assert np.all(fb.curves[0] <= fb.curves[1] + 1e-12)
    assert np.all(fb.curves[1] <= fb.curves[2] + 1e-12)
    # y-independent field: constant curves, zero Lipschitz estimate
    assert fb.lipschitz == pytest.approx(0.0, abs=1e-12)
    # linear extrapolation of I_eps = I + eps/c recovers the exact root
    assert np.max(np.abs(fb.I - (-5.0 / 2.0))) < 1e-10
    with pytest.raises(ValueError):
        free_boundary_extract([(1e-2, p)], (1e-3,), params)  # below 2 delta


def test_expansion_fit_recovers_synthetic_coefficients():
    m, c = 2.0, 1.0
    q1, qs = -0.35, 1.7
    g = Grid(512, 8, 2.0, 80.0)
    mean = c * g.x + q1 * g.x ** 0.5 + qs
    p = ScalarField2D(g, np.tile(mean[:, None], (1, 8)))
    params = WaveParams.from_flow(FLOW0, m=m, c=c, delta=1e-2, L=40.0)
    fit = expansion_fit(p, params)
    assert fit.N == 1 and fit.exponents == (0.5,)
    assert fit.coefficients[0] == pytest.approx(q1, rel=1e-6)
    assert fit.q_star == pytest.approx(qs, rel=1e-5)
    assert max(fit.stability) < 1e-6
    assert fit.lam == pytest.approx(q1 * c ** 0.5 * 0.5, rel=1e-6)
    # m = 1 and below refused
    with pytest.raises(ValueError):
        expansion_fit(p, WaveParams.from_flow(FLOW0, m=0.5, c=c,
                                              delta=1e-2, L=40.0))


def test_align_translates_recovers_constructed_shift():
    g = Grid.symmetric(256, 8, 8.0)
    prof = profile_from_anchor(1.0, 2.0, 1e-2, 0.0, 1.0, x_max=9.0)
    p1 = ScalarField2D(g, np.tile(prof(g.x)[:, None], (1, 8)))
    tau_true = 0.37
    p2 = ScalarField2D(g, np.tile(prof(g.x - tau_true)[:, None], (1, 8)))
    tau, res = align_translates(p2, p1)
    assert tau == pytest.approx(tau_true, abs=g.hx / 10.0)
    assert res < 1e-3  # interpolation error only (largest at the interface)
    # antisymmetry of the recovered shift
    tau_back, _ = align_translates(p1, p2)
    assert tau + tau_back == pytest.approx(0.0, abs=g.hx / 10.0)
    # identical fields align at zero
    tau0, res0 = align_translates(p1, p1)
    assert abs(tau0) < 1e-8 and res0 < 1e-10
