"""Planar profile family: slope law, quadrature inversion, barriers."""

import numpy as np
import pytest

from pmewaves.flow import WaveParams, make_flow
from pmewaves.planar import (
    barrier_pair,
    envelope_limit,
    profile_from_anchor,
    slope_law,
)


def test_slope_law_basics():
    # delta = 0: constant slope C
    assert slope_law(2.0, 2.0, 0.0, 1.0) == 2.0
    # vanishes at the floor, monotone increasing in u, approaches C
    u = np.geomspace(1e-2, 1e3, 256)
    v = slope_law(3.0, 2.0, 1e-2, u)
    assert v[0] == pytest.approx(0.0, abs=1e-14)
    assert np.all(np.diff(v) > 0)
    assert v[-1] == pytest.approx(3.0, rel=1e-2)
    with pytest.raises(ValueError):
        slope_law(1.0, 2.0, 1e-2, 1e-3)


def test_profile_satisfies_ode():
    prof = profile_from_anchor(1.5, 2.0, 1e-2, 0.0, 1.0, x_max=20.0)
    xs = np.linspace(-3.0, 18.0, 64)
    res = prof.ode_residual(xs)
    assert np.max(np.abs(res)) < 1e-5


def test_profile_anchor_and_inverse():
    prof = profile_from_anchor(2.0, 2.5, 1e-3, 1.0, 4.0, x_max=30.0)
    assert prof(1.0) == pytest.approx(4.0, abs=1e-11)
    for value in (2e-3, 0.5, 4.0, 20.0):
        x = prof.x_at(value)
        assert prof(x) == pytest.approx(value, rel=1e-9)
    # nondecreasing everywhere, strictly increasing once clear of the floor
    xs = np.linspace(-5.0, 25.0, 512)
    vals = prof(xs)
    assert np.all(np.diff(vals) >= 0)
    above = vals[:-1] > 1e-3 * (1.0 + 1e-6)
    assert np.all(np.diff(vals)[above] > 0)


def test_left_tail_asymptote():
    delta, C, m = 1e-2, 1.0, 2.0
    prof = profile_from_anchor(C, m, delta, 0.0, 1.0, x_max=5.0)
    x_far = prof.x_cut - 0.05  # a few tail e-folding scales m delta / C
    # approaches the floor exponentially from above
    assert prof(x_far) > delta
    assert prof(x_far) - delta < 1e-6
    assert prof.derivative(x_far) == pytest.approx(
        C * (prof(x_far) - delta) / (m * delta), rel=1e-12)


def test_delta_zero_exact_linear_wave():
    prof = profile_from_anchor(2.0, 2.0, 0.0, 0.0, 3.0, x_max=10.0)
    xs = np.linspace(-5.0, 10.0, 301)
    exact = np.maximum(3.0 + 2.0 * xs, 0.0)
    assert np.max(np.abs(prof(xs) - exact)) < 1e-12


def test_barrier_pair_ordering_and_boundary_data():
    flow = make_flow([0.3], [0.4])
    params = WaveParams.from_flow(flow, m=2.0, c=4.0, delta=1e-2, L=8.0)
    p_minus, p_plus, A, B = barrier_pair(params)
    xs = np.linspace(-8.0, 8.0, 801)
    assert np.all(p_minus(xs) <= p_plus(xs) + 1e-11)
    assert p_plus(8.0) == pytest.approx(B, abs=1e-12)
    assert p_minus(8.0) == pytest.approx(B, rel=1e-9)
    assert p_minus(-8.0) <= A <= p_plus(-8.0)


def test_barrier_pair_asymmetric_span():
    flow = make_flow([0.3], [0.4])
    params = WaveParams.from_flow(flow, m=2.0, c=4.0, delta=1e-2, L=8.0)
    p_minus, p_plus, A, B = barrier_pair(params, span=(-2.0, 14.0))
    assert p_plus(14.0) == pytest.approx(B, abs=1e-12)
    with pytest.raises(ValueError):
        barrier_pair(params, span=(1.0, 14.0))  # anchor outside span


def test_envelope_limit_shrinks_with_delta():
    dists = [envelope_limit(1.0, 2.0, 10.0, d, 15.0)[2]
             for d in (1e-1, 1e-2, 1e-3)]
    assert dists[0] > dists[1] > dists[2] > 0.0
    assert envelope_limit(1.0, 2.0, 10.0, 0.0, 15.0)[2] == 0.0
