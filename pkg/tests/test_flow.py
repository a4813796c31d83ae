"""Shear-flow profiles and the wave-speed bounds they induce."""

import numpy as np
import pytest

from pmewaves.flow import (
    FlowProfile,
    WaveParams,
    make_flow,
    speed_bounds,
    validate_speed,
)


def test_trivial_flow():
    flow = make_flow([], [])
    assert flow.is_trivial
    assert flow.min_alpha == 0.0 and flow.max_alpha == 0.0
    assert flow(0.37) == 0.0


def test_single_cosine_extrema():
    flow = make_flow([0.7], [])
    assert flow.min_alpha == pytest.approx(-0.7, abs=1e-9)
    assert flow.max_alpha == pytest.approx(0.7, abs=1e-9)
    assert flow.max_abs_dy == pytest.approx(2.0 * np.pi * 0.7, abs=1e-8)
    # conservative rounding: reported bounds enclose the true extrema
    y = np.linspace(0.0, 1.0, 10001)
    vals = flow(y)
    assert vals.min() >= flow.min_alpha
    assert vals.max() <= flow.max_alpha


def test_mean_zero_and_periodicity():
    flow = make_flow([0.3, -0.1], [0.4])
    y = np.arange(4096) / 4096
    assert abs(flow(y).mean()) < 1e-14
    assert flow(0.25) == pytest.approx(flow(1.25), abs=1e-12)


def test_scaled_flow():
    flow = make_flow([0.3], [0.4])
    half = flow.scaled(0.5)
    y = np.linspace(0.0, 1.0, 64)
    assert np.allclose(half(y), 0.5 * flow(y))
    assert half.min_alpha == pytest.approx(0.5 * flow.min_alpha, abs=1e-9)
    with pytest.raises(ValueError):
        flow.scaled(-1.0)


def test_derivative_matches_finite_difference():
    flow = make_flow([0.3], [0.4])
    y = np.linspace(0.0, 1.0, 17)
    h = 1e-6
    fd = (flow(y + h) - flow(y - h)) / (2.0 * h)
    assert np.max(np.abs(fd - flow.derivative(y))) < 1e-7


def test_speed_bounds_and_validation():
    flow = make_flow([0.3], [0.4])  # |alpha| max = 0.5
    c_star, c0, c1 = speed_bounds(flow, 4.0)
    assert c_star == pytest.approx(0.5, abs=1e-9)
    assert c0 == pytest.approx(3.5, abs=1e-9)
    assert c1 == pytest.approx(4.5, abs=1e-9)

    ok = WaveParams.from_flow(flow, m=2.0, c=4.0, delta=1e-2, L=8.0)
    assert validate_speed(ok) is None
    slow = WaveParams.from_flow(flow, m=2.0, c=0.4, delta=1e-2, L=8.0)
    violation = validate_speed(slow)
    assert violation is not None
    assert "c*" in str(violation)


def test_waveparams_rejects_bad_inputs():
    flow = make_flow([], [])
    with pytest.raises(ValueError):
        WaveParams.from_flow(flow, m=1.0, c=1.0, delta=1e-2, L=8.0)
    with pytest.raises(ValueError):
        WaveParams.from_flow(flow, m=2.0, c=-1.0, delta=1e-2, L=8.0)
    with pytest.raises(ValueError):
        WaveParams.from_flow(flow, m=2.0, c=1.0, delta=-1e-2, L=8.0)
    with pytest.raises(ValueError):
        WaveParams.from_flow(flow, m=2.0, c=1.0, delta=1e-2, L=0.0)
