"""Periodic mean-zero shear flow alpha(y) and the wave-speed bounds it induces.

The flow is a finite trigonometric polynomial

    alpha(y) = sum_k a_k cos(2 pi k y) + b_k sin(2 pi k y),   k >= 1,

so the mean over one period is exactly zero and 1-periodicity is exact by
construction.  Everything downstream (barriers, solver stability, pinning)
depends on the induced bounds c0 = c + min alpha and c1 = c + max alpha.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

__all__ = [
    "FlowProfile",
    "WaveParams",
    "SpeedViolation",
    "make_flow",
    "speed_bounds",
    "validate_speed",
]

# extrema located on a dense scan, then polished; conservative rounding applied
_SCAN_POINTS = 1_000_000
_EXTREMA_TOL = 1e-10


@dataclass(frozen=True)
class FlowProfile:
    """Mean-zero 1-periodic shear flow given by its Fourier amplitudes."""

    fourier_cos: tuple[float, ...]
    fourier_sin: tuple[float, ...]
    min_alpha: float
    max_alpha: float
    max_abs_dy: float

    def __call__(self, y):
        """Evaluate alpha(y); vectorized over y."""
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(y)
        for k, a in enumerate(self.fourier_cos, start=1):
            if a != 0.0:
                out = out + a * np.cos(2.0 * np.pi * k * y)
        for k, b in enumerate(self.fourier_sin, start=1):
            if b != 0.0:
                out = out + b * np.sin(2.0 * np.pi * k * y)
        return out

    def derivative(self, y):
        """Evaluate alpha'(y); vectorized over y."""
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(y)
        for k, a in enumerate(self.fourier_cos, start=1):
            if a != 0.0:
                out = out - a * 2.0 * np.pi * k * np.sin(2.0 * np.pi * k * y)
        for k, b in enumerate(self.fourier_sin, start=1):
            if b != 0.0:
                out = out + b * 2.0 * np.pi * k * np.cos(2.0 * np.pi * k * y)
        return out

    @property
    def is_trivial(self) -> bool:
        return all(a == 0.0 for a in self.fourier_cos) and all(
            b == 0.0 for b in self.fourier_sin
        )

    def scaled(self, amplitude: float) -> "FlowProfile":
        """Flow with every Fourier amplitude multiplied by `amplitude` >= 0."""
        if amplitude < 0.0:
            raise ValueError("amplitude must be >= 0")
        return make_flow(
            [amplitude * a for a in self.fourier_cos],
            [amplitude * b for b in self.fourier_sin],
        )

    def as_config(self) -> dict:
        return {"cos": list(self.fourier_cos), "sin": list(self.fourier_sin)}


def _polish_extremum(flow_eval, y0: float, sign: float) -> float:
    """Refine a scanned extremum by bounded scalar minimization around y0."""
    h = 2.0 / _SCAN_POINTS
    res = minimize_scalar(
        lambda y: sign * flow_eval(y),
        bounds=(y0 - h, y0 + h),
        method="bounded",
        options={"xatol": 1e-14},
    )
    return float(sign * res.fun)


def make_flow(cos_amps, sin_amps) -> FlowProfile:
    """Build a FlowProfile from cosine/sine amplitude lists (mode k >= 1).

    Extrema are located by a dense scan plus local refinement and rounded
    conservatively (min down, max up) by the extremum tolerance, since c0
    enters solver stability bounds.
    """
    cos_amps = tuple(float(a) for a in cos_amps)
    sin_amps = tuple(float(b) for b in sin_amps)
    if not all(np.isfinite(cos_amps)) or not all(np.isfinite(sin_amps)):
        raise ValueError("flow amplitudes must be finite")

    if not cos_amps and not sin_amps:
        return FlowProfile(cos_amps, sin_amps, 0.0, 0.0, 0.0)

    probe = FlowProfile(cos_amps, sin_amps, 0.0, 0.0, 0.0)
    y = np.linspace(0.0, 1.0, _SCAN_POINTS, endpoint=False)
    vals = probe(y)
    dvals = probe.derivative(y)

    lo = _polish_extremum(probe, float(y[np.argmin(vals)]), 1.0)
    hi = _polish_extremum(probe, float(y[np.argmax(vals)]), -1.0)
    dmax = _polish_extremum(lambda t: np.abs(probe.derivative(t)),
                            float(y[np.argmax(np.abs(dvals))]), -1.0)

    return FlowProfile(
        cos_amps,
        sin_amps,
        min_alpha=lo - _EXTREMA_TOL,
        max_alpha=hi + _EXTREMA_TOL,
        max_abs_dy=dmax + _EXTREMA_TOL,
    )


def speed_bounds(flow: FlowProfile, c: float) -> tuple[float, float, float]:
    """Return (c_star, c0, c1) = (-min alpha, c + min alpha, c + max alpha)."""
    c_star = -flow.min_alpha
    return c_star, c + flow.min_alpha, c + flow.max_alpha


@dataclass(frozen=True)
class SpeedViolation:
    """Structured rejection: the wave speed does not clear the flow minimum."""

    c: float
    c_star: float

    def __str__(self) -> str:
        return f"wave speed c={self.c} must exceed c*={self.c_star} strictly"


@dataclass(frozen=True)
class WaveParams:
    """Physical and truncation parameters of one solve.

    m: conductivity exponent (> 0, != 1); c: wave speed; delta: lower
    regularization level; L: half-length of the truncated cylinder; K:
    pinning mass.  c_star/c0/c1 are derived from the flow at construction.
    """

    m: float
    c: float
    delta: float
    L: float
    K: float = 100.0
    c_star: float = field(default=0.0)
    c0: float = field(default=0.0)
    c1: float = field(default=0.0)

    @classmethod
    def from_flow(cls, flow: FlowProfile, *, m: float, c: float, delta: float,
                  L: float, K: float = 100.0) -> "WaveParams":
        if m <= 0.0 or m == 1.0:
            raise ValueError("conductivity exponent m must be positive and != 1")
        if c <= 0.0:
            raise ValueError("wave speed c must be positive")
        if delta < 0.0:
            raise ValueError("regularization delta must be >= 0")
        if L <= 0.0:
            raise ValueError("half-length L must be positive")
        c_star, c0, c1 = speed_bounds(flow, c)
        return cls(m=m, c=c, delta=delta, L=L, K=K,
                   c_star=c_star, c0=c0, c1=c1)

    def with_delta(self, delta: float) -> "WaveParams":
        return WaveParams(m=self.m, c=self.c, delta=delta, L=self.L, K=self.K,
                          c_star=self.c_star, c0=self.c0, c1=self.c1)

    def with_L(self, L: float) -> "WaveParams":
        return WaveParams(m=self.m, c=self.c, delta=self.delta, L=L, K=self.K,
                          c_star=self.c_star, c0=self.c0, c1=self.c1)


def validate_speed(params: WaveParams, margin: float = 0.0):
    """Accept iff c > c_star + margin strictly; else return a SpeedViolation."""
    if params.c > params.c_star + margin:
        return None
    return SpeedViolation(c=params.c, c_star=params.c_star)
