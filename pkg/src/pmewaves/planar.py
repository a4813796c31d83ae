"""Planar barrier profiles: the one-dimensional family -m u u'' + C u' = (u')^2.

With left condition u(-inf) = delta the phase-plane reduction
dv/du = (C - v)/(m u), v = u', has the closed-form slope law

    v(u) = C (1 - (delta/u)^(1/m)),

so the profile is recovered as x(u) = x0 - int_u^M ds / v(s) by quadrature,
eliminating the stiff left tail that direct shooting would face.  Below
u = delta (1 + 1e-6) the quadrature is replaced by the analytic asymptote
u ~ delta + const * exp(C x / (m delta)).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .flow import WaveParams

__all__ = [
    "PlanarProfile",
    "slope_law",
    "profile_from_anchor",
    "barrier_pair",
    "envelope_limit",
]

_UGRID_POINTS = 8192
_TAIL_FACTOR = 1e-6  # switch to the analytic tail below delta*(1+this)
_GL_ORDER = 8


def slope_law(C: float, m: float, delta: float, u):
    """Profile slope v(u) = C (1 - (delta/u)^(1/m)); constant C when delta=0.

    Accepts scalar or array u; rejects u < delta (outside the profile range).
    """
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr < delta):
        raise ValueError("slope_law requires u >= delta")
    if delta == 0.0:
        if np.any(u_arr <= 0.0):
            raise ValueError("slope_law with delta=0 requires u > 0")
        v = np.full_like(u_arr, C)
    else:
        v = C * (1.0 - (delta / u_arr) ** (1.0 / m))
    return v if isinstance(u, np.ndarray) else float(v)


@dataclass(frozen=True)
class PlanarProfile:
    """Monotone increasing profile u(x) with u(-inf)=delta, stored as a
    Hermite spline over quadrature nodes plus an analytic left tail."""

    C: float
    m: float
    delta: float
    x0: float
    M: float
    _spline: CubicHermiteSpline = field(repr=False)
    x_cut: float = field(repr=False)
    u_cut: float = field(repr=False)
    x_max: float

    def __call__(self, x):
        """Evaluate u(x); vectorized, clamped to the tail asymptote on the left."""
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty_like(x_arr)
        tail = x_arr < self.x_cut
        out[~tail] = self._spline(x_arr[~tail])
        if self.delta > 0.0:
            out[tail] = self.delta + (self.u_cut - self.delta) * np.exp(
                self.C * (x_arr[tail] - self.x_cut) / (self.m * self.delta)
            )
        else:
            out[tail] = 0.0
        return out if np.ndim(x) else float(out[0])

    def derivative(self, x):
        """Evaluate u'(x) = v(u(x)) through the slope law (analytic)."""
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        u = np.atleast_1d(self(x_arr))
        out = np.empty_like(x_arr)
        tail = x_arr < self.x_cut
        out[~tail] = slope_law(self.C, self.m, self.delta, u[~tail])
        if self.delta > 0.0:
            # tail asymptote: u' = C (u - delta) / (m delta)
            out[tail] = self.C * (u[tail] - self.delta) / (self.m * self.delta)
        else:
            out[tail] = 0.0
        return out if np.ndim(x) else float(out[0])

    def x_at(self, value: float) -> float:
        """Inverse evaluation: the x with u(x) = value (u is strictly
        increasing).  Values at or below the tail cutoff use the analytic
        asymptote."""
        if value <= self.delta:
            raise ValueError("profile never reaches values <= delta")
        if self.delta > 0.0 and value <= self.u_cut:
            return self.x_cut + self.m * self.delta / self.C * np.log(
                (value - self.delta) / (self.u_cut - self.delta)
            )
        from scipy.optimize import brentq

        lo = self.x_cut
        hi = max(self.x_max, self.x0) + 1.0
        while self(hi) < value:
            hi += max(1.0, (value - self(hi)) / self.C)
        return float(brentq(lambda t: self(t) - value, lo, hi, xtol=1e-13))

    def ode_residual(self, x, h: float = 1e-2):
        """Finite-difference residual -m u u'' + C u' - (u')^2 at x,
        using fourth-order 5-point stencils (the wide step keeps the
        cancellation error of u'' below the truncation budget)."""
        x_arr = np.asarray(x, dtype=float)
        f = [self(x_arr + k * h) for k in (-2, -1, 0, 1, 2)]
        up = (f[0] - 8.0 * f[1] + 8.0 * f[3] - f[4]) / (12.0 * h)
        upp = (-f[0] + 16.0 * f[1] - 30.0 * f[2] + 16.0 * f[3] - f[4]) \
            / (12.0 * h**2)
        return -self.m * f[2] * upp + self.C * up - up**2

    def to_csv(self, path, x):
        """Write columns (x, u, u') at the requested x samples."""
        x_arr = np.asarray(x, dtype=float)
        u = np.atleast_1d(self(x_arr))
        up = np.atleast_1d(self.derivative(x_arr))
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "u", "du_dx"])
            for xi, ui, vi in zip(x_arr, u, up):
                writer.writerow([f"{xi:.17g}", f"{ui:.17g}", f"{vi:.17g}"])


def _x_of_u_quadrature(C, m, delta, u_nodes):
    """Cumulative x(u) over the node grid, via composite Gauss-Legendre in
    s = log(u - delta).  The integrand e^s / v(delta + e^s) is smooth in s,
    so a fixed-order rule per (narrow, log-spaced) interval is well past the
    1e-11 tolerance target."""
    s_nodes = np.log(u_nodes - delta)
    gl_x, gl_w = np.polynomial.legendre.leggauss(_GL_ORDER)
    a = s_nodes[:-1]
    b = s_nodes[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    s_eval = mid[:, None] + half[:, None] * gl_x[None, :]
    u_eval = delta + np.exp(s_eval)
    integrand = np.exp(s_eval) / slope_law(C, m, delta, u_eval)
    pieces = half * (integrand @ gl_w)
    x = np.empty_like(u_nodes)
    x[0] = 0.0
    np.cumsum(pieces, out=x[1:])
    return x


def profile_from_anchor(C: float, m: float, delta: float, x0: float, M: float,
                        x_max: float | None = None) -> PlanarProfile:
    """Profile through u(x0)=M with u(-inf)=delta, valid up to x_max.

    delta=0 returns the exact piecewise-linear wave [M + C(x-x0)]^+.
    """
    if C <= 0.0 or m <= 0.0:
        raise ValueError("profile_from_anchor requires C>0 and m>0")
    if M <= delta:
        raise ValueError("anchor value M must exceed delta")
    if x_max is None:
        x_max = x0 + 4.0 * max(abs(x0), 1.0) + 64.0

    if delta == 0.0:
        # exact: u = [M + C(x-x0)]^+, slope C on the support
        x_knee = x0 - M / C
        xs = np.array([x_knee, x_max + 1.0])
        us = np.array([0.0, M + C * (x_max + 1.0 - x0)])
        spline = CubicHermiteSpline(xs, us, np.array([C, C]))
        return PlanarProfile(C=C, m=m, delta=delta, x0=x0, M=M,
                             _spline=spline, x_cut=x_knee, u_cut=0.0,
                             x_max=x_max)

    u_cut = delta * (1.0 + _TAIL_FACTOR)
    u_top = max(M, delta + 1.0) + C * max(x_max - x0, 0.0) + 1.0
    u_nodes = delta + np.geomspace(u_cut - delta, u_top - delta, _UGRID_POINTS)
    u_nodes = np.unique(np.concatenate([u_nodes, [M]]))
    x_nodes = _x_of_u_quadrature(C, m, delta, u_nodes)
    i_anchor = int(np.searchsorted(u_nodes, M))
    x_nodes = x_nodes - x_nodes[i_anchor] + x0
    spline = CubicHermiteSpline(x_nodes, u_nodes,
                                slope_law(C, m, delta, u_nodes))
    return PlanarProfile(C=C, m=m, delta=delta, x0=x0, M=M,
                         _spline=spline, x_cut=float(x_nodes[0]),
                         u_cut=float(u_nodes[0]), x_max=x_max)


def barrier_pair(params: WaveParams, eps_shift: float = 0.0,
                 A_weight: float = 0.5, span: tuple | None = None):
    """Planar super/subsolution pair plus the boundary data they induce.

    p_plus is the slow profile (drift c0 - eps_shift) anchored at (0, 1);
    B = p_plus(x_hi).  p_minus is the fast profile (drift c1 + eps_shift)
    anchored so p_minus(x_hi) = B.  A interpolates the two left-boundary
    values with convex weight A_weight on p_plus (0.5 = midpoint).

    span gives the domain (x_lo, x_hi); default is the symmetric
    (-params.L, params.L).  An asymmetric span with x_lo close to the
    anchor keeps the interface near the left boundary, spending the grid
    on the far field instead of the flat tail.

    Returns (p_minus, p_plus, A, B); raises if the ordering
    p_minus <= p_plus fails anywhere on a check grid.
    """
    if params.delta <= 0.0:
        raise ValueError("barrier_pair requires delta > 0")
    if not 0.0 <= A_weight <= 1.0:
        raise ValueError("A_weight must lie in [0, 1]")
    c_lo = params.c0 - eps_shift
    c_hi = params.c1 + eps_shift
    if c_lo <= 0.0:
        raise ValueError("effective slow drift c0 - eps_shift must be positive")
    if span is None:
        span = (-params.L, params.L)
    x_lo, x_hi = float(span[0]), float(span[1])
    if not x_lo < 0.0 < x_hi:
        raise ValueError("barrier span must contain the anchor x = 0")
    p_plus = profile_from_anchor(c_lo, params.m, params.delta, 0.0, 1.0,
                                 x_max=x_hi + 1.0)
    B = p_plus(x_hi)
    if B <= 1.0:
        raise ValueError("right boundary too close: boundary value <= 1")
    p_minus = profile_from_anchor(c_hi, params.m, params.delta, x_hi, B,
                                  x_max=x_hi + 1.0)
    A = A_weight * p_plus(x_lo) + (1.0 - A_weight) * p_minus(x_lo)

    xs = np.linspace(x_lo, x_hi, 2049)
    gap = p_plus(xs) - p_minus(xs)
    worst = float(gap.min())
    if worst < -1e-11 * max(B, 1.0):
        raise RuntimeError(
            f"barrier ordering p_minus <= p_plus violated by {-worst:.3e}; "
            "quadrature tolerance too loose"
        )
    return p_minus, p_plus, float(A), float(B)


def envelope_limit(C: float, m: float, K: float, delta: float, X: float,
                   n: int = 2001):
    """Distance of the delta-profile anchored at (0, K) from its sharp limit
    [K + C x]^+ on the window x in [-X, 0].

    Returns (xs, limit values, sup distance).  delta=0 gives distance 0.
    """
    xs = np.linspace(-X, 0.0, n)
    limit = np.maximum(K + C * xs, 0.0)
    if delta == 0.0:
        return xs, limit, 0.0
    prof = profile_from_anchor(C, m, delta, 0.0, K, x_max=1.0)
    dist = float(np.max(np.abs(prof(xs) - limit)))
    return xs, limit, dist
