"""Discrete fields on the truncated cylinder and the operators acting on them.

The domain is [x_lo, x_hi] x T^1: uniform in x with Dirichlet ends, uniform
periodic in y with spacing 1/Ny.  The x-interval is usually [-L, L] but is
kept general so that pinning can relabel coordinates exactly instead of
resampling.  All stencils are second-order centered, except that the
advection derivative switches to upwind where the cell Peclet number
c1*hx/(m*p) exceeds 2 (the operator loses ellipticity as p approaches the
regularization floor, and centered advection would oscillate there).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .flow import FlowProfile, WaveParams

__all__ = [
    "Grid",
    "ScalarField2D",
    "NonPositiveFieldError",
    "diff_ops",
    "advective_gradient",
    "upwind_rows_from_floor",
    "residual_phi",
    "w_transform",
    "w_inverse",
    "poisson_rhs",
    "weak_residual",
    "bump_test",
    "save_field",
    "load_field",
]

PECLET_LIMIT = 2.0


class NonPositiveFieldError(ValueError):
    """The field dipped to <= 0 where the operator requires positivity."""

    def __init__(self, min_value: float):
        self.min_value = min_value
        super().__init__(f"field not positive on interior (min = {min_value:.6e})")


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid: x in [x_lo, x_hi] with Nx nodes (Dirichlet ends),
    y in [0, 1) with Ny nodes (periodic)."""

    Nx: int
    Ny: int
    x_lo: float
    x_hi: float

    def __post_init__(self):
        if self.Nx < 8:
            raise ValueError("Nx must be >= 8")
        if self.Ny < 4 or self.Ny % 2 != 0:
            raise ValueError("Ny must be even and >= 4")
        if not self.x_hi > self.x_lo:
            raise ValueError("x_hi must exceed x_lo")

    @classmethod
    def symmetric(cls, Nx: int, Ny: int, L: float) -> "Grid":
        return cls(Nx=Nx, Ny=Ny, x_lo=-L, x_hi=L)

    @property
    def hx(self) -> float:
        return (self.x_hi - self.x_lo) / (self.Nx - 1)

    @property
    def hy(self) -> float:
        return 1.0 / self.Ny

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_lo, self.x_hi, self.Nx)

    @property
    def y(self) -> np.ndarray:
        return np.arange(self.Ny) / self.Ny

    def shifted(self, dx: float) -> "Grid":
        """Grid with x-coordinates relabeled by x -> x - dx (exact)."""
        return Grid(self.Nx, self.Ny, self.x_lo - dx, self.x_hi - dx)


@dataclass(frozen=True)
class ScalarField2D:
    """Values on a Grid, row-major (Nx, Ny); bc marks x-boundary handling."""

    grid: Grid
    values: np.ndarray
    bc: str = "free"  # "free" or "dirichlet"
    A: float = 0.0
    B: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.Nx, self.grid.Ny):
            raise ValueError(
                f"values shape {v.shape} != grid ({self.grid.Nx}, {self.grid.Ny})"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", v)

    def with_values(self, values: np.ndarray) -> "ScalarField2D":
        return replace(self, values=values)


def diff_ops(field: ScalarField2D):
    """(p_x, p_y, laplacian) by second-order stencils.

    y wraps periodically; x is centered inside and one-sided second-order at
    the Dirichlet ends (the Laplacian end rows use the 4-point one-sided
    second difference and are not relied on by any interior check).
    """
    g = field.grid
    p = field.values
    hx, hy = g.hx, g.hy

    px = np.empty_like(p)
    px[1:-1] = (p[2:] - p[:-2]) / (2.0 * hx)
    px[0] = (-3.0 * p[0] + 4.0 * p[1] - p[2]) / (2.0 * hx)
    px[-1] = (3.0 * p[-1] - 4.0 * p[-2] + p[-3]) / (2.0 * hx)

    # y-differences on the line-mean-removed field: identical in exact
    # arithmetic, far smaller floating point cancellation
    q = p - p.mean(axis=1, keepdims=True)
    py = (np.roll(q, -1, axis=1) - np.roll(q, 1, axis=1)) / (2.0 * hy)

    lap = np.empty_like(p)
    lap[1:-1] = (p[2:] - 2.0 * p[1:-1] + p[:-2]) / hx**2
    lap[0] = (2.0 * p[0] - 5.0 * p[1] + 4.0 * p[2] - p[3]) / hx**2
    lap[-1] = (2.0 * p[-1] - 5.0 * p[-2] + 4.0 * p[-3] - p[-4]) / hx**2
    lap += (np.roll(q, -1, axis=1) - 2.0 * q + np.roll(q, 1, axis=1)) / hy**2

    mk = lambda v: ScalarField2D(g, v, bc="free")
    return mk(px), mk(py), mk(lap)


def upwind_rows_from_floor(floor: np.ndarray, grid: Grid,
                           params: WaveParams) -> np.ndarray:
    """Rows whose certified local floor of p makes the cell Peclet number
    c1*hx/(m*floor) exceed the switch threshold.

    During Newton solves the floor is the planar subsolution p_minus(x): a
    fixed, iterate-independent bound p >= p_minus, so the stencil choice
    does not move with the iterate (an iterate-dependent switch makes the
    residual discontinuous in p and leaves Newton cycling when the tail
    crosses the threshold inside one cell).  Wherever the floor clears the
    threshold the true p does too, so centered rows are genuinely
    advection-stable; upwinding rows where p happens to be large only costs
    a modest accuracy constant.
    """
    with np.errstate(divide="ignore"):
        pe = params.c1 * grid.hx / (params.m * np.where(floor > 0.0, floor, np.inf))
    rows = pe > PECLET_LIMIT
    rows[0] = False
    rows[-1] = False
    return rows


def advective_gradient(p: np.ndarray, grid: Grid, params: WaveParams,
                       upwind_rows: np.ndarray | None = None):
    """x-derivative used by the advection and gradient-squared terms.

    Centered by default; rows flagged in upwind_rows use second-order
    upwind (first-order at i = 1, where the 3-point stencil would leave the
    domain).  When no row mask is given it is derived from p itself via the
    cell Peclet number (pointwise hard switch).

    Returns (px, scheme): scheme is 0 centered, 1 first-order upwind,
    2 second-order upwind, -1 on the Dirichlet rows.
    """
    hx = grid.hx
    px = np.zeros_like(p)
    px[1:-1] = (p[2:] - p[:-2]) / (2.0 * hx)
    scheme = np.zeros(p.shape, dtype=np.int8)
    scheme[0] = -1
    scheme[-1] = -1

    if upwind_rows is None:
        with np.errstate(divide="ignore"):
            pe = params.c1 * hx / (params.m * np.where(p > 0.0, p, np.inf))
        upwind = pe > PECLET_LIMIT
        upwind[0] = False
        upwind[-1] = False
    else:
        upwind = np.zeros(p.shape, dtype=bool)
        upwind[:] = np.asarray(upwind_rows, dtype=bool)[:, None]

    if np.any(upwind[1]):
        sel = upwind[1]
        px[1, sel] = (p[1, sel] - p[0, sel]) / hx
        scheme[1, sel] = 1
    if grid.Nx > 3:
        sel = upwind[2:-1]
        if np.any(sel):
            block = (3.0 * p[2:-1] - 4.0 * p[1:-2] + p[:-3]) / (2.0 * hx)
            px[2:-1][sel] = block[sel]
            scheme[2:-1][sel] = 2
    return px, scheme


def residual_phi(p: ScalarField2D, flow: FlowProfile, params: WaveParams,
                 upwind_rows: np.ndarray | None = None) -> ScalarField2D:
    """Pointwise residual -m p lap(p) + (c+alpha) p_x - |grad p|^2.

    Interior rows carry the operator; the Dirichlet rows carry the boundary
    mismatch p - A and p - B so that the zero of this map is the full
    discrete problem.  Raises NonPositiveFieldError if p <= 0 anywhere on
    the interior (continuation step too aggressive).
    """
    g = p.grid
    vals = p.values
    interior_min = float(vals[1:-1].min()) if g.Nx > 2 else float(vals.min())
    if interior_min <= 0.0:
        raise NonPositiveFieldError(interior_min)

    hx, hy = g.hx, g.hy
    px, _ = advective_gradient(vals, g, params, upwind_rows)
    # y-differences annihilate y-constants, so evaluate them on the field
    # with its line mean removed: mathematically identical, but the floating
    # point cancellation scale drops from |p| to the oscillation size
    q = vals - vals.mean(axis=1, keepdims=True)
    py = (np.roll(q, -1, axis=1) - np.roll(q, 1, axis=1)) / (2.0 * hy)
    lap = np.zeros_like(vals)
    lap[1:-1] = (vals[2:] - 2.0 * vals[1:-1] + vals[:-2]) / hx**2
    lap += (np.roll(q, -1, axis=1) - 2.0 * q + np.roll(q, 1, axis=1)) / hy**2

    calpha = params.c + flow(g.y)[None, :]
    r = -params.m * vals * lap + calpha * px - (px**2 + py**2)
    r[0] = vals[0] - (p.A if p.bc == "dirichlet" else vals[0])
    r[-1] = vals[-1] - (p.B if p.bc == "dirichlet" else vals[-1])
    return ScalarField2D(g, r, bc="free")


def w_transform(p, m: float):
    """w = m^2/(m+1) * p^((m+1)/m); rejects negative input."""
    arr = np.asarray(p, dtype=float)
    if np.any(arr < 0.0):
        raise ValueError("w_transform requires p >= 0")
    out = m**2 / (m + 1.0) * arr ** ((m + 1.0) / m)
    return out if isinstance(p, np.ndarray) else float(out)


def w_inverse(w, m: float):
    """Inverse of w_transform: p = ((m+1)/m^2 * w)^(m/(m+1))."""
    arr = np.asarray(w, dtype=float)
    if np.any(arr < 0.0):
        raise ValueError("w_inverse requires w >= 0")
    out = ((m + 1.0) / m**2 * arr) ** (m / (m + 1.0))
    return out if isinstance(w, np.ndarray) else float(out)


def poisson_rhs(p: ScalarField2D, flow: FlowProfile,
                params: WaveParams) -> ScalarField2D:
    """Source f = (c+alpha) p^(1/m - 1) p_x of the transformed equation
    lap(w) = f; for m > 1 the exponent is negative, so p must stay above
    half the regularization floor."""
    vals = p.values
    if params.m > 1.0 and float(vals.min()) < 0.5 * params.delta:
        raise ValueError(
            "poisson_rhs: field below delta/2 with m>1 (negative exponent)"
        )
    px, _, _ = diff_ops(p)
    calpha = params.c + flow(p.grid.y)[None, :]
    f = calpha * vals ** (1.0 / params.m - 1.0) * px.values
    return ScalarField2D(p.grid, f, bc="free")


@dataclass(frozen=True)
class _Bump:
    """Smooth compactly-supported test function with analytic derivatives."""

    xc: float
    yc: float
    radius: float

    @property
    def support_x(self):
        return self.xc - self.radius, self.xc + self.radius

    def _pieces(self, x, y):
        dx = x - self.xc
        dy = np.mod(y - self.yc + 0.5, 1.0) - 0.5
        dx, dy = np.broadcast_arrays(dx, dy)
        s = (dx**2 + dy**2) / self.radius**2
        inside = s < 1.0
        return dx, dy, s, inside

    def __call__(self, x, y):
        dx, dy, s, inside = self._pieces(x, y)
        out = np.zeros_like(s)
        si = s[inside]
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - si))
        return out

    def dx(self, x, y):
        dx, dy, s, inside = self._pieces(x, y)
        out = np.zeros_like(s)
        si = s[inside]
        g = np.exp(1.0 - 1.0 / (1.0 - si))
        out[inside] = -g / (1.0 - si) ** 2 * (2.0 * dx[inside] / self.radius**2)
        return out

    def laplacian(self, x, y):
        dx, dy, s, inside = self._pieces(x, y)
        out = np.zeros_like(s)
        si = s[inside]
        g = np.exp(1.0 - 1.0 / (1.0 - si))
        gp = -g / (1.0 - si) ** 2
        gpp = g / (1.0 - si) ** 4 - 2.0 * g / (1.0 - si) ** 3
        grad_s_sq = (2.0 / self.radius**2) ** 2 * (dx[inside] ** 2 + dy[inside] ** 2)
        out[inside] = gpp * grad_s_sq + gp * (4.0 / self.radius**2)
        return out


def bump_test(x_center: float, y_center: float, radius: float) -> _Bump:
    """Bump test function for weak_residual; radius must be < 0.5 so the
    periodic y-copy does not self-overlap."""
    if not 0.0 < radius < 0.5:
        raise ValueError("bump radius must lie in (0, 0.5)")
    return _Bump(x_center, y_center, radius)


def weak_residual(p: ScalarField2D, flow: FlowProfile, params: WaveParams,
                  test_fn) -> float:
    """Integral of v^(m+1) lap(psi) + (c+alpha) v psi_x with
    v = (m p / (m+1))^(1/m), by tensor-product quadrature (trapezoid in x,
    rectangle in periodic y).  Valid across the degenerate set, since no
    derivative of p appears.  The test function must vanish before the
    x-boundaries."""
    g = p.grid
    xa, xb = test_fn.support_x
    if xa <= g.x_lo or xb >= g.x_hi:
        raise ValueError("test function support touches the x-boundaries")
    vals = np.maximum(p.values, 0.0)
    v = (params.m * vals / (params.m + 1.0)) ** (1.0 / params.m)
    X = g.x[:, None]
    Y = g.y[None, :]
    calpha = params.c + flow(g.y)[None, :]
    integrand = v ** (params.m + 1.0) * test_fn.laplacian(X, Y) \
        + calpha * v * test_fn.dx(X, Y)
    wx = np.full(g.Nx, g.hx)
    wx[0] = wx[-1] = 0.5 * g.hx
    return float(np.sum(integrand * wx[:, None]) * g.hy)


def save_field(field: ScalarField2D, path):
    """Write CSV with header x,y,p, row-major, 17 significant digits."""
    g = field.grid
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "p"])
        xs, ys = g.x, g.y
        for i in range(g.Nx):
            for j in range(g.Ny):
                writer.writerow([
                    f"{xs[i]:.17g}", f"{ys[j]:.17g}",
                    f"{field.values[i, j]:.17g}",
                ])


def load_field(path) -> ScalarField2D:
    """Read a field CSV written by save_field; exact round trip."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["x", "y", "p"]:
            raise ValueError(f"unexpected field header {header!r} in {path}")
        rows = [(float(a), float(b), float(c)) for a, b, c in reader]
    xs = sorted({r[0] for r in rows})
    ys = sorted({r[1] for r in rows})
    Nx, Ny = len(xs), len(ys)
    if Nx * Ny != len(rows):
        raise ValueError(f"field file {path} is not a full tensor grid")
    grid = Grid(Nx=Nx, Ny=Ny, x_lo=xs[0], x_hi=xs[-1])
    values = np.array([r[2] for r in rows]).reshape(Nx, Ny)
    return ScalarField2D(grid, values, bc="free")
