"""Post-solve diagnostics: pinning, monotonicity, flux conservation,
oscillation decay, free-boundary extraction, far-field expansion fitting,
and alignment of translates.

Conventions: fields are (Nx, Ny) arrays on a Grid; y-integrals use the
rectangle rule (spectrally accurate on the periodic direction); line mass
means the y-integral of p over one period.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import minimize_scalar

from .fields import Grid, ScalarField2D, diff_ops, w_transform
from .flow import FlowProfile, WaveParams

__all__ = [
    "PinResult",
    "MonotonicityReport",
    "FluxReport",
    "OscillationProfile",
    "FreeBoundaryCurve",
    "ExpansionFit",
    "pin_translate",
    "monotonicity_report",
    "flux_invariant",
    "oscillation_profile",
    "free_boundary_extract",
    "expansion_fit",
    "align_translates",
    "planar_limit_check",
]


def line_mass(p: ScalarField2D) -> np.ndarray:
    """y-integral of p per x-line (rectangle rule, exact mean * 1)."""
    return p.values.mean(axis=1)


# ---------------------------------------------------------------------------
# pinning


@dataclass(frozen=True)
class PinResult:
    field: ScalarField2D
    x_star: float
    K1: float
    K2: float


def pin_translate(p: ScalarField2D, K: float) -> PinResult:
    """Relabel coordinates so the line-mass-K station sits at x = 0.

    The station x* with integral_y p(x*, y) dy = K is located by inverse
    interpolation of the (strictly increasing) line mass; the shift is an
    exact coordinate relabeling of the grid, so no field values change.
    Reports K1 = min_y p(0, y), K2 = max_y p(0, y) at the pinned origin.
    """
    F = line_mass(p)
    xs = p.grid.x
    if not (F[0] < K < F[-1]):
        raise ValueError(
            f"pinning mass K={K} outside attainable range [{F[0]:.6g}, {F[-1]:.6g}]"
        )
    i = int(np.searchsorted(F, K))
    # linear inverse interpolation between bracketing lines
    x_star = xs[i - 1] + (K - F[i - 1]) * (xs[i] - xs[i - 1]) / (F[i] - F[i - 1])
    shifted = ScalarField2D(p.grid.shifted(x_star), p.values, bc=p.bc,
                            A=p.A, B=p.B)
    xs_new = shifted.grid.x
    vals_at_0 = np.empty(p.grid.Ny)
    for j in range(p.grid.Ny):
        vals_at_0[j] = PchipInterpolator(xs_new, shifted.values[:, j])(0.0)
    return PinResult(field=shifted, x_star=float(x_star),
                     K1=float(vals_at_0.min()), K2=float(vals_at_0.max()))


# ---------------------------------------------------------------------------
# monotonicity


@dataclass(frozen=True)
class MonotonicityReport:
    min_px: float
    max_px: float
    min_px_positive_set: float
    threshold: float


def monotonicity_report(p: ScalarField2D, params: WaveParams | None = None,
                        threshold: float | None = None) -> MonotonicityReport:
    """Extrema of the discrete p_x, plus the minimum restricted to the
    "active" set p > threshold (default 2*delta), which estimates the
    non-degeneracy constant a of the interface."""
    if threshold is None:
        threshold = 2.0 * params.delta if params is not None else 0.0
    px, _, _ = diff_ops(p)
    active = p.values > threshold
    min_active = float(px.values[active].min()) if np.any(active) else 0.0
    return MonotonicityReport(
        min_px=float(px.values.min()),
        max_px=float(px.values.max()),
        min_px_positive_set=min_active,
        threshold=float(threshold),
    )


# ---------------------------------------------------------------------------
# flux invariant


@dataclass(frozen=True)
class FluxReport:
    x: np.ndarray
    F: np.ndarray
    drift: float
    C_delta: float


def flux_invariant(p: ScalarField2D, flow: FlowProfile, params: WaveParams,
                   px_values: np.ndarray | None = None) -> FluxReport:
    """Per-line flux F(x) = int p^(1/m) p_x dy - int (c+alpha) p^(1/m) dy.

    Constant in x for exact solutions with floor delta, with value
    C_delta = O(delta^(1/m)); the reported drift max F - min F over interior
    lines measures discrete conservation.  An analytic p_x may be supplied
    (px_values) to remove the differencing error, e.g. for planar profiles.
    """
    if px_values is None:
        px_values = diff_ops(p)[0].values
    g = p.grid
    root = p.values ** (1.0 / params.m)
    calpha = params.c + flow(g.y)[None, :]
    F = (root * px_values).mean(axis=1) - (calpha * root).mean(axis=1)
    interior = F[1:-1]
    # C_delta read off the left tail (p ~ delta there, p_x ~ 0, alpha averages out)
    n_tail = max(2, g.Nx // 20)
    return FluxReport(x=g.x, F=F,
                      drift=float(interior.max() - interior.min()),
                      C_delta=float(F[1:1 + n_tail].mean()))


# ---------------------------------------------------------------------------
# oscillation


@dataclass(frozen=True)
class OscillationProfile:
    x: np.ndarray
    O: np.ndarray
    x_ref: float
    exponent: float | None
    amplitude: float | None
    sqrt_constant: float
    fourier_modes: tuple
    fourier_x: np.ndarray
    fourier_amps: np.ndarray  # shape (len(fourier_x), len(fourier_modes))
    fourier_constant: float


def oscillation_profile(p: ScalarField2D, params: WaveParams,
                        x_ref: float = 0.0,
                        modes=(1, 2, 3)) -> OscillationProfile:
    """Oscillation O(x) = max_y p - min_y p per line, its far-field decay
    fit, and the y-Fourier amplitudes of w = w_transform(p).

    The decay law O ~ C / (distance from the wave) is fitted in the variable
    xi = x - x_ref with x_ref the (extrapolated) interface position: with a
    pinned origin the raw coordinate is offset by an arbitrary translation,
    which would mask the exponent.  The fit spans the decade
    [xi_max/10, xi_max] and is refused (exponent None) when less than a
    decade is available or O vanishes (planar fields).
    """
    g = p.grid
    O = p.values.max(axis=1) - p.values.min(axis=1)
    mass = line_mass(p)
    sqrt_constant = float(np.max(O / np.sqrt(np.maximum(mass, 1e-300))))

    xi = g.x - x_ref
    xi_max = float(xi.max())
    sel = (xi >= xi_max / 10.0) & (xi <= 0.98 * xi_max)
    exponent = amplitude = None
    if xi_max > 0 and np.count_nonzero(sel) >= 8:
        Ow = O[sel]
        if np.all(Ow > 0.0):
            span = xi[sel]
            if span.max() / span.min() >= 9.5:  # about a decade
                coef = np.polyfit(np.log(span), np.log(Ow), 1)
                exponent = float(coef[0])
                amplitude = float(np.exp(coef[1]))

    w = w_transform(np.maximum(p.values, 0.0), params.m)
    spec = np.abs(np.fft.rfft(w, axis=1)) / g.Ny
    fsel = sel if np.any(sel) else (xi > 0)
    fx = g.x[fsel]
    amps = np.stack([spec[fsel, n] for n in modes], axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        xi_f = np.maximum(xi[fsel], 1e-300)
        weights = xi_f[:, None] ** (1.0 - 1.0 / params.m) \
            * np.asarray(modes, dtype=float)[None, :] ** 2
        fourier_constant = float(np.max(amps * weights)) if amps.size else 0.0

    return OscillationProfile(
        x=g.x, O=O, x_ref=float(x_ref), exponent=exponent,
        amplitude=amplitude, sqrt_constant=sqrt_constant,
        fourier_modes=tuple(modes), fourier_x=fx, fourier_amps=amps,
        fourier_constant=fourier_constant,
    )


# ---------------------------------------------------------------------------
# free boundary


@dataclass(frozen=True)
class FreeBoundaryCurve:
    levels: tuple
    y: np.ndarray
    curves: np.ndarray  # (n_levels, Ny)
    I: np.ndarray
    a_measured: float
    degenerate: bool
    lipschitz_estimates: np.ndarray  # per level
    lipschitz: float
    vertical_flags: np.ndarray  # bool per y-cell


def _level_curve(p: ScalarField2D, eps: float) -> np.ndarray:
    """Leftmost crossing p(x, y) = eps per y, by monotone bracketing plus
    local linear interpolation (p_x > 0 makes the curve single-valued)."""
    g = p.grid
    out = np.empty(g.Ny)
    xs = g.x
    for j in range(g.Ny):
        col = p.values[:, j]
        idx = np.argmax(col >= eps)
        if col[idx] < eps or idx == 0:
            raise ValueError(
                f"level {eps} not bracketed on line y={g.y[j]:.4f}"
            )
        x0, x1 = xs[idx - 1], xs[idx]
        f0, f1 = col[idx - 1], col[idx]
        out[j] = x0 + (eps - f0) * (x1 - x0) / (f1 - f0)
    return out


def free_boundary_extract(fields, levels, params: WaveParams,
                          degenerate_fraction: float = 0.05) -> FreeBoundaryCurve:
    """Interface curve from a delta-continuation sequence.

    fields: list of (delta, pinned field); the finest (smallest delta) field
    is used for the level curves.  Each level eps must be >= 2*delta of the
    finest field.  I(y) is extrapolated from I_eps ~ I + eps/a by linear
    regression over the levels; when the measured non-degeneracy a drops
    below degenerate_fraction * c the curve is flagged degenerate and the
    smallest-level curve is returned unextrapolated.
    """
    levels = tuple(sorted(float(e) for e in levels))
    delta_min, finest = min(fields, key=lambda t: t[0])
    if levels[0] < 2.0 * delta_min:
        raise ValueError(
            f"smallest level {levels[0]} below resolvable threshold "
            f"2*delta = {2.0 * delta_min}"
        )
    curves = np.stack([_level_curve(finest, e) for e in levels])

    mono = monotonicity_report(finest, params)
    a = mono.min_px_positive_set
    degenerate = a < degenerate_fraction * params.c
    if degenerate or len(levels) < 2:
        I = curves[0].copy()
    else:
        # least-squares line I_eps = I + eps/a_y per y
        e = np.asarray(levels)
        e_mean = e.mean()
        slope = ((e - e_mean)[:, None] * (curves - curves.mean(axis=0))).sum(axis=0) \
            / np.sum((e - e_mean) ** 2)
        I = curves.mean(axis=0) - slope * e_mean

    g = finest.grid
    hy = g.hy

    def lip(curve):
        d = np.abs(np.diff(np.append(curve, curve[0]))) / hy
        return d

    lip_per_level = np.array([lip(c).max() for c in curves])
    dI = lip(I)
    median = np.median(dI) if np.any(dI > 0) else 0.0
    vertical = dI > 10.0 * median if median > 0 else np.zeros_like(dI, bool)
    return FreeBoundaryCurve(
        levels=levels, y=g.y, curves=curves, I=I, a_measured=float(a),
        degenerate=bool(degenerate), lipschitz_estimates=lip_per_level,
        lipschitz=float(dI.max()), vertical_flags=vertical,
    )


# ---------------------------------------------------------------------------
# far-field expansion


@dataclass(frozen=True)
class ExpansionFit:
    N: int
    exponents: tuple
    coefficients: tuple  # q_1 .. q_N
    q_star: float
    lam: float
    window: tuple
    residual_norm: float
    condition: float
    stability: tuple  # per-coefficient relative change under 25% window shift
    qperp_max: float
    qperp_exponent: float | None


def _fit_window(mean_p, xs, window, c, exponents):
    sel = (xs >= window[0]) & (xs <= window[1])
    span = xs[sel]
    target = mean_p[sel] - c * span
    design = np.stack([span**e for e in exponents] + [np.ones_like(span)],
                      axis=1)
    cond = float(np.linalg.cond(design))
    coef, res, *_ = np.linalg.lstsq(design, target, rcond=None)
    fitted = design @ coef
    resid = float(np.max(np.abs(fitted - target)))
    return coef, resid, cond


def expansion_fit(p: ScalarField2D, params: WaveParams,
                  window: tuple | None = None,
                  x_origin: float = 0.0) -> ExpansionFit:
    """Fit of the y-averaged far field <p>(x) - c x against the basis
    {x^(1-k/m)} plus a constant.

    The number of nonconstant terms is N = floor(m) for non-integer m; for
    integer m the k = m term would be the constant itself, so N = m - 1 is
    used instead.  Requires m > 1.  x_origin shifts the coordinate before
    fitting: the expansion holds in the distance from the interface, and an
    arbitrary translation folded into x would bias every exponent, so pass
    the measured interface position here.  The (shifted) coordinates must be
    positive across the window; default window is the far half of the
    domain, [0.5 xi_max, xi_max - 2 hx].
    """
    m = params.m
    if m <= 1.0:
        raise ValueError("far-field expansion requires m > 1")
    if abs(m - round(m)) < 1e-6:
        N = int(round(m)) - 1
    else:
        N = int(np.floor(m))
    if N < 1:
        raise ValueError("far-field expansion needs at least one term (m too small)")
    exponents = tuple(1.0 - k / m for k in range(1, N + 1))

    xs = p.grid.x - x_origin
    mean_p = line_mass(p)
    if window is None:
        hi = float(xs[-1]) - 2.0 * p.grid.hx
        if hi <= 0.0:
            raise ValueError("no far field to the right of x_origin")
        window = (0.5 * hi, hi)
    if window[0] <= 0.0:
        raise ValueError("expansion window must sit at positive x")

    coef, resid, cond = _fit_window(mean_p, xs, window, params.c, exponents)
    if cond > 1e8:
        raise ValueError(
            f"expansion window too narrow: design condition {cond:.3e}"
        )

    width = window[1] - window[0]
    shifted = (window[0] + 0.25 * width, window[1])
    coef_s, _, _ = _fit_window(mean_p, xs, shifted, params.c, exponents)
    denom = np.maximum(np.abs(coef[:-1]), 1e-300)
    stability = tuple(float(v) for v in np.abs(coef_s[:-1] - coef[:-1]) / denom)

    sel = (xs >= window[0]) & (xs <= window[1])
    qperp = np.max(np.abs(p.values[sel] - mean_p[sel][:, None]), axis=1)
    qperp_max = float(qperp.max())
    q_exp = None
    if np.all(qperp > 0.0) and xs[sel].max() / xs[sel].min() >= 2.0:
        q_exp = float(np.polyfit(np.log(xs[sel]), np.log(qperp), 1)[0])

    q1 = float(coef[0])
    lam = q1 * params.c ** (1.0 / m) * (m - 1.0) / m
    return ExpansionFit(
        N=N, exponents=exponents,
        coefficients=tuple(float(v) for v in coef[:-1]),
        q_star=float(coef[-1]), lam=lam, window=tuple(window),
        residual_norm=resid, condition=cond, stability=stability,
        qperp_max=qperp_max, qperp_exponent=q_exp,
    )


# ---------------------------------------------------------------------------
# alignment


def align_translates(p1: ScalarField2D, p2: ScalarField2D,
                     tau_range: float | None = None):
    """Translation tau minimizing sup |p1(x, y) - p2(x - tau, y)| over the
    overlap; returns (tau, residual).  Shifted evaluation uses monotone
    cubic interpolation of p2's lines."""
    g1, g2 = p1.grid, p2.grid
    lines = [PchipInterpolator(g2.x, p2.values[:, j]) for j in range(g2.Ny)]
    if g1.Ny != g2.Ny:
        raise ValueError("fields must share the y-resolution")

    def objective(tau):
        lo = max(g1.x_lo, g2.x_lo + tau)
        hi = min(g1.x_hi, g2.x_hi + tau)
        if hi - lo < 4.0 * g1.hx:
            return np.inf
        sel = (g1.x >= lo) & (g1.x <= hi)
        xs = g1.x[sel]
        diff = 0.0
        for j in range(g1.Ny):
            diff = max(diff, float(np.max(np.abs(
                p1.values[sel, j] - lines[j](xs - tau)
            ))))
        return diff

    if tau_range is None:
        tau_range = 0.25 * min(g1.x_hi - g1.x_lo, g2.x_hi - g2.x_lo)
    coarse = np.linspace(-tau_range, tau_range, 81)
    vals = [objective(t) for t in coarse]
    i0 = int(np.argmin(vals))
    lo = coarse[max(i0 - 1, 0)]
    hi = coarse[min(i0 + 1, len(coarse) - 1)]
    res = minimize_scalar(objective, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10})
    return float(res.x), float(res.fun)


# ---------------------------------------------------------------------------
# planar zoom limit


@dataclass(frozen=True)
class PlanarLimitReport:
    eps: np.ndarray
    P_mean: np.ndarray
    deviation: np.ndarray  # max_y |P_eps(1, y) - c|
    monotone: bool
    C_lower: float


def planar_limit_check(p: ScalarField2D, params: WaveParams,
                       eps_list=None) -> PlanarLimitReport:
    """Zoomed profiles P_eps(X, Y) = eps * p(X/eps, Y/eps) at X = 1:
    convergence toward the slope c as eps decreases, plus the minimal
    linear-growth constant inf p(x, y)/x over the attainable far field."""
    g = p.grid
    if g.x_hi <= 0:
        raise ValueError("field has no x > 0 region to zoom into")
    eps_min = 1.02 / g.x_hi
    if eps_list is None:
        eps_list = np.geomspace(4.0 * eps_min, eps_min, 6)
    eps_arr = np.asarray(sorted(eps_list, reverse=True), dtype=float)

    P_mean = np.empty(len(eps_arr))
    deviation = np.empty(len(eps_arr))
    for k, e in enumerate(eps_arr):
        x_target = 1.0 / e
        row = np.empty(g.Ny)
        for j in range(g.Ny):
            row[j] = PchipInterpolator(g.x, p.values[:, j])(x_target)
        P = e * row
        P_mean[k] = P.mean()
        deviation[k] = np.max(np.abs(P - params.c))
    monotone = bool(np.all(np.diff(deviation) <= 1e-12 + deviation[:-1] * 0.05)) \
        if len(eps_arr) > 1 else True

    sel = g.x >= max(1.0, 0.2 * g.x_hi)
    ratios = p.values[sel] / g.x[sel][:, None]
    return PlanarLimitReport(eps=eps_arr, P_mean=P_mean, deviation=deviation,
                             monotone=monotone, C_lower=float(ratios.min()))
