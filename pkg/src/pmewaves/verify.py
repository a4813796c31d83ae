"""Acceptance verification suite: runs a fixed set of continuation bundles
and evaluates every structural property of the wave against its stated
tolerance, producing a deterministic machine-readable report.

The eleven checks cover: equivalence with the planar phase-plane oracle,
Jacobian correctness, slope bounds, the barrier sandwich, pinning, the flux
invariant, oscillation decay, the far-field slope, the far-field expansion,
the free boundary, and uniqueness up to translation.

Bundle design (all grids <= 512 x 32, full suite well under the 15-minute
budget):

* planar bundle -- alpha == 0, m = 2, c = 1, delta = 1e-2 on [-16, 16],
  512 x 32: oracle equivalence, exact flux value, expansion-coefficient
  oracle, constant interface.
* deep bundle -- generic flow on [-8, 8], 512 x 32, amplitude ramp then a
  quarter-decade delta ladder 1e-1 -> 1e-4: flux-invariant scaling in delta
  and free-boundary extrapolation (the fine grid spacing keeps the ladder
  solvable all the way down).
* far bundle -- generic flow on the asymmetric domain [-8, 88], 512 x 32,
  delta down to ~1.8e-2: pinning, oscillation decay, far-field slope and
  expansion (the interface sits near the left end, so nearly the whole grid
  resolves the far field; the grid cannot also support tiny delta there,
  which is why the deep bundle exists).
* refinement pair -- generic flow on [-8, 8] at delta = 0.25 with Nx = 256
  vs 512: expansion-coefficient stability under grid refinement, run at a
  delta large enough that the discrete interface-smearing floor (about
  0.1 c hx) is negligible against delta on both grids.
* uniqueness pair -- two continuation orders (amplitude-first vs
  delta-first) to the same final parameters on [-16, 16], 256 x 32.

Timings are segregated into the manifest so the report itself is
byte-identical across runs with the same seed.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .analysis import (
    align_translates,
    expansion_fit,
    flux_invariant,
    free_boundary_extract,
    monotonicity_report,
    oscillation_profile,
    pin_translate,
)
from .fields import Grid, ScalarField2D, diff_ops, w_transform
from .flow import FlowProfile, WaveParams, make_flow
from .planar import profile_from_anchor
from .solver import StageSpec, continuation, jacobian_fd_check, solve_truncated

__all__ = ["CriterionResult", "VerificationOutcome", "run_verification"]

# generic benchmark flow: one cosine + one sine mode, well inside the
# admissible speed range c > -min alpha
GENERIC_COS = (0.3,)
GENERIC_SIN = (0.4,)
GENERIC_M = 2.0
GENERIC_C = 4.0
GENERIC_K = 100.0

SUITE_TIME_BUDGET = 15.0 * 60.0
PLANAR_TIME_BUDGET = 60.0

_QUARTER_DECADE = tuple(10.0 ** (-k / 4.0) for k in range(5, 17))  # after 1e-1


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    measured: dict
    tolerance: dict
    notes: str = ""

    def as_dict(self) -> dict:
        return {
            "number": self.number,
            "name": self.name,
            "passed": self.passed,
            "measured": self.measured,
            "tolerance": self.tolerance,
            "notes": self.notes,
        }


@dataclass
class VerificationOutcome:
    criteria: list
    report: dict  # deterministic; written to report.json
    manifest: dict  # timings and environment; written to manifest.json
    artifacts: dict = field(default_factory=dict)  # filename -> text content

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.criteria)


def _say(progress, msg):
    if progress is not None:
        progress(msg)


# ---------------------------------------------------------------------------
# stage bookkeeping


@dataclass
class _StageRecord:
    bundle: str
    stage_key: tuple
    c1: float
    B: float
    hx: float
    residual: float
    tolerance: float
    min_px: float
    max_px: float
    sandwich_violation: float
    fd_rel: float
    flux_drift: float
    flux_C_delta: float
    delta: float
    newton_iters: int
    wall_time: float

    def digest(self) -> dict:
        d = {
            "bundle": self.bundle,
            "stage": list(self.stage_key),
            "c1": self.c1,
            "B": self.B,
            "hx": self.hx,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "min_px": self.min_px,
            "max_px": self.max_px,
            "sandwich_violation": self.sandwich_violation,
            "jacobian_fd_rel": self.fd_rel,
            "flux_drift": self.flux_drift,
            "flux_C_delta": self.flux_C_delta,
            "newton_iters": self.newton_iters,
        }
        return d


def _run_bundle(name, stages, flow_full, *, m, c, K, seed, records, progress):
    """Run one continuation bundle, appending a _StageRecord per accepted
    stage (Jacobian spot check and flux diagnostics included)."""
    rng = np.random.default_rng(seed)

    def callback(stage, params, p, report):
        fd = jacobian_fd_check(p, flow_full.scaled(stage.amplitude), params,
                               rng, n_dirs=3, upwind_rows=report.upwind_rows)
        fr = flux_invariant(p, flow_full.scaled(stage.amplitude), params)
        records.append(_StageRecord(
            bundle=name, stage_key=stage.key(), c1=params.c1, B=p.B,
            hx=p.grid.hx, residual=report.final_residual_norm,
            tolerance=report.tolerance, min_px=report.min_px,
            max_px=report.max_px,
            sandwich_violation=report.sandwich_violation, fd_rel=fd,
            flux_drift=fr.drift, flux_C_delta=fr.C_delta,
            delta=params.delta, newton_iters=report.newton_iters,
            wall_time=report.wall_time,
        ))
        _say(progress, f"  [{name}] stage {stage.key()} ok "
                       f"(iters={report.newton_iters}, fd={fd:.1e})")

    return continuation(stages, flow_full, m=m, c=c, K=K,
                        stage_callback=callback)


# ---------------------------------------------------------------------------
# the suite


def run_verification(cfg=None, progress=None) -> VerificationOutcome:
    """Run every bundle and evaluate the full acceptance checklist.

    cfg (a RunConfig) supplies the seed and, when its flow is nontrivial,
    overrides the generic benchmark flow/parameters; everything else about
    the bundles is fixed, because the checks reference specific parameter
    points (the planar oracle lives at m = 2, c = 1, delta = 1e-2).
    """
    t_suite = time.perf_counter()
    seed = int(getattr(cfg, "seed", 1234)) if cfg is not None else 1234
    if cfg is not None and (cfg.flow_cos or cfg.flow_sin):
        flow_full = make_flow(cfg.flow_cos, cfg.flow_sin)
        m, c, K = cfg.m, cfg.c, cfg.K
    else:
        flow_full = make_flow(GENERIC_COS, GENERIC_SIN)
        m, c, K = GENERIC_M, GENERIC_C, GENERIC_K

    records: list = []
    timings: dict = {}
    criteria: list = []

    # ---- planar bundle ----------------------------------------------------
    _say(progress, "[planar] alpha==0 oracle bundle")
    t0 = time.perf_counter()
    flow0 = make_flow([], [])
    params_pl = WaveParams.from_flow(flow0, m=2.0, c=1.0, delta=1e-2,
                                     L=16.0, K=GENERIC_K)
    grid_pl = Grid.symmetric(512, 32, 16.0)
    p_pl, rep_pl = solve_truncated(params_pl, flow0, grid_pl)
    planar_time = time.perf_counter() - t0
    timings["planar_bundle_s"] = planar_time

    rng_pl = np.random.default_rng(seed + 1)
    fd_pl = jacobian_fd_check(p_pl, flow0, params_pl, rng_pl, n_dirs=3,
                              upwind_rows=rep_pl.upwind_rows)
    fr_pl = flux_invariant(p_pl, flow0, params_pl)
    records.append(_StageRecord(
        bundle="planar", stage_key=(0.0, 1e-2, 16.0, None),
        c1=params_pl.c1, B=p_pl.B, hx=grid_pl.hx,
        residual=rep_pl.final_residual_norm, tolerance=rep_pl.tolerance,
        min_px=rep_pl.min_px, max_px=rep_pl.max_px,
        sandwich_violation=rep_pl.sandwich_violation, fd_rel=fd_pl,
        flux_drift=fr_pl.drift, flux_C_delta=fr_pl.C_delta,
        delta=params_pl.delta, newton_iters=rep_pl.newton_iters,
        wall_time=rep_pl.wall_time,
    ))

    oracle = profile_from_anchor(params_pl.c, params_pl.m, params_pl.delta,
                                 0.0, 1.0, x_max=grid_pl.x_hi + 1.0)
    oracle_vals = oracle(grid_pl.x)[:, None]
    sup_vs_oracle = float(np.max(np.abs(p_pl.values - oracle_vals)))
    y_indep = float(np.max(p_pl.values.max(axis=1) - p_pl.values.min(axis=1)))
    criteria.append(CriterionResult(
        number=1, name="planar oracle equivalence",
        passed=(sup_vs_oracle <= 1e-7 * p_pl.B and y_indep <= 1e-10
                and planar_time <= PLANAR_TIME_BUDGET),
        measured={"sup_vs_oracle": sup_vs_oracle, "y_independence": y_indep,
                  "runtime_within_budget": planar_time <= PLANAR_TIME_BUDGET},
        tolerance={"sup_vs_oracle": 1e-7 * p_pl.B, "y_independence": 1e-10,
                   "runtime_s": PLANAR_TIME_BUDGET},
        notes=("the sup-norm gap is the first-order interface-smearing error "
               "of the advection discretization, about 0.1 c hx at the "
               "interface cell; it cannot reach 1e-7 B on a 512-point grid "
               "(that would need hx ~ 1e-5, i.e. millions of points)"),
    ))

    # planar analytic-profile flux: spline values + spline derivative, so the
    # algebraic collapse F = -c delta^{1/m} is tested without differencing
    vals_an = np.tile(oracle_vals, (1, grid_pl.Ny))
    p_an = ScalarField2D(grid_pl, vals_an, bc="free")
    px_an = np.tile(oracle.derivative(grid_pl.x)[:, None], (1, grid_pl.Ny))
    fr_an = flux_invariant(p_an, flow0, params_pl, px_values=px_an)
    flux_exact_err = float(abs(fr_an.C_delta
                               + params_pl.c * params_pl.delta
                               ** (1.0 / params_pl.m)))

    # expansion oracle: analytic profile fitted in the coordinate centered on
    # the sharp-interface position x0 - M/C of the delta -> 0 limit
    fit_oracle = expansion_fit(p_an, params_pl, x_origin=-1.0)
    q1_oracle_target = -params_pl.m / (params_pl.m - 1.0) \
        * params_pl.delta ** (1.0 / params_pl.m) \
        * params_pl.c ** (1.0 - 1.0 / params_pl.m)
    q1_oracle_err = abs(fit_oracle.coefficients[0] - q1_oracle_target) \
        / abs(q1_oracle_target)

    # planar interface constancy
    pin_pl = pin_translate(p_pl, 8.0)
    fb_pl = free_boundary_extract(
        [(params_pl.delta, pin_pl.field)],
        (2.5 * params_pl.delta, 3.5 * params_pl.delta, 5.0 * params_pl.delta),
        params_pl,
    )
    planar_I_spread = float(fb_pl.I.max() - fb_pl.I.min())

    # ---- deep bundle ------------------------------------------------------
    _say(progress, "[deep] delta ladder on the short fine domain")
    t0 = time.perf_counter()
    deep_stages = [StageSpec(a, 1e-1, 8.0, 512, 32) for a in (0.0, 0.5, 1.0)]
    deep_stages += [StageSpec(1.0, d, 8.0, 512, 32) for d in _QUARTER_DECADE]
    deep = _run_bundle("deep", deep_stages, flow_full, m=m, c=c, K=K,
                       seed=seed + 2, records=records, progress=progress)
    timings["deep_bundle_s"] = time.perf_counter() - t0

    # ---- far bundle -------------------------------------------------------
    _say(progress, "[far] asymmetric far-field domain")
    t0 = time.perf_counter()
    far_stages = [StageSpec(a, 1e-1, 8.0, 256, 32, -8.0)
                  for a in (0.0, 0.5, 1.0)]
    far_stages += [StageSpec(1.0, 1e-1, 16.0, 256, 32, -8.0),
                   StageSpec(1.0, 1e-1, 32.0, 512, 32, -8.0),
                   StageSpec(1.0, 1e-1, 48.0, 512, 32, -8.0)]
    far_stages += [StageSpec(1.0, d, 48.0, 512, 32, -8.0)
                   for d in (10.0 ** -1.25, 10.0 ** -1.5, 10.0 ** -1.75)]
    far = _run_bundle("far", far_stages, flow_full, m=m, c=c, K=K,
                      seed=seed + 3, records=records, progress=progress)
    timings["far_bundle_s"] = time.perf_counter() - t0

    # ---- refinement pair --------------------------------------------------
    _say(progress, "[refine] Nx 256 vs 512 at large delta")
    t0 = time.perf_counter()
    ref_stages = [StageSpec(a, 0.25, 8.0, 256, 32, -8.0)
                  for a in (0.0, 0.5, 1.0)]
    ref_stages += [StageSpec(1.0, 0.25, 8.0, 512, 32, -8.0)]
    refine = _run_bundle("refine", ref_stages, flow_full, m=m, c=c, K=K,
                         seed=seed + 4, records=records, progress=progress)
    timings["refine_bundle_s"] = time.perf_counter() - t0

    # ---- uniqueness pair --------------------------------------------------
    _say(progress, "[unique] amplitude-first vs delta-first paths")
    t0 = time.perf_counter()
    d_ladder = (1e-1, 10.0 ** -1.25, 10.0 ** -1.5, 10.0 ** -1.75, 1e-2)
    path_a = [StageSpec(a, 1e-1, 16.0, 256, 32) for a in (0.0, 0.5, 1.0)]
    path_a += [StageSpec(1.0, d, 16.0, 256, 32) for d in d_ladder[1:]]
    path_b = [StageSpec(0.0, d, 16.0, 256, 32) for d in d_ladder]
    path_b += [StageSpec(a, 1e-2, 16.0, 256, 32) for a in (0.5, 1.0)]
    uniq_a = _run_bundle("unique-a", path_a, flow_full, m=m, c=c, K=K,
                         seed=seed + 5, records=records, progress=progress)
    uniq_b = _run_bundle("unique-b", path_b, flow_full, m=m, c=c, K=K,
                         seed=seed + 6, records=records, progress=progress)
    timings["unique_bundle_s"] = time.perf_counter() - t0

    # ---- per-stage criteria (2, 3, 4, 6 drift) ----------------------------
    fd_worst = max(r.fd_rel for r in records)
    criteria.append(CriterionResult(
        number=2, name="Jacobian finite-difference agreement",
        passed=fd_worst <= 1e-5,
        measured={"worst_relative_disagreement": fd_worst,
                  "stages_checked": len(records)},
        tolerance={"relative": 1e-5, "directions_per_stage": 3},
    ))

    mono_min = min(r.min_px for r in records)
    mono_excess = max(r.max_px - (r.c1 + 1e-6) for r in records)
    criteria.append(CriterionResult(
        number=3, name="slope bounds 0 < p_x <= c1",
        passed=(mono_min >= -1e-8 and mono_excess <= 0.0),
        measured={"worst_min_px": mono_min,
                  "worst_max_px_minus_bound": mono_excess},
        tolerance={"min_px": -1e-8, "max_px_slack_above_c1": 1e-6},
    ))

    sandwich_ratio = max(r.sandwich_violation / (1e-6 * r.B) for r in records)
    criteria.append(CriterionResult(
        number=4, name="barrier sandwich p_minus <= p <= p_plus",
        passed=sandwich_ratio <= 1.0,
        measured={"worst_violation_over_allowance": sandwich_ratio},
        tolerance={"pointwise": "1e-6 * B"},
        notes=("the sandwich holds at the PDE level but not to 1e-6 B at "
               "this resolution: the discrete interface undershoots the "
               "planar barrier by the same first-order smearing error seen "
               "in the oracle check (about 0.1 c hx), which is 2-4 orders "
               "above the allowance on every converged grid"),
    ))

    drift_ratio = max(
        r.flux_drift / (5.0 * r.hx ** 2 * r.c1 ** 2 * r.B ** (1.0 / m))
        for r in records
    )

    # ---- pinning (5) on the far bundle ------------------------------------
    _, params_far, p_far, _ = far[-1]
    pin_far = pin_translate(p_far, K)
    fb_far = free_boundary_extract(
        [(params_far.delta, pin_far.field)],
        (2.5 * params_far.delta, 3.5 * params_far.delta,
         5.0 * params_far.delta),
        params_far,
    )
    x_ref_far = float(np.mean(fb_far.I))
    osc_far = oscillation_profile(pin_far.field, params_far, x_ref=x_ref_far)
    C_osc = osc_far.sqrt_constant
    pin_dev = max(abs(pin_far.K1 - K), abs(pin_far.K2 - K))
    band_ok = (pin_far.K1 > 0.0
               and not (pin_far.K1 <= 0.5 * K <= pin_far.K2))
    criteria.append(CriterionResult(
        number=5, name="uniform pinning",
        passed=(pin_dev <= C_osc * np.sqrt(K) and band_ok),
        measured={"K1": pin_far.K1, "K2": pin_far.K2,
                  "max_deviation": pin_dev,
                  "oscillation_constant": C_osc},
        tolerance={"deviation": C_osc * float(np.sqrt(K)),
                   "band_excludes": [0.0, 0.5 * K]},
    ))

    # ---- flux invariant (6) ----------------------------------------------
    ladder = [r for r in records
              if r.bundle == "deep" and r.stage_key[0] == 1.0]
    ratios = np.array([r.flux_C_delta / (-r.delta ** (1.0 / m))
                       for r in ladder])
    ratio_spread = float(ratios.max() / ratios.min()) \
        if np.all(ratios > 0) else float("inf")
    criteria.append(CriterionResult(
        number=6, name="flux invariant",
        passed=(drift_ratio <= 1.0 and flux_exact_err <= 1e-8
                and ratio_spread <= 3.0),
        measured={"worst_drift_over_allowance": drift_ratio,
                  "planar_exact_value_error": flux_exact_err,
                  "C_delta_scaling_spread": ratio_spread,
                  "ladder_deltas": [r.delta for r in ladder]},
        tolerance={"drift": "5 h^2 c1^2 B^(1/m)",
                   "planar_exact": 1e-8, "scaling_spread": 3.0},
    ))

    # ---- oscillation decay (7) -------------------------------------------
    g_far = pin_far.field.grid
    xi = g_far.x - x_ref_far
    sel = (xi >= xi.max() / 10.0) & (xi <= 0.98 * xi.max())
    w = w_transform(np.maximum(pin_far.field.values, 0.0), params_far.m)
    spec = np.abs(np.fft.rfft(w, axis=1)) / g_far.Ny
    xi_f = xi[sel]
    mode_consts = {
        n: float(np.max(spec[sel, n] * xi_f ** (1.0 - 1.0 / m) * n ** 2))
        for n in (1, 2, 3)
    }
    C_fourier = mode_consts[1]  # fitted on the fundamental
    higher_ok = mode_consts[2] <= C_fourier and mode_consts[3] <= C_fourier
    exp_ok = osc_far.exponent is not None and osc_far.exponent <= -0.8
    criteria.append(CriterionResult(
        number=7, name="oscillation decay",
        passed=bool(exp_ok and higher_ok),
        measured={"decay_exponent": osc_far.exponent,
                  "fourier_constant": C_fourier,
                  "per_mode_constants": {str(k): v
                                         for k, v in mode_consts.items()}},
        tolerance={"exponent": -0.8,
                   "fourier": "per-mode constant <= C fitted on n=1"},
    ))

    # ---- slope at infinity (8) -------------------------------------------
    x_pin = pin_far.field.grid.x
    cut = x_pin[-1] - 0.10 * (x_pin[-1] - x_pin[0])
    px_far = diff_ops(pin_far.field)[0].values
    tail_sel = x_pin >= cut
    mean_slope = float(px_far[tail_sel].mean())
    criteria.append(CriterionResult(
        number=8, name="slope at infinity",
        passed=0.98 * c <= mean_slope <= 1.02 * c,
        measured={"mean_px_rightmost_10pct": mean_slope},
        tolerance={"range": [0.98 * c, 1.02 * c]},
    ))

    # ---- expansion coefficients (9) --------------------------------------
    fit_far = expansion_fit(pin_far.field, params_far, x_origin=x_ref_far)

    def _q1_of(result_bundle):
        _, prm, fld, _ = result_bundle
        pinned = pin_translate(fld, 10.0)
        fb = free_boundary_extract(
            [(prm.delta, pinned.field)],
            (2.5 * prm.delta, 3.5 * prm.delta, 5.0 * prm.delta), prm)
        return expansion_fit(pinned.field, prm,
                             x_origin=float(np.mean(fb.I))).coefficients[0]

    ref_final = [r for r in refine
                 if r[0].amplitude == 1.0 and r[0].delta == 0.25]
    q1_coarse = _q1_of(next(r for r in ref_final if r[0].Nx == 256))
    q1_fine = _q1_of(next(r for r in ref_final if r[0].Nx == 512))
    refine_change = abs(q1_fine - q1_coarse) / abs(q1_coarse)
    stab_worst = max(fit_far.stability)
    criteria.append(CriterionResult(
        number=9, name="far-field expansion coefficients",
        passed=(q1_oracle_err <= 0.05 and stab_worst <= 0.05
                and refine_change <= 0.05),
        measured={"q1_oracle": fit_oracle.coefficients[0],
                  "q1_oracle_relative_error": q1_oracle_err,
                  "window_shift_stability": stab_worst,
                  "q1_coarse": q1_coarse, "q1_fine": q1_fine,
                  "refinement_relative_change": refine_change},
        tolerance={"oracle": 0.05, "window_shift": 0.05, "refinement": 0.05,
                   "oracle_target": q1_oracle_target},
        notes=("stability covers the nonconstant coefficients; the additive "
               "constant absorbs the interface offset -c I and is reported "
               "separately as q_star"),
    ))

    # ---- free boundary (10) ----------------------------------------------
    K_fb = 20.0
    fb_fields = []
    for stage, prm, fld, _ in deep:
        if stage.amplitude == 1.0:
            fb_fields.append((prm.delta, pin_translate(fld, K_fb).field))
    delta_min = min(d for d, _ in fb_fields)
    fb_deep = free_boundary_extract(
        fb_fields, (2.5 * delta_min, 5.0 * delta_min, 1e-3),
        WaveParams.from_flow(flow_full, m=m, c=c, delta=delta_min, L=8.0, K=K_fb),
    )
    finest = min(fb_fields, key=lambda t: t[0])[1]
    pin_fb = pin_translate(
        ScalarField2D(finest.grid, finest.values, bc=finest.bc,
                      A=finest.A, B=finest.B), K_fb)
    hx_deep = finest.grid.hx
    prm_deep = deep[-1][1]
    band_lo = -pin_fb.K2 / prm_deep.c0 - hx_deep
    band_hi = -pin_fb.K1 / prm_deep.c1 + hx_deep
    band_ok_fb = bool(np.all(fb_deep.I >= band_lo)
                      and np.all(fb_deep.I <= band_hi))
    py_max = float(np.max(np.abs(diff_ops(finest)[1].values)))
    lip_bound = 1.5 * py_max / fb_deep.a_measured
    criteria.append(CriterionResult(
        number=10, name="free boundary",
        passed=(band_ok_fb and planar_I_spread <= 0.1 * grid_pl.hx
                and not fb_deep.degenerate
                and fb_deep.lipschitz <= lip_bound),
        measured={"I_min": float(fb_deep.I.min()),
                  "I_max": float(fb_deep.I.max()),
                  "band": [float(band_lo), float(band_hi)],
                  "planar_I_spread": planar_I_spread,
                  "lipschitz": fb_deep.lipschitz,
                  "nondegeneracy_a": fb_deep.a_measured},
        tolerance={"band": "[-K2/c0 - hx, -K1/c1 + hx]",
                   "planar_spread": 0.1 * grid_pl.hx,
                   "lipschitz": lip_bound},
    ))

    # ---- uniqueness up to translation (11) --------------------------------
    p_a = uniq_a[-1][2]
    p_b = uniq_b[-1][2]
    tau, align_res = align_translates(p_a, p_b)
    suite_time = time.perf_counter() - t_suite
    timings["suite_total_s"] = suite_time
    criteria.append(CriterionResult(
        number=11, name="uniqueness up to translation",
        passed=(align_res <= 1e-6 * p_a.B and suite_time <= SUITE_TIME_BUDGET),
        measured={"tau": tau, "aligned_residual": align_res,
                  "path_a_stages": len(uniq_a), "path_b_stages": len(uniq_b),
                  "suite_within_budget": suite_time <= SUITE_TIME_BUDGET},
        tolerance={"residual": 1e-6 * p_a.B,
                   "suite_runtime_s": SUITE_TIME_BUDGET},
    ))

    criteria.sort(key=lambda cr: cr.number)
    report = {
        "suite": "wave-structure acceptance",
        "seed": seed,
        "passed": all(cr.passed for cr in criteria),
        "criteria": [cr.as_dict() for cr in criteria],
        "stages": [r.digest() for r in records],
    }
    manifest = {
        "timings_s": timings,
        "stage_wall_times_s": {f"{r.bundle}:{r.stage_key}": r.wall_time
                               for r in records},
    }

    artifacts = {
        "boundary.csv": _boundary_csv(fb_deep),
        "oscillation.csv": _oscillation_csv(osc_far),
        "expansion.json": json.dumps({
            "oracle": _fit_dict(fit_oracle),
            "generic": _fit_dict(fit_far),
        }, indent=2, sort_keys=True) + "\n",
        "report.json": json.dumps(report, indent=2, sort_keys=True) + "\n",
    }
    return VerificationOutcome(criteria=criteria, report=report,
                               manifest=manifest, artifacts=artifacts)


def _fit_dict(fit) -> dict:
    return {
        "N": fit.N,
        "exponents": list(fit.exponents),
        "coefficients": list(fit.coefficients),
        "q_star": fit.q_star,
        "lambda": fit.lam,
        "window": list(fit.window),
        "residual_norm": fit.residual_norm,
        "condition": fit.condition,
        "stability": list(fit.stability),
        "qperp_max": fit.qperp_max,
        "qperp_exponent": fit.qperp_exponent,
    }


def _boundary_csv(fb) -> str:
    header = ["y", "I"] + [f"I_eps_{e:.6g}" for e in fb.levels]
    lines = [",".join(header)]
    for j, y in enumerate(fb.y):
        row = [f"{y:.17g}", f"{fb.I[j]:.17g}"]
        row += [f"{fb.curves[k, j]:.17g}" for k in range(len(fb.levels))]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _oscillation_csv(osc) -> str:
    lines = ["x,O,fitted_model"]
    for i, x in enumerate(osc.x):
        xi = x - osc.x_ref
        if osc.exponent is not None and xi > 0:
            model = osc.amplitude * xi ** osc.exponent
        else:
            model = float("nan")
        lines.append(f"{x:.17g},{osc.O[i]:.17g},{model:.17g}")
    return "\n".join(lines) + "\n"
