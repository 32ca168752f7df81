//! Exact propagation, the pointer weight `W₁`, and the localization time.
//!
//! The propagated Wigner function is `W(t) = N(M(t)) ⊛ W₀′` with
//! `W₀′(ξ) = W(V⁻¹ξ, 0)/|det V|`. Its pointer-basis weight is
//! `W₁ = N(M - Γ∞/2) ⊛ W₀′`, a genuine probability density once
//! `M(t) ⪰ Γ∞/2`; the localization time `t_c` is the onset of that
//! condition.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::bath::BathSpec;
use crate::error::{Error, Result};
use crate::green::{solve_green, v_matrix, GreenTable};
use crate::linalg::Mat2;
use crate::moments::{
    compute_moments_with, high_t_moments_ohmic, high_t_moments_ohmic_exact, pointer_basis,
    stationary_momentum_variance, MomentSeries, PointerBasis, DEFAULT_DECIMATION,
};
use crate::phase_space::{gaussian_convolve, GaussianState, GridSpec, WignerGrid};

/// Relative criterion tolerance: eigenvalues above `-CRITERION_TOL·tr Γ∞`
/// count as non-negative.
pub const CRITERION_TOL: f64 = 1e-12;
/// Relative bisection tolerance on `t_c`.
pub const TC_REL_TOL: f64 = 1e-10;
/// Smallest `det V` accepted by the propagator.
pub const DET_V_FLOOR: f64 = 1e-12;
/// Largest mass change tolerated by resampling.
pub const RESAMPLE_MASS_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionOptions {
    /// Defaults to [`BathSpec::default_horizon`].
    pub horizon: Option<f64>,
    /// Defaults to `0.5/ω_c`, capped so the grid has at least 64 steps.
    pub step: Option<f64>,
    pub decimation: usize,
}

impl Default for EvolutionOptions {
    fn default() -> Self {
        EvolutionOptions {
            horizon: None,
            step: None,
            decimation: DEFAULT_DECIMATION,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionContext {
    pub spec: BathSpec,
    pub green: GreenTable,
    pub moments: MomentSeries,
    pub basis: PointerBasis,
    pub horizon: f64,
}

impl EvolutionContext {
    pub fn build(spec: &BathSpec, opts: EvolutionOptions) -> Result<Self> {
        spec.validate()?;
        let horizon = opts.horizon.unwrap_or_else(|| spec.default_horizon());
        let step = opts.step.unwrap_or(0.5 / spec.omega_c).min(horizon / 64.0);
        if !(step > 0.0) {
            return Err(Error::Domain(format!("time step must be positive, got {step}")));
        }
        let n_steps = (horizon / step).ceil() as usize;
        let green = solve_green(spec, horizon, n_steps)?;
        let moments = compute_moments_with(&green, spec, opts.decimation)?;
        let basis = pointer_basis(stationary_momentum_variance(spec)?)?;
        Self::from_parts(*spec, green, moments, basis)
    }

    pub fn from_parts(
        spec: BathSpec,
        green: GreenTable,
        moments: MomentSeries,
        basis: PointerBasis,
    ) -> Result<Self> {
        if green.spec.fingerprint() != spec.fingerprint() {
            return Err(Error::Config("Green's function was solved for a different bath".into()));
        }
        let h = green.grid.h;
        let on_grid = moments.t.iter().all(|t| {
            let r = t / h;
            (r - r.round()).abs() < 1e-6 && r.round() as usize <= green.grid.n_steps
        });
        if !on_grid {
            return Err(Error::Config("moment times are not a subset of the Green's-function grid".into()));
        }
        let horizon = moments.horizon();
        Ok(EvolutionContext {
            spec,
            green,
            moments,
            basis,
            horizon,
        })
    }

    pub fn m_at(&self, t: f64) -> Result<Mat2> {
        self.moments.at(t)
    }

    /// Smallest eigenvalue of `M(t) - Γ∞/2`.
    pub fn criterion_eigenvalue(&self, t: f64) -> Result<f64> {
        Ok(self.m_at(t)?.sub(&self.basis.gamma_inf.scale(0.5)).min_eigenvalue())
    }

    pub fn tolerance(&self) -> f64 {
        CRITERION_TOL * self.basis.gamma_inf.trace()
    }
}

/// `(V d₀, V Σ₀ Vᵀ + M(t))`.
pub fn propagate_gaussian(state: &GaussianState, ctx: &EvolutionContext, t: f64) -> Result<GaussianState> {
    let pm = v_matrix(&ctx.green, t)?;
    if pm.det_v.abs() <= DET_V_FLOOR {
        return Err(Error::SingularPropagator { det: pm.det_v });
    }
    let m = ctx.m_at(t)?;
    Ok(GaussianState {
        d: pm.v.apply(state.d),
        sigma: pm.v.congruence(&state.sigma).add(&m),
    })
}

/// Grid of the same size as `w0` covering the propagated first and second
/// moments of `w0` to `±9σ`.
pub fn output_grid(w0: &WignerGrid, ctx: &EvolutionContext, t: f64) -> Result<GridSpec> {
    let (d, sigma) = w0.moments();
    let moved = propagate_gaussian(&GaussianState { d, sigma }, ctx, t)?;
    let n = w0.spec.nx.max(w0.spec.np);
    GridSpec::covering(n, &[moved])
}

/// Propagated Wigner function on [`output_grid`].
pub fn propagate(w0: &WignerGrid, ctx: &EvolutionContext, t: f64) -> Result<WignerGrid> {
    if v_matrix(&ctx.green, t)?.v == Mat2::IDENTITY && ctx.m_at(t)? == Mat2::ZERO {
        return Ok(w0.clone());
    }
    let out = output_grid(w0, ctx, t)?;
    propagate_onto(w0, ctx, t, out)
}

pub fn propagate_onto(w0: &WignerGrid, ctx: &EvolutionContext, t: f64, out: GridSpec) -> Result<WignerGrid> {
    let pm = v_matrix(&ctx.green, t)?;
    let m = ctx.m_at(t)?;
    if pm.v == Mat2::IDENTITY && m == Mat2::ZERO && out == w0.spec {
        return Ok(w0.clone());
    }
    pushforward(w0, &pm.v, &m, out, 0.0)
}

/// Pointer weight `W₁ = N(M - Γ∞/2) ⊛ W₀′` on [`output_grid`].
pub fn pointer_weight(w0: &WignerGrid, ctx: &EvolutionContext, t: f64) -> Result<WignerGrid> {
    let out = output_grid(w0, ctx, t)?;
    pointer_weight_onto(w0, ctx, t, out)
}

pub fn pointer_weight_onto(
    w0: &WignerGrid,
    ctx: &EvolutionContext,
    t: f64,
    out: GridSpec,
) -> Result<WignerGrid> {
    if w0.s_order != 0.0 {
        return Err(Error::Domain(format!(
            "pointer weight needs an ordinary Wigner function, got s = {}",
            w0.s_order
        )));
    }
    let kernel = ctx.m_at(t)?.sub(&ctx.basis.gamma_inf.scale(0.5));
    let min_eig = kernel.min_eigenvalue();
    if min_eig < -ctx.tolerance() {
        return Err(Error::NotYetDefined { min_eig });
    }
    let pm = v_matrix(&ctx.green, t)?;
    pushforward(w0, &pm.v, &kernel, out, 1.0)
}

/// `N(K) ⊛ [W₀(V⁻¹·)/|det V|]` sampled on `out`.
///
/// When `V` keeps input cells at least one output cell wide the map is
/// applied by bicubic inverse-map resampling followed by an FFT
/// convolution. Otherwise `W₀′` is thinner than the output grid can hold,
/// and the result is assembled from its transform
/// `χ₀(Vᵀk)·exp(-kᵀKk/2)`, with `χ₀` summed directly over the input grid.
fn pushforward(w0: &WignerGrid, v: &Mat2, kernel: &Mat2, out: GridSpec, s_order: f64) -> Result<WignerGrid> {
    let det = v.det();
    if det.abs() <= DET_V_FLOOR {
        return Err(Error::SingularPropagator { det });
    }
    let w = if resolvable(w0, v, &out) {
        let mapped = resample(w0, v, out)?;
        gaussian_convolve(&mapped, kernel)?
    } else {
        spectral_pushforward(w0, v, kernel, out)?
    };
    let deficit = (w.norm_cached - w0.norm_cached).abs();
    if deficit > RESAMPLE_MASS_TOL {
        return Err(Error::Coverage { deficit });
    }
    let scale = w0.norm_cached / w.norm_cached;
    let values = w.values.iter().map(|v| v * scale).collect();
    Ok(WignerGrid::from_values(out, values, s_order))
}

/// Smallest singular value of `V` times the input spacing, compared with
/// the output spacing.
fn resolvable(w0: &WignerGrid, v: &Mat2, out: &GridSpec) -> bool {
    let vtv = v.transpose().mul(v);
    let s_min = vtv.min_eigenvalue().max(0.0).sqrt();
    let d_in = w0.spec.dx().min(w0.spec.dp());
    let d_out = out.dx().max(out.dp());
    s_min * d_in >= d_out * (1.0 - 1e-12)
}

fn resample(w0: &WignerGrid, v: &Mat2, out: GridSpec) -> Result<WignerGrid> {
    let inv = v.inverse().ok_or(Error::SingularPropagator { det: v.det() })?;
    let jac = 1.0 / v.det().abs();
    let mapped = WignerGrid::from_fn(out, w0.s_order, |x, p| {
        let e = inv.apply([x, p]);
        w0.interpolate(e[0], e[1]) * jac
    })?;
    let deficit = (mapped.norm_cached - w0.norm_cached).abs();
    if deficit > RESAMPLE_MASS_TOL {
        return Err(Error::Coverage { deficit });
    }
    Ok(mapped)
}

/// Largest number of input-sample × frequency products the spectral route
/// will attempt.
const SPECTRAL_BUDGET: f64 = 4e10;

fn spectral_pushforward(w0: &WignerGrid, v: &Mat2, kernel: &Mat2, out: GridSpec) -> Result<WignerGrid> {
    let (n1, n2) = (2 * out.nx, 2 * out.np);
    let (dx, dp) = (out.dx(), out.dp());
    let (dk1, dk2) = (2.0 * PI / (n1 as f64 * dx), 2.0 * PI / (n2 as f64 * dp));
    let signed = |m: usize, n: usize| if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
    // exp(-40) is below double-precision relevance of the unit-peak factor
    // χ(-k) = conj χ(k): evaluate one mode of each mirror pair
    let mut modes = Vec::new();
    for a in 0..n1 {
        let k1 = dk1 * signed(a, n1);
        for b in 0..n2 {
            if ((n1 - a) % n1, (n2 - b) % n2) < (a, b) {
                continue;
            }
            let k2 = dk2 * signed(b, n2);
            let q = kernel.a * k1 * k1 + 2.0 * kernel.b * k1 * k2 + kernel.d * k2 * k2;
            if 0.5 * q < 40.0 {
                modes.push((a, b, k1, k2, (-0.5 * q).exp()));
            }
        }
    }
    let cost = modes.len() as f64 * (w0.spec.nx * w0.spec.np) as f64;
    if cost > SPECTRAL_BUDGET {
        return Err(Error::Resolution(format!(
            "propagated state is under-resolved on the output grid and the spectral route would need {} modes",
            modes.len()
        )));
    }
    let s = w0.spec;
    let tw = |i: usize, n: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
    let weights: Vec<f64> = (0..s.nx * s.np)
        .map(|idx| {
            let (i, j) = (idx / s.np, idx % s.np);
            w0.values[idx] * tw(i, s.nx) * tw(j, s.np) * s.dx() * s.dp()
        })
        .collect();
    let xs: Vec<f64> = (0..s.nx).map(|i| s.x(i)).collect();
    let ps: Vec<f64> = (0..s.np).map(|j| s.p(j)).collect();
    let values: Vec<((usize, usize), Complex64, Complex64)> = modes
        .par_iter()
        .map(|&(a, b, k1, k2, g)| {
            // χ₀(q) at q = Vᵀk
            let q1 = v.a * k1 + v.c * k2;
            let q2 = v.b * k1 + v.d * k2;
            let phase_p: Vec<Complex64> = ps.iter().map(|p| Complex64::from_polar(1.0, q2 * p)).collect();
            let mut chi = Complex64::default();
            for (i, x) in xs.iter().enumerate() {
                let row = &weights[i * s.np..(i + 1) * s.np];
                let mut r = Complex64::default();
                for (w, e) in row.iter().zip(&phase_p) {
                    r += e * *w;
                }
                chi += Complex64::from_polar(1.0, q1 * x) * r;
            }
            ((a, b), chi * g, Complex64::from_polar(1.0, -(k1 * out.x_min + k2 * out.p_min)))
        })
        .collect();
    let mut buf = vec![Complex64::default(); n1 * n2];
    for ((a, b), val, shift) in values {
        buf[a * n2 + b] = val * shift;
        let (ma, mb) = ((n1 - a) % n1, (n2 - b) % n2);
        buf[ma * n2 + mb] = val.conj() * shift.conj();
    }
    let mut planner = FftPlanner::<f64>::new();
    let row_fft = planner.plan_fft_forward(n2);
    let col_fft = planner.plan_fft_forward(n1);
    buf.par_chunks_mut(n2).for_each(|row| row_fft.process(row));
    let mut cols = vec![Complex64::default(); n1 * n2];
    cols.par_chunks_mut(n1).enumerate().for_each(|(b, col)| {
        for (a, c) in col.iter_mut().enumerate() {
            *c = buf[a * n2 + b];
        }
    });
    cols.par_chunks_mut(n1).for_each(|col| col_fft.process(col));
    let scale = 1.0 / (n1 as f64 * dx * n2 as f64 * dp);
    let mut vals = vec![0.0; out.nx * out.np];
    for i in 0..out.nx {
        for j in 0..out.np {
            vals[i * out.np + j] = cols[j * n1 + i].re * scale;
        }
    }
    Ok(WignerGrid::from_values(out, vals, w0.s_order))
}

/// Whether `m - Γ∞/2 ⪰ 0`, and its smallest eigenvalue.
pub fn positivity_criterion(m: &Mat2, basis: &PointerBasis) -> Result<(bool, f64)> {
    if !m.is_symmetric(1e-12) {
        return Err(Error::Domain("moment matrix must be symmetric".into()));
    }
    let min_eig = m.sub(&basis.gamma_inf.scale(0.5)).min_eigenvalue();
    Ok((min_eig >= -CRITERION_TOL * basis.gamma_inf.trace(), min_eig))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    Increasing,
    Decreasing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationReport {
    pub t_c: Option<f64>,
    pub times: Vec<f64>,
    pub min_eig_series: Vec<f64>,
    /// Grid intervals `(t_i, t_{i+1})` where the criterion switches on.
    pub up_crossings: Vec<(f64, f64)>,
    /// Grid intervals where it switches off again.
    pub down_crossings: Vec<(f64, f64)>,
    /// Onset of `M - Γ∞/4 ≻ 0`, where `W₁` would first be defined under
    /// the quarter-covariance kernel.
    pub quarter_kernel_onset: Option<f64>,
    pub late_trend: Trend,
    pub tolerance: f64,
    pub horizon: f64,
    pub horizon_limited: bool,
}

/// Last sampled up-crossing of `f ≥ -tol` after which every later sample
/// stays non-negative, refined by bisection on `f`.
pub fn last_onset<F: Fn(f64) -> f64>(times: &[f64], values: &[f64], f: F, tol: f64, rel: f64) -> Option<f64> {
    let ok = |v: f64| v >= -tol;
    let last_bad = values.iter().rposition(|&v| !ok(v));
    match last_bad {
        None => Some(times[0]),
        Some(j) if j + 1 == values.len() => None,
        Some(j) => {
            let (mut lo, mut hi) = (times[j], times[j + 1]);
            while hi - lo > rel * hi {
                let mid = 0.5 * (lo + hi);
                if ok(f(mid)) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Some(hi)
        }
    }
}

fn crossings(times: &[f64], values: &[f64], tol: f64) -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
    let (mut up, mut down) = (Vec::new(), Vec::new());
    for i in 1..values.len() {
        let (a, b) = (values[i - 1] >= -tol, values[i] >= -tol);
        if !a && b {
            up.push((times[i - 1], times[i]));
        } else if a && !b {
            down.push((times[i - 1], times[i]));
        }
    }
    (up, down)
}

/// Localization time of a context; depends on `M` and `Γ∞` only.
pub fn find_tc(ctx: &EvolutionContext) -> Result<LocalizationReport> {
    let half = ctx.basis.gamma_inf.scale(0.5);
    let quarter = ctx.basis.gamma_inf.scale(0.25);
    let times = ctx.moments.t.clone();
    let eig = |t: f64, shift: &Mat2| -> f64 {
        ctx.moments
            .at(t)
            .map(|m| m.sub(shift).min_eigenvalue())
            .unwrap_or(f64::NAN)
    };
    let min_eig_series: Vec<f64> = (0..times.len())
        .map(|i| ctx.moments.matrix(i).sub(&half).min_eigenvalue())
        .collect();
    let quarter_series: Vec<f64> = (0..times.len())
        .map(|i| ctx.moments.matrix(i).sub(&quarter).min_eigenvalue())
        .collect();
    let tol = ctx.tolerance();
    let t_c = last_onset(&times, &min_eig_series, |t| eig(t, &half), tol, TC_REL_TOL);
    // strictly positive definite: zero tolerance, sign flipped
    let quarter_kernel_onset = last_onset(
        &times,
        &quarter_series.iter().map(|v| if *v > 0.0 { 0.0 } else { -1.0 }).collect::<Vec<_>>(),
        |t| if eig(t, &quarter) > 0.0 { 0.0 } else { -1.0 },
        0.0,
        TC_REL_TOL,
    );
    let (up_crossings, down_crossings) = crossings(&times, &min_eig_series, tol);
    let n = min_eig_series.len();
    let late_trend = if min_eig_series[n - 1] >= min_eig_series[(3 * n) / 4] {
        Trend::Increasing
    } else {
        Trend::Decreasing
    };
    Ok(LocalizationReport {
        t_c,
        times,
        min_eig_series,
        up_crossings,
        down_crossings,
        quarter_kernel_onset,
        late_trend,
        tolerance: tol,
        horizon: ctx.horizon,
        horizon_limited: true,
    })
}

/// Scaled high-temperature criterion matrix `m(τ) - diag(0, 1/2)` built
/// from the printed limits at `ζ = 1`.
pub fn universal_criterion_matrix(tau: f64) -> Result<Mat2> {
    Ok(high_t_moments_ohmic(1.0, tau)?.sub(&Mat2::diag(0.0, 0.5)))
}

/// Same with the exactly integrated white-noise moments.
pub fn white_noise_criterion_matrix(tau: f64) -> Result<Mat2> {
    Ok(high_t_moments_ohmic_exact(1.0, tau)?.sub(&Mat2::diag(0.0, 0.5)))
}

const TAU_SCAN_MAX: f64 = 40.0;
const TAU_SCAN_POINTS: usize = 40_000;

fn scan_onset(matrix: fn(f64) -> Result<Mat2>) -> f64 {
    let eig = |t: f64| matrix(t).map(|m| m.min_eigenvalue()).unwrap_or(f64::NAN);
    let times: Vec<f64> = (1..=TAU_SCAN_POINTS)
        .map(|i| TAU_SCAN_MAX * i as f64 / TAU_SCAN_POINTS as f64)
        .collect();
    let values: Vec<f64> = times.iter().map(|&t| eig(t)).collect();
    last_onset(&times, &values, eig, 0.0, 1e-15).unwrap_or(f64::NAN)
}

/// Universal scaled localization time `τ_c = ζ T_c` of the `T → ∞` Ohmic
/// limit (printed moment limits), by scan and bisection.
pub fn tau_c_universal() -> f64 {
    scan_onset(universal_criterion_matrix)
}

/// `τ_c` as the last root of `det(m(τ) - diag(0, 1/2))`, located by
/// Newton iteration from a coarse bracket with the derivative in closed
/// form. Independent of the eigenvalue route.
pub fn tau_c_universal_determinant() -> f64 {
    // det = 2(τ-1+e^{-τ})(1/2 - e^{-2τ}) - 4(1-e^{-τ})²
    let f = |t: f64| {
        let e = (-t).exp();
        2.0 * (t - 1.0 + e) * (0.5 - e * e) - 4.0 * (1.0 - e) * (1.0 - e)
    };
    let df = |t: f64| {
        let e = (-t).exp();
        2.0 * (1.0 - e) * (0.5 - e * e) + 4.0 * (t - 1.0 + e) * e * e - 8.0 * (1.0 - e) * e
    };
    let mut t = (1..400)
        .map(|i| 0.1 * i as f64)
        .rev()
        .find(|&t| f(t) < 0.0)
        .map(|t| t + 0.05)
        .unwrap_or(f64::NAN);
    for _ in 0..100 {
        let step = f(t) / df(t);
        t -= step;
        if step.abs() < 1e-15 * t {
            break;
        }
    }
    t
}

/// `τ_c` of the exactly integrated white-noise limit, the value the full
/// pipeline approaches at high temperature.
pub fn tau_c_white_noise() -> f64 {
    scan_onset(white_noise_criterion_matrix)
}

/// `T_c(ζ)` from the printed high-temperature limit, found on the
/// unscaled moments.
pub fn tc_high_t_limit(zeta: f64) -> Result<f64> {
    if !(zeta > 0.0) {
        return Err(Error::Domain(format!("zeta must be positive, got {zeta}")));
    }
    let horizon = TAU_SCAN_MAX / zeta;
    let eig = |t: f64| {
        high_t_moments_ohmic(zeta, t)
            .map(|m| m.sub(&Mat2::diag(0.0, 0.5)).min_eigenvalue())
            .unwrap_or(f64::NAN)
    };
    let times: Vec<f64> = (1..=4000).map(|i| horizon * i as f64 / 4000.0).collect();
    let values: Vec<f64> = times.iter().map(|&t| eig(t)).collect();
    last_onset(&times, &values, eig, 0.0, 1e-14).ok_or_else(|| Error::NumericalFailure {
        what: "high-temperature localization time".into(),
        residual: values[values.len() - 1],
        at: horizon,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Figure1Row {
    pub zeta: f64,
    pub log10_zeta: f64,
    pub tc: f64,
    pub log10_tc: f64,
}

/// Full-pipeline localization time at finite temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Figure1Probe {
    pub zeta: f64,
    pub beta: f64,
    pub omega_c: f64,
    pub tc: Option<f64>,
    /// `τ_c/ζ` with the exactly integrated limit.
    pub tc_limit: f64,
    pub relative_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Figure1Table {
    pub rows: Vec<Figure1Row>,
    pub slope: f64,
    pub tau_c: f64,
    pub probes: Vec<Figure1Probe>,
}

pub const PROBE_BETA: f64 = 1e-3;
pub const PROBE_OMEGA_C: f64 = 20.0;

/// `log T_c` against `log ζ` in the high-temperature Ohmic limit, plus
/// full-pipeline probes at `β = 10⁻³`, `ω_c = 20` for `probe_zetas`.
pub fn figure1_study(zetas: &[f64], probe_zetas: &[f64]) -> Result<Figure1Table> {
    if zetas.len() < 2 {
        return Err(Error::Domain("need at least two couplings".into()));
    }
    let rows: Vec<Figure1Row> = zetas
        .iter()
        .map(|&z| {
            let tc = tc_high_t_limit(z)?;
            Ok(Figure1Row {
                zeta: z,
                log10_zeta: z.log10(),
                tc,
                log10_tc: tc.log10(),
            })
        })
        .collect::<Result<_>>()?;
    let slope = fit_slope(&rows);
    let probes = probe_zetas
        .iter()
        .map(|&z| figure1_probe(z, PROBE_BETA, PROBE_OMEGA_C))
        .collect::<Result<_>>()?;
    Ok(Figure1Table {
        rows,
        slope,
        tau_c: tau_c_universal(),
        probes,
    })
}

fn fit_slope(rows: &[Figure1Row]) -> f64 {
    let n = rows.len() as f64;
    let mx = rows.iter().map(|r| r.log10_zeta).sum::<f64>() / n;
    let my = rows.iter().map(|r| r.log10_tc).sum::<f64>() / n;
    let sxy: f64 = rows.iter().map(|r| (r.log10_zeta - mx) * (r.log10_tc - my)).sum();
    let sxx: f64 = rows.iter().map(|r| (r.log10_zeta - mx).powi(2)).sum();
    sxy / sxx
}

pub fn figure1_probe(zeta: f64, beta: f64, omega_c: f64) -> Result<Figure1Probe> {
    let spec = BathSpec::exponential(1.0, zeta, beta, omega_c)?;
    let ctx = EvolutionContext::build(&spec, EvolutionOptions::default())?;
    let tc = find_tc(&ctx)?.t_c;
    let tc_limit = tau_c_white_noise() / zeta;
    Ok(Figure1Probe {
        zeta,
        beta,
        omega_c,
        tc,
        tc_limit,
        relative_deviation: tc.map(|t| (t - tc_limit).abs() / tc_limit).unwrap_or(f64::INFINITY),
    })
}

/// `n` log-spaced couplings on `[lo, hi]`.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let f = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
            10f64.powf(lo.log10() + f * (hi.log10() - lo.log10()))
        })
        .collect()
}

impl Figure1Table {
    pub fn write_csv(&self, path: &Path, header: &[String]) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for h in header {
            writeln!(f, "# {h}")?;
        }
        writeln!(f, "zeta,log10_zeta,Tc,log10_Tc")?;
        for r in &self.rows {
            writeln!(f, "{:.12e},{:.12e},{:.12e},{:.12e}", r.zeta, r.log10_zeta, r.tc, r.log10_tc)?;
        }
        f.flush()?;
        Ok(())
    }

    /// Gnuplot script that plots `csv_name` from its own directory.
    pub fn write_gnuplot(&self, path: &Path, csv_name: &str, header: &[String]) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for h in header {
            writeln!(f, "# {h}")?;
        }
        writeln!(f, "set datafile separator ','")?;
        writeln!(f, "set datafile commentschars '#'")?;
        writeln!(f, "set key top right")?;
        writeln!(f, "set xlabel 'log10 zeta'")?;
        writeln!(f, "set ylabel 'log10 T_c'")?;
        writeln!(f, "set title 'localization time, high-temperature Ohmic limit (slope {:.6})'", self.slope)?;
        writeln!(f, "set terminal pngcairo size 800,600")?;
        writeln!(f, "set output 'figure1.png'")?;
        writeln!(
            f,
            "plot '{csv_name}' every ::1 using 2:4 with linespoints title 'T_c', log10({:.12}) - x with lines dt 2 title 'tau_c / zeta'",
            self.tau_c
        )?;
        f.flush()?;
        Ok(())
    }
}
