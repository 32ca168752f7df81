//! Second moments of the additive noise, `M(t) = [[A, C], [C, B]]`.
//!
//! ```text
//! A(t) = ∫₀ᵗ∫₀ᵗ G(u) G(u') K(u-u')      (u = t - s)
//! B(t) = ∫₀ᵗ∫₀ᵗ Ġ(u) Ġ(u') K(u-u')
//! C(t) = ∫₀ᵗ∫₀ᵗ G(u) Ġ(u') K(u-u')
//! ```
//!
//! All three are trapezoidal double sums on the Green's-function grid,
//! accumulated incrementally in `t` so that each grid time costs one causal
//! convolution entry.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::bath::{self, BathSpec, KernelKind, KernelTable};
use crate::error::{Error, Result};
use crate::green::{green_ohmic, GreenTable};
use crate::grid::cubic_interp;
use crate::linalg::Mat2;
use crate::quad::{self, Tolerance};

pub const DEFAULT_DECIMATION: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSeries {
    pub t: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl MomentSeries {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        *self.t.last().unwrap_or(&0.0)
    }

    pub fn spacing(&self) -> f64 {
        if self.t.len() < 2 {
            0.0
        } else {
            self.t[1] - self.t[0]
        }
    }

    pub fn matrix(&self, i: usize) -> Mat2 {
        Mat2::symmetric(self.a[i], self.c[i], self.b[i])
    }

    /// `M(t)` by cubic interpolation of `A`, `B`, `C`.
    pub fn at(&self, t: f64) -> Result<Mat2> {
        let horizon = self.horizon();
        if !(t >= 0.0 && t <= horizon * (1.0 + 1e-12)) || self.len() < 2 {
            return Err(Error::OutOfRange { t, horizon });
        }
        let h = self.spacing();
        Ok(Mat2::symmetric(
            cubic_interp(&self.a, h, t),
            cubic_interp(&self.c, h, t),
            cubic_interp(&self.b, h, t),
        ))
    }
}

/// [`compute_moments_with`] at the default decimation.
pub fn compute_moments(green: &GreenTable, spec: &BathSpec) -> Result<MomentSeries> {
    compute_moments_with(green, spec, DEFAULT_DECIMATION)
}

/// Tabulates `K` on the Green's-function grid and evaluates the moments at
/// every `decimation`-th grid time.
pub fn compute_moments_with(
    green: &GreenTable,
    spec: &BathSpec,
    decimation: usize,
) -> Result<MomentSeries> {
    let kernel = KernelTable::noise(spec, green.grid)?;
    moments_from_kernel(green, &kernel, decimation)
}

pub fn moments_from_kernel(
    green: &GreenTable,
    kernel: &KernelTable,
    decimation: usize,
) -> Result<MomentSeries> {
    if kernel.kind != KernelKind::Noise {
        return Err(Error::Config("moments need the noise kernel".into()));
    }
    if !green.grid.is_prefix_of(&kernel.grid) {
        return Err(Error::Config(format!(
            "kernel grid (h={}, n={}) does not cover the Green's-function grid (h={}, n={})",
            kernel.grid.h, kernel.grid.n_steps, green.grid.h, green.grid.n_steps
        )));
    }
    if decimation == 0 {
        return Err(Error::Config("decimation must be at least 1".into()));
    }
    let k = &kernel.values[..green.grid.len()];
    let h = green.grid.h;
    let x = &green.g;
    let y = &green.g_dot;
    let rx = causal_history(x, k);
    let ry = causal_history(y, k);

    let n = x.len();
    let k0 = k[0];
    let (mut uxx, mut uyy, mut uxy) = (0.0, 0.0, 0.0);
    let mut out = MomentSeries {
        t: Vec::new(),
        a: Vec::new(),
        b: Vec::new(),
        c: Vec::new(),
    };
    for i in 0..n {
        if i % decimation == 0 {
            let (a, b, c) = if i == 0 {
                (0.0, 0.0, 0.0)
            } else {
                let close = |u: f64, xi: f64, yi: f64, rxi: f64, ryi: f64| {
                    h * h * (u + 0.5 * xi * ryi + 0.5 * yi * rxi + 0.25 * xi * yi * k0)
                };
                (
                    close(uxx, x[i], x[i], rx[i], rx[i]),
                    close(uyy, y[i], y[i], ry[i], ry[i]),
                    close(uxy, x[i], y[i], rx[i], ry[i]),
                )
            };
            out.t.push(green.grid.t(i));
            out.a.push(a);
            out.b.push(b);
            out.c.push(c);
        }
        let w = if i == 0 { 0.5 } else { 1.0 };
        let (xt, yt) = (w * x[i], w * y[i]);
        uxx += 2.0 * xt * rx[i] + xt * xt * k0;
        uyy += 2.0 * yt * ry[i] + yt * yt * k0;
        uxy += xt * ry[i] + yt * rx[i] + xt * yt * k0;
    }
    Ok(out)
}

/// `R(i) = Σ_{j<i} w_j x_j K_{i-j}` with `w_0 = 1/2`, `w_j = 1` otherwise.
fn causal_history(x: &[f64], k: &[f64]) -> Vec<f64> {
    (0..x.len())
        .into_par_iter()
        .map(|i| {
            if i == 0 {
                return 0.0;
            }
            let mut s = 0.5 * x[0] * k[i];
            for j in 1..i {
                s += x[j] * k[i - j];
            }
            s
        })
        .collect()
}

/// Least-squares `κ` in `Ȧ = κ C` over the late half of the series, with
/// `Ȧ` from central differences.
pub fn fit_derivative_factor(series: &MomentSeries) -> Result<f64> {
    let n = series.len();
    if n < 8 {
        return Err(Error::Domain("need at least 8 samples to fit".into()));
    }
    let h = series.spacing();
    let (mut num, mut den) = (0.0, 0.0);
    for i in n / 2..n - 1 {
        let a_dot = (series.a[i + 1] - series.a[i - 1]) / (2.0 * h);
        num += a_dot * series.c[i];
        den += series.c[i] * series.c[i];
    }
    Ok(num / den)
}

fn asymptotic_prefactor(spec: &BathSpec) -> f64 {
    let p = spec.p;
    2.0 * (FRAC_PI_2 * p).sin() / (spec.beta * spec.zeta * gamma(p + 1.0))
}

/// Late-time growth `A″(t) = 2 sin(πp/2) t^p / (βζΓ(p+1))`.
pub fn asymptotic_a(spec: &BathSpec, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("asymptote needs t > 0, got {t}")));
    }
    Ok(asymptotic_prefactor(spec) * t.powf(spec.p))
}

/// `C″(t) = dA″/dt`.
pub fn asymptotic_c(spec: &BathSpec, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("asymptote needs t > 0, got {t}")));
    }
    Ok(asymptotic_prefactor(spec) * spec.p * t.powf(spec.p - 1.0))
}

/// `B∞ = (1/π) ∫₀^∞ dω ω² Im α(ω) coth(βω/2)`, with
/// `ω² Im α = ω γ′ / ((ω - γ″)² + γ′²)` and `γ̃ = γ′ + iγ″`.
pub fn stationary_momentum_variance(spec: &BathSpec) -> Result<f64> {
    if spec.is_strictly_ohmic() {
        return Err(Error::Unsupported(
            "the stationary momentum variance needs an exponential cutoff".into(),
        ));
    }
    let beta = spec.beta;
    let integrand = |w: f64| -> f64 {
        if w == 0.0 {
            return 0.0;
        }
        let re = spec.density_over_omega(w);
        let im = match bath::imag_gamma_tilde(spec, w) {
            Ok(v) => v,
            Err(_) => return f64::NAN,
        };
        let d = w - im;
        w * re / (d * d + re * re) * bath::coth(0.5 * beta * w)
    };
    let rate = spec.damping_rate();
    let wc = spec.omega_c;
    let mut breaks = vec![
        0.1 * rate,
        0.5 * rate,
        rate,
        2.0 * rate,
        10.0 * rate,
        1.0 / beta,
        wc,
        10.0 * wc,
        50.0 * wc,
    ];
    breaks.retain(|b| b.is_finite() && *b > 0.0);
    breaks.sort_by(|a, b| a.total_cmp(b));
    breaks.dedup();
    let est = quad::integrate_semi_infinite(integrand, 0.0, &breaks, Tolerance::new(1e-10, 1e-8))?;
    let b_inf = est.value / PI;
    if !(b_inf.is_finite() && b_inf > 0.0) {
        return Err(Error::NumericalFailure {
            what: "stationary momentum variance".into(),
            residual: est.error,
            at: f64::NAN,
        });
    }
    Ok(b_inf)
}

/// Pointer covariance `Γ∞ = diag(1/B∞, B∞)` and squeezing `−ln(B∞)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointerBasis {
    pub b_inf: f64,
    #[serde(skip)]
    pub gamma_inf: Mat2,
    pub alpha_sq: f64,
}

pub fn pointer_basis(b_inf: f64) -> Result<PointerBasis> {
    if !(b_inf > 0.0 && b_inf.is_finite()) {
        return Err(Error::Domain(format!("B∞ must be positive, got {b_inf}")));
    }
    Ok(PointerBasis {
        b_inf,
        gamma_inf: Mat2::diag(1.0 / b_inf, b_inf),
        alpha_sq: -0.5 * b_inf.ln(),
    })
}

/// High-temperature Ohmic limit `M(t)/T` in the printed closed form:
/// `A/T = 2(t-G)/ζ`, `C/T = 2(1-Ġ)/ζ`, `B/T = 1-e^{-2ζt}`.
pub fn high_t_moments_ohmic(zeta: f64, t: f64) -> Result<Mat2> {
    let (g, gd, _) = green_ohmic(zeta, t)?;
    Ok(Mat2::symmetric(
        2.0 * (t - g) / zeta,
        2.0 * (1.0 - gd) / zeta,
        -(-2.0 * zeta * t).exp_m1(),
    ))
}

/// `M(t)/T` for white noise `K = 2ζTδ`, integrated exactly:
/// `A/T = (2/ζ)[t - 2G + (1-e^{-2ζt})/(2ζ)]`, `C/T = ζG²`, `B/T = 1-e^{-2ζt}`.
pub fn high_t_moments_ohmic_exact(zeta: f64, t: f64) -> Result<Mat2> {
    let (g, _, _) = green_ohmic(zeta, t)?;
    let b = -(-2.0 * zeta * t).exp_m1();
    Ok(Mat2::symmetric(
        2.0 / zeta * (t - 2.0 * g + b / (2.0 * zeta)),
        zeta * g * g,
        b,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::green::solve_green;
    use approx::assert_relative_eq;

    fn brute(green: &GreenTable, k: &[f64], i: usize) -> (f64, f64, f64) {
        let h = green.grid.h;
        let w = |j: usize| if j == 0 || j == i { 0.5 } else { 1.0 };
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        if i == 0 {
            return (a, b, c);
        }
        for j in 0..=i {
            for l in 0..=i {
                let kk = k[j.abs_diff(l)] * w(j) * w(l) * h * h;
                a += green.g[j] * green.g[l] * kk;
                b += green.g_dot[j] * green.g_dot[l] * kk;
                c += green.g[j] * green.g_dot[l] * kk;
            }
        }
        (a, b, c)
    }

    #[test]
    fn recurrence_matches_double_sum() {
        let s = BathSpec::exponential(0.5, 1.0, 1.0, 10.0).unwrap();
        let g = solve_green(&s, 3.0, 120).unwrap();
        let k = KernelTable::noise(&s, g.grid).unwrap();
        let m = moments_from_kernel(&g, &k, 1).unwrap();
        for i in [0, 1, 2, 7, 60, 120] {
            let (a, b, c) = brute(&g, &k.values, i);
            assert_relative_eq!(m.a[i], a, max_relative = 1e-12, epsilon = 1e-300);
            assert_relative_eq!(m.b[i], b, max_relative = 1e-12, epsilon = 1e-300);
            assert_relative_eq!(m.c[i], c, max_relative = 1e-12, epsilon = 1e-300);
        }
    }

    #[test]
    fn zero_at_origin_and_decimated() {
        let s = BathSpec::exponential(1.0, 1.0, 1.0, 10.0).unwrap();
        let g = solve_green(&s, 2.0, 160).unwrap();
        let m = compute_moments(&g, &s).unwrap();
        assert_eq!(m.len(), 21);
        assert_eq!((m.a[0], m.b[0], m.c[0]), (0.0, 0.0, 0.0));
        assert_relative_eq!(m.spacing(), 8.0 * g.grid.h, max_relative = 1e-12);
    }

    #[test]
    fn grid_mismatch_is_config_error() {
        let s = BathSpec::exponential(1.0, 1.0, 1.0, 10.0).unwrap();
        let g = solve_green(&s, 2.0, 160).unwrap();
        let k = KernelTable::noise(&s, crate::grid::TimeGrid::new(2.0, 100).unwrap()).unwrap();
        assert!(matches!(moments_from_kernel(&g, &k, 8), Err(Error::Config(_))));
        let d = KernelTable::damping(&s, g.grid).unwrap();
        assert!(matches!(moments_from_kernel(&g, &d, 8), Err(Error::Config(_))));
    }

    #[test]
    fn asymptote_values() {
        let s = BathSpec::exponential(1.0, 2.0, 0.5, 10.0).unwrap();
        assert_relative_eq!(asymptotic_a(&s, 3.0).unwrap(), 2.0 * 3.0 / (0.5 * 2.0));
        assert_relative_eq!(asymptotic_c(&s, 7.0).unwrap(), 2.0 / (0.5 * 2.0));
        let s = BathSpec::exponential(1.5, 1.0, 1.0, 10.0).unwrap();
        let (t, dt) = (4.0, 1e-5);
        let fd = (asymptotic_a(&s, t + dt).unwrap() - asymptotic_a(&s, t - dt).unwrap()) / (2.0 * dt);
        assert_relative_eq!(fd, asymptotic_c(&s, t).unwrap(), max_relative = 1e-8);
        assert!(asymptotic_a(&s, 0.0).is_err());
    }

    #[test]
    fn pointer_basis_examples() {
        let pb = pointer_basis(1.0).unwrap();
        assert_eq!(pb.gamma_inf, Mat2::IDENTITY);
        assert_eq!(pb.alpha_sq, 0.0);
        let pb = pointer_basis(100.0).unwrap();
        assert_relative_eq!(pb.gamma_inf.a, 0.01);
        for b in [0.5, 2.0, 100.0] {
            assert_eq!(pointer_basis(b).unwrap().gamma_inf.det(), 1.0);
        }
        assert!(pointer_basis(0.0).is_err());
        assert!(pointer_basis(-1.0).is_err());
    }

    #[test]
    fn high_t_printed_and_exact_forms() {
        assert_eq!(high_t_moments_ohmic(1.3, 0.0).unwrap(), Mat2::ZERO);
        assert!(high_t_moments_ohmic_exact(1.3, 0.0).unwrap().max_abs_diff(&Mat2::ZERO) < 1e-15);
        for t in [0.2, 1.0, 5.0] {
            let m = high_t_moments_ohmic(0.7, t).unwrap();
            let g = green_ohmic(0.7, t).unwrap().0;
            assert_relative_eq!(m.b, 2.0 * g, max_relative = 1e-12);
        }
        let m = high_t_moments_ohmic(0.5, 200.0).unwrap();
        assert_relative_eq!(m.a, 2.0 * 200.0 / 0.5, max_relative = 0.02);
        assert_relative_eq!(m.d, 1.0, max_relative = 1e-12);
        // exact form: PSD and Ȧ = 2C
        for t in [0.05, 0.5, 3.0] {
            let m = high_t_moments_ohmic_exact(1.0, t).unwrap();
            assert!(m.min_eigenvalue() >= 0.0);
            let dt = 1e-6;
            let fd = (high_t_moments_ohmic_exact(1.0, t + dt).unwrap().a
                - high_t_moments_ohmic_exact(1.0, t - dt).unwrap().a)
                / (2.0 * dt);
            assert_relative_eq!(fd, 2.0 * m.b, max_relative = 1e-6);
        }
    }

    #[test]
    fn b_inf_weak_coupling() {
        let s = BathSpec::exponential(1.0, 0.01, 0.01, 100.0).unwrap();
        let b = stationary_momentum_variance(&s).unwrap();
        assert!((b * 0.01 - 1.0).abs() <= 0.05, "{b}");
    }

    #[test]
    fn b_inf_monotone_in_temperature() {
        let mut prev = 0.0;
        for beta in [1.0, 0.1, 0.01] {
            let s = BathSpec::exponential(0.5, 1.0, beta, 20.0).unwrap();
            let b = stationary_momentum_variance(&s).unwrap();
            assert!(b > prev);
            prev = b;
        }
        assert!(stationary_momentum_variance(&BathSpec::strictly_ohmic(1.0, 1.0).unwrap()).is_err());
    }
}
