//! Green's function of the damped free particle.
//!
//! `G̈(t) + ∫₀ᵗ γ(t-s) Ġ(s) ds = 0` with `G(0) = 0`, `Ġ(0) = 1`, solved as the
//! first-order system for `(G, Ġ)` by a trapezoidal Volterra march. `G̈` is
//! read off the equation itself at every step.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::bath::{self, BathSpec, KernelTable};
use crate::error::{Error, Result};
use crate::grid::{cubic_interp, TimeGrid};
use crate::linalg::Mat2;

/// Relative bound on the discrete Volterra residual.
pub const RESIDUAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct GreenTable {
    pub spec: BathSpec,
    pub grid: TimeGrid,
    pub g: Vec<f64>,
    pub g_dot: Vec<f64>,
    pub g_ddot: Vec<f64>,
}

/// `V(t) = [[Ġ, G], [G̈, Ġ]]` and its determinant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagatorMatrix {
    pub v: Mat2,
    pub det_v: f64,
}

impl PropagatorMatrix {
    pub fn from_green(g: f64, g_dot: f64, g_ddot: f64) -> Self {
        let v = Mat2::new(g_dot, g, g_ddot, g_dot);
        PropagatorMatrix { v, det_v: v.det() }
    }
}

/// Closed-form Ohmic Green's function `((1-e^{-ζt})/ζ, e^{-ζt}, -ζe^{-ζt})`.
pub fn green_ohmic(zeta: f64, t: f64) -> Result<(f64, f64, f64)> {
    if !(zeta > 0.0) || !(t >= 0.0) {
        return Err(Error::Domain(format!("need zeta > 0 and t >= 0 (got {zeta}, {t})")));
    }
    let e = (-zeta * t).exp();
    Ok((-(-zeta * t).exp_m1() / zeta, e, -zeta * e))
}

/// Long-time asymptote `f(t) = sin(πp/2) t^{p-1} / (ζ Γ(p))`.
pub fn green_asymptote(spec: &BathSpec, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("asymptote needs t > 0, got {t}")));
    }
    let p = spec.p;
    Ok((PI * p / 2.0).sin() * t.powf(p - 1.0) / (spec.zeta * gamma(p)))
}

/// Solves for `G` on `[0, t_max]` with `n_steps` uniform steps.
///
/// Strictly Ohmic baths are sampled from [`green_ohmic`].
pub fn solve_green(spec: &BathSpec, t_max: f64, n_steps: usize) -> Result<GreenTable> {
    if n_steps < 64 {
        return Err(Error::Domain(format!("need at least 64 steps, got {n_steps}")));
    }
    let grid = TimeGrid::new(t_max, n_steps)?;
    if spec.is_strictly_ohmic() {
        return ohmic_table(spec, grid);
    }
    let kernel = KernelTable::damping(spec, grid)?;
    let table = march(spec, grid, &kernel.values);
    let (worst, at) = table.max_residual(&kernel.values);
    let scale = table.g_ddot.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    if !(worst <= RESIDUAL_TOL * scale) {
        return Err(Error::NumericalFailure {
            what: "Volterra march".into(),
            residual: worst / scale,
            at,
        });
    }
    Ok(table)
}

fn ohmic_table(spec: &BathSpec, grid: TimeGrid) -> Result<GreenTable> {
    let n = grid.len();
    let (mut g, mut gd, mut gdd) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        let (a, b, c) = green_ohmic(spec.zeta, grid.t(i))?;
        g.push(a);
        gd.push(b);
        gdd.push(c);
    }
    Ok(GreenTable {
        spec: *spec,
        grid,
        g,
        g_dot: gd,
        g_ddot: gdd,
    })
}

/// Trapezoidal march:
///
/// ```text
/// a_n = -h [ γ_n v_0/2 + Σ_{0<j<n} γ_{n-j} v_j + γ_0 v_n/2 ]
/// v_n = v_{n-1} + h (a_{n-1} + a_n)/2
/// G_n = G_{n-1} + h (v_{n-1} + v_n)/2
/// ```
///
/// implicit in `v_n` through the `γ_0` term only.
fn march(spec: &BathSpec, grid: TimeGrid, gamma_k: &[f64]) -> GreenTable {
    let n_pts = grid.len();
    let h = grid.h;
    let mut g = vec![0.0; n_pts];
    let mut v = vec![0.0; n_pts];
    let mut a = vec![0.0; n_pts];
    v[0] = 1.0;
    let denom = 1.0 + 0.25 * h * h * gamma_k[0];
    for n in 1..n_pts {
        let history: f64 = gamma_k[1..n]
            .iter()
            .rev()
            .zip(&v[1..n])
            .map(|(k, vj)| k * vj)
            .sum();
        let explicit = -h * (0.5 * gamma_k[n] * v[0] + history);
        v[n] = (v[n - 1] + 0.5 * h * (a[n - 1] + explicit)) / denom;
        a[n] = explicit - 0.5 * h * gamma_k[0] * v[n];
        g[n] = g[n - 1] + 0.5 * h * (v[n - 1] + v[n]);
    }
    GreenTable {
        spec: *spec,
        grid,
        g,
        g_dot: v,
        g_ddot: a,
    }
}

impl GreenTable {
    pub fn horizon(&self) -> f64 {
        self.grid.t_max()
    }

    pub fn times(&self) -> Vec<f64> {
        self.grid.times()
    }

    /// Pointwise residual `G̈_n + h·Σ' γ_{n-j} Ġ_j` (trapezoid weights),
    /// re-evaluated from the stored samples.
    pub fn residuals(&self, gamma_k: &[f64]) -> Vec<f64> {
        let h = self.grid.h;
        (0..self.grid.len())
            .into_par_iter()
            .map(|n| {
                if n == 0 {
                    return self.g_ddot[0];
                }
                let mut s = 0.5 * (gamma_k[n] * self.g_dot[0] + gamma_k[0] * self.g_dot[n]);
                for j in 1..n {
                    s += gamma_k[n - j] * self.g_dot[j];
                }
                self.g_ddot[n] + h * s
            })
            .collect()
    }

    /// Largest absolute residual and the time where it occurs.
    pub fn max_residual(&self, gamma_k: &[f64]) -> (f64, f64) {
        self.residuals(gamma_k)
            .iter()
            .enumerate()
            .fold((0.0, 0.0), |(m, at), (i, r)| {
                if r.abs() > m {
                    (r.abs(), self.grid.t(i))
                } else {
                    (m, at)
                }
            })
    }

    fn check_range(&self, t: f64) -> Result<()> {
        let horizon = self.horizon();
        if !(t >= 0.0 && t <= horizon * (1.0 + 1e-12)) {
            return Err(Error::OutOfRange { t, horizon });
        }
        Ok(())
    }

    /// Cubic interpolation of `(G, Ġ, G̈)`.
    pub fn at(&self, t: f64) -> Result<(f64, f64, f64)> {
        self.check_range(t)?;
        let h = self.grid.h;
        Ok((
            cubic_interp(&self.g, h, t),
            cubic_interp(&self.g_dot, h, t),
            cubic_interp(&self.g_ddot, h, t),
        ))
    }
}

/// `V(t)` at an arbitrary time inside the solved horizon.
pub fn v_matrix(table: &GreenTable, t: f64) -> Result<PropagatorMatrix> {
    let (g, gd, gdd) = table.at(t)?;
    Ok(PropagatorMatrix::from_green(g, gd, gdd))
}

/// Number of Talbot nodes.
pub const TALBOT_NODES: usize = 24;

/// Fixed-Talbot inversion of a Laplace transform at `t > 0`.
pub fn talbot_invert<F>(f: F, t: f64, nodes: usize) -> Result<f64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    if !(t > 0.0) {
        return Err(Error::Domain(format!("Talbot inversion needs t > 0, got {t}")));
    }
    let m = nodes as f64;
    let r = 2.0 * m / (5.0 * t);
    let mut acc = 0.5 * (f(Complex64::new(r, 0.0))? * (r * t).exp()).re;
    for k in 1..nodes {
        let theta = k as f64 * PI / m;
        let cot = theta.cos() / theta.sin();
        let z = Complex64::new(r * theta * cot, r * theta);
        let sigma = theta + (theta * cot - 1.0) * cot;
        let term = (z * t).exp() * f(z)? * Complex64::new(1.0, sigma);
        acc += term.re;
    }
    let value = r / m * acc;
    if !value.is_finite() {
        return Err(Error::NumericalFailure {
            what: "Talbot contour evaluation".into(),
            residual: f64::INFINITY,
            at: t,
        });
    }
    Ok(value)
}

/// `Ĝ(z) = 1/(z² + z γ̂(z))` with `γ̂` continued off the positive axis.
pub fn green_laplace(spec: &BathSpec, z: Complex64) -> Result<Complex64> {
    let gh = bath::damping_laplace_continued(spec, z)?;
    Ok(1.0 / (z * z + z * gh))
}

/// `G(t)` at each sample by Talbot inversion of [`green_laplace`].
/// Independent of the time-domain march.
pub fn inverse_laplace_check(spec: &BathSpec, t_samples: &[f64]) -> Result<Vec<f64>> {
    t_samples
        .par_iter()
        .map(|&t| talbot_invert(|z| green_laplace(spec, z), t, TALBOT_NODES))
        .collect()
}
