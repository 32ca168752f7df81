//! Bath spectral densities and the kernels derived from them.
//!
//! Normalization used throughout (ħ = k = m = 1):
//!
//! ```text
//! I(ω)    = ζ ω^p e^{-ω/ω_c}
//! γ(t)    = (2/π) ∫₀^∞ dω I(ω)/ω cos(ωt)          so  γ̂(0) = ζ for p = 1
//! Re γ̃(ω) = I(ω)/ω                                  γ̃(ω) = γ̂(-iω + 0⁺)
//! K(t)    = (1/π) ∫₀^∞ dω Re γ̃(ω) ω coth(βω/2) cos(ωt)
//! ```
//!
//! With these, `∫ K dt = 2ζ/β` for Ohmic damping at high temperature, the
//! white-noise strength that makes the stationary momentum variance equal
//! to the temperature.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::quad::{self, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutoffKind {
    Exponential,
    None,
}

impl std::str::FromStr for CutoffKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exponential" | "exp" => Ok(CutoffKind::Exponential),
            "none" => Ok(CutoffKind::None),
            other => Err(Error::Config(format!("unknown cutoff kind `{other}`"))),
        }
    }
}

impl std::fmt::Display for CutoffKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CutoffKind::Exponential => "exponential",
            CutoffKind::None => "none",
        })
    }
}

/// Bath parameters: spectral exponent, coupling, inverse temperature and
/// cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    pub p: f64,
    pub zeta: f64,
    pub beta: f64,
    pub omega_c: f64,
    pub cutoff: CutoffKind,
}

impl BathSpec {
    pub fn new(p: f64, zeta: f64, beta: f64, omega_c: f64, cutoff: CutoffKind) -> Result<Self> {
        let spec = BathSpec {
            p,
            zeta,
            beta,
            omega_c,
            cutoff,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Exponential cutoff at `ω_c`.
    pub fn exponential(p: f64, zeta: f64, beta: f64, omega_c: f64) -> Result<Self> {
        Self::new(p, zeta, beta, omega_c, CutoffKind::Exponential)
    }

    /// Exponential cutoff at the default `ω_c = 50·max(ζ^{1/(2-p)}, 1/β)`.
    pub fn with_default_cutoff(p: f64, zeta: f64, beta: f64) -> Result<Self> {
        Self::exponential(p, zeta, beta, default_omega_c(p, zeta, beta))
    }

    /// Strictly Ohmic bath with no cutoff, `γ̂(z) = ζ`.
    pub fn strictly_ohmic(zeta: f64, beta: f64) -> Result<Self> {
        Self::new(1.0, zeta, beta, f64::INFINITY, CutoffKind::None)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 2.0) {
            return Err(Error::Domain(format!("exponent p must lie in (0, 2), got {}", self.p)));
        }
        if !(self.zeta > 0.0 && self.zeta.is_finite()) {
            return Err(Error::Domain(format!("coupling must be positive, got {}", self.zeta)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Domain(format!(
                "inverse temperature must be positive, got {}",
                self.beta
            )));
        }
        if !(self.omega_c > 0.0) {
            return Err(Error::Domain(format!("cutoff must be positive, got {}", self.omega_c)));
        }
        match self.cutoff {
            CutoffKind::Exponential if !self.omega_c.is_finite() => Err(Error::Domain(
                "exponential cutoff needs a finite omega_c".into(),
            )),
            CutoffKind::None if self.p != 1.0 => Err(Error::Unsupported(format!(
                "cutoff `none` is only available for p = 1 (got p = {})",
                self.p
            ))),
            _ => Ok(()),
        }
    }

    pub fn is_strictly_ohmic(&self) -> bool {
        self.cutoff == CutoffKind::None
    }

    /// Damping rate scale `ζ^{1/(2-p)}`.
    pub fn damping_rate(&self) -> f64 {
        self.zeta.powf(1.0 / (2.0 - self.p))
    }

    /// Default horizon `max(10/ζ^{1/(2-p)}, 20β)`.
    pub fn default_horizon(&self) -> f64 {
        (10.0 / self.damping_rate()).max(20.0 * self.beta)
    }

    /// One-line description used in file headers.
    pub fn fingerprint(&self) -> String {
        format!(
            "p={} zeta={} beta={} omega_c={} cutoff={}",
            self.p, self.zeta, self.beta, self.omega_c, self.cutoff
        )
    }

    fn require_cutoff(&self, what: &str) -> Result<()> {
        if self.is_strictly_ohmic() {
            Err(Error::Unsupported(format!("{what} needs an exponential cutoff")))
        } else {
            Ok(())
        }
    }

    /// `I(ω)/ω` without domain checks.
    pub(crate) fn density_over_omega(&self, omega: f64) -> f64 {
        let base = self.zeta * omega.powf(self.p - 1.0);
        match self.cutoff {
            CutoffKind::Exponential => base * (-omega / self.omega_c).exp(),
            CutoffKind::None => base,
        }
    }
}

pub fn default_omega_c(p: f64, zeta: f64, beta: f64) -> f64 {
    50.0 * zeta.powf(1.0 / (2.0 - p)).max(1.0 / beta)
}

/// `I(ω) = ζ ω^p e^{-ω/ω_c}` (no exponential factor for the strictly Ohmic
/// bath).
pub fn spectral_density(spec: &BathSpec, omega: f64) -> Result<f64> {
    if !(omega >= 0.0) {
        return Err(Error::Domain(format!("frequency must be non-negative, got {omega}")));
    }
    if omega == 0.0 {
        return Ok(0.0);
    }
    Ok(omega * spec.density_over_omega(omega))
}

/// Closed-form damping kernel for the exponential cutoff,
/// `γ(t) = (2/π) ζ Γ(p) Re[(1/ω_c - i|t|)^{-p}]`.
pub fn damping_kernel_exact(spec: &BathSpec, t: f64) -> Result<f64> {
    spec.require_cutoff("the closed-form damping kernel")?;
    Ok(damping_exact_unchecked(spec, t))
}

fn damping_exact_unchecked(spec: &BathSpec, t: f64) -> f64 {
    let a = Complex64::new(1.0 / spec.omega_c, -t.abs());
    2.0 / PI * spec.zeta * gamma(spec.p) * a.powf(-spec.p).re
}

/// `γ(t)` by adaptive quadrature of its cosine representation. Even in `t`.
///
/// The strictly Ohmic kernel is the distribution `2ζδ(t)`: zero for `t ≠ 0`
/// and unsupported at `t = 0`.
pub fn damping_kernel(spec: &BathSpec, t: f64) -> Result<f64> {
    let t = t.abs();
    if spec.is_strictly_ohmic() {
        if t == 0.0 {
            return Err(Error::Unsupported(
                "strictly Ohmic damping kernel is a delta function at t = 0".into(),
            ));
        }
        return Ok(0.0);
    }
    let wc = spec.omega_c;
    let integrand = |w: f64| {
        if w == 0.0 {
            0.0
        } else {
            spec.density_over_omega(w) * (w * t).cos()
        }
    };
    let tol = Tolerance::default();
    let est = if t * wc < 2.0 {
        quad::integrate_semi_infinite(integrand, 0.0, &[wc, 5.0 * wc, 20.0 * wc, 60.0 * wc], tol)?
    } else {
        quad::integrate_oscillatory(integrand, 0.0, PI / t, tol)?
    };
    Ok(2.0 / PI * est.value)
}

/// Laplace transform `γ̂(z) = ∫₀^∞ γ(t) e^{-zt} dt` for `Re z > 0`, by
/// quadrature over the time kernel.
pub fn damping_laplace(spec: &BathSpec, z: Complex64) -> Result<Complex64> {
    if !(z.re > 0.0) {
        return Err(Error::Domain(format!("Laplace variable needs Re z > 0, got {z}")));
    }
    if spec.is_strictly_ohmic() {
        return Ok(Complex64::new(spec.zeta, 0.0));
    }
    let wc = spec.omega_c;
    let decay = 1.0 / z.re;
    let breaks = [1.0 / wc, 10.0 / wc, decay, 10.0 * decay, 40.0 * decay];
    let est = quad::integrate_semi_infinite(
        |t: f64| (-z * t).exp() * damping_exact_unchecked(spec, t),
        0.0,
        &breaks,
        Tolerance::new(1e-12, 1e-10),
    )?;
    Ok(est.value)
}

/// `γ̂(z)` from its frequency representation
/// `(2/π) ∫₀^∞ dν I(ν)/ν · z/(z² + ν²)`, analytically continued to the
/// plane cut along `(-∞, 0]` by rotating the `ν` contour above the pole at
/// `ν = -iz`.
pub fn damping_laplace_continued(spec: &BathSpec, z: Complex64) -> Result<Complex64> {
    if spec.is_strictly_ohmic() {
        return Ok(Complex64::new(spec.zeta, 0.0));
    }
    if z.im < 0.0 {
        return Ok(damping_laplace_continued(spec, z.conj())?.conj());
    }
    if z.norm() == 0.0 || (z.im == 0.0 && z.re < 0.0) {
        return Err(Error::Domain(format!("z = {z} lies on the branch cut")));
    }
    let pole = Complex64::new(0.0, -1.0) * z;
    let psi = 0.5 * (pole.arg().max(0.0) + FRAC_PI_2);
    let dir = Complex64::from_polar(1.0, psi);
    let p = spec.p;
    let wc = spec.omega_c;
    let z2 = z * z;
    let integrand = |s: f64| {
        if s == 0.0 {
            return Complex64::default();
        }
        let nu = dir * s;
        let weight = dir.powf(p - 1.0) * s.powf(p - 1.0) * (-nu / wc).exp();
        weight * z / (z2 + nu * nu) * dir
    };
    let scale = wc / psi.cos().max(1e-3);
    let zn = z.norm();
    let est = quad::integrate_semi_infinite(
        integrand,
        0.0,
        &[0.5 * zn, zn, 2.0 * zn, scale, 10.0 * scale],
        Tolerance::new(1e-13, 1e-11),
    )?;
    Ok(est.value * (2.0 / PI * spec.zeta))
}

/// `Re γ̃(ω + i0⁺) = I(ω)/ω`.
pub fn real_gamma_tilde(spec: &BathSpec, omega: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::Domain(format!("frequency must be positive, got {omega}")));
    }
    Ok(spec.density_over_omega(omega))
}

/// `Im γ̃(ω + i0⁺)` from the subtracted Kramers–Kronig integral
/// `(2ω/π) ∫₀^∞ dν [J(ν) - J(ω)]/(ω² - ν²)`, `J = I/ω`.
pub fn imag_gamma_tilde(spec: &BathSpec, omega: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::Domain(format!("frequency must be positive, got {omega}")));
    }
    if spec.is_strictly_ohmic() {
        return Ok(0.0);
    }
    let j0 = spec.density_over_omega(omega);
    let integrand = |nu: f64| {
        if nu == 0.0 {
            return 0.0;
        }
        let d = omega * omega - nu * nu;
        if d.abs() < 1e-9 * omega * omega {
            // removable point: -J'(ω)/(2ω)
            let jp = spec.density_over_omega(omega)
                * ((spec.p - 1.0) / omega - 1.0 / spec.omega_c);
            return -jp / (2.0 * omega);
        }
        (spec.density_over_omega(nu) - j0) / d
    };
    let wc = spec.omega_c;
    let est = quad::integrate_semi_infinite(
        integrand,
        0.0,
        &[0.5 * omega, omega, 2.0 * omega, wc, 10.0 * wc, 50.0 * wc],
        Tolerance::new(1e-12, 1e-9),
    )?;
    Ok(2.0 * omega / PI * est.value)
}

/// Boundary value `γ̃(ω + i0⁺)`.
pub fn gamma_tilde(spec: &BathSpec, omega: f64) -> Result<Complex64> {
    Ok(Complex64::new(
        real_gamma_tilde(spec, omega)?,
        imag_gamma_tilde(spec, omega)?,
    ))
}

/// `∫₀^∞ γ(t) cos(ωt) e^{-εt} dt` by oscillatory quadrature in time.
pub fn real_gamma_tilde_damped(spec: &BathSpec, omega: f64, eps: f64) -> Result<f64> {
    spec.require_cutoff("the damped boundary-value quadrature")?;
    if !(omega > 0.0 && eps >= 0.0) {
        return Err(Error::Domain("need omega > 0 and eps >= 0".into()));
    }
    let est = quad::integrate_oscillatory(
        |t: f64| damping_exact_unchecked(spec, t) * (omega * t).cos() * (-eps * t).exp(),
        0.0,
        PI / omega,
        Tolerance::new(1e-13, 1e-11),
    )?;
    Ok(est.value)
}

/// `ε → 0` limit of [`real_gamma_tilde_damped`] by Richardson extrapolation
/// over `ε₀, ε₀/2, ε₀/4, ε₀/8` (the damped transform is analytic in `ε`).
pub fn real_gamma_tilde_extrapolated(spec: &BathSpec, omega: f64) -> Result<f64> {
    let eps0 = 0.05 * omega.min(spec.omega_c);
    let mut table: Vec<f64> = (0..4)
        .map(|k| real_gamma_tilde_damped(spec, omega, eps0 / f64::powi(2.0, k)))
        .collect::<Result<_>>()?;
    // Neville-style elimination of ε, ε², ε³
    for level in 1..4 {
        let factor = f64::powi(2.0, level);
        for k in (level as usize..4).rev() {
            table[k] = (factor * table[k] - table[k - 1]) / (factor - 1.0);
        }
    }
    Ok(table[3])
}

/// `coth(x)` with the series `1/x + x/3 - x³/45` below `x = 10⁻³`.
pub fn coth(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        1.0 / x + x / 3.0 - x * x * x / 45.0
    } else {
        1.0 / x.tanh()
    }
}

/// `K(t)` by adaptive quadrature of its frequency integral, split at
/// `ω = 1/β` and `ω = ω_c`.
pub fn noise_kernel(spec: &BathSpec, t: f64) -> Result<f64> {
    spec.require_cutoff("the noise kernel")?;
    let t = t.abs();
    let beta = spec.beta;
    let integrand = |w: f64| {
        if w == 0.0 {
            return 0.0;
        }
        w * spec.density_over_omega(w) * coth(0.5 * beta * w) * (w * t).cos()
    };
    let wc = spec.omega_c;
    let tol = Tolerance::default();
    let est = if t * wc < 2.0 {
        quad::integrate_semi_infinite(
            integrand,
            0.0,
            &[1.0 / beta, wc, 5.0 * wc, 20.0 * wc, 60.0 * wc],
            tol,
        )?
    } else {
        quad::integrate_oscillatory(integrand, 0.0, PI / t, tol)?
    };
    Ok(est.value / PI)
}

/// `K(t)` from the thermal expansion `coth(x/2) = 1 + 2Σₙ e^{-nx}`:
///
/// ```text
/// K(t) = ζΓ(p+1)/π · Re[ a^{-p-1} + 2 Σ_{n≥1} (a + nβ)^{-p-1} ],  a = 1/ω_c - i t
/// ```
///
/// summed directly to `n = 32` with an Euler–Maclaurin tail.
pub fn noise_kernel_series(spec: &BathSpec, t: f64) -> Result<f64> {
    spec.require_cutoff("the noise kernel")?;
    Ok(noise_series_unchecked(spec, t))
}

fn noise_series_unchecked(spec: &BathSpec, t: f64) -> f64 {
    const DIRECT: usize = 32;
    let s = spec.p + 1.0;
    let beta = spec.beta;
    let a = Complex64::new(1.0 / spec.omega_c, -t.abs());
    let mut sum = Complex64::default();
    for n in 1..DIRECT {
        sum += (a + n as f64 * beta).powf(-s);
    }
    let x = a + DIRECT as f64 * beta;
    let f = x.powf(-s);
    let integral = x.powf(1.0 - s) / (beta * (s - 1.0));
    let d1 = -s * beta * x.powf(-s - 1.0);
    let d3 = -s * (s + 1.0) * (s + 2.0) * beta.powi(3) * x.powf(-s - 3.0);
    let d5 = -s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * beta.powi(5) * x.powf(-s - 5.0);
    let tail = integral + 0.5 * f - d1 / 12.0 + d3 / 720.0 - d5 / 30240.0;
    let total = a.powf(-s) + 2.0 * (sum + tail);
    spec.zeta * gamma(s) / PI * total.re
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelKind {
    Damping,
    Noise,
}

/// Kernel sampled on a uniform grid starting at `t = 0`.
#[derive(Debug, Clone)]
pub struct KernelTable {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    pub kind: KernelKind,
}

impl KernelTable {
    /// Tabulates `γ` from its closed form.
    pub fn damping(spec: &BathSpec, grid: TimeGrid) -> Result<Self> {
        spec.require_cutoff("a tabulated damping kernel")?;
        let values: Vec<f64> = (0..grid.len())
            .into_par_iter()
            .map(|i| damping_exact_unchecked(spec, grid.t(i)))
            .collect();
        Self::checked(grid, values, KernelKind::Damping)
    }

    /// Tabulates `K` from the thermal series.
    pub fn noise(spec: &BathSpec, grid: TimeGrid) -> Result<Self> {
        spec.require_cutoff("a tabulated noise kernel")?;
        let values: Vec<f64> = (0..grid.len())
            .into_par_iter()
            .map(|i| noise_series_unchecked(spec, grid.t(i)))
            .collect();
        Self::checked(grid, values, KernelKind::Noise)
    }

    fn checked(grid: TimeGrid, values: Vec<f64>, kind: KernelKind) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NumericalFailure {
                what: format!("{kind:?} kernel tabulation"),
                residual: f64::NAN,
                at: grid.t(i),
            });
        }
        Ok(KernelTable { grid, values, kind })
    }

    pub fn times(&self) -> Vec<f64> {
        self.grid.times()
    }
}
