//! Quasiprobability functions on a rectangular phase-space grid.
//!
//! Gaussians are parameterized by their Wigner covariance `Σ`, density
//! `∝ exp(-(ξ-d)ᵀ Σ⁻¹ (ξ-d)/2)`. The vacuum has `Σ = I/2`; a covariance in
//! the `2⟨O²⟩` convention is `Γ = 2Σ`. Pointer states have `Σ = Γ∞/2`.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::linalg::Mat2;
use crate::moments::PointerBasis;

/// Normalization tolerance held by every transform.
pub const NORM_TOL: f64 = 1e-6;
/// Minimum kernel standard deviation, in grid samples.
pub const MIN_SAMPLES_PER_SIGMA: f64 = 4.0;
/// Allowed negativity of a Husimi function, relative to its maximum.
pub const HUSIMI_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub np: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
}

impl GridSpec {
    pub fn new(nx: usize, np: usize, x: (f64, f64), p: (f64, f64)) -> Result<Self> {
        let g = GridSpec {
            nx,
            np,
            x_min: x.0,
            x_max: x.1,
            p_min: p.0,
            p_max: p.1,
        };
        g.validate()?;
        Ok(g)
    }

    /// Square grid centred on the origin.
    pub fn symmetric(n: usize, x_half: f64, p_half: f64) -> Result<Self> {
        GridSpec::new(n, n, (-x_half, x_half), (-p_half, p_half))
    }

    /// `n × n` grid covering `d ± 6σ` for every listed Gaussian, plus a
    /// `3σ` guard band.
    pub fn covering(n: usize, gaussians: &[GaussianState]) -> Result<Self> {
        let (mut x0, mut x1, mut p0, mut p1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for g in gaussians {
            let sx = 9.0 * g.sigma.a.sqrt();
            let sp = 9.0 * g.sigma.d.sqrt();
            x0 = x0.min(g.d[0] - sx);
            x1 = x1.max(g.d[0] + sx);
            p0 = p0.min(g.d[1] - sp);
            p1 = p1.max(g.d[1] + sp);
        }
        if gaussians.is_empty() {
            return Err(Error::Domain("no covariance to size the grid from".into()));
        }
        GridSpec::new(n, n, (x0, x1), (p0, p1))
    }

    pub fn validate(&self) -> Result<()> {
        for (name, n) in [("nx", self.nx), ("np", self.np)] {
            if n < 8 || !n.is_power_of_two() {
                return Err(Error::Domain(format!("{name} must be a power of two >= 8, got {n}")));
            }
        }
        if !(self.x_max > self.x_min && self.p_max > self.p_min)
            || ![self.x_min, self.x_max, self.p_min, self.p_max].iter().all(|v| v.is_finite())
        {
            return Err(Error::Domain("grid extents must be finite and increasing".into()));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / (self.np - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn p(&self, j: usize) -> f64 {
        self.p_min + j as f64 * self.dp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianState {
    pub d: [f64; 2],
    pub sigma: Mat2,
}

impl GaussianState {
    pub fn new(d: [f64; 2], sigma: Mat2) -> Result<Self> {
        let s = GaussianState { d, sigma };
        s.validate()?;
        Ok(s)
    }

    pub fn vacuum() -> Self {
        GaussianState {
            d: [0.0, 0.0],
            sigma: Mat2::diag(0.5, 0.5),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.sigma.is_symmetric(1e-12) {
            return Err(Error::Domain("covariance must be symmetric".into()));
        }
        if !self.sigma.is_positive_definite() {
            return Err(Error::Domain("covariance must be positive definite".into()));
        }
        if self.sigma.det() < 0.25 * (1.0 - 1e-9) {
            return Err(Error::Domain(format!(
                "det Σ = {} violates the uncertainty bound 1/4",
                self.sigma.det()
            )));
        }
        Ok(())
    }

    /// Pointer state centred at `d`.
    pub fn pointer(d: [f64; 2], basis: &PointerBasis) -> Self {
        GaussianState {
            d,
            sigma: basis.gamma_inf.scale(0.5),
        }
    }

    /// Normalized density at `xi` (no uncertainty check).
    pub fn density(&self, xi: [f64; 2]) -> f64 {
        gaussian_density(&self.sigma, [xi[0] - self.d[0], xi[1] - self.d[1]])
    }
}

fn gaussian_density(sigma: &Mat2, delta: [f64; 2]) -> f64 {
    let det = sigma.det();
    let inv = Mat2::new(sigma.d / det, -sigma.b / det, -sigma.c / det, sigma.a / det);
    let q = inv.apply(delta);
    (-0.5 * (delta[0] * q[0] + delta[1] * q[1])).exp() / (2.0 * PI * det.sqrt())
}

/// Samples of a quasiprobability on a [`GridSpec`], stored row-major with
/// `x` as the slow index: `values[i * np + j] = W(x_i, p_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerGrid {
    pub spec: GridSpec,
    pub values: Vec<f64>,
    pub s_order: f64,
    pub norm_cached: f64,
}

impl WignerGrid {
    pub fn from_fn<F>(spec: GridSpec, s_order: f64, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Sync,
    {
        spec.validate()?;
        let mut values = vec![0.0; spec.nx * spec.np];
        values.par_chunks_mut(spec.np).enumerate().for_each(|(i, row)| {
            let x = spec.x(i);
            for (j, v) in row.iter_mut().enumerate() {
                *v = f(x, spec.p(j));
            }
        });
        Ok(WignerGrid::from_values(spec, values, s_order))
    }

    pub fn from_values(spec: GridSpec, values: Vec<f64>, s_order: f64) -> Self {
        let mut w = WignerGrid {
            spec,
            values,
            s_order,
            norm_cached: 0.0,
        };
        w.norm_cached = w.integral();
        w
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.spec.np + j]
    }

    /// Trapezoid-rule integral of `f(x, p, W)` over the grid.
    pub fn integrate_with<F: Fn(f64, f64, f64) -> f64 + Sync>(&self, f: F) -> f64 {
        let s = &self.spec;
        let wx = |i: usize| if i == 0 || i == s.nx - 1 { 0.5 } else { 1.0 };
        let wp = |j: usize| if j == 0 || j == s.np - 1 { 0.5 } else { 1.0 };
        // row sums in parallel, reduced in a fixed order for reproducibility
        let rows: Vec<f64> = self
            .values
            .par_chunks(s.np)
            .enumerate()
            .map(|(i, row)| {
                let x = s.x(i);
                let r: f64 = row.iter().enumerate().map(|(j, &v)| wp(j) * f(x, s.p(j), v)).sum();
                wx(i) * r
            })
            .collect();
        rows.iter().sum::<f64>() * s.dx() * s.dp()
    }

    pub fn integral(&self) -> f64 {
        self.integrate_with(|_, _, v| v)
    }

    /// Mean and covariance by quadrature.
    pub fn moments(&self) -> ([f64; 2], Mat2) {
        let n = self.integral();
        let mx = self.integrate_with(|x, _, v| x * v) / n;
        let mp = self.integrate_with(|_, p, v| p * v) / n;
        let xx = self.integrate_with(|x, _, v| (x - mx) * (x - mx) * v) / n;
        let xp = self.integrate_with(|x, p, v| (x - mx) * (p - mp) * v) / n;
        let pp = self.integrate_with(|_, p, v| (p - mp) * (p - mp) * v) / n;
        ([mx, mp], Mat2::symmetric(xx, xp, pp))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `∫ |W - other|` on a shared grid.
    pub fn l1_distance(&self, other: &WignerGrid) -> Result<f64> {
        if self.spec != other.spec {
            return Err(Error::Domain("grids differ".into()));
        }
        let diff = WignerGrid {
            spec: self.spec,
            values: self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).collect(),
            s_order: self.s_order,
            norm_cached: 0.0,
        };
        Ok(diff.integral())
    }

    fn check_norm(&self) -> Result<()> {
        let deficit = (self.norm_cached - 1.0).abs();
        if deficit > NORM_TOL {
            return Err(Error::Coverage { deficit });
        }
        Ok(())
    }

    /// Bicubic (Catmull–Rom) value at an off-grid point; zero outside.
    pub fn interpolate(&self, x: f64, p: f64) -> f64 {
        let s = &self.spec;
        let u = (x - s.x_min) / s.dx();
        let v = (p - s.p_min) / s.dp();
        if !(u > -1.0 && v > -1.0 && u < s.nx as f64 && v < s.np as f64) {
            return 0.0;
        }
        let (iu, iv) = (u.floor() as isize, v.floor() as isize);
        let (fu, fv) = (u - iu as f64, v - iv as f64);
        let wu = catmull_rom(fu);
        let wv = catmull_rom(fv);
        let mut acc = 0.0;
        for (a, wa) in wu.iter().enumerate() {
            let i = iu - 1 + a as isize;
            if i < 0 || i >= s.nx as isize {
                continue;
            }
            let row = &self.values[i as usize * s.np..(i as usize + 1) * s.np];
            let mut r = 0.0;
            for (b, wb) in wv.iter().enumerate() {
                let j = iv - 1 + b as isize;
                if j >= 0 && (j as usize) < s.np {
                    r += wb * row[j as usize];
                }
            }
            acc += wa * r;
        }
        acc
    }

    /// Flat CSV `x,p,value` preceded by `header` lines as `#` comments.
    pub fn write_csv(&self, path: &Path, header: &[String]) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for h in header {
            writeln!(f, "# {h}")?;
        }
        writeln!(f, "x,p,value")?;
        for i in 0..self.spec.nx {
            for j in 0..self.spec.np {
                writeln!(f, "{:.10e},{:.10e},{:.10e}", self.spec.x(i), self.spec.p(j), self.get(i, j))?;
            }
        }
        f.flush()?;
        Ok(())
    }

    /// Raw little-endian `f64` raster (row-major, `x` slow) plus a JSON
    /// sidecar `<path>.json` with extents, order and header.
    pub fn write_raster(&self, path: &Path, header: &[String]) -> Result<()> {
        let mut bytes = Vec::with_capacity(8 * self.values.len());
        for v in &self.values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::write(path, bytes)?;
        let sidecar = serde_json::json!({
            "header": header,
            "layout": "row-major f64 little-endian, index = ix * np + ip",
            "nx": self.spec.nx,
            "np": self.spec.np,
            "x_min": self.spec.x_min,
            "x_max": self.spec.x_max,
            "p_min": self.spec.p_min,
            "p_max": self.spec.p_max,
            "s_order": self.s_order,
            "integral": self.norm_cached,
        });
        let mut side = path.as_os_str().to_owned();
        side.push(".json");
        std::fs::write(side, serde_json::to_string_pretty(&sidecar).map_err(|e| Error::Io(e.to_string()))?)?;
        Ok(())
    }
}

fn catmull_rom(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

pub fn gaussian_wigner(state: &GaussianState, spec: GridSpec) -> Result<WignerGrid> {
    state.validate()?;
    let st = *state;
    let w = WignerGrid::from_fn(spec, 0.0, move |x, p| st.density([x, p]))?;
    w.check_norm()?;
    Ok(w)
}

/// Even cat `|φ(·-x0)⟩ + |φ(·+x0)⟩` for a pure Gaussian `φ` with
/// covariance `Σ`:
///
/// ```text
/// W = [W_φ(x-x0, p) + W_φ(x+x0, p) + 2 cos(2 x0 p) W_φ(x, p)] / (2 + 2e^{-2 x0² Σ_pp})
/// ```
pub fn cat_wigner(x0: f64, sigma: Mat2, spec: GridSpec) -> Result<WignerGrid> {
    let phi = GaussianState::new([0.0, 0.0], sigma)?;
    if (sigma.det() - 0.25).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "cat branches must be pure (det Σ = 1/4), got det Σ = {}",
            sigma.det()
        )));
    }
    let norm = 2.0 + 2.0 * (-2.0 * x0 * x0 * sigma.d).exp();
    let w = WignerGrid::from_fn(spec, 0.0, move |x, p| {
        (phi.density([x - x0, p])
            + phi.density([x + x0, p])
            + 2.0 * (2.0 * x0 * p).cos() * phi.density([x, p]))
            / norm
    })?;
    w.check_norm()?;
    Ok(w)
}

/// L¹ overlap `∫ min` of the two cat lobes.
pub fn cat_lobe_overlap(x0: f64, sigma: Mat2) -> f64 {
    erfc(x0.abs() / (2.0 * sigma.a).sqrt())
}

/// Lobes overlapping by more than 10% make the cat ill-conditioned.
pub fn cat_is_ill_conditioned(x0: f64, sigma: Mat2) -> bool {
    cat_lobe_overlap(x0, sigma) > 0.1
}

fn fft_2d(data: &mut [Complex64], rows: usize, cols: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let (row_fft, col_fft) = if inverse {
        (planner.plan_fft_inverse(cols), planner.plan_fft_inverse(rows))
    } else {
        (planner.plan_fft_forward(cols), planner.plan_fft_forward(rows))
    };
    data.par_chunks_mut(cols).for_each(|row| row_fft.process(row));
    let mut transposed = vec![Complex64::default(); rows * cols];
    transpose(data, &mut transposed, rows, cols);
    transposed.par_chunks_mut(rows).for_each(|col| col_fft.process(col));
    transpose(&transposed, data, cols, rows);
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    dst.par_chunks_mut(rows).enumerate().for_each(|(c, out)| {
        for (r, v) in out.iter_mut().enumerate() {
            *v = src[r * cols + c];
        }
    });
}

fn angular_frequency(m: usize, n: usize, step: f64) -> f64 {
    let signed = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
    2.0 * PI * signed / (n as f64 * step)
}

/// Checks that a PSD covariance is symmetric and not negative beyond
/// rounding, returning it with tiny negative eigen-directions clipped.
fn check_psd(sigma: &Mat2, what: &str) -> Result<Mat2> {
    if !sigma.is_symmetric(1e-12) {
        return Err(Error::Domain(format!("{what}: covariance must be symmetric")));
    }
    let (lo, hi) = sigma.sym_eigenvalues();
    let tol = 1e-12 * (sigma.a.abs() + sigma.d.abs()).max(f64::MIN_POSITIVE);
    if lo < -tol {
        return Err(Error::Domain(format!("{what}: covariance is not PSD (min eigenvalue {lo})")));
    }
    if lo < 0.0 {
        // rebuild with the clipped eigenvalue
        let off = 0.5 * (sigma.b + sigma.c);
        let v = if off.abs() > 0.0 {
            let (x, y) = (hi - sigma.d, off);
            let n = x.hypot(y);
            [x / n, y / n]
        } else if sigma.a >= sigma.d {
            [1.0, 0.0]
        } else {
            [0.0, 1.0]
        };
        return Ok(Mat2::symmetric(hi * v[0] * v[0], hi * v[0] * v[1], hi * v[1] * v[1]));
    }
    Ok(*sigma)
}

/// Standard deviation of the kernel along its major principal axis,
/// measured in grid samples along that axis.
fn major_axis_samples(sigma: &Mat2, spec: &GridSpec) -> f64 {
    let (_, hi) = sigma.sym_eigenvalues();
    let off = 0.5 * (sigma.b + sigma.c);
    let v = if off.abs() > 0.0 {
        let (x, y) = (hi - sigma.d, off);
        let n = x.hypot(y);
        [x / n, y / n]
    } else if sigma.a >= sigma.d {
        [1.0, 0.0]
    } else {
        [0.0, 1.0]
    };
    let spacing = (v[0] * spec.dx()).hypot(v[1] * spec.dp());
    hi.sqrt() / spacing
}

/// Convolution with the normalized Gaussian of covariance `sigma_add`,
/// evaluated on a zero-padded grid by multiplying the transform with
/// `exp(-kᵀ Σ k / 2)`.
///
/// A kernel whose major axis spans fewer than [`MIN_SAMPLES_PER_SIGMA`]
/// samples is rejected. Rank-deficient kernels are fine: the characteristic
/// factor is exact in every direction.
pub fn gaussian_convolve(w: &WignerGrid, sigma_add: &Mat2) -> Result<WignerGrid> {
    let sigma = check_psd(sigma_add, "gaussian_convolve")?;
    if sigma.max_abs_diff(&Mat2::ZERO) == 0.0 {
        return Ok(w.clone());
    }
    let s = w.spec;
    let samples = major_axis_samples(&sigma, &s);
    if samples < MIN_SAMPLES_PER_SIGMA {
        return Err(Error::Resolution(format!(
            "kernel spans {samples:.2} samples per standard deviation, need {MIN_SAMPLES_PER_SIGMA}"
        )));
    }
    let (rows, cols) = (2 * s.nx, 2 * s.np);
    let mut buf = vec![Complex64::default(); rows * cols];
    for i in 0..s.nx {
        for j in 0..s.np {
            buf[i * cols + j] = Complex64::new(w.get(i, j), 0.0);
        }
    }
    fft_2d(&mut buf, rows, cols, false);
    let (dx, dp) = (s.dx(), s.dp());
    buf.par_chunks_mut(cols).enumerate().for_each(|(a, row)| {
        let kx = angular_frequency(a, rows, dx);
        for (b, v) in row.iter_mut().enumerate() {
            let kp = angular_frequency(b, cols, dp);
            let q = sigma.a * kx * kx + 2.0 * sigma.b * kx * kp + sigma.d * kp * kp;
            *v *= (-0.5 * q).exp();
        }
    });
    fft_2d(&mut buf, rows, cols, true);
    // the kernel is centred on index 0, so the padded result is aligned
    let scale = 1.0 / (rows * cols) as f64;
    let mut values = vec![0.0; s.nx * s.np];
    for i in 0..s.nx {
        for j in 0..s.np {
            values[i * s.np + j] = buf[i * cols + j].re * scale;
        }
    }
    let out = WignerGrid::from_values(s, values, w.s_order);
    let deficit = (out.norm_cached - w.norm_cached).abs();
    if deficit > NORM_TOL {
        return Err(Error::Coverage { deficit });
    }
    Ok(out)
}

/// Smooths an `s`-ordered function to order `s_to < s_from`, with
/// covariance step `Γ∞/2` per unit of `s`.
pub fn s_transform(w: &WignerGrid, s_from: f64, s_to: f64, basis: &PointerBasis) -> Result<WignerGrid> {
    if !(s_to < s_from) {
        return Err(Error::Direction { from: s_from, to: s_to });
    }
    let step = basis.gamma_inf.scale(0.5 * (s_from - s_to));
    let mut out = gaussian_convolve(w, &step)?;
    out.s_order = s_to;
    Ok(out)
}

/// Pointer-basis Husimi function `⟨ψ_ξ|ρ|ψ_ξ⟩/2π`: the Wigner function
/// convolved with the pointer covariance `Γ∞/2`.
pub fn husimi_pointer(w: &WignerGrid, basis: &PointerBasis) -> Result<WignerGrid> {
    if w.s_order != 0.0 {
        return Err(Error::Domain(format!(
            "Husimi transform needs an ordinary Wigner function, got s = {}",
            w.s_order
        )));
    }
    let mut out = gaussian_convolve(w, &basis.gamma_inf.scale(0.5))?;
    out.s_order = -1.0;
    let (min, max) = (out.min_value(), out.max_value());
    if min < -HUSIMI_TOL * max {
        return Err(Error::ConventionViolation { min, max });
    }
    Ok(out)
}

/// `|⟨ψ_ξ|ψ_ξ′⟩|² = exp(-Δᵀ Γ∞⁻¹ Δ / 2)`, `Δ = ξ - ξ′`.
pub fn pointer_overlap(xi: [f64; 2], xi_prime: [f64; 2], basis: &PointerBasis) -> f64 {
    let d = [xi[0] - xi_prime[0], xi[1] - xi_prime[1]];
    let b = basis.b_inf;
    (-0.5 * (d[0] * d[0] * b + d[1] * d[1] / b)).exp()
}

/// `∫ max(0, -W)`.
pub fn negativity_volume(w: &WignerGrid) -> f64 {
    w.integrate_with(|_, _, v| (-v).max(0.0))
}
