//! Adaptive quadrature.
//!
//! Globally adaptive Gauss–Kronrod (7/15) with bisection of the worst
//! interval, a semi-infinite variant via `x = a + s/(1-s)`, and an
//! oscillatory variant that sums half-period panels and accelerates the
//! partial sums with Wynn's epsilon algorithm.

use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Values that can be integrated: real or complex.
pub trait Scalar:
    Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Send + Sync
{
    fn magnitude(self) -> f64;
}

impl Scalar for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-10,
            rel: 1e-8,
            max_intervals: 4000,
        }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Tolerance {
            abs,
            rel,
            ..Default::default()
        }
    }

    fn accepts(&self, err: f64, value: f64) -> bool {
        err <= self.abs.max(self.rel * value)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 15-point Kronrod panel with its embedded 7-point Gauss estimate.
pub fn gk15<T: Scalar, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> Estimate<T> {
    let c = 0.5 * (a + b);
    let hl = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = hl * XGK[j];
        let sum = f(c - x) + f(c + x);
        kron = kron + sum * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + sum * WG[j / 2];
        }
    }
    let value = kron * hl;
    let error = ((kron - gauss) * hl).magnitude();
    Estimate { value, error }
}

struct Panel<T> {
    a: f64,
    b: f64,
    est: Estimate<T>,
}

impl<T> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.est.error == other.est.error
    }
}
impl<T> Eq for Panel<T> {}
impl<T> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.est.error.total_cmp(&other.est.error)
    }
}

/// Adaptive integration of `f` over `[a, b]`, optionally pre-split at
/// `breaks` (points outside the interval are ignored).
pub fn integrate_with_breaks<T: Scalar, F: Fn(f64) -> T>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<Estimate<T>> {
    if a == b {
        return Ok(Estimate {
            value: T::default(),
            error: 0.0,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut cuts: Vec<f64> = vec![lo];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > lo && x < hi).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    cuts.extend(inner);
    cuts.push(hi);

    let mut heap = BinaryHeap::new();
    let mut total = T::default();
    let mut err = 0.0;
    for w in cuts.windows(2) {
        let est = gk15(&f, w[0], w[1]);
        total = total + est.value;
        err += est.error;
        heap.push(Panel {
            a: w[0],
            b: w[1],
            est,
        });
    }
    while !tol.accepts(err, total.magnitude()) {
        if heap.len() >= tol.max_intervals {
            let worst = heap.peek().map(|p| 0.5 * (p.a + p.b)).unwrap_or(lo);
            return Err(Error::NumericalFailure {
                what: "adaptive quadrature".into(),
                residual: err,
                at: worst,
            });
        }
        let Some(p) = heap.pop() else { break };
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            // interval exhausted at machine precision; keep its estimate
            heap.push(Panel {
                a: p.a,
                b: p.b,
                est: Estimate {
                    value: p.est.value,
                    error: 0.0,
                },
            });
            err -= p.est.error;
            continue;
        }
        let left = gk15(&f, p.a, m);
        let right = gk15(&f, m, p.b);
        total = total - p.est.value + left.value + right.value;
        err += left.error + right.error - p.est.error;
        heap.push(Panel {
            a: p.a,
            b: m,
            est: left,
        });
        heap.push(Panel {
            a: m,
            b: p.b,
            est: right,
        });
    }
    // re-sum to shed accumulated cancellation in the running totals
    let mut value = T::default();
    let mut error = 0.0;
    for p in heap.iter() {
        value = value + p.est.value;
        error += p.est.error;
    }
    Ok(Estimate {
        value: value * sign,
        error,
    })
}

pub fn integrate<T: Scalar, F: Fn(f64) -> T>(
    f: F,
    a: f64,
    b: f64,
    tol: Tolerance,
) -> Result<Estimate<T>> {
    integrate_with_breaks(f, a, b, &[], tol)
}

/// Integral over `[a, ∞)`.
///
/// The finite part up to the last break point is integrated directly, the
/// remainder through the map `x = c + s/(1-s)`.
pub fn integrate_semi_infinite<T: Scalar, F: Fn(f64) -> T>(
    f: F,
    a: f64,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<Estimate<T>> {
    let c = breaks.iter().copied().fold(a, f64::max);
    let head = if c > a {
        integrate_with_breaks(&f, a, c, breaks, tol)?
    } else {
        Estimate {
            value: T::default(),
            error: 0.0,
        }
    };
    let scale = (c - a).max(1.0);
    let tail = integrate(
        |s: f64| {
            if s >= 1.0 {
                return T::default();
            }
            let d = 1.0 - s;
            let x = c + scale * s / d;
            f(x) * (scale / (d * d))
        },
        0.0,
        1.0,
        tol,
    )?;
    Ok(Estimate {
        value: head.value + tail.value,
        error: head.error + tail.error,
    })
}

/// Wynn's epsilon algorithm applied to a sequence of partial sums; returns
/// the best extrapolated limit.
pub fn wynn_epsilon(partial: &[f64]) -> f64 {
    let n = partial.len();
    if n < 3 {
        return *partial.last().unwrap_or(&0.0);
    }
    // eps[k] holds column k of the epsilon table, updated in place
    let mut prev: Vec<f64> = vec![0.0; n + 1];
    let mut cur: Vec<f64> = partial.to_vec();
    let mut best = partial[n - 1];
    let mut col = 0;
    while cur.len() > 1 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for i in 0..cur.len() - 1 {
            let d = cur[i + 1] - cur[i];
            let base = prev.get(i + 1).copied().unwrap_or(0.0);
            if d.abs() < 1e-300 {
                next.push(f64::INFINITY);
            } else {
                next.push(base + 1.0 / d);
            }
        }
        col += 1;
        prev = cur;
        cur = next;
        if col % 2 == 0 {
            if let Some(&v) = cur.last() {
                if v.is_finite() {
                    best = v;
                }
            }
        }
    }
    best
}

/// `∫_a^∞ f(x) dx` for an oscillatory integrand whose zeros are spaced by
/// `half_period`. Panels of one half-period are integrated adaptively; the
/// alternating partial sums are accelerated with [`wynn_epsilon`].
pub fn integrate_oscillatory<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    half_period: f64,
    tol: Tolerance,
) -> Result<Estimate<f64>> {
    const MAX_PANELS: usize = 20_000;
    const WINDOW: usize = 24;
    let mut sums: Vec<f64> = Vec::new();
    let mut running = 0.0;
    let mut err = 0.0;
    let mut small_run = 0;
    let mut last_extrap = f64::NAN;
    let panel_tol = Tolerance {
        abs: tol.abs * 1e-2,
        ..tol
    };
    for k in 0..MAX_PANELS {
        let lo = a + k as f64 * half_period;
        let est = integrate(&f, lo, lo + half_period, panel_tol)?;
        running += est.value;
        err += est.error;
        sums.push(running);
        if est.value.abs() <= tol.abs.max(tol.rel * running.abs()) * 1e-2 {
            small_run += 1;
            if small_run >= 4 {
                return Ok(Estimate {
                    value: running,
                    error: err,
                });
            }
        } else {
            small_run = 0;
        }
        if sums.len() >= 12 && sums.len() % 4 == 0 {
            let start = sums.len().saturating_sub(WINDOW);
            let ex = wynn_epsilon(&sums[start..]);
            if last_extrap.is_finite()
                && (ex - last_extrap).abs() <= tol.abs.max(tol.rel * ex.abs())
            {
                return Ok(Estimate {
                    value: ex,
                    error: err + (ex - last_extrap).abs(),
                });
            }
            last_extrap = ex;
        }
    }
    Err(Error::NumericalFailure {
        what: "oscillatory quadrature".into(),
        residual: err,
        at: a + MAX_PANELS as f64 * half_period,
    })
}

/// Trapezoid rule on uniformly spaced samples.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => h * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1])),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_exact() {
        let e = integrate(|x: f64| x * x * x - 2.0 * x, 0.0, 2.0, Tolerance::default()).unwrap();
        assert!((e.value - 0.0).abs() < 1e-13);
    }

    #[test]
    fn endpoint_singularity() {
        // ∫_0^1 x^{-1/2} = 2
        let e = integrate(|x: f64| x.powf(-0.5), 0.0, 1.0, Tolerance::new(1e-10, 1e-10)).unwrap();
        assert!((e.value - 2.0).abs() < 1e-8, "{}", e.value);
    }

    #[test]
    fn semi_infinite_exponential() {
        let e = integrate_semi_infinite(|x: f64| (-x).exp(), 0.0, &[1.0], Tolerance::default())
            .unwrap();
        assert!((e.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn oscillatory_dirichlet() {
        // ∫_0^∞ sin x / x = π/2, a slowly decaying alternating tail
        let e = integrate_oscillatory(
            |x: f64| if x == 0.0 { 1.0 } else { x.sin() / x },
            0.0,
            PI,
            Tolerance::new(1e-10, 1e-10),
        )
        .unwrap();
        assert!((e.value - PI / 2.0).abs() < 1e-8, "{}", e.value);
    }

    #[test]
    fn wynn_on_leibniz_series() {
        let mut s = 0.0;
        let sums: Vec<f64> = (0..20)
            .map(|k| {
                s += (-1f64).powi(k) / (2 * k + 1) as f64;
                s
            })
            .collect();
        assert!((wynn_epsilon(&sums) - PI / 4.0).abs() < 1e-10);
    }

    #[test]
    fn complex_integrand() {
        let e = integrate(
            |x: f64| Complex64::new(0.0, x).exp(),
            0.0,
            PI,
            Tolerance::default(),
        )
        .unwrap();
        assert!((e.value - Complex64::new(0.0, 2.0)).norm() < 1e-12);
    }

    #[test]
    fn trapezoid_linear_is_exact() {
        let v: Vec<f64> = (0..11).map(|i| i as f64 * 0.1).collect();
        assert!((trapezoid(&v, 0.1) - 0.5).abs() < 1e-14);
    }
}
