use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform time grid `t_i = i·h`, `i = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub h: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_max: f64, n_steps: usize) -> Result<Self> {
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(Error::Domain(format!("horizon must be positive, got {t_max}")));
        }
        if n_steps == 0 {
            return Err(Error::Domain("time grid needs at least one step".into()));
        }
        Ok(TimeGrid {
            h: t_max / n_steps as f64,
            n_steps,
        })
    }

    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    pub fn t_max(&self) -> f64 {
        self.t(self.n_steps)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.t(i)).collect()
    }

    /// Same spacing and start; `other` may be shorter.
    pub fn is_prefix_of(&self, other: &TimeGrid) -> bool {
        (self.h - other.h).abs() <= 1e-12 * self.h && self.n_steps <= other.n_steps
    }
}

/// Local cubic (Catmull–Rom) interpolation on uniform samples. C¹ across
/// nodes; one-sided quadratic slopes at the ends.
pub fn cubic_interp(values: &[f64], h: f64, t: f64) -> f64 {
    let n = values.len();
    debug_assert!(n >= 2);
    let x = (t / h).clamp(0.0, (n - 1) as f64);
    let i = (x.floor() as usize).min(n - 2);
    let u = x - i as f64;
    let slope = |k: usize| -> f64 {
        if k == 0 {
            if n >= 3 {
                (-3.0 * values[0] + 4.0 * values[1] - values[2]) / 2.0
            } else {
                values[1] - values[0]
            }
        } else if k == n - 1 {
            if n >= 3 {
                (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / 2.0
            } else {
                values[n - 1] - values[n - 2]
            }
        } else {
            (values[k + 1] - values[k - 1]) / 2.0
        }
    };
    let (y0, y1) = (values[i], values[i + 1]);
    let (m0, m1) = (slope(i), slope(i + 1));
    let u2 = u * u;
    let u3 = u2 * u;
    (2.0 * u3 - 3.0 * u2 + 1.0) * y0
        + (u3 - 2.0 * u2 + u) * m0
        + (-2.0 * u3 + 3.0 * u2) * y1
        + (u3 - u2) * m1
}
