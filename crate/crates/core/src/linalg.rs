use serde::{Deserialize, Serialize};

/// Real 2×2 matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };
    pub const ZERO: Mat2 = Mat2 {
        a: 0.0,
        b: 0.0,
        c: 0.0,
        d: 0.0,
    };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn symmetric(xx: f64, xp: f64, pp: f64) -> Self {
        Mat2::new(xx, xp, xp, pp)
    }

    pub fn diag(x: f64, y: f64) -> Self {
        Mat2::new(x, 0.0, 0.0, y)
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn transpose(&self) -> Self {
        Mat2::new(self.a, self.c, self.b, self.d)
    }

    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(Mat2::new(self.d / det, -self.b / det, -self.c / det, self.a / det))
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1]]
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        Mat2::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn add(&self, o: &Mat2) -> Mat2 {
        Mat2::new(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)
    }

    pub fn sub(&self, o: &Mat2) -> Mat2 {
        Mat2::new(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)
    }

    /// `self · s · selfᵀ`
    pub fn congruence(&self, s: &Mat2) -> Mat2 {
        self.mul(s).mul(&self.transpose())
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (self.b - self.c).abs() <= tol * (self.b.abs() + self.c.abs()).max(1.0)
    }

    /// Eigenvalues `(λ_min, λ_max)` of the symmetric part.
    pub fn sym_eigenvalues(&self) -> (f64, f64) {
        let off = 0.5 * (self.b + self.c);
        let mean = 0.5 * (self.a + self.d);
        let half_gap = (0.5 * (self.a - self.d)).hypot(off);
        let hi = mean + half_gap;
        // lo via the determinant avoids cancellation when hi dominates
        let det = self.a * self.d - off * off;
        let lo = if hi.abs() > 0.0 && mean > 0.0 {
            det / hi
        } else {
            mean - half_gap
        };
        (lo.min(hi), hi.max(lo))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.sym_eigenvalues().0
    }

    pub fn is_positive_definite(&self) -> bool {
        self.a > 0.0 && self.det() > 0.0
    }

    pub fn max_abs_diff(&self, o: &Mat2) -> f64 {
        [self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d]
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}
