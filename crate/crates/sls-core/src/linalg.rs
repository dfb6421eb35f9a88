//! Minimal 2×2 real linear algebra.
//!
//! Every per-mode object in this crate lives in the (p, q) plane, so a
//! hand-rolled fixed-size matrix type covers all needs without pulling in
//! a general linear-algebra dependency.

use crate::error::{CoreError, Result};

/// Eigenvalues of symmetric PSD matrices may round slightly negative;
/// anything below this indicates a genuine formula bug, not round-off.
pub const PSD_EIGEN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn zero() -> Self {
        Self { x: 0.0, y: 0.0 }
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s)
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;

    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

/// Row-major 2×2 real matrix.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Mat2 {
    pub fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Self { a11, a12, a21, a22 }
    }

    pub fn identity() -> Self {
        Self::new(1.0, 0.0, 0.0, 1.0)
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0, 0.0)
    }

    /// Outer product b bᵀ.
    pub fn outer(b: Vec2) -> Self {
        Self::new(b.x * b.x, b.x * b.y, b.y * b.x, b.y * b.y)
    }

    pub fn det(self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn trace(self) -> f64 {
        self.a11 + self.a22
    }

    pub fn transpose(self) -> Self {
        Self::new(self.a11, self.a21, self.a12, self.a22)
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.a11 * s, self.a12 * s, self.a21 * s, self.a22 * s)
    }

    pub fn mul_vec(self, v: Vec2) -> Vec2 {
        Vec2::new(self.a11 * v.x + self.a12 * v.y, self.a21 * v.x + self.a22 * v.y)
    }

    /// A S Aᵀ for a covariance S.
    pub fn congruence(self, s: Mat2) -> Self {
        self * s * self.transpose()
    }

    pub fn max_abs(self) -> f64 {
        self.a11
            .abs()
            .max(self.a12.abs())
            .max(self.a21.abs())
            .max(self.a22.abs())
    }

    /// Eigenvalues of a symmetric matrix, smaller first.
    pub fn sym_eigenvalues(self) -> (f64, f64) {
        let half_tr = 0.5 * self.trace();
        let disc = (0.25 * (self.a11 - self.a22).powi(2) + self.a12 * self.a21).max(0.0);
        let r = disc.sqrt();
        (half_tr - r, half_tr + r)
    }

    /// Square root of a symmetric PSD matrix via its spectral decomposition.
    ///
    /// Eigenvalues in `[-PSD_EIGEN_TOL, 0)` are clamped to zero; anything
    /// lower is rejected.
    pub fn psd_sqrt(self) -> Result<Mat2> {
        let (lo, hi) = self.sym_eigenvalues();
        if lo < -PSD_EIGEN_TOL {
            return Err(CoreError::NotPositiveSemidefinite { eigenvalue: lo });
        }
        let lo = lo.max(0.0);
        let hi = hi.max(0.0);
        // Eigenvector for hi: (a12, hi - a11) unless a12 ≈ 0.
        let (c, s) = if self.a12.abs() > 1e-300 {
            let v = Vec2::new(self.a12, hi - self.a11);
            let n = v.norm_sq().sqrt();
            (v.x / n, v.y / n)
        } else if self.a11 >= self.a22 {
            (1.0, 0.0)
        } else {
            (0.0, 1.0)
        };
        let (sl, sh) = (lo.sqrt(), hi.sqrt());
        // sqrt = sh * u uᵀ + sl * u⊥ u⊥ᵀ with u = (c, s), u⊥ = (-s, c).
        Ok(Mat2::new(
            sh * c * c + sl * s * s,
            (sh - sl) * c * s,
            (sh - sl) * c * s,
            sh * s * s + sl * c * c,
        ))
    }
}

impl std::ops::Add for Mat2 {
    type Output = Mat2;

    fn add(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a11 + o.a11,
            self.a12 + o.a12,
            self.a21 + o.a21,
            self.a22 + o.a22,
        )
    }
}

impl std::ops::Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a11 * o.a11 + self.a12 * o.a21,
            self.a11 * o.a12 + self.a12 * o.a22,
            self.a21 * o.a11 + self.a22 * o.a21,
            self.a21 * o.a12 + self.a22 * o.a22,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_vector_roundtrip() {
        let a = Mat2::new(1.0, 2.0, 3.0, 4.0);
        let v = Vec2::new(5.0, -1.0);
        let av = a.mul_vec(v);
        assert_eq!(av, Vec2::new(3.0, 11.0));
        assert_eq!(a.det(), -2.0);
        assert_eq!(a.trace(), 5.0);
    }

    #[test]
    fn congruence_matches_manual_product() {
        let a = Mat2::new(0.2, -1.3, 0.7, 0.5);
        let s = Mat2::new(2.0, 0.3, 0.3, 1.0);
        let c = a.congruence(s);
        let manual = a * s * a.transpose();
        assert!((c.a11 - manual.a11).abs() < 1e-15);
        assert!((c.a12 - c.a21).abs() < 1e-15);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let s = Mat2::new(2.0, 0.9, 0.9, 1.5);
        let r = s.psd_sqrt().unwrap();
        let rr = r * r;
        assert!((rr.a11 - s.a11).abs() < 1e-12);
        assert!((rr.a12 - s.a12).abs() < 1e-12);
        assert!((rr.a22 - s.a22).abs() < 1e-12);
    }

    #[test]
    fn psd_sqrt_handles_degenerate_and_rejects_negative() {
        let s = Mat2::new(1.0, 1.0, 1.0, 1.0); // rank one
        let r = s.psd_sqrt().unwrap();
        let rr = r * r;
        assert!((rr.a12 - 1.0).abs() < 1e-12);

        let bad = Mat2::new(1.0, 0.0, 0.0, -1e-6);
        assert!(matches!(
            bad.psd_sqrt(),
            Err(CoreError::NotPositiveSemidefinite { .. })
        ));
    }
}
