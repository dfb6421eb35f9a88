//! Finite spectral representation: complex mode coefficients against the
//! sine eigenbasis, the noise covariance spectrum, and the square-root /
//! pseudo-inverse calculus every other module builds on.

use num_complex::Complex64;

use crate::error::{CoreError, Result};

/// Default tolerance for deciding that a coefficient sitting on a
/// zero-eigenvalue mode is round-off rather than genuine mass.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

/// A finite sequence of complex mode coefficients c_k, k = 1..M.
///
/// This is the in-memory stand-in for elements of the solution space: a
/// vector is identified with Σ c_k e_k against the orthonormal sine basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralVector {
    coeffs: Vec<Complex64>,
}

impl SpectralVector {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(CoreError::InvalidParam(
                "a spectral vector needs at least one mode".into(),
            ));
        }
        Ok(Self { coeffs })
    }

    /// Zero vector on `m` modes.
    pub fn zero(m: usize) -> Self {
        Self::new(vec![Complex64::new(0.0, 0.0); m]).expect("m >= 1")
    }

    /// Basis vector e_k (1-based) on `m` modes.
    pub fn basis(k: usize, m: usize) -> Result<Self> {
        if k == 0 || k > m {
            return Err(CoreError::InvalidParam(format!(
                "basis index {k} out of range 1..={m}"
            )));
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0); m];
        coeffs[k - 1] = Complex64::new(1.0, 0.0);
        Self::new(coeffs)
    }

    /// Convenience constructor from (re, im) pairs.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(re, im)| Complex64::new(re, im)).collect())
    }

    pub fn modes(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of mode `k` (1-based); zero beyond the stored length.
    pub fn coeff(&self, k: usize) -> Complex64 {
        assert!(k >= 1, "modes are 1-based");
        self.coeffs
            .get(k - 1)
            .copied()
            .unwrap_or_else(|| Complex64::new(0.0, 0.0))
    }

    /// Real inner product Σ_k (Re c_k Re d_k + Im c_k Im d_k).
    pub fn real_inner(&self, other: &SpectralVector) -> Result<f64> {
        if self.modes() != other.modes() {
            return Err(CoreError::DimensionMismatch {
                left: self.modes(),
                right: other.modes(),
            });
        }
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(c, d)| c.re * d.re + c.im * d.im)
            .sum())
    }

    /// Squared norm Σ_k |c_k|².
    pub fn mass(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Truncation to the first `m` modes.
    pub fn project(&self, m: usize) -> Result<SpectralVector> {
        if m == 0 || m > self.modes() {
            return Err(CoreError::InvalidParam(format!(
                "projection target {m} out of range 1..={}",
                self.modes()
            )));
        }
        SpectralVector::new(self.coeffs[..m].to_vec())
    }

    pub fn scale(&self, s: f64) -> SpectralVector {
        SpectralVector {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn sub(&self, other: &SpectralVector) -> Result<SpectralVector> {
        if self.modes() != other.modes() {
            return Err(CoreError::DimensionMismatch {
                left: self.modes(),
                right: other.modes(),
            });
        }
        SpectralVector::new(
            self.coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(c, d)| c - d)
                .collect(),
        )
    }

    /// Largest mode index carrying a coefficient with |c_k| > tol, or
    /// `None` when the vector is zero up to tol.
    pub fn support_end(&self, tol: f64) -> Option<usize> {
        self.coeffs
            .iter()
            .rposition(|c| c.norm() > tol)
            .map(|i| i + 1)
    }
}

/// Correlated complex-noise extension: two covariance spectra driving the
/// real and imaginary noise components plus a per-mode increment
/// correlation.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexNoise {
    pub etas1: Vec<f64>,
    pub etas2: Vec<f64>,
    pub rho: f64,
}

/// Noise amplitude and covariance spectrum: amplitude α > 0 together with
/// the non-increasing eigenvalue sequence η_1 ≥ η_2 ≥ … ≥ 0 of the
/// covariance operator, truncated at a finite length. Modes beyond the
/// stored sequence carry eigenvalue zero (finite-rank extension).
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    alpha: f64,
    etas: Vec<f64>,
    complex_part: Option<ComplexNoise>,
}

fn check_spectrum(etas: &[f64], label: &str) -> Result<()> {
    if etas.is_empty() {
        return Err(CoreError::InvalidParam(format!("{label}: empty spectrum")));
    }
    for (i, w) in etas.windows(2).enumerate() {
        if w[1] > w[0] {
            return Err(CoreError::InvalidParam(format!(
                "{label}: eigenvalues must be non-increasing (violated at index {})",
                i + 1
            )));
        }
    }
    if etas.iter().any(|&e| e < 0.0 || !e.is_finite()) {
        return Err(CoreError::InvalidParam(format!(
            "{label}: eigenvalues must be finite and nonnegative"
        )));
    }
    Ok(())
}

impl NoiseSpec {
    pub fn new(alpha: f64, etas: Vec<f64>) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(CoreError::InvalidParam(format!(
                "noise amplitude must be positive, got {alpha}"
            )));
        }
        check_spectrum(&etas, "etas")?;
        Ok(Self {
            alpha,
            etas,
            complex_part: None,
        })
    }

    /// Power-law spectrum η_k = k^(-p) truncated at `m` modes. The
    /// default test spectrum uses p = 4 so that Σ k² η_k stays summable.
    pub fn power_law(alpha: f64, p: f64, m: usize) -> Result<Self> {
        if p < 0.0 {
            return Err(CoreError::InvalidParam(format!(
                "power-law exponent must be nonnegative, got {p}"
            )));
        }
        let etas = (1..=m).map(|k| (k as f64).powf(-p)).collect();
        Self::new(alpha, etas)
    }

    pub fn with_complex(mut self, etas1: Vec<f64>, etas2: Vec<f64>, rho: f64) -> Result<Self> {
        check_spectrum(&etas1, "etas1")?;
        check_spectrum(&etas2, "etas2")?;
        if !(-1.0..=1.0).contains(&rho) {
            return Err(CoreError::InvalidParam(format!(
                "increment correlation must lie in [-1, 1], got {rho}"
            )));
        }
        self.complex_part = Some(ComplexNoise { etas1, etas2, rho });
        Ok(self)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn etas(&self) -> &[f64] {
        &self.etas
    }

    pub fn complex_part(&self) -> Option<&ComplexNoise> {
        self.complex_part.as_ref()
    }

    /// Eigenvalue of mode `k` (1-based); zero beyond the stored sequence.
    pub fn eta(&self, k: usize) -> f64 {
        assert!(k >= 1, "modes are 1-based");
        self.etas.get(k - 1).copied().unwrap_or(0.0)
    }

    /// Trace of the stored (truncated) spectrum.
    pub fn trace(&self) -> f64 {
        self.etas.iter().sum()
    }

    /// Componentwise action of the covariance square root: c_k ↦ √η_k c_k.
    pub fn apply_sqrt(&self, x: &SpectralVector) -> SpectralVector {
        let coeffs = x
            .coeffs()
            .iter()
            .enumerate()
            .map(|(i, c)| c * self.eta(i + 1).sqrt())
            .collect();
        SpectralVector { coeffs }
    }

    /// Minimal-norm preimage under the covariance square root.
    ///
    /// Components on modes with η_k > 0 are divided by √η_k; components on
    /// zero-eigenvalue modes must vanish up to `tol` (they are set to zero
    /// in the preimage) or the vector is outside the range.
    pub fn apply_pinv_sqrt(
        &self,
        x: &SpectralVector,
        tol: f64,
    ) -> std::result::Result<SpectralVector, CoreError> {
        let mut coeffs = Vec::with_capacity(x.modes());
        for (i, c) in x.coeffs().iter().enumerate() {
            let eta = self.eta(i + 1);
            if eta > 0.0 {
                coeffs.push(c / eta.sqrt());
            } else if c.norm() <= tol {
                coeffs.push(Complex64::new(0.0, 0.0));
            } else {
                return Err(CoreError::OutsideRange {
                    mode: i + 1,
                    magnitude: c.norm(),
                });
            }
        }
        Ok(SpectralVector { coeffs })
    }
}
