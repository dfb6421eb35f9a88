//! The 2×2 one-step integrator family.
//!
//! Every temporal method considered here advances one oscillator mode by
//!
//! ```text
//! (p, q)_{n+1} = A(h) (p, q)_n + α_k B(h) δβ_n,        h = k²τ,
//! ```
//!
//! with scheme-specific coefficient functions A(h) ∈ ℝ^{2×2} and
//! B(h) ∈ ℝ². The catalog carries the midpoint scheme, the exponential
//! Euler method, and the backward Euler–Maruyama method; custom schemes
//! load from coefficient tables over an h grid.
//!
//! The structural assumptions the large-deviations results hinge on are
//! checked per stepsize by [`check_assumptions`]: an elliptic propagator
//! (4 det A > tr² A), symplecticity (det A = 1), strict positivity of the
//! noise quadratic form, contractivity (det A < 1), and the first-order
//! consistency residuals.

use crate::error::{CoreError, Result};
use crate::linalg::{Mat2, Vec2, PSD_EIGEN_TOL};
use crate::spectral::NoiseSpec;

/// Stability guard on the ellipticity margin 4 det − tr²; below this the
/// rotation angle degenerates and the power coefficients blow up.
pub const ELLIPTIC_GUARD: f64 = 1e-10;

/// Default tolerance for the symplecticity test |det A − 1|.
pub const SYMPLECTIC_TOL: f64 = 1e-12;

/// Coefficients (A(h), B(h)) of one scheme at one stepsize.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeCoeffs {
    pub a: Mat2,
    pub b: Vec2,
}

/// A custom scheme given by rows (h, a11, a12, a21, a22, b1, b2).
#[derive(Debug, Clone, PartialEq)]
pub struct TableScheme {
    name: String,
    rows: Vec<(f64, SchemeCoeffs)>,
}

impl TableScheme {
    /// Parses the text form: a `scheme <name>` header followed by one row
    /// of seven numbers per line. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut name = None;
        let mut rows: Vec<(f64, SchemeCoeffs)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("scheme") {
                let rest = rest.trim();
                if rest.is_empty() {
                    return Err(CoreError::InvalidParam(format!(
                        "line {}: scheme header without a name",
                        lineno + 1
                    )));
                }
                name = Some(rest.to_string());
                continue;
            }
            let nums: Vec<f64> = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>().map_err(|_| {
                        CoreError::InvalidParam(format!(
                            "line {}: `{t}` is not a number",
                            lineno + 1
                        ))
                    })
                })
                .collect::<Result<_>>()?;
            if nums.len() != 7 {
                return Err(CoreError::InvalidParam(format!(
                    "line {}: expected 7 columns (h a11 a12 a21 a22 b1 b2), got {}",
                    lineno + 1,
                    nums.len()
                )));
            }
            if !nums[0].is_finite() || nums[0] <= 0.0 {
                return Err(CoreError::InvalidParam(format!(
                    "line {}: stepsize must be positive",
                    lineno + 1
                )));
            }
            rows.push((
                nums[0],
                SchemeCoeffs {
                    a: Mat2::new(nums[1], nums[2], nums[3], nums[4]),
                    b: Vec2::new(nums[5], nums[6]),
                },
            ));
        }
        let name = name.ok_or_else(|| {
            CoreError::InvalidParam("coefficient table is missing a `scheme <name>` header".into())
        })?;
        if rows.is_empty() {
            return Err(CoreError::InvalidParam(format!(
                "coefficient table `{name}` has no rows"
            )));
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self { name, rows })
    }

    fn eval(&self, h: f64) -> Result<SchemeCoeffs> {
        let tol = 1e-12 * h.max(1.0);
        self.rows
            .iter()
            .find(|(hh, _)| (hh - h).abs() <= tol)
            .map(|(_, c)| *c)
            .ok_or_else(|| {
                CoreError::InvalidParam(format!(
                    "scheme `{}` has no coefficient row at h = {h}",
                    self.name
                ))
            })
    }
}

/// A temporal one-step method, addressable by name.
#[derive(Debug, Clone, PartialEq)]
pub enum Scheme {
    /// Implicit midpoint rule. Symplectic for every h > 0.
    Midpoint,
    /// Exponential Euler: exact rotation with rotated noise. Symplectic;
    /// the ellipticity margin vanishes at h = π.
    ExpEuler,
    /// Backward Euler–Maruyama. Strictly contractive (det A < 1).
    BackwardEuler,
    /// User-supplied coefficient table.
    Table(TableScheme),
}

impl Scheme {
    pub fn by_name(name: &str) -> Result<Scheme> {
        match name {
            "midpoint" => Ok(Scheme::Midpoint),
            "exp-euler" => Ok(Scheme::ExpEuler),
            "backward-em" => Ok(Scheme::BackwardEuler),
            other => Err(CoreError::UnknownScheme(other.to_string())),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Scheme::Midpoint => "midpoint",
            Scheme::ExpEuler => "exp-euler",
            Scheme::BackwardEuler => "backward-em",
            Scheme::Table(t) => &t.name,
        }
    }

    /// Upper end of the stepsize range on which the ellipticity margin is
    /// known to stay positive. Stepping and rate evaluation refuse h at or
    /// beyond this bound.
    pub fn h_max(&self) -> f64 {
        match self {
            Scheme::Midpoint | Scheme::BackwardEuler => f64::INFINITY,
            Scheme::ExpEuler => std::f64::consts::PI,
            Scheme::Table(_) => f64::INFINITY,
        }
    }

    /// Coefficients (A(h), B(h)) at stepsize h.
    pub fn eval(&self, h: f64) -> Result<SchemeCoeffs> {
        if !h.is_finite() || h <= 0.0 {
            return Err(CoreError::InvalidParam(format!(
                "stepsize must be positive and finite, got {h}"
            )));
        }
        match self {
            Scheme::Midpoint => {
                let d = 4.0 + h * h;
                Ok(SchemeCoeffs {
                    a: Mat2::new(4.0 - h * h, 4.0 * h, -4.0 * h, 4.0 - h * h).scale(1.0 / d),
                    b: Vec2::new(h, 2.0).scale(2.0 / d),
                })
            }
            Scheme::ExpEuler => {
                let (s, c) = h.sin_cos();
                Ok(SchemeCoeffs {
                    a: Mat2::new(c, s, -s, c),
                    b: Vec2::new(s, c),
                })
            }
            Scheme::BackwardEuler => {
                let d = 1.0 + h * h;
                Ok(SchemeCoeffs {
                    a: Mat2::new(1.0, h, -h, 1.0).scale(1.0 / d),
                    b: Vec2::new(h, 1.0).scale(1.0 / d),
                })
            }
            Scheme::Table(t) => t.eval(h),
        }
    }

    fn violated(&self, h: f64, what: &'static str, detail: String) -> CoreError {
        CoreError::AssumptionViolated {
            scheme: self.name().to_string(),
            assumption: what,
            h,
            detail,
        }
    }

    /// Checks h against the validity domain and the ellipticity guard.
    pub fn require_elliptic(&self, h: f64) -> Result<SchemeCoeffs> {
        if h >= self.h_max() {
            return Err(self.violated(
                h,
                "A1",
                format!("stepsize exceeds the validity bound {}", self.h_max()),
            ));
        }
        let coeffs = self.eval(h)?;
        let margin = 4.0 * coeffs.a.det() - coeffs.a.trace().powi(2);
        if margin <= ELLIPTIC_GUARD {
            return Err(self.violated(
                h,
                "A1",
                format!("ellipticity margin 4·det − tr² = {margin:.3e}"),
            ));
        }
        Ok(coeffs)
    }
}

/// Rotation angle θ ∈ (0, π) of the normalized propagator:
/// cos θ = tr A / (2 √det A), sin θ = √(4 det A − tr² A) / (2 √det A).
pub fn rotation_angle(scheme: &Scheme, h: f64) -> Result<f64> {
    let coeffs = scheme.require_elliptic(h)?;
    let det = coeffs.a.det();
    let tr = coeffs.a.trace();
    let denom = 2.0 * det.sqrt();
    let cos_t = tr / denom;
    let sin_t = (4.0 * det - tr * tr).sqrt() / denom;
    Ok(sin_t.atan2(cos_t))
}

/// Scalar coefficient family from which the matrix powers A(h)ⁿ assemble:
/// det^((n−1)/2) · sin(nθ) / sin(θ). Defined for any integer n once the
/// ellipticity margin is positive.
pub fn matrix_power_coeff(scheme: &Scheme, h: f64, n: i64) -> Result<f64> {
    let coeffs = scheme.require_elliptic(h)?;
    let det = coeffs.a.det();
    let theta = rotation_angle(scheme, h)?;
    let scale = (0.5 * (n - 1) as f64 * det.ln()).exp();
    Ok(scale * (n as f64 * theta).sin() / theta.sin())
}

/// Assembles A(h)ⁿ from the power coefficients.
pub fn matrix_power(scheme: &Scheme, h: f64, n: i64) -> Result<Mat2> {
    let coeffs = scheme.require_elliptic(h)?;
    let det = coeffs.a.det();
    let lo = matrix_power_coeff(scheme, h, n - 1)?;
    let mid = matrix_power_coeff(scheme, h, n)?;
    let hi = matrix_power_coeff(scheme, h, n + 1)?;
    Ok(Mat2::new(
        -det * lo + coeffs.a.a11 * mid,
        coeffs.a.a12 * mid,
        coeffs.a.a21 * mid,
        hi - coeffs.a.a11 * mid,
    ))
}

/// Coefficients of the per-mode noise accumulation quadratic form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseFormCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// The (a, b, c) functions combining A(h) and B(h):
///
/// ```text
/// a = (a11 b1 + a12 b2 − b1)² + b1 (a11 b1 + a12 b2)(2 − tr A)
/// b = (a21 b1 − a11 b2 + b2)² − b2 (a21 b1 − a11 b2)(2 − tr A)
/// c = ½ (a21 b1 − a11 b2) b1 tr A + b1 b2 (½ tr² A − 1)
///     − (a11 b1 + a12 b2)(a21 b1 − a11 b2) − ½ tr A (a11 b1 + a12 b2) b2
/// ```
pub fn noise_form_coeffs(scheme: &Scheme, h: f64) -> Result<NoiseFormCoeffs> {
    let SchemeCoeffs { a: m, b } = scheme.eval(h)?;
    let tr = m.trace();
    let u = m.a11 * b.x + m.a12 * b.y;
    let v = m.a21 * b.x - m.a11 * b.y;
    let a = (u - b.x) * (u - b.x) + b.x * u * (2.0 - tr);
    let bb = (v + b.y) * (v + b.y) - b.y * v * (2.0 - tr);
    let c = 0.5 * v * b.x * tr + b.x * b.y * (0.5 * tr * tr - 1.0) - u * v - 0.5 * tr * u * b.y;
    Ok(NoiseFormCoeffs { a, b: bb, c })
}

/// How a scheme is classified after validation over an h grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    /// det A ≡ 1 over the grid: the step map preserves the symplectic form.
    Symplectic,
    /// det A < 1 over the grid: strictly contractive.
    NonSymplectic,
    /// The grid hits an ellipticity failure, a vanishing noise vector, or
    /// a determinant pattern that is neither of the above.
    Invalid,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Symplectic => "symplectic",
            Classification::NonSymplectic => "non-symplectic",
            Classification::Invalid => "invalid",
        }
    }
}

/// Per-stepsize margins for the structural assumptions.
#[derive(Debug, Clone, Copy)]
pub struct StepReport {
    pub h: f64,
    pub det: f64,
    pub tr: f64,
    /// 4 det − tr²; positive under the ellipticity assumption.
    pub elliptic_margin: f64,
    /// |det − 1|; zero (to tolerance) iff symplectic at this h.
    pub symplectic_residual: f64,
    /// 1 − |c|/√(ab); positive when the noise form is strictly elliptic.
    /// NaN when a·b ≤ 0.
    pub noise_form_margin: f64,
    /// 1 − det; positive under the contractivity assumption.
    pub contractive_margin: f64,
    /// |a11−1| + |a22−1| + |a12−h| + |a21+h|, the O(h²) drift residual.
    pub consistency_matrix_residual: f64,
    /// |b1| + |b2−1|, the O(h) noise residual.
    pub consistency_noise_residual: f64,
    /// b1² + b2²; must stay away from zero.
    pub noise_norm_sq: f64,
}

/// Validation outcome over an h grid.
#[derive(Debug, Clone)]
pub struct AssumptionReport {
    pub scheme: String,
    pub tol: f64,
    pub steps: Vec<StepReport>,
    pub classification: Classification,
}

impl AssumptionReport {
    pub fn is_usable(&self) -> bool {
        self.classification != Classification::Invalid
    }
}

/// Evaluates the assumption margins of `scheme` on `h_grid` and
/// classifies it. `tol` bounds the allowed symplecticity residual.
pub fn check_assumptions(scheme: &Scheme, h_grid: &[f64], tol: f64) -> Result<AssumptionReport> {
    if h_grid.is_empty() {
        return Err(CoreError::InvalidParam("empty stepsize grid".into()));
    }
    let mut steps = Vec::with_capacity(h_grid.len());
    let mut all_elliptic = true;
    let mut all_symplectic = true;
    let mut all_contractive = true;
    let mut noise_ok = true;
    for &h in h_grid {
        if !h.is_finite() || h <= 0.0 {
            return Err(CoreError::InvalidParam(format!(
                "stepsize grid contains a nonpositive value {h}"
            )));
        }
        let SchemeCoeffs { a, b } = scheme.eval(h)?;
        let det = a.det();
        let tr = a.trace();
        let nf = noise_form_coeffs(scheme, h)?;
        let noise_margin = if nf.a > 0.0 && nf.b > 0.0 {
            1.0 - nf.c.abs() / (nf.a * nf.b).sqrt()
        } else {
            f64::NAN
        };
        let step = StepReport {
            h,
            det,
            tr,
            elliptic_margin: 4.0 * det - tr * tr,
            symplectic_residual: (det - 1.0).abs(),
            noise_form_margin: noise_margin,
            contractive_margin: 1.0 - det,
            consistency_matrix_residual: (a.a11 - 1.0).abs()
                + (a.a22 - 1.0).abs()
                + (a.a12 - h).abs()
                + (a.a21 + h).abs(),
            consistency_noise_residual: b.x.abs() + (b.y - 1.0).abs(),
            noise_norm_sq: b.norm_sq(),
        };
        all_elliptic &= step.elliptic_margin > ELLIPTIC_GUARD && h < scheme.h_max();
        all_symplectic &= step.symplectic_residual <= tol;
        all_contractive &= det < 1.0 - tol;
        noise_ok &= step.noise_norm_sq > 0.0;
        steps.push(step);
    }
    let classification = if !all_elliptic || !noise_ok {
        Classification::Invalid
    } else if all_symplectic {
        Classification::Symplectic
    } else if all_contractive {
        Classification::NonSymplectic
    } else {
        Classification::Invalid
    };
    Ok(AssumptionReport {
        scheme: scheme.name().to_string(),
        tol,
        steps,
        classification,
    })
}

/// Requires det A(h) = 1 (within `tol`) plus the ellipticity guard at one
/// stepsize; returns the coefficients on success.
pub fn require_symplectic_at(scheme: &Scheme, h: f64, tol: f64) -> Result<SchemeCoeffs> {
    let coeffs = scheme.require_elliptic(h)?;
    let residual = (coeffs.a.det() - 1.0).abs();
    if residual > tol {
        return Err(CoreError::AssumptionViolated {
            scheme: scheme.name().to_string(),
            assumption: "A2",
            h,
            detail: format!("|det A − 1| = {residual:.3e}"),
        });
    }
    Ok(coeffs)
}

/// Precomputed per-mode step maps for a noise spectrum: mode k advances by
/// A(k²τ) with noise column α √η_k B(k²τ).
#[derive(Debug, Clone)]
pub struct Stepper {
    mats: Vec<Mat2>,
    noise_cols: Vec<Vec2>,
}

impl Stepper {
    pub fn new(scheme: &Scheme, spec: &NoiseSpec, m: usize, tau: f64) -> Result<Self> {
        if m == 0 {
            return Err(CoreError::InvalidParam("mode count must be >= 1".into()));
        }
        if !tau.is_finite() || tau <= 0.0 {
            return Err(CoreError::InvalidParam(format!(
                "stepsize must be positive, got {tau}"
            )));
        }
        let mut mats = Vec::with_capacity(m);
        let mut noise_cols = Vec::with_capacity(m);
        for k in 1..=m {
            let h = (k * k) as f64 * tau;
            let coeffs = scheme.require_elliptic(h)?;
            let alpha_k = spec.alpha() * spec.eta(k).sqrt();
            mats.push(coeffs.a);
            noise_cols.push(coeffs.b.scale(alpha_k));
        }
        Ok(Self { mats, noise_cols })
    }

    pub fn modes(&self) -> usize {
        self.mats.len()
    }

    /// Advances every mode one step with the supplied Brownian increments
    /// (one N(0, τ) draw per mode; external supply enables replay).
    pub fn step(&self, state: &mut [Vec2], increments: &[f64]) -> Result<()> {
        if state.len() != self.modes() || increments.len() != self.modes() {
            return Err(CoreError::DimensionMismatch {
                left: state.len(),
                right: self.modes(),
            });
        }
        for ((s, mat), (col, &db)) in state
            .iter_mut()
            .zip(&self.mats)
            .zip(self.noise_cols.iter().zip(increments))
        {
            *s = mat.mul_vec(*s) + col.scale(db);
        }
        Ok(())
    }
}

/// Exact mean and covariance of one mode after `n` steps.
#[derive(Debug, Clone, Copy)]
pub struct ModeGaussianState {
    pub mean: Vec2,
    pub cov: Mat2,
    pub n: usize,
}

/// Exact linear-Gaussian moment recursion: mean ↦ A·mean and
/// cov ↦ A cov Aᵀ + α_k² τ B Bᵀ, iterated `n` times. No sampling error;
/// this is the oracle the closed-form moment formulas are tested against.
pub fn propagate_moments(
    scheme: &Scheme,
    k: usize,
    alpha_k: f64,
    tau: f64,
    n: usize,
    init: Vec2,
) -> Result<ModeGaussianState> {
    let h = (k * k) as f64 * tau;
    let coeffs = scheme.require_elliptic(h)?;
    let noise = Mat2::outer(coeffs.b).scale(alpha_k * alpha_k * tau);
    let mut mean = init;
    let mut cov = Mat2::zero();
    for _ in 0..n {
        mean = coeffs.a.mul_vec(mean);
        cov = coeffs.a.congruence(cov) + noise;
    }
    let min_eig = cov.sym_eigenvalues().0;
    if min_eig < -PSD_EIGEN_TOL * cov.max_abs().max(1.0) {
        return Err(CoreError::NotPositiveSemidefinite { eigenvalue: min_eig });
    }
    Ok(ModeGaussianState { mean, cov, n })
}

/// Mean of one mode after `n` steps via the matrix-power coefficients;
/// valid whenever the ellipticity margin is positive (any determinant).
pub fn closed_form_mean(scheme: &Scheme, k: usize, tau: f64, n: usize, init: Vec2) -> Result<Vec2> {
    let h = (k * k) as f64 * tau;
    Ok(matrix_power(scheme, h, n as i64)?.mul_vec(init))
}

/// Leading-order moments of a symplectic scheme after `n` steps: the
/// exact means together with the linear-in-n variance and covariance
/// terms. The omitted remainders are bounded uniformly in `n`; see
/// [`moment_remainder_bound`].
#[derive(Debug, Clone, Copy)]
pub struct LeadingMoments {
    pub mean: Vec2,
    pub var_p: f64,
    pub var_q: f64,
    pub cov_pq: f64,
    /// Per-step growth rates: var_p = slope_p · n, etc.
    pub slope_p: f64,
    pub slope_q: f64,
    pub slope_pq: f64,
}

/// Closed-form means and leading variance/covariance terms for a
/// symplectic scheme. Requires the ellipticity margin and det A = 1.
pub fn closed_form_moments(
    scheme: &Scheme,
    k: usize,
    alpha_k: f64,
    tau: f64,
    n: usize,
    init: Vec2,
) -> Result<LeadingMoments> {
    let h = (k * k) as f64 * tau;
    require_symplectic_at(scheme, h, SYMPLECTIC_TOL)?;
    let mean = closed_form_mean(scheme, k, tau, n, init)?;
    let nf = noise_form_coeffs(scheme, h)?;
    let theta = rotation_angle(scheme, h)?;
    let sin_sq = theta.sin().powi(2);
    let base = tau * alpha_k * alpha_k / (2.0 * sin_sq);
    let lm = LeadingMoments {
        mean,
        var_p: base * nf.a * n as f64,
        var_q: base * nf.b * n as f64,
        cov_pq: -base * nf.c * n as f64,
        slope_p: base * nf.a,
        slope_q: base * nf.b,
        slope_pq: -base * nf.c,
    };
    Ok(lm)
}

/// Uniform-in-n bound on the variance and covariance remainders of a
/// symplectic scheme. The oscillating parts of the second-moment sums are
/// geometric cosine series bounded by 1/sin θ, so every remainder is at
/// most τ α_k² max(|b1|+|u|, |b2|+|v|)² / (2 sin³ θ), where
/// u = a11 b1 + a12 b2 and v = a21 b1 − a11 b2.
pub fn moment_remainder_bound(scheme: &Scheme, k: usize, alpha_k: f64, tau: f64) -> Result<f64> {
    let h = (k * k) as f64 * tau;
    let coeffs = scheme.require_elliptic(h)?;
    let theta = rotation_angle(scheme, h)?;
    let s = theta.sin();
    let u = (coeffs.a.a11 * coeffs.b.x + coeffs.a.a12 * coeffs.b.y).abs();
    let v = (coeffs.a.a21 * coeffs.b.x - coeffs.a.a11 * coeffs.b.y).abs();
    let worst = (coeffs.b.x.abs() + u).max(coeffs.b.y.abs() + v);
    Ok(tau * alpha_k * alpha_k * worst * worst / (2.0 * s * s * s))
}
