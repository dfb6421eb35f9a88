//! Large-deviations rate functions of the time-averaged observables, the
//! logarithmic moment generating function of the fully discrete system,
//! its closed-form Legendre transform, the mass-tail rate, and the
//! mode-truncation witness.
//!
//! Finiteness is always a support question: a rate is finite exactly when
//! the queried vector lies in the range of the relevant covariance square
//! root, decided componentwise with an explicit tolerance. `+∞` is a
//! value, not an error.

use std::fmt;

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::scheme::{
    noise_form_coeffs, require_symplectic_at, rotation_angle, Scheme, SYMPLECTIC_TOL,
};
use crate::spectral::{NoiseSpec, SpectralVector, MEMBERSHIP_TOL};

/// Extended nonnegative real: a finite rate or a point outside the
/// effective domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateValue {
    Finite(f64),
    Infinite,
}

impl RateValue {
    pub fn is_finite(&self) -> bool {
        matches!(self, RateValue::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            RateValue::Finite(v) => Some(*v),
            RateValue::Infinite => None,
        }
    }

    /// Panics when infinite; for tests and contexts that already checked.
    pub fn expect_finite(&self) -> f64 {
        self.finite().expect("rate value is infinite")
    }
}

impl fmt::Display for RateValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateValue::Finite(v) => write!(f, "{v}"),
            RateValue::Infinite => write!(f, "inf"),
        }
    }
}

/// Rate function of the continuous observable: (1/α²)‖Q^{−1/2}x‖² on the
/// range of Q^{1/2}, +∞ outside.
pub fn rate_continuous(spec: &NoiseSpec, x: &SpectralVector, tol: f64) -> RateValue {
    match spec.apply_pinv_sqrt(x, tol) {
        Ok(y) => RateValue::Finite(y.mass() / spec.alpha().powi(2)),
        Err(_) => RateValue::Infinite,
    }
}

/// Rate function of the spatially semi-discrete observable: finite only
/// on vectors supported within the first `m` modes where the spectrum is
/// positive.
pub fn rate_galerkin(spec: &NoiseSpec, m: usize, x: &SpectralVector, tol: f64) -> RateValue {
    if let Some(end) = x.support_end(tol) {
        if end > m {
            return RateValue::Infinite;
        }
    }
    match x.project(m.min(x.modes())) {
        Ok(head) => rate_continuous(spec, &head, tol),
        Err(_) => RateValue::Infinite,
    }
}

/// Per-mode weights of the fully discrete rate function at h = k²τ.
fn discrete_mode_weight(scheme: &Scheme, spec: &NoiseSpec, k: usize, tau: f64) -> Result<ModeForm> {
    let h = (k * k) as f64 * tau;
    let coeffs = require_symplectic_at(scheme, h, SYMPLECTIC_TOL)?;
    let eta = spec.eta(k);
    if eta <= 0.0 {
        return Err(CoreError::EtaZero { mode: k });
    }
    let nf = noise_form_coeffs(scheme, h)?;
    let disc = nf.a * nf.b - nf.c * nf.c;
    if !(nf.a > 0.0 && nf.b > 0.0 && disc > 0.0) {
        return Err(CoreError::AssumptionViolated {
            scheme: scheme.name().to_string(),
            assumption: "A3",
            h,
            detail: format!("noise form not strictly elliptic: a={}, b={}, ab−c²={disc}", nf.a, nf.b),
        });
    }
    let alpha_k_sq = spec.alpha().powi(2) * eta;
    let tr = coeffs.a.trace();
    let scale = tau * (4.0 - tr * tr) / (4.0 * disc * alpha_k_sq);
    Ok(ModeForm {
        rr: scale * nf.b,
        ii: scale * nf.a,
        ri: scale * 2.0 * nf.c,
    })
}

/// Quadratic form q(z) = rr·(Re z)² + ii·(Im z)² + ri·Re z·Im z.
struct ModeForm {
    rr: f64,
    ii: f64,
    ri: f64,
}

impl ModeForm {
    fn eval(&self, z: Complex64) -> f64 {
        self.rr * z.re * z.re + self.ii * z.im * z.im + self.ri * z.re * z.im
    }
}

/// Rate function of the fully discrete observable for a symplectic
/// scheme: the per-mode quadratic form weighted by
/// τ(4 − tr²A)/(4(ab − c²)α_k²), finite on vectors supported within the
/// first `m` modes.
pub fn rate_full(
    scheme: &Scheme,
    spec: &NoiseSpec,
    m: usize,
    tau: f64,
    x: &SpectralVector,
    tol: f64,
) -> Result<RateValue> {
    // Validate the scheme and spectrum on every retained mode up front;
    // assumption failures are errors, not infinities.
    let forms: Vec<ModeForm> = (1..=m)
        .map(|k| discrete_mode_weight(scheme, spec, k, tau))
        .collect::<Result<_>>()?;
    if let Some(end) = x.support_end(tol) {
        if end > m {
            return Ok(RateValue::Infinite);
        }
    }
    let total = forms
        .iter()
        .enumerate()
        .map(|(i, f)| f.eval(x.coeff(i + 1)))
        .sum();
    Ok(RateValue::Finite(total))
}

/// The per-unit-time rescaling of [`rate_full`], comparable with the
/// continuous-time rates.
pub fn rate_modified(
    scheme: &Scheme,
    spec: &NoiseSpec,
    m: usize,
    tau: f64,
    x: &SpectralVector,
    tol: f64,
) -> Result<RateValue> {
    Ok(match rate_full(scheme, spec, m, tau, x, tol)? {
        RateValue::Finite(v) => RateValue::Finite(v / tau),
        RateValue::Infinite => RateValue::Infinite,
    })
}

/// Degenerate rate of a strictly contractive scheme: zero at the origin,
/// +∞ everywhere else.
pub fn rate_nonsymplectic(x: &SpectralVector, tol: f64) -> RateValue {
    if x.mass() <= tol {
        RateValue::Finite(0.0)
    } else {
        RateValue::Infinite
    }
}

/// LMGF of the fully discrete observable for a symplectic scheme:
/// Σ_k α_k²/(4τ sin²θ_k) · [a (Re λ_k)² + b (Im λ_k)² − 2c Re λ_k Im λ_k].
pub fn lmgf_full(
    scheme: &Scheme,
    spec: &NoiseSpec,
    m: usize,
    tau: f64,
    lambda: &SpectralVector,
) -> Result<f64> {
    if lambda.modes() > m {
        return Err(CoreError::DimensionMismatch {
            left: lambda.modes(),
            right: m,
        });
    }
    let mut total = 0.0;
    for k in 1..=m {
        let h = (k * k) as f64 * tau;
        require_symplectic_at(scheme, h, SYMPLECTIC_TOL)?;
        let z = lambda.coeff(k);
        if z.norm_sqr() == 0.0 {
            continue;
        }
        let nf = noise_form_coeffs(scheme, h)?;
        let theta = rotation_angle(scheme, h)?;
        let alpha_k_sq = spec.alpha().powi(2) * spec.eta(k);
        let scale = alpha_k_sq / (4.0 * tau * theta.sin().powi(2));
        total += scale * (nf.a * z.re * z.re + nf.b * z.im * z.im - 2.0 * nf.c * z.re * z.im);
    }
    Ok(total)
}

/// Search parameters for the numerical conjugate.
#[derive(Debug, Clone, Copy)]
pub struct ConjugateConfig {
    /// Probe amplitude for recovering the quadratic coefficients.
    pub probe: f64,
    /// Relative slack allowed when confirming the stationary point is a
    /// local maximum against the fallback probe cross.
    pub check_slack: f64,
}

impl Default for ConjugateConfig {
    fn default() -> Self {
        Self {
            probe: 1.0,
            check_slack: 1e-9,
        }
    }
}

/// Numerical Fenchel–Legendre transform of a separable quadratic LMGF,
/// evaluated through the supplied black box only.
///
/// Per mode, the quadratic coefficients of λ ↦ Λ(λ e_k) are recovered
/// from five probe evaluations, the stationary point of
/// ⟨λ, z⟩ − Λ(λ) is solved as a 2×2 linear system, and the supremum is
/// read off there. A coarse probe cross around the solution guards
/// against a non-coercive or non-quadratic handle.
pub fn conjugate_numeric<F>(
    lmgf: F,
    m: usize,
    z: &SpectralVector,
    cfg: ConjugateConfig,
) -> Result<f64>
where
    F: Fn(&SpectralVector) -> f64,
{
    if z.modes() > m {
        return Err(CoreError::DimensionMismatch {
            left: z.modes(),
            right: m,
        });
    }
    let s = cfg.probe;
    let mut total = 0.0;
    for k in 1..=m {
        let zk = z.coeff(k);
        let probe = |re: f64, im: f64| {
            let mut coeffs = vec![Complex64::new(0.0, 0.0); m];
            coeffs[k - 1] = Complex64::new(re, im);
            lmgf(&SpectralVector::new(coeffs).expect("m >= 1"))
        };
        // Quadratic coefficients from symmetric probes: q(x, y) =
        // pxx x² + pyy y² + pxy xy, using q(±s, 0), q(0, ±s), q(s, s).
        let pxx = (probe(s, 0.0) + probe(-s, 0.0)) / (2.0 * s * s);
        let pyy = (probe(0.0, s) + probe(0.0, -s)) / (2.0 * s * s);
        let pxy = (probe(s, s) - probe(s, 0.0) - probe(0.0, s)) / (s * s);
        if !(pxx > 0.0 && pyy > 0.0 && 4.0 * pxx * pyy - pxy * pxy > 0.0) {
            return Err(CoreError::NonCoercive);
        }
        // Stationarity of (Re z) x + (Im z) y − q(x, y).
        let det = 4.0 * pxx * pyy - pxy * pxy;
        let x_star = (2.0 * pyy * zk.re - pxy * zk.im) / det;
        let y_star = (2.0 * pxx * zk.im - pxy * zk.re) / det;
        let value = zk.re * x_star + zk.im * y_star - probe(x_star, y_star);
        // Fallback probe cross: the solved point must not be beaten.
        let delta = s * 1e-2;
        let objective = |x: f64, y: f64| zk.re * x + zk.im * y - probe(x, y);
        let slack = cfg.check_slack * (1.0 + value.abs());
        for (dx, dy) in [(delta, 0.0), (-delta, 0.0), (0.0, delta), (0.0, -delta)] {
            if objective(x_star + dx, y_star + dy) > value + slack {
                return Err(CoreError::NonCoercive);
            }
        }
        total += value;
    }
    Ok(total)
}

/// Rate of the mass tail: J(y) = y²/(α² η₁), the minimal-energy
/// allocation of the constrained infimum over preimages. Requires a
/// strictly positive (injective) truncated spectrum.
pub fn mass_tail_rate(spec: &NoiseSpec, y: f64) -> Result<f64> {
    if y < 0.0 {
        return Err(CoreError::InvalidParam(format!(
            "tail level must be nonnegative, got {y}"
        )));
    }
    if let Some(i) = spec.etas().iter().position(|&e| e <= 0.0) {
        return Err(CoreError::EtaZero { mode: i + 1 });
    }
    Ok(y * y / (spec.alpha().powi(2) * spec.etas()[0]))
}

/// The truncation witness x_M for a representable target x: the point of
/// the truncated domain whose rate approximates the continuous rate.
#[derive(Debug, Clone)]
pub struct PreservationWitness {
    pub x_m: SpectralVector,
    /// |I(x) − I^M(x_M)|.
    pub gap: f64,
    /// ‖x − x_M‖.
    pub distance: f64,
}

/// Builds the witness x_M from the minimal-norm preimage y of x: keep the
/// first `m` preimage modes and push them back through the covariance
/// square root. The rate gap is the tail energy of the preimage.
pub fn preservation_witness(
    spec: &NoiseSpec,
    m: usize,
    x: &SpectralVector,
    tol: f64,
) -> Result<PreservationWitness> {
    let y = spec.apply_pinv_sqrt(x, tol)?;
    let mut head = y.coeffs().to_vec();
    for c in head.iter_mut().skip(m) {
        *c = Complex64::new(0.0, 0.0);
    }
    let x_m = spec.apply_sqrt(&SpectralVector::new(head)?);
    let tail_energy: f64 = y.coeffs().iter().skip(m).map(|c| c.norm_sqr()).sum();
    let gap = tail_energy / spec.alpha().powi(2);
    let distance = x.sub(&x_m)?.mass().sqrt();
    Ok(PreservationWitness { x_m, gap, distance })
}

/// Default membership tolerance, re-exported for callers that need to
/// spell it.
pub const DEFAULT_TOL: f64 = MEMBERSHIP_TOL;
