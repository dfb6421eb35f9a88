//! Exact Gaussian law of the continuous and Galerkin-truncated solutions.
//!
//! The generator and the noise covariance are simultaneously diagonal in
//! the sine basis, so every operator expression reduces to a per-mode
//! scalar obtained by substituting the eigenvalue −k² of the Laplacian.
//! Modes never couple: means, variances, samplers, and the logarithmic
//! moment generating functions all assemble from per-mode closed forms.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{CoreError, Result};
use crate::linalg::{Mat2, Vec2};
use crate::monte_carlo::EstimateWithCI;
use crate::spectral::{NoiseSpec, SpectralVector};

/// Terminal-time law parameters: noise spectrum, initial datum, horizon,
/// and the number of retained modes.
#[derive(Debug, Clone)]
pub struct ExactLawParams {
    spec: NoiseSpec,
    u0: SpectralVector,
    t: f64,
    m: usize,
}

impl ExactLawParams {
    pub fn new(spec: NoiseSpec, u0: SpectralVector, t: f64, m: usize) -> Result<Self> {
        if !t.is_finite() || t <= 0.0 {
            return Err(CoreError::InvalidParam(format!(
                "terminal time must be positive, got {t}"
            )));
        }
        if m == 0 || m > spec.etas().len() {
            return Err(CoreError::InvalidParam(format!(
                "mode count {m} out of range 1..={}",
                spec.etas().len()
            )));
        }
        // The truncated system starts from the projected datum, padded
        // with zeros when the supplied vector is shorter.
        let mut coeffs: Vec<Complex64> = u0.coeffs().to_vec();
        coeffs.resize(m, Complex64::new(0.0, 0.0));
        coeffs.truncate(m);
        Ok(Self {
            spec,
            u0: SpectralVector::new(coeffs)?,
            t,
            m,
        })
    }

    pub fn spec(&self) -> &NoiseSpec {
        &self.spec
    }

    pub fn u0(&self) -> &SpectralVector {
        &self.u0
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn modes(&self) -> usize {
        self.m
    }

    fn require_same_modes(&self, h: &SpectralVector) -> Result<()> {
        if h.modes() != self.m {
            return Err(CoreError::DimensionMismatch {
                left: h.modes(),
                right: self.m,
            });
        }
        Ok(())
    }
}

/// ∫₀ᵗ sin²((t−s)k²) ds = t/2 − sin(2tk²)/(4k²).
fn int_sin_sq(t: f64, k: usize) -> f64 {
    let k2 = (k * k) as f64;
    t / 2.0 - (2.0 * t * k2).sin() / (4.0 * k2)
}

/// ∫₀ᵗ cos²((t−s)k²) ds = t/2 + sin(2tk²)/(4k²).
fn int_cos_sq(t: f64, k: usize) -> f64 {
    let k2 = (k * k) as f64;
    t / 2.0 + (2.0 * t * k2).sin() / (4.0 * k2)
}

/// Eigenvalue of ∫₀ᵗ sin((t−s)Δ) cos((t−s)Δ) ds on mode k, i.e. the signed
/// cross integral −(1 − cos(2tk²))/(4k²).
fn int_sin_cos(t: f64, k: usize) -> f64 {
    let k2 = (k * k) as f64;
    -(1.0 - (2.0 * t * k2).cos()) / (4.0 * k2)
}

/// Rotates the initial datum by the free flow: c_k ↦ e^{−i k² t} c_k.
pub fn free_flow(u0: &SpectralVector, t: f64) -> SpectralVector {
    let coeffs = u0
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let k2 = ((i + 1) * (i + 1)) as f64;
            Complex64::from_polar(1.0, -k2 * t) * c
        })
        .collect();
    SpectralVector::new(coeffs).expect("nonempty by construction")
}

/// E⟨u(T), h⟩_ℝ = ⟨S(T) u₀, h⟩_ℝ.
pub fn mean_pairing(params: &ExactLawParams, h: &SpectralVector) -> Result<f64> {
    params.require_same_modes(h)?;
    free_flow(params.u0(), params.t()).real_inner(h)
}

/// Var⟨u(T), h⟩_ℝ for the real-noise model, assembled per mode from the
/// trigonometric integrals.
pub fn var_pairing(params: &ExactLawParams, h: &SpectralVector) -> Result<f64> {
    params.require_same_modes(h)?;
    let a2 = params.spec().alpha().powi(2);
    let t = params.t();
    let mut total = 0.0;
    for (i, c) in h.coeffs().iter().enumerate() {
        let k = i + 1;
        let eta = params.spec().eta(k);
        let (r, m) = (c.re, c.im);
        total += a2
            * eta
            * (int_sin_sq(t, k) * r * r + int_cos_sq(t, k) * m * m
                - 2.0 * int_sin_cos(t, k) * r * m);
    }
    Ok(total)
}

/// Var⟨u(T), h⟩_ℝ for the correlated complex-noise model: two covariance
/// spectra drive the real and imaginary noise components, with per-mode
/// increment correlation ρ entering only the bounded remainder.
pub fn var_pairing_complex(params: &ExactLawParams, h: &SpectralVector) -> Result<f64> {
    params.require_same_modes(h)?;
    let complex = params
        .spec()
        .complex_part()
        .ok_or_else(|| CoreError::InvalidParam("noise spec has no complex part".into()))?;
    let a2 = params.spec().alpha().powi(2);
    let rho = complex.rho;
    let t = params.t();
    let mut total = 0.0;
    for (i, c) in h.coeffs().iter().enumerate() {
        let k = i + 1;
        let q1 = complex.etas1.get(i).copied().unwrap_or(0.0);
        let q2 = complex.etas2.get(i).copied().unwrap_or(0.0);
        let g = (q1 * q2).sqrt();
        let (r, m) = (c.re, c.im);
        let ss = int_sin_sq(t, k);
        let sc = int_cos_sq(t, k);
        let sx = int_sin_cos(t, k);
        total += a2
            * (ss * q1 * r * r
                + sc * q2 * r * r
                + sc * q1 * m * m
                + ss * q2 * m * m
                + 2.0 * rho * sx * g * r * r
                - 2.0 * sx * q1 * r * m
                + 2.0 * rho * ss * g * r * m
                - 2.0 * rho * sc * g * r * m
                + 2.0 * sx * q2 * r * m
                - 2.0 * rho * sx * g * m * m);
    }
    Ok(total)
}

/// Per-mode 2×2 covariance of (Re, Im) of the terminal noise.
fn mode_noise_cov(spec: &NoiseSpec, t: f64, k: usize) -> Mat2 {
    let a2 = spec.alpha().powi(2);
    let eta = spec.eta(k);
    let cross = -a2 * eta * int_sin_cos(t, k);
    Mat2::new(a2 * eta * int_sin_sq(t, k), cross, cross, a2 * eta * int_cos_sq(t, k))
}

/// One exact draw of the Galerkin solution at the terminal time: the
/// rotated initial datum plus per-mode jointly Gaussian noise with the
/// closed-form covariance. No discretization error enters.
pub fn sample_terminal<R: Rng + ?Sized>(
    params: &ExactLawParams,
    rng: &mut R,
) -> Result<SpectralVector> {
    let mean = free_flow(params.u0(), params.t());
    let mut coeffs = Vec::with_capacity(params.modes());
    for (i, mc) in mean.coeffs().iter().enumerate() {
        let cov = mode_noise_cov(params.spec(), params.t(), i + 1);
        let root = cov.psd_sqrt()?;
        let xi = Vec2::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        );
        let noise = root.mul_vec(xi);
        coeffs.push(Complex64::new(mc.re + noise.x, mc.im + noise.y));
    }
    SpectralVector::new(coeffs)
}

/// Λ(λ) = (α²/4) Σ_k η_k |λ_k|², the quadratic LMGF of the time-averaged
/// continuous observable.
pub fn lmgf_continuous(spec: &NoiseSpec, lambda: &SpectralVector) -> f64 {
    let a2 = spec.alpha().powi(2);
    a2 / 4.0
        * lambda
            .coeffs()
            .iter()
            .enumerate()
            .map(|(i, c)| spec.eta(i + 1) * c.norm_sqr())
            .sum::<f64>()
}

/// The Galerkin LMGF: the covariance acts through the projection, so
/// modes beyond `m` are annihilated.
pub fn lmgf_galerkin(spec: &NoiseSpec, m: usize, lambda: &SpectralVector) -> f64 {
    let a2 = spec.alpha().powi(2);
    a2 / 4.0
        * lambda
            .coeffs()
            .iter()
            .take(m)
            .enumerate()
            .map(|(i, c)| spec.eta(i + 1) * c.norm_sqr())
            .sum::<f64>()
}

/// E‖u(T)‖² = ‖u₀‖² + α² T Σ_{k≤M} η_k for the truncated system.
pub fn mass_expectation(params: &ExactLawParams) -> f64 {
    let trace: f64 = (1..=params.modes()).map(|k| params.spec().eta(k)).sum();
    params.u0().mass() + params.spec().alpha().powi(2) * params.t() * trace
}

/// Closed form of the Gaussian exponential-square moment
/// E exp(ε‖X‖²) = Π_k (1 − 2ε λ_k)^{−1/2}, finite iff ε < 1/(2λ₁).
pub fn fernique_closed_form(eigenvalues: &[f64], eps: f64) -> Result<f64> {
    let top = eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let critical = if top > 0.0 { 1.0 / (2.0 * top) } else { f64::INFINITY };
    if eps >= critical {
        return Err(CoreError::EpsOutOfRange { eps, critical });
    }
    Ok(eigenvalues
        .iter()
        .map(|&l| (1.0 - 2.0 * eps * l).powf(-0.5))
        .product())
}

/// Monte Carlo estimate of E exp(ε‖X‖²) for X ~ N(0, diag(λ)).
pub fn fernique_mc(
    eigenvalues: &[f64],
    eps: f64,
    samples: usize,
    seed: u64,
) -> Result<EstimateWithCI> {
    let top = eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let critical = if top > 0.0 { 1.0 / (2.0 * top) } else { f64::INFINITY };
    if eps >= critical {
        return Err(CoreError::EpsOutOfRange { eps, critical });
    }
    if samples == 0 {
        return Err(CoreError::InvalidParam("sample count must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = samples as f64;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        let norm_sq: f64 = eigenvalues
            .iter()
            .map(|&l| {
                let xi: f64 = StandardNormal.sample(&mut rng);
                l * xi * xi
            })
            .sum();
        let w = (eps * norm_sq).exp();
        sum += w;
        sum_sq += w * w;
    }
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    Ok(EstimateWithCI {
        estimate: mean,
        std_error: (var / n).sqrt(),
        samples,
        ess: None,
    })
}

/// Side-by-side Monte Carlo estimate and closed form of the Gaussian
/// exponential-square moment.
pub fn fernique_identity_check(
    eigenvalues: &[f64],
    eps: f64,
    samples: usize,
    seed: u64,
) -> Result<(EstimateWithCI, f64)> {
    let closed = fernique_closed_form(eigenvalues, eps)?;
    let mc = fernique_mc(eigenvalues, eps, samples, seed)?;
    Ok((mc, closed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{linear_fit, mean_var};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Composite Simpson quadrature, the independent oracle for the
    /// trigonometric integrals.
    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        let n = if n.is_multiple_of(2) { n } else { n + 1 };
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    fn params_one_mode() -> ExactLawParams {
        let spec = NoiseSpec::new(1.0, vec![1.0]).unwrap();
        ExactLawParams::new(spec, SpectralVector::zero(1), 1.0, 1).unwrap()
    }

    #[test]
    fn trig_integrals_match_quadrature() {
        for &t in &[0.3, 1.0, 4.7] {
            for k in 1..=3usize {
                let k2 = (k * k) as f64;
                let ss = simpson(|s| ((t - s) * k2).sin().powi(2), 0.0, t, 4000);
                let sc = simpson(|s| ((t - s) * k2).cos().powi(2), 0.0, t, 4000);
                let sx = simpson(
                    |s| -((t - s) * k2).sin() * ((t - s) * k2).cos(),
                    0.0,
                    t,
                    4000,
                );
                assert!((ss - int_sin_sq(t, k)).abs() < 1e-9, "sin² t={t} k={k}");
                assert!((sc - int_cos_sq(t, k)).abs() < 1e-9, "cos² t={t} k={k}");
                assert!((sx - int_sin_cos(t, k)).abs() < 1e-9, "cross t={t} k={k}");
            }
        }
    }

    #[test]
    fn mean_pairing_zero_datum() {
        let p = params_one_mode();
        let h = SpectralVector::new(vec![c(2.0, -3.0)]).unwrap();
        assert_eq!(mean_pairing(&p, &h).unwrap(), 0.0);
    }

    #[test]
    fn mean_pairing_single_mode_rotation() {
        let spec = NoiseSpec::new(1.0, vec![1.0]).unwrap();
        let u0 = SpectralVector::new(vec![c(1.0, 0.0)]).unwrap();
        let p = ExactLawParams::new(spec, u0, std::f64::consts::PI, 1).unwrap();
        let h = SpectralVector::new(vec![c(1.0, 0.0)]).unwrap();
        assert!((mean_pairing(&p, &h).unwrap() + 1.0).abs() < 1e-14);
    }

    #[test]
    fn mean_pairing_orthogonal_direction_vanishes() {
        // h = i e^{−iT} u0 is real-orthogonal to the rotated datum.
        let t = 0.9;
        let spec = NoiseSpec::new(1.0, vec![1.0]).unwrap();
        let u0 = SpectralVector::new(vec![c(1.0, 0.0)]).unwrap();
        let p = ExactLawParams::new(spec, u0, t, 1).unwrap();
        let h = SpectralVector::new(vec![Complex64::i() * Complex64::from_polar(1.0, -t)]).unwrap();
        assert!(mean_pairing(&p, &h).unwrap().abs() < 1e-15);
    }

    #[test]
    fn var_pairing_single_mode_value() {
        let p = params_one_mode();
        let h = SpectralVector::new(vec![c(1.0, 0.0)]).unwrap();
        let v = var_pairing(&p, &h).unwrap();
        let expect = 0.5 - (2.0f64).sin() / 4.0;
        assert!((v - expect).abs() < 1e-14);
        assert!((v - 0.2726757).abs() < 1e-6);
    }

    #[test]
    fn var_pairing_zero_vector() {
        let p = params_one_mode();
        assert_eq!(var_pairing(&p, &SpectralVector::zero(1)).unwrap(), 0.0);
    }

    #[test]
    fn var_pairing_matches_quadrature_for_complex_direction() {
        let spec = NoiseSpec::new(1.3, vec![1.0, 0.25]).unwrap();
        let t = 2.1;
        let p = ExactLawParams::new(spec.clone(), SpectralVector::zero(2), t, 2).unwrap();
        let h = SpectralVector::new(vec![c(0.8, -0.5), c(-0.2, 1.1)]).unwrap();
        let v = var_pairing(&p, &h).unwrap();
        // Independent route: per mode, Var = α²η[r²∫sin² + m²∫cos² − 2rm∫(signed sin·cos)].
        let mut expect = 0.0;
        for (i, cc) in h.coeffs().iter().enumerate() {
            let k2 = ((i + 1) * (i + 1)) as f64;
            let ss = simpson(|s| ((t - s) * k2).sin().powi(2), 0.0, t, 8000);
            let sc = simpson(|s| ((t - s) * k2).cos().powi(2), 0.0, t, 8000);
            let sx = simpson(|s| -((t - s) * k2).sin() * ((t - s) * k2).cos(), 0.0, t, 8000);
            expect += 1.69
                * spec.eta(i + 1)
                * (ss * cc.re * cc.re + sc * cc.im * cc.im - 2.0 * sx * cc.re * cc.im);
        }
        assert!((v - expect).abs() < 1e-8);
    }

    #[test]
    fn var_pairing_growth_rate_matches_lmgf_slope() {
        // Var/T approaches α²‖Q^{1/2}h‖²/2, i.e. twice the LMGF value.
        let spec = NoiseSpec::new(0.7, vec![1.0, 1.0 / 16.0]).unwrap();
        let h = SpectralVector::new(vec![c(1.0, 0.4), c(-0.3, 0.9)]).unwrap();
        let ts = [50.0, 100.0, 200.0];
        let vars: Vec<f64> = ts
            .iter()
            .map(|&t| {
                let p = ExactLawParams::new(spec.clone(), SpectralVector::zero(2), t, 2).unwrap();
                var_pairing(&p, &h).unwrap()
            })
            .collect();
        let (_, slope) = linear_fit(&ts, &vars);
        let expect = 2.0 * lmgf_continuous(&spec, &h);
        assert!(
            ((slope - expect) / expect).abs() < 1e-2,
            "slope {slope} vs {expect}"
        );
    }

    #[test]
    fn complex_variance_reduces_to_real_noise_when_degenerate() {
        let t = 3.3;
        let etas = vec![1.0, 0.5];
        let spec = NoiseSpec::new(1.1, etas.clone())
            .unwrap()
            .with_complex(etas.clone(), vec![0.0, 0.0], 0.0)
            .unwrap();
        let p = ExactLawParams::new(spec, SpectralVector::zero(2), t, 2).unwrap();
        let h = SpectralVector::new(vec![c(0.6, -1.0), c(0.3, 0.2)]).unwrap();
        let full = var_pairing_complex(&p, &h).unwrap();
        let real = var_pairing(&p, &h).unwrap();
        assert!((full - real).abs() < 1e-12);
    }

    #[test]
    fn complex_variance_requires_complex_part() {
        let p = params_one_mode();
        let h = SpectralVector::zero(1);
        assert!(var_pairing_complex(&p, &h).is_err());
    }

    #[test]
    fn doubled_spectrum_doubles_the_growth_rate() {
        let etas = vec![1.0, 0.25];
        let base = NoiseSpec::new(1.0, etas.clone()).unwrap();
        let doubled = base
            .clone()
            .with_complex(etas.clone(), etas.clone(), 0.0)
            .unwrap();
        let h = SpectralVector::new(vec![c(1.0, 0.3), c(0.2, -0.4)]).unwrap();
        let ts = [50.0, 100.0, 200.0];
        let slope_of = |complex: bool| {
            let vars: Vec<f64> = ts
                .iter()
                .map(|&t| {
                    let p = ExactLawParams::new(
                        if complex { doubled.clone() } else { base.clone() },
                        SpectralVector::zero(2),
                        t,
                        2,
                    )
                    .unwrap();
                    if complex {
                        var_pairing_complex(&p, &h).unwrap()
                    } else {
                        var_pairing(&p, &h).unwrap()
                    }
                })
                .collect();
            linear_fit(&ts, &vars).1
        };
        let ratio = slope_of(true) / slope_of(false);
        assert!((ratio - 2.0).abs() < 1e-2, "ratio {ratio}");
    }

    #[test]
    fn growth_rate_does_not_depend_on_correlation() {
        let etas = vec![1.0, 0.0625];
        let h = SpectralVector::new(vec![c(0.9, 0.1), c(0.4, 0.4)]).unwrap();
        let ts = [50.0, 100.0, 200.0];
        let slopes: Vec<f64> = [-1.0, 0.0, 1.0]
            .iter()
            .map(|&rho| {
                let spec = NoiseSpec::new(1.0, etas.clone())
                    .unwrap()
                    .with_complex(etas.clone(), etas.clone(), rho)
                    .unwrap();
                let vars: Vec<f64> = ts
                    .iter()
                    .map(|&t| {
                        let p =
                            ExactLawParams::new(spec.clone(), SpectralVector::zero(2), t, 2)
                                .unwrap();
                        var_pairing_complex(&p, &h).unwrap()
                    })
                    .collect();
                linear_fit(&ts, &vars).1
            })
            .collect();
        for s in &slopes[1..] {
            assert!(((s - slopes[0]) / slopes[0]).abs() < 1e-2);
        }
    }

    /// Riemann-sum simulation of the stochastic convolution with
    /// correlated increments; an independent check of the ten-term
    /// variance display including the ρ coupling.
    #[test]
    fn complex_variance_matches_increment_simulation() {
        let t = 1.0;
        let etas1 = vec![1.0];
        let etas2 = vec![0.49];
        let rho = 0.6;
        let spec = NoiseSpec::new(1.0, etas1.clone())
            .unwrap()
            .with_complex(etas1.clone(), etas2.clone(), rho)
            .unwrap();
        let p = ExactLawParams::new(spec, SpectralVector::zero(1), t, 1).unwrap();
        let h = SpectralVector::new(vec![c(0.7, -0.6)]).unwrap();
        let closed = var_pairing_complex(&p, &h).unwrap();

        let steps = 256usize;
        let dt = t / steps as f64;
        let samples = 40_000usize;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut pairings = Vec::with_capacity(samples);
        let (s1, s2) = (etas1[0].sqrt(), etas2[0].sqrt());
        for _ in 0..samples {
            let mut re = 0.0;
            let mut im = 0.0;
            for j in 0..steps {
                let s = (j as f64 + 0.5) * dt;
                let angle = (t - s) * 1.0;
                let (sn, cs) = angle.sin_cos();
                let z1: f64 = StandardNormal.sample(&mut rng);
                let z2: f64 = StandardNormal.sample(&mut rng);
                let db1 = dt.sqrt() * z1;
                let db2 = dt.sqrt() * (rho * z1 + (1.0 - rho * rho).sqrt() * z2);
                // Mode-k action of the mild-solution integrands.
                re += sn * s1 * db1 - cs * s2 * db2;
                im += cs * s1 * db1 + sn * s2 * db2;
            }
            pairings.push(re * h.coeff(1).re + im * h.coeff(1).im);
        }
        let (_, var) = mean_var(&pairings);
        // Gaussian variance-of-variance SE plus the O(dt²) midpoint bias.
        let se = var * (2.0 / samples as f64).sqrt();
        assert!(
            (var - closed).abs() < 5.0 * se + 1e-3,
            "simulated {var} vs closed {closed} (se {se})"
        );
    }

    #[test]
    fn sampler_is_deterministic_flow_without_noise() {
        // α is required positive, so emulate the noiseless case with a
        // zero spectrum instead.
        let spec = NoiseSpec::new(1.0, vec![0.0, 0.0]).unwrap();
        let u0 = SpectralVector::new(vec![c(1.0, 0.5), c(-0.25, 0.0)]).unwrap();
        let t = 0.77;
        let p = ExactLawParams::new(spec, u0.clone(), t, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let draw = sample_terminal(&p, &mut rng).unwrap();
        let expect = free_flow(&u0, t);
        for (a, b) in draw.coeffs().iter().zip(expect.coeffs()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn sampler_moments_match_closed_forms() {
        let spec = NoiseSpec::new(1.0, vec![1.0, 1.0 / 16.0]).unwrap();
        let u0 = SpectralVector::new(vec![c(0.3, -0.2), c(0.1, 0.0)]).unwrap();
        let t = 1.4;
        let p = ExactLawParams::new(spec, u0, t, 2).unwrap();
        let h = SpectralVector::new(vec![c(1.0, 0.5), c(-0.7, 0.2)]).unwrap();
        let n = 100_000usize;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut pairings = Vec::with_capacity(n);
        let mut masses = Vec::with_capacity(n);
        for _ in 0..n {
            let draw = sample_terminal(&p, &mut rng).unwrap();
            pairings.push(draw.real_inner(&h).unwrap());
            masses.push(draw.mass());
        }
        let (mean, var) = mean_var(&pairings);
        let exact_mean = mean_pairing(&p, &h).unwrap();
        let exact_var = var_pairing(&p, &h).unwrap();
        let se_mean = (exact_var / n as f64).sqrt();
        assert!(
            (mean - exact_mean).abs() < 4.0 * se_mean,
            "mean {mean} vs {exact_mean}"
        );
        let se_var = exact_var * (2.0 / (n as f64 - 1.0)).sqrt();
        assert!(
            (var - exact_var).abs() < 4.0 * se_var,
            "var {var} vs {exact_var}"
        );
        let (mmean, mvar) = mean_var(&masses);
        let expect_mass = mass_expectation(&p);
        let se_mass = (mvar / n as f64).sqrt();
        assert!(
            (mmean - expect_mass).abs() < 4.0 * se_mass,
            "mass {mmean} vs {expect_mass}"
        );
    }

    #[test]
    fn lmgf_is_the_growth_rate_of_the_pairing_cumulant() {
        // (1/T)(E⟨u,λ⟩ + Var⟨u,λ⟩/2) approaches the LMGF inside an O(1/T)
        // envelope: T·gap is bounded by the rotated-datum pairing plus the
        // bounded variance remainder. The gap itself oscillates, so the
        // check is against the envelope, not for monotone decay.
        let spec = NoiseSpec::new(1.2, vec![1.0, 0.0625]).unwrap();
        let u0 = SpectralVector::new(vec![c(0.5, -0.3), c(0.2, 0.1)]).unwrap();
        let lam = SpectralVector::new(vec![c(0.8, 0.1), c(-0.3, 0.6)]).unwrap();
        let limit = lmgf_continuous(&spec, &lam);
        let a2 = spec.alpha().powi(2);
        let weighted: f64 = lam
            .coeffs()
            .iter()
            .enumerate()
            .map(|(i, l)| spec.eta(i + 1) * l.norm_sqr())
            .sum();
        let envelope = (u0.mass() * lam.mass()).sqrt() + a2 * weighted;
        for &t in &[1e2, 1e3, 1e4] {
            let p = ExactLawParams::new(spec.clone(), u0.clone(), t, 2).unwrap();
            let cumulant_rate =
                (mean_pairing(&p, &lam).unwrap() + var_pairing(&p, &lam).unwrap() / 2.0) / t;
            let gap = (cumulant_rate - limit).abs();
            assert!(gap <= envelope / t, "gap {gap} at T={t} exceeds {envelope}/T");
        }
    }

    #[test]
    fn mass_expectation_examples() {
        let spec = NoiseSpec::new(1.0, vec![1.0, 1.0 / 16.0]).unwrap();
        let u0 = SpectralVector::new(vec![c(1.0, 1.0), c(0.0, 0.0)]).unwrap();
        // T → 0 limit: only the initial mass. Use the formula directly at
        // a tiny horizon.
        let p_small = ExactLawParams::new(spec.clone(), u0.clone(), 1e-300, 2).unwrap();
        assert!((mass_expectation(&p_small) - 2.0).abs() < 1e-12);

        let p = ExactLawParams::new(spec, SpectralVector::zero(2), 2.0, 2).unwrap();
        assert!((mass_expectation(&p) - 2.125).abs() < 1e-15);
    }

    #[test]
    fn mass_expectation_equals_trace_of_mode_covariances() {
        let spec = NoiseSpec::new(1.3, vec![1.0, 0.25, 0.1]).unwrap();
        let u0 = SpectralVector::new(vec![c(0.5, 0.1), c(0.0, -0.4), c(0.2, 0.2)]).unwrap();
        let t = 3.7;
        let p = ExactLawParams::new(spec.clone(), u0.clone(), t, 3).unwrap();
        let mut trace_sum = free_flow(&u0, t).mass();
        for k in 1..=3 {
            trace_sum += mode_noise_cov(&spec, t, k).trace();
        }
        assert!((trace_sum - mass_expectation(&p)).abs() < 1e-12);
    }

    #[test]
    fn lmgf_values_and_homogeneity() {
        let spec = NoiseSpec::new(2.0, vec![1.0]).unwrap();
        let lam = SpectralVector::new(vec![c(1.0, 0.0)]).unwrap();
        assert_eq!(lmgf_continuous(&spec, &SpectralVector::zero(1)), 0.0);
        assert!((lmgf_continuous(&spec, &lam) - 1.0).abs() < 1e-15);
        for &s in &[0.5, 2.0, -3.0] {
            let scaled = lam.scale(s);
            assert!(
                (lmgf_continuous(&spec, &scaled) - s * s * lmgf_continuous(&spec, &lam)).abs()
                    < 1e-12
            );
        }
    }

    #[test]
    fn galerkin_lmgf_projects_and_is_monotone() {
        let spec = NoiseSpec::power_law(1.0, 4.0, 4).unwrap();
        let lam = SpectralVector::new(vec![c(0.3, 0.1), c(-0.5, 0.2), c(0.0, 0.9), c(0.4, 0.4)])
            .unwrap();
        // Supported within the truncation: equals the continuous LMGF.
        let low = SpectralVector::new(vec![c(0.3, 0.1), c(-0.5, 0.2), c(0.0, 0.0), c(0.0, 0.0)])
            .unwrap();
        assert!(
            (lmgf_galerkin(&spec, 2, &low) - lmgf_continuous(&spec, &low)).abs() < 1e-15
        );
        // A direction past the truncation is annihilated.
        let high = SpectralVector::basis(4, 4).unwrap();
        assert_eq!(lmgf_galerkin(&spec, 3, &high), 0.0);
        // Monotone in the truncation level.
        let mut prev = 0.0;
        for m in 1..=4 {
            let v = lmgf_galerkin(&spec, m, &lam);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
        assert!(prev <= lmgf_continuous(&spec, &lam) + 1e-15);
    }

    #[test]
    fn fernique_closed_form_values() {
        assert!((fernique_closed_form(&[1.0, 0.5], 0.0).unwrap() - 1.0).abs() < 1e-15);
        let v = fernique_closed_form(&[1.0], 0.25).unwrap();
        assert!((v - 2.0f64.sqrt()).abs() < 1e-12);
        assert!(matches!(
            fernique_closed_form(&[1.0], 0.5),
            Err(CoreError::EpsOutOfRange { .. })
        ));
        assert!(fernique_closed_form(&[1.0], 0.7).is_err());
    }

    #[test]
    fn fernique_mc_agrees_with_closed_form() {
        let eigs = [1.0];
        let eps = 0.2;
        let (mc, closed) = fernique_identity_check(&eigs, eps, 1_000_000, 7).unwrap();
        assert!(
            (mc.estimate - closed).abs() < 3.0 * mc.std_error,
            "mc {} vs closed {closed} (se {})",
            mc.estimate,
            mc.std_error
        );
    }
}
