//! Small statistical helpers: stable log-mean-exp and least-squares fits.

/// log(mean(exp(w))) with max subtraction, safe for large exponents.
///
/// Returns `(value, std_error_of_value, effective_sample_size)`. The
/// standard error is the delta-method error of the log of the sample
/// mean; the effective sample size is `(Σwᵢ)²/Σwᵢ²` of the exponential
/// weights and collapses towards 1 when a single sample dominates.
pub fn log_mean_exp(w: &[f64]) -> (f64, f64, f64) {
    assert!(!w.is_empty(), "log_mean_exp of empty slice");
    let c = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !c.is_finite() {
        return (c, 0.0, w.len() as f64);
    }
    let n = w.len() as f64;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for &wi in w {
        let e = (wi - c).exp();
        sum += e;
        sum_sq += e * e;
    }
    let mean = sum / n;
    let value = c + mean.ln();
    // Var(sample mean)/mean² via the delta method.
    let var_mean = (sum_sq / n - mean * mean).max(0.0) / n;
    let se = var_mean.sqrt() / mean;
    let ess = if sum_sq > 0.0 { sum * sum / sum_sq } else { n };
    (value, se, ess)
}

/// Ordinary least squares fit y = a + b x; returns (intercept, slope).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "linear fit needs at least two points");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

/// Slope of log(y) against log(x); the empirical convergence order.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    linear_fit(&lx, &ly).1
}

/// Mean and (unbiased) sample variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}
