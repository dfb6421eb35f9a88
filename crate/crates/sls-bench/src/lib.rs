//! Shared benchmark fixtures. The measurements live in `benches/main.rs`.

use sls_core::{NoiseSpec, Scheme, SpectralVector};

pub fn bench_spec(m: usize) -> NoiseSpec {
    NoiseSpec::power_law(1.0, 4.0, m).expect("valid spectrum")
}

pub fn bench_point(m: usize) -> SpectralVector {
    SpectralVector::from_pairs(
        &(1..=m)
            .map(|k| (0.7 / k as f64, -0.2 / k as f64))
            .collect::<Vec<_>>(),
    )
    .expect("m >= 1")
}

pub fn schemes() -> [Scheme; 3] {
    [Scheme::Midpoint, Scheme::ExpEuler, Scheme::BackwardEuler]
}
