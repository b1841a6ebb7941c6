//! Numeric kernel shared by every other module.

pub mod quadrature;
pub mod random;
pub mod roots;
pub mod special;

pub use quadrature::{integrate, QuadratureSpec};
pub use random::RandomStream;
pub use roots::{expand_bracket, find_root};
pub use special::{
    chi_pdf, gamma_cdf, gamma_pdf, gamma_quantile, gamma_sf, noncentral_t_cdf, norm_cdf, norm_pdf, norm_quantile,
    poisson_cdf, poisson_pmf,
};

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF. Sorts `sample`.
pub fn ks_distance(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the one-sample KS distance.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}
