//! Special functions: Gaussian, gamma, Poisson and non-central Student-t.
//!
//! `erfc` comes from `libm` (msun port, sub-ulp accuracy); the inverse error
//! function and the regularized incomplete gamma functions come from
//! `statrs`. Quantiles are polished against the forward CDFs here.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2, SQRT_2};

use libm::erfc;
use statrs::function::erf::erfc_inv;
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use super::quadrature::{integrate, QuadratureSpec};
use crate::error::{domain, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal density.
pub fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z - LN_SQRT_2PI).exp()
}

/// Standard normal distribution function. Saturates at 0 and 1.
pub fn norm_cdf(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z == f64::INFINITY {
        return 1.0;
    }
    if z == f64::NEG_INFINITY {
        return 0.0;
    }
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// Inverse of [`norm_cdf`] on the open unit interval.
pub fn norm_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(domain(format!("normal quantile needs 0 < p < 1, got {p}")));
    }
    let mut z = -SQRT_2 * erfc_inv(2.0 * p);
    // One Newton step against the forward CDF.
    let dens = norm_pdf(z);
    if dens > 1e-300 {
        let step = (norm_cdf(z) - p) / dens;
        if step.is_finite() {
            z -= step;
        }
    }
    Ok(z)
}

/// Normal quantile extended to the closed interval, with `±inf` at the ends.
pub(crate) fn norm_quantile_closed(p: f64) -> f64 {
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else if p >= 1.0 {
        f64::INFINITY
    } else {
        norm_quantile(p).expect("p is interior")
    }
}

fn check_gamma_args(x: f64, shape: f64) -> Result<()> {
    if !(shape > 0.0) || !shape.is_finite() {
        return Err(domain(format!("gamma shape must be positive, got {shape}")));
    }
    if x.is_nan() || x < 0.0 {
        return Err(domain(format!("gamma argument must be non-negative, got {x}")));
    }
    Ok(())
}

/// Gamma(shape, 1) distribution function.
pub fn gamma_cdf(x: f64, shape: f64) -> Result<f64> {
    check_gamma_args(x, shape)?;
    Ok(if x == 0.0 {
        0.0
    } else if x.is_infinite() {
        1.0
    } else {
        gamma_lr(shape, x)
    })
}

/// Gamma(shape, 1) survival function `1 - gamma_cdf`, computed without cancellation.
pub fn gamma_sf(x: f64, shape: f64) -> Result<f64> {
    check_gamma_args(x, shape)?;
    Ok(if x == 0.0 {
        1.0
    } else if x.is_infinite() {
        0.0
    } else {
        gamma_ur(shape, x)
    })
}

/// Gamma(shape, 1) density.
pub fn gamma_pdf(x: f64, shape: f64) -> Result<f64> {
    check_gamma_args(x, shape)?;
    if x == 0.0 {
        return Ok(if shape < 1.0 {
            f64::INFINITY
        } else if shape == 1.0 {
            1.0
        } else {
            0.0
        });
    }
    Ok(((shape - 1.0) * x.ln() - x - ln_gamma(shape)).exp())
}

/// Inverse of [`gamma_cdf`] in its first argument.
///
/// Wilson–Hilferty start, then Newton steps kept inside a shrinking bracket.
pub fn gamma_quantile(p: f64, shape: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(domain(format!("gamma quantile needs 0 < p < 1, got {p}")));
    }
    check_gamma_args(0.0, shape)?;

    let z = norm_quantile(p)?;
    let wh = {
        let c = 1.0 / (9.0 * shape);
        shape * (1.0 - c + z * c.sqrt()).powi(3)
    };
    let mut x = if wh > 0.0 && shape >= 0.5 {
        wh
    } else {
        ((p.ln() + ln_gamma(shape + 1.0)) / shape).exp()
    };

    // Residual measured on whichever tail is smaller keeps precision for p near 1.
    let upper = p > 0.5;
    let residual = |x: f64| -> f64 {
        if upper {
            (1.0 - p) - gamma_ur(shape, x)
        } else {
            gamma_lr(shape, x) - p
        }
    };

    let mut lo = 0.0_f64;
    let mut hi = x.max(1.0);
    while residual(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(domain(format!("gamma quantile overflow for p = {p}, shape = {shape}")));
        }
    }
    if !(x > lo && x < hi) {
        x = 0.5 * (lo + hi);
    }

    for _ in 0..300 {
        let r = residual(x);
        if r == 0.0 {
            return Ok(x);
        }
        if r < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let dens = gamma_pdf(x, shape)?;
        let mut next = if dens > 0.0 && dens.is_finite() {
            x - r / dens
        } else {
            f64::NAN
        };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs() || hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Inverse gamma CDF on the closed unit interval: `0` at `p = 0`, `inf` at `p = 1`.
pub(crate) fn gamma_quantile_closed(p: f64, shape: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else if p >= 1.0 {
        f64::INFINITY
    } else {
        gamma_quantile(p, shape).expect("interior probability and positive shape")
    }
}

/// Poisson mass function `e^{-θ} θ^k / k!`.
pub fn poisson_pmf(k: u64, theta: f64) -> Result<f64> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(domain(format!("Poisson mean must be positive, got {theta}")));
    }
    let k = k as f64;
    Ok((k * theta.ln() - theta - ln_gamma(k + 1.0)).exp())
}

/// Poisson distribution function `P{X <= k}`, via the gamma survival function.
pub fn poisson_cdf(k: u64, theta: f64) -> Result<f64> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(domain(format!("Poisson mean must be positive, got {theta}")));
    }
    gamma_sf(theta, k as f64 + 1.0)
}

/// Density of the chi distribution with `df` degrees of freedom.
pub fn chi_pdf(c: f64, df: f64) -> f64 {
    if c < 0.0 {
        return 0.0;
    }
    if c == 0.0 {
        return if df == 1.0 {
            (-(0.5 * (df - 2.0) * LN_2) - ln_gamma(0.5 * df)).exp()
        } else if df < 1.0 {
            f64::INFINITY
        } else {
            0.0
        };
    }
    ((df - 1.0) * c.ln() - 0.5 * c * c - (0.5 * df - 1.0) * LN_2 - ln_gamma(0.5 * df)).exp()
}

/// Non-central Student-t distribution function.
///
/// Computes `P{(ncp + Z) / W <= z}` with `Z ~ N(0,1)` and `W = sqrt(ChiSq(df)/df)`
/// by conditioning on the chi variate `C = sqrt(ChiSq(df))`:
/// `∫ Φ(z C / sqrt(df) - ncp) f_C(c) dc` over `c > 0`.
pub fn noncentral_t_cdf(z: f64, df: u32, ncp: f64, spec: &QuadratureSpec) -> Result<f64> {
    if df == 0 {
        return Err(domain("non-central t needs df >= 1"));
    }
    if !z.is_finite() || !ncp.is_finite() {
        if z == f64::INFINITY {
            return Ok(1.0);
        }
        if z == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        return Err(domain(format!("non-finite argument z = {z}, ncp = {ncp}")));
    }
    let k = df as f64;
    let scale = z / k.sqrt();
    let integrand = |c: f64| norm_cdf(scale * c - ncp) * chi_pdf(c, k);

    let mode = (k - 1.0).max(0.0).sqrt();
    let mut total = 0.0;
    if mode > 0.0 {
        total += integrate(integrand, 0.0, mode, spec)?;
    }
    total += integrate(integrand, mode, f64::INFINITY, spec)?;
    Ok(total.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Bisection on the forward CDF, independent of the quantile code path.
    fn bisect_inverse(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn norm_cdf_basics() {
        assert_eq!(norm_cdf(0.0), 0.5);
        assert_eq!(norm_cdf(f64::NEG_INFINITY), 0.0);
        assert_eq!(norm_cdf(f64::INFINITY), 1.0);
        assert!(norm_cdf(-40.0) >= 0.0 && norm_cdf(-40.0) < 1e-300);
        for i in -80..=80 {
            let z = i as f64 * 0.1;
            assert_abs_diff_eq!(norm_cdf(z) + norm_cdf(-z), 1.0, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(norm_cdf(1.6448536269514722), 0.95, epsilon = 1e-12);
    }

    #[test]
    fn norm_cdf_inverts_to_textbook_value() {
        let z95 = bisect_inverse(norm_cdf, 0.95, 0.0, 5.0);
        assert_abs_diff_eq!(z95, 1.6448536, epsilon = 1e-7);
    }

    #[test]
    fn norm_quantile_values() {
        assert_abs_diff_eq!(norm_quantile(0.5).unwrap(), 0.0, epsilon = 1e-15);
        let z05 = bisect_inverse(norm_cdf, 0.05, -5.0, 0.0);
        assert_abs_diff_eq!(norm_quantile(0.05).unwrap(), z05, epsilon = 1e-10);
        assert_abs_diff_eq!(norm_quantile(0.05).unwrap(), -1.6448536, epsilon = 1e-7);
        assert_abs_diff_eq!(norm_quantile(0.95).unwrap(), 1.6448536, epsilon = 1e-7);
        for p in [1e-12, 1e-6, 0.01, 0.3, 0.77, 0.999, 1.0 - 1e-9] {
            assert_abs_diff_eq!(norm_cdf(norm_quantile(p).unwrap()), p, epsilon = 1e-10);
        }
    }

    #[test]
    fn norm_quantile_domain() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(norm_quantile(p).is_err(), "p = {p}");
        }
    }

    #[test]
    fn gamma_cdf_values() {
        assert_eq!(gamma_cdf(0.0, 5.0).unwrap(), 0.0);
        for theta in [0.1, 1.0, 2.5, 10.0] {
            assert_abs_diff_eq!(gamma_cdf(theta, 1.0).unwrap(), 1.0 - (-theta).exp(), epsilon = 1e-14);
        }
        // Direct Poisson sum for (θ, x) = (5, 5).
        let mut term = (-5.0f64).exp();
        let mut sum = term;
        for k in 1..=5 {
            term *= 5.0 / k as f64;
            sum += term;
        }
        assert_abs_diff_eq!(1.0 - gamma_cdf(5.0, 6.0).unwrap(), sum, epsilon = 1e-12);
        assert_abs_diff_eq!(sum, 0.6159606548330632, epsilon = 1e-12);
    }

    #[test]
    fn gamma_domain_errors() {
        assert!(gamma_cdf(-1.0, 2.0).is_err());
        assert!(gamma_cdf(1.0, 0.0).is_err());
        assert!(gamma_cdf(1.0, -2.0).is_err());
        assert!(gamma_quantile(0.0, 2.0).is_err());
        assert!(gamma_quantile(0.5, 0.0).is_err());
    }

    #[test]
    fn gamma_quantile_values() {
        assert_abs_diff_eq!(gamma_quantile(0.05, 5.0).unwrap(), 1.970, epsilon = 5e-4);
        assert_abs_diff_eq!(gamma_quantile(0.95, 6.0).unwrap(), 10.513, epsilon = 5e-4);
        for p in [0.01, 0.2, 0.5, 0.9, 0.999] {
            assert_abs_diff_eq!(gamma_quantile(p, 1.0).unwrap(), -(1.0 - p).ln(), epsilon = 1e-10);
        }
        for shape in [0.3, 1.0, 2.0, 6.0, 40.0, 300.0] {
            for p in [1e-8, 0.001, 0.05, 0.5, 0.95, 0.999999] {
                let q = gamma_quantile(p, shape).unwrap();
                assert_abs_diff_eq!(gamma_cdf(q, shape).unwrap(), p, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn poisson_pmf_values() {
        assert_abs_diff_eq!(poisson_pmf(0, 2.3).unwrap(), (-2.3f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(poisson_pmf(5, 5.0).unwrap(), 0.175, epsilon = 5e-4);
        assert_abs_diff_eq!(poisson_pmf(5, 1.0).unwrap(), (-1.0f64).exp() / 120.0, epsilon = 1e-15);
        assert_abs_diff_eq!(poisson_pmf(5, 1.0).unwrap(), 0.003066, epsilon = 1e-6);
        assert!(poisson_pmf(1, 0.0).is_err());
        let total: f64 = (0..200).map(|k| poisson_pmf(k, 7.5).unwrap()).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-13);
    }

    #[test]
    fn poisson_gamma_duality() {
        for x in 0..=20u64 {
            for i in 1..=40 {
                let theta = 0.25 * i as f64;
                let direct: f64 = (0..=x).map(|k| poisson_pmf(k, theta).unwrap()).sum();
                let dual = 1.0 - gamma_cdf(theta, x as f64 + 1.0).unwrap();
                assert!((direct - dual).abs() <= 1e-10, "x={x} θ={theta}: {direct} vs {dual}");
            }
        }
    }

    #[test]
    fn chi_density_integrates_to_one() {
        let spec = QuadratureSpec::default();
        for df in [1.0, 2.0, 5.0, 30.0] {
            let total = integrate(|c| chi_pdf(c, df), 0.0, f64::INFINITY, &spec).unwrap();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn central_t_matches_reference() {
        use statrs::distribution::{ContinuousCDF, StudentsT};
        let spec = QuadratureSpec::cdf();
        for df in [1u32, 3, 9, 25] {
            let t = StudentsT::new(0.0, 1.0, df as f64).unwrap();
            assert_abs_diff_eq!(noncentral_t_cdf(0.0, df, 0.0, &spec).unwrap(), 0.5, epsilon = 1e-10);
            for z in [-4.0, -1.5, -0.2, 0.7, 2.0, 6.0] {
                let got = noncentral_t_cdf(z, df, 0.0, &spec).unwrap();
                assert_abs_diff_eq!(got, t.cdf(z), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn noncentral_t_monotone() {
        let spec = QuadratureSpec::cdf();
        let mut prev = 1.0;
        for i in -30..=30 {
            let ncp = i as f64 * 0.2;
            let v = noncentral_t_cdf(1.3, 9, ncp, &spec).unwrap();
            assert!(v < prev, "not decreasing in ncp at {ncp}");
            prev = v;
        }
        let mut prev = 0.0;
        for i in -30..=30 {
            let z = i as f64 * 0.3;
            let v = noncentral_t_cdf(z, 4, 1.0, &spec).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }
}
