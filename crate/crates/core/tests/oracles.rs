//! Library values against independent closed forms, direct sums and simulation.

use approx::assert_abs_diff_eq;
use rayon::prelude::*;

use imodels::association::{Assertion, Association, ScalarModel};
use imodels::belief::{
    belief_exact, belief_mc, decide, matched_one_sided_prs, plausibility_point, relative_efficiency,
};
use imodels::numeric::special::{noncentral_t_cdf, norm_cdf};
use imodels::numeric::{ks_critical_1pct, ks_distance, QuadratureSpec, RandomStream};
use imodels::prs::{default_prs, h_nested_prs};
use imodels::score_balance::{build_balanced_family, two_sided_belief_at, ExponentialScore, DEFAULT_TOL};

/// Parallel Monte Carlo proportion with `chunks * per_chunk` draws, one substream per chunk.
fn mc_proportion(
    seed: u64,
    chunks: u64,
    per_chunk: usize,
    hit: impl Fn(&mut RandomStream) -> bool + Sync,
) -> (f64, f64) {
    let stream = RandomStream::new(seed, 0);
    let hits: usize = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut s = stream.substream(c);
            (0..per_chunk).filter(|_| hit(&mut s)).count()
        })
        .sum();
    let n = (chunks as usize * per_chunk) as f64;
    let p = hits as f64 / n;
    (p, (p * (1.0 - p) / n).sqrt())
}

#[test]
fn noncentral_t_against_simulation() {
    let v = noncentral_t_cdf(2.0, 9, 1.0, &QuadratureSpec::cdf()).unwrap();
    let (p, se) = mc_proportion(101, 100, 100_000, |s| {
        let z = s.standard_normal();
        let w = s.chi_squared(9.0);
        (z + 1.0) / (w / 9.0).sqrt() <= 2.0
    });
    assert!((v - p).abs() <= 3.0 * se, "quadrature {v}, simulation {p} +- {se}");
}

fn central_t_by_simpson(z: f64, df: f64) -> f64 {
    let ln_c = statrs::function::gamma::ln_gamma((df + 1.0) / 2.0)
        - statrs::function::gamma::ln_gamma(df / 2.0)
        - 0.5 * (df * std::f64::consts::PI).ln();
    let f = |t: f64| (ln_c - (df + 1.0) / 2.0 * (1.0 + t * t / df).ln()).exp();
    let n = 20_000;
    let h = z / n as f64;
    let mut sum = f(0.0) + f(z);
    for i in 1..n {
        sum += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    0.5 + sum * h / 3.0
}

#[test]
fn zero_noncentrality_is_central_t() {
    for (z, df) in [(0.5, 3u32), (1.7, 9), (-2.2, 20), (3.0, 1)] {
        let v = noncentral_t_cdf(z, df, 0.0, &QuadratureSpec::cdf()).unwrap();
        assert_abs_diff_eq!(v, central_t_by_simpson(z, df as f64), epsilon = 1e-8);
    }
}

#[test]
fn simulated_observations_have_model_means() {
    let n = 100_000;
    for (model, theta, sd) in [
        (ScalarModel::Gaussian, 0.0, 1.0),
        (ScalarModel::Poisson, 5.0, 5f64.sqrt()),
        (ScalarModel::Exponential, 1.0, 1.0),
    ] {
        let assoc = Association::new(model);
        let mut s = RandomStream::new(3, model as u64);
        let mean = (0..n).map(|_| assoc.simulate(theta, &mut s)).sum::<f64>() / n as f64;
        assert!((mean - theta).abs() <= 3.0 * sd / (n as f64).sqrt(), "{model}: {mean}");
    }
}

#[test]
fn focal_sets_at_reference_points() {
    let g = Association::new(ScalarModel::Gaussian);
    let (lo, hi) = g.focal_interval(5.0, 0.95).unwrap();
    assert_abs_diff_eq!(lo, 5.0 - 1.6448536269514722, epsilon = 1e-9);
    assert_eq!(lo, hi);
    let p = Association::new(ScalarModel::Poisson);
    let (lo, hi) = p.focal_interval(5.0, 0.5).unwrap();
    assert_abs_diff_eq!(lo, 4.670909, epsilon = 1e-5);
    assert_abs_diff_eq!(hi, 5.670161, epsilon = 1e-5);
    let e = Association::new(ScalarModel::Exponential);
    assert_abs_diff_eq!(e.focal_interval(5.0, 0.5).unwrap().0, 5.0 / 2f64.ln(), epsilon = 1e-12);
    assert_abs_diff_eq!(
        e.focal_interval(5.0, 1.0 - (-2f64).exp()).unwrap().1,
        2.5,
        epsilon = 1e-12
    );
}

/// `E[(X - 1) 1(a < X - 1 < b)]` for `X ~ Exp(1)`.
fn exp_partial_moment(a: f64, b: f64) -> f64 {
    let (xa, xb) = (1.0 + a, 1.0 + b);
    xa * (-xa).exp() - xb * (-xb).exp()
}

#[test]
fn exponential_balance_by_closed_form_and_simulation() {
    let fam = build_balanced_family(&ExponentialScore, 1.0, DEFAULT_TOL).unwrap();
    for (k, &t) in fam.abs_t.iter().enumerate() {
        assert!(exp_partial_moment(fam.xi_minus_pos[k], t).abs() < 1e-9);
        if let Some(xp) = fam.xi_plus_neg[k] {
            assert!(exp_partial_moment(-t, xp).abs() < 1e-9);
        }
    }
    let k = fam.abs_t.len() / 2;
    let (lo, hi) = (fam.xi_minus_pos[k], fam.abs_t[k]);
    let stream = RandomStream::new(17, 0);
    let vals: Vec<f64> = (0..100u64)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut s = stream.substream(c);
            (0..10_000).map(move |_| {
                let t = s.exponential() - 1.0;
                if lo < t && t < hi {
                    t
                } else {
                    0.0
                }
            })
        })
        .collect();
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!(mean.abs() <= 3.0 * sd / n.sqrt(), "mean {mean}, se {}", sd / n.sqrt());
}

#[test]
fn exponential_two_sided_belief_at_five() {
    // ξ- solves (1 + ξ) e^{-(1 + ξ)} = 5 e^{-5} on (-1, 0).
    let target = 5.0 * (-5f64).exp();
    let (mut a, mut b) = (-1.0f64, 0.0f64);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (1.0 + m) * (-(1.0 + m)).exp() < target {
            a = m
        } else {
            b = m
        }
    }
    let xi = 0.5 * (a + b);
    let closed = (-(1.0 + xi)).exp() - (-5f64).exp();
    let v = two_sided_belief_at(&ExponentialScore, 1.0, 5.0, DEFAULT_TOL).unwrap();
    assert_abs_diff_eq!(v, closed, epsilon = 1e-9);
    let (p, se) = mc_proportion(23, 100, 10_000, |s| {
        let t = s.exponential() - 1.0;
        xi < t && t < 4.0
    });
    assert!((v - p).abs() <= 3.0 * se, "{v} vs {p} +- {se}");
}

#[test]
fn nested_sets_from_arbitrary_h_are_uniform() {
    let prs = h_nested_prs(|u| (u - 0.3).powi(2) + 0.1 * (20.0 * u).sin());
    let stream = RandomStream::new(29, 0);
    let mut q: Vec<f64> = (0..100_000u64)
        .map(|i| prs.miss_prob(stream.substream(i).uniform()))
        .collect();
    let d = ks_distance(&mut q, |v| v.clamp(0.0, 1.0));
    assert!(d < ks_critical_1pct(100_000), "ks {d}");
}

#[test]
fn exponential_default_plausibility_and_simulated_belief() {
    let assoc = Association::new(ScalarModel::Exponential);
    let prs = default_prs();
    for theta in [0.5f64, 2.0, 7.2, 30.0] {
        let closed = 1.0 - (2.0 * (1.0 - (-5.0 / theta).exp()) - 1.0).abs();
        assert_abs_diff_eq!(
            plausibility_point(&assoc, &prs, 5.0, theta).unwrap(),
            closed,
            epsilon = 1e-12
        );
    }
    let stream = RandomStream::new(31, 0);
    for a in [
        Assertion::Interval(2.0, 9.0),
        Assertion::LeftRay(4.0),
        Assertion::RightRay(3.0),
    ] {
        let exact = belief_exact(&assoc, &prs, 5.0, &a).unwrap();
        let mc = belief_mc(&assoc, &prs, 5.0, &a, 200_000, &stream).unwrap();
        assert!(
            (exact.belief - mc.belief).abs() <= 3.0 * mc.mc_se_belief + 1e-12,
            "{a:?}"
        );
        assert!(
            (exact.plausibility - mc.plausibility).abs() <= 3.0 * mc.mc_se_plausibility + 1e-12,
            "{a:?}"
        );
    }
}

fn poisson_lower_tail(x: u64, theta: f64) -> f64 {
    let mut term = (-theta).exp();
    let mut sum = term;
    for k in 1..=x {
        term *= theta / k as f64;
        sum += term;
    }
    sum
}

#[test]
fn one_sided_poisson_test_matches_exact_p_value() {
    let assoc = Association::new(ScalarModel::Poisson);
    let prs = matched_one_sided_prs(&assoc, &Assertion::LeftRay(1.0)).unwrap();
    for (x, theta0) in [(0u64, 1.0), (2, 6.3), (5, 5.0), (7, 14.0), (12, 9.0)] {
        let h0 = Assertion::RightRay(theta0);
        let pl = belief_exact(&assoc, &prs, x as f64, &h0).unwrap().plausibility;
        let p = poisson_lower_tail(x, theta0);
        assert_abs_diff_eq!(pl, p, epsilon = 1e-12);
        assert_eq!(decide(pl, 0.05), decide(p, 0.05));
    }
}

#[test]
fn gaussian_default_belief_below_fiducial() {
    let assoc = Association::new(ScalarModel::Gaussian);
    for (x, theta0) in [(0.0, 1.0), (2.0, 2.5), (-1.0, 3.0)] {
        let a = Assertion::LeftRay(theta0);
        let bel = belief_exact(&assoc, &default_prs(), x, &a).unwrap().belief;
        let fiducial = norm_cdf(theta0 - x);
        assert!(bel > 0.0 && bel <= fiducial);
        assert_abs_diff_eq!(
            relative_efficiency(&assoc, &default_prs(), x, &a).unwrap(),
            bel / fiducial,
            epsilon = 1e-12
        );
    }
}

#[test]
fn null_partial_sums_are_beta_distributed() {
    use imodels::applications::RatesSample;
    use statrs::distribution::{Beta, ContinuousCDF};
    let n = 10;
    let reps = 20_000;
    let stream = RandomStream::new(37, 0);
    let draws: Vec<Vec<f64>> = (0..reps as u64)
        .map(|i| {
            let s = RatesSample::simulate(n, 0, 1.0, &mut stream.substream(i));
            let total: f64 = s.x.iter().sum();
            s.x.iter()
                .scan(0.0, |acc, v| {
                    *acc += v / total;
                    Some(*acc)
                })
                .collect()
        })
        .collect();
    for i in [1usize, 4, 9] {
        let beta = Beta::new(i as f64, (n - i) as f64).unwrap();
        let mut t: Vec<f64> = draws.iter().map(|d| d[i - 1]).collect();
        let d = ks_distance(&mut t, |v| beta.cdf(v));
        assert!(d < ks_critical_1pct(reps), "t_{i}: ks {d}");
    }
}

#[test]
fn rates_reference_matches_direct_simulation() {
    use imodels::applications::{rates_plausibility, RatesReference, RatesSample};
    let sample = RatesSample::new(vec![0.4, 1.9, 0.7, 3.3, 0.2, 1.1, 2.6, 0.9]).unwrap();
    let direct = rates_plausibility(&sample, 100_000, &RandomStream::new(41, 0)).unwrap();
    let reference = RatesReference::new(8, 100_000, &RandomStream::new(43, 0)).unwrap();
    let pl = reference.plausibility(&sample).unwrap();
    let se = (2.0 * direct.plausibility * (1.0 - direct.plausibility) / 100_000.0).sqrt();
    assert!(
        (pl - direct.plausibility).abs() <= 3.0 * se,
        "{pl} vs {}",
        direct.plausibility
    );
}
