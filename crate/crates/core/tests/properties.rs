use proptest::prelude::*;

use imodels::applications::{psi_plausibility, rates_h, NormalSample};
use imodels::association::{Assertion, Association, EndpointTrend, ScalarModel, UInterval, USet};
use imodels::belief::{auto_bracket, belief_exact, plausibility_point, plausibility_region, GridSpec};
use imodels::prs::{default_prs, one_sided_prs, PredictiveRandomSet, Side};

fn model_strategy() -> impl Strategy<Value = ScalarModel> {
    prop_oneof![
        Just(ScalarModel::Gaussian),
        Just(ScalarModel::Poisson),
        Just(ScalarModel::Exponential)
    ]
}

fn prs_of(k: u8) -> PredictiveRandomSet {
    match k % 3 {
        0 => default_prs(),
        1 => one_sided_prs(Side::Lower),
        _ => one_sided_prs(Side::Upper),
    }
}

/// A valid observation for the model from a uniform draw.
fn observation(model: ScalarModel, r: f64) -> f64 {
    match model {
        ScalarModel::Gaussian => 20.0 * r - 10.0,
        ScalarModel::Poisson => (r * 25.0).floor(),
        ScalarModel::Exponential => 0.05 + 20.0 * r,
    }
}

/// A parameter value from a uniform draw.
fn parameter(model: ScalarModel, r: f64) -> f64 {
    match model {
        ScalarModel::Gaussian => 30.0 * r - 15.0,
        _ => 0.01 + 40.0 * r,
    }
}

fn assertion(kind: u8, a: f64, b: f64) -> Assertion {
    let (lo, hi) = (a.min(b), a.max(b) + 1e-3);
    match kind % 6 {
        0 => Assertion::Point(a),
        1 => Assertion::ComplementOfPoint(a),
        2 => Assertion::LeftRay(a),
        3 => Assertion::RightRay(a),
        4 => Assertion::Interval(lo, hi),
        _ => Assertion::Outside(lo, hi),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn belief_bounds_and_complement_identity(
        model in model_strategy(), k in 0u8..3, kind in 0u8..6, rx in 0.0..1.0f64, ra in 0.0..1.0f64, rb in 0.0..1.0f64,
    ) {
        let assoc = Association::new(model);
        let prs = prs_of(k);
        let x = observation(model, rx);
        let a = assertion(kind, parameter(model, ra), parameter(model, rb));
        let r = belief_exact(&assoc, &prs, x, &a).unwrap();
        let rc = belief_exact(&assoc, &prs, x, &a.complement()).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.belief) && (0.0..=1.0).contains(&r.plausibility));
        prop_assert!(r.belief <= r.plausibility + 1e-12);
        prop_assert!(r.belief + rc.belief <= 1.0 + 1e-12);
        prop_assert!((r.plausibility - (1.0 - rc.belief)).abs() <= 1e-12);
    }

    #[test]
    fn belief_is_monotone_in_the_assertion(
        model in model_strategy(), k in 0u8..3, rx in 0.0..1.0f64, ra in 0.0..1.0f64, rb in 0.0..1.0f64, grow in 0.0..5.0f64,
    ) {
        let assoc = Association::new(model);
        let prs = prs_of(k);
        let x = observation(model, rx);
        let (a, b) = (parameter(model, ra), parameter(model, rb));
        let (lo, hi) = (a.min(b), a.max(b) + 1e-3);
        let inner = Assertion::Interval(lo, hi);
        let outer = Assertion::Interval(if model == ScalarModel::Gaussian { lo - grow } else { lo / (1.0 + grow) }, hi + grow);
        let (ri, ro) = (belief_exact(&assoc, &prs, x, &inner).unwrap(), belief_exact(&assoc, &prs, x, &outer).unwrap());
        prop_assert!(ri.belief <= ro.belief + 1e-12);
        prop_assert!(ri.plausibility <= ro.plausibility + 1e-12);
    }

    #[test]
    fn focal_endpoints_follow_their_trend(model in model_strategy(), rx in 0.0..1.0f64, u1 in 0.001..0.999f64, u2 in 0.001..0.999f64) {
        let assoc = Association::new(model);
        let x = observation(model, rx);
        let (ua, ub) = (u1.min(u2), u1.max(u2));
        let (la, ha) = assoc.focal_interval(x, ua).unwrap();
        let (lb, hb) = assoc.focal_interval(x, ub).unwrap();
        prop_assert!(la <= ha && lb <= hb);
        match assoc.endpoint_trend() {
            EndpointTrend::Increasing => prop_assert!(la <= lb && ha <= hb),
            EndpointTrend::Decreasing => prop_assert!(la >= lb && ha >= hb),
        }
    }

    #[test]
    fn containment_probability_is_monotone(k in 0u8..3, a in 0.0..1.0f64, b in 0.0..1.0f64, widen in 0.0..0.5f64) {
        let prs = prs_of(k);
        let (lo, hi) = (a.min(b), a.max(b));
        let inner = USet::single(UInterval::new(lo, hi));
        let outer = USet::single(UInterval::new((lo - widen).max(0.0), (hi + widen).min(1.0)));
        let (pi, po) = (prs.prob_within(&inner), prs.prob_within(&outer));
        prop_assert!((0.0..=1.0).contains(&pi) && pi <= po + 1e-15);
    }

    #[test]
    fn region_agrees_with_pointwise_plausibility(
        model in model_strategy(), k in 0u8..3, rx in 0.0..1.0f64, alpha in 0.02..0.5f64, probes in prop::collection::vec(0.0..1.0f64, 8),
    ) {
        let assoc = Association::new(model);
        let prs = prs_of(k);
        let x = observation(model, rx);
        let region = plausibility_region(&assoc, &prs, x, alpha, &GridSpec::default()).unwrap();
        let (lo, hi) = region.hull().unwrap();
        for r in probes {
            let theta = match model {
                ScalarModel::Gaussian => lo - 1.0 + (hi - lo + 2.0) * r,
                _ => (lo * 0.5).max(1e-6) + (1.5 * hi - 0.5 * lo) * r,
            };
            let (b_lo, b_hi, _) = auto_bracket(model, x);
            if theta >= b_hi || (theta <= b_lo && model == ScalarModel::Gaussian) {
                continue;
            }
            if region.intervals.iter().any(|&(a, b)| (theta - a).abs() < 1e-4 || (theta - b).abs() < 1e-4) {
                continue;
            }
            let pl = plausibility_point(&assoc, &prs, x, theta).unwrap();
            prop_assert_eq!(region.contains(theta), pl > alpha, "theta {} pl {} region {:?}", theta, pl, region.intervals);
        }
    }

    #[test]
    fn regions_shrink_as_alpha_grows(model in model_strategy(), rx in 0.0..1.0f64, a1 in 0.02..0.5f64, gap in 0.01..0.4f64) {
        let assoc = Association::new(model);
        let prs = default_prs();
        let x = observation(model, rx);
        let wide = plausibility_region(&assoc, &prs, x, a1, &GridSpec::default()).unwrap();
        let narrow = plausibility_region(&assoc, &prs, x, a1 + gap, &GridSpec::default()).unwrap();
        let ((wl, wh), (nl, nh)) = (wide.hull().unwrap(), narrow.hull().unwrap());
        prop_assert!(wl <= nl + 1e-6 && nh <= wh + 1e-6);
    }

    #[test]
    fn psi_plausibility_is_bounded(n in 2u32..40, xbar in -5.0..5.0f64, s in 0.1..5.0f64, psi in -4.0..4.0f64) {
        let sample = NormalSample::new(n, xbar, s).unwrap();
        let pl = psi_plausibility(&sample, psi).unwrap();
        prop_assert!((0.0..=1.0).contains(&pl));
    }

    #[test]
    fn rates_statistic_ignores_common_scale(xs in prop::collection::vec(0.01..10.0f64, 2..30), c in 0.01..100.0f64) {
        let total: f64 = xs.iter().sum();
        let v: Vec<f64> = xs.iter().map(|x| x / total).collect();
        let scaled: Vec<f64> = xs.iter().map(|x| x * c).collect();
        let h1 = rates_h(&v).unwrap();
        let h2 = rates_h(&scaled).unwrap();
        prop_assert!((h1 - h2).abs() <= 1e-9 * h1.abs().max(1.0));
    }
}
