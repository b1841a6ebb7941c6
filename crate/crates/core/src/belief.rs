//! Belief and plausibility functions, plausibility regions and IM tests.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::association::{Assertion, Association, EndpointTrend, ScalarModel};
use crate::error::{domain, ImError, Result};
use crate::numeric::special::poisson_pmf;
use crate::numeric::RandomStream;
use crate::prs::{one_sided_prs, singleton_prs, PredictiveRandomSet, RealizedSet, Side};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeliefResult {
    pub belief: f64,
    pub plausibility: f64,
    pub mc_se_belief: f64,
    pub mc_se_plausibility: f64,
    /// Zero when the values are exact.
    pub replicates: usize,
}

impl BeliefResult {
    fn exact(belief: f64, plausibility: f64) -> Self {
        Self {
            belief: belief.clamp(0.0, 1.0),
            plausibility: plausibility.clamp(0.0, 1.0),
            mc_se_belief: 0.0,
            mc_se_plausibility: 0.0,
            replicates: 0,
        }
    }
}

/// Belief and plausibility of `A`, exact when possible and by simulation otherwise.
///
/// Only predicate assertions need simulation; `n_rep` and `stream` are ignored
/// for the rest.
pub fn belief(
    assoc: &Association,
    prs: &PredictiveRandomSet,
    x: f64,
    assertion: &Assertion,
    n_rep: usize,
    stream: &RandomStream,
) -> Result<BeliefResult> {
    match assertion {
        Assertion::Predicate(_) => belief_mc(assoc, prs, x, assertion, n_rep, stream),
        _ => belief_exact(assoc, prs, x, assertion),
    }
}

/// Exact belief via the auxiliary-space preimages of `A` and `A^c`.
pub fn belief_exact(
    assoc: &Association,
    prs: &PredictiveRandomSet,
    x: f64,
    assertion: &Assertion,
) -> Result<BeliefResult> {
    assoc.check_observation(x)?;
    let within = assoc.u_within(x, assertion)?;
    let within_c = assoc.u_within(x, &assertion.complement())?;
    let bel = prs.prob_within(&within);
    let bel_c = prs.prob_within(&within_c);
    Ok(BeliefResult::exact(bel, 1.0 - bel_c))
}

/// Monte Carlo belief from `n_rep` realized sets, one substream per replicate.
///
/// Both values come from the same draws, so `pl(A) = 1 - bel(A^c)` holds exactly.
pub fn belief_mc(
    assoc: &Association,
    prs: &PredictiveRandomSet,
    x: f64,
    assertion: &Assertion,
    n_rep: usize,
    stream: &RandomStream,
) -> Result<BeliefResult> {
    assoc.check_observation(x)?;
    if n_rep == 0 {
        return Err(domain("Monte Carlo belief needs at least one replicate"));
    }
    let complement = assertion.complement();
    let preimages = match assertion {
        Assertion::Predicate(_) => None,
        _ => Some((assoc.u_within(x, assertion)?, assoc.u_within(x, &complement)?)),
    };
    let (hits, hits_c) = (0..n_rep)
        .into_par_iter()
        .map(|i| -> Result<(usize, usize)> {
            let set = prs.draw(&mut stream.substream(i as u64));
            let (inside, outside) = match &set {
                RealizedSet::Interval { lo, hi } => {
                    let (l, h) = assoc.focal_hull(x, *lo, *hi)?;
                    (assertion.hull_within(l, h), complement.hull_within(l, h))
                }
                RealizedSet::Sublevel { .. } => {
                    let (w, wc) = preimages.as_ref().ok_or_else(|| {
                        ImError::Unsupported("predicate assertions need interval-valued random sets".into())
                    })?;
                    (set.within(w), set.within(wc))
                }
            };
            Ok((inside as usize, outside as usize))
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    let n = n_rep as f64;
    let bel = hits as f64 / n;
    let bel_c = hits_c as f64 / n;
    let se = |p: f64| (p * (1.0 - p) / n).sqrt();
    Ok(BeliefResult {
        belief: bel,
        plausibility: 1.0 - bel_c,
        mc_se_belief: se(bel),
        mc_se_plausibility: se(bel_c),
        replicates: n_rep,
    })
}

/// `pl_x(θ) = pl_x({θ})`.
pub fn plausibility_point(assoc: &Association, prs: &PredictiveRandomSet, x: f64, theta: f64) -> Result<f64> {
    assoc.check_theta(theta)?;
    Ok(belief_exact(assoc, prs, x, &Assertion::Point(theta))?.plausibility)
}

/// Search settings for plausibility regions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub points: usize,
    /// Search bracket; chosen from the model when `None`.
    pub bracket: Option<(f64, f64)>,
    /// Absolute bisection tolerance for the endpoints.
    pub tol: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            points: 512,
            bracket: None,
            tol: 1e-6,
        }
    }
}

/// `{θ : pl_x(θ) > α}` as a union of disjoint open intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlausibilityRegion {
    pub alpha: f64,
    pub intervals: Vec<(f64, f64)>,
    /// Set when the region reaches a search-bracket end that is not a parameter-space boundary.
    pub truncated: bool,
}

impl PlausibilityRegion {
    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, theta: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| a < theta && theta < b)
    }

    /// Smallest interval covering the region.
    pub fn hull(&self) -> Option<(f64, f64)> {
        Some((self.intervals.first()?.0, self.intervals.last()?.1))
    }

    pub fn total_length(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }
}

/// Default search bracket and spacing for a scalar model.
pub fn auto_bracket(model: ScalarModel, x: f64) -> (f64, f64, bool) {
    match model {
        ScalarModel::Gaussian => (x - 40.0, x + 40.0, false),
        ScalarModel::Poisson => (1e-12, x + 60.0 + 20.0 * (x + 1.0).sqrt(), true),
        ScalarModel::Exponential => (x * 1e-3, x * 1e9, true),
    }
}

/// Region `{θ ∈ (lo, hi) : pl(θ) > α}` for an arbitrary curve, by grid bracketing and bisection.
///
/// Interval ends that reach the bracket are reported at the bracket and flagged.
pub fn region_from_curve(
    pl: impl Fn(f64) -> Result<f64> + Sync,
    alpha: f64,
    (lo, hi): (f64, f64),
    points: usize,
    log_scale: bool,
    tol: f64,
) -> Result<PlausibilityRegion> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(lo < hi) || points < 2 || (log_scale && lo <= 0.0) {
        return Err(domain(format!("bad search bracket ({lo}, {hi}) with {points} points")));
    }
    let grid: Vec<f64> = (0..points)
        .map(|i| {
            let s = i as f64 / (points - 1) as f64;
            if i == 0 {
                lo
            } else if i == points - 1 {
                hi
            } else if log_scale {
                (lo.ln() + s * (hi.ln() - lo.ln())).exp()
            } else {
                lo + s * (hi - lo)
            }
        })
        .collect();
    let inside: Vec<bool> = grid
        .par_iter()
        .map(|&t| pl(t).map(|p| p > alpha))
        .collect::<Result<_>>()?;

    // Boundary between an inside point `a` and an outside point `b`.
    let refine = |mut a: f64, mut b: f64| -> Result<f64> {
        for _ in 0..200 {
            if (b - a).abs() <= tol {
                break;
            }
            let mid = if log_scale && a > 0.0 && b > 0.0 && (b / a).max(a / b) > 4.0 {
                (a * b).sqrt()
            } else {
                0.5 * (a + b)
            };
            if pl(mid)? > alpha {
                a = mid;
            } else {
                b = mid;
            }
        }
        Ok(0.5 * (a + b))
    };

    let mut intervals = Vec::new();
    let mut truncated = false;
    let mut i = 0;
    while i < points {
        if !inside[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < points && inside[i + 1] {
            i += 1;
        }
        let end = i;
        let left = if start == 0 {
            truncated = true;
            grid[0]
        } else {
            refine(grid[start], grid[start - 1])?
        };
        let right = if end == points - 1 {
            truncated = true;
            grid[points - 1]
        } else {
            refine(grid[end], grid[end + 1])?
        };
        intervals.push((left, right));
        i += 1;
    }
    Ok(PlausibilityRegion {
        alpha,
        intervals,
        truncated,
    })
}

/// `Π_x(α) = {θ : pl_x(θ) > α}`.
pub fn plausibility_region(
    assoc: &Association,
    prs: &PredictiveRandomSet,
    x: f64,
    alpha: f64,
    grid: &GridSpec,
) -> Result<PlausibilityRegion> {
    assoc.check_observation(x)?;
    let (auto_lo, auto_hi, log_scale) = auto_bracket(assoc.model(), x);
    let bracket = grid.bracket.unwrap_or((auto_lo, auto_hi));
    let mut region = region_from_curve(
        |t| plausibility_point(assoc, prs, x, t),
        alpha,
        bracket,
        grid.points,
        log_scale,
        grid.tol,
    )?;
    // With the automatic bracket a region touching its lower end runs to the
    // parameter-space boundary at zero.
    if grid.bracket.is_none() && log_scale {
        if let Some(first) = region.intervals.first_mut() {
            if first.0 == bracket.0 {
                first.0 = 0.0;
                region.truncated = region.intervals.last().is_some_and(|l| l.1 == bracket.1);
            }
        }
    }
    Ok(region)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Reject,
    Retain,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub decision: Decision,
    pub plausibility: f64,
}

/// Rejects `H0: θ ∈ A` iff `pl_x(A) <= α`.
pub fn im_test(
    assoc: &Association,
    prs: &PredictiveRandomSet,
    x: f64,
    assertion: &Assertion,
    alpha: f64,
) -> Result<TestOutcome> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let plausibility = belief_exact(assoc, prs, x, assertion)?.plausibility;
    Ok(TestOutcome {
        decision: decide(plausibility, alpha),
        plausibility,
    })
}

pub fn decide(plausibility: f64, alpha: f64) -> Decision {
    if plausibility <= alpha {
        Decision::Reject
    } else {
        Decision::Retain
    }
}

/// `bel_x(A; S) / bel_x(A; {U})`.
pub fn relative_efficiency(
    assoc: &Association,
    prs: &PredictiveRandomSet,
    x: f64,
    assertion: &Assertion,
) -> Result<f64> {
    let fiducial = belief_exact(assoc, &singleton_prs(), x, assertion)?.belief;
    if fiducial <= 0.0 {
        return Err(ImError::ZeroFiducialBelief);
    }
    Ok(belief_exact(assoc, prs, x, assertion)?.belief / fiducial)
}

/// The one-sided set whose realizations grow toward the auxiliary values supporting a one-sided `A`.
pub fn matched_one_sided_prs(assoc: &Association, assertion: &Assertion) -> Result<PredictiveRandomSet> {
    let toward_upper_u =
        match (assertion, assoc.endpoint_trend()) {
            (Assertion::LeftRay(_), EndpointTrend::Decreasing)
            | (Assertion::RightRay(_), EndpointTrend::Increasing) => true,
            (Assertion::LeftRay(_), EndpointTrend::Increasing)
            | (Assertion::RightRay(_), EndpointTrend::Decreasing) => false,
            _ => {
                return Err(ImError::Unsupported(
                    "matched sets exist for one-sided assertions only".into(),
                ))
            }
        };
    Ok(one_sided_prs(if toward_upper_u { Side::Upper } else { Side::Lower }))
}

/// Dempster–Shafer plausibility of `{θ}` for a Poisson count: the pmf `e^{-θ} θ^x / x!`.
pub fn dempster_r(x: u64, theta: f64) -> Result<f64> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(domain(format!("θ must be positive, got {theta}")));
    }
    poisson_pmf(x, theta)
}
