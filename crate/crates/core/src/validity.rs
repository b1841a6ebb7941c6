//! Simulation checks of calibration: random-set validity, IM validity and
//! plausibility-region coverage.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::applications::{psi_interval, NormalSample};
use crate::association::{Assertion, Association};
use crate::belief::{belief_exact, plausibility_region, GridSpec};
use crate::error::{domain, Result};
use crate::numeric::{ks_critical_1pct, ks_distance, RandomStream};
use crate::prs::PredictiveRandomSet;
use crate::score_balance::{two_sided_belief_at, ScoreModel, DEFAULT_TOL};

pub const DEFAULT_ALPHAS: [f64; 5] = [0.01, 0.05, 0.1, 0.25, 0.5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationTarget {
    PrsValidity,
    ImValidity,
    Coverage,
}

/// Which side of the validity definition is checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidityForm {
    /// `P{bel_X(A) >= 1 - α} <= α` for `θ ∉ A`.
    Belief,
    /// `P{pl_X(A) <= α} <= α` for `θ ∈ A`.
    Plausibility,
}

/// Exceedance frequencies per level, each compared with `α + 3·se`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub target: CalibrationTarget,
    pub alpha_grid: Vec<f64>,
    /// Largest exceedance frequency over the θ grid, per level.
    pub empirical: Vec<f64>,
    pub mc_se: Vec<f64>,
    pub pass: Vec<bool>,
    /// θ attaining the largest exceedance, per level.
    pub worst_theta: Vec<Option<f64>>,
    pub theta_grid: Vec<f64>,
    pub n_rep: usize,
    pub form: Option<ValidityForm>,
    /// Distance of the calibrated quantity from `Unif(0, 1)`, where that is meaningful.
    pub ks_distance: Option<f64>,
    pub ks_critical: Option<f64>,
}

impl CalibrationReport {
    pub fn all_pass(&self) -> bool {
        self.pass.iter().all(|p| *p)
    }

    /// Whether the KS statistic is below its 1% critical value.
    pub fn efficient(&self) -> Option<bool> {
        Some(self.ks_distance? < self.ks_critical?)
    }

    fn push(&mut self, alpha: f64, empirical: f64, n: usize, theta: Option<f64>) {
        let se = (empirical * (1.0 - empirical) / n as f64).sqrt();
        self.alpha_grid.push(alpha);
        self.empirical.push(empirical);
        self.mc_se.push(se);
        self.pass.push(empirical <= alpha + 3.0 * se);
        self.worst_theta.push(theta);
    }

    fn empty(target: CalibrationTarget, n_rep: usize) -> Self {
        Self {
            target,
            alpha_grid: Vec::new(),
            empirical: Vec::new(),
            mc_se: Vec::new(),
            pass: Vec::new(),
            worst_theta: Vec::new(),
            theta_grid: Vec::new(),
            n_rep,
            form: None,
            ks_distance: None,
            ks_critical: None,
        }
    }
}

fn check_alphas(alpha_grid: &[f64]) -> Result<()> {
    if alpha_grid.is_empty() || alpha_grid.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
        return Err(domain("alpha grid must be non-empty with levels in (0, 1)"));
    }
    Ok(())
}

/// Estimates `P{Q_S(U) >= 1 - α}` and the KS distance of `Q_S(U)` from uniform.
pub fn check_prs_validity(
    prs: &PredictiveRandomSet,
    n_rep: usize,
    alpha_grid: &[f64],
    stream: &RandomStream,
) -> Result<CalibrationReport> {
    check_alphas(alpha_grid)?;
    if n_rep == 0 {
        return Err(domain("need at least one replicate"));
    }
    let mut q: Vec<f64> = (0..n_rep)
        .into_par_iter()
        .map(|i| prs.miss_prob(stream.substream(i as u64).uniform()))
        .collect();
    let mut report = CalibrationReport::empty(CalibrationTarget::PrsValidity, n_rep);
    for &alpha in alpha_grid {
        let hits = q.iter().filter(|&&v| v >= 1.0 - alpha).count();
        report.push(alpha, hits as f64 / n_rep as f64, n_rep, None);
    }
    report.ks_distance = Some(ks_distance(&mut q, |v| v.clamp(0.0, 1.0)));
    report.ks_critical = Some(ks_critical_1pct(n_rep));
    Ok(report)
}

/// Simulates `X ~ P_{X|θ}` over a θ grid and reports the worst exceedance per level.
///
/// Belief form: every θ must lie outside `A`. Plausibility form: inside.
#[allow(clippy::too_many_arguments)]
pub fn check_im_validity(
    assoc: &Association,
    prs: &PredictiveRandomSet,
    assertion: &Assertion,
    theta_grid: &[f64],
    alpha_grid: &[f64],
    n_rep: usize,
    form: ValidityForm,
    stream: &RandomStream,
) -> Result<CalibrationReport> {
    check_alphas(alpha_grid)?;
    if n_rep == 0 || theta_grid.is_empty() {
        return Err(domain("need replicates and a non-empty θ grid"));
    }
    for &theta in theta_grid {
        assoc.check_theta(theta)?;
        let inside = assertion.contains(theta);
        if inside != (form == ValidityForm::Plausibility) {
            return Err(domain(format!(
                "θ = {theta} is on the wrong side of the assertion for {form:?} validity"
            )));
        }
    }
    let mut report = CalibrationReport::empty(CalibrationTarget::ImValidity, n_rep);
    report.theta_grid = theta_grid.to_vec();
    report.form = Some(form);
    let mut worst = vec![(f64::NEG_INFINITY, None); alpha_grid.len()];
    for (k, &theta) in theta_grid.iter().enumerate() {
        let base = stream.substream(k as u64);
        let values: Vec<f64> = (0..n_rep)
            .into_par_iter()
            .map(|r| {
                let x = assoc.simulate(theta, &mut base.substream(r as u64));
                let b = belief_exact(assoc, prs, x, assertion)?;
                Ok(match form {
                    ValidityForm::Belief => b.belief,
                    ValidityForm::Plausibility => b.plausibility,
                })
            })
            .collect::<Result<_>>()?;
        for (j, &alpha) in alpha_grid.iter().enumerate() {
            let hits = match form {
                ValidityForm::Belief => values.iter().filter(|&&b| b >= 1.0 - alpha).count(),
                ValidityForm::Plausibility => values.iter().filter(|&&p| p <= alpha).count(),
            };
            let freq = hits as f64 / n_rep as f64;
            if freq > worst[j].0 {
                worst[j] = (freq, Some(theta));
            }
        }
    }
    for (j, &alpha) in alpha_grid.iter().enumerate() {
        report.push(alpha, worst[j].0, n_rep, worst[j].1);
    }
    Ok(report)
}

/// Validity of point assertions at the truth: `P_{X|θ}{pl_X(θ) <= α}` over a θ grid.
pub fn check_point_validity(
    assoc: &Association,
    prs: &PredictiveRandomSet,
    theta_grid: &[f64],
    alpha_grid: &[f64],
    n_rep: usize,
    stream: &RandomStream,
) -> Result<CalibrationReport> {
    let mut merged: Option<CalibrationReport> = None;
    for (k, &theta) in theta_grid.iter().enumerate() {
        let r = check_im_validity(
            assoc,
            prs,
            &Assertion::Point(theta),
            &[theta],
            alpha_grid,
            n_rep,
            ValidityForm::Plausibility,
            &stream.substream(k as u64),
        )?;
        merged = Some(match merged {
            None => r,
            Some(mut m) => {
                for j in 0..m.alpha_grid.len() {
                    if r.empirical[j] > m.empirical[j] {
                        m.empirical[j] = r.empirical[j];
                        m.mc_se[j] = r.mc_se[j];
                        m.worst_theta[j] = r.worst_theta[j];
                    }
                    m.pass[j] &= r.pass[j];
                }
                m.theta_grid.push(theta);
                m
            }
        });
    }
    merged.ok_or_else(|| domain("θ grid must be non-empty"))
}

/// Frequency with which `Π_X(α)` misses `θ_true`; passes when coverage is at least `1 - α - 3·se`.
pub fn check_coverage(
    assoc: &Association,
    prs: &PredictiveRandomSet,
    theta_true: f64,
    alpha: f64,
    n_rep: usize,
    stream: &RandomStream,
) -> Result<CalibrationReport> {
    check_alphas(&[alpha])?;
    assoc.check_theta(theta_true)?;
    if n_rep == 0 {
        return Err(domain("need at least one replicate"));
    }
    let grid = GridSpec::default();
    let misses: usize = (0..n_rep)
        .into_par_iter()
        .map(|r| {
            let x = assoc.simulate(theta_true, &mut stream.substream(r as u64));
            let region = plausibility_region(assoc, prs, x, alpha, &grid)?;
            Ok(!region.contains(theta_true) as usize)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    let mut report = CalibrationReport::empty(CalibrationTarget::Coverage, n_rep);
    report.theta_grid = vec![theta_true];
    report.push(alpha, misses as f64 / n_rep as f64, n_rep, Some(theta_true));
    Ok(report)
}

/// Coverage of the standardized-mean interval for normal samples of size `n`.
pub fn check_psi_coverage(
    n: u32,
    mu: f64,
    sigma: f64,
    alpha: f64,
    n_rep: usize,
    stream: &RandomStream,
) -> Result<CalibrationReport> {
    check_alphas(&[alpha])?;
    if n < 2 || !(sigma > 0.0) {
        return Err(domain("need n >= 2 and sigma > 0"));
    }
    let psi = mu / sigma;
    let misses: usize = (0..n_rep)
        .into_par_iter()
        .map(|r| {
            let mut s = stream.substream(r as u64);
            let data: Vec<f64> = (0..n).map(|_| mu + sigma * s.standard_normal()).collect();
            let (lo, hi) = psi_interval(&NormalSample::from_data(&data)?, alpha)?;
            Ok(!(lo < psi && psi < hi) as usize)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    let mut report = CalibrationReport::empty(CalibrationTarget::Coverage, n_rep);
    report.theta_grid = vec![psi];
    report.push(alpha, misses as f64 / n_rep as f64, n_rep, Some(psi));
    Ok(report)
}

/// Two-sided score-balanced belief at `θ0` under `X ~ P_{X|θ}`, checked for
/// validity of `{θ0}^c` and, at `θ = θ0`, for uniformity.
pub fn check_score_balanced<M: ScoreModel + ?Sized>(
    model: &M,
    theta0: f64,
    theta: f64,
    alpha_grid: &[f64],
    n_rep: usize,
    stream: &RandomStream,
) -> Result<CalibrationReport> {
    check_alphas(alpha_grid)?;
    let mut beliefs: Vec<f64> = (0..n_rep)
        .into_par_iter()
        .map(|r| {
            let x = model.simulate(theta, &mut stream.substream(r as u64));
            two_sided_belief_at(model, theta0, x, DEFAULT_TOL)
        })
        .collect::<Result<_>>()?;
    let mut report = CalibrationReport::empty(CalibrationTarget::ImValidity, n_rep);
    report.theta_grid = vec![theta];
    for &alpha in alpha_grid {
        let hits = if theta == theta0 {
            // θ0 ∉ {θ0}^c: belief must rarely be large.
            beliefs.iter().filter(|&&b| b >= 1.0 - alpha).count()
        } else {
            // Local ordering: belief must rarely be small away from θ0.
            beliefs.iter().filter(|&&b| b <= alpha).count()
        };
        report.push(alpha, hits as f64 / n_rep as f64, n_rep, Some(theta));
    }
    if theta == theta0 {
        report.form = Some(ValidityForm::Belief);
        report.ks_distance = Some(ks_distance(&mut beliefs, |v| v.clamp(0.0, 1.0)));
        report.ks_critical = Some(ks_critical_1pct(n_rep));
    }
    Ok(report)
}
