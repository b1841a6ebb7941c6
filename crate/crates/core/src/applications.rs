//! Two multiparameter problems: inference on a standardized normal mean, and
//! testing equality of many exponential rates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::belief::BeliefResult;
use crate::error::{domain, Result};
use crate::numeric::{expand_bracket, find_root, noncentral_t_cdf, QuadratureSpec, RandomStream};

/// Sufficient statistics of a normal sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalSample {
    pub n: u32,
    pub xbar: f64,
    pub s: f64,
}

impl NormalSample {
    pub fn new(n: u32, xbar: f64, s: f64) -> Result<Self> {
        if n < 2 {
            return Err(domain(format!("need at least two observations, got {n}")));
        }
        if !(s > 0.0) || !s.is_finite() || !xbar.is_finite() {
            return Err(domain(format!("need finite mean and positive sd, got ({xbar}, {s})")));
        }
        Ok(Self { n, xbar, s })
    }

    pub fn from_data(data: &[f64]) -> Result<Self> {
        let n = data.len();
        if n < 2 {
            return Err(domain("need at least two observations"));
        }
        let mean = data.iter().sum::<f64>() / n as f64;
        let var = data.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        Self::new(n as u32, mean, var.sqrt())
    }

    /// `z = √n · x̄ / s`.
    pub fn z(&self) -> f64 {
        (self.n as f64).sqrt() * self.xbar / self.s
    }

    /// `F_ψ(z)`: noncentral t CDF with `n - 1` degrees of freedom and noncentrality `√n ψ`.
    pub fn pivot_cdf(&self, psi: f64) -> Result<f64> {
        noncentral_t_cdf(
            self.z(),
            self.n - 1,
            (self.n as f64).sqrt() * psi,
            &QuadratureSpec::cdf(),
        )
    }
}

/// `pl_x(ψ) = 1 - |2 F_ψ(z) - 1|`.
pub fn psi_plausibility(sample: &NormalSample, psi: f64) -> Result<f64> {
    if !psi.is_finite() {
        return Err(domain(format!("ψ must be finite, got {psi}")));
    }
    Ok(1.0 - (2.0 * sample.pivot_cdf(psi)? - 1.0).abs())
}

/// `{ψ : α/2 < F_ψ(z) < 1 - α/2}`.
pub fn psi_interval(sample: &NormalSample, alpha: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let centre = sample.xbar / sample.s;
    let solve = |target: f64| -> Result<f64> {
        let f = |psi: f64| sample.pivot_cdf(psi).map(|p| p - target).unwrap_or(f64::NAN);
        let (lo, hi) = expand_bracket(f, centre - 1.0, centre + 1.0, -1e6, 1e6)?;
        find_root(f, lo, hi, 1e-10)
    };
    // F_ψ(z) decreases in ψ.
    Ok((solve(1.0 - alpha / 2.0)?, solve(alpha / 2.0)?))
}

/// Simulation of the rectangle random set: `F_ψ(z)` is estimated from draws of
/// `(√n ψ + U1)/U2` and compared with `|V1 - 0.5|` on the same replicates.
pub fn psi_plausibility_mc(
    sample: &NormalSample,
    psi: f64,
    n_rep: usize,
    stream: &RandomStream,
) -> Result<BeliefResult> {
    if n_rep == 0 {
        return Err(domain("need at least one replicate"));
    }
    let df = (sample.n - 1) as f64;
    let shift = (sample.n as f64).sqrt() * psi;
    let z = sample.z();
    let draws: Vec<(bool, f64)> = (0..n_rep)
        .into_par_iter()
        .map(|i| {
            let mut s = stream.substream(i as u64);
            let u1 = s.standard_normal();
            let u2 = (s.chi_squared(df) / df).sqrt();
            let v1 = s.uniform();
            ((shift + u1) / u2 <= z, v1)
        })
        .collect();
    let f_hat = draws.iter().filter(|d| d.0).count() as f64 / n_rep as f64;
    let hits = draws.iter().filter(|d| (f_hat - 0.5).abs() < (d.1 - 0.5).abs()).count();
    let pl = hits as f64 / n_rep as f64;
    // The estimate of F contributes variance through the slope of pl in F.
    let se = (pl * (1.0 - pl) / n_rep as f64 + 4.0 * f_hat * (1.0 - f_hat) / n_rep as f64).sqrt();
    Ok(BeliefResult {
        belief: 0.0,
        plausibility: pl,
        mc_se_belief: 0.0,
        mc_se_plausibility: se,
        replicates: n_rep,
    })
}

/// Independent exponential observations with unknown rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatesSample {
    pub x: Vec<f64>,
}

impl RatesSample {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if x.len() < 2 {
            return Err(domain("need at least two observations"));
        }
        if let Some(bad) = x.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(domain(format!("observations must be positive, got {bad}")));
        }
        Ok(Self { x })
    }

    /// First `n1` rates equal 1, the remaining `n2` equal `ratio`.
    pub fn simulate(n1: usize, n2: usize, ratio: f64, stream: &mut RandomStream) -> Self {
        let x = (0..n1 + n2)
            .map(|i| {
                let rate = if i < n1 { 1.0 } else { ratio };
                stream.exponential() / rate
            })
            .collect();
        Self { x }
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }
}

/// `h(v) = -Σ_{i<n} [a_i log t_i + b_i log(1 - t_i)]` with `t_i` the partial sums of `v`.
///
/// `v` is normalized internally, so any positive vector may be passed.
pub fn rates_h(v: &[f64]) -> Result<f64> {
    let n = v.len();
    if n < 2 {
        return Err(domain("h needs at least two components"));
    }
    let total: f64 = v.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(domain("components must have a positive finite sum"));
    }
    let mut prefix = 0.0;
    let mut suffix = total;
    let mut h = 0.0;
    for (i, &vi) in v[..n - 1].iter().enumerate() {
        prefix += vi;
        suffix -= vi;
        let t = prefix / total;
        let one_minus_t = suffix / total;
        if !(t > 0.0) || !(one_minus_t > 0.0) {
            return Err(domain(format!("partial sum t_{} is on the simplex boundary", i + 1)));
        }
        let k = (i + 1) as f64;
        let a = 1.0 / (n as f64 - k - 0.3);
        let b = 1.0 / (k - 0.3);
        h -= a * t.ln() + b * one_minus_t.ln();
    }
    Ok(h)
}

/// `h(V)` for `V ~ Dir_n(1)`, drawn as normalized unit exponentials.
fn draw_h(n: usize, stream: &mut RandomStream) -> f64 {
    let v: Vec<f64> = (0..n).map(|_| stream.exponential()).collect();
    rates_h(&v).expect("exponential draws are positive")
}

/// `pl_x(θ_1 = ... = θ_n) = P{h(V) > h(x / Σx)}`, by simulation. Belief is zero.
pub fn rates_plausibility(sample: &RatesSample, n_rep: usize, stream: &RandomStream) -> Result<BeliefResult> {
    if n_rep == 0 {
        return Err(domain("need at least one replicate"));
    }
    let h_obs = rates_h(&sample.x)?;
    let n = sample.n();
    let hits: usize = (0..n_rep)
        .into_par_iter()
        .map(|i| (draw_h(n, &mut stream.substream(i as u64)) > h_obs) as usize)
        .sum();
    let pl = hits as f64 / n_rep as f64;
    Ok(BeliefResult {
        belief: 0.0,
        plausibility: pl,
        mc_se_belief: 0.0,
        mc_se_plausibility: (pl * (1.0 - pl) / n_rep as f64).sqrt(),
        replicates: n_rep,
    })
}

/// Sorted reference sample of `h(V)`, shared across datasets of the same size.
#[derive(Debug, Clone)]
pub struct RatesReference {
    n: usize,
    sorted: Vec<f64>,
}

impl RatesReference {
    pub fn new(n: usize, n_rep: usize, stream: &RandomStream) -> Result<Self> {
        if n < 2 || n_rep == 0 {
            return Err(domain("reference sample needs n >= 2 and at least one replicate"));
        }
        let mut sorted: Vec<f64> = (0..n_rep)
            .into_par_iter()
            .map(|i| draw_h(n, &mut stream.substream(i as u64)))
            .collect();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { n, sorted })
    }

    pub fn plausibility(&self, sample: &RatesSample) -> Result<f64> {
        if sample.n() != self.n {
            return Err(domain(format!(
                "reference built for n = {}, sample has {}",
                self.n,
                sample.n()
            )));
        }
        let h_obs = rates_h(&sample.x)?;
        let above = self.sorted.len() - self.sorted.partition_point(|&h| h <= h_obs);
        Ok(above as f64 / self.sorted.len() as f64)
    }
}

/// `{(Π x_i)^{1/n} / x̄}^n`, computed on the log scale.
pub fn lr_statistic(sample: &RatesSample) -> f64 {
    let n = sample.n() as f64;
    let mean_log = sample.x.iter().map(|v| v.ln()).sum::<f64>() / n;
    let log_mean = (sample.x.iter().sum::<f64>() / n).ln();
    (n * (mean_log - log_mean)).exp().min(1.0)
}

/// Empirical `α`-quantile of the likelihood-ratio statistic under equal rates.
pub fn lr_null_quantile(n: usize, alpha: f64, n_null: usize, stream: &RandomStream) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) || n_null == 0 {
        return Err(domain("need alpha in (0, 1) and a positive null sample size"));
    }
    let mut stats: Vec<f64> = (0..n_null)
        .into_par_iter()
        .map(|i| lr_statistic(&RatesSample::simulate(n, 0, 1.0, &mut stream.substream(i as u64))))
        .collect();
    stats.sort_by(f64::total_cmp);
    let k = ((alpha * n_null as f64).ceil() as usize).clamp(1, n_null) - 1;
    Ok(stats[k])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PowerMethod {
    #[serde(rename = "im-new")]
    ImNew,
    #[serde(rename = "lr")]
    Lr,
}

impl PowerMethod {
    pub fn name(self) -> &'static str {
        match self {
            PowerMethod::ImNew => "im-new",
            PowerMethod::Lr => "lr",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub theta_ratio: f64,
    pub method: PowerMethod,
    pub power: f64,
    pub mc_se: f64,
    pub n_datasets: usize,
    pub alpha: f64,
    pub n1: usize,
    pub n2: usize,
}

/// Settings for [`power_study`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerConfig {
    pub n1: usize,
    pub n2: usize,
    pub alpha: f64,
    pub n_datasets: usize,
    /// Size of the shared `h(V)` reference sample.
    pub n_mc: usize,
    /// Null datasets used to calibrate the likelihood-ratio test.
    pub n_null: usize,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self {
            n1: 50,
            n2: 50,
            alpha: 0.05,
            n_datasets: 2000,
            n_mc: 100_000,
            n_null: 10_000,
        }
    }
}

/// Rejection rates of the IM test (`pl <= α`) and the calibrated LR test per rate ratio.
pub fn power_study(ratios: &[f64], config: &PowerConfig, stream: &RandomStream) -> Result<Vec<PowerRow>> {
    let PowerConfig {
        n1,
        n2,
        alpha,
        n_datasets,
        n_mc,
        n_null,
    } = *config;
    if n1 + n2 < 2 {
        return Err(domain("need n1 + n2 >= 2"));
    }
    if !(alpha > 0.0 && alpha < 1.0) || n_datasets == 0 {
        return Err(domain("need alpha in (0, 1) and at least one dataset"));
    }
    if let Some(r) = ratios.iter().find(|r| !(**r > 0.0) || !r.is_finite()) {
        return Err(domain(format!("rate ratios must be positive, got {r}")));
    }
    let n = n1 + n2;
    let reference = RatesReference::new(n, n_mc, &stream.substream(0))?;
    let lr_cut = lr_null_quantile(n, alpha, n_null, &stream.substream(1))?;
    let mut rows = Vec::with_capacity(2 * ratios.len());
    for (k, &ratio) in ratios.iter().enumerate() {
        let base = stream.substream(2 + k as u64);
        let (im, lr) = (0..n_datasets)
            .into_par_iter()
            .map(|d| -> Result<(usize, usize)> {
                let sample = RatesSample::simulate(n1, n2, ratio, &mut base.substream(d as u64));
                let im = reference.plausibility(&sample)? <= alpha;
                let lr = lr_statistic(&sample) <= lr_cut;
                Ok((im as usize, lr as usize))
            })
            .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
        for (method, hits) in [(PowerMethod::ImNew, im), (PowerMethod::Lr, lr)] {
            let power = hits as f64 / n_datasets as f64;
            rows.push(PowerRow {
                theta_ratio: ratio,
                method,
                power,
                mc_se: (power * (1.0 - power) / n_datasets as f64).sqrt(),
                n_datasets,
                alpha,
                n1,
                n2,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn psi_plausibility_peaks_at_one() {
        let s = NormalSample::new(10, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(psi_plausibility(&s, 0.0).unwrap(), 1.0, epsilon = 1e-9);
        let (lo, hi) = psi_interval(&s, 0.1).unwrap();
        assert_abs_diff_eq!(lo, -hi, epsilon = 1e-8);
        for end in [lo, hi] {
            assert_abs_diff_eq!(psi_plausibility(&s, end).unwrap(), 0.1, epsilon = 1e-6);
        }
    }

    #[test]
    fn psi_mc_cross_check() {
        let s = NormalSample::new(8, 0.9, 1.7).unwrap();
        let exact = psi_plausibility(&s, 0.2).unwrap();
        let mc = psi_plausibility_mc(&s, 0.2, 200_000, &RandomStream::new(3, 0)).unwrap();
        assert!(
            (mc.plausibility - exact).abs() < 3.0 * mc.mc_se_plausibility,
            "{exact} vs {mc:?}"
        );
    }

    #[test]
    fn rates_h_values() {
        let want = 2f64.ln() * 2.0 / 0.7;
        assert_abs_diff_eq!(rates_h(&[0.5, 0.5]).unwrap(), want, epsilon = 1e-12);
        assert_abs_diff_eq!(rates_h(&[0.5, 0.5]).unwrap(), 1.9804, epsilon = 1e-4);
        // n = 3 at the centre: t = (1/3, 2/3), a = (1/1.7, 1/0.7), b = (1/0.7, 1/1.7).
        let third = 1.0f64 / 3.0;
        let want = -((1.0 / 1.7) * third.ln() + (1.0 / 0.7) * (2.0 * third).ln())
            - ((1.0 / 0.7) * (2.0 * third).ln() + (1.0 / 1.7) * third.ln());
        assert_abs_diff_eq!(rates_h(&[third, third, third]).unwrap(), want, epsilon = 1e-12);
        assert!(rates_h(&[0.0, 0.5, 0.5]).is_err());
        assert!(rates_h(&[0.5, 0.5, 0.0]).is_err());
    }

    #[test]
    fn lr_values() {
        let one = RatesSample::new(vec![2.0; 5]).unwrap();
        assert_abs_diff_eq!(lr_statistic(&one), 1.0, epsilon = 1e-12);
        let two = RatesSample::new(vec![1.0, 2.0]).unwrap();
        assert_abs_diff_eq!(lr_statistic(&two), 8.0 / 9.0, epsilon = 1e-12);
        let spread = RatesSample::new(vec![1e-8, 1.0, 1e8]).unwrap();
        assert!(lr_statistic(&spread) < 1e-3);
    }

    #[test]
    fn rates_plausibility_is_scale_invariant() {
        let stream = RandomStream::new(11, 0);
        let x = RatesSample::simulate(5, 5, 2.0, &mut stream.substream(99));
        let scaled = RatesSample::new(x.x.iter().map(|v| v * 7.5).collect()).unwrap();
        let a = rates_plausibility(&x, 5000, &stream).unwrap();
        let b = rates_plausibility(&scaled, 5000, &stream).unwrap();
        assert_eq!(a.plausibility, b.plausibility);
        assert_eq!(a.belief, 0.0);
        let reference = RatesReference::new(10, 5000, &stream).unwrap();
        assert_eq!(reference.plausibility(&x).unwrap(), a.plausibility);
    }

    #[test]
    fn bad_inputs() {
        assert!(NormalSample::new(1, 0.0, 1.0).is_err());
        assert!(NormalSample::new(5, 0.0, 0.0).is_err());
        assert!(RatesSample::new(vec![1.0, -1.0]).is_err());
        assert!(psi_interval(&NormalSample::new(5, 1.0, 1.0).unwrap(), 1.0).is_err());
    }
}
