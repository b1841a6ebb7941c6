//! Score-balanced interval families for two-sided assertions `{θ0}^c`.
//!
//! With `T = T_θ0(X)` the score at `θ0`, the family `B_t = (ξ-(t), ξ+(t))`
//! satisfies `E{T · 1(T ∈ B_t)} = 0`, and the belief of `{θ0}^c` at `x` is
//! `P{T ∈ B_{T(x)}}`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, ImError, Result};
use crate::numeric::{find_root, integrate, QuadratureSpec, RandomStream};

const TABLE_POINTS: usize = 64;
const TABLE_TAIL: f64 = 5e-5;

/// A continuous one-parameter model whose score is increasing in `x`.
pub trait ScoreModel: Send + Sync {
    fn name(&self) -> &'static str;
    fn density(&self, x: f64, theta: f64) -> f64;
    fn cdf(&self, x: f64, theta: f64) -> f64;
    fn quantile(&self, p: f64, theta: f64) -> f64;
    /// `T_θ(x) = ∂/∂θ log f_θ(x)`.
    fn score(&self, x: f64, theta: f64) -> f64;
    /// `∂/∂θ T_θ(x)`.
    fn score_derivative(&self, x: f64, theta: f64) -> f64;
    /// The `x` with `T_θ(x) = t`.
    fn score_inverse(&self, t: f64, theta: f64) -> f64;
    fn support(&self) -> (f64, f64);
    fn simulate(&self, theta: f64, stream: &mut RandomStream) -> f64;

    /// `V_θ(x) = T_θ(x)^2 + ∂/∂θ T_θ(x)`.
    fn curvature(&self, x: f64, theta: f64) -> f64 {
        let t = self.score(x, theta);
        t * t + self.score_derivative(x, theta)
    }

    /// Range of `T_θ(X)` over the support.
    fn score_range(&self, theta: f64) -> (f64, f64) {
        let (lo, hi) = self.support();
        (self.score(lo, theta), self.score(hi, theta))
    }

    fn check_theta(&self, theta: f64) -> Result<()>;
}

/// `X ~ N(θ, 1)`: `T = x - θ`, `V = T^2 - 1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct GaussianScore;

/// `X ~ Exp(mean θ)`: `T = (x - θ)/θ^2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExponentialScore;

impl ScoreModel for GaussianScore {
    fn name(&self) -> &'static str {
        "gaussian"
    }
    fn density(&self, x: f64, theta: f64) -> f64 {
        crate::numeric::special::norm_pdf(x - theta)
    }
    fn cdf(&self, x: f64, theta: f64) -> f64 {
        crate::numeric::special::norm_cdf(x - theta)
    }
    fn quantile(&self, p: f64, theta: f64) -> f64 {
        theta + crate::numeric::special::norm_quantile_closed(p)
    }
    fn score(&self, x: f64, theta: f64) -> f64 {
        x - theta
    }
    fn score_derivative(&self, _x: f64, _theta: f64) -> f64 {
        -1.0
    }
    fn score_inverse(&self, t: f64, theta: f64) -> f64 {
        theta + t
    }
    fn support(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
    fn simulate(&self, theta: f64, stream: &mut RandomStream) -> f64 {
        theta + stream.standard_normal()
    }
    fn check_theta(&self, theta: f64) -> Result<()> {
        if theta.is_finite() {
            Ok(())
        } else {
            Err(domain(format!("θ must be finite, got {theta}")))
        }
    }
}

impl ScoreModel for ExponentialScore {
    fn name(&self) -> &'static str {
        "exponential"
    }
    fn density(&self, x: f64, theta: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            (-x / theta).exp() / theta
        }
    }
    fn cdf(&self, x: f64, theta: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            -(-x / theta).exp_m1()
        }
    }
    fn quantile(&self, p: f64, theta: f64) -> f64 {
        -theta * (-p).ln_1p()
    }
    fn score(&self, x: f64, theta: f64) -> f64 {
        (x - theta) / (theta * theta)
    }
    fn score_derivative(&self, x: f64, theta: f64) -> f64 {
        1.0 / (theta * theta) - 2.0 * x / (theta * theta * theta)
    }
    fn score_inverse(&self, t: f64, theta: f64) -> f64 {
        (theta + t * theta * theta).max(0.0)
    }
    fn support(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }
    fn simulate(&self, theta: f64, stream: &mut RandomStream) -> f64 {
        theta * stream.exponential()
    }
    fn check_theta(&self, theta: f64) -> Result<()> {
        if theta > 0.0 && theta.is_finite() {
            Ok(())
        } else {
            Err(domain(format!("θ must be positive, got {theta}")))
        }
    }
}

/// `∫ T·1(a < T < b) dP` under `θ0`, by quadrature in `x`.
pub fn partial_moment<M: ScoreModel + ?Sized>(
    model: &M,
    theta0: f64,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let (t_lo, t_hi) = model.score_range(theta0);
    let (a, b) = (a.max(t_lo), b.min(t_hi));
    if a >= b {
        return Ok(0.0);
    }
    let xa = if a == t_lo {
        model.support().0
    } else {
        model.score_inverse(a, theta0)
    };
    let xb = if b == t_hi {
        model.support().1
    } else {
        model.score_inverse(b, theta0)
    };
    integrate(|x| model.score(x, theta0) * model.density(x, theta0), xa, xb, spec)
}

/// `P{T < t}` under `θ0`.
fn score_cdf<M: ScoreModel + ?Sized>(model: &M, theta0: f64, t: f64) -> f64 {
    let (t_lo, t_hi) = model.score_range(theta0);
    if t <= t_lo {
        0.0
    } else if t >= t_hi {
        1.0
    } else {
        model.cdf(model.score_inverse(t, theta0), theta0)
    }
}

/// `ξ-(t)` for `t >= 0`: the `ξ <= 0` balancing the score mass on `(ξ, t)`.
pub fn solve_xi_minus<M: ScoreModel + ?Sized>(model: &M, theta0: f64, t: f64, tol: f64) -> Result<f64> {
    if t < 0.0 {
        return Ok(t);
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let spec = QuadratureSpec::cdf();
    let g = |xi: f64| partial_moment(model, theta0, xi, t, &spec);
    let (t_lo, _) = model.score_range(theta0);
    let mut lo = if t_lo.is_finite() { t_lo } else { -(t + 1.0) };
    let mut steps = 0;
    while g(lo)? > 0.0 {
        // Far in the upper tail the exact balance sits at the support edge; the residual is quadrature noise.
        if t_lo.is_finite() && g(lo)? <= 1e-9 * g(0.0)?.abs() {
            return Ok(t_lo);
        }
        if t_lo.is_finite() || steps > 60 {
            return Err(ImError::Unbalanceable(t));
        }
        lo *= 2.0;
        steps += 1;
    }
    solve_balanced(g, lo, 0.0, tol)
}

/// `ξ+(t)` for `t < 0`: the `ξ >= 0` balancing the score mass on `(t, ξ)`.
pub fn solve_xi_plus<M: ScoreModel + ?Sized>(model: &M, theta0: f64, t: f64, tol: f64) -> Result<f64> {
    if t >= 0.0 {
        return Ok(t);
    }
    let spec = QuadratureSpec::cdf();
    let g = |xi: f64| partial_moment(model, theta0, t, xi, &spec);
    let (_, t_hi) = model.score_range(theta0);
    let mut hi = if t_hi.is_finite() { t_hi } else { 1.0 - t };
    let mut steps = 0;
    while g(hi)? < 0.0 {
        if t_hi.is_finite() || steps > 60 {
            return Err(ImError::Unbalanceable(t));
        }
        hi *= 2.0;
        steps += 1;
    }
    solve_balanced(g, 0.0, hi, tol)
}

/// Root of a quadrature-valued balance function; errors from inside the solver are surfaced.
fn solve_balanced(g: impl Fn(f64) -> Result<f64>, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let failure = std::cell::RefCell::new(None);
    let root = find_root(
        |xi| match g(xi) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        },
        lo,
        hi,
        tol,
    );
    match failure.into_inner() {
        Some(e) => Err(e),
        None => root,
    }
}

/// Tabulated `ξ±` around a reference parameter `θ0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalancedFamily {
    pub theta0: f64,
    pub tol: f64,
    /// Increasing positive `|t|` values.
    pub abs_t: Vec<f64>,
    /// `ξ-(t)` at `t = abs_t[k]`.
    pub xi_minus_pos: Vec<f64>,
    /// `ξ+(t)` at `t = -abs_t[k]`, where `-abs_t[k]` lies in the score range.
    pub xi_plus_neg: Vec<Option<f64>>,
}

/// Solves the balance equations on a geometric grid of `|t|` covering the central 99.99% of `T`.
pub fn build_balanced_family<M: ScoreModel + ?Sized>(model: &M, theta0: f64, tol: f64) -> Result<BalancedFamily> {
    use rayon::prelude::*;
    model.check_theta(theta0)?;
    let t_a = model.score(model.quantile(TABLE_TAIL, theta0), theta0);
    let t_b = model.score(model.quantile(1.0 - TABLE_TAIL, theta0), theta0);
    let top = t_a.abs().max(t_b.abs());
    let bottom = top * 1e-4;
    let abs_t: Vec<f64> = (0..TABLE_POINTS)
        .map(|k| bottom * (top / bottom).powf(k as f64 / (TABLE_POINTS - 1) as f64))
        .collect();
    let (t_lo, _) = model.score_range(theta0);
    let xi_minus_pos = abs_t
        .par_iter()
        .map(|&t| solve_xi_minus(model, theta0, t, tol))
        .collect::<Result<Vec<_>>>()?;
    let xi_plus_neg = abs_t
        .par_iter()
        .map(|&t| {
            if -t > t_lo {
                solve_xi_plus(model, theta0, -t, tol).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BalancedFamily {
        theta0,
        tol,
        abs_t,
        xi_minus_pos,
        xi_plus_neg,
    })
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        // Both ξ functions pass through the origin.
        return ys[0] * x / xs[0];
    }
    let k = xs.partition_point(|&v| v <= x);
    if k >= xs.len() {
        return *ys.last().expect("non-empty table");
    }
    let w = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
    ys[k - 1] + w * (ys[k] - ys[k - 1])
}

impl BalancedFamily {
    /// Interpolated `ξ-(t)`; the identity for `t < 0`.
    pub fn xi_minus(&self, t: f64) -> f64 {
        if t < 0.0 {
            t
        } else {
            interpolate(&self.abs_t, &self.xi_minus_pos, t)
        }
    }

    /// Interpolated `ξ+(t)`; the identity for `t >= 0`.
    pub fn xi_plus(&self, t: f64) -> f64 {
        if t >= 0.0 {
            return t;
        }
        let (xs, ys): (Vec<f64>, Vec<f64>) = self
            .abs_t
            .iter()
            .zip(&self.xi_plus_neg)
            .filter_map(|(&a, b)| b.map(|b| (a, b)))
            .unzip();
        if xs.is_empty() {
            return 0.0;
        }
        interpolate(&xs, &ys, -t)
    }

    /// `E{T · 1(ξ-(t) < T < ξ+(t))}` at each tabulated point, from fresh quadrature.
    pub fn balance_residuals<M: ScoreModel + ?Sized>(&self, model: &M) -> Result<Vec<f64>> {
        let spec = QuadratureSpec::cdf();
        let mut out = Vec::new();
        for (k, &t) in self.abs_t.iter().enumerate() {
            out.push(partial_moment(model, self.theta0, self.xi_minus_pos[k], t, &spec)?);
            if let Some(xp) = self.xi_plus_neg[k] {
                out.push(partial_moment(model, self.theta0, -t, xp, &spec)?);
            }
        }
        Ok(out)
    }

    /// `|ξ+(ξ-(t)) - t|` at each tabulated `t >= 0`, with `ξ+` solved afresh.
    pub fn reflexivity_residuals<M: ScoreModel + ?Sized>(&self, model: &M) -> Result<Vec<f64>> {
        let (t_lo, _) = model.score_range(self.theta0);
        let mut out = Vec::new();
        for (k, &t) in self.abs_t.iter().enumerate() {
            let xm = self.xi_minus_pos[k];
            if xm <= t_lo + 1e-9 || xm == 0.0 {
                continue;
            }
            out.push((solve_xi_plus(model, self.theta0, xm, self.tol)? - t).abs());
        }
        Ok(out)
    }

    /// Belief of `{θ0}^c` from the interpolated table.
    pub fn belief_interpolated<M: ScoreModel + ?Sized>(&self, model: &M, x: f64) -> f64 {
        let t = model.score(x, self.theta0);
        let (a, b) = (self.xi_minus(t), self.xi_plus(t));
        (score_cdf(model, self.theta0, b) - score_cdf(model, self.theta0, a)).clamp(0.0, 1.0)
    }
}

/// `D(x) = ξ+(T(x)) - ξ-(T(x))` with `ξ` solved exactly.
pub fn balanced_interval<M: ScoreModel + ?Sized>(model: &M, theta0: f64, x: f64, tol: f64) -> Result<(f64, f64)> {
    let t = model.score(x, theta0);
    if t >= 0.0 {
        Ok((solve_xi_minus(model, theta0, t, tol)?, t))
    } else {
        Ok((t, solve_xi_plus(model, theta0, t, tol)?))
    }
}

/// `bel_x({θ0}^c) = P{T ∈ B_{T(x)}}` under `θ0`.
pub fn two_sided_belief_at<M: ScoreModel + ?Sized>(model: &M, theta0: f64, x: f64, tol: f64) -> Result<f64> {
    model.check_theta(theta0)?;
    let (lo, hi) = model.support();
    if !(x >= lo && x <= hi) || x.is_nan() {
        return Err(domain(format!("x = {x} is outside the {} support", model.name())));
    }
    let (a, b) = balanced_interval(model, theta0, x, tol)?;
    Ok((score_cdf(model, theta0, b) - score_cdf(model, theta0, a)).clamp(0.0, 1.0))
}

/// Two-sided belief at the family's `θ0`, with `ξ` solved exactly for the observed score.
pub fn two_sided_belief<M: ScoreModel + ?Sized>(model: &M, family: &BalancedFamily, x: f64) -> Result<f64> {
    two_sided_belief_at(model, family.theta0, x, family.tol)
}

/// `pl_x(θ) = 1 - bel_x({θ}^c)` with the balanced family rebuilt at every `θ`.
pub fn score_balanced_pl_curve<M: ScoreModel + ?Sized>(model: &M, thetas: &[f64], x: f64) -> Result<Vec<(f64, f64)>> {
    use rayon::prelude::*;
    thetas
        .par_iter()
        .map(|&theta| Ok((theta, 1.0 - two_sided_belief_at(model, theta, x, DEFAULT_TOL)?)))
        .collect()
}

pub const DEFAULT_TOL: f64 = 1e-12;

/// Outcome of the unimodality check on `V(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnimodalReport {
    pub holds: bool,
    /// `None` when `V` is flat on the grid.
    pub argmin_t: Option<f64>,
    pub v_at_zero: f64,
}

/// Checks that `V(t)` is uniquely minimized at `t = 0` with `V(0) < 0`.
pub fn check_unimodal_condition<M: ScoreModel + ?Sized>(model: &M, theta0: f64, grid: &[f64]) -> UnimodalReport {
    let v = |t: f64| model.curvature(model.score_inverse(t, theta0), theta0);
    let v_at_zero = v(0.0);
    let (t_lo, t_hi) = model.score_range(theta0);
    let pts: Vec<f64> = grid.iter().copied().filter(|t| *t >= t_lo && *t <= t_hi).collect();
    let vals: Vec<f64> = pts.iter().map(|&t| v(t)).collect();
    let (vmin, vmax) = vals
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if pts.len() < 3 || vmax - vmin <= 1e-12 * vmax.abs().max(1.0) {
        return UnimodalReport {
            holds: false,
            argmin_t: None,
            v_at_zero,
        };
    }
    let k = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .expect("non-empty");
    // Golden-section refinement between the neighbours of the grid minimum.
    let (mut a, mut b) = (pts[k.saturating_sub(1)], pts[(k + 1).min(pts.len() - 1)]);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        if b - a < 1e-10 {
            break;
        }
        let c = b - ratio * (b - a);
        let d = a + ratio * (b - a);
        if v(c) < v(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let argmin = 0.5 * (a + b);
    let scale = (t_hi.min(1e300) - t_lo.max(-1e300))
        .abs()
        .min(pts[pts.len() - 1] - pts[0]);
    UnimodalReport {
        holds: argmin.abs() <= 1e-6 * scale.max(1.0) && v_at_zero < 0.0,
        argmin_t: Some(argmin),
        v_at_zero,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::special::norm_cdf;
    use approx::assert_abs_diff_eq;

    #[test]
    fn score_identities_hold() {
        let spec = QuadratureSpec::cdf();
        for theta in [0.5, 1.0, 3.0] {
            let e = ExponentialScore;
            let mass = integrate(|x| e.density(x, theta), 0.0, f64::INFINITY, &spec).unwrap();
            let mean_t = integrate(|x| e.score(x, theta) * e.density(x, theta), 0.0, f64::INFINITY, &spec).unwrap();
            let mean_v = integrate(
                |x| e.curvature(x, theta) * e.density(x, theta),
                0.0,
                f64::INFINITY,
                &spec,
            )
            .unwrap();
            assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-9);
            assert_abs_diff_eq!(mean_t, 0.0, epsilon = 1e-9);
            assert_abs_diff_eq!(mean_v, 0.0, epsilon = 1e-9);
        }
        let g = GaussianScore;
        let mean_v = integrate(
            |x| g.curvature(x, 2.0) * g.density(x, 2.0),
            f64::NEG_INFINITY,
            f64::INFINITY,
            &spec,
        )
        .unwrap();
        assert_abs_diff_eq!(mean_v, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn gaussian_family_is_symmetric() {
        let fam = build_balanced_family(&GaussianScore, 0.7, 1e-12).unwrap();
        for (k, &t) in fam.abs_t.iter().enumerate() {
            assert_abs_diff_eq!(fam.xi_minus_pos[k], -t, epsilon = 1e-8);
            assert_abs_diff_eq!(fam.xi_plus_neg[k].unwrap(), t, epsilon = 1e-8);
        }
        for x in [-2.0, 0.0, 0.7, 1.3, 4.0] {
            let want = 2.0 * norm_cdf((x - 0.7f64).abs()) - 1.0;
            assert_abs_diff_eq!(two_sided_belief(&GaussianScore, &fam, x).unwrap(), want, epsilon = 1e-8);
        }
    }

    #[test]
    fn exponential_partial_moment_matches_closed_form() {
        // At θ0 = 1, ∫ (x - 1) e^{-x} dx = -x e^{-x}.
        let prim = |x: f64| -x * (-x).exp();
        let spec = QuadratureSpec::cdf();
        for (a, b) in [(-0.5, 2.0), (-1.0, 0.3), (0.0, 4.0)] {
            let got = partial_moment(&ExponentialScore, 1.0, a, b, &spec).unwrap();
            assert_abs_diff_eq!(got, prim(b + 1.0) - prim(a + 1.0), epsilon = 1e-12);
        }
    }

    #[test]
    fn exponential_family_balances() {
        let e = ExponentialScore;
        let fam = build_balanced_family(&e, 1.0, 1e-12).unwrap();
        assert!(fam.balance_residuals(&e).unwrap().iter().all(|r| r.abs() < 1e-6));
        assert!(fam.reflexivity_residuals(&e).unwrap().iter().all(|r| *r < 1e-6));
        for w in fam.xi_minus_pos.windows(2) {
            assert!(w[1] <= w[0]);
        }
        assert!(fam.xi_minus_pos.iter().all(|&v| (-1.0..=0.0).contains(&v)));
        for x in [0.2, 1.0, 2.5, 5.0] {
            let exact = two_sided_belief(&e, &fam, x).unwrap();
            assert_abs_diff_eq!(fam.belief_interpolated(&e, x), exact, epsilon = 5e-3);
        }
        assert_eq!(two_sided_belief(&e, &fam, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn unimodal_reports() {
        let grid: Vec<f64> = (-400..=400).map(|i| i as f64 / 100.0).collect();
        let g = check_unimodal_condition(&GaussianScore, 0.0, &grid);
        assert!(g.holds);
        assert_abs_diff_eq!(g.argmin_t.unwrap(), 0.0, epsilon = 1e-7);
        assert_abs_diff_eq!(g.v_at_zero, -1.0, epsilon = 1e-15);
        let e = check_unimodal_condition(&ExponentialScore, 1.0, &grid);
        assert!(!e.holds);
        assert_abs_diff_eq!(e.argmin_t.unwrap(), 1.0, epsilon = 1e-7);
        assert_abs_diff_eq!(e.v_at_zero, -1.0, epsilon = 1e-12);
    }

    struct Flat;
    impl ScoreModel for Flat {
        fn name(&self) -> &'static str {
            "flat"
        }
        fn density(&self, x: f64, t: f64) -> f64 {
            GaussianScore.density(x, t)
        }
        fn cdf(&self, x: f64, t: f64) -> f64 {
            GaussianScore.cdf(x, t)
        }
        fn quantile(&self, p: f64, t: f64) -> f64 {
            GaussianScore.quantile(p, t)
        }
        fn score(&self, x: f64, t: f64) -> f64 {
            x - t
        }
        fn score_derivative(&self, x: f64, t: f64) -> f64 {
            -(x - t) * (x - t)
        }
        fn score_inverse(&self, s: f64, t: f64) -> f64 {
            s + t
        }
        fn support(&self) -> (f64, f64) {
            GaussianScore.support()
        }
        fn simulate(&self, t: f64, s: &mut RandomStream) -> f64 {
            GaussianScore.simulate(t, s)
        }
        fn check_theta(&self, t: f64) -> Result<()> {
            GaussianScore.check_theta(t)
        }
    }

    #[test]
    fn flat_curvature_has_no_argmin() {
        let r = check_unimodal_condition(&Flat, 0.0, &[-1.0, 0.0, 1.0, 2.0]);
        assert!(!r.holds);
        assert!(r.argmin_t.is_none());
    }

    #[test]
    fn pl_curve_peaks_where_score_vanishes() {
        let curve = score_balanced_pl_curve(&ExponentialScore, &[1.0, 5.0, 20.0], 5.0).unwrap();
        assert_eq!(curve[1].1, 1.0);
        assert!(curve[0].1 < 1.0 && curve[2].1 < 1.0);
        let g = score_balanced_pl_curve(&GaussianScore, &[3.0, 5.5], 5.0).unwrap();
        for (theta, pl) in g {
            assert_abs_diff_eq!(pl, 1.0 - (2.0 * norm_cdf(5.0 - theta) - 1.0).abs(), epsilon = 1e-8);
        }
    }
}
