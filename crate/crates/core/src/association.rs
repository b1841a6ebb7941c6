//! Associations `x = a(θ, u)` with a uniform auxiliary variable, and the
//! focal (solution) sets `Θ_x(u)` they induce.
//!
//! Focal sets are stored as a pair of endpoint maps. For every built-in model
//! both endpoints are monotone in `u`, which is what lets the belief engine
//! reduce set containment to endpoint comparisons.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, ImError, Result};
use crate::numeric::special::{gamma_cdf, gamma_quantile_closed, norm_cdf, norm_quantile_closed, poisson_cdf};
use crate::numeric::RandomStream;

/// Scalar sampling models with a canonical uniform association.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarModel {
    /// `X ~ N(θ, 1)`, `X = θ + Φ^{-1}(U)`.
    Gaussian,
    /// `X ~ Pois(θ)`, `F_θ(X - 1) <= 1 - U < F_θ(X)`.
    Poisson,
    /// `X ~ Exp(mean θ)`, `X = θ · (-log(1 - U))`.
    Exponential,
}

impl ScalarModel {
    pub const ALL: [ScalarModel; 3] = [ScalarModel::Gaussian, ScalarModel::Poisson, ScalarModel::Exponential];

    pub fn name(self) -> &'static str {
        match self {
            ScalarModel::Gaussian => "gaussian",
            ScalarModel::Poisson => "poisson",
            ScalarModel::Exponential => "exponential",
        }
    }
}

impl fmt::Display for ScalarModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScalarModel {
    type Err = ImError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(ScalarModel::Gaussian),
            "poisson" => Ok(ScalarModel::Poisson),
            "exponential" | "exp" => Ok(ScalarModel::Exponential),
            other => Err(domain(format!("unknown model '{other}'"))),
        }
    }
}

/// How the focal endpoints move as `u` increases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndpointTrend {
    Increasing,
    Decreasing,
}

/// A closed sub-interval of the auxiliary space `[0, 1]`; empty when `lo > hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UInterval {
    pub lo: f64,
    pub hi: f64,
}

impl UInterval {
    pub const EMPTY: UInterval = UInterval { lo: 1.0, hi: 0.0 };
    pub const FULL: UInterval = UInterval { lo: 0.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Self {
        Self {
            lo: lo.max(0.0),
            hi: hi.min(1.0),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn intersect(&self, other: &UInterval) -> UInterval {
        UInterval::new(self.lo.max(other.lo), self.hi.min(other.hi))
    }

    pub fn contains(&self, u: f64) -> bool {
        self.lo <= u && u <= self.hi
    }

    /// Lebesgue measure (the `Unif(0,1)` probability).
    pub fn measure(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.hi - self.lo
        }
    }
}

/// A finite union of auxiliary-space intervals (at most two in practice).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct USet {
    pub pieces: Vec<UInterval>,
}

impl USet {
    pub fn single(piece: UInterval) -> Self {
        Self {
            pieces: vec![piece].into_iter().filter(|p| !p.is_empty()).collect(),
        }
    }

    pub fn pair(a: UInterval, b: UInterval) -> Self {
        Self {
            pieces: [a, b].into_iter().filter(|p| !p.is_empty()).collect(),
        }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Complement within `[0, 1]`, as closed pieces.
    ///
    /// Pieces that touch are taken to be separated by their shared point, which
    /// then appears in the complement as a degenerate piece.
    pub fn complement(&self) -> USet {
        let mut pieces: Vec<UInterval> = self.pieces.iter().copied().filter(|p| !p.is_empty()).collect();
        pieces.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut out = Vec::new();
        let mut cursor = 0.0;
        for (i, p) in pieces.iter().enumerate() {
            if p.lo > cursor || (i > 0 && p.lo == cursor) {
                out.push(UInterval::new(cursor, p.lo));
            }
            cursor = f64::max(cursor, p.hi);
        }
        if cursor < 1.0 {
            out.push(UInterval::new(cursor, 1.0));
        }
        USet { pieces: out }
    }

    pub fn contains(&self, u: f64) -> bool {
        self.pieces.iter().any(|p| p.contains(u))
    }
}

/// A subset of the parameter space.
#[derive(Clone)]
pub enum Assertion {
    Point(f64),
    ComplementOfPoint(f64),
    /// `(-inf, θ0)`
    LeftRay(f64),
    /// `(θ0, inf)`
    RightRay(f64),
    /// `(a, b)`
    Interval(f64, f64),
    /// Complement of `(a, b)`.
    Outside(f64, f64),
    /// Arbitrary membership test, evaluated on a grid over the focal hull.
    Predicate(Arc<dyn Fn(f64) -> bool + Send + Sync>),
}

impl fmt::Debug for Assertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Assertion::Point(t) => write!(f, "Point({t})"),
            Assertion::ComplementOfPoint(t) => write!(f, "ComplementOfPoint({t})"),
            Assertion::LeftRay(t) => write!(f, "LeftRay({t})"),
            Assertion::RightRay(t) => write!(f, "RightRay({t})"),
            Assertion::Interval(a, b) => write!(f, "Interval({a}, {b})"),
            Assertion::Outside(a, b) => write!(f, "Outside({a}, {b})"),
            Assertion::Predicate(_) => f.write_str("Predicate(..)"),
        }
    }
}

const PREDICATE_GRID: usize = 257;
const PREDICATE_SPAN: f64 = 1e12;

impl Assertion {
    pub fn predicate(f: impl Fn(f64) -> bool + Send + Sync + 'static) -> Self {
        Assertion::Predicate(Arc::new(f))
    }

    /// Set complement. Rays map to the opposite ray; the shared boundary point is ignored.
    pub fn complement(&self) -> Assertion {
        match self {
            Assertion::Point(t) => Assertion::ComplementOfPoint(*t),
            Assertion::ComplementOfPoint(t) => Assertion::Point(*t),
            Assertion::LeftRay(t) => Assertion::RightRay(*t),
            Assertion::RightRay(t) => Assertion::LeftRay(*t),
            Assertion::Interval(a, b) => Assertion::Outside(*a, *b),
            Assertion::Outside(a, b) => Assertion::Interval(*a, *b),
            Assertion::Predicate(p) => {
                let p = Arc::clone(p);
                Assertion::Predicate(Arc::new(move |t| !p(t)))
            }
        }
    }

    pub fn contains(&self, theta: f64) -> bool {
        match self {
            Assertion::Point(t) => theta == *t,
            Assertion::ComplementOfPoint(t) => theta != *t,
            Assertion::LeftRay(t) => theta < *t,
            Assertion::RightRay(t) => theta > *t,
            Assertion::Interval(a, b) => *a < theta && theta < *b,
            Assertion::Outside(a, b) => theta <= *a || theta >= *b,
            Assertion::Predicate(p) => p(theta),
        }
    }

    fn predicate_grid(lo: f64, hi: f64) -> impl Iterator<Item = f64> {
        let lo = lo.max(-PREDICATE_SPAN);
        let hi = hi.min(PREDICATE_SPAN);
        (0..PREDICATE_GRID).map(move |i| {
            if PREDICATE_GRID == 1 || lo == hi {
                lo
            } else {
                lo + (hi - lo) * i as f64 / (PREDICATE_GRID - 1) as f64
            }
        })
    }

    /// Whether the parameter interval `[lo, hi]` lies inside the assertion.
    pub fn hull_within(&self, lo: f64, hi: f64) -> bool {
        match self {
            Assertion::Point(t) => lo == *t && hi == *t,
            Assertion::ComplementOfPoint(t) => *t < lo || *t > hi,
            Assertion::LeftRay(t) => hi < *t,
            Assertion::RightRay(t) => lo > *t,
            Assertion::Interval(a, b) => *a < lo && hi < *b,
            Assertion::Outside(a, b) => hi <= *a || lo >= *b,
            Assertion::Predicate(p) => Self::predicate_grid(lo, hi).all(|t| p(t)),
        }
    }

    /// Whether the parameter interval `[lo, hi]` meets the assertion.
    pub fn hull_meets(&self, lo: f64, hi: f64) -> bool {
        !self.complement().hull_within(lo, hi)
    }
}

impl FromStr for Assertion {
    type Err = ImError;

    /// Parses `point:θ`, `complement:θ`, `left:θ`, `right:θ`, `interval:a:b`, `outside:a:b`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |i: usize| -> Result<f64> {
            parts
                .get(i)
                .ok_or_else(|| domain(format!("assertion '{s}' is missing a value")))?
                .trim()
                .parse::<f64>()
                .map_err(|e| domain(format!("bad number in assertion '{s}': {e}")))
        };
        let a = match parts[0].to_ascii_lowercase().as_str() {
            "point" => Assertion::Point(num(1)?),
            "complement" | "two-sided" => Assertion::ComplementOfPoint(num(1)?),
            "left" => Assertion::LeftRay(num(1)?),
            "right" => Assertion::RightRay(num(1)?),
            "interval" => Assertion::Interval(num(1)?, num(2)?),
            "outside" => Assertion::Outside(num(1)?, num(2)?),
            other => return Err(domain(format!("unknown assertion kind '{other}'"))),
        };
        if let Assertion::Interval(a, b) | Assertion::Outside(a, b) = a {
            if !(a < b) {
                return Err(domain(format!("assertion interval needs a < b, got ({a}, {b})")));
            }
        }
        Ok(a)
    }
}

/// An association for a scalar model with `U ~ Unif(0, 1)`.
///
/// Every focal set `Θ_x(u)` is non-empty for every observation and every `u`
/// in `(0, 1)`, so belief functions need no conditioning.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Association {
    model: ScalarModel,
}

pub fn gaussian_mean_assoc() -> Association {
    Association {
        model: ScalarModel::Gaussian,
    }
}

pub fn poisson_mean_assoc() -> Association {
    Association {
        model: ScalarModel::Poisson,
    }
}

pub fn exponential_mean_assoc() -> Association {
    Association {
        model: ScalarModel::Exponential,
    }
}

impl Association {
    pub fn new(model: ScalarModel) -> Self {
        Self { model }
    }

    pub fn model(&self) -> ScalarModel {
        self.model
    }

    /// Open parameter space `(lo, hi)`.
    pub fn param_space(&self) -> (f64, f64) {
        match self.model {
            ScalarModel::Gaussian => (f64::NEG_INFINITY, f64::INFINITY),
            ScalarModel::Poisson | ScalarModel::Exponential => (0.0, f64::INFINITY),
        }
    }

    pub fn check_observation(&self, x: f64) -> Result<()> {
        match self.model {
            ScalarModel::Gaussian if x.is_finite() => Ok(()),
            ScalarModel::Poisson if x >= 0.0 && x.fract() == 0.0 && x.is_finite() => Ok(()),
            ScalarModel::Exponential if x > 0.0 && x.is_finite() => Ok(()),
            _ => Err(domain(format!(
                "observation {x} is outside the {} sample space",
                self.model
            ))),
        }
    }

    pub fn check_theta(&self, theta: f64) -> Result<()> {
        let (lo, hi) = self.param_space();
        if theta > lo && theta < hi {
            Ok(())
        } else {
            Err(domain(format!(
                "θ = {theta} is outside the {} parameter space",
                self.model
            )))
        }
    }

    pub fn endpoint_trend(&self) -> EndpointTrend {
        match self.model {
            ScalarModel::Gaussian | ScalarModel::Exponential => EndpointTrend::Decreasing,
            ScalarModel::Poisson => EndpointTrend::Increasing,
        }
    }

    /// Lower focal endpoint; defined on the closed interval `[0, 1]` as a limit.
    pub fn focal_lower(&self, x: f64, u: f64) -> f64 {
        match self.model {
            ScalarModel::Gaussian => x - norm_quantile_closed(u),
            ScalarModel::Poisson => {
                if x == 0.0 {
                    0.0
                } else {
                    gamma_quantile_closed(u, x)
                }
            }
            ScalarModel::Exponential => x / -(-u).ln_1p(),
        }
    }

    /// Upper focal endpoint; defined on the closed interval `[0, 1]` as a limit.
    pub fn focal_upper(&self, x: f64, u: f64) -> f64 {
        match self.model {
            ScalarModel::Poisson => gamma_quantile_closed(u, x + 1.0),
            _ => self.focal_lower(x, u),
        }
    }

    /// `Θ_x(u)` as `(lower, upper)`; `u` must lie strictly inside `(0, 1)`.
    pub fn focal_interval(&self, x: f64, u: f64) -> Result<(f64, f64)> {
        self.check_observation(x)?;
        if !(u > 0.0 && u < 1.0) {
            return Err(domain(format!("auxiliary value must lie in (0, 1), got {u}")));
        }
        Ok((self.focal_lower(x, u), self.focal_upper(x, u)))
    }

    /// Parameter-space hull of `Θ_x(S)` for the auxiliary interval `S = [a, b]`.
    pub fn focal_hull(&self, x: f64, a: f64, b: f64) -> Result<(f64, f64)> {
        let (lo, hi) = match self.endpoint_trend() {
            EndpointTrend::Increasing => (self.focal_lower(x, a), self.focal_upper(x, b)),
            EndpointTrend::Decreasing => (self.focal_lower(x, b), self.focal_upper(x, a)),
        };
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(ImError::EmptyFocal { x });
        }
        Ok((lo, hi))
    }

    /// `{u : sup Θ_x(u) < θ}`.
    pub fn u_upper_below(&self, x: f64, theta: f64) -> UInterval {
        let (p_lo, _) = self.param_space();
        if theta <= p_lo {
            return UInterval::EMPTY;
        }
        if theta == f64::INFINITY {
            return UInterval::FULL;
        }
        match self.model {
            ScalarModel::Gaussian => UInterval::new(norm_cdf(x - theta), 1.0),
            ScalarModel::Poisson => UInterval::new(0.0, gamma_cdf(theta, x + 1.0).expect("valid gamma args")),
            ScalarModel::Exponential => UInterval::new(-(-x / theta).exp_m1(), 1.0),
        }
    }

    /// `{u : inf Θ_x(u) > θ}`.
    pub fn u_lower_above(&self, x: f64, theta: f64) -> UInterval {
        let (p_lo, _) = self.param_space();
        if theta < p_lo {
            return UInterval::FULL;
        }
        if theta == f64::INFINITY {
            return UInterval::EMPTY;
        }
        match self.model {
            ScalarModel::Gaussian => UInterval::new(0.0, norm_cdf(x - theta)),
            ScalarModel::Poisson => {
                if x == 0.0 || theta <= 0.0 {
                    // Lower endpoint is identically 0.
                    if theta < 0.0 {
                        UInterval::FULL
                    } else {
                        UInterval::EMPTY
                    }
                } else {
                    UInterval::new(gamma_cdf(theta, x).expect("valid gamma args"), 1.0)
                }
            }
            ScalarModel::Exponential => {
                if theta <= 0.0 {
                    UInterval::FULL
                } else {
                    UInterval::new(0.0, -(-x / theta).exp_m1())
                }
            }
        }
    }

    /// `{u : Θ_x(u) ⊆ A}` for the non-predicate assertion kinds.
    pub fn u_within(&self, x: f64, assertion: &Assertion) -> Result<USet> {
        Ok(match assertion {
            // A single u at most (continuous models), never for Poisson: a null set.
            Assertion::Point(_) => USet::empty(),
            Assertion::ComplementOfPoint(t) => USet::pair(self.u_upper_below(x, *t), self.u_lower_above(x, *t)),
            Assertion::LeftRay(t) => USet::single(self.u_upper_below(x, *t)),
            Assertion::RightRay(t) => USet::single(self.u_lower_above(x, *t)),
            Assertion::Interval(a, b) => USet::single(self.u_lower_above(x, *a).intersect(&self.u_upper_below(x, *b))),
            Assertion::Outside(a, b) => USet::pair(self.u_upper_below(x, *a), self.u_lower_above(x, *b)),
            Assertion::Predicate(_) => {
                return Err(ImError::Unsupported(
                    "predicate assertions have no auxiliary-space representation".into(),
                ))
            }
        })
    }

    /// Draws `X` from the model by pushing `u` through the association.
    pub fn simulate_from_u(&self, theta: f64, u: f64) -> f64 {
        match self.model {
            ScalarModel::Gaussian => theta + norm_quantile_closed(u),
            ScalarModel::Exponential => theta * -(-u).ln_1p(),
            ScalarModel::Poisson => {
                // Smallest x with F_θ(x) > 1 - u.
                let target = 1.0 - u;
                let mut x = 0u64;
                let mut pmf = (-theta).exp();
                if pmf > 0.0 {
                    let mut cdf = pmf;
                    while cdf <= target && x < 100_000 {
                        x += 1;
                        pmf *= theta / x as f64;
                        cdf += pmf;
                    }
                    return x as f64;
                }
                // e^{-θ} underflows: bisect on the gamma-based CDF instead.
                let (mut lo, mut hi) = (0u64, (theta + 20.0 * theta.sqrt() + 20.0) as u64);
                while lo < hi {
                    let mid = lo + (hi - lo) / 2;
                    if poisson_cdf(mid, theta).expect("θ > 0") > target {
                        hi = mid;
                    } else {
                        lo = mid + 1;
                    }
                }
                lo as f64
            }
        }
    }

    pub fn simulate(&self, theta: f64, stream: &mut RandomStream) -> f64 {
        self.simulate_from_u(theta, stream.uniform())
    }

    /// Sampling distribution function `P{X <= x | θ}`.
    pub fn sampling_cdf(&self, x: f64, theta: f64) -> f64 {
        match self.model {
            ScalarModel::Gaussian => norm_cdf(x - theta),
            ScalarModel::Exponential => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-x / theta).exp_m1()
                }
            }
            ScalarModel::Poisson => {
                if x < 0.0 {
                    0.0
                } else {
                    poisson_cdf(x.floor() as u64, theta).expect("θ > 0")
                }
            }
        }
    }
}
