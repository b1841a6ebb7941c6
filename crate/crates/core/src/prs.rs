//! Nested predictive random sets on the auxiliary space `[0, 1]`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::association::{UInterval, USet};
use crate::error::{domain, ImError, Result};
use crate::numeric::RandomStream;

/// Grid resolution used to answer sublevel-set queries for h-nested families.
const SUBLEVEL_GRID: usize = 1 << 14;
/// Size of the cached sample of `h(U)` behind an estimated miss probability.
pub const MISS_PROB_SAMPLES: usize = 1_000_000;
const MISS_PROB_SEED: u64 = 0x5eed_0001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrsFamily {
    Default,
    Lower,
    Upper,
    Singleton,
    HNested,
}

impl PrsFamily {
    pub fn name(self) -> &'static str {
        match self {
            PrsFamily::Default => "default",
            PrsFamily::Lower => "lower",
            PrsFamily::Upper => "upper",
            PrsFamily::Singleton => "singleton",
            PrsFamily::HNested => "h_nested",
        }
    }
}

impl fmt::Display for PrsFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Lower,
    Upper,
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

enum MissProb {
    Analytic(RealFn),
    /// Sorted draws of `h(U)`.
    Cached(Vec<f64>),
}

/// Precomputed structure for `{u : h(u) < c}` queries.
struct SublevelIndex {
    h: RealFn,
    /// `h` at grid midpoints `(i + 0.5) / N`.
    grid: Vec<f64>,
    /// Sparse table of argmin indices over dyadic windows.
    table: Vec<Vec<u32>>,
    miss: MissProb,
}

impl SublevelIndex {
    fn new(h: RealFn, analytic: Option<RealFn>) -> Self {
        let n = SUBLEVEL_GRID;
        let grid: Vec<f64> = (0..n).map(|i| h((i as f64 + 0.5) / n as f64)).collect();
        let mut table = vec![(0..n as u32).collect::<Vec<u32>>()];
        let mut width = 1;
        while 2 * width <= n {
            let prev = table.last().expect("non-empty");
            let level: Vec<u32> = (0..=n - 2 * width)
                .map(|i| {
                    let (a, b) = (prev[i], prev[i + width]);
                    if grid[b as usize] < grid[a as usize] {
                        b
                    } else {
                        a
                    }
                })
                .collect();
            table.push(level);
            width *= 2;
        }
        let miss = match analytic {
            Some(q) => MissProb::Analytic(q),
            None => {
                let mut stream = RandomStream::new(MISS_PROB_SEED, 0);
                let mut draws: Vec<f64> = (0..MISS_PROB_SAMPLES).map(|_| h(stream.uniform())).collect();
                draws.sort_by(f64::total_cmp);
                MissProb::Cached(draws)
            }
        };
        Self { h, grid, table, miss }
    }

    fn grid_argmin(&self, lo: usize, hi: usize) -> usize {
        let len = hi - lo + 1;
        let k = usize::BITS as usize - 1 - len.leading_zeros() as usize;
        let a = self.table[k][lo] as usize;
        let b = self.table[k][hi + 1 - (1 << k)] as usize;
        if self.grid[b] < self.grid[a] {
            b
        } else {
            a
        }
    }

    /// Minimum of `h` over `J` and a point attaining it; `None` when `J` is empty.
    fn min_on(&self, j: &UInterval) -> Option<(f64, f64)> {
        if j.is_empty() {
            return None;
        }
        let n = SUBLEVEL_GRID as f64;
        let mut best = (self.h(j.lo), j.lo);
        let at_hi = self.h(j.hi);
        if at_hi < best.0 {
            best = (at_hi, j.hi);
        }
        let i_lo = (j.lo * n - 0.5).ceil().max(0.0) as usize;
        let i_hi = (j.hi * n - 0.5).floor();
        if i_hi >= 0.0 {
            let i_hi = (i_hi as usize).min(SUBLEVEL_GRID - 1);
            if i_lo <= i_hi {
                let i = self.grid_argmin(i_lo, i_hi);
                if self.grid[i] < best.0 {
                    best = (self.grid[i], (i as f64 + 0.5) / n);
                }
            }
        }
        Some(best)
    }

    fn h(&self, u: f64) -> f64 {
        (self.h)(u)
    }

    /// `P{h(U) <= h(u)}`.
    fn miss_prob(&self, u: f64) -> f64 {
        match &self.miss {
            MissProb::Analytic(q) => q(u).clamp(0.0, 1.0),
            MissProb::Cached(sorted) => {
                let c = self.h(u);
                sorted.partition_point(|&s| s <= c) as f64 / sorted.len() as f64
            }
        }
    }
}

/// One realization of a predictive random set.
#[derive(Clone)]
pub enum RealizedSet {
    /// Closed interval `[lo, hi] ⊆ [0, 1]`.
    Interval { lo: f64, hi: f64 },
    /// `{u : h(u) < threshold}`.
    Sublevel {
        threshold: f64,
        index: Arc<SublevelIndexHandle>,
    },
}

/// Opaque shared handle to the sublevel query structure of an h-nested family.
pub struct SublevelIndexHandle(SublevelIndex);

impl fmt::Debug for RealizedSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RealizedSet::Interval { lo, hi } => write!(f, "Interval[{lo}, {hi}]"),
            RealizedSet::Sublevel { threshold, .. } => write!(f, "Sublevel(h < {threshold})"),
        }
    }
}

impl RealizedSet {
    pub fn contains(&self, u: f64) -> bool {
        match self {
            RealizedSet::Interval { lo, hi } => *lo <= u && u <= *hi,
            RealizedSet::Sublevel { threshold, index } => index.0.h(u) < *threshold,
        }
    }

    /// Whether the set meets the auxiliary interval `j`.
    pub fn meets(&self, j: &UInterval) -> bool {
        match self {
            RealizedSet::Interval { lo, hi } => !j.is_empty() && *lo <= j.hi && j.lo <= *hi,
            RealizedSet::Sublevel { threshold, index } => index.0.min_on(j).is_some_and(|(m, _)| m < *threshold),
        }
    }

    /// Whether the set lies inside `k` (up to null boundary sets).
    pub fn within(&self, k: &USet) -> bool {
        match self {
            RealizedSet::Interval { lo, hi } => k.pieces.iter().any(|p| p.lo <= *lo && *hi <= p.hi),
            RealizedSet::Sublevel { .. } => {
                let outside = k.complement();
                !outside.pieces.iter().any(|p| self.meets(&open_core(p)))
            }
        }
    }

    /// Interval endpoints, when the set is an interval.
    pub fn as_interval(&self) -> Option<(f64, f64)> {
        match self {
            RealizedSet::Interval { lo, hi } => Some((*lo, *hi)),
            RealizedSet::Sublevel { .. } => None,
        }
    }

    /// Inclusion `self ⊆ other`, checked exactly for intervals and on a grid otherwise.
    pub fn subset_of(&self, other: &RealizedSet) -> bool {
        match (self, other) {
            (RealizedSet::Interval { lo: a, hi: b }, RealizedSet::Interval { lo: c, hi: d }) => c <= a && b <= d,
            (RealizedSet::Sublevel { threshold: s, .. }, RealizedSet::Sublevel { threshold: t, .. }) => s <= t,
            _ => (0..=4096)
                .map(|i| i as f64 / 4096.0)
                .all(|u| !self.contains(u) || other.contains(u)),
        }
    }
}

/// Shrinks a closed complement piece by a hair so shared boundary points do not count.
fn open_core(p: &UInterval) -> UInterval {
    let eps = 1e-12;
    if p.hi - p.lo <= 4.0 * eps {
        return *p;
    }
    UInterval {
        lo: if p.lo > 0.0 { p.lo + eps } else { p.lo },
        hi: if p.hi < 1.0 { p.hi - eps } else { p.hi },
    }
}

/// A nested random subset of `[0, 1]` driven by `U ~ Unif(0, 1)`.
#[derive(Clone)]
pub struct PredictiveRandomSet {
    family: PrsFamily,
    index: Option<Arc<SublevelIndexHandle>>,
}

impl fmt::Debug for PredictiveRandomSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PredictiveRandomSet({})", self.family)
    }
}

/// `S = [0.5 - |U - 0.5|, 0.5 + |U - 0.5|]`.
pub fn default_prs() -> PredictiveRandomSet {
    PredictiveRandomSet {
        family: PrsFamily::Default,
        index: None,
    }
}

/// `S = [0, U]` (lower) or `S = [U, 1]` (upper).
pub fn one_sided_prs(side: Side) -> PredictiveRandomSet {
    PredictiveRandomSet {
        family: match side {
            Side::Lower => PrsFamily::Lower,
            Side::Upper => PrsFamily::Upper,
        },
        index: None,
    }
}

/// `S = {U}`; belief under this set is the fiducial probability.
pub fn singleton_prs() -> PredictiveRandomSet {
    PredictiveRandomSet {
        family: PrsFamily::Singleton,
        index: None,
    }
}

/// `S = {u : h(u) < h(U)}` with `Q(u) = P{h(U) <= h(u)}` estimated from cached draws.
pub fn h_nested_prs(h: impl Fn(f64) -> f64 + Send + Sync + 'static) -> PredictiveRandomSet {
    PredictiveRandomSet {
        family: PrsFamily::HNested,
        index: Some(Arc::new(SublevelIndexHandle(SublevelIndex::new(Arc::new(h), None)))),
    }
}

/// As [`h_nested_prs`] with a known miss probability `Q(u) = P{h(U) <= h(u)}`.
pub fn h_nested_prs_with_miss_prob(
    h: impl Fn(f64) -> f64 + Send + Sync + 'static,
    miss_prob: impl Fn(f64) -> f64 + Send + Sync + 'static,
) -> PredictiveRandomSet {
    PredictiveRandomSet {
        family: PrsFamily::HNested,
        index: Some(Arc::new(SublevelIndexHandle(SublevelIndex::new(
            Arc::new(h),
            Some(Arc::new(miss_prob)),
        )))),
    }
}

impl PredictiveRandomSet {
    pub fn family(&self) -> PrsFamily {
        self.family
    }

    pub fn draw_from_u(&self, u: f64) -> RealizedSet {
        match self.family {
            PrsFamily::Default => {
                let r = (u - 0.5).abs();
                RealizedSet::Interval {
                    lo: 0.5 - r,
                    hi: 0.5 + r,
                }
            }
            PrsFamily::Lower => RealizedSet::Interval { lo: 0.0, hi: u },
            PrsFamily::Upper => RealizedSet::Interval { lo: u, hi: 1.0 },
            PrsFamily::Singleton => RealizedSet::Interval { lo: u, hi: u },
            PrsFamily::HNested => {
                let index = Arc::clone(self.index.as_ref().expect("h-nested family carries an index"));
                RealizedSet::Sublevel {
                    threshold: index.0.h(u),
                    index,
                }
            }
        }
    }

    pub fn draw(&self, stream: &mut RandomStream) -> RealizedSet {
        self.draw_from_u(stream.uniform())
    }

    /// `Q_S(u) = P_S{S ∌ u}`.
    pub fn miss_prob(&self, u: f64) -> f64 {
        match self.family {
            PrsFamily::Default => (2.0 * u - 1.0).abs(),
            PrsFamily::Lower => u,
            PrsFamily::Upper => 1.0 - u,
            PrsFamily::Singleton => 1.0,
            PrsFamily::HNested => self.index.as_ref().expect("index").0.miss_prob(u),
        }
    }

    /// `P_S{S ⊆ [k.lo, k.hi]}` for a single auxiliary interval.
    fn prob_within_interval(&self, k: &UInterval) -> f64 {
        if k.is_empty() {
            return 0.0;
        }
        let clamp = |v: f64| v.clamp(0.0, 1.0);
        match self.family {
            PrsFamily::Default => 2.0 * (0.5 - k.lo).min(k.hi - 0.5).clamp(0.0, 0.5),
            PrsFamily::Lower => {
                if k.lo <= 0.0 {
                    clamp(k.hi)
                } else {
                    0.0
                }
            }
            PrsFamily::Upper => {
                if k.hi >= 1.0 {
                    1.0 - clamp(k.lo)
                } else {
                    0.0
                }
            }
            PrsFamily::Singleton => k.measure(),
            PrsFamily::HNested => self.prob_within(&USet::single(*k)),
        }
    }

    /// `P_S{S ⊆ K}`.
    ///
    /// Pieces are disjoint; touching pieces are separated by their shared boundary
    /// point. Interval families are connected, so the events add.
    /// For sublevel sets, `S ⊆ K` iff `h(U) <= min_{K^c} h`, whose probability
    /// is the miss probability at the minimizer.
    pub fn prob_within(&self, k: &USet) -> f64 {
        match self.family {
            PrsFamily::HNested => {
                let index = &self.index.as_ref().expect("index").0;
                let mut best: Option<(f64, f64)> = None;
                for piece in k.complement().pieces.iter().map(open_core) {
                    if let Some(m) = index.min_on(&piece) {
                        if best.is_none_or(|b| m.0 < b.0) {
                            best = Some(m);
                        }
                    }
                }
                match best {
                    None => 1.0,
                    Some((_, u)) => index.miss_prob(u),
                }
            }
            _ => k
                .pieces
                .iter()
                .map(|p| self.prob_within_interval(p))
                .sum::<f64>()
                .min(1.0),
        }
    }
}

impl FromStr for PredictiveRandomSet {
    type Err = ImError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "default" => Ok(default_prs()),
            "lower" => Ok(one_sided_prs(Side::Lower)),
            "upper" => Ok(one_sided_prs(Side::Upper)),
            "singleton" | "fiducial" => Ok(singleton_prs()),
            "score-balanced" => Err(ImError::Unsupported(
                "score-balanced sets are built per model; use the score_balance module".into(),
            )),
            other => Err(domain(format!("unknown predictive random set '{other}'"))),
        }
    }
}
