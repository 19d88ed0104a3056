//! Peer leadership value: the fraction of a user's peers already holding a
//! badge, mapped through a fitted curve.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, SocialGraph};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const N_BINS: usize = 11;

/// Achievement timestamps keyed by (user, badge).
#[derive(Clone, Debug, Default)]
pub struct AchievementIndex {
    at: HashMap<(usize, usize), i64>,
}

impl AchievementIndex {
    pub fn new(d: &Dataset) -> Self {
        AchievementIndex {
            at: d.achieved_at(),
        }
    }

    pub fn achieved_before(&self, u: usize, b: usize, t: i64) -> bool {
        self.at.get(&(u, b)).is_some_and(|&s| s < t)
    }
}

/// Share of `u`'s undirected neighbours who achieved `b` strictly before `t`.
/// Zero for users without neighbours.
pub fn peer_ratio<T: Scalar>(
    graph: &SocialGraph,
    index: &AchievementIndex,
    u: usize,
    b: usize,
    t: i64,
) -> T {
    let nbrs = graph.neighbors(u);
    if nbrs.is_empty() {
        return T::zero();
    }
    let prior = nbrs
        .iter()
        .filter(|&&v| index.achieved_before(v, b, t))
        .count();
    T::count(prior) / T::count(nbrs.len())
}

/// Maps a ratio to its bin: ratios rounding to k/10 land in bin k.
pub fn ratio_bin<T: Scalar>(ratio: T) -> usize {
    let k = (ratio * T::lit(10.0)).round().to_usize().unwrap_or(0);
    k.min(N_BINS - 1)
}

/// Eleven curve samples at x_k = k/10.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeerCurvePoints<T> {
    ys: Vec<T>,
}

impl<T: Scalar> PeerCurvePoints<T> {
    /// Arbitrary finite samples (for fitting analytic curves).
    pub fn from_values(ys: Vec<T>) -> Result<Self> {
        if ys.len() != N_BINS {
            return Err(Error::param(
                "points",
                format!("expected {N_BINS} values, got {}", ys.len()),
            ));
        }
        if ys.iter().any(|y| !y.is_finite()) {
            return Err(Error::param("points", "values must be finite"));
        }
        Ok(PeerCurvePoints { ys })
    }

    /// Normalised histogram; the values sum to one.
    pub fn from_counts(counts: &[usize; N_BINS]) -> Result<Self> {
        let total: usize = counts.iter().sum();
        if total == 0 {
            return Err(Error::EmptyDataset);
        }
        let t = T::count(total);
        Ok(PeerCurvePoints {
            ys: counts.iter().map(|&c| T::count(c) / t).collect(),
        })
    }

    pub fn x(k: usize) -> T {
        T::count(k) / T::lit(10.0)
    }

    pub fn ys(&self) -> &[T] {
        &self.ys
    }

    pub fn points(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.ys.iter().enumerate().map(|(k, &y)| (Self::x(k), y))
    }
}

/// Histogram of peer ratios at every training achievement, normalised
/// globally to sum to one.
pub fn empirical_ratio_curve<T: Scalar>(train: &Dataset) -> Result<PeerCurvePoints<T>> {
    if train.events().is_empty() {
        return Err(Error::EmptyDataset);
    }
    let index = AchievementIndex::new(train);
    let mut counts = [0usize; N_BINS];
    for e in train.events() {
        let r: T = peer_ratio(train.graph(), &index, e.user, e.badge, e.ts);
        counts[ratio_bin(r)] += 1;
    }
    PeerCurvePoints::from_counts(&counts)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PeerFamily {
    Linear,
    Quadratic,
    Cubic,
    Exponential,
}

impl PeerFamily {
    pub const ALL: [PeerFamily; 4] = [
        PeerFamily::Linear,
        PeerFamily::Quadratic,
        PeerFamily::Cubic,
        PeerFamily::Exponential,
    ];

    pub fn n_coefficients(self) -> usize {
        match self {
            PeerFamily::Linear => 2,
            PeerFamily::Quadratic | PeerFamily::Exponential => 3,
            PeerFamily::Cubic => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PeerFamily::Linear => "linear",
            PeerFamily::Quadratic => "quadratic",
            PeerFamily::Cubic => "cubic",
            PeerFamily::Exponential => "exponential",
        }
    }
}

impl fmt::Display for PeerFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PeerFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PeerFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::param("family", format!("unknown peer family `{s}`")))
    }
}

/// Fitted peer curve. Polynomial coefficients run from the highest power
/// down to the constant; the exponential family is `a·exp(-b·x) + c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeerLeadershipModel<T> {
    pub family: PeerFamily,
    pub omega: Vec<T>,
}

impl<T: Scalar> PeerLeadershipModel<T> {
    pub fn new(family: PeerFamily, omega: Vec<T>) -> Result<Self> {
        if omega.len() != family.n_coefficients() {
            return Err(Error::param(
                "omega",
                format!("{family} needs {} coefficients", family.n_coefficients()),
            ));
        }
        if omega.iter().any(|w| !w.is_finite()) {
            return Err(Error::param("omega", "coefficients must be finite"));
        }
        Ok(PeerLeadershipModel { family, omega })
    }

    /// Raw curve value, unclamped.
    pub fn curve(&self, x: T) -> T {
        curve(self.family, &self.omega, x)
    }

    /// Peer leadership value at a ratio; negative curve values clamp to 0.
    pub fn value(&self, ratio: T) -> T {
        self.curve(ratio).max(T::zero())
    }

    /// Discretised L1 objective over the eleven points.
    pub fn objective(&self, points: &PeerCurvePoints<T>) -> T {
        l1_objective(self.family, &self.omega, points)
    }
}

pub fn eval_peer_value<T: Scalar>(model: &PeerLeadershipModel<T>, ratio: T) -> T {
    model.value(ratio)
}

pub(crate) fn curve<T: Scalar>(family: PeerFamily, w: &[T], x: T) -> T {
    match family {
        PeerFamily::Exponential => w[0] * (-w[1] * x).exp() + w[2],
        _ => w.iter().fold(T::zero(), |acc, &c| acc * x + c),
    }
}

pub(crate) fn l1_objective<T: Scalar>(
    family: PeerFamily,
    w: &[T],
    points: &PeerCurvePoints<T>,
) -> T {
    points
        .points()
        .map(|(x, y)| (curve(family, w, x) - y).abs())
        .sum()
}
