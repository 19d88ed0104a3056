//! Designer-side analysis: how much work a badge mechanism draws out of
//! users at equilibrium, and searches over mechanisms.

use rayon::prelude::*;
use serde::Serialize;

use crate::data::{BadgeId, Dataset};
use crate::error::{Error, Result};
use crate::game::{DynamicsConfig, Game, Profile};
use crate::inference::Abilities;
use crate::scalar::Scalar;

/// Anything that can report a user's ability on a badge.
pub trait AbilitySource<T> {
    fn ability(&self, user: usize, badge: usize) -> T;
}

impl<T: Scalar> AbilitySource<T> for Abilities<T> {
    fn ability(&self, user: usize, badge: usize) -> T {
        self.get(user, badge)
    }
}

impl<T: Scalar> AbilitySource<T> for Game<T> {
    fn ability(&self, user: usize, badge: usize) -> T {
        Game::ability(self, user, badge)
    }
}

/// Σ_i a_ij · ê_ij
pub fn badge_contribution<T: Scalar>(
    profile: &Profile<T>,
    abilities: &impl AbilitySource<T>,
    badge: usize,
) -> T {
    profile
        .iter()
        .enumerate()
        .map(|(u, s)| abilities.ability(u, badge) * s.effort(badge))
        .fold(T::zero(), |a, b| a + b)
}

/// Contribution of every badge, in one pass over the sparse strategies.
pub fn contributions<T: Scalar>(
    profile: &Profile<T>,
    abilities: &impl AbilitySource<T>,
    n_badges: usize,
) -> Vec<T> {
    let mut out = vec![T::zero(); n_badges];
    for (u, s) in profile.iter().enumerate() {
        for (b, e) in s.iter() {
            out[b] = out[b] + abilities.ability(u, b) * e;
        }
    }
    out
}

pub fn set_contribution<T: Scalar>(
    profile: &Profile<T>,
    abilities: &impl AbilitySource<T>,
    d: &Dataset,
    subset: &[BadgeId],
) -> Result<T> {
    let mut total = T::zero();
    for id in subset {
        let b = d.badge_index(id)?;
        total = total + badge_contribution(profile, abilities, b);
    }
    Ok(total)
}

/// Badges ordered by contribution, largest first, ties by id; at most `k`.
pub fn rank_categories<T: Scalar>(contribs: &[T], k: usize) -> Vec<(usize, T)> {
    let mut ranked: Vec<(usize, T)> = contribs.iter().copied().enumerate().collect();
    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });
    ranked.truncate(k);
    ranked
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint<T> {
    pub param: T,
    pub total: T,
    /// Whether the equilibrium behind this point converged, if one was run.
    pub converged: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepCurve<T> {
    pub param: String,
    pub points: Vec<SweepPoint<T>>,
}

impl<T: Scalar> SweepCurve<T> {
    pub fn totals(&self) -> Vec<T> {
        self.points.iter().map(|p| p.total).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("param,total_contribution\n");
        for p in &self.points {
            s.push_str(&format!("{},{}\n", p.param, p.total));
        }
        s
    }
}

fn check_increasing<T: Scalar>(xs: &[T], name: &'static str) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if xs.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::param(name, "values must be strictly increasing"));
    }
    Ok(())
}

/// Cumulative contribution of the top-K badges for each K. K larger than
/// the number of badges counts every badge.
pub fn sweep_topk<T: Scalar>(contribs: &[T], ks: &[usize]) -> Result<SweepCurve<T>> {
    let as_t: Vec<T> = ks.iter().map(|&k| T::count(k)).collect();
    check_increasing(&as_t, "ks")?;
    let ranked = rank_categories(contribs, contribs.len());
    let mut prefix = Vec::with_capacity(ranked.len() + 1);
    prefix.push(T::zero());
    for (_, c) in &ranked {
        let last = *prefix.last().unwrap();
        prefix.push(last + *c);
    }
    let points = ks
        .iter()
        .map(|&k| SweepPoint {
            param: T::count(k),
            total: prefix[k.min(ranked.len())],
            converged: None,
        })
        .collect();
    Ok(SweepCurve {
        param: "top_k".into(),
        points,
    })
}

/// Ranking rows as `rank,badge,contribution` CSV.
pub fn ranking_csv<T: Scalar>(ranked: &[(usize, T)], d: &Dataset) -> String {
    let mut s = String::from("rank,badge,contribution\n");
    for (r, (b, c)) in ranked.iter().enumerate() {
        s.push_str(&format!("{},{},{}\n", r + 1, d.badges()[*b].id, c));
    }
    s
}

/// A badge mechanism: thresholds for every badge and, optionally, the
/// subset of badges that exist at all.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Mechanism<T> {
    pub thresholds: Vec<T>,
    pub badges: Option<Vec<usize>>,
}

impl<T: Scalar> Mechanism<T> {
    pub fn uniform(theta: T, n_badges: usize) -> Self {
        Mechanism {
            thresholds: vec![theta; n_badges],
            badges: None,
        }
    }

    fn enabled(&self, b: usize) -> bool {
        self.badges.as_ref().is_none_or(|s| s.contains(&b))
    }

    /// Thresholds with disabled badges made unattainable.
    fn effective_thresholds(&self) -> Vec<T> {
        (0..self.thresholds.len())
            .map(|b| {
                if self.enabled(b) {
                    self.thresholds[b]
                } else {
                    T::infinity()
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ContributionReport<T> {
    pub per_badge: Vec<T>,
    pub total: T,
    pub mechanism: Mechanism<T>,
    pub converged: bool,
    pub rounds: usize,
}

/// Runs the dynamics under a mechanism and measures the contribution drawn
/// out of users.
pub fn evaluate_mechanism<T: Scalar>(
    game: &Game<T>,
    mechanism: &Mechanism<T>,
    cfg: &DynamicsConfig,
) -> Result<ContributionReport<T>> {
    if mechanism.thresholds.len() != game.n_badges() {
        return Err(Error::param(
            "thresholds",
            "one threshold per badge required",
        ));
    }
    if mechanism.thresholds.iter().any(|t| !(*t >= T::zero())) {
        return Err(Error::param("thresholds", "must be nonnegative"));
    }
    let g = game.with_thresholds(mechanism.effective_thresholds());
    let r = g.run_dynamics(cfg);
    let mut per_badge = contributions(&r.profile, &g, g.n_badges());
    for (b, c) in per_badge.iter_mut().enumerate() {
        if !mechanism.enabled(b) {
            *c = T::zero();
        }
    }
    let total = per_badge.iter().fold(T::zero(), |a, &b| a + b);
    Ok(ContributionReport {
        per_badge,
        total,
        mechanism: mechanism.clone(),
        converged: r.converged,
        rounds: r.rounds,
    })
}

/// Total contribution when every badge shares one threshold, for each
/// threshold in `thetas`. Points are independent equilibria computed in
/// parallel with the same seed.
pub fn sweep_thresholds<T: Scalar>(
    game: &Game<T>,
    thetas: &[T],
    cfg: &DynamicsConfig,
) -> Result<SweepCurve<T>> {
    check_increasing(thetas, "thetas")?;
    let reports: Vec<ContributionReport<T>> = thetas
        .par_iter()
        .map(|&t| evaluate_mechanism(game, &Mechanism::uniform(t, game.n_badges()), cfg))
        .collect::<Result<_>>()?;
    Ok(SweepCurve {
        param: "threshold".into(),
        points: thetas
            .iter()
            .zip(&reports)
            .map(|(&param, r)| SweepPoint {
                param,
                total: r.total,
                converged: Some(r.converged),
            })
            .collect(),
    })
}

/// Re-solves the game with only the `k` top-ranked badges available.
pub fn reequilibrate_topk<T: Scalar>(
    game: &Game<T>,
    contribs: &[T],
    k: usize,
    cfg: &DynamicsConfig,
) -> Result<ContributionReport<T>> {
    let mut keep: Vec<usize> = rank_categories(contribs, k)
        .into_iter()
        .map(|r| r.0)
        .collect();
    keep.sort_unstable();
    let mechanism = Mechanism {
        thresholds: game.thresholds().to_vec(),
        badges: Some(keep),
    };
    evaluate_mechanism(game, &mechanism, cfg)
}

#[derive(Clone, Debug, Serialize)]
pub struct MechanismSearch<T> {
    pub best: usize,
    pub reports: Vec<ContributionReport<T>>,
}

/// Evaluates every candidate and returns the one with the largest total
/// contribution; ties go to the earliest candidate.
pub fn search_dominant_mechanism<T: Scalar>(
    game: &Game<T>,
    candidates: &[Mechanism<T>],
    cfg: &DynamicsConfig,
) -> Result<MechanismSearch<T>> {
    if candidates.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let reports: Vec<ContributionReport<T>> = candidates
        .par_iter()
        .map(|m| evaluate_mechanism(game, m, cfg))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, r) in reports.iter().enumerate() {
        if r.total > reports[best].total {
            best = i;
        }
    }
    Ok(MechanismSearch { best, reports })
}
