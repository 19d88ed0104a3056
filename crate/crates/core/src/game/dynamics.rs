//! Random-order best-response dynamics over the social graph.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, SocialGraph};
use crate::inference::InferredParams;
use crate::scalar::Scalar;
use crate::values::{PeerLeadershipModel, ValueModel};

use super::knapsack::best_response;
use super::utility::{overall_utility, wins, Strategy};

/// When users see the peer ratios produced by other users' updates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RefreshMode {
    /// Immediately after each update.
    #[default]
    PerUpdate,
    /// Only at the start of each round.
    PerRound,
}

impl std::str::FromStr for RefreshMode {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "per-update" => Ok(RefreshMode::PerUpdate),
            "per-round" => Ok(RefreshMode::PerRound),
            _ => Err(crate::Error::param(
                "refresh",
                format!("unknown mode `{s}`"),
            )),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DynamicsConfig {
    pub max_rounds: usize,
    pub seed: u64,
    pub resolution: f64,
    pub refresh: RefreshMode,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        DynamicsConfig {
            max_rounds: 50,
            seed: 0,
            resolution: 1e-3,
            refresh: RefreshMode::PerUpdate,
        }
    }
}

/// One strategy per user.
pub type Profile<T> = Vec<Strategy<T>>;

/// The game between users: fixed value components, abilities, budgets and
/// thresholds, with the peer leadership term left to depend on the
/// profile.
#[derive(Clone, Debug)]
pub struct Game<T> {
    n: usize,
    m: usize,
    graph: SocialGraph,
    peer: PeerLeadershipModel<T>,
    beta: T,
    /// α·v_pi + (1-α-β)·v_nt, user-major.
    fixed: Vec<T>,
    /// Per-badge ability, user-major.
    ability: Vec<T>,
    budgets: Vec<T>,
    thresholds: Vec<T>,
}

impl<T: Scalar> Game<T> {
    pub fn new(model: &ValueModel<T>, params: &InferredParams<T>) -> Self {
        let n = params.budgets.len();
        let m = params.thresholds.len();
        let w = model.weights;
        let gamma = w.trend_weight();
        let mut fixed = Vec::with_capacity(n * m);
        let mut ability = Vec::with_capacity(n * m);
        for u in 0..n {
            let trend = model.network_trend_row(u);
            for (b, &nt) in trend.iter().enumerate() {
                fixed.push(w.alpha * model.personal_interest(u, b) + gamma * nt);
                ability.push(params.abilities.get(u, b));
            }
        }
        Game {
            n,
            m,
            graph: model.graph().clone(),
            peer: model.peer.clone(),
            beta: w.beta,
            fixed,
            ability,
            budgets: params.budgets.clone(),
            thresholds: params.thresholds.clone(),
        }
    }

    /// Builds a game from explicit parts. `fixed` and `ability` are
    /// user-major `n × m` matrices; `fixed` holds the profile-independent
    /// part of every value and `beta` scales the peer leadership term.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        graph: SocialGraph,
        peer: PeerLeadershipModel<T>,
        beta: T,
        fixed: Vec<T>,
        ability: Vec<T>,
        budgets: Vec<T>,
        thresholds: Vec<T>,
    ) -> Self {
        let (n, m) = (budgets.len(), thresholds.len());
        assert_eq!(graph.n_users(), n);
        assert_eq!(fixed.len(), n * m);
        assert_eq!(ability.len(), n * m);
        Game {
            n,
            m,
            graph,
            peer,
            beta,
            fixed,
            ability,
            budgets,
            thresholds,
        }
    }

    /// Copy of the game with different thresholds.
    pub fn with_thresholds(&self, thresholds: Vec<T>) -> Self {
        assert_eq!(thresholds.len(), self.m);
        Game {
            thresholds,
            ..self.clone()
        }
    }

    pub fn n_users(&self) -> usize {
        self.n
    }

    pub fn n_badges(&self) -> usize {
        self.m
    }

    pub fn ability_row(&self, u: usize) -> &[T] {
        &self.ability[u * self.m..(u + 1) * self.m]
    }

    pub fn ability(&self, u: usize, b: usize) -> T {
        self.ability[u * self.m + b]
    }

    pub fn budget(&self, u: usize) -> T {
        self.budgets[u]
    }

    pub fn thresholds(&self) -> &[T] {
        &self.thresholds
    }

    /// Whether user `u` holds badge `b` under strategy `s`.
    pub fn holds(&self, u: usize, b: usize, s: &Strategy<T>) -> bool {
        wins(s.effort(b), self.thresholds[b], self.ability(u, b))
    }

    fn value_with_count(&self, u: usize, b: usize, holders: u32) -> T {
        let deg = self.graph.neighbors(u).len();
        let ratio = if deg == 0 {
            T::zero()
        } else {
            T::count(holders as usize) / T::count(deg)
        };
        self.fixed[u * self.m + b] + self.beta * self.peer.value(ratio)
    }

    /// Comprehensive values of every badge for `u`, with peer ratios read
    /// from the projected holdings of `u`'s neighbours in `profile`.
    pub fn values_against(&self, u: usize, profile: &Profile<T>) -> Vec<T> {
        (0..self.m)
            .map(|b| {
                let holders = self
                    .graph
                    .neighbors(u)
                    .iter()
                    .filter(|&&v| self.holds(v, b, &profile[v]))
                    .count();
                self.value_with_count(u, b, holders as u32)
            })
            .collect()
    }

    pub fn best_response(&self, u: usize, values: &[T], resolution: T) -> Strategy<T> {
        best_response(
            values,
            self.ability_row(u),
            self.budgets[u],
            &self.thresholds,
            resolution,
        )
    }

    /// Utility of `u` playing `s` against `profile`.
    pub fn utility_against(&self, u: usize, s: &Strategy<T>, profile: &Profile<T>) -> T {
        overall_utility(
            s,
            &self.values_against(u, profile),
            &self.thresholds,
            self.ability_row(u),
        )
    }

    /// Projected holdings of every user, user-major.
    pub fn indicators(&self, profile: &Profile<T>) -> Vec<bool> {
        let mut out = Vec::with_capacity(self.n * self.m);
        for (u, s) in profile.iter().enumerate() {
            out.extend((0..self.m).map(|b| self.holds(u, b, s)));
        }
        out
    }

    fn neighbor_counts(&self, held: &[bool]) -> Vec<u32> {
        let mut counts = vec![0u32; self.n * self.m];
        for u in 0..self.n {
            for &v in self.graph.neighbors(u) {
                for b in 0..self.m {
                    counts[u * self.m + b] += held[v * self.m + b] as u32;
                }
            }
        }
        counts
    }

    /// Iterates sequential best responses in a fresh random order each
    /// round, starting from the all-zero profile, until a round changes
    /// nothing or `cfg.max_rounds` is reached.
    pub fn run_dynamics(&self, cfg: &DynamicsConfig) -> EquilibriumResult<T> {
        let (n, m) = (self.n, self.m);
        let resolution = T::lit(cfg.resolution);
        let mut profile: Profile<T> = vec![Strategy::zero(); n];
        let mut held = self.indicators(&profile);
        let mut counts = self.neighbor_counts(&held);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut order: Vec<usize> = (0..n).collect();
        let mut changes = Vec::new();
        let mut converged = false;
        let mut values = vec![T::zero(); m];
        for _ in 0..cfg.max_rounds {
            order.shuffle(&mut rng);
            let frozen = (cfg.refresh == RefreshMode::PerRound).then(|| counts.clone());
            let mut changed = 0;
            for &u in &order {
                let seen = frozen.as_ref().unwrap_or(&counts);
                for (b, v) in values.iter_mut().enumerate() {
                    *v = self.value_with_count(u, b, seen[u * m + b]);
                }
                let s = self.best_response(u, &values, resolution);
                if s == profile[u] {
                    continue;
                }
                changed += 1;
                for b in 0..m {
                    let now = self.holds(u, b, &s);
                    let before = std::mem::replace(&mut held[u * m + b], now);
                    if now != before {
                        for &v in self.graph.neighbors(u) {
                            let c = &mut counts[v * m + b];
                            *c = if now { *c + 1 } else { *c - 1 };
                        }
                    }
                }
                profile[u] = s;
            }
            changes.push(changed);
            if changed == 0 {
                converged = true;
                break;
            }
        }
        EquilibriumResult {
            profile,
            rounds: changes.len(),
            converged,
            changes_per_round: changes,
            resolution: cfg.resolution,
        }
    }

    /// Recomputes every user's best response with the others held fixed and
    /// reports the largest utility gain available.
    pub fn epsilon_nash_check(&self, result: &EquilibriumResult<T>, epsilon: T) -> NashReport {
        let resolution = T::lit(result.resolution);
        let mut worst = (0.0f64, None);
        for u in 0..self.n {
            let values = self.values_against(u, &result.profile);
            let current = overall_utility(
                &result.profile[u],
                &values,
                &self.thresholds,
                self.ability_row(u),
            );
            let br = self.best_response(u, &values, resolution);
            let best = overall_utility(&br, &values, &self.thresholds, self.ability_row(u));
            let gain = (best - current).as_f64();
            if gain > worst.0 {
                worst = (gain, Some(u));
            }
        }
        let tolerance = 1e-9;
        NashReport {
            max_improvement: worst.0,
            worst_user: worst.1,
            epsilon: epsilon.as_f64(),
            passes: worst.0 <= epsilon.as_f64() + tolerance,
        }
    }

    /// Classifies how `s` compares with `other` for user `u` across a set
    /// of opponent profiles.
    pub fn compare_strategies(
        &self,
        u: usize,
        s: &Strategy<T>,
        other: &Strategy<T>,
        opponents: &[Profile<T>],
    ) -> Domination {
        let a: Vec<T> = opponents
            .iter()
            .map(|p| self.utility_against(u, s, p))
            .collect();
        let b: Vec<T> = opponents
            .iter()
            .map(|p| self.utility_against(u, other, p))
            .collect();
        classify_domination(&a, &b)
    }
}

/// How one strategy's utilities compare with another's, opponent profile
/// by opponent profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domination {
    /// Better against every profile.
    Strict,
    /// Never worse and better against at least one.
    Weak,
    /// Never worse.
    VeryWeak,
    None,
}

pub fn classify_domination<T: Scalar>(s: &[T], other: &[T]) -> Domination {
    assert_eq!(s.len(), other.len());
    if s.iter().zip(other).any(|(a, b)| a < b) || s.is_empty() {
        return Domination::None;
    }
    if s.iter().zip(other).all(|(a, b)| a > b) {
        Domination::Strict
    } else if s.iter().zip(other).any(|(a, b)| a > b) {
        Domination::Weak
    } else {
        Domination::VeryWeak
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NashReport {
    pub max_improvement: f64,
    pub worst_user: Option<usize>,
    pub epsilon: f64,
    pub passes: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumResult<T> {
    pub profile: Profile<T>,
    pub rounds: usize,
    pub converged: bool,
    pub changes_per_round: Vec<usize>,
    pub resolution: f64,
}

impl<T: Scalar> EquilibriumResult<T> {
    /// Sparse strategies, holder counts and convergence metadata keyed by
    /// ids.
    pub fn to_json(&self, game: &Game<T>, d: &Dataset) -> serde_json::Value {
        let badge = |b: usize| d.badges()[b].id.0.clone();
        let strategies: BTreeMap<String, BTreeMap<String, f64>> = self
            .profile
            .iter()
            .enumerate()
            .filter(|(_, s)| !s.is_zero())
            .map(|(u, s)| {
                (
                    d.users()[u].0.clone(),
                    s.iter().map(|(b, e)| (badge(b), e.as_f64())).collect(),
                )
            })
            .collect();
        let held = game.indicators(&self.profile);
        let m = game.n_badges();
        let holders: BTreeMap<String, usize> = (0..m)
            .map(|b| {
                (
                    badge(b),
                    (0..game.n_users()).filter(|&u| held[u * m + b]).count(),
                )
            })
            .collect();
        let total_held: usize = holders.values().sum();
        serde_json::json!({
            "converged": self.converged,
            "rounds": self.rounds,
            "changes_per_round": self.changes_per_round,
            "resolution": self.resolution,
            "strategies": strategies,
            "indicators": {
                "total_held": total_held,
                "holders_per_badge": holders,
            },
        })
    }
}

/// Convenience wrapper building the game and running it.
pub fn run_dynamics<T: Scalar>(
    model: &ValueModel<T>,
    params: &InferredParams<T>,
    cfg: &DynamicsConfig,
) -> EquilibriumResult<T> {
    Game::new(model, params).run_dynamics(cfg)
}
