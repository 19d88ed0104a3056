//! Inference of the latent game parameters from training data: effort
//! budgets, ability vectors and badge thresholds.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Min-max normalised achievement counts over users with at least one
/// achievement; users with none get 0. If every active user has the same
/// count they all get 1.
pub fn infer_effort_budget<T: Scalar>(train: &Dataset) -> Vec<T> {
    let mut counts = vec![0usize; train.n_users()];
    for e in train.events() {
        counts[e.user] += 1;
    }
    let active = || counts.iter().copied().filter(|&c| c > 0);
    let (Some(lo), Some(hi)) = (active().min(), active().max()) else {
        return vec![T::one(); counts.len()];
    };
    if lo == hi {
        return counts
            .iter()
            .map(|&c| if c > 0 { T::one() } else { T::zero() })
            .collect();
    }
    let span = T::count(hi - lo);
    counts
        .iter()
        .map(|&c| {
            if c > 0 {
                T::count(c - lo) / span
            } else {
                T::zero()
            }
        })
        .collect()
}

/// What an ability coordinate refers to.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AbilityGranularity {
    /// One coordinate per badge.
    #[default]
    Badge,
    /// One coordinate per level chain; all levels share their category's ability.
    Category,
}

/// Per-user ability vectors over ability groups.
#[derive(Clone, Debug, PartialEq)]
pub struct Abilities<T> {
    /// Badge index -> ability group.
    pub group_of: Vec<usize>,
    pub n_groups: usize,
    /// User-major, `n_groups` entries per user, each row summing to one.
    pub vectors: Vec<Vec<T>>,
}

impl<T: Scalar> Abilities<T> {
    /// a_{i,j}
    pub fn get(&self, user: usize, badge: usize) -> T {
        self.vectors[user][self.group_of[badge]]
    }

    pub fn row(&self, user: usize) -> &[T] {
        &self.vectors[user]
    }
}

fn ability_groups(train: &Dataset, granularity: AbilityGranularity) -> (Vec<usize>, usize) {
    match granularity {
        AbilityGranularity::Badge => ((0..train.n_badges()).collect(), train.n_badges()),
        AbilityGranularity::Category => {
            let roots = train.level_roots();
            let mut ids: BTreeMap<usize, usize> = BTreeMap::new();
            for &r in &roots {
                let n = ids.len();
                ids.entry(r).or_insert(n);
            }
            // Renumber in root order so group ids are deterministic.
            let order: BTreeMap<usize, usize> =
                ids.keys().enumerate().map(|(g, &r)| (r, g)).collect();
            (roots.iter().map(|r| order[r]).collect(), order.len())
        }
    }
}

fn l1_normalise<T: Scalar>(v: &mut [T]) {
    let s: T = v.iter().copied().sum();
    if s > T::zero() {
        for x in v.iter_mut() {
            *x = *x / s;
        }
    } else if !v.is_empty() {
        let u = T::one() / T::count(v.len());
        v.fill(u);
    }
}

/// Blend of observed achievement shares and a seeded random vector:
/// `mix · a_infer + (1 - mix) · a_random`, renormalised to unit L1 norm.
pub fn infer_ability<T: Scalar>(
    train: &Dataset,
    mix: T,
    seed: u64,
    granularity: AbilityGranularity,
) -> Result<Abilities<T>> {
    if !(mix >= T::zero() && mix <= T::one()) {
        return Err(Error::param("ability_mix", "must lie in [0, 1]"));
    }
    let (group_of, n_groups) = ability_groups(train, granularity);
    let mut counts = vec![vec![T::zero(); n_groups]; train.n_users()];
    for e in train.events() {
        let g = group_of[e.badge];
        counts[e.user][g] = counts[e.user][g] + T::one();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vectors = counts
        .into_iter()
        .map(|mut inferred| {
            l1_normalise(&mut inferred);
            let mut random: Vec<T> = (0..n_groups).map(|_| T::lit(rng.gen::<f64>())).collect();
            l1_normalise(&mut random);
            let mut a: Vec<T> = inferred
                .iter()
                .zip(&random)
                .map(|(&i, &r)| mix * i + (T::one() - mix) * r)
                .collect();
            l1_normalise(&mut a);
            a
        })
        .collect();
    Ok(Abilities {
        group_of,
        n_groups,
        vectors,
    })
}

/// Per-achiever raw threshold score. With `p` badges achieved in total and
/// the badge at 1-based position `q`:
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdMode {
    /// `q / p`: later achievements score higher.
    #[default]
    IndexRatio,
    /// `p / q`.
    TotalOverIndex,
}

impl std::str::FromStr for ThresholdMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "index-ratio" => Ok(ThresholdMode::IndexRatio),
            "total-over-index" => Ok(ThresholdMode::TotalOverIndex),
            _ => Err(Error::param(
                "threshold_mode",
                format!("unknown mode `{s}`"),
            )),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ThresholdConfig {
    pub mode: ThresholdMode,
    pub eta_cap: f64,
    /// Threshold assigned to badges nobody achieved in training.
    pub max_threshold: f64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig {
            mode: ThresholdMode::IndexRatio,
            eta_cap: 10.0,
            max_threshold: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdEstimate<T> {
    pub theta: Vec<T>,
    pub eta: Vec<T>,
    /// Unscaled average raw score per badge.
    pub base: Vec<T>,
}

/// Largest scaling that keeps every achiever able to reach the threshold
/// with their whole budget. Returns `(eta, theta)`.
pub fn scale_threshold<T: Scalar>(base: T, capacities: &[T], eta_cap: T) -> (T, T) {
    if base <= T::zero() {
        return (eta_cap, T::zero());
    }
    let cap_min = capacities.iter().copied().fold(T::infinity(), T::min);
    if cap_min / base <= eta_cap {
        // Set θ to the binding capacity itself so a·E ≥ θ holds exactly.
        (cap_min / base, cap_min)
    } else {
        let theta = (eta_cap * base).min(cap_min);
        (eta_cap, theta)
    }
}

pub fn estimate_thresholds<T: Scalar>(
    train: &Dataset,
    budgets: &[T],
    abilities: &Abilities<T>,
    cfg: &ThresholdConfig,
) -> ThresholdEstimate<T> {
    let m = train.n_badges();
    let mut raw: Vec<Vec<(usize, T)>> = vec![Vec::new(); m];
    for (u, h) in train.histories().into_iter().enumerate() {
        let p = T::count(h.len());
        for (i, &b) in h.iter().enumerate() {
            let q = T::count(i + 1);
            let score = match cfg.mode {
                ThresholdMode::IndexRatio => q / p,
                ThresholdMode::TotalOverIndex => p / q,
            };
            raw[b].push((u, score));
        }
    }
    let eta_cap = T::lit(cfg.eta_cap);
    let mut out = ThresholdEstimate {
        theta: Vec::with_capacity(m),
        eta: Vec::with_capacity(m),
        base: Vec::with_capacity(m),
    };
    for (b, scores) in raw.iter().enumerate() {
        if scores.is_empty() {
            out.theta.push(T::lit(cfg.max_threshold));
            out.eta.push(T::one());
            out.base.push(T::zero());
            continue;
        }
        let base = scores.iter().map(|s| s.1).sum::<T>() / T::count(scores.len());
        let caps: Vec<T> = scores
            .iter()
            .map(|&(u, _)| abilities.get(u, b) * budgets[u])
            .collect();
        let (eta, theta) = scale_threshold(base, &caps, eta_cap);
        out.theta.push(theta);
        out.eta.push(eta);
        out.base.push(base);
    }
    out
}

#[derive(Clone, Debug)]
pub struct InferenceConfig {
    pub ability_mix: f64,
    pub seed: u64,
    pub granularity: AbilityGranularity,
    pub threshold: ThresholdConfig,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig {
            ability_mix: 0.85,
            seed: 0,
            granularity: AbilityGranularity::Badge,
            threshold: ThresholdConfig::default(),
        }
    }
}

/// Everything the game needs besides values.
#[derive(Clone, Debug, PartialEq)]
pub struct InferredParams<T> {
    pub budgets: Vec<T>,
    pub abilities: Abilities<T>,
    pub thresholds: Vec<T>,
    pub eta: Vec<T>,
}

impl<T: Scalar> InferredParams<T> {
    pub fn infer(train: &Dataset, cfg: &InferenceConfig) -> Result<Self> {
        let budgets = infer_effort_budget(train);
        let abilities = infer_ability(train, T::lit(cfg.ability_mix), cfg.seed, cfg.granularity)?;
        let est = estimate_thresholds(train, &budgets, &abilities, &cfg.threshold);
        Ok(InferredParams {
            budgets,
            abilities,
            thresholds: est.theta,
            eta: est.eta,
        })
    }

    /// Same parameters with every threshold replaced.
    pub fn with_uniform_threshold(&self, theta: T) -> Self {
        InferredParams {
            thresholds: vec![theta; self.thresholds.len()],
            ..self.clone()
        }
    }

    /// JSON export keyed by user and badge ids.
    pub fn to_json(&self, d: &Dataset) -> serde_json::Value {
        let badge = |b: usize| d.badges()[b].id.0.clone();
        let group_key: BTreeMap<usize, String> = self
            .abilities
            .group_of
            .iter()
            .enumerate()
            .rev()
            .map(|(b, &g)| (g, badge(b)))
            .collect();
        let users = d.users();
        let budgets: BTreeMap<_, _> = users
            .iter()
            .zip(&self.budgets)
            .map(|(u, v)| (u.0.clone(), v.as_f64()))
            .collect();
        let abilities: BTreeMap<_, BTreeMap<_, _>> = users
            .iter()
            .zip(&self.abilities.vectors)
            .map(|(u, row)| {
                let r = row
                    .iter()
                    .enumerate()
                    .map(|(g, v)| (group_key[&g].clone(), v.as_f64()))
                    .collect();
                (u.0.clone(), r)
            })
            .collect();
        let per_badge = |xs: &[T]| -> BTreeMap<String, f64> {
            xs.iter()
                .enumerate()
                .map(|(b, v)| (badge(b), v.as_f64()))
                .collect()
        };
        let groups: BTreeMap<_, _> = self
            .abilities
            .group_of
            .iter()
            .enumerate()
            .map(|(b, g)| (badge(b), group_key[g].clone()))
            .collect();
        serde_json::json!({
            "budgets": budgets,
            "abilities": abilities,
            "ability_groups": groups,
            "thresholds": per_badge(&self.thresholds),
            "eta": per_badge(&self.eta),
        })
    }

    /// Reads the layout written by [`InferredParams::to_json`].
    pub fn from_json(v: &serde_json::Value, d: &Dataset) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            budgets: BTreeMap<String, f64>,
            abilities: BTreeMap<String, BTreeMap<String, f64>>,
            ability_groups: BTreeMap<String, String>,
            thresholds: BTreeMap<String, f64>,
            eta: BTreeMap<String, f64>,
        }
        let raw: Raw = serde_json::from_value(v.clone())?;
        let m = d.n_badges();
        let mut keys: Vec<String> = raw.ability_groups.values().cloned().collect();
        keys.sort();
        keys.dedup();
        let gix = |k: &str| keys.binary_search_by(|x| x.as_str().cmp(k)).ok();
        let mut group_of = vec![0; m];
        let mut thresholds = vec![T::zero(); m];
        let mut eta = vec![T::one(); m];
        for (b, badge) in d.badges().iter().enumerate() {
            let id = &badge.id.0;
            let missing = || Error::param("params", format!("missing entries for badge {id}"));
            group_of[b] = raw
                .ability_groups
                .get(id)
                .and_then(|k| gix(k))
                .ok_or_else(missing)?;
            thresholds[b] = T::lit(*raw.thresholds.get(id).ok_or_else(missing)?);
            eta[b] = T::lit(raw.eta.get(id).copied().unwrap_or(1.0));
        }
        let mut budgets = Vec::with_capacity(d.n_users());
        let mut vectors = Vec::with_capacity(d.n_users());
        for u in d.users() {
            let missing = || Error::param("params", format!("missing entries for user {u}"));
            budgets.push(T::lit(*raw.budgets.get(&u.0).ok_or_else(missing)?));
            let row = raw.abilities.get(&u.0).ok_or_else(missing)?;
            let mut v = vec![T::zero(); keys.len()];
            for (k, a) in row {
                v[gix(k).ok_or_else(missing)?] = T::lit(*a);
            }
            vectors.push(v);
        }
        Ok(InferredParams {
            budgets,
            abilities: Abilities {
                group_of,
                n_groups: keys.len(),
                vectors,
            },
            thresholds,
            eta,
        })
    }
}
