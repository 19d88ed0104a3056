//! Link-prediction style evaluation of value and utility scorers.

use rayon::prelude::*;
use serde::Serialize;

use crate::data::{sample_negatives, temporal_split, Dataset};
use crate::error::{Error, Result};
use crate::game::min_effort;
use crate::inference::{InferenceConfig, InferredParams};
use crate::scalar::Scalar;
use crate::values::{ValueModel, ValueModelConfig};

/// Keeps badges with at least `min_achievers` distinct achievers.
pub fn filter_rare_badges(d: &Dataset, min_achievers: usize) -> Dataset {
    let counts: Vec<usize> = d.achievers().iter().map(Vec::len).collect();
    d.restrict_badges(|b| counts[b] >= min_achievers)
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half. Computed from midranks in integer arithmetic so it
/// equals the all-pairs count exactly.
pub fn auc(pos: &[f64], neg: &[f64]) -> Result<f64> {
    if pos.is_empty() {
        return Err(Error::EmptyScores("positive"));
    }
    if neg.is_empty() {
        return Err(Error::EmptyScores("negative"));
    }
    if pos.iter().chain(neg).any(|s| s.is_nan()) {
        return Err(Error::param("scores", "NaN score"));
    }
    let mut all: Vec<(f64, bool)> = pos
        .iter()
        .map(|&s| (s, true))
        .chain(neg.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Twice the rank sum of the positives; tied blocks share the doubled
    // midrank `first + last`.
    let mut twice_rank_sum: u128 = 0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let twice_mid = (i + 1 + j + 1) as u128;
        let n_pos = all[i..=j].iter().filter(|x| x.1).count() as u128;
        twice_rank_sum += twice_mid * n_pos;
        i = j + 1;
    }
    let (p, n) = (pos.len() as u128, neg.len() as u128);
    let numerator = twice_rank_sum - p * (p + 1);
    Ok(numerator as f64 / (2 * p * n) as f64)
}

/// Scores a (user, badge) pair; larger means more likely achieved.
pub trait Scorer: Sync {
    fn name(&self) -> String;
    fn score(&self, user: usize, badge: usize) -> f64;
}

/// The built-in scorers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ScorerKind {
    PersonalInterest,
    PeerLeadership,
    NetworkTrend,
    Comprehensive,
    Utility,
}

impl ScorerKind {
    pub const ALL: [ScorerKind; 5] = [
        ScorerKind::PersonalInterest,
        ScorerKind::PeerLeadership,
        ScorerKind::NetworkTrend,
        ScorerKind::Comprehensive,
        ScorerKind::Utility,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScorerKind::PersonalInterest => "v_pi",
            ScorerKind::PeerLeadership => "v_ps",
            ScorerKind::NetworkTrend => "v_nt",
            ScorerKind::Comprehensive => "v_c",
            ScorerKind::Utility => "utility",
        }
    }
}

impl std::str::FromStr for ScorerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScorerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::param("scorers", format!("unknown scorer `{s}`")))
    }
}

/// Everything the built-in scorers need, fitted on a training split.
pub struct ScoringContext<T> {
    pub model: ValueModel<T>,
    pub params: InferredParams<T>,
}

impl<T: Scalar> ScoringContext<T> {
    pub fn fit(
        train: &Dataset,
        values: &ValueModelConfig<T>,
        inference: &InferenceConfig,
    ) -> Result<Self> {
        Ok(ScoringContext {
            model: ValueModel::fit(train, values)?,
            params: InferredParams::infer(train, inference)?,
        })
    }

    /// `v_c - ẽ`; pairs no effort can win score the lowest finite value.
    pub fn utility(&self, u: usize, b: usize) -> T {
        let a = self.params.abilities.get(u, b);
        match min_effort(self.params.thresholds[b], a) {
            Some(e) => self.model.comprehensive(u, b) - e,
            None => -T::max_value(),
        }
    }

    pub fn score(&self, kind: ScorerKind, u: usize, b: usize) -> T {
        match kind {
            ScorerKind::PersonalInterest => self.model.personal_interest(u, b),
            ScorerKind::PeerLeadership => self.model.peer_leadership(u, b),
            ScorerKind::NetworkTrend => self.model.network_trend(u, b),
            ScorerKind::Comprehensive => self.model.comprehensive(u, b),
            ScorerKind::Utility => self.utility(u, b),
        }
    }
}

/// A built-in scorer bound to its context.
pub struct ModelScorer<'a, T> {
    pub ctx: &'a ScoringContext<T>,
    pub kind: ScorerKind,
}

impl<T: Scalar> Scorer for ModelScorer<'_, T> {
    fn name(&self) -> String {
        self.kind.name().to_string()
    }

    fn score(&self, user: usize, badge: usize) -> f64 {
        self.ctx.score(self.kind, user, badge).as_f64()
    }
}

#[derive(Clone, Debug)]
pub struct ProtocolConfig {
    pub train_fraction: f64,
    pub min_achievers: usize,
    pub negative_seed: u64,
    /// Treat negatives as positives and vice versa.
    pub swap_labels: bool,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            train_fraction: 0.9,
            min_achievers: 100,
            negative_seed: 0,
            swap_labels: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScorerAuc {
    pub scorer: String,
    pub auc: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub results: Vec<ScorerAuc>,
    pub train_fraction: f64,
    pub min_achievers: usize,
    pub negative_seed: u64,
    pub n_badges: usize,
    pub n_positive: usize,
    pub n_negative: usize,
}

impl EvalReport {
    pub fn auc(&self, scorer: &str) -> Option<f64> {
        self.results
            .iter()
            .find(|r| r.scorer == scorer)
            .map(|r| r.auc)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("scorer,auc\n");
        for r in &self.results {
            s.push_str(&format!("{},{}\n", r.scorer, r.auc));
        }
        s
    }
}

/// Test pairs of the protocol: the filtered dataset, its training prefix,
/// later achievements as positives and an equal number of never-achieved
/// pairs as negatives.
pub struct ProtocolSplit {
    pub filtered: Dataset,
    pub train: Dataset,
    pub positives: Vec<(usize, usize)>,
    pub negatives: Vec<(usize, usize)>,
}

pub fn protocol_split(d: &Dataset, cfg: &ProtocolConfig) -> Result<ProtocolSplit> {
    let filtered = filter_rare_badges(d, cfg.min_achievers);
    let split = temporal_split(&filtered, cfg.train_fraction)?;
    let negatives = sample_negatives(&filtered, split.test_pairs.len(), cfg.negative_seed)?;
    Ok(ProtocolSplit {
        train: split.train,
        positives: split.test_pairs,
        negatives,
        filtered,
    })
}

/// Scores both pair sets with every scorer and reports one AUC each.
pub fn score_split(
    split: &ProtocolSplit,
    scorers: &[&dyn Scorer],
    cfg: &ProtocolConfig,
) -> Result<EvalReport> {
    let (pos, neg) = if cfg.swap_labels {
        (&split.negatives, &split.positives)
    } else {
        (&split.positives, &split.negatives)
    };
    let mut results = Vec::with_capacity(scorers.len());
    for s in scorers {
        let ps: Vec<f64> = pos.par_iter().map(|&(u, b)| s.score(u, b)).collect();
        let ns: Vec<f64> = neg.par_iter().map(|&(u, b)| s.score(u, b)).collect();
        results.push(ScorerAuc {
            scorer: s.name(),
            auc: auc(&ps, &ns)?,
        });
    }
    Ok(EvalReport {
        results,
        train_fraction: cfg.train_fraction,
        min_achievers: cfg.min_achievers,
        negative_seed: cfg.negative_seed,
        n_badges: split.filtered.n_badges(),
        n_positive: pos.len(),
        n_negative: neg.len(),
    })
}

/// Filter, split, fit on the training part, score and compute AUCs.
pub fn run_protocol<T: Scalar>(
    d: &Dataset,
    scorers: &[ScorerKind],
    cfg: &ProtocolConfig,
    values: &ValueModelConfig<T>,
    inference: &InferenceConfig,
) -> Result<EvalReport> {
    let split = protocol_split(d, cfg)?;
    let ctx = ScoringContext::fit(&split.train, values, inference)?;
    let bound: Vec<ModelScorer<T>> = scorers
        .iter()
        .map(|&kind| ModelScorer { ctx: &ctx, kind })
        .collect();
    let dyns: Vec<&dyn Scorer> = bound.iter().map(|s| s as &dyn Scorer).collect();
    score_split(&split, &dyns, cfg)
}
