use serde::{Deserialize, Serialize};

use super::fit::{fit_peer_function_with, ExpSearch};
use super::interest::{personal_interest_value, SimilarityMatrix};
use super::peer::{
    empirical_ratio_curve, peer_ratio, AchievementIndex, PeerFamily, PeerLeadershipModel,
};
use super::trend::{network_trend_value, RuleIndex};
use crate::data::{Dataset, SocialGraph};
use crate::error::{Error, Result};
use crate::mining::{
    build_sequences, default_min_support, generate_rules, prefixspan, Rule, RuleOptions,
    DEFAULT_MAX_LEN,
};
use crate::scalar::Scalar;

/// Mixing weights: α on personal interest, β on peer leadership and the
/// remainder on network trend.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueWeights<T> {
    pub alpha: T,
    pub beta: T,
}

impl<T: Scalar> ValueWeights<T> {
    pub fn new(alpha: T, beta: T) -> Result<Self> {
        let ok =
            alpha >= T::zero() && beta >= T::zero() && alpha + beta <= T::one() + T::lit(1e-12);
        if !ok {
            return Err(Error::param(
                "weights",
                "need alpha, beta >= 0 and alpha + beta <= 1",
            ));
        }
        Ok(ValueWeights { alpha, beta })
    }

    /// Equal thirds.
    pub fn equal() -> Self {
        let third = T::one() / T::lit(3.0);
        ValueWeights {
            alpha: third,
            beta: third,
        }
    }

    pub fn trend_weight(&self) -> T {
        (T::one() - self.alpha - self.beta).max(T::zero())
    }
}

impl<T: Scalar> Default for ValueWeights<T> {
    fn default() -> Self {
        Self::equal()
    }
}

pub fn comprehensive_value<T: Scalar>(w: &ValueWeights<T>, v_pi: T, v_ps: T, v_nt: T) -> T {
    w.alpha * v_pi + w.beta * v_ps + w.trend_weight() * v_nt
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ValueComponents<T> {
    pub v_pi: T,
    pub v_ps: T,
    pub v_nt: T,
    pub v_c: T,
}

#[derive(Clone, Debug)]
pub struct ValueModelConfig<T> {
    pub family: PeerFamily,
    pub weights: ValueWeights<T>,
    /// `None` selects `max(2, ceil(1% of users))`.
    pub min_support: Option<usize>,
    pub max_len: usize,
    pub base_rate_rules: bool,
    pub exp_search: ExpSearch,
}

impl<T: Scalar> Default for ValueModelConfig<T> {
    fn default() -> Self {
        ValueModelConfig {
            family: PeerFamily::Quadratic,
            weights: ValueWeights::equal(),
            min_support: None,
            max_len: DEFAULT_MAX_LEN,
            base_rate_rules: false,
            exp_search: ExpSearch::default(),
        }
    }
}

/// Mines rules from a training split using the config's mining settings.
pub fn mine_rules<T: Scalar>(train: &Dataset, cfg: &ValueModelConfig<T>) -> Result<Vec<Rule>> {
    let seqs = build_sequences(train);
    let min_support = cfg
        .min_support
        .unwrap_or_else(|| default_min_support(train.n_users()));
    let patterns = prefixspan(&seqs, min_support, cfg.max_len);
    generate_rules(
        &patterns,
        RuleOptions {
            base_rate_rules: cfg.base_rate_rules,
            n_sequences: seqs.len(),
        },
    )
}

/// The three value functions and their combination, all built from one
/// training split.
#[derive(Clone, Debug)]
pub struct ValueModel<T> {
    pub peer: PeerLeadershipModel<T>,
    pub rules: RuleIndex,
    pub similarity: SimilarityMatrix,
    pub weights: ValueWeights<T>,
    histories: Vec<Vec<usize>>,
    achieved: AchievementIndex,
    graph: SocialGraph,
    eval_time: i64,
}

impl<T: Scalar> ValueModel<T> {
    pub fn fit(train: &Dataset, cfg: &ValueModelConfig<T>) -> Result<Self> {
        let curve = empirical_ratio_curve(train)?;
        let peer = fit_peer_function_with(&curve, cfg.family, &cfg.exp_search)?;
        let rules = mine_rules(train, cfg)?;
        Ok(Self::from_parts(train, peer, &rules, cfg.weights))
    }

    pub fn from_parts(
        train: &Dataset,
        peer: PeerLeadershipModel<T>,
        rules: &[Rule],
        weights: ValueWeights<T>,
    ) -> Self {
        ValueModel {
            peer,
            rules: RuleIndex::new(rules, train.n_badges()),
            similarity: SimilarityMatrix::new(train),
            weights,
            histories: train.histories(),
            achieved: AchievementIndex::new(train),
            graph: train.graph().clone(),
            // Ratios for unseen pairs are taken after the last training event.
            eval_time: train
                .events()
                .last()
                .map_or(i64::MIN, |e| e.ts.saturating_add(1)),
        }
    }

    pub fn n_badges(&self) -> usize {
        self.similarity.n_badges()
    }

    pub fn history(&self, u: usize) -> &[usize] {
        &self.histories[u]
    }

    pub fn graph(&self) -> &SocialGraph {
        &self.graph
    }

    pub fn personal_interest(&self, u: usize, b: usize) -> T {
        personal_interest_value(&self.similarity, b, &self.histories[u])
    }

    pub fn peer_ratio(&self, u: usize, b: usize) -> T {
        peer_ratio(&self.graph, &self.achieved, u, b, self.eval_time)
    }

    pub fn peer_leadership(&self, u: usize, b: usize) -> T {
        self.peer.value(self.peer_ratio(u, b))
    }

    pub fn network_trend(&self, u: usize, b: usize) -> T {
        network_trend_value(&self.rules, &self.histories[u], b, T::zero())
    }

    /// Network trend of every badge for one user.
    pub fn network_trend_row(&self, u: usize) -> Vec<T> {
        self.rules
            .best_row(&self.histories[u])
            .into_iter()
            .map(|c| c.map_or(T::zero(), T::lit))
            .collect()
    }

    pub fn combine(&self, v_pi: T, v_ps: T, v_nt: T) -> T {
        comprehensive_value(&self.weights, v_pi, v_ps, v_nt)
    }

    pub fn components(&self, u: usize, b: usize) -> ValueComponents<T> {
        let v_pi = self.personal_interest(u, b);
        let v_ps = self.peer_leadership(u, b);
        let v_nt = self.network_trend(u, b);
        ValueComponents {
            v_pi,
            v_ps,
            v_nt,
            v_c: self.combine(v_pi, v_ps, v_nt),
        }
    }

    pub fn comprehensive(&self, u: usize, b: usize) -> T {
        self.components(u, b).v_c
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::generate_synthetic;

    #[test]
    fn equal_weights_average() {
        let v = comprehensive_value(&ValueWeights::equal(), 0.3, 0.6, 0.9);
        assert!((v - 0.6f64).abs() < 1e-12);
    }

    #[test]
    fn alpha_one_selects_interest() {
        let w = ValueWeights::new(1.0, 0.0).unwrap();
        assert_eq!(comprehensive_value(&w, 0.37, 0.9, 0.1), 0.37);
    }

    #[test]
    fn weights_validate() {
        assert!(ValueWeights::new(0.7, 0.4).is_err());
        assert!(ValueWeights::new(-0.1, 0.4).is_err());
        assert!(ValueWeights::<f64>::new(0.5, 0.5).is_ok());
    }

    #[test]
    fn fitted_model_values_are_bounded() {
        let d = generate_synthetic(150, 30, 2.0, 0.6, 4).unwrap();
        let m: ValueModel<f64> = ValueModel::fit(&d, &ValueModelConfig::default()).unwrap();
        let cap = m.peer.value(0.0).max(m.peer.value(1.0)).max(1.0);
        for u in 0..d.n_users() {
            for b in 0..d.n_badges() {
                let c = m.components(u, b);
                assert!(c.v_pi >= 0.0 && c.v_pi <= 1.0);
                assert!(c.v_ps >= 0.0);
                assert!(c.v_nt >= 0.0 && c.v_nt <= m.rules.max_confidence());
                assert!(c.v_c >= 0.0 && c.v_c <= cap + 1e-12);
            }
        }
    }
}
