//! Network trend value: the strongest mined rule predicting a badge from a
//! user's ordered history.

use crate::mining::{is_subsequence, Rule};
use crate::scalar::Scalar;

/// Rules grouped by consequent, strongest first.
#[derive(Clone, Debug, Default)]
pub struct RuleIndex {
    by_consequent: Vec<Vec<(Vec<usize>, f64)>>,
    max_confidence: f64,
    trie: Vec<TrieNode>,
}

/// Antecedent prefix tree; each node lists the rules whose antecedent ends
/// there.
#[derive(Clone, Debug, Default)]
struct TrieNode {
    children: Vec<(usize, usize)>,
    rules: Vec<(usize, f64)>,
}

impl RuleIndex {
    pub fn new(rules: &[Rule], n_badges: usize) -> Self {
        let mut by_consequent = vec![Vec::new(); n_badges];
        let mut max_confidence = 0.0f64;
        for r in rules {
            by_consequent[r.consequent].push((r.antecedent.clone(), r.confidence));
            max_confidence = max_confidence.max(r.confidence);
        }
        for v in &mut by_consequent {
            v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        }
        let mut trie = vec![TrieNode::default()];
        for r in rules {
            let mut at = 0;
            for &item in &r.antecedent {
                at = match trie[at].children.iter().find(|c| c.0 == item) {
                    Some(&(_, next)) => next,
                    None => {
                        trie.push(TrieNode::default());
                        let next = trie.len() - 1;
                        trie[at].children.push((item, next));
                        next
                    }
                };
            }
            trie[at].rules.push((r.consequent, r.confidence));
        }
        RuleIndex {
            by_consequent,
            max_confidence,
            trie,
        }
    }

    pub fn max_confidence(&self) -> f64 {
        self.max_confidence
    }

    pub fn rules(&self) -> impl Iterator<Item = Rule> + '_ {
        self.by_consequent.iter().enumerate().flat_map(|(c, rs)| {
            rs.iter().map(move |(a, conf)| Rule {
                antecedent: a.clone(),
                consequent: c,
                confidence: *conf,
            })
        })
    }

    /// Highest confidence of a rule for `b` whose antecedent is an ordered
    /// subsequence of `history`.
    pub fn best(&self, history: &[usize], b: usize) -> Option<f64> {
        self.by_consequent
            .get(b)?
            .iter()
            .find(|(ant, _)| is_subsequence(ant, history))
            .map(|r| r.1)
    }

    /// [`RuleIndex::best`] for every badge at once.
    pub fn best_row(&self, history: &[usize]) -> Vec<Option<f64>> {
        let mut pos = vec![usize::MAX; self.by_consequent.len()];
        let mut unique = true;
        for (i, &b) in history.iter().enumerate() {
            match pos.get_mut(b) {
                Some(p) if *p == usize::MAX => *p = i,
                _ => unique = false,
            }
        }
        if !unique {
            return (0..self.by_consequent.len())
                .map(|b| self.best(history, b))
                .collect();
        }
        let mut best: Vec<Option<f64>> = vec![None; self.by_consequent.len()];
        // Depth-first over antecedents that embed in the history.
        let mut stack = vec![(0usize, None::<usize>)];
        while let Some((node, last)) = stack.pop() {
            let n = &self.trie[node];
            for &(b, conf) in &n.rules {
                if best[b].is_none_or(|c| conf > c) {
                    best[b] = Some(conf);
                }
            }
            for &(item, child) in &n.children {
                let p = pos.get(item).copied().unwrap_or(usize::MAX);
                if p != usize::MAX && last.is_none_or(|l| p > l) {
                    stack.push((child, Some(p)));
                }
            }
        }
        best
    }
}

pub fn network_trend_value<T: Scalar>(
    rules: &RuleIndex,
    history: &[usize],
    b: usize,
    fallback: T,
) -> T {
    rules.best(history, b).map_or(fallback, T::lit)
}
