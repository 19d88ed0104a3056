//! Sequential pattern mining over per-user achievement orders and
//! prefix-based rule generation.
//!
//! Containment is order-preserving but not necessarily contiguous.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{BadgeId, Dataset};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BadgeSequence {
    pub user: usize,
    pub items: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pattern {
    pub items: Vec<usize>,
    pub support: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub antecedent: Vec<usize>,
    pub consequent: usize,
    pub confidence: f64,
}

/// Controls emission of empty-antecedent base-rate rules `⟨⟩ → b`.
#[derive(Clone, Copy, Debug, Default)]
pub struct RuleOptions {
    pub base_rate_rules: bool,
    /// Corpus size used as the base-rate denominator.
    pub n_sequences: usize,
}

/// `max(2, ceil(1% of users))`.
pub fn default_min_support(n_users: usize) -> usize {
    n_users.div_ceil(100).max(2)
}

pub const DEFAULT_MAX_LEN: usize = 5;

/// One sequence per user with at least one event, ordered by user.
pub fn build_sequences(train: &Dataset) -> Vec<BadgeSequence> {
    train
        .histories()
        .into_iter()
        .enumerate()
        .filter(|(_, h)| !h.is_empty())
        .map(|(user, items)| BadgeSequence { user, items })
        .collect()
}

/// Is `needle` an order-preserving subsequence of `hay`?
pub fn is_subsequence(needle: &[usize], hay: &[usize]) -> bool {
    let mut it = hay.iter();
    needle.iter().all(|x| it.any(|y| y == x))
}

/// Projected database entry: sequence index and the first unread position.
type Projection = Vec<(usize, usize)>;

/// Mines every pattern with `support >= min_support` and `len <= max_len`.
///
/// Output is sorted by length, then lexicographically by item index (which
/// matches badge-id order).
pub fn prefixspan(sequences: &[BadgeSequence], min_support: usize, max_len: usize) -> Vec<Pattern> {
    let min_support = min_support.max(1);
    if max_len == 0 {
        return Vec::new();
    }
    let root: Projection = (0..sequences.len()).map(|s| (s, 0)).collect();
    let firsts = frequent_items(sequences, &root, min_support);
    let mut out: Vec<Pattern> = firsts
        .into_par_iter()
        .flat_map_iter(|(item, support)| {
            let mut acc = Vec::new();
            let proj = project(sequences, &root, item);
            grow(
                sequences,
                vec![item],
                support,
                &proj,
                min_support,
                max_len,
                &mut acc,
            );
            acc
        })
        .collect();
    out.sort_by(|a, b| {
        a.items
            .len()
            .cmp(&b.items.len())
            .then_with(|| a.items.cmp(&b.items))
    });
    out
}

fn grow(
    seqs: &[BadgeSequence],
    prefix: Vec<usize>,
    support: usize,
    proj: &Projection,
    min_support: usize,
    max_len: usize,
    acc: &mut Vec<Pattern>,
) {
    if prefix.len() < max_len {
        for (item, s) in frequent_items(seqs, proj, min_support) {
            let mut next = prefix.clone();
            next.push(item);
            let p = project(seqs, proj, item);
            grow(seqs, next, s, &p, min_support, max_len, acc);
        }
    }
    acc.push(Pattern {
        items: prefix,
        support,
    });
}

/// Items occurring in the projected suffixes, counted once per sequence.
fn frequent_items(
    seqs: &[BadgeSequence],
    proj: &Projection,
    min_support: usize,
) -> Vec<(usize, usize)> {
    let mut counts: HashMap<usize, usize> = HashMap::new();
    let mut seen: Vec<usize> = Vec::new();
    for &(s, pos) in proj {
        seen.clear();
        for &x in &seqs[s].items[pos..] {
            if !seen.contains(&x) {
                seen.push(x);
                *counts.entry(x).or_default() += 1;
            }
        }
    }
    let mut items: Vec<_> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_support)
        .collect();
    items.sort_unstable();
    items
}

fn project(seqs: &[BadgeSequence], proj: &Projection, item: usize) -> Projection {
    proj.iter()
        .filter_map(|&(s, pos)| {
            seqs[s].items[pos..]
                .iter()
                .position(|&x| x == item)
                .map(|off| (s, pos + off + 1))
        })
        .collect()
}

/// Emits `P' → last(P)` for every pattern `P` of length ≥ 2, where `P'` is
/// `P` without its last item, with confidence `support(P) / support(P')`.
pub fn generate_rules(patterns: &[Pattern], opts: RuleOptions) -> Result<Vec<Rule>> {
    let support: HashMap<&[usize], usize> = patterns
        .iter()
        .map(|p| (p.items.as_slice(), p.support))
        .collect();
    let mut rules = Vec::new();
    for p in patterns {
        match p.items.len() {
            0 => {}
            1 => {
                if opts.base_rate_rules && opts.n_sequences > 0 {
                    rules.push(Rule {
                        antecedent: Vec::new(),
                        consequent: p.items[0],
                        confidence: p.support as f64 / opts.n_sequences as f64,
                    });
                }
            }
            n => {
                let prefix = &p.items[..n - 1];
                let &ps = support
                    .get(prefix)
                    .ok_or_else(|| Error::MissingPrefix(format!("{:?}", p.items)))?;
                rules.push(Rule {
                    antecedent: prefix.to_vec(),
                    consequent: p.items[n - 1],
                    confidence: p.support as f64 / ps as f64,
                });
            }
        }
    }
    rules.sort_by(|a, b| {
        (a.antecedent.len(), &a.antecedent, a.consequent).cmp(&(
            b.antecedent.len(),
            &b.antecedent,
            b.consequent,
        ))
    });
    Ok(rules)
}

#[derive(Serialize, Deserialize)]
struct RuleRecord {
    ant: Vec<String>,
    con: String,
    conf: f64,
}

/// Writes rules as JSON Lines: `{"ant": [..], "con": .., "conf": ..}`.
pub fn write_rules(path: impl AsRef<Path>, rules: &[Rule], d: &Dataset) -> Result<()> {
    let path = path.as_ref();
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    let name = |b: usize| d.badges()[b].id.0.clone();
    for r in rules {
        let rec = RuleRecord {
            ant: r.antecedent.iter().map(|&b| name(b)).collect(),
            con: name(r.consequent),
            conf: r.confidence,
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_rules(path: impl AsRef<Path>, d: &Dataset) -> Result<Vec<Rule>> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rules = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: RuleRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_owned(),
            line: i + 1,
            message: e.to_string(),
        })?;
        let antecedent = rec
            .ant
            .into_iter()
            .map(|b| d.badge_index(&BadgeId(b)))
            .collect::<Result<Vec<_>>>()?;
        rules.push(Rule {
            antecedent,
            consequent: d.badge_index(&BadgeId(rec.con))?,
            confidence: rec.conf,
        });
    }
    Ok(rules)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Badge, UserId};

    fn seqs(raw: &[&[usize]]) -> Vec<BadgeSequence> {
        raw.iter()
            .enumerate()
            .map(|(user, s)| BadgeSequence {
                user,
                items: s.to_vec(),
            })
            .collect()
    }

    fn pat(items: &[usize], support: usize) -> Pattern {
        Pattern {
            items: items.to_vec(),
            support,
        }
    }

    #[test]
    fn sequences_follow_event_order() {
        let badges = vec![
            Badge::new("b1", "c", 1, None),
            Badge::new("b2", "c", 1, None),
        ];
        let ev = [("u1", "b2", 1), ("u1", "b1", 2)]
            .map(|(u, b, t)| (UserId::from(u), BadgeId::from(b), t));
        let d = Dataset::from_records([UserId::from("u0")], badges, ev, []).unwrap();
        let s = build_sequences(&d);
        assert_eq!(
            s,
            vec![BadgeSequence {
                user: 1,
                items: vec![1, 0]
            }]
        );
    }

    #[test]
    fn shared_prefix_only() {
        let out = prefixspan(&seqs(&[&[0, 1], &[0, 2]]), 2, 5);
        assert_eq!(out, vec![pat(&[0], 2)]);
    }

    #[test]
    fn single_sequence_all_subsequences() {
        let out = prefixspan(&seqs(&[&[0, 1]]), 1, 2);
        assert_eq!(out, vec![pat(&[0], 1), pat(&[1], 1), pat(&[0, 1], 1)]);
    }

    #[test]
    fn support_above_corpus_is_empty() {
        assert!(prefixspan(&seqs(&[&[0, 1], &[1]]), 3, 5).is_empty());
    }

    #[test]
    fn gapped_containment() {
        let out = prefixspan(&seqs(&[&[0, 5, 1], &[0, 1], &[1, 0]]), 2, 3);
        assert!(out.contains(&pat(&[0, 1], 2)));
        assert!(is_subsequence(&[0, 1], &[0, 5, 1]));
        assert!(!is_subsequence(&[0, 1], &[1, 0]));
        assert!(is_subsequence(&[], &[1]));
    }

    #[test]
    fn rule_confidence_from_supports() {
        let rules =
            generate_rules(&[pat(&[0], 20), pat(&[0, 1], 10)], RuleOptions::default()).unwrap();
        assert_eq!(
            rules,
            vec![Rule {
                antecedent: vec![0],
                consequent: 1,
                confidence: 0.5
            }]
        );
        let rules =
            generate_rules(&[pat(&[0], 5), pat(&[0, 1], 5)], RuleOptions::default()).unwrap();
        assert_eq!(rules[0].confidence, 1.0);
    }

    #[test]
    fn rules_from_three_patterns() {
        // supports: <a>:4, <a,b>:3, <a,b,c>:1
        let pats = [pat(&[0], 4), pat(&[0, 1], 3), pat(&[0, 1, 2], 1)];
        let rules = generate_rules(&pats, RuleOptions::default()).unwrap();
        assert_eq!(
            rules,
            vec![
                Rule {
                    antecedent: vec![0],
                    consequent: 1,
                    confidence: 0.75
                },
                Rule {
                    antecedent: vec![0, 1],
                    consequent: 2,
                    confidence: 1.0 / 3.0
                },
            ]
        );
        let with_base = generate_rules(
            &pats,
            RuleOptions {
                base_rate_rules: true,
                n_sequences: 8,
            },
        )
        .unwrap();
        assert_eq!(
            with_base[0],
            Rule {
                antecedent: vec![],
                consequent: 0,
                confidence: 0.5
            }
        );
    }

    #[test]
    fn missing_prefix_is_an_error() {
        let err = generate_rules(&[pat(&[0, 1], 3)], RuleOptions::default()).unwrap_err();
        assert!(matches!(err, Error::MissingPrefix(_)));
    }

    #[test]
    fn default_support_floor() {
        assert_eq!(default_min_support(10), 2);
        assert_eq!(default_min_support(4240), 43);
    }
}
