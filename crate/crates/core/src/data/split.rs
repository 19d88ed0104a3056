use std::collections::HashSet;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Dataset;
use crate::error::{Error, Result};

/// Train prefix plus the held-out positive (user, badge) pairs.
#[derive(Clone, Debug)]
pub struct TemporalSplit {
    pub train: Dataset,
    pub test_pairs: Vec<(usize, usize)>,
}

/// Splits by global event order: the first `ceil(train_fraction * |events|)`
/// events form the training set.
pub fn temporal_split(d: &Dataset, train_fraction: f64) -> Result<TemporalSplit> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::param("train_fraction", "must lie in (0, 1)"));
    }
    let n = d.events().len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    // Guard against products like 0.9 * 10 landing one ulp above an integer.
    let n_train = ((train_fraction * n as f64) - 1e-9)
        .ceil()
        .clamp(0.0, n as f64) as usize;
    let test_pairs = d.events()[n_train..]
        .iter()
        .map(|e| (e.user, e.badge))
        .collect();
    Ok(TemporalSplit {
        train: d.with_event_prefix(n_train),
        test_pairs,
    })
}

/// Draws `n` distinct (user, badge) pairs uniformly from the pairs absent in `d`.
/// The result is sorted.
pub fn sample_negatives(d: &Dataset, n: usize, seed: u64) -> Result<Vec<(usize, usize)>> {
    let (nu, nb) = (d.n_users(), d.n_badges());
    let present: HashSet<(usize, usize)> = d.events().iter().map(|e| (e.user, e.badge)).collect();
    let total = nu * nb;
    let available = total - present.len();
    if n > available {
        return Err(Error::InsufficientAbsentPairs {
            requested: n,
            available,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<(usize, usize)> = if 2 * n >= available {
        let absent: Vec<(usize, usize)> = (0..nu)
            .flat_map(|u| (0..nb).map(move |b| (u, b)))
            .filter(|p| !present.contains(p))
            .collect();
        index::sample(&mut rng, absent.len(), n)
            .into_iter()
            .map(|i| absent[i])
            .collect()
    } else {
        let mut chosen = HashSet::with_capacity(n);
        while chosen.len() < n {
            let p = (rng.gen_range(0..nu), rng.gen_range(0..nb));
            if !present.contains(&p) {
                chosen.insert(p);
            }
        }
        chosen.into_iter().collect()
    };
    out.sort_unstable();
    Ok(out)
}
