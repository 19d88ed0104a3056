//! Personal interest value from Jaccard similarity of achiever sets.

use crate::data::Dataset;
use crate::scalar::Scalar;

/// Pairwise achiever-set overlaps for all badges in a training set.
#[derive(Clone, Debug)]
pub struct SimilarityMatrix {
    n: usize,
    sizes: Vec<u32>,
    overlap: Vec<u32>,
}

impl SimilarityMatrix {
    pub fn new(train: &Dataset) -> Self {
        let n = train.n_badges();
        let mut sizes = vec![0u32; n];
        let mut overlap = vec![0u32; n * n];
        for h in train.histories() {
            for (i, &a) in h.iter().enumerate() {
                sizes[a] += 1;
                for &b in &h[i + 1..] {
                    overlap[a * n + b] += 1;
                    overlap[b * n + a] += 1;
                }
            }
        }
        SimilarityMatrix { n, sizes, overlap }
    }

    pub fn n_badges(&self) -> usize {
        self.n
    }

    pub fn achievers(&self, b: usize) -> usize {
        self.sizes[b] as usize
    }

    /// |Γ(j) ∩ Γ(k)| / |Γ(j) ∪ Γ(k)|, or 0 when both sets are empty.
    pub fn jaccard<T: Scalar>(&self, j: usize, k: usize) -> T {
        let inter = if j == k {
            self.sizes[j]
        } else {
            self.overlap[j * self.n + k]
        };
        let union = self.sizes[j] + self.sizes[k] - inter;
        if union == 0 {
            T::zero()
        } else {
            T::count(inter as usize) / T::count(union as usize)
        }
    }
}

pub fn badge_similarity<T: Scalar>(sim: &SimilarityMatrix, j: usize, k: usize) -> T {
    sim.jaccard(j, k)
}

/// Mean similarity of `b` to the badges in `history`; 0 for an empty history.
pub fn personal_interest_value<T: Scalar>(
    sim: &SimilarityMatrix,
    b: usize,
    history: &[usize],
) -> T {
    if history.is_empty() {
        return T::zero();
    }
    let s: T = history.iter().map(|&k| sim.jaccard::<T>(b, k)).sum();
    s / T::count(history.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Badge, BadgeId, UserId};

    /// Achievers: b0 {u1,u2}, b1 {u2,u3}, b2 {u1,u2}, b3 {}.
    fn fixture() -> Dataset {
        let badges = (0..4)
            .map(|i| Badge::new(&format!("b{i}"), "c", 1, None))
            .collect();
        let ev = [
            ("u1", "b0", 1),
            ("u2", "b0", 2),
            ("u2", "b1", 3),
            ("u3", "b1", 4),
            ("u1", "b2", 5),
            ("u2", "b2", 6),
        ]
        .map(|(u, b, t)| (UserId::from(u), BadgeId::from(b), t));
        Dataset::from_records([], badges, ev, []).unwrap()
    }

    #[test]
    fn jaccard_cases() {
        let s = SimilarityMatrix::new(&fixture());
        assert_eq!(s.jaccard::<f64>(0, 2), 1.0);
        assert!((s.jaccard::<f64>(0, 1) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.jaccard::<f64>(3, 3), 0.0);
        assert_eq!(s.jaccard::<f64>(0, 3), 0.0);
        assert_eq!(s.jaccard::<f64>(1, 1), 1.0);
    }

    #[test]
    fn disjoint_sets() {
        let badges = vec![Badge::new("x", "c", 1, None), Badge::new("y", "c", 1, None)];
        let ev =
            [("a", "x", 1), ("b", "y", 2)].map(|(u, b, t)| (UserId::from(u), BadgeId::from(b), t));
        let d = Dataset::from_records([], badges, ev, []).unwrap();
        assert_eq!(SimilarityMatrix::new(&d).jaccard::<f64>(0, 1), 0.0);
    }

    #[test]
    fn interest_means() {
        let s = SimilarityMatrix::new(&fixture());
        assert_eq!(personal_interest_value::<f64>(&s, 0, &[]), 0.0);
        assert_eq!(personal_interest_value::<f64>(&s, 0, &[2]), 1.0);
        // s(b0,b2) = 1, s(b0,b1) = 1/3
        let v: f64 = personal_interest_value(&s, 0, &[2, 1]);
        assert!((v - 2.0 / 3.0).abs() < 1e-15);
    }
}
