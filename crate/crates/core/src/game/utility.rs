use std::collections::BTreeMap;

use serde::Serialize;

use crate::scalar::Scalar;

/// Smallest effort that wins a badge of threshold `theta` for a user of
/// ability `a`, or `None` if no effort does.
///
/// The quotient is nudged upward where rounding would leave `a * e`
/// just short of `theta`.
pub fn min_effort<T: Scalar>(theta: T, a: T) -> Option<T> {
    if theta <= T::zero() {
        return Some(T::zero());
    }
    if a <= T::zero() {
        return None;
    }
    let mut e = theta / a;
    if !e.is_finite() {
        return None;
    }
    while a * e < theta {
        e = e + e * T::epsilon();
    }
    Some(e)
}

/// Whether an effort wins the badge.
pub fn wins<T: Scalar>(effort: T, theta: T, a: T) -> bool {
    a * effort >= theta
}

/// Reward minus cost for one badge.
pub fn utility<T: Scalar>(effort: T, value: T, theta: T, a: T) -> T {
    let reward = if wins(effort, theta, a) {
        value
    } else {
        T::zero()
    };
    reward - effort
}

/// A user's effort allocation, stored sparsely by badge index. Only
/// positive efforts are kept.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Strategy<T> {
    efforts: BTreeMap<usize, T>,
}

impl<T: Scalar> Strategy<T> {
    pub fn zero() -> Self {
        Strategy {
            efforts: BTreeMap::new(),
        }
    }

    pub fn from_efforts(efforts: impl IntoIterator<Item = (usize, T)>) -> Self {
        Strategy {
            efforts: efforts.into_iter().filter(|e| e.1 > T::zero()).collect(),
        }
    }

    pub fn effort(&self, badge: usize) -> T {
        self.efforts.get(&badge).copied().unwrap_or_else(T::zero)
    }

    pub fn set(&mut self, badge: usize, effort: T) {
        if effort > T::zero() {
            self.efforts.insert(badge, effort);
        } else {
            self.efforts.remove(&badge);
        }
    }

    /// Total effort, summed in badge order.
    pub fn total(&self) -> T {
        self.efforts.values().fold(T::zero(), |acc, &e| acc + e)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.efforts.iter().map(|(&b, &e)| (b, e))
    }

    pub fn is_zero(&self) -> bool {
        self.efforts.is_empty()
    }

    pub fn len(&self) -> usize {
        self.efforts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.efforts.is_empty()
    }
}

/// `I·v - |e|` over all badges. `values`, `thetas` and `ability` are
/// indexed by badge.
pub fn overall_utility<T: Scalar>(
    strategy: &Strategy<T>,
    values: &[T],
    thetas: &[T],
    ability: &[T],
) -> T {
    let mut total = T::zero();
    for b in 0..values.len() {
        let e = strategy.effort(b);
        total = total + utility(e, values[b], thetas[b], ability[b]);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_effort() {
        assert_eq!(min_effort(0.3, 0.6), Some(0.5));
        assert_eq!(min_effort(0.0, 0.0), Some(0.0));
        assert_eq!(min_effort(0.0, 0.7), Some(0.0));
        assert_eq!(min_effort(0.2, 0.0), None);
    }

    #[test]
    fn minimal_effort_always_wins() {
        for i in 1..500 {
            let theta = i as f64 / 997.0;
            let a = (i * 7 % 991) as f64 / 991.0 + 1e-3;
            let e = min_effort(theta, a).unwrap();
            assert!(a * e >= theta);
            assert!(e <= theta / a * (1.0 + 4.0 * f64::EPSILON));
        }
    }

    #[test]
    fn single_badge_utility() {
        assert!((utility(0.5, 0.8, 0.3, 0.6) - 0.3f64).abs() < 1e-12);
        assert_eq!(utility(0.5, 0.8, 0.9, 0.6), -0.5);
        assert_eq!(utility(0.0, 0.8, 0.3, 0.6), 0.0);
    }

    #[test]
    fn overall_sums_badges() {
        let thetas = [0.1, 0.15, 0.5];
        let ability = [0.5, 0.5, 0.0];
        let values = [0.5, 0.5, 0.9];
        assert_eq!(
            overall_utility(&Strategy::zero(), &values, &thetas, &ability),
            0.0
        );
        let s = Strategy::from_efforts([(0, 0.2), (1, 0.3)]);
        assert!((overall_utility(&s, &values, &thetas, &ability) - 0.5f64).abs() < 1e-12);
        let mut wasted = s.clone();
        wasted.set(2, 0.1);
        assert!(
            overall_utility(&wasted, &values, &thetas, &ability)
                < overall_utility(&s, &values, &thetas, &ability)
        );
    }

    #[test]
    fn strategy_is_sparse() {
        let mut s = Strategy::from_efforts([(3, 0.0), (1, 0.25)]);
        assert_eq!(s.len(), 1);
        s.set(1, 0.0);
        assert!(s.is_zero());
    }
}
