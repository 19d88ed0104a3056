//! Budgeted subset selection behind the best response.

use std::cmp::Ordering;

use crate::scalar::Scalar;

use super::utility::{min_effort, Strategy};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Item<T> {
    /// Net value (reward minus cost).
    pub value: T,
    pub cost: T,
}

#[derive(Clone, Copy)]
struct Node {
    item: u32,
    parent: u32,
}

const ROOT: u32 = u32::MAX;

#[derive(Clone, Copy)]
struct State<T> {
    cost: T,
    value: T,
    node: u32,
}

fn selection(arena: &[Node], mut node: u32) -> Vec<usize> {
    let mut out = Vec::new();
    while node != ROOT {
        let n = arena[node as usize];
        out.push(n.item as usize);
        node = n.parent;
    }
    out.reverse();
    out
}

/// Chooses a subset of `items` with total cost at most `budget` whose
/// value is within `items.len() * resolution` of the optimum.
///
/// Costs are kept exact, so the budget is never exceeded; the frontier of
/// (cost, value) states is thinned by dropping any state whose value is
/// within `resolution` of a cheaper one. With `resolution = 0` the result
/// is optimal. Ties go to lower cost, then to the lexicographically
/// smaller index list. Returned indices are ascending.
pub fn select<T: Scalar>(items: &[Item<T>], budget: T, resolution: T) -> Vec<usize> {
    let mut arena: Vec<Node> = Vec::new();
    let mut front = vec![State {
        cost: T::zero(),
        value: T::zero(),
        node: ROOT,
    }];
    let mut merged: Vec<State<T>> = Vec::new();
    for (i, it) in items.iter().enumerate() {
        if !(it.value > T::zero()) || it.cost > budget || it.cost < T::zero() {
            continue;
        }
        let base = arena.len() as u32;
        let mut extended = Vec::new();
        for s in &front {
            let cost = s.cost + it.cost;
            if cost <= budget {
                extended.push(State {
                    cost,
                    value: s.value + it.value,
                    node: base + extended.len() as u32,
                });
                arena.push(Node {
                    item: i as u32,
                    parent: s.node,
                });
            }
        }
        merged.clear();
        let (mut a, mut b) = (0, 0);
        while a < front.len() || b < extended.len() {
            // Stable on cost, old states first, then by value descending.
            let take_old = match (front.get(a), extended.get(b)) {
                (Some(x), Some(y)) => {
                    match x.cost.partial_cmp(&y.cost).unwrap_or(Ordering::Equal) {
                        Ordering::Less => true,
                        Ordering::Greater => false,
                        Ordering::Equal => x.value >= y.value,
                    }
                }
                (Some(_), None) => true,
                _ => false,
            };
            if take_old {
                merged.push(front[a]);
                a += 1;
            } else {
                merged.push(extended[b]);
                b += 1;
            }
        }
        front.clear();
        let mut best = T::neg_infinity();
        for s in &merged {
            if front.is_empty() || s.value > best + resolution {
                best = best.max(s.value);
                front.push(*s);
            }
        }
    }
    let mut winner = front[0];
    for s in &front[1..] {
        let better = if s.value != winner.value {
            s.value > winner.value
        } else if s.cost != winner.cost {
            s.cost < winner.cost
        } else {
            selection(&arena, s.node) < selection(&arena, winner.node)
        };
        if better {
            winner = *s;
        }
    }
    selection(&arena, winner.node)
}

/// Value-maximising effort allocation for one user given per-badge values,
/// abilities and thresholds. Only badges won at their minimal effort are
/// funded; badges that are free (threshold 0) are held without effort.
pub fn best_response<T: Scalar>(
    values: &[T],
    ability: &[T],
    budget: T,
    thetas: &[T],
    resolution: T,
) -> Strategy<T> {
    let mut badges = Vec::new();
    let mut items = Vec::new();
    for b in 0..values.len() {
        let Some(cost) = min_effort(thetas[b], ability[b]) else {
            continue;
        };
        if cost <= T::zero() || cost > budget {
            continue;
        }
        let net = values[b] - cost;
        if net > T::zero() {
            badges.push(b);
            items.push(Item { value: net, cost });
        }
    }
    let chosen = select(&items, budget, resolution);
    Strategy::from_efforts(chosen.into_iter().map(|i| (badges[i], items[i].cost)))
}
