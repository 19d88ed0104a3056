//! Seeded synthetic badge-system generator.
//!
//! Badges come in categories of consecutive levels, and a level can only be
//! earned after the one below it. Each user draws a power-law number of
//! achievements, interests over a few categories and a latent ability
//! vector concentrated on those interests; the follow graph grows by
//! preferential attachment, and users tend to share the main interest of
//! someone they follow. Level `l` of a category needs a capacity of
//! `l / levels`, where a user's capacity in a category is their
//! ability there times a budget that grows with their achievement count.
//! At every step the acting user either copies a reachable badge that
//! neighbours already hold (probability `homophily`, favouring badges held
//! by many of them) or climbs a category chosen by ability.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AchievementEvent, Badge, BadgeId, Dataset, SocialGraph, UserId};
use crate::error::{Error, Result};

/// Generator settings. [`generate_synthetic`] fills the shape knobs with
/// their defaults.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticConfig {
    pub n_users: usize,
    pub n_badges: usize,
    pub powerlaw_exponent: f64,
    pub homophily: f64,
    pub seed: u64,
    /// Smallest per-user achievement count.
    pub min_badges: usize,
    pub levels_per_category: usize,
    /// Follow links created by each arriving user.
    pub follows_per_user: usize,
    /// Number of categories each user is interested in.
    pub interests_per_user: usize,
    /// A neighbour-held badge is copied with weight `holders^crowd_exponent`.
    pub crowd_exponent: f64,
}

impl SyntheticConfig {
    pub fn new(
        n_users: usize,
        n_badges: usize,
        powerlaw_exponent: f64,
        homophily: f64,
        seed: u64,
    ) -> Self {
        SyntheticConfig {
            n_users,
            n_badges,
            powerlaw_exponent,
            homophily,
            seed,
            min_badges: 2,
            levels_per_category: 10,
            follows_per_user: 2,
            interests_per_user: 2,
            crowd_exponent: 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_users == 0 {
            return Err(Error::param("n_users", "must be at least 1"));
        }
        if self.n_badges == 0 {
            return Err(Error::param("n_badges", "must be at least 1"));
        }
        if !(self.powerlaw_exponent > 1.0) || !self.powerlaw_exponent.is_finite() {
            return Err(Error::param("powerlaw_exponent", "must be finite and > 1"));
        }
        if !(0.0..=1.0).contains(&self.homophily) {
            return Err(Error::param("homophily", "must lie in [0, 1]"));
        }
        if self.min_badges == 0 {
            return Err(Error::param("min_badges", "must be at least 1"));
        }
        if self.levels_per_category == 0 {
            return Err(Error::param("levels_per_category", "must be at least 1"));
        }
        if self.interests_per_user == 0 {
            return Err(Error::param("interests_per_user", "must be at least 1"));
        }
        if !(self.crowd_exponent >= 0.0) || !self.crowd_exponent.is_finite() {
            return Err(Error::param("crowd_exponent", "must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn generate(&self) -> Result<Dataset> {
        self.validate()?;
        Generator::new(self).run()
    }
}

/// Generates a dataset with default shape knobs.
pub fn generate_synthetic(
    n_users: usize,
    n_badges: usize,
    powerlaw_exponent: f64,
    homophily: f64,
    seed: u64,
) -> Result<Dataset> {
    SyntheticConfig::new(n_users, n_badges, powerlaw_exponent, homophily, seed).generate()
}

fn id_width(n: usize) -> usize {
    (n.max(2) - 1).to_string().len()
}

/// Inverse-CDF sampler for P(k) ∝ k^-γ on `lo..=hi`.
struct DiscretePowerLaw {
    lo: usize,
    cdf: Vec<f64>,
}

impl DiscretePowerLaw {
    fn new(lo: usize, hi: usize, exponent: f64) -> Self {
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = (lo..=hi)
            .map(|k| {
                acc += (k as f64).powf(-exponent);
                acc
            })
            .collect();
        for c in &mut cdf {
            *c /= acc;
        }
        DiscretePowerLaw { lo, cdf }
    }

    fn sample(&self, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.gen();
        let i = self.cdf.partition_point(|&c| c < u);
        self.lo + i.min(self.cdf.len() - 1)
    }
}

/// Ability mass spread evenly over categories outside a user's interests.
const ABILITY_FLOOR: f64 = 0.05;

struct Generator<'a> {
    cfg: &'a SyntheticConfig,
    rng: ChaCha8Rng,
    /// badge index -> category
    cat_of: Vec<usize>,
    /// badge index -> zero-based level
    level_of: Vec<usize>,
    categories: Vec<Vec<usize>>,
}

/// Per-user state while events are generated.
struct Users {
    held: Vec<Vec<bool>>,
    history: Vec<Vec<usize>>,
    /// Latent ability over categories, summing to one.
    ability: Vec<Vec<f64>>,
    budget: Vec<f64>,
}

impl<'a> Generator<'a> {
    fn new(cfg: &'a SyntheticConfig) -> Self {
        let levels = cfg.levels_per_category;
        let cat_of: Vec<usize> = (0..cfg.n_badges).map(|b| b / levels).collect();
        let level_of: Vec<usize> = (0..cfg.n_badges).map(|b| b % levels).collect();
        let n_cat = cat_of.last().map_or(0, |c| c + 1);
        let mut categories = vec![Vec::new(); n_cat];
        for (b, &c) in cat_of.iter().enumerate() {
            categories[c].push(b);
        }
        Generator {
            cfg,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            cat_of,
            level_of,
            categories,
        }
    }

    fn badges(&self) -> Vec<Badge> {
        let w = id_width(self.cfg.n_badges);
        (0..self.cfg.n_badges)
            .map(|b| {
                let cat = self.cat_of[b];
                let level = self.level_of[b] as u32 + 1;
                Badge {
                    id: BadgeId(format!("b{b:0w$}")),
                    name: format!("Category {cat} level {level}"),
                    category: format!("cat{cat}"),
                    level,
                    prev_level: (level > 1).then(|| BadgeId(format!("b{:0w$}", b - 1))),
                }
            })
            .collect()
    }

    /// Preferential-attachment follow graph.
    fn graph(&mut self) -> SocialGraph {
        let n = self.cfg.n_users;
        let mut degree = vec![1.0f64; n];
        let mut edges = Vec::new();
        for u in 1..n {
            let k = self.cfg.follows_per_user.min(u);
            let mut targets: Vec<usize> = Vec::with_capacity(k);
            let dist = WeightedIndex::new(&degree[..u]).expect("positive weights");
            while targets.len() < k {
                let v = dist.sample(&mut self.rng);
                if !targets.contains(&v) {
                    targets.push(v);
                }
            }
            for v in targets {
                degree[u] += 1.0;
                degree[v] += 1.0;
                edges.push((u, v));
            }
        }
        SocialGraph::from_edges(n, edges)
    }

    /// Interest weights over a few categories; popular categories are
    /// picked more often (Zipf-like) and the main interest is often taken
    /// from a followed user.
    fn interests(&mut self, graph: &SocialGraph) -> Vec<Vec<(usize, f64)>> {
        let n_cat = self.categories.len();
        let pop: Vec<f64> = (0..n_cat).map(|c| 1.0 / (c as f64 + 1.0)).collect();
        let pick = WeightedIndex::new(&pop).expect("positive weights");
        let k = self.cfg.interests_per_user.min(n_cat);
        let mut all: Vec<Vec<(usize, f64)>> = Vec::with_capacity(self.cfg.n_users);
        for u in 0..self.cfg.n_users {
            let mut cats: Vec<usize> = Vec::with_capacity(k);
            let followed = graph.following(u);
            if !followed.is_empty() && self.rng.gen::<f64>() < self.cfg.homophily {
                let v = followed[self.rng.gen_range(0..followed.len())];
                cats.push(all[v][0].0);
            }
            while cats.len() < k {
                let c = pick.sample(&mut self.rng);
                if !cats.contains(&c) {
                    cats.push(c);
                }
            }
            let mut w: Vec<f64> = cats.iter().map(|_| self.rng.gen_range(0.2..1.0)).collect();
            w[0] += 1.0;
            all.push(cats.into_iter().zip(w).collect());
        }
        all
    }

    fn ability(&self, interest: &[(usize, f64)]) -> Vec<f64> {
        let n_cat = self.categories.len();
        let mut a = vec![ABILITY_FLOOR / n_cat as f64; n_cat];
        let total: f64 = interest.iter().map(|i| i.1).sum();
        for &(c, w) in interest {
            a[c] += (1.0 - ABILITY_FLOOR) * w / total;
        }
        a
    }

    fn level_threshold(&self, b: usize) -> f64 {
        (self.level_of[b] + 1) as f64 / self.cfg.levels_per_category as f64
    }

    /// Unheld, next in its chain, and within the user's capacity.
    fn reachable(&self, users: &Users, u: usize, b: usize) -> bool {
        let held = &users.held[u];
        !held[b]
            && (self.level_of[b] == 0 || held[b - 1])
            && users.ability[u][self.cat_of[b]] * users.budget[u] >= self.level_threshold(b)
    }

    fn run(mut self) -> Result<Dataset> {
        let cfg = self.cfg;
        let badges = self.badges();
        let graph = self.graph();
        let interests = self.interests(&graph);
        let counts = DiscretePowerLaw::new(
            cfg.min_badges.min(cfg.n_badges),
            cfg.n_badges,
            cfg.powerlaw_exponent,
        );
        let quota: Vec<usize> = (0..cfg.n_users)
            .map(|_| counts.sample(&mut self.rng))
            .collect();
        let levels = cfg.levels_per_category as f64;
        let mut users = Users {
            held: vec![vec![false; cfg.n_badges]; cfg.n_users],
            history: vec![Vec::new(); cfg.n_users],
            ability: interests.iter().map(|i| self.ability(i)).collect(),
            budget: quota.iter().map(|&q| q as f64 / levels).collect(),
        };
        // Random interleaving of all achievement slots.
        let mut slots: Vec<(usize, u8)> = quota
            .iter()
            .enumerate()
            .flat_map(|(u, &k)| std::iter::repeat_n((u, 0u8), k))
            .collect();
        slots.shuffle(&mut self.rng);
        let mut events = Vec::new();
        let mut ts: i64 = 0;
        let mut queue: std::collections::VecDeque<(usize, u8)> = slots.into();
        const MAX_DEFERRALS: u8 = 3;
        while let Some((u, deferred)) = queue.pop_front() {
            let choice = if users.history[u].is_empty() {
                self.climb(&users, u, &interests[u])
            } else if self.rng.gen::<f64>() < cfg.homophily {
                match self.copy_pick(&users, u, &graph) {
                    Some(b) => Some(b),
                    None if deferred < MAX_DEFERRALS => {
                        let pos = self.rng.gen_range(0..=queue.len());
                        queue.insert(pos, (u, deferred + 1));
                        continue;
                    }
                    None if cfg.homophily < 1.0 => self.climb(&users, u, &interests[u]),
                    None => None,
                }
            } else {
                self.climb(&users, u, &interests[u])
            };
            if let Some(b) = choice {
                ts += self.rng.gen_range(1..=10);
                users.held[u][b] = true;
                users.history[u].push(b);
                events.push(AchievementEvent {
                    ts,
                    user: u,
                    badge: b,
                });
            }
        }
        let wu = id_width(cfg.n_users);
        let users = (0..cfg.n_users)
            .map(|u| UserId(format!("u{u:0wu$}")))
            .collect();
        Ok(Dataset::assemble(users, badges, events, graph))
    }

    /// Reachable badge held by neighbours, weighted by holder count raised
    /// to the crowd exponent and by the user's ability in its category.
    fn copy_pick(&mut self, users: &Users, u: usize, graph: &SocialGraph) -> Option<usize> {
        let mut tally: Vec<(usize, f64)> = Vec::new();
        for &v in graph.neighbors(u) {
            for &b in &users.history[v] {
                if !self.reachable(users, u, b) {
                    continue;
                }
                match tally.iter_mut().find(|(x, _)| *x == b) {
                    Some(t) => t.1 += 1.0,
                    None => tally.push((b, 1.0)),
                }
            }
        }
        if tally.is_empty() {
            return None;
        }
        tally.sort_by_key(|t| t.0);
        let ability = &users.ability[u];
        let weights = tally
            .iter()
            .map(|&(b, n)| n.powf(self.cfg.crowd_exponent) * ability[self.cat_of[b]]);
        let dist = WeightedIndex::new(weights).ok()?;
        Some(tally[dist.sample(&mut self.rng)].0)
    }

    /// Next reachable level in a category drawn by ability; the first badge
    /// always comes from the main interest.
    fn climb(&mut self, users: &Users, u: usize, interest: &[(usize, f64)]) -> Option<usize> {
        let next = |c: usize| {
            self.categories[c]
                .iter()
                .copied()
                .find(|&b| !users.held[u][b])
        };
        if users.history[u].is_empty() {
            return next(interest[0].0);
        }
        let open: Vec<(usize, usize)> = (0..self.categories.len())
            .filter_map(|c| {
                next(c)
                    .filter(|&b| self.reachable(users, u, b))
                    .map(|b| (c, b))
            })
            .collect();
        if let Ok(dist) = WeightedIndex::new(open.iter().map(|&(c, _)| users.ability[u][c])) {
            return Some(open[dist.sample(&mut self.rng)].1);
        }
        // Nothing within capacity: take the next level that is closest to it.
        let slack =
            |b: usize| users.ability[u][self.cat_of[b]] * users.budget[u] - self.level_threshold(b);
        (0..self.categories.len())
            .filter_map(next)
            .max_by(|&x, &y| slack(x).total_cmp(&slack(y)).then(y.cmp(&x)))
    }
}
