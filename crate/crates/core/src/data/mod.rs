//! Canonical data model: users, leveled badges, achievement events and the
//! follow graph.
//!
//! Users and badges are kept sorted by identifier and referenced internally
//! by index, so index order equals identifier order everywhere.

mod io;
mod split;
mod synth;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{load_dataset, read_badges, read_events, read_graph, write_dataset, DatasetPaths};
pub use split::{sample_negatives, temporal_split, TemporalSplit};
pub use synth::{generate_synthetic, SyntheticConfig};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserId(pub String);

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BadgeId(pub String);

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for BadgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for UserId {
    fn from(s: &str) -> Self {
        UserId(s.to_owned())
    }
}

impl From<&str> for BadgeId {
    fn from(s: &str) -> Self {
        BadgeId(s.to_owned())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Badge {
    pub id: BadgeId,
    pub name: String,
    pub category: String,
    pub level: u32,
    /// Badge one level below in the same category.
    pub prev_level: Option<BadgeId>,
}

impl Badge {
    pub fn new(id: &str, category: &str, level: u32, prev: Option<&str>) -> Self {
        Badge {
            id: BadgeId::from(id),
            name: id.to_owned(),
            category: category.to_owned(),
            level,
            prev_level: prev.map(BadgeId::from),
        }
    }
}

/// One achieve link. `user` and `badge` are indices into the owning dataset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AchievementEvent {
    pub ts: i64,
    pub user: usize,
    pub badge: usize,
}

/// Directed follow graph with a cached undirected view.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SocialGraph {
    out: Vec<Vec<usize>>,
    undirected: Vec<Vec<usize>>,
}

impl SocialGraph {
    /// Builds the graph over `n` users. Self-loops and duplicate edges are dropped.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut out = vec![BTreeSet::new(); n];
        let mut und = vec![BTreeSet::new(); n];
        for (s, d) in edges {
            if s == d {
                continue;
            }
            out[s].insert(d);
            und[s].insert(d);
            und[d].insert(s);
        }
        SocialGraph {
            out: out.into_iter().map(|s| s.into_iter().collect()).collect(),
            undirected: und.into_iter().map(|s| s.into_iter().collect()).collect(),
        }
    }

    pub fn n_users(&self) -> usize {
        self.out.len()
    }

    /// Undirected neighbourhood, sorted by index.
    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.undirected[u]
    }

    pub fn following(&self, u: usize) -> &[usize] {
        &self.out[u]
    }

    /// Directed edges in (src, dst) index order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(s, ds)| ds.iter().map(move |&d| (s, d)))
    }

    pub fn n_edges(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }
}

/// Validated, immutable badge-system dataset.
#[derive(Clone, Debug)]
pub struct Dataset {
    users: Vec<UserId>,
    badges: Vec<Badge>,
    events: Vec<AchievementEvent>,
    graph: SocialGraph,
    user_ix: HashMap<UserId, usize>,
    badge_ix: HashMap<BadgeId, usize>,
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.users == other.users
            && self.badges == other.badges
            && self.events == other.events
            && self.graph == other.graph
    }
}

impl Dataset {
    /// Builds a dataset from identifier-level records.
    ///
    /// The user universe is every id mentioned in `users`, the events or the
    /// edges. Duplicate (user, badge) achievements collapse to the earliest
    /// timestamp.
    pub fn from_records(
        users: impl IntoIterator<Item = UserId>,
        badges: Vec<Badge>,
        events: impl IntoIterator<Item = (UserId, BadgeId, i64)>,
        edges: impl IntoIterator<Item = (UserId, UserId)>,
    ) -> Result<Self> {
        let events: Vec<_> = events.into_iter().collect();
        let edges: Vec<_> = edges.into_iter().collect();
        let mut user_set: BTreeSet<UserId> = users.into_iter().collect();
        user_set.extend(events.iter().map(|(u, _, _)| u.clone()));
        for (s, d) in &edges {
            user_set.insert(s.clone());
            user_set.insert(d.clone());
        }
        let users: Vec<UserId> = user_set.into_iter().collect();
        let user_ix: HashMap<_, _> = users.iter().cloned().zip(0..).collect();

        let mut badges = badges;
        badges.sort_by(|a, b| a.id.cmp(&b.id));
        validate_badges(&badges)?;
        let badge_ix: HashMap<_, _> = badges.iter().map(|b| b.id.clone()).zip(0..).collect();

        let mut dangling = BTreeSet::new();
        let mut earliest: HashMap<(usize, usize), i64> = HashMap::new();
        for (u, b, ts) in &events {
            match badge_ix.get(b) {
                Some(&bi) => {
                    let e = earliest.entry((user_ix[u], bi)).or_insert(*ts);
                    *e = (*e).min(*ts);
                }
                None => {
                    dangling.insert(b.0.clone());
                }
            }
        }
        if !dangling.is_empty() {
            return Err(Error::Dangling {
                ids: dangling.into_iter().collect(),
            });
        }
        let events = earliest
            .into_iter()
            .map(|((user, badge), ts)| AchievementEvent { ts, user, badge })
            .collect();
        let graph = SocialGraph::from_edges(
            users.len(),
            edges.iter().map(|(s, d)| (user_ix[s], user_ix[d])),
        );
        Ok(Self::assemble(users, badges, events, graph))
    }

    /// Index-level constructor; callers guarantee indices are in range and
    /// (user, badge) pairs are unique.
    pub(crate) fn assemble(
        users: Vec<UserId>,
        badges: Vec<Badge>,
        mut events: Vec<AchievementEvent>,
        graph: SocialGraph,
    ) -> Self {
        events.sort_unstable();
        let user_ix = users.iter().cloned().zip(0..).collect();
        let badge_ix = badges.iter().map(|b| b.id.clone()).zip(0..).collect();
        Dataset {
            users,
            badges,
            events,
            graph,
            user_ix,
            badge_ix,
        }
    }

    pub fn users(&self) -> &[UserId] {
        &self.users
    }

    pub fn badges(&self) -> &[Badge] {
        &self.badges
    }

    /// Events in deterministic (timestamp, user id, badge id) order.
    pub fn events(&self) -> &[AchievementEvent] {
        &self.events
    }

    pub fn graph(&self) -> &SocialGraph {
        &self.graph
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_badges(&self) -> usize {
        self.badges.len()
    }

    pub fn user_index(&self, id: &UserId) -> Result<usize> {
        self.user_ix
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownUser(id.0.clone()))
    }

    pub fn badge_index(&self, id: &BadgeId) -> Result<usize> {
        self.badge_ix
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownBadge(id.0.clone()))
    }

    /// Undirected peer set of a user.
    pub fn neighbor_set(&self, id: &UserId) -> Result<BTreeSet<UserId>> {
        let u = self.user_index(id)?;
        Ok(self
            .graph
            .neighbors(u)
            .iter()
            .map(|&v| self.users[v].clone())
            .collect())
    }

    /// Same users, badges and graph with only the first `n` events.
    pub(crate) fn with_event_prefix(&self, n: usize) -> Self {
        Dataset {
            events: self.events[..n].to_vec(),
            ..self.clone()
        }
    }

    /// Restricts the badge universe; events on dropped badges are removed.
    /// Level links to dropped badges are cut.
    pub fn restrict_badges(&self, keep: impl Fn(usize) -> bool) -> Self {
        let mut remap = vec![None; self.badges.len()];
        let mut badges = Vec::new();
        for (i, b) in self.badges.iter().enumerate() {
            if keep(i) {
                remap[i] = Some(badges.len());
                badges.push(b.clone());
            }
        }
        let kept: BTreeSet<BadgeId> = badges.iter().map(|b| b.id.clone()).collect();
        for b in &mut badges {
            if b.prev_level.as_ref().is_some_and(|p| !kept.contains(p)) {
                b.prev_level = None;
            }
        }
        let events = self
            .events
            .iter()
            .filter_map(|e| {
                remap[e.badge].map(|badge| AchievementEvent {
                    ts: e.ts,
                    user: e.user,
                    badge,
                })
            })
            .collect();
        Self::assemble(self.users.clone(), badges, events, self.graph.clone())
    }

    /// Per-user achieved badges in event order.
    pub fn histories(&self) -> Vec<Vec<usize>> {
        let mut h = vec![Vec::new(); self.users.len()];
        for e in &self.events {
            h[e.user].push(e.badge);
        }
        h
    }

    /// Per-badge achiever sets, sorted by user index.
    pub fn achievers(&self) -> Vec<Vec<usize>> {
        let mut a = vec![Vec::new(); self.badges.len()];
        for e in &self.events {
            a[e.badge].push(e.user);
        }
        for v in &mut a {
            v.sort_unstable();
        }
        a
    }

    /// Achievement time lookup keyed by (user, badge).
    pub fn achieved_at(&self) -> HashMap<(usize, usize), i64> {
        self.events
            .iter()
            .map(|e| ((e.user, e.badge), e.ts))
            .collect()
    }

    /// Number of level links (badges with a lower-level predecessor).
    pub fn n_level_links(&self) -> usize {
        self.badges
            .iter()
            .filter(|b| b.prev_level.is_some())
            .count()
    }

    /// Index of the level-1 root of each badge's level chain.
    pub fn level_roots(&self) -> Vec<usize> {
        let mut roots = vec![usize::MAX; self.badges.len()];
        for i in 0..self.badges.len() {
            let mut cur = i;
            let mut steps = 0;
            while let Some(p) = &self.badges[cur].prev_level {
                match self.badge_ix.get(p) {
                    Some(&pi) if steps <= self.badges.len() => {
                        cur = pi;
                        steps += 1;
                    }
                    _ => break,
                }
            }
            roots[i] = cur;
        }
        roots
    }
}

fn validate_badges(badges: &[Badge]) -> Result<()> {
    let by_id: HashMap<&BadgeId, &Badge> = badges.iter().map(|b| (&b.id, b)).collect();
    if by_id.len() != badges.len() {
        let mut seen = BTreeSet::new();
        let dup = badges.iter().find(|b| !seen.insert(&b.id)).unwrap();
        return Err(Error::LevelLink(format!("duplicate badge id {}", dup.id)));
    }
    let mut dangling = Vec::new();
    for b in badges {
        if b.level < 1 {
            return Err(Error::LevelLink(format!("badge {} has level 0", b.id)));
        }
        let Some(prev) = &b.prev_level else { continue };
        match by_id.get(prev) {
            None => dangling.push(prev.0.clone()),
            Some(p) if p.category != b.category || p.level + 1 != b.level => {
                return Err(Error::LevelLink(format!(
                    "badge {} (category {}, level {}) links to {} (category {}, level {})",
                    b.id, b.category, b.level, p.id, p.category, p.level
                )));
            }
            Some(_) => {}
        }
    }
    if !dangling.is_empty() {
        dangling.sort();
        dangling.dedup();
        return Err(Error::Dangling { ids: dangling });
    }
    Ok(())
}
