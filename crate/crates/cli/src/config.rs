//! Flat `key = value` run configuration.
//!
//! Every key has a default, may be set in a config file and may be
//! overridden by a command-line flag of the same name. The resolved set of
//! keys is written next to every run's outputs and hashed into them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use badge_core::data::SyntheticConfig;
use badge_core::eval::{ProtocolConfig, ScorerKind};
use badge_core::game::{DynamicsConfig, RefreshMode};
use badge_core::inference::{AbilityGranularity, InferenceConfig, ThresholdConfig, ThresholdMode};
use badge_core::values::{ExpSearch, PeerFamily, ValueModelConfig, ValueWeights};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub struct Key {
    pub name: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

const fn key(name: &'static str, default: &'static str, help: &'static str) -> Key {
    Key {
        name,
        default,
        help,
    }
}

pub const KEYS: &[Key] = &[
    key(
        "data-dir",
        "",
        "directory with events.jsonl, graph.csv and badges.jsonl; empty means synthesize",
    ),
    key(
        "events",
        "",
        "events file, overrides <data-dir>/events.jsonl",
    ),
    key("graph", "", "graph file, overrides <data-dir>/graph.csv"),
    key(
        "badges",
        "",
        "badges file, overrides <data-dir>/badges.jsonl",
    ),
    key("rules", "", "reuse mined rules from this JSON Lines file"),
    key(
        "params",
        "",
        "reuse inferred parameters from this JSON file",
    ),
    key(
        "seed",
        "0",
        "seed for generation, inference, negative sampling and dynamics",
    ),
    key("n-users", "500", "synthetic: number of users"),
    key("n-badges", "100", "synthetic: number of badges"),
    key(
        "powerlaw-exponent",
        "2.5",
        "synthetic: exponent of the per-user achievement count law",
    ),
    key(
        "homophily",
        "0.7",
        "synthetic: probability of copying a neighbour's badge",
    ),
    key(
        "min-badges",
        "2",
        "synthetic: smallest per-user achievement count",
    ),
    key(
        "levels-per-category",
        "10",
        "synthetic: levels in each badge category",
    ),
    key(
        "follows-per-user",
        "2",
        "synthetic: follow links created per arriving user",
    ),
    key(
        "interests-per-user",
        "2",
        "synthetic: categories each user is interested in",
    ),
    key(
        "crowd-exponent",
        "1",
        "synthetic: preference for badges held by many neighbours",
    ),
    key(
        "train-fraction",
        "0.9",
        "share of events (by time) used for training in eval",
    ),
    key(
        "min-achievers",
        "100",
        "eval: drop badges with fewer achievers",
    ),
    key(
        "swap-labels",
        "false",
        "eval: swap positive and negative pairs",
    ),
    key(
        "scorers",
        "v_pi,v_ps,v_nt,v_c,utility",
        "eval: comma-separated scorers",
    ),
    key(
        "peer-family",
        "quadratic",
        "peer curve family: linear, quadratic, cubic or exponential",
    ),
    key("alpha", "1/3", "weight of the personal interest value"),
    key("beta", "1/3", "weight of the peer leadership value"),
    key(
        "min-support",
        "auto",
        "mining: minimum support, auto = max(2, ceil(1% of users))",
    ),
    key("max-len", "5", "mining: maximum pattern length"),
    key(
        "base-rate-rules",
        "false",
        "mining: emit empty-antecedent rules",
    ),
    key(
        "ability-mix",
        "0.85",
        "weight of observed achievements in inferred ability",
    ),
    key(
        "ability-granularity",
        "badge",
        "ability per badge or per category",
    ),
    key(
        "threshold-mode",
        "index-ratio",
        "raw threshold score: index-ratio or total-over-index",
    ),
    key(
        "eta-cap",
        "10",
        "upper bound on the threshold scaling factor",
    ),
    key("max-threshold", "1", "threshold of badges nobody achieved"),
    key(
        "resolution",
        "0.001",
        "effort discretisation of the best-response solver",
    ),
    key(
        "max-rounds",
        "50",
        "round limit of the best-response dynamics",
    ),
    key(
        "refresh",
        "per-update",
        "peer value refresh: per-update or per-round",
    ),
    key("param", "threshold", "sweep: threshold or topk"),
    key(
        "grid",
        "0:1:0.1",
        "sweep: thresholds as start:stop:step or a comma list",
    ),
    key(
        "topk-grid",
        "1,2,3,4,5,10,20,30,40,50,100",
        "sweep: K values for top-k",
    ),
    key("rank-k", "10", "rank: number of badges listed"),
];

/// Raw resolved values keyed by name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Resolved(BTreeMap<&'static str, String>);

impl Resolved {
    /// Defaults, then the file, then flags.
    pub fn build(file: Option<&Path>, flags: &[(&'static str, String)]) -> Result<Self, CliError> {
        let mut values: BTreeMap<&'static str, String> = KEYS
            .iter()
            .map(|k| (k.name, k.default.to_string()))
            .collect();
        let mut problems = Vec::new();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::config(vec![format!("config: cannot read {}: {e}", path.display())])
            })?;
            let mut seen = BTreeMap::new();
            for (i, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let Some((k, v)) = line.split_once('=') else {
                    problems.push(format!("config line {}: expected key = value", i + 1));
                    continue;
                };
                let (k, v) = (k.trim(), v.trim());
                match KEYS.iter().find(|key| key.name == k) {
                    Some(key) => {
                        if seen.insert(key.name, i + 1).is_some() {
                            problems.push(format!("{k}: set more than once"));
                        }
                        values.insert(key.name, v.to_string());
                    }
                    None => problems.push(format!("{k}: unknown key")),
                }
            }
        }
        for (k, v) in flags {
            values.insert(k, v.clone());
        }
        if problems.is_empty() {
            Ok(Resolved(values))
        } else {
            Err(CliError::config(problems))
        }
    }

    pub fn get(&self, key: &str) -> &str {
        &self.0[key]
    }

    /// Canonical `key = value` text, one line per key.
    pub fn text(&self) -> String {
        self.0
            .iter()
            .map(|(k, v)| format!("{k} = {v}").trim_end().to_string() + "\n")
            .collect()
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.text().as_bytes()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    Threshold,
    TopK,
}

/// Typed view of a [`Resolved`] config.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub data_dir: Option<PathBuf>,
    pub events: Option<PathBuf>,
    pub graph: Option<PathBuf>,
    pub badges: Option<PathBuf>,
    pub rules: Option<PathBuf>,
    pub params: Option<PathBuf>,
    pub synthetic: SyntheticConfig,
    pub protocol: ProtocolConfig,
    pub scorers: Vec<ScorerKind>,
    pub values: ValueModelConfig<f64>,
    pub inference: InferenceConfig,
    pub dynamics: DynamicsConfig,
    pub sweep_param: SweepParam,
    pub grid: Vec<f64>,
    pub topk_grid: Vec<usize>,
    pub rank_k: usize,
}

/// Collects parse failures so that all of them can be reported at once.
struct Parser<'a> {
    r: &'a Resolved,
    problems: Vec<String>,
}

impl Parser<'_> {
    fn fail<T>(&mut self, key: &str, msg: impl std::fmt::Display) -> Option<T> {
        self.problems.push(format!("{key}: {msg}"));
        None
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str) -> Option<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.r.get(key);
        match raw.parse() {
            Ok(v) => Some(v),
            Err(e) => self.fail(key, format!("cannot parse `{raw}`: {e}")),
        }
    }

    fn real(&mut self, key: &str) -> Option<f64> {
        let raw = self.r.get(key);
        match parse_real(raw) {
            Some(v) if v.is_finite() => Some(v),
            _ => self.fail(key, format!("`{raw}` is not a finite number")),
        }
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        let raw = self.r.get(key);
        (!raw.is_empty()).then(|| PathBuf::from(raw))
    }

    fn check(&mut self, key: &str, ok: bool, msg: &str) {
        if !ok {
            self.problems.push(format!("{key}: {msg}"));
        }
    }
}

/// Decimal number or a `p/q` fraction.
fn parse_real(s: &str) -> Option<f64> {
    match s.split_once('/') {
        Some((p, q)) => {
            let (p, q): (f64, f64) = (p.trim().parse().ok()?, q.trim().parse().ok()?);
            (q != 0.0).then(|| p / q)
        }
        None => s.parse().ok(),
    }
}

/// Number of digits after the decimal point.
fn decimals(s: &str) -> usize {
    s.split_once('.').map_or(0, |(_, f)| {
        f.trim_end_matches(|c: char| !c.is_ascii_digit()).len()
    })
}

/// `start:stop:step` (inclusive) or a comma-separated list. Range points
/// are rounded to the inputs' decimal precision so that `0:1:0.1` gives
/// exactly `0.3` rather than `0.30000000000000004`.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (a, b, h) = match (
                start.parse::<f64>(),
                stop.parse::<f64>(),
                step.parse::<f64>(),
            ) {
                (Ok(a), Ok(b), Ok(h)) => (a, b, h),
                _ => return Err(format!("`{s}` is not start:stop:step")),
            };
            if h.is_nan() || h <= 0.0 || !a.is_finite() || !b.is_finite() || b < a {
                return Err(format!("`{s}` needs step > 0 and stop >= start"));
            }
            let n = ((b - a) / h + 1e-9).floor() as usize;
            if n > 100_000 {
                return Err(format!("`{s}` has too many points"));
            }
            let scale = 10f64.powi(decimals(start).max(decimals(step)) as i32);
            Ok((0..=n)
                .map(|i| ((a + i as f64 * h) * scale).round() / scale)
                .collect())
        }
        [_] => s
            .split(',')
            .map(|x| {
                x.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("`{x}` is not a number"))
            })
            .collect(),
        _ => Err(format!("`{s}` is not start:stop:step")),
    }
}

impl RunConfig {
    pub fn from_resolved(r: &Resolved) -> Result<Self, CliError> {
        let mut p = Parser {
            r,
            problems: Vec::new(),
        };
        let seed = p.parsed::<u64>("seed");

        let n_users = p.parsed::<usize>("n-users");
        let n_badges = p.parsed::<usize>("n-badges");
        let exponent = p.real("powerlaw-exponent");
        let homophily = p.real("homophily");
        let min_badges = p.parsed::<usize>("min-badges");
        let levels = p.parsed::<usize>("levels-per-category");
        let follows = p.parsed::<usize>("follows-per-user");
        let interests = p.parsed::<usize>("interests-per-user");
        let crowd = p.real("crowd-exponent");
        if let Some(n) = n_users {
            p.check("n-users", n >= 1, "must be at least 1");
        }
        if let Some(m) = n_badges {
            p.check("n-badges", m >= 1, "must be at least 1");
        }
        if let Some(x) = exponent {
            p.check("powerlaw-exponent", x > 1.0, "must be greater than 1");
        }
        if let Some(h) = homophily {
            p.check("homophily", (0.0..=1.0).contains(&h), "must lie in [0, 1]");
        }
        if let Some(l) = levels {
            p.check("levels-per-category", l >= 1, "must be at least 1");
        }
        if let Some(k) = interests {
            p.check("interests-per-user", k >= 1, "must be at least 1");
        }
        if let Some(c) = crowd {
            p.check("crowd-exponent", c >= 0.0, "must be at least 0");
        }

        let train_fraction = p.real("train-fraction");
        if let Some(f) = train_fraction {
            p.check("train-fraction", f > 0.0 && f < 1.0, "must lie in (0, 1)");
        }
        let min_achievers = p.parsed::<usize>("min-achievers");
        let swap_labels = p.parsed::<bool>("swap-labels");
        let scorers: Option<Vec<ScorerKind>> = {
            let raw = p.r.get("scorers").to_string();
            let parsed: Result<Vec<ScorerKind>, _> =
                raw.split(',').map(|s| s.trim().parse()).collect();
            match parsed {
                Ok(v) if !v.is_empty() => Some(v),
                Ok(_) => p.fail("scorers", "list is empty"),
                Err(e) => p.fail("scorers", e),
            }
        };

        let family = p.parsed::<PeerFamily>("peer-family");
        let alpha = p.real("alpha");
        let beta = p.real("beta");
        let weights = match (alpha, beta) {
            (Some(a), Some(b)) => match ValueWeights::new(a, b) {
                Ok(w) => Some(w),
                Err(_) => p.fail("alpha/beta", "need alpha, beta >= 0 and alpha + beta <= 1"),
            },
            _ => None,
        };
        let min_support = match p.r.get("min-support") {
            "auto" => Some(None),
            _ => p.parsed::<usize>("min-support").map(Some),
        };
        if let Some(Some(s)) = min_support {
            p.check("min-support", s >= 1, "must be at least 1");
        }
        let max_len = p.parsed::<usize>("max-len");
        if let Some(l) = max_len {
            p.check("max-len", l >= 1, "must be at least 1");
        }
        let base_rate = p.parsed::<bool>("base-rate-rules");

        let mix = p.real("ability-mix");
        if let Some(x) = mix {
            p.check(
                "ability-mix",
                (0.0..=1.0).contains(&x),
                "must lie in [0, 1]",
            );
        }
        let granularity = match p.r.get("ability-granularity") {
            "badge" => Some(AbilityGranularity::Badge),
            "category" => Some(AbilityGranularity::Category),
            other => p.fail(
                "ability-granularity",
                format!("`{other}` is not badge or category"),
            ),
        };
        let mode = p.parsed::<ThresholdMode>("threshold-mode");
        let eta_cap = p.real("eta-cap");
        if let Some(c) = eta_cap {
            p.check("eta-cap", c > 0.0, "must be positive");
        }
        let max_threshold = p.real("max-threshold");
        if let Some(t) = max_threshold {
            p.check("max-threshold", t >= 0.0, "must be at least 0");
        }

        let resolution = p.real("resolution");
        if let Some(r) = resolution {
            p.check("resolution", r > 0.0, "must be positive");
        }
        let max_rounds = p.parsed::<usize>("max-rounds");
        if let Some(n) = max_rounds {
            p.check("max-rounds", n >= 1, "must be at least 1");
        }
        let refresh = p.parsed::<RefreshMode>("refresh");

        let sweep_param = match p.r.get("param") {
            "threshold" => Some(SweepParam::Threshold),
            "topk" | "top-k" => Some(SweepParam::TopK),
            other => p.fail("param", format!("`{other}` is not threshold or topk")),
        };
        let grid = match parse_grid(p.r.get("grid")) {
            Ok(g) if g.windows(2).all(|w| w[0] < w[1]) && !g.is_empty() => Some(g),
            Ok(_) => p.fail("grid", "values must be strictly increasing"),
            Err(e) => p.fail("grid", e),
        };
        let topk_grid: Option<Vec<usize>> = {
            let raw = p.r.get("topk-grid").to_string();
            match raw
                .split(',')
                .map(|s| s.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
            {
                Ok(g) if !g.is_empty() && g.windows(2).all(|w| w[0] < w[1]) => Some(g),
                Ok(_) => p.fail("topk-grid", "values must be strictly increasing"),
                Err(e) => p.fail("topk-grid", e),
            }
        };
        let rank_k = p.parsed::<usize>("rank-k");

        let data_dir = p.path("data-dir");
        let events = p.path("events");
        let graph = p.path("graph");
        let badges = p.path("badges");
        let rules = p.path("rules");
        let params = p.path("params");

        if !p.problems.is_empty() {
            return Err(CliError::config(p.problems));
        }
        // Every option is Some once no problem was recorded.
        let seed = seed.unwrap();
        let mut synthetic = SyntheticConfig::new(
            n_users.unwrap(),
            n_badges.unwrap(),
            exponent.unwrap(),
            homophily.unwrap(),
            seed,
        );
        synthetic.min_badges = min_badges.unwrap();
        synthetic.levels_per_category = levels.unwrap();
        synthetic.follows_per_user = follows.unwrap();
        synthetic.interests_per_user = interests.unwrap();
        synthetic.crowd_exponent = crowd.unwrap();
        Ok(RunConfig {
            data_dir,
            events,
            graph,
            badges,
            rules,
            params,
            synthetic,
            protocol: ProtocolConfig {
                train_fraction: train_fraction.unwrap(),
                min_achievers: min_achievers.unwrap(),
                negative_seed: seed,
                swap_labels: swap_labels.unwrap(),
            },
            scorers: scorers.unwrap(),
            values: ValueModelConfig {
                family: family.unwrap(),
                weights: weights.unwrap(),
                min_support: min_support.unwrap(),
                max_len: max_len.unwrap(),
                base_rate_rules: base_rate.unwrap(),
                exp_search: ExpSearch::default(),
            },
            inference: InferenceConfig {
                ability_mix: mix.unwrap(),
                seed,
                granularity: granularity.unwrap(),
                threshold: ThresholdConfig {
                    mode: mode.unwrap(),
                    eta_cap: eta_cap.unwrap(),
                    max_threshold: max_threshold.unwrap(),
                },
            },
            dynamics: DynamicsConfig {
                max_rounds: max_rounds.unwrap(),
                seed,
                resolution: resolution.unwrap(),
                refresh: refresh.unwrap(),
            },
            sweep_param: sweep_param.unwrap(),
            grid: grid.unwrap(),
            topk_grid: topk_grid.unwrap(),
            rank_k: rank_k.unwrap(),
        })
    }
}
