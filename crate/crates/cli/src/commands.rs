use std::collections::BTreeMap;
use std::fmt::Write as _;

use badge_core::data::{load_dataset, write_dataset, Dataset, DatasetPaths};
use badge_core::eval::run_protocol;
use badge_core::game::DynamicsConfig;
use badge_core::mechanism::{
    contributions, rank_categories, ranking_csv, sweep_thresholds, sweep_topk,
};
use badge_core::mining::{read_rules, write_rules, Rule};
use badge_core::values::{empirical_ratio_curve, fit_peer_function_with, mine_rules};
use badge_core::{EquilibriumResult, Game, InferredParams, ValueModel};
use serde_json::{json, Value};

use crate::config::{RunConfig, SweepParam};
use crate::error::CliError;
use crate::output::Output;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Synth,
    Ingest,
    Fit,
    Mine,
    Eval,
    Equilibrium,
    Sweep,
    Rank,
}

impl Command {
    pub const ALL: [(Command, &'static str, &'static str); 8] = [
        (Command::Synth, "synth", "generate a synthetic dataset"),
        (
            Command::Ingest,
            "ingest",
            "validate a dataset and write it in canonical order",
        ),
        (
            Command::Fit,
            "fit",
            "fit value models and infer user and badge parameters",
        ),
        (Command::Mine, "mine", "mine sequential achievement rules"),
        (
            Command::Eval,
            "eval",
            "score held-out achievements and report AUCs",
        ),
        (
            Command::Equilibrium,
            "equilibrium",
            "run best-response dynamics to an equilibrium",
        ),
        (
            Command::Sweep,
            "sweep",
            "total contribution over thresholds or top-K badge sets",
        ),
        (
            Command::Rank,
            "rank",
            "rank badges by equilibrium contribution",
        ),
    ];

    pub fn from_name(name: &str) -> Option<Command> {
        Command::ALL.iter().find(|c| c.1 == name).map(|c| c.0)
    }
}

/// Outcome of a command; a run may finish its outputs and still report
/// that some dynamics hit the round limit.
pub struct Report {
    pub files: Vec<String>,
    pub converged: bool,
}

pub fn run(cmd: Command, cfg: &RunConfig, mut out: Output) -> Result<Report, CliError> {
    let mut converged = true;
    match cmd {
        Command::Synth => {
            let d = cfg.synthetic.generate()?;
            dataset_files(&d, &mut out)?;
        }
        Command::Ingest => {
            if !has_input(cfg) {
                return Err(CliError::config(vec![
                    "data-dir: ingest needs an input dataset".into(),
                ]));
            }
            let d = load(cfg)?;
            dataset_files(&d, &mut out)?;
        }
        Command::Fit => {
            let d = load(cfg)?;
            let model = value_model(&d, cfg)?;
            let params = params(&d, cfg)?;
            out.json(
                "peer_model.json",
                serde_json::to_value(&model.peer).expect("serialisable"),
            )?;
            out.json("params.json", params.to_json(&d))?;
            out.csv("values.csv", &values_csv(&model, &d))?;
        }
        Command::Mine => {
            let d = load(cfg)?;
            let rules = mine_rules(&d, &cfg.values)?;
            write_rules(out.claim("rules.jsonl"), &rules, &d)?;
        }
        Command::Eval => {
            let d = load(cfg)?;
            let report =
                run_protocol::<f64>(&d, &cfg.scorers, &cfg.protocol, &cfg.values, &cfg.inference)?;
            out.json(
                "eval.json",
                serde_json::to_value(&report).expect("serialisable"),
            )?;
            out.csv("eval.csv", &report.to_csv())?;
        }
        Command::Equilibrium => {
            let d = load(cfg)?;
            let game = game(&d, cfg)?;
            let r = game.run_dynamics(&cfg.dynamics);
            converged = r.converged;
            let contribs = contributions(&r.profile, &game, d.n_badges());
            let mut dump = r.to_json(&game, &d);
            dump["nash"] = nash_json(&game, &r, &cfg.dynamics, d.n_badges());
            dump["total_contribution"] = json!(contribs.iter().sum::<f64>());
            out.json("equilibrium.json", dump)?;
            out.csv("contributions.csv", &contributions_csv(&contribs, &d))?;
        }
        Command::Sweep => {
            let d = load(cfg)?;
            let game = game(&d, cfg)?;
            let curve = match cfg.sweep_param {
                SweepParam::Threshold => sweep_thresholds(&game, &cfg.grid, &cfg.dynamics)?,
                SweepParam::TopK => {
                    let r = game.run_dynamics(&cfg.dynamics);
                    converged = r.converged;
                    sweep_topk(
                        &contributions(&r.profile, &game, d.n_badges()),
                        &cfg.topk_grid,
                    )?
                }
            };
            converged &= curve.points.iter().all(|p| p.converged != Some(false));
            let mut value = serde_json::to_value(&curve).expect("serialisable");
            value["converged"] = json!(converged);
            out.json("sweep.json", value)?;
            out.csv("sweep.csv", &curve.to_csv())?;
        }
        Command::Rank => {
            let d = load(cfg)?;
            let game = game(&d, cfg)?;
            let r = game.run_dynamics(&cfg.dynamics);
            converged = r.converged;
            let ranked =
                rank_categories(&contributions(&r.profile, &game, d.n_badges()), cfg.rank_k);
            let rows: Vec<Value> = ranked
                .iter()
                .enumerate()
                .map(|(i, &(b, c))| json!({ "rank": i + 1, "badge": d.badges()[b].id.0, "contribution": c }))
                .collect();
            out.json(
                "ranking.json",
                json!({ "k": cfg.rank_k, "converged": converged, "ranking": rows }),
            )?;
            out.csv("ranking.csv", &ranking_csv(&ranked, &d))?;
        }
    }
    Ok(Report {
        files: out.finish()?,
        converged,
    })
}

fn has_input(cfg: &RunConfig) -> bool {
    cfg.data_dir.is_some() || cfg.events.is_some() || cfg.graph.is_some() || cfg.badges.is_some()
}

/// Loads the configured dataset, or generates it when no input is set.
pub fn load(cfg: &RunConfig) -> Result<Dataset, CliError> {
    if !has_input(cfg) {
        return Ok(cfg.synthetic.generate()?);
    }
    let base = cfg.data_dir.as_ref().map(DatasetPaths::in_dir);
    let mut missing = Vec::new();
    let mut pick =
        |explicit: &Option<std::path::PathBuf>, from_dir: Option<std::path::PathBuf>, key: &str| {
            let p = explicit.clone().or(from_dir);
            if p.is_none() {
                missing.push(format!("{key}: needed when data-dir is not set"));
            }
            p.unwrap_or_default()
        };
    let events = pick(
        &cfg.events,
        base.as_ref().map(|b| b.events.clone()),
        "events",
    );
    let graph = pick(&cfg.graph, base.as_ref().map(|b| b.graph.clone()), "graph");
    let badges = pick(
        &cfg.badges,
        base.as_ref().map(|b| b.badges.clone()),
        "badges",
    );
    if !missing.is_empty() {
        return Err(CliError::config(missing));
    }
    Ok(load_dataset(events, graph, badges)?)
}

fn dataset_files(d: &Dataset, out: &mut Output) -> Result<(), CliError> {
    let paths = DatasetPaths {
        events: out.claim("events.jsonl"),
        graph: out.claim("graph.csv"),
        badges: out.claim("badges.jsonl"),
    };
    write_dataset(d, &paths)?;
    let categories: std::collections::BTreeSet<&str> =
        d.badges().iter().map(|b| b.category.as_str()).collect();
    let counts: Vec<usize> = d.histories().iter().map(Vec::len).collect();
    out.json(
        "summary.json",
        json!({
            "users": d.n_users(),
            "badges": d.n_badges(),
            "categories": categories.len(),
            "events": d.events().len(),
            "edges": d.graph().n_edges(),
            "level_links": d.n_level_links(),
            "max_badges_per_user": counts.iter().max().copied().unwrap_or(0),
            "users_without_badges": counts.iter().filter(|&&c| c == 0).count(),
        }),
    )
}

fn rules(d: &Dataset, cfg: &RunConfig) -> Result<Vec<Rule>, CliError> {
    Ok(match &cfg.rules {
        Some(path) => read_rules(path, d)?,
        None => mine_rules(d, &cfg.values)?,
    })
}

fn value_model(d: &Dataset, cfg: &RunConfig) -> Result<ValueModel, CliError> {
    let curve = empirical_ratio_curve(d)?;
    let peer = fit_peer_function_with(&curve, cfg.values.family, &cfg.values.exp_search)?;
    Ok(ValueModel::from_parts(
        d,
        peer,
        &rules(d, cfg)?,
        cfg.values.weights,
    ))
}

fn params(d: &Dataset, cfg: &RunConfig) -> Result<InferredParams, CliError> {
    match &cfg.params {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let v: Value = serde_json::from_str(&text).map_err(badge_core::Error::from)?;
            Ok(InferredParams::from_json(&v, d)?)
        }
        None => Ok(InferredParams::infer(d, &cfg.inference)?),
    }
}

fn game(d: &Dataset, cfg: &RunConfig) -> Result<Game, CliError> {
    Ok(Game::new(&value_model(d, cfg)?, &params(d, cfg)?))
}

fn nash_json(game: &Game, r: &EquilibriumResult, dynamics: &DynamicsConfig, m: usize) -> Value {
    let nash = game.epsilon_nash_check(r, dynamics.resolution * m as f64);
    serde_json::to_value(nash).expect("serialisable")
}

fn values_csv(model: &ValueModel, d: &Dataset) -> String {
    let mut s = String::from("user,badge,v_pi,v_ps,v_nt,v_c\n");
    for u in 0..d.n_users() {
        let nt = model.network_trend_row(u);
        for (b, badge) in d.badges().iter().enumerate() {
            let (pi, ps) = (model.personal_interest(u, b), model.peer_leadership(u, b));
            let c = model.combine(pi, ps, nt[b]);
            writeln!(s, "{},{},{pi},{ps},{},{c}", d.users()[u], badge.id, nt[b])
                .expect("writing to a String");
        }
    }
    s
}

fn contributions_csv(contribs: &[f64], d: &Dataset) -> String {
    let by_id: BTreeMap<&str, f64> = d
        .badges()
        .iter()
        .map(|b| b.id.0.as_str())
        .zip(contribs.iter().copied())
        .collect();
    let mut s = String::from("badge,contribution\n");
    for (id, c) in by_id {
        writeln!(s, "{id},{c}").expect("writing to a String");
    }
    s
}
