//! File formats: events and badges as JSON Lines, the follow graph as CSV.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Badge, BadgeId, Dataset, UserId};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct EventRecord {
    user: String,
    badge: String,
    ts: i64,
}

#[derive(Serialize, Deserialize)]
struct BadgeRecord {
    id: String,
    name: String,
    category: String,
    level: u32,
    prev: Option<String>,
}

/// Locations of the three dataset files.
#[derive(Clone, Debug)]
pub struct DatasetPaths {
    pub events: PathBuf,
    pub graph: PathBuf,
    pub badges: PathBuf,
}

impl DatasetPaths {
    /// Conventional file names inside a directory.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        DatasetPaths {
            events: dir.join("events.jsonl"),
            graph: dir.join("graph.csv"),
            badges: dir.join("badges.jsonl"),
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_owned(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn read_events(path: impl AsRef<Path>) -> Result<Vec<(UserId, BadgeId, i64)>> {
    let recs: Vec<EventRecord> = read_jsonl(path.as_ref())?;
    Ok(recs
        .into_iter()
        .map(|r| (UserId(r.user), BadgeId(r.badge), r.ts))
        .collect())
}

pub fn read_badges(path: impl AsRef<Path>) -> Result<Vec<Badge>> {
    let recs: Vec<BadgeRecord> = read_jsonl(path.as_ref())?;
    Ok(recs
        .into_iter()
        .map(|r| Badge {
            id: BadgeId(r.id),
            name: r.name,
            category: r.category,
            level: r.level,
            prev_level: r.prev.map(BadgeId),
        })
        .collect())
}

/// Reads `src,dst` rows. A leading `src,dst` header is skipped if present.
pub fn read_graph(path: impl AsRef<Path>) -> Result<Vec<(UserId, UserId)>> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(open(path)?);
    let mut edges = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            path: path.to_owned(),
            line: e.position().map_or(i + 1, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        if i == 0 && rec.len() == 2 && &rec[0] == "src" && &rec[1] == "dst" {
            continue;
        }
        if rec.len() != 2 {
            return Err(Error::Parse {
                path: path.to_owned(),
                line: rec.position().map_or(i + 1, |p| p.line() as usize),
                message: format!("expected 2 fields, found {}", rec.len()),
            });
        }
        edges.push((UserId(rec[0].to_owned()), UserId(rec[1].to_owned())));
    }
    Ok(edges)
}

/// Loads and validates a dataset from its three files.
pub fn load_dataset(
    event_path: impl AsRef<Path>,
    graph_path: impl AsRef<Path>,
    badge_path: impl AsRef<Path>,
) -> Result<Dataset> {
    let badges = read_badges(badge_path)?;
    let events = read_events(event_path)?;
    let edges = read_graph(graph_path)?;
    Dataset::from_records([], badges, events, edges)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Writes the dataset in canonical order: events by (ts, user, badge), badges
/// by id, edges by (src, dst) with a `src,dst` header.
pub fn write_dataset(d: &Dataset, paths: &DatasetPaths) -> Result<()> {
    let mut w = create(&paths.events)?;
    for e in d.events() {
        let rec = EventRecord {
            user: d.users()[e.user].0.clone(),
            badge: d.badges()[e.badge].id.0.clone(),
            ts: e.ts,
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")
            .map_err(|e| Error::io(&paths.events, e))?;
    }
    w.flush().map_err(|e| Error::io(&paths.events, e))?;

    let mut w = create(&paths.badges)?;
    for b in d.badges() {
        let rec = BadgeRecord {
            id: b.id.0.clone(),
            name: b.name.clone(),
            category: b.category.clone(),
            level: b.level,
            prev: b.prev_level.as_ref().map(|p| p.0.clone()),
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")
            .map_err(|e| Error::io(&paths.badges, e))?;
    }
    w.flush().map_err(|e| Error::io(&paths.badges, e))?;

    let mut w = create(&paths.graph)?;
    let io_err = |e| Error::io(&paths.graph, e);
    writeln!(w, "src,dst").map_err(io_err)?;
    for (s, t) in d.graph().edges() {
        writeln!(w, "{},{}", d.users()[s], d.users()[t]).map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}
