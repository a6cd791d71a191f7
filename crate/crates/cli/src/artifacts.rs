//! Artifact I/O: atomic file writes (`.partial` staging) and readers for
//! resuming stages from exported files.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use coordnet::{InteractionRecord, Population, SimilarityGraph};

use crate::error::CliError;

/// Writes an artifact through a `.partial` staging file that is renamed
/// into place only after the writer succeeds; a failed write leaves the
/// `.partial` file behind for inspection.
pub fn write_artifact<F>(dir: &Path, name: &str, write: F) -> Result<PathBuf, CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<(), CliError>,
{
    let final_path = dir.join(name);
    let partial_path = dir.join(format!("{name}.partial"));
    let file = File::create(&partial_path).map_err(|e| {
        CliError::input(format!("cannot create {}: {e}", partial_path.display()))
    })?;
    let mut writer = BufWriter::new(file);
    write(&mut writer)?;
    writer
        .flush()
        .map_err(|e| CliError::stage("write", format!("{}: {e}", partial_path.display())))?;
    drop(writer);
    std::fs::rename(&partial_path, &final_path).map_err(|e| {
        CliError::stage(
            "write",
            format!("renaming {} into place: {e}", partial_path.display()),
        )
    })?;
    Ok(final_path)
}

pub fn require_file(path: &Path, what: &str) -> Result<(), CliError> {
    if !path.is_file() {
        return Err(CliError::input(format!(
            "{what} not found: {}",
            path.display()
        )));
    }
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<InteractionRecord>, CliError> {
    require_file(path, "records file")?;
    let file = File::open(path)
        .map_err(|e| CliError::input(format!("cannot open {}: {e}", path.display())))?;
    let parsed = coordnet::ingest::parse_records(BufReader::new(file))
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    if parsed.skipped > 0 {
        eprintln!("[ingest] skipped {} malformed lines", parsed.skipped);
    }
    Ok(parsed.records)
}

pub fn write_population(dir: &Path, population: &Population) -> Result<(), CliError> {
    write_artifact(dir, "population.csv", |w| {
        writeln!(w, "user_id").map_err(|e| CliError::stage("ingest", e))?;
        for user in population.user_ids() {
            writeln!(w, "{user}").map_err(|e| CliError::stage("ingest", e))?;
        }
        Ok(())
    })?;
    Ok(())
}

pub fn read_population(path: &Path) -> Result<Population, CliError> {
    require_file(path, "population file")?;
    let file = File::open(path)
        .map_err(|e| CliError::input(format!("cannot open {}: {e}", path.display())))?;
    let mut users = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line =
            line.map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let line = line.trim();
        if i == 0 && line == "user_id" {
            continue;
        }
        if !line.is_empty() {
            users.push(line.to_string());
        }
    }
    if users.is_empty() {
        return Err(CliError::input(format!(
            "population file {} lists no users",
            path.display()
        )));
    }
    Ok(Population::explicit(users))
}

pub fn write_graph(dir: &Path, name: &str, graph: &SimilarityGraph) -> Result<(), CliError> {
    write_artifact(dir, name, |w| {
        graph
            .write_edge_csv(w)
            .map_err(|e| CliError::stage("export", e))
    })?;
    Ok(())
}

pub fn read_graph(path: &Path, what: &str) -> Result<SimilarityGraph, CliError> {
    require_file(path, what)?;
    let file = File::open(path)
        .map_err(|e| CliError::input(format!("cannot open {}: {e}", path.display())))?;
    SimilarityGraph::read_edge_csv(BufReader::new(file))
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn write_node_coordination(
    dir: &Path,
    scores: &BTreeMap<String, f64>,
) -> Result<(), CliError> {
    write_artifact(dir, "node_coordination.csv", |w| {
        writeln!(w, "user_id,coordination").map_err(|e| CliError::stage("sweep", e))?;
        for (user, score) in scores {
            writeln!(w, "{user},{score:.6}").map_err(|e| CliError::stage("sweep", e))?;
        }
        Ok(())
    })?;
    Ok(())
}

/// Reads a `user_id,<value>` CSV (single header line) into a map.
pub fn read_user_value_csv(path: &Path, what: &str) -> Result<BTreeMap<String, f64>, CliError> {
    require_file(path, what)?;
    let file = File::open(path)
        .map_err(|e| CliError::input(format!("cannot open {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let Some((user, value)) = line.split_once(',') else {
            return Err(CliError::input(format!(
                "{} line {}: expected user_id,value",
                path.display(),
                i + 1
            )));
        };
        match value.parse::<f64>() {
            Ok(v) => {
                map.insert(user.to_string(), v);
            }
            Err(_) if i == 0 => {} // header line
            Err(e) => {
                return Err(CliError::input(format!(
                    "{} line {}: {e}",
                    path.display(),
                    i + 1
                )));
            }
        }
    }
    Ok(map)
}

/// Loads a stopword list: one token per line, lowercased, blanks skipped.
pub fn read_stopwords(path: &Path) -> Result<std::collections::BTreeSet<String>, CliError> {
    require_file(path, "stopword file")?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    Ok(text
        .lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty())
        .collect())
}
