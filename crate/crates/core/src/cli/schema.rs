//! Output file schemas and the self-check behind `--validate-schemas`.

use std::path::Path;

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Column {
    Int,
    /// Float, `inf`, `-inf` or `nan`.
    Float,
    Bool,
    Text,
}

use Column::*;

/// Fixed-header CSV schemas, keyed by file name.
const SCHEMAS: &[(&str, &[(&str, Column)])] = &[
    ("trajectories.csv", &[("agent_id", Int), ("k", Int), ("t", Float), ("x", Float), ("y", Float), ("vx", Float), ("vy", Float)]),
    ("assignment.csv", &[("agent_id", Int), ("role_id", Int), ("cost", Float)]),
    (
        "trace.csv",
        &[("step", Int), ("agent_id", Int), ("x", Float), ("y", Float), ("vx", Float), ("vy", Float), ("published_version", Int)],
    ),
    (
        "metrics.csv",
        &[
            ("scenario", Text),
            ("mode", Text),
            ("feasible", Bool),
            ("total_cost", Float),
            ("iterations_mean", Float),
            ("min_dist", Float),
            ("avg_jerk", Float),
            ("collision_frames", Int),
        ],
    ),
    (
        "aggregate.csv",
        &[
            ("mode", Text),
            ("runs", Int),
            ("feasible_pct", Float),
            ("mean_total_cost", Float),
            ("mean_iterations", Float),
            ("min_dist", Float),
            ("avg_jerk", Float),
            ("collision_frames", Int),
        ],
    ),
];

pub const METRICS_HEADER: &str = "scenario,mode,feasible,total_cost,iterations_mean,min_dist,avg_jerk,collision_frames";
pub const AGGREGATE_HEADER: &str = "mode,runs,feasible_pct,mean_total_cost,mean_iterations,min_dist,avg_jerk,collision_frames";

fn cell_ok(kind: Column, v: &str) -> bool {
    match kind {
        Int => v.parse::<i64>().is_ok(),
        Float => v.parse::<f64>().is_ok(),
        Bool => v == "true" || v == "false",
        Text => !v.is_empty() && !v.contains(','),
    }
}

fn invalid(path: &Path, line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Parse { path: path.display().to_string(), message: format!("line {line}: {msg}") }
}

/// Checks `text` against a fixed header.
fn check_fixed(path: &Path, text: &str, cols: &[(&str, Column)]) -> Result<()> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| invalid(path, 1, "empty file"))?;
    let expected: Vec<&str> = cols.iter().map(|c| c.0).collect();
    if header != expected.join(",") {
        return Err(invalid(path, 1, format!("header '{header}', expected '{}'", expected.join(","))));
    }
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(invalid(path, i + 2, format!("{} fields, expected {}", fields.len(), cols.len())));
        }
        for (v, (name, kind)) in fields.iter().zip(cols) {
            if !cell_ok(*kind, v) {
                return Err(invalid(path, i + 2, format!("bad {name} value '{v}'")));
            }
        }
    }
    Ok(())
}

/// `agent_id,role_<id>...` followed by one float row per agent.
fn check_q(path: &Path, text: &str) -> Result<()> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| invalid(path, 1, "empty file"))?;
    let cols: Vec<&str> = header.split(',').collect();
    let ok = cols.first() == Some(&"agent_id")
        && cols[1..].iter().all(|c| c.strip_prefix("role_").is_some_and(|id| id.parse::<usize>().is_ok()));
    if !ok || cols.len() < 2 {
        return Err(invalid(path, 1, format!("bad header '{header}'")));
    }
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len()
            || !cell_ok(Int, fields[0])
            || !fields[1..].iter().all(|v| cell_ok(Float, v))
        {
            return Err(invalid(path, i + 2, "bad row"));
        }
    }
    Ok(())
}

/// Validates one output file if its name has a schema; returns whether it did.
pub fn validate_file(path: &Path) -> Result<bool> {
    let Some(name) = path.file_name().and_then(|n| n.to_str()) else { return Ok(false) };
    let text = || std::fs::read_to_string(path);
    if name == "q_matrix.csv" {
        check_q(path, &text()?)?;
        return Ok(true);
    }
    match SCHEMAS.iter().find(|(n, _)| *n == name) {
        Some((_, cols)) => {
            check_fixed(path, &text()?, cols)?;
            Ok(true)
        }
        None => Ok(false),
    }
}

/// Validates every schema-bearing file under `dir`, recursively. Returns the
/// number of files checked.
pub fn validate_dir(dir: &Path) -> Result<usize> {
    let mut count = 0;
    let mut entries: Vec<_> = std::fs::read_dir(dir)?.collect::<std::io::Result<_>>()?;
    entries.sort_by_key(|e| e.path());
    for e in entries {
        let path = e.path();
        if path.is_dir() {
            count += validate_dir(&path)?;
        } else if validate_file(&path)? {
            count += 1;
        }
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metrics_header_matches_table() {
        let (_, cols) = SCHEMAS.iter().find(|(n, _)| *n == "metrics.csv").unwrap();
        assert_eq!(cols.iter().map(|c| c.0).collect::<Vec<_>>().join(","), METRICS_HEADER);
        let (_, cols) = SCHEMAS.iter().find(|(n, _)| *n == "aggregate.csv").unwrap();
        assert_eq!(cols.iter().map(|c| c.0).collect::<Vec<_>>().join(","), AGGREGATE_HEADER);
    }

    #[test]
    fn fixed_schema_checks() {
        let p = Path::new("assignment.csv");
        let cols = SCHEMAS[1].1;
        assert!(check_fixed(p, "agent_id,role_id,cost\n0,1,inf\n", cols).is_ok());
        assert!(check_fixed(p, "agent,role_id,cost\n", cols).is_err());
        assert!(check_fixed(p, "agent_id,role_id,cost\n0,x,1\n", cols).is_err());
        assert!(check_fixed(p, "agent_id,role_id,cost\n0,1\n", cols).is_err());
    }

    #[test]
    fn q_schema_checks() {
        let p = Path::new("q_matrix.csv");
        assert!(check_q(p, "agent_id,role_0,role_5\n3,0.1,inf\n").is_ok());
        assert!(check_q(p, "agent_id,r0\n3,0.1\n").is_err());
        assert!(check_q(p, "agent_id,role_0\n3,0.1,2\n").is_err());
    }
}
