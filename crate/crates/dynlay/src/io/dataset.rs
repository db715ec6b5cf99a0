//! Temporal edge-list parsing.
//!
//! Two wire formats are accepted and auto-detected per line: whitespace
//! separated `SRC DST TIMESTAMP` and comma separated `SRC,DST,RATING,TIME`
//! (the rating is kept as the edge weight). Lines starting with `#` and
//! blank lines are skipped.

use std::path::Path;

use crate::graph::Strictness;
use crate::stream::TemporalEdge;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed row `{content}`")]
    MalformedLine {
        path: String,
        line: usize,
        content: String,
    },
}

/// Parsed rows plus the number of malformed lines skipped (always 0 under
/// [`Strictness::Strict`], which fails instead).
pub fn parse_temporal_edge_list(
    path: &Path,
    strictness: Strictness,
) -> Result<(Vec<TemporalEdge>, usize), DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut rows = Vec::new();
    let mut skipped = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match parse_row(line) {
            Some(row) => rows.push(row),
            None if strictness == Strictness::Lenient => {
                log::warn!("{}:{}: skipping malformed row", path.display(), idx + 1);
                skipped += 1;
            }
            None => {
                return Err(DatasetError::MalformedLine {
                    path: path.display().to_string(),
                    line: idx + 1,
                    content: line.to_string(),
                });
            }
        }
    }
    Ok((rows, skipped))
}

fn parse_row(line: &str) -> Option<TemporalEdge> {
    if line.contains(',') {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let [src, dst, rating, time] = fields.as_slice() else {
            return None;
        };
        if src.is_empty() || dst.is_empty() {
            return None;
        }
        Some(TemporalEdge {
            src: (*src).into(),
            dst: (*dst).into(),
            weight: Some(rating.parse().ok()?),
            timestamp: time.parse().ok()?,
        })
    } else {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [src, dst, time] = fields.as_slice() else {
            return None;
        };
        Some(TemporalEdge {
            src: (*src).into(),
            dst: (*dst).into(),
            weight: None,
            timestamp: time.parse().ok()?,
        })
    }
}
