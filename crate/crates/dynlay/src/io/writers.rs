//! Artifact writers: the metrics CSV, per-snapshot SVG frames, and the final
//! layout JSON.
//!
//! Every file is written atomically (temp sibling, then rename) so a crashed
//! run never leaves a half-written artifact. Floating-point values are
//! serialized with their shortest round-trip representation, which makes the
//! byte output a pure function of the numbers and lets a reader recover them
//! exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use crate::engine::{Canvas, Snapshot};
use crate::graph::{Layout, NodeId, Position};
use crate::metrics::{MetricSample, MetricSeries};

#[derive(Debug, thiserror::Error)]
pub enum ArtifactError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: malformed metrics row `{content}`")]
    MalformedRow {
        path: String,
        line: usize,
        content: String,
    },
    #[error("cannot parse {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

fn io_err(path: &Path, source: io::Error) -> ArtifactError {
    ArtifactError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes `bytes` to `path` via a temp sibling and an atomic rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ArtifactError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "artifact".to_string());
    let tmp = match dir {
        Some(d) => d.join(format!(".{file_name}.tmp")),
        None => std::path::PathBuf::from(format!(".{file_name}.tmp")),
    };
    fs::write(&tmp, bytes).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

/// Column order of the metrics CSV.
pub const METRICS_HEADER: &str = "wall_s,iteration,ec,ec_sd,nodes,edges";

/// Renders the series as CSV: one header line, one row per sample, LF line
/// endings. An empty series still gets the header.
pub fn render_metrics_csv(series: &MetricSeries) -> String {
    let mut out = String::with_capacity(32 * (series.len() + 1));
    out.push_str(METRICS_HEADER);
    out.push('\n');
    for s in series.samples() {
        let _ = writeln!(
            out,
            "{:?},{},{},{:?},{},{}",
            s.wall_s, s.iteration, s.ec, s.ec_sd, s.nodes, s.edges
        );
    }
    out
}

pub fn write_metrics_csv(path: &Path, series: &MetricSeries) -> Result<(), ArtifactError> {
    write_atomic(path, render_metrics_csv(series).as_bytes())
}

/// Reads a metrics CSV back into a series. The `ec_sd` column is a filler 0
/// when a sample had no edges, so definedness is recovered from `edges`.
pub fn parse_metrics_csv(path: &Path) -> Result<MetricSeries, ArtifactError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let malformed = |idx: usize, line: &str| ArtifactError::MalformedRow {
        path: path.display().to_string(),
        line: idx + 1,
        content: line.to_string(),
    };
    let mut series = MetricSeries::default();
    for (idx, line) in text.lines().enumerate() {
        if idx == 0 {
            if line != METRICS_HEADER {
                return Err(malformed(idx, line));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let [wall_s, iteration, ec, ec_sd, nodes, edges] = fields.as_slice() else {
            return Err(malformed(idx, line));
        };
        let sample = (|| -> Option<MetricSample> {
            let edges: usize = edges.parse().ok()?;
            Some(MetricSample {
                wall_s: wall_s.parse().ok()?,
                iteration: iteration.parse().ok()?,
                ec: ec.parse().ok()?,
                ec_sd: ec_sd.parse().ok()?,
                ec_sd_defined: edges > 0,
                nodes: nodes.parse().ok()?,
                edges,
            })
        })()
        .ok_or_else(|| malformed(idx, line))?;
        series.push(sample);
    }
    Ok(series)
}

/// Renders one snapshot as an SVG frame: every edge as a `<line>`, then
/// every node as a `<circle>` on top, nothing else.
pub fn render_svg(snapshot: &Snapshot) -> String {
    let canvas = snapshot.layout.canvas;
    let r = (0.004 * canvas.min_side()).max(1.0);
    let stroke = (0.001 * canvas.min_side()).max(0.5);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {:?} {:?}\">",
        canvas.width(),
        canvas.height()
    );
    for (src, dst) in &snapshot.edges {
        let a = snapshot
            .layout
            .position(src)
            .expect("snapshot layout covers every edge endpoint");
        let b = snapshot
            .layout
            .position(dst)
            .expect("snapshot layout covers every edge endpoint");
        let _ = writeln!(
            out,
            "  <line x1=\"{:?}\" y1=\"{:?}\" x2=\"{:?}\" y2=\"{:?}\" stroke=\"#5b7da0\" stroke-width=\"{stroke:?}\"/>",
            a.x, a.y, b.x, b.y
        );
    }
    for (_, p) in snapshot.layout.iter() {
        let _ = writeln!(
            out,
            "  <circle cx=\"{:?}\" cy=\"{:?}\" r=\"{r:?}\" fill=\"#c94f3d\"/>",
            p.x, p.y
        );
    }
    out.push_str("</svg>\n");
    out
}

pub fn write_svg_snapshot(path: &Path, snapshot: &Snapshot) -> Result<(), ArtifactError> {
    write_atomic(path, render_svg(snapshot).as_bytes())
}

/// Serialized form of a layout: canvas plus name-sorted positions, so equal
/// layouts always produce identical bytes.
#[derive(Debug, serde::Serialize, serde::Deserialize)]
pub struct LayoutFile {
    pub canvas: Canvas,
    pub positions: BTreeMap<String, (f64, f64)>,
}

impl LayoutFile {
    pub fn from_layout(layout: &Layout) -> Self {
        LayoutFile {
            canvas: layout.canvas,
            positions: layout
                .iter()
                .map(|(id, p)| (id.as_str().to_string(), (p.x, p.y)))
                .collect(),
        }
    }

    pub fn into_layout(self) -> Layout {
        let mut layout = Layout::new(self.canvas);
        for (id, (x, y)) in self.positions {
            layout.set_position(NodeId::from(id), Position::new(x, y));
        }
        layout
    }
}

pub fn write_layout_json(path: &Path, layout: &Layout) -> Result<(), ArtifactError> {
    let file = LayoutFile::from_layout(layout);
    let mut text = serde_json::to_string_pretty(&file).expect("layout serialization is total");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_layout_json(path: &Path) -> Result<Layout, ArtifactError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let file: LayoutFile = serde_json::from_str(&text).map_err(|e| ArtifactError::Json {
        path: path.display().to_string(),
        source: e,
    })?;
    Ok(file.into_layout())
}
