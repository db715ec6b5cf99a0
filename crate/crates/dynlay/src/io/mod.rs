//! Dataset parsing, artifact writers, and the command-line front end.
//!
//! The heart of this module is [`execute_run`]: it takes one [`RunSpec`],
//! wires up the starting graph and the update source it asks for,
//! drives the engine, and writes the run directory: `manifest.json` (written
//! before any result so a crashed run is still identifiable, then rewritten
//! with the timing summary), `metrics.csv`, `snapshots/NNNN.svg`, and
//! `layout.json`. Identical specs produce byte-identical metrics and layout
//! files.

pub mod cli;
pub mod dataset;
pub mod writers;

use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::engine::{
    self, Canvas, EngineConfig, Mode, Placement, RunResult, SnapshotCadence, TimeSource,
};
use crate::graph::{Edge, Graph, GraphError, Strictness, UpdateBatch, UpdateDelta};
use crate::models::ModelKind;
use crate::stream::{
    build_schedule, DistributionSpec, InternalClockSource, ScheduleTiming, StreamAdapter,
    UpdateSchedule, UpdateSource,
};
use dataset::parse_temporal_edge_list;
use writers::{write_atomic, write_layout_json, write_metrics_csv, write_svg_snapshot, ArtifactError};

// Salt so the schedule sampler never shares a stream with the engine rng,
// which is salted differently from the same seed.
const SCHEDULE_SEED_SALT: u64 = 0x6a09_e667_f3bc_c908;

/// Where the starting graph and the update feed come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputMode {
    /// Start empty and deliver everything as updates: dataset rows on a
    /// schedule when a dataset is given, the live wire feed otherwise.
    EmptyStream,
    /// Preload the dataset as the starting graph, then apply the live feed.
    FilePlusStream,
    /// Preload the dataset as the starting graph; no updates after that.
    FileOnly,
}

/// Arrival timing for dataset replay.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleSpec {
    /// Dataset timestamps normalized onto the run window.
    Native,
    /// Synthetic inter-arrival gaps drawn from a distribution.
    Sampled(DistributionSpec),
}

impl ScheduleSpec {
    fn timing(self) -> ScheduleTiming {
        match self {
            ScheduleSpec::Native => ScheduleTiming::Native,
            ScheduleSpec::Sampled(spec) => ScheduleTiming::Synthetic(spec),
        }
    }
}

/// Everything one run needs; the manifest echoes it verbatim.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RunSpec {
    pub algo: ModelKind,
    pub mode: Mode,
    pub input_mode: InputMode,
    /// Required unless `input_mode` is `empty-stream`.
    pub dataset: Option<PathBuf>,
    pub schedule: ScheduleSpec,
    pub duration_s: f64,
    pub tick_s: f64,
    pub seed: u64,
    pub placement: Placement,
    pub canvas: Canvas,
    pub snapshot_every: SnapshotCadence,
    pub out_dir: PathBuf,
    pub strictness: Strictness,
    pub time_source: TimeSource,
    pub keep_duplicate_edges: bool,
    pub level: u32,
}

impl Default for RunSpec {
    fn default() -> Self {
        RunSpec {
            algo: ModelKind::Fr,
            mode: Mode::Online,
            input_mode: InputMode::EmptyStream,
            dataset: None,
            schedule: ScheduleSpec::Native,
            duration_s: 300.0,
            tick_s: 0.05,
            seed: 0,
            placement: Placement::Random,
            canvas: Canvas::default(),
            snapshot_every: SnapshotCadence::default(),
            out_dir: PathBuf::from("out"),
            strictness: Strictness::Strict,
            time_source: TimeSource::Simulated,
            keep_duplicate_edges: false,
            level: 1,
        }
    }
}

/// Wall-clock and progress totals of a finished run.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TimingSummary {
    pub wall_s: f64,
    pub iterations: u64,
    pub updates: usize,
    pub finished_at_s: f64,
}

/// The [`RunSpec`] echoed alongside dataset and timing facts, written into
/// every run directory. `timing` is
/// absent until the run finishes, so its presence marks a complete run.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub spec: RunSpec,
    pub dataset_sha256: Option<String>,
    pub timing: Option<TimingSummary>,
}

pub fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<(), ArtifactError> {
    let mut text =
        serde_json::to_string_pretty(manifest).expect("manifest serialization is total");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_manifest(path: &Path) -> Result<RunManifest, ArtifactError> {
    let text = fs::read_to_string(path).map_err(|source| ArtifactError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| ArtifactError::Json {
        path: path.display().to_string(),
        source,
    })
}

/// Hex SHA-256 of a file, for pinning the dataset a run consumed.
pub fn sha256_file(path: &Path) -> Result<String, ArtifactError> {
    let bytes = fs::read(path).map_err(|source| ArtifactError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let digest = Sha256::digest(&bytes);
    let mut hex = String::with_capacity(2 * digest.len());
    for b in digest {
        let _ = write!(hex, "{b:02x}");
    }
    Ok(hex)
}

#[derive(Debug, thiserror::Error)]
pub enum RunnerError {
    #[error(transparent)]
    Dataset(#[from] dataset::DatasetError),
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
    #[error(transparent)]
    Stream(#[from] crate::stream::StreamError),
    #[error(transparent)]
    Engine(#[from] engine::RunError),
    #[error("cannot preload dataset: {0}")]
    Preload(#[from] GraphError),
    #[error("cannot create {path}: {source}")]
    CreateDir {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("input mode `{0}` requires a dataset")]
    DatasetRequired(&'static str),
    #[error("run `{0}` never finished (manifest has no timing summary)")]
    Unfinished(String),
    #[error("run `{0}` has an empty metric series")]
    EmptyMetrics(String),
}

/// A finished run: engine result plus what landed on disk.
#[derive(Debug)]
pub struct RunOutcome {
    pub result: RunResult,
    pub manifest: RunManifest,
    pub frames_written: usize,
    /// Malformed dataset rows skipped under lenient parsing.
    pub skipped_rows: usize,
}

/// Loads the dataset rows as the starting graph in one batch at t = 0;
/// self-loops are dropped with a warning, duplicates follow graph policy.
fn preload(
    graph: &mut Graph,
    rows: &[crate::stream::TemporalEdge],
    strictness: Strictness,
) -> Result<UpdateDelta, GraphError> {
    let mut batch = UpdateBatch::at(0.0);
    let mut seen = std::collections::HashSet::new();
    for row in rows {
        for endpoint in [&row.src, &row.dst] {
            if seen.insert(endpoint.clone()) {
                batch.added_nodes.push(endpoint.clone());
            }
        }
        batch.added_edges.push(Edge {
            src: row.src.clone(),
            dst: row.dst.clone(),
            weight: row.weight.unwrap_or(1.0),
            arrival: 0.0,
        });
    }
    graph.apply_update(&batch, strictness)
}

/// Runs one spec end to end and writes all artifacts into `spec.out_dir`.
///
/// `live_feed` replaces standard input for the modes that read a live feed;
/// pass `None` to use stdin.
pub fn execute_run(
    spec: &RunSpec,
    live_feed: Option<Box<dyn Read + Send + 'static>>,
) -> Result<RunOutcome, RunnerError> {
    let snaps_dir = spec.out_dir.join("snapshots");
    fs::create_dir_all(&snaps_dir).map_err(|source| RunnerError::CreateDir {
        path: snaps_dir.display().to_string(),
        source,
    })?;

    let dataset_sha256 = match &spec.dataset {
        Some(path) => Some(sha256_file(path)?),
        None => None,
    };
    let mut manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        spec: spec.clone(),
        dataset_sha256,
        timing: None,
    };
    let manifest_path = spec.out_dir.join("manifest.json");
    write_manifest(&manifest_path, &manifest)?;

    let mut skipped_rows = 0usize;
    let rows = match &spec.dataset {
        Some(path) => {
            let (rows, skipped) = parse_temporal_edge_list(path, spec.strictness)?;
            skipped_rows = skipped;
            Some(rows)
        }
        None => None,
    };

    let mut graph = if spec.keep_duplicate_edges {
        Graph::keeping_duplicate_edges()
    } else {
        Graph::new()
    };
    let mut source: Box<dyn UpdateSource> = match spec.input_mode {
        InputMode::EmptyStream => match rows {
            Some(rows) => {
                let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ SCHEDULE_SEED_SALT);
                let schedule =
                    build_schedule(&rows, spec.schedule.timing(), spec.duration_s, &mut rng)?;
                Box::new(InternalClockSource::new(schedule))
            }
            None => {
                let feed = live_feed.unwrap_or_else(|| Box::new(std::io::stdin()));
                Box::new(StreamAdapter::spawn(feed))
            }
        },
        InputMode::FilePlusStream => {
            let rows = rows.ok_or(RunnerError::DatasetRequired("file-plus-stream"))?;
            preload(&mut graph, &rows, spec.strictness)?;
            let feed = live_feed.unwrap_or_else(|| Box::new(std::io::stdin()));
            Box::new(StreamAdapter::spawn(feed))
        }
        InputMode::FileOnly => {
            let rows = rows.ok_or(RunnerError::DatasetRequired("file-only"))?;
            preload(&mut graph, &rows, spec.strictness)?;
            Box::new(InternalClockSource::new(UpdateSchedule::default()))
        }
    };

    let cfg = EngineConfig {
        mode: spec.mode,
        duration_s: spec.duration_s,
        tick_s: spec.tick_s,
        placement: spec.placement,
        canvas: spec.canvas,
        seed: spec.seed,
        snapshot_every: spec.snapshot_every,
        level: spec.level,
        time_source: spec.time_source,
        strictness: spec.strictness,
    };
    let mut algo = spec.algo.build();
    let result = engine::run(algo.as_mut(), &mut graph, source.as_mut(), &cfg)?;

    let frames = engine::normalize_snapshots(&result.snapshots);
    for (i, frame) in frames.iter().enumerate() {
        write_svg_snapshot(&snaps_dir.join(format!("{i:04}.svg")), frame)?;
    }
    write_metrics_csv(&spec.out_dir.join("metrics.csv"), &result.metrics)?;
    write_layout_json(&spec.out_dir.join("layout.json"), &result.final_layout)?;

    manifest.timing = Some(TimingSummary {
        wall_s: result.wall_s,
        iterations: result.iterations,
        updates: result.update_events.len(),
        finished_at_s: result.elapsed_s,
    });
    write_manifest(&manifest_path, &manifest)?;

    Ok(RunOutcome {
        result,
        manifest,
        frames_written: frames.len(),
        skipped_rows,
    })
}
