//! Command-line surface: `run` one configuration, `compare` finished run
//! directories, `replay` a live feed from standard input.

use std::error::Error as _;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::engine::{Canvas, Mode, Placement, SnapshotCadence, TimeSource};
use crate::graph::Strictness;
use crate::metrics;
use crate::models::ModelKind;
use crate::stream::DistributionSpec;

use super::writers::{parse_metrics_csv, write_atomic};
use super::{execute_run, read_manifest, InputMode, RunSpec, RunnerError, ScheduleSpec};

#[derive(Debug, Parser)]
#[command(
    name = "dynlay",
    version,
    about = "Static and online force-directed layout of dynamic graphs"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one layout configuration and write its artifacts.
    Run(RunArgs),
    /// Summarize finished run directories side by side.
    Compare(CompareArgs),
    /// Lay out a live update feed read from standard input.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Layout model.
    #[arg(long, value_enum)]
    algo: ModelKind,
    /// Restart from scratch on updates (static) or refine in place (online).
    #[arg(long, value_enum)]
    mode: Mode,
    /// Temporal edge list to preload or replay.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Arrival timing: native | gaussian:<mean>,<sd> | poisson:<mean> |
    /// uniform:<min>,<max>. Seconds throughout.
    #[arg(long, default_value = "native", value_parser = parse_dist)]
    dist: ScheduleSpec,
    /// Run length in seconds.
    #[arg(long, default_value_t = 300.0)]
    duration: f64,
    /// Simulated seconds per iteration.
    #[arg(long, default_value_t = 0.05)]
    tick: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// First position for new nodes.
    #[arg(long, value_enum, default_value = "random")]
    placement: Placement,
    /// Canvas size as WxH.
    #[arg(long, default_value = "1000x1000", value_parser = parse_canvas)]
    canvas: Canvas,
    /// Sampling cadence: <n>s for seconds or <n>i for iterations.
    #[arg(long, default_value = "1s", value_parser = parse_cadence)]
    snapshot_every: SnapshotCadence,
    /// Output directory for the run artifacts.
    #[arg(long, env = "DYNLAY_OUT")]
    out: PathBuf,
    /// Where the starting graph and updates come from.
    #[arg(long, value_enum, default_value = "empty-stream")]
    input_mode: InputMode,
    /// Skip malformed input instead of failing.
    #[arg(long)]
    lenient: bool,
    /// Pace the run on the wall clock instead of simulated time.
    #[arg(long)]
    realtime: bool,
    /// Keep repeated edges as parallel edges instead of deduplicating.
    #[arg(long)]
    keep_duplicate_edges: bool,
    /// Refinement level forwarded to the model (1 = whole graph at once).
    #[arg(long, default_value_t = 1)]
    level: u32,
}

impl RunArgs {
    fn into_spec(self) -> RunSpec {
        RunSpec {
            algo: self.algo,
            mode: self.mode,
            input_mode: self.input_mode,
            dataset: self.dataset,
            schedule: self.dist,
            duration_s: self.duration,
            tick_s: self.tick,
            seed: self.seed,
            placement: self.placement,
            canvas: self.canvas,
            snapshot_every: self.snapshot_every,
            out_dir: self.out,
            strictness: strictness(self.lenient),
            time_source: time_source(self.realtime),
            keep_duplicate_edges: self.keep_duplicate_edges,
            level: self.level,
        }
    }
}

#[derive(Debug, Args)]
struct ReplayArgs {
    /// Layout model.
    #[arg(long, value_enum)]
    algo: ModelKind,
    /// Restart from scratch on updates (static) or refine in place (online).
    #[arg(long, value_enum, default_value = "online")]
    mode: Mode,
    /// Run length in seconds. Pair a live feed with --realtime.
    #[arg(long, default_value_t = 300.0)]
    duration: f64,
    /// Simulated seconds per iteration.
    #[arg(long, default_value_t = 0.05)]
    tick: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// First position for new nodes.
    #[arg(long, value_enum, default_value = "random")]
    placement: Placement,
    /// Canvas size as WxH.
    #[arg(long, default_value = "1000x1000", value_parser = parse_canvas)]
    canvas: Canvas,
    /// Sampling cadence: <n>s for seconds or <n>i for iterations.
    #[arg(long, default_value = "1s", value_parser = parse_cadence)]
    snapshot_every: SnapshotCadence,
    /// Output directory for the run artifacts.
    #[arg(long, env = "DYNLAY_OUT")]
    out: PathBuf,
    /// Skip malformed input instead of failing.
    #[arg(long)]
    lenient: bool,
    /// Pace the run on the wall clock instead of simulated time.
    #[arg(long)]
    realtime: bool,
    /// Refinement level forwarded to the model (1 = whole graph at once).
    #[arg(long, default_value_t = 1)]
    level: u32,
}

impl ReplayArgs {
    fn into_spec(self) -> RunSpec {
        RunSpec {
            algo: self.algo,
            mode: self.mode,
            input_mode: InputMode::EmptyStream,
            dataset: None,
            schedule: ScheduleSpec::Native,
            duration_s: self.duration,
            tick_s: self.tick,
            seed: self.seed,
            placement: self.placement,
            canvas: self.canvas,
            snapshot_every: self.snapshot_every,
            out_dir: self.out,
            strictness: strictness(self.lenient),
            time_source: time_source(self.realtime),
            keep_duplicate_edges: false,
            level: self.level,
        }
    }
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Finished run directories.
    #[arg(required = true, num_args = 1..)]
    runs: Vec<PathBuf>,
    /// Where to write the comparison CSV.
    #[arg(long, default_value = "comparison.csv")]
    csv: PathBuf,
}

fn strictness(lenient: bool) -> Strictness {
    if lenient {
        Strictness::Lenient
    } else {
        Strictness::Strict
    }
}

fn time_source(realtime: bool) -> TimeSource {
    if realtime {
        TimeSource::RealTime
    } else {
        TimeSource::Simulated
    }
}

fn parse_dist(s: &str) -> Result<ScheduleSpec, String> {
    let grammar =
        "expected native, gaussian:<mean>,<sd>, poisson:<mean>, or uniform:<min>,<max>";
    if s.trim() == "native" {
        return Ok(ScheduleSpec::Native);
    }
    let (kind, rest) = s.split_once(':').ok_or_else(|| format!("{grammar}, got `{s}`"))?;
    let nums: Vec<f64> = rest
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| format!("{grammar}, got `{s}`"))?;
    let spec = match (kind.trim(), nums.as_slice()) {
        ("gaussian", [mean_s, stddev_s]) => DistributionSpec::Gaussian {
            mean_s: *mean_s,
            stddev_s: *stddev_s,
        },
        ("poisson", [mean_s]) => DistributionSpec::Poisson { mean_s: *mean_s },
        ("uniform", [min_s, max_s]) => DistributionSpec::Uniform {
            min_s: *min_s,
            max_s: *max_s,
        },
        _ => return Err(format!("{grammar}, got `{s}`")),
    };
    spec.validate().map_err(|e| e.to_string())?;
    Ok(ScheduleSpec::Sampled(spec))
}

fn parse_canvas(s: &str) -> Result<Canvas, String> {
    let bad = || format!("expected WxH with positive sides, got `{s}`");
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let width: f64 = w.trim().parse().map_err(|_| bad())?;
    let height: f64 = h.trim().parse().map_err(|_| bad())?;
    Canvas::try_new(width, height).ok_or_else(bad)
}

fn parse_cadence(s: &str) -> Result<SnapshotCadence, String> {
    let t = s.trim();
    if let Some(n) = t.strip_suffix('i') {
        let every: u64 = n.parse().map_err(|_| format!("expected <n>i, got `{s}`"))?;
        if every == 0 {
            return Err("iteration cadence must be at least 1".to_string());
        }
        return Ok(SnapshotCadence::Iterations(every));
    }
    let n = t.strip_suffix('s').unwrap_or(t);
    let secs: f64 = n
        .parse()
        .map_err(|_| format!("expected <n>s or <n>i, got `{s}`"))?;
    if !secs.is_finite() || secs <= 0.0 {
        return Err("sampling interval must be positive".to_string());
    }
    Ok(SnapshotCadence::Seconds(secs))
}

/// One line of the comparison table, all values recomputed from artifacts.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub run: String,
    pub algo: String,
    pub mode: String,
    pub seed: u64,
    pub final_ec: u64,
    pub ec_vm: u64,
    pub ec_sd_mean: f64,
    pub ec_sd_max: f64,
    pub wall_s: f64,
}

/// Reads one run directory back and condenses its series into a row.
pub fn summarize_run(dir: &Path) -> Result<ComparisonRow, RunnerError> {
    let manifest = read_manifest(&dir.join("manifest.json"))?;
    let timing = manifest
        .timing
        .ok_or_else(|| RunnerError::Unfinished(dir.display().to_string()))?;
    let series = parse_metrics_csv(&dir.join("metrics.csv"))?;
    let last = series
        .last()
        .ok_or_else(|| RunnerError::EmptyMetrics(dir.display().to_string()))?;
    let ec_vm = metrics::ec_vm(&series).expect("series checked non-empty");

    let defined: Vec<f64> = series
        .samples()
        .iter()
        .filter(|s| s.ec_sd_defined)
        .map(|s| s.ec_sd)
        .collect();
    let ec_sd_mean = if defined.is_empty() {
        0.0
    } else {
        defined.iter().sum::<f64>() / defined.len() as f64
    };
    let ec_sd_max = defined.iter().copied().fold(0.0, f64::max);

    Ok(ComparisonRow {
        run: dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| dir.display().to_string()),
        algo: manifest.spec.algo.to_string(),
        mode: match manifest.spec.mode {
            Mode::Static => "static".to_string(),
            Mode::Online => "online".to_string(),
        },
        seed: manifest.spec.seed,
        final_ec: last.ec,
        ec_vm,
        ec_sd_mean,
        ec_sd_max,
        wall_s: timing.wall_s,
    })
}

pub const COMPARISON_HEADER: &str =
    "run,algo,mode,seed,final_ec,ec_vm,ec_sd_mean,ec_sd_max,wall_s";

pub fn render_comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut out = String::new();
    out.push_str(COMPARISON_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{:?},{:?},{:?}",
            r.run, r.algo, r.mode, r.seed, r.final_ec, r.ec_vm, r.ec_sd_mean, r.ec_sd_max, r.wall_s
        );
    }
    out
}

/// Fixed-precision text table with columns wide enough for every row.
pub fn render_comparison_table(rows: &[ComparisonRow]) -> String {
    let mut cells: Vec<[String; 9]> = vec![COMPARISON_HEADER
        .split(',')
        .map(str::to_string)
        .collect::<Vec<_>>()
        .try_into()
        .expect("header has nine columns")];
    for r in rows {
        cells.push([
            r.run.clone(),
            r.algo.clone(),
            r.mode.clone(),
            r.seed.to_string(),
            r.final_ec.to_string(),
            r.ec_vm.to_string(),
            format!("{:.3}", r.ec_sd_mean),
            format!("{:.3}", r.ec_sd_max),
            format!("{:.3}", r.wall_s),
        ]);
    }
    let mut widths = [0usize; 9];
    for row in &cells {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    for row in &cells {
        let mut line = String::new();
        for (w, cell) in widths.iter().copied().zip(row) {
            if !line.is_empty() {
                line.push_str("  ");
            }
            let _ = write!(line, "{cell:<w$}");
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

fn run_command(spec: RunSpec) -> Result<(), RunnerError> {
    let outcome = execute_run(&spec, None)?;
    if outcome.skipped_rows > 0 {
        eprintln!("warning: skipped {} malformed dataset rows", outcome.skipped_rows);
    }
    let mode = match spec.mode {
        Mode::Static => "static",
        Mode::Online => "online",
    };
    println!(
        "{} {}: {} iterations, {} updates, {} nodes in {:.2}s -> {}",
        spec.algo,
        mode,
        outcome.result.iterations,
        outcome.result.update_events.len(),
        outcome.result.final_layout.len(),
        outcome.result.wall_s,
        spec.out_dir.display(),
    );
    Ok(())
}

fn compare_command(args: CompareArgs) -> Result<(), RunnerError> {
    let rows = args
        .runs
        .iter()
        .map(|dir| summarize_run(dir))
        .collect::<Result<Vec<_>, _>>()?;
    print!("{}", render_comparison_table(&rows));
    write_atomic(&args.csv, render_comparison_csv(&rows).as_bytes())?;
    println!("wrote {}", args.csv.display());
    Ok(())
}

/// Parses argv and runs the selected subcommand. Usage errors exit 2 via
/// clap; runtime failures print the error chain and exit 1.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run_command(args.into_spec()),
        Command::Replay(args) => run_command(args.into_spec()),
        Command::Compare(args) => compare_command(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let mut message = format!("error: {err}");
            let mut source = err.source();
            while let Some(s) = source {
                let _ = write!(message, ": {s}");
                source = s.source();
            }
            eprintln!("{message}");
            ExitCode::FAILURE
        }
    }
}
