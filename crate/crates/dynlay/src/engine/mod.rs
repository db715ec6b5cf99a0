//! The run loop: one clock, one graph, one layout, one algorithm.
//!
//! The engine owns the timeline. Each turn it drains every update batch that
//! is due, applies it to the graph, grows the canvas, and hands control to
//! the algorithm: in static mode by re-running initialization over the whole
//! graph (so all positions are fresh), in online mode by running the entry
//! task for the new elements only. Updates are only ever applied between
//! iterations, never inside one, and in online mode the engine audits that
//! the entry task left every pre-existing position untouched, bit for bit.
//!
//! Time is simulated by default: every iteration advances the clock by a
//! fixed tick, which is what makes a run with the same seed reproduce the
//! same artifacts byte for byte. Real-time pacing is available for driving
//! the engine from a live feed.

mod placement;
mod scaling;

pub use placement::{
    barycenter_distance, place_barycenter, place_node, place_random, PlacementError,
};
pub use scaling::{normalize_snapshots, rescale_canvas};

use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{Graph, Layout, NodeId, UpdateDelta};
use crate::metrics::{self, MetricSeries};
use crate::stream::UpdateSource;

/// Drawing area. Width and height are strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Canvas {
    width: f64,
    height: f64,
}

impl Canvas {
    /// Panics if either side is not a positive finite number.
    pub fn new(width: f64, height: f64) -> Self {
        assert!(
            width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite(),
            "canvas sides must be positive and finite, got {width}x{height}"
        );
        Canvas { width, height }
    }

    pub fn try_new(width: f64, height: f64) -> Option<Self> {
        (width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite())
            .then_some(Canvas { width, height })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    /// The shorter side, the base length scale of most models.
    pub fn min_side(&self) -> f64 {
        self.width.min(self.height)
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }
}

impl Default for Canvas {
    fn default() -> Self {
        Canvas::new(1000.0, 1000.0)
    }
}

/// Whole-layout recomputation vs incremental refinement on updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Restart from scratch on every update: apply the batch, throw away all
    /// positions, re-run initialization over the whole graph.
    Static,
    /// Keep every existing position; run the entry task for new elements and
    /// continue iterating.
    Online,
}

/// How new nodes get their first position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    /// Uniform over the canvas.
    #[default]
    Random,
    /// Mean of already-positioned neighbors, falling back to random when
    /// there are none.
    Barycenter,
}

/// Clock driving the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeSource {
    /// Each iteration advances the clock by a fixed tick. Deterministic.
    #[default]
    Simulated,
    /// Wall clock. Iteration count then depends on machine speed.
    RealTime,
}

/// When to record a snapshot and a metric sample.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum SnapshotCadence {
    Seconds(f64),
    Iterations(u64),
}

impl Default for SnapshotCadence {
    fn default() -> Self {
        SnapshotCadence::Seconds(1.0)
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct EngineConfig {
    pub mode: Mode,
    /// Run length in seconds on the configured clock.
    pub duration_s: f64,
    /// Simulated seconds per iteration.
    pub tick_s: f64,
    pub placement: Placement,
    pub canvas: Canvas,
    pub seed: u64,
    pub snapshot_every: SnapshotCadence,
    /// Refinement level forwarded to the algorithm (1 = whole graph at once).
    pub level: u32,
    pub time_source: TimeSource,
    pub strictness: crate::graph::Strictness,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            mode: Mode::Online,
            duration_s: 300.0,
            tick_s: 0.05,
            placement: Placement::Random,
            canvas: Canvas::default(),
            seed: 0,
            snapshot_every: SnapshotCadence::default(),
            level: 1,
            time_source: TimeSource::Simulated,
            strictness: crate::graph::Strictness::Strict,
        }
    }
}

/// What one iteration did, as seen from the engine.
#[derive(Debug, Clone, Default)]
pub struct StepReport {
    /// The algorithm considers the current layout converged.
    pub converged: bool,
    /// Nodes whose position changed this iteration.
    pub moved: usize,
    /// Largest single-node displacement this iteration.
    pub max_displacement: f64,
}

/// Engine-provided services available to lifecycle calls.
pub struct EngineCtx<'a> {
    pub rng: &'a mut dyn RngCore,
    pub placement: Placement,
}

/// The contract every layout algorithm implements.
///
/// `init_section` builds all internal state and positions every unplaced
/// node; the engine calls it once at startup and, in static mode, again
/// after every update (with positions cleared first). `iteration_step` moves
/// nodes. `on_update` is the online entry task: it must bring internal state
/// in line with the delta and place the new nodes without reading or writing
/// any pre-existing position.
pub trait AlgorithmLifecycle {
    fn name(&self) -> &'static str;

    fn init_section(&mut self, graph: &Graph, layout: &mut Layout, level: u32, ctx: &mut EngineCtx);

    fn iteration_step(&mut self, graph: &Graph, layout: &mut Layout, ctx: &mut EngineCtx)
        -> StepReport;

    fn on_update(
        &mut self,
        graph: &Graph,
        layout: &mut Layout,
        delta: &UpdateDelta,
        ctx: &mut EngineCtx,
    );

    /// Whether the layout is good enough to stop early. Models without a
    /// convergence notion run for the whole duration.
    fn is_good_layout(&self, graph: &Graph, layout: &Layout) -> bool {
        let _ = (graph, layout);
        false
    }
}

/// Point-in-time copy of the layout for later rendering.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub at: f64,
    pub iteration: u64,
    pub layout: Layout,
    /// Edge endpoint pairs at sample time, for rendering.
    pub edges: Vec<(NodeId, NodeId)>,
    pub node_count: usize,
    pub edge_count: usize,
}

/// One applied update batch, as the engine saw it.
#[derive(Debug, Clone)]
pub struct UpdateEvent {
    pub at: f64,
    pub iteration: u64,
    pub added_nodes: usize,
    pub added_edges: usize,
    pub removed_nodes: usize,
    pub removed_edges: usize,
    /// Online mode only: whether every surviving pre-existing position was
    /// bit-identical before and after the entry task.
    pub preserved: Option<bool>,
}

#[derive(Debug)]
pub struct RunResult {
    pub final_layout: Layout,
    pub snapshots: Vec<Snapshot>,
    pub metrics: MetricSeries,
    pub update_events: Vec<UpdateEvent>,
    pub iterations: u64,
    /// Where the run clock stopped.
    pub elapsed_s: f64,
    /// Actual wall time spent, regardless of clock source.
    pub wall_s: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("update batch failed: {0}")]
    Graph(#[from] crate::graph::GraphError),
    #[error("non-finite position for node `{node}` at iteration {iteration} (t={at:.3}s)")]
    NonFinite {
        node: NodeId,
        iteration: u64,
        at: f64,
        /// Last consistent state before the failure, for diagnosis.
        snapshot: Box<Snapshot>,
    },
}

// Engine rng is salted so placement draws are not the same stream the
// schedule generator consumed for interval draws.
const ENGINE_SEED_SALT: u64 = 0xd1b5_4a32_d192_ed03;

/// Drives one full run. See the module docs for the loop structure.
pub fn run(
    algo: &mut dyn AlgorithmLifecycle,
    graph: &mut Graph,
    source: &mut dyn UpdateSource,
    cfg: &EngineConfig,
) -> Result<RunResult, RunError> {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ ENGINE_SEED_SALT);
    let mut layout = Layout::new(cfg.canvas);
    let mut clock = 0.0_f64;
    let mut iteration = 0_u64;
    let mut snapshots = Vec::new();
    let mut series = MetricSeries::default();
    let mut update_events = Vec::new();

    if !graph.is_empty() {
        let mut ctx = EngineCtx {
            rng: &mut rng,
            placement: cfg.placement,
        };
        algo.init_section(graph, &mut layout, cfg.level, &mut ctx);
    }

    record(&mut snapshots, &mut series, clock, iteration, graph, &layout);
    let mut next_sample_s = sample_interval_s(cfg);
    let mut last_sample_iter = iteration;

    loop {
        // Apply everything that is due at the current time.
        for batch in source.poll(clock) {
            let nodes_before = graph.node_count();
            let before = match cfg.mode {
                Mode::Online => Some(layout.clone()),
                Mode::Static => None,
            };
            let delta = graph.apply_update(&batch, cfg.strictness)?;
            let grown = rescale_canvas(layout.canvas, delta.added_nodes.len(), nodes_before);
            layout.canvas = grown;
            for gone in &delta.removed_nodes {
                layout.remove(gone);
            }
            let mut ctx = EngineCtx {
                rng: &mut rng,
                placement: cfg.placement,
            };
            let preserved = match cfg.mode {
                Mode::Static => {
                    layout.clear_positions();
                    algo.init_section(graph, &mut layout, cfg.level, &mut ctx);
                    None
                }
                Mode::Online => {
                    algo.on_update(graph, &mut layout, &delta, &mut ctx);
                    let before = before.expect("captured above");
                    let intact = before.iter().all(|(id, old)| {
                        layout.position(id).map_or(
                            !graph.contains_node(id),
                            |new| new.x.to_bits() == old.x.to_bits()
                                && new.y.to_bits() == old.y.to_bits(),
                        )
                    });
                    Some(intact)
                }
            };
            update_events.push(UpdateEvent {
                at: clock,
                iteration,
                added_nodes: delta.added_nodes.len(),
                added_edges: delta.added_edges.len(),
                removed_nodes: delta.removed_nodes.len(),
                removed_edges: delta.removed_edges.len(),
                preserved,
            });
        }

        // Idle (or finish) when there is nothing to refine.
        if graph.is_empty() || algo.is_good_layout(graph, &layout) {
            if source.finished() {
                break;
            }
            let jump = match source.next_arrival() {
                Some(t) => t.max(clock),
                None => advance(clock, cfg, &started),
            };
            if jump > cfg.duration_s {
                break;
            }
            clock = jump;
            emit_due_samples(
                &mut snapshots, &mut series, &mut next_sample_s, clock, iteration, graph, &layout,
                cfg,
            );
            continue;
        }

        let mut ctx = EngineCtx {
            rng: &mut rng,
            placement: cfg.placement,
        };
        let _ = algo.iteration_step(graph, &mut layout, &mut ctx);
        iteration += 1;
        clock = advance(clock, cfg, &started);

        if let Some((id, _)) = layout.iter().find(|(_, p)| !p.is_finite()) {
            let snap = snapshots
                .last()
                .cloned()
                .unwrap_or_else(|| snapshot(clock, iteration, graph, &layout));
            return Err(RunError::NonFinite {
                node: id.clone(),
                iteration,
                at: clock,
                snapshot: Box::new(snap),
            });
        }

        match cfg.snapshot_every {
            SnapshotCadence::Seconds(_) => emit_due_samples(
                &mut snapshots, &mut series, &mut next_sample_s, clock, iteration, graph, &layout,
                cfg,
            ),
            SnapshotCadence::Iterations(k) => {
                if iteration - last_sample_iter >= k.max(1) {
                    record(&mut snapshots, &mut series, clock, iteration, graph, &layout);
                    last_sample_iter = iteration;
                }
            }
        }

        if clock >= cfg.duration_s {
            break;
        }
    }

    let final_clock = clock.min(cfg.duration_s);
    if series
        .last()
        .is_none_or(|s| s.iteration != iteration || s.wall_s < final_clock)
    {
        record(&mut snapshots, &mut series, final_clock, iteration, graph, &layout);
    }

    Ok(RunResult {
        final_layout: layout,
        snapshots,
        metrics: series,
        update_events,
        iterations: iteration,
        elapsed_s: final_clock,
        wall_s: started.elapsed().as_secs_f64(),
    })
}

fn advance(clock: f64, cfg: &EngineConfig, started: &Instant) -> f64 {
    match cfg.time_source {
        TimeSource::Simulated => clock + cfg.tick_s,
        TimeSource::RealTime => started.elapsed().as_secs_f64(),
    }
}

fn sample_interval_s(cfg: &EngineConfig) -> f64 {
    match cfg.snapshot_every {
        SnapshotCadence::Seconds(s) => s.max(1e-9),
        SnapshotCadence::Iterations(_) => f64::INFINITY,
    }
}

#[allow(clippy::too_many_arguments)]
fn emit_due_samples(
    snapshots: &mut Vec<Snapshot>,
    series: &mut MetricSeries,
    next_sample_s: &mut f64,
    clock: f64,
    iteration: u64,
    graph: &Graph,
    layout: &Layout,
    cfg: &EngineConfig,
) {
    let every = sample_interval_s(cfg);
    while *next_sample_s <= clock + 1e-9 && *next_sample_s <= cfg.duration_s {
        record(snapshots, series, *next_sample_s, iteration, graph, layout);
        *next_sample_s += every;
    }
}

fn snapshot(at: f64, iteration: u64, graph: &Graph, layout: &Layout) -> Snapshot {
    Snapshot {
        at,
        iteration,
        layout: layout.clone(),
        edges: graph
            .edges()
            .map(|e| (e.src.clone(), e.dst.clone()))
            .collect(),
        node_count: graph.node_count(),
        edge_count: graph.edge_count(),
    }
}

fn record(
    snapshots: &mut Vec<Snapshot>,
    series: &mut MetricSeries,
    at: f64,
    iteration: u64,
    graph: &Graph,
    layout: &Layout,
) {
    snapshots.push(snapshot(at, iteration, graph, layout));
    series.push(metrics::sample(at, iteration, graph, layout));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, Position, Strictness, UpdateBatch};
    use crate::stream::{InternalClockSource, UpdateSchedule};

    /// Minimal model for engine-level tests: places nodes, wiggles them by a
    /// fixed amount each step, never converges.
    struct Wiggle;

    impl AlgorithmLifecycle for Wiggle {
        fn name(&self) -> &'static str {
            "wiggle"
        }

        fn init_section(
            &mut self,
            graph: &Graph,
            layout: &mut Layout,
            _level: u32,
            ctx: &mut EngineCtx,
        ) {
            for id in graph.node_ids() {
                if layout.position(id).is_none() {
                    let p = place_node(graph, layout, id, ctx.placement, ctx.rng);
                    layout.set_position(id.clone(), p);
                }
            }
        }

        fn iteration_step(
            &mut self,
            _graph: &Graph,
            layout: &mut Layout,
            _ctx: &mut EngineCtx,
        ) -> StepReport {
            let ids: Vec<_> = layout.iter().map(|(id, _)| id.clone()).collect();
            for id in ids {
                let p = layout.position(&id).unwrap();
                layout.set_position(id, Position::new(p.x + 0.25, p.y));
            }
            StepReport {
                converged: false,
                moved: layout.len(),
                max_displacement: 0.25,
            }
        }

        fn on_update(
            &mut self,
            graph: &Graph,
            layout: &mut Layout,
            delta: &UpdateDelta,
            ctx: &mut EngineCtx,
        ) {
            for id in &delta.added_nodes {
                if graph.contains_node(id) && layout.position(id).is_none() {
                    let p = place_node(graph, layout, id, ctx.placement, ctx.rng);
                    layout.set_position(id.clone(), p);
                }
            }
        }
    }

    fn two_batch_schedule() -> UpdateSchedule {
        let mut b1 = UpdateBatch::at(1.0);
        b1.added_nodes = vec!["a".into(), "b".into()];
        b1.added_edges = vec![Edge::new("a", "b")];
        let mut b2 = UpdateBatch::at(2.0);
        b2.added_nodes = vec!["c".into()];
        b2.added_edges = vec![Edge::new("b", "c")];
        UpdateSchedule::new(vec![b1, b2]).unwrap()
    }

    fn quick_cfg(mode: Mode) -> EngineConfig {
        EngineConfig {
            mode,
            duration_s: 4.0,
            tick_s: 0.1,
            seed: 7,
            canvas: Canvas::new(100.0, 100.0),
            ..EngineConfig::default()
        }
    }

    #[test]
    fn empty_graph_without_updates_terminates_immediately() {
        let mut g = Graph::new();
        let mut src = InternalClockSource::new(UpdateSchedule::default());
        let res = run(&mut Wiggle, &mut g, &mut src, &quick_cfg(Mode::Online)).unwrap();
        assert_eq!(res.iterations, 0);
        assert!(res.final_layout.is_empty());
    }

    #[test]
    fn static_mode_restarts_reposition_prior_nodes() {
        let mut g = Graph::new();
        let mut src = InternalClockSource::new(two_batch_schedule());
        let res = run(&mut Wiggle, &mut g, &mut src, &quick_cfg(Mode::Static)).unwrap();
        // Snapshot just before the 2.0s update vs just after: a and b must
        // have been re-randomized by the restart.
        let before = res.snapshots.iter().rev().find(|s| s.at <= 2.0).unwrap();
        let after = res
            .snapshots
            .iter()
            .find(|s| s.at > 2.0 && s.node_count == 3)
            .unwrap();
        let moved = ["a", "b"].iter().any(|n| {
            let id = crate::graph::NodeId::from(*n);
            before.layout.position(&id) != after.layout.position(&id)
        });
        assert!(moved, "static restart must re-place existing nodes");
        assert!(res.update_events.iter().all(|e| e.preserved.is_none()));
    }

    #[test]
    fn online_mode_updates_preserve_existing_positions() {
        let mut g = Graph::new();
        let mut src = InternalClockSource::new(two_batch_schedule());
        let res = run(&mut Wiggle, &mut g, &mut src, &quick_cfg(Mode::Online)).unwrap();
        assert_eq!(res.update_events.len(), 2);
        assert!(res.update_events.iter().all(|e| e.preserved == Some(true)));
        assert_eq!(res.final_layout.len(), 3);
    }

    #[test]
    fn canvas_grows_with_node_additions() {
        let mut g = Graph::new();
        g.add_node("seed".into());
        let mut batch = UpdateBatch::at(1.0);
        batch.added_nodes = vec!["x".into()];
        let mut src = InternalClockSource::new(UpdateSchedule::new(vec![batch]).unwrap());
        let res = run(&mut Wiggle, &mut g, &mut src, &quick_cfg(Mode::Online)).unwrap();
        let grown = res.final_layout.canvas;
        assert!(grown.area() > 100.0 * 100.0 * 1.9);
    }

    #[test]
    fn update_failure_reports_graph_error() {
        let mut g = Graph::new();
        g.add_node("a".into());
        let mut batch = UpdateBatch::at(1.0);
        batch.removed_nodes = vec!["ghost".into()];
        let mut src = InternalClockSource::new(UpdateSchedule::new(vec![batch]).unwrap());
        let mut cfg = quick_cfg(Mode::Online);
        cfg.strictness = Strictness::Strict;
        assert!(run(&mut Wiggle, &mut g, &mut src, &cfg).is_err());
    }

    #[test]
    fn metric_samples_follow_the_cadence() {
        let mut g = Graph::new();
        g.add_node("a".into());
        g.add_node("b".into());
        g.add_edge(Edge::new("a", "b")).unwrap();
        let mut src = InternalClockSource::new(UpdateSchedule::default());
        let cfg = EngineConfig {
            duration_s: 10.0,
            tick_s: 0.1,
            snapshot_every: SnapshotCadence::Seconds(1.0),
            canvas: Canvas::new(50.0, 50.0),
            seed: 3,
            ..EngineConfig::default()
        };
        let res = run(&mut Wiggle, &mut g, &mut src, &cfg).unwrap();
        // t=0 plus one per second; the sampler may or may not need an extra
        // closing sample depending on float accumulation.
        assert!(res.metrics.len() >= 11 && res.metrics.len() <= 12);
        let times: Vec<f64> = res.metrics.samples().iter().map(|s| s.wall_s).collect();
        assert!(times.windows(2).all(|w| w[0] <= w[1]));
    }
}
