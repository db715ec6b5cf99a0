//! Spring embedder balancing pairwise repulsion against edge attraction.
//!
//! Every node pair repels with magnitude `k^2 / d` and every edge attracts
//! with `d^2 / k`, where `k` is the ideal edge length derived from the
//! canvas area per node. Displacements are capped by a temperature that
//! cools geometrically, so early iterations untangle and late ones only
//! polish. Updates re-warm the temperature to a fraction of its initial
//! value instead of restarting the cooling from the top.

use crate::engine::{AlgorithmLifecycle, EngineCtx, StepReport};
use crate::graph::{Graph, Layout, NodeId, Position, UpdateDelta};

use super::{place_added, place_unpositioned, separation};

/// Tuning knobs; the defaults suit desk-scale graphs.
#[derive(Debug, Clone)]
pub struct FrParams {
    /// Multiplier on the ideal edge length `sqrt(area / n)`.
    pub c: f64,
    /// Geometric cooling factor applied after every iteration.
    pub cooling: f64,
    /// Initial temperature as a fraction of the canvas min side.
    pub initial_temp_frac: f64,
    /// Fraction of the initial temperature restored by an update.
    pub rewarm_frac: f64,
}

impl Default for FrParams {
    fn default() -> Self {
        FrParams {
            c: 1.0,
            cooling: 0.99,
            initial_temp_frac: 0.1,
            rewarm_frac: 0.3,
        }
    }
}

#[derive(Debug, Default)]
pub struct FrModel {
    params: FrParams,
    k_ideal: f64,
    temperature: f64,
    initial_temperature: f64,
}

/// Repulsion between any node pair at distance `d`.
fn repulsion_magnitude(k: f64, d: f64) -> f64 {
    k * k / d
}

/// Attraction along an edge of current length `d`.
fn attraction_magnitude(k: f64, d: f64) -> f64 {
    d * d / k
}

impl FrModel {
    pub fn new(params: FrParams) -> Self {
        FrModel {
            params,
            ..FrModel::default()
        }
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn ideal_length(&self) -> f64 {
        self.k_ideal
    }

    fn retune(&mut self, graph: &Graph, layout: &Layout) {
        let n = graph.node_count().max(1) as f64;
        self.k_ideal = self.params.c * (layout.canvas.area() / n).sqrt();
        self.initial_temperature = self.params.initial_temp_frac * layout.canvas.min_side();
    }
}

impl AlgorithmLifecycle for FrModel {
    fn name(&self) -> &'static str {
        "fr"
    }

    fn init_section(&mut self, graph: &Graph, layout: &mut Layout, _level: u32, ctx: &mut EngineCtx) {
        self.retune(graph, layout);
        self.temperature = self.initial_temperature;
        place_unpositioned(graph, layout, ctx);
    }

    fn iteration_step(&mut self, graph: &Graph, layout: &mut Layout, ctx: &mut EngineCtx) -> StepReport {
        let ids: Vec<NodeId> = graph.node_ids().cloned().collect();
        if ids.len() <= 1 {
            return StepReport {
                converged: true,
                ..StepReport::default()
            };
        }
        let mut disp = vec![(0.0f64, 0.0f64); ids.len()];
        for i in 0..ids.len() {
            for j in (i + 1)..ids.len() {
                let (dx, dy, d) = separation(layout, &ids[i], &ids[j], ctx.rng);
                let f = repulsion_magnitude(self.k_ideal, d);
                let (ux, uy) = (dx / d, dy / d);
                disp[i].0 -= ux * f;
                disp[i].1 -= uy * f;
                disp[j].0 += ux * f;
                disp[j].1 += uy * f;
            }
        }
        let index: std::collections::HashMap<&NodeId, usize> =
            ids.iter().enumerate().map(|(i, id)| (id, i)).collect();
        let edges: Vec<(usize, usize)> = graph
            .edges()
            .map(|e| (index[e.src], index[e.dst]))
            .collect();
        for (i, j) in edges {
            let (dx, dy, d) = separation(layout, &ids[i], &ids[j], ctx.rng);
            let f = attraction_magnitude(self.k_ideal, d);
            let (ux, uy) = (dx / d, dy / d);
            disp[i].0 += ux * f;
            disp[i].1 += uy * f;
            disp[j].0 -= ux * f;
            disp[j].1 -= uy * f;
        }
        let mut moved = 0;
        let mut max_displacement = 0.0f64;
        for (i, id) in ids.iter().enumerate() {
            let (dx, dy) = disp[i];
            let len = (dx * dx + dy * dy).sqrt();
            if len == 0.0 {
                continue;
            }
            // No clamping to the canvas: forces depend on differences only,
            // so the whole drawing stays translation-equivariant. Rendering
            // normalizes into the frame later.
            let step = len.min(self.temperature);
            let p = layout.position(id).expect("positioned");
            let target = Position::new(p.x + dx / len * step, p.y + dy / len * step);
            let actual = p.distance_to(target);
            if actual > 0.0 {
                moved += 1;
                max_displacement = max_displacement.max(actual);
                layout.set_position(id.clone(), target);
            }
        }
        self.temperature *= self.params.cooling;
        StepReport {
            converged: false,
            moved,
            max_displacement,
        }
    }

    fn on_update(&mut self, graph: &Graph, layout: &mut Layout, delta: &UpdateDelta, ctx: &mut EngineCtx) {
        self.retune(graph, layout);
        self.temperature = self
            .temperature
            .max(self.params.rewarm_frac * self.initial_temperature);
        place_added(graph, layout, delta, ctx);
    }
}
