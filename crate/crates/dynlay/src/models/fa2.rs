//! Degree-weighted force model with adaptive per-node speeds.
//!
//! Attraction along an edge is linear in the distance; repulsion between any
//! pair scales with `(deg + 1)` on both sides, which keeps hubs from being
//! buried under their own neighbourhoods. Instead of a global temperature,
//! every node carries its own speed: nodes whose force keeps flipping
//! direction (high swing) slow down, nodes under steady pull move at full
//! tilt. The force of the previous iteration is remembered per node to
//! measure that swing.

use std::collections::HashMap;

use crate::engine::{AlgorithmLifecycle, EngineCtx, StepReport};
use crate::graph::{Graph, Layout, NodeId, Position, UpdateDelta};

use super::{place_added, place_unpositioned, separation};

/// Tuning knobs; the defaults suit desk-scale graphs.
#[derive(Debug, Clone)]
pub struct Fa2Params {
    /// Attraction coefficient on edges.
    pub ka: f64,
    /// Repulsion coefficient between node pairs.
    pub kr: f64,
    /// Jitter tolerance in the global speed.
    pub tolerance: f64,
    /// Per-node speed factor.
    pub ks: f64,
    /// Hard cap on the global speed.
    pub max_global_speed: f64,
    /// Displacement cap as a fraction of the canvas min side.
    pub displacement_cap_frac: f64,
}

impl Default for Fa2Params {
    fn default() -> Self {
        Fa2Params {
            ka: 1.0,
            kr: 2.0,
            tolerance: 1.0,
            ks: 0.1,
            max_global_speed: 10.0,
            displacement_cap_frac: 0.1,
        }
    }
}

#[derive(Debug, Default)]
pub struct Fa2Model {
    params: Fa2Params,
    prev_force: HashMap<NodeId, (f64, f64)>,
}

/// Repulsion between nodes of the given degrees at distance `d`.
fn repulsion_magnitude(kr: f64, deg_u: usize, deg_v: usize, d: f64) -> f64 {
    kr * ((deg_u + 1) * (deg_v + 1)) as f64 / d
}

/// Speed of one node under the current global speed and its own swing.
/// Maximal at zero swing and strictly decreasing in it.
fn node_speed(ks: f64, global_speed: f64, swing: f64) -> f64 {
    ks * global_speed / (1.0 + global_speed * swing.sqrt())
}

/// Global speed limiting the whole layout, from total traction and swing.
fn global_speed(tolerance: f64, traction: f64, swing: f64, cap: f64) -> f64 {
    if swing <= 0.0 {
        cap
    } else {
        (tolerance * traction / swing).min(cap)
    }
}

impl Fa2Model {
    pub fn new(params: Fa2Params) -> Self {
        Fa2Model {
            params,
            ..Fa2Model::default()
        }
    }
}

impl AlgorithmLifecycle for Fa2Model {
    fn name(&self) -> &'static str {
        "fa2"
    }

    fn init_section(&mut self, graph: &Graph, layout: &mut Layout, _level: u32, ctx: &mut EngineCtx) {
        self.prev_force.clear();
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
        let degrees: Vec<usize> = ids.iter().map(|id| graph.degree(id).unwrap()).collect();
        let mut force = vec![(0.0f64, 0.0f64); ids.len()];
        for i in 0..ids.len() {
            for j in (i + 1)..ids.len() {
                let (dx, dy, d) = separation(layout, &ids[i], &ids[j], ctx.rng);
                let f = repulsion_magnitude(self.params.kr, degrees[i], degrees[j], d);
                let (ux, uy) = (dx / d, dy / d);
                force[i].0 -= ux * f;
                force[i].1 -= uy * f;
                force[j].0 += ux * f;
                force[j].1 += uy * f;
            }
        }
        let index: HashMap<&NodeId, usize> =
            ids.iter().enumerate().map(|(i, id)| (id, i)).collect();
        let edges: Vec<(usize, usize)> = graph
            .edges()
            .map(|e| (index[e.src], index[e.dst]))
            .collect();
        for (u, v) in edges {
            let (dx, dy, _) = separation(layout, &ids[u], &ids[v], ctx.rng);
            force[u].0 += self.params.ka * dx;
            force[u].1 += self.params.ka * dy;
            force[v].0 -= self.params.ka * dx;
            force[v].1 -= self.params.ka * dy;
        }

        let mut total_swing = 0.0;
        let mut total_traction = 0.0;
        let mut swings = vec![0.0f64; ids.len()];
        for (i, id) in ids.iter().enumerate() {
            let (fx, fy) = force[i];
            let (px, py) = self.prev_force.get(id).copied().unwrap_or((0.0, 0.0));
            let swing = ((fx - px).powi(2) + (fy - py).powi(2)).sqrt();
            let traction = ((fx + px).powi(2) + (fy + py).powi(2)).sqrt() / 2.0;
            swings[i] = swing;
            let weight = (degrees[i] + 1) as f64;
            total_swing += weight * swing;
            total_traction += weight * traction;
        }
        let gs = global_speed(
            self.params.tolerance,
            total_traction,
            total_swing,
            self.params.max_global_speed,
        );

        let cap = self.params.displacement_cap_frac * layout.canvas.min_side();
        let mut moved = 0;
        let mut max_displacement = 0.0f64;
        for (i, id) in ids.iter().enumerate() {
            let (fx, fy) = force[i];
            let speed = node_speed(self.params.ks, gs, swings[i]);
            let (mut sx, mut sy) = (fx * speed, fy * speed);
            let len = (sx * sx + sy * sy).sqrt();
            if len > cap {
                sx *= cap / len;
                sy *= cap / len;
            }
            if len > 0.0 {
                let p = layout.position(id).expect("positioned");
                layout.set_position(id.clone(), Position::new(p.x + sx, p.y + sy));
                moved += 1;
                max_displacement = max_displacement.max(len.min(cap));
            }
            self.prev_force.insert(id.clone(), (fx, fy));
        }
        StepReport {
            converged: false,
            moved,
            max_displacement,
        }
    }

    fn on_update(&mut self, graph: &Graph, layout: &mut Layout, delta: &UpdateDelta, ctx: &mut EngineCtx) {
        for id in &delta.removed_nodes {
            self.prev_force.remove(id);
        }
        place_added(graph, layout, delta, ctx);
    }
}
