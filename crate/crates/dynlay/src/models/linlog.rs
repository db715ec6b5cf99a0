//! Energy model with linear attraction and logarithmic repulsion.
//!
//! The drawing descends `sum_over_edges w * |p_u - p_v| minus
//! sum_over_pairs ln |p_u - p_v|`, whose minima place densely connected
//! groups close together and unrelated ones far apart. Attraction therefore
//! has constant magnitude `w` along each edge while repulsion falls off as
//! `1 / d`; the repulsion sum is aggregated through a quadtree so distant
//! groups act as single bodies.
//!
//! The model keeps two pieces of state across updates: symmetric per-node
//! weight rows (rebuilt from the graph for every node an update touches)
//! and the quadtree, which follows node insertion, deletion and movement.

use indexmap::IndexMap;

use crate::engine::{AlgorithmLifecycle, EngineCtx, StepReport};
use crate::graph::{Graph, Layout, NodeId, Position, UpdateDelta};

use super::quadtree::{QuadTree, Rect};
use super::{place_added, place_unpositioned, separation};

/// Tuning knobs; the defaults suit desk-scale graphs.
#[derive(Debug, Clone)]
pub struct LinLogParams {
    /// Opening criterion: a cell is approximated when size / distance < theta.
    pub theta: f64,
    /// Gradient step size in absolute units.
    pub step_size: f64,
    /// Per-node displacement cap in absolute units.
    pub max_displacement: f64,
}

impl Default for LinLogParams {
    fn default() -> Self {
        LinLogParams {
            theta: 0.9,
            step_size: 0.1,
            max_displacement: 1.0,
        }
    }
}

#[derive(Debug, Default)]
pub struct LinLogModel {
    params: LinLogParams,
    /// Symmetric attraction weights: row u holds the summed edge weight
    /// toward each neighbour.
    weights: IndexMap<NodeId, IndexMap<NodeId, f64>>,
    tree: Option<QuadTree>,
}

impl LinLogModel {
    pub fn new(params: LinLogParams) -> Self {
        LinLogModel {
            params,
            ..LinLogModel::default()
        }
    }

    /// Summed attraction weight between two nodes, zero when unlinked.
    pub fn weight_between(&self, a: &NodeId, b: &NodeId) -> f64 {
        self.weights
            .get(a)
            .and_then(|row| row.get(b))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn tree_len(&self) -> usize {
        self.tree.as_ref().map_or(0, QuadTree::len)
    }

    fn rebuild_all_weights(&mut self, graph: &Graph) {
        self.weights = graph
            .node_ids()
            .map(|id| (id.clone(), IndexMap::new()))
            .collect();
        for e in graph.edges() {
            *self.weights[e.src].entry(e.dst.clone()).or_insert(0.0) += e.weight;
            *self.weights[e.dst].entry(e.src.clone()).or_insert(0.0) += e.weight;
        }
    }

    fn rebuild_row(&mut self, graph: &Graph, id: &NodeId) {
        let mut row = IndexMap::new();
        for e in graph.edges() {
            if e.src == id {
                *row.entry(e.dst.clone()).or_insert(0.0) += e.weight;
            } else if e.dst == id {
                *row.entry(e.src.clone()).or_insert(0.0) += e.weight;
            }
        }
        self.weights.insert(id.clone(), row);
    }

    fn rebuild_tree(&mut self, layout: &Layout) {
        let canvas = layout.canvas;
        let mut tree = QuadTree::new(Rect::new(0.0, 0.0, canvas.width(), canvas.height()));
        for (id, p) in layout.iter() {
            tree.insert(id.clone(), p.x, p.y);
        }
        self.tree = Some(tree);
    }
}

impl AlgorithmLifecycle for LinLogModel {
    fn name(&self) -> &'static str {
        "linlog"
    }

    fn init_section(&mut self, graph: &Graph, layout: &mut Layout, _level: u32, ctx: &mut EngineCtx) {
        self.rebuild_all_weights(graph);
        place_unpositioned(graph, layout, ctx);
        self.rebuild_tree(layout);
    }

    fn iteration_step(&mut self, graph: &Graph, layout: &mut Layout, ctx: &mut EngineCtx) -> StepReport {
        let ids: Vec<NodeId> = graph.node_ids().cloned().collect();
        if ids.len() <= 1 {
            return StepReport {
                converged: true,
                ..StepReport::default()
            };
        }
        let mut force = vec![(0.0f64, 0.0f64); ids.len()];
        let index: std::collections::HashMap<&NodeId, usize> =
            ids.iter().enumerate().map(|(i, id)| (id, i)).collect();
        // Attraction: constant magnitude w along each edge.
        for (u, row) in &self.weights {
            let ui = index[u];
            for (v, w) in row {
                let vi = index[v];
                if vi <= ui {
                    continue; // each pair once
                }
                let (dx, dy, d) = separation(layout, u, v, ctx.rng);
                let (ux, uy) = (dx / d, dy / d);
                force[ui].0 += w * ux;
                force[ui].1 += w * uy;
                force[vi].0 -= w * ux;
                force[vi].1 -= w * uy;
            }
        }
        // Repulsion: 1/d per pair, aggregated through the tree. Jitters
        // applied above are microscopic, so the tree positions are close
        // enough for the approximation and get refreshed on the move below.
        let tree = self.tree.as_mut().expect("tree built in init");
        for (i, id) in ids.iter().enumerate() {
            let p = layout.position(id).expect("positioned");
            let (rx, ry) = tree.repulsion_at(p.x, p.y, self.params.theta, Some(id));
            force[i].0 += rx;
            force[i].1 += ry;
        }
        let mut moved = 0;
        let mut max_displacement = 0.0f64;
        for (i, id) in ids.iter().enumerate() {
            let (fx, fy) = force[i];
            let (mut sx, mut sy) = (fx * self.params.step_size, fy * self.params.step_size);
            let len = (sx * sx + sy * sy).sqrt();
            if len > self.params.max_displacement {
                let shrink = self.params.max_displacement / len;
                sx *= shrink;
                sy *= shrink;
            }
            if len == 0.0 {
                continue;
            }
            let p = layout.position(id).expect("positioned");
            let target = Position::new(p.x + sx, p.y + sy);
            layout.set_position(id.clone(), target);
            tree.reinsert(id, target.x, target.y);
            moved += 1;
            max_displacement = max_displacement.max(len.min(self.params.max_displacement));
        }
        StepReport {
            converged: false,
            moved,
            max_displacement,
        }
    }

    fn on_update(&mut self, graph: &Graph, layout: &mut Layout, delta: &UpdateDelta, ctx: &mut EngineCtx) {
        for id in &delta.removed_nodes {
            self.weights.shift_remove(id);
            if let Some(tree) = self.tree.as_mut() {
                tree.remove(id);
            }
        }
        let mut touched: Vec<&NodeId> = delta.added_nodes.iter().collect();
        for e in delta.added_edges.iter().chain(delta.removed_edges.iter()) {
            touched.push(&e.src);
            touched.push(&e.dst);
        }
        touched.sort();
        touched.dedup();
        for id in touched {
            if graph.contains_node(id) {
                self.rebuild_row(graph, id);
            }
        }
        place_added(graph, layout, delta, ctx);
        if let Some(tree) = self.tree.as_mut() {
            for id in &delta.added_nodes {
                if let Some(p) = layout.position(id) {
                    if !tree.contains(id) {
                        tree.insert(id.clone(), p.x, p.y);
                    }
                }
            }
        }
    }
}
