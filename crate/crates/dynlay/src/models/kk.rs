//! Spring-energy layout that matches Euclidean distances to hop distances.
//!
//! Every node pair (i, j) is connected by a virtual spring with rest length
//! `l_ij` proportional to the hop distance and stiffness `k_ij = K / l_ij^2`.
//! One outer iteration picks the node with the largest energy gradient and
//! relaxes it with a damped two-dimensional Newton method until its own
//! gradient falls under the threshold.
//!
//! The expensive ingredient is the all-pairs hop matrix. It is built once by
//! BFS from every node; an update batch that only inserts edges folds each
//! new edge (u, v) into the matrix with
//! `d'(a, b) = min(d(a, b), d(a, u) + 1 + d(v, b), d(a, v) + 1 + d(u, b))`,
//! which is exact for unit-length edges, so repeated updates stay identical
//! to a from-scratch rebuild. Any removal falls back to the full rebuild.

use std::collections::HashMap;

use rand::RngCore;

use crate::engine::{AlgorithmLifecycle, EngineCtx, StepReport};
use crate::graph::{Graph, Layout, NodeId, Position, UpdateDelta};

use super::{place_added, place_unpositioned, separation};

/// Tuning knobs; the defaults suit desk-scale graphs.
#[derive(Debug, Clone)]
pub struct KkParams {
    /// A node is settled once its gradient norm falls below this.
    pub epsilon: f64,
    /// Spring constant numerator: `k_ij = stiffness / l_ij^2`.
    pub stiffness: f64,
    /// Cap on Newton steps spent on one node per outer iteration.
    pub max_inner: usize,
}

impl Default for KkParams {
    fn default() -> Self {
        KkParams {
            epsilon: 1e-2,
            stiffness: 1.0,
            max_inner: 50,
        }
    }
}

#[derive(Debug, Default)]
pub struct KkModel {
    params: KkParams,
    ids: Vec<NodeId>,
    index: HashMap<NodeId, usize>,
    /// Hop distances; `None` means unreachable.
    dist: Vec<Vec<Option<u32>>>,
    /// Rest lengths derived from `dist` and the canvas.
    lengths: Vec<Vec<f64>>,
    /// Spring stiffnesses derived from `lengths`.
    springs: Vec<Vec<f64>>,
    diameter: u32,
    /// Gradient norms accepted during the last inner relaxation, strictly
    /// decreasing by construction.
    inner_trace: Vec<f64>,
}

impl KkModel {
    pub fn new(params: KkParams) -> Self {
        KkModel {
            params,
            ..Default::default()
        }
    }

    /// Hop distance between two known nodes (`None` inner value means
    /// unreachable); `None` outer value means an unknown id.
    pub fn hops_between(&self, a: &NodeId, b: &NodeId) -> Option<Option<u32>> {
        let i = *self.index.get(a)?;
        let j = *self.index.get(b)?;
        Some(self.dist[i][j])
    }

    /// Rest length of the virtual spring between two known nodes.
    pub fn ideal_length(&self, a: &NodeId, b: &NodeId) -> Option<f64> {
        let i = *self.index.get(a)?;
        let j = *self.index.get(b)?;
        Some(self.lengths[i][j])
    }

    /// Stiffness of the virtual spring between two known nodes.
    pub fn stiffness_between(&self, a: &NodeId, b: &NodeId) -> Option<f64> {
        let i = *self.index.get(a)?;
        let j = *self.index.get(b)?;
        Some(self.springs[i][j])
    }

    /// Gradient norms accepted during the most recent inner relaxation.
    pub fn inner_deltas(&self) -> &[f64] {
        &self.inner_trace
    }

    /// Total spring energy of the layout.
    pub fn energy(&self, layout: &Layout) -> f64 {
        let mut e = 0.0;
        for i in 0..self.ids.len() {
            let pi = layout.position(&self.ids[i]).expect("positioned");
            for j in (i + 1)..self.ids.len() {
                let pj = layout.position(&self.ids[j]).expect("positioned");
                let diff = pi.distance_to(pj) - self.lengths[i][j];
                e += 0.5 * self.springs[i][j] * diff * diff;
            }
        }
        e
    }

    fn rebuild_distances(&mut self, graph: &Graph) {
        self.ids = graph.node_ids().cloned().collect();
        self.index = self
            .ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        let n = self.ids.len();
        self.dist = vec![vec![None; n]; n];
        for (i, id) in self.ids.iter().enumerate() {
            let hops = graph.bfs_hops(id).expect("id from graph");
            for (other, h) in hops {
                let j = self.index[&other];
                self.dist[i][j] = Some(h);
            }
        }
    }

    fn apply_edge_insertions(&mut self, delta: &UpdateDelta) {
        for id in &delta.added_nodes {
            let i = self.ids.len();
            self.ids.push(id.clone());
            self.index.insert(id.clone(), i);
            for row in &mut self.dist {
                row.push(None);
            }
            let mut row = vec![None; i + 1];
            row[i] = Some(0);
            self.dist.push(row);
        }
        let n = self.ids.len();
        for edge in &delta.added_edges {
            let u = self.index[&edge.src];
            let v = self.index[&edge.dst];
            for a in 0..n {
                for b in 0..n {
                    let through_uv = join(self.dist[a][u], self.dist[v][b]);
                    let through_vu = join(self.dist[a][v], self.dist[u][b]);
                    let best = opt_min(self.dist[a][b], opt_min(through_uv, through_vu));
                    self.dist[a][b] = best;
                }
            }
        }
    }

    fn rebuild_targets(&mut self, layout: &Layout) {
        let n = self.ids.len();
        self.diameter = self
            .dist
            .iter()
            .flatten()
            .filter_map(|d| *d)
            .max()
            .unwrap_or(0);
        let l0 = layout.canvas.min_side();
        let scale = l0 / self.diameter.max(1) as f64;
        let substitute = (self.diameter + 1) as f64;
        self.lengths = vec![vec![0.0; n]; n];
        self.springs = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let hops = match self.dist[i][j] {
                    Some(h) => h as f64,
                    None => substitute,
                };
                let l = scale * hops;
                self.lengths[i][j] = l;
                self.springs[i][j] = self.params.stiffness / (l * l);
            }
        }
    }

    /// Gradient and Hessian of the energy restricted to node `m`.
    fn partials(
        &self,
        layout: &mut Layout,
        m: usize,
        rng: &mut dyn RngCore,
    ) -> (f64, f64, f64, f64, f64) {
        let (mut ex, mut ey) = (0.0, 0.0);
        let (mut exx, mut exy, mut eyy) = (0.0, 0.0, 0.0);
        for i in 0..self.ids.len() {
            if i == m {
                continue;
            }
            // Vector from m to i; negate for the gradient's (m - i) terms.
            let (to_ix, to_iy, d) = separation(layout, &self.ids[m], &self.ids[i], rng);
            let (dx, dy) = (-to_ix, -to_iy);
            let l = self.lengths[m][i];
            let k = self.springs[m][i];
            let d3 = d * d * d;
            ex += k * dx * (1.0 - l / d);
            ey += k * dy * (1.0 - l / d);
            exx += k * (1.0 - l * dy * dy / d3);
            eyy += k * (1.0 - l * dx * dx / d3);
            exy += k * l * dx * dy / d3;
        }
        (ex, ey, exx, exy, eyy)
    }

    fn gradient_norm(&self, layout: &mut Layout, m: usize, rng: &mut dyn RngCore) -> f64 {
        let (ex, ey, ..) = self.partials(layout, m, rng);
        (ex * ex + ey * ey).sqrt()
    }

    /// Read-only gradient norm; `None` when a coincident pair makes the
    /// gradient undefined (which certainly is not a settled layout).
    fn gradient_norm_readonly(&self, layout: &Layout, m: usize) -> Option<f64> {
        let pm = layout.position(&self.ids[m])?;
        let (mut ex, mut ey) = (0.0, 0.0);
        for i in 0..self.ids.len() {
            if i == m {
                continue;
            }
            let pi = layout.position(&self.ids[i])?;
            let (dx, dy) = (pm.x - pi.x, pm.y - pi.y);
            let d = (dx * dx + dy * dy).sqrt();
            if d == 0.0 {
                return None;
            }
            let l = self.lengths[m][i];
            let k = self.springs[m][i];
            ex += k * dx * (1.0 - l / d);
            ey += k * dy * (1.0 - l / d);
        }
        Some((ex * ex + ey * ey).sqrt())
    }

    /// Spring energy of the terms involving node `m` only.
    fn restricted_energy(&self, layout: &Layout, m: usize) -> f64 {
        let pm = layout.position(&self.ids[m]).expect("positioned");
        let mut e = 0.0;
        for i in 0..self.ids.len() {
            if i == m {
                continue;
            }
            let pi = layout.position(&self.ids[i]).expect("positioned");
            let d = pm.distance_to(pi);
            let diff = d - self.lengths[m][i];
            e += 0.5 * self.springs[m][i] * diff * diff;
        }
        e
    }

    /// One damped Newton step on node `m`. Returns the new gradient norm if
    /// a step was accepted.
    fn newton_step(
        &self,
        layout: &mut Layout,
        m: usize,
        current: f64,
        rng: &mut dyn RngCore,
    ) -> Option<f64> {
        let (ex, ey, exx, exy, eyy) = self.partials(layout, m, rng);
        let det = exx * eyy - exy * exy;
        let (step_x, step_y) = if det.abs() < 1e-12 {
            // Singular Hessian: short gradient descent step instead.
            let g = (ex * ex + ey * ey).sqrt();
            if g == 0.0 {
                return None;
            }
            let len = current.min(0.1 * layout.canvas.min_side());
            (-ex / g * len, -ey / g * len)
        } else {
            ((-ex * eyy + ey * exy) / det, (ex * exy - ey * exx) / det)
        };
        let origin = layout.position(&self.ids[m]).expect("positioned");
        let e0 = self.restricted_energy(layout, m);
        let mut t = 1.0;
        for _ in 0..30 {
            let candidate = Position::new(origin.x + t * step_x, origin.y + t * step_y);
            layout.set_position(self.ids[m].clone(), candidate);
            let delta = self.gradient_norm(layout, m, rng);
            let energy = self.restricted_energy(layout, m);
            // Accept only a strict gradient decrease that does not buy it
            // with extra energy.
            if delta < current && energy <= e0 + 1e-9 {
                return Some(delta);
            }
            t *= 0.5;
        }
        layout.set_position(self.ids[m].clone(), origin);
        None
    }
}

fn opt_min(a: Option<u32>, b: Option<u32>) -> Option<u32> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (Some(x), None) => Some(x),
        (None, y) => y,
    }
}

fn join(a: Option<u32>, b: Option<u32>) -> Option<u32> {
    Some(a? + 1 + b?)
}

impl AlgorithmLifecycle for KkModel {
    fn name(&self) -> &'static str {
        "kk"
    }

    fn init_section(&mut self, graph: &Graph, layout: &mut Layout, _level: u32, ctx: &mut EngineCtx) {
        self.rebuild_distances(graph);
        self.rebuild_targets(layout);
        self.inner_trace.clear();
        place_unpositioned(graph, layout, ctx);
    }

    fn iteration_step(&mut self, _graph: &Graph, layout: &mut Layout, ctx: &mut EngineCtx) -> StepReport {
        let n = self.ids.len();
        if n <= 1 {
            return StepReport {
                converged: true,
                ..StepReport::default()
            };
        }
        let mut worst = 0usize;
        let mut worst_delta = -1.0;
        for m in 0..n {
            let delta = self.gradient_norm(layout, m, ctx.rng);
            if delta > worst_delta {
                worst_delta = delta;
                worst = m;
            }
        }
        if worst_delta < self.params.epsilon {
            return StepReport {
                converged: true,
                ..StepReport::default()
            };
        }
        let origin = layout.position(&self.ids[worst]).expect("positioned");
        self.inner_trace.clear();
        self.inner_trace.push(worst_delta);
        let mut current = worst_delta;
        let mut inner = 0;
        while current > self.params.epsilon && inner < self.params.max_inner {
            inner += 1;
            match self.newton_step(layout, worst, current, ctx.rng) {
                Some(next) => {
                    current = next;
                    self.inner_trace.push(next);
                }
                None => break,
            }
        }
        let displacement = layout
            .position(&self.ids[worst])
            .expect("positioned")
            .distance_to(origin);
        StepReport {
            converged: false,
            moved: usize::from(displacement > 0.0),
            max_displacement: displacement,
        }
    }

    fn on_update(&mut self, graph: &Graph, layout: &mut Layout, delta: &UpdateDelta, ctx: &mut EngineCtx) {
        if delta.removed_nodes.is_empty() && delta.removed_edges.is_empty() {
            self.apply_edge_insertions(delta);
        } else {
            self.rebuild_distances(graph);
        }
        self.rebuild_targets(layout);
        place_added(graph, layout, delta, ctx);
    }

    fn is_good_layout(&self, _graph: &Graph, layout: &Layout) -> bool {
        let n = self.ids.len();
        if n <= 1 {
            return true;
        }
        (0..n).all(|m| {
            self.gradient_norm_readonly(layout, m)
                .is_some_and(|d| d < self.params.epsilon)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Canvas, EngineCtx, Placement};
    use crate::graph::UpdateBatch;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ctx<'a>(rng: &'a mut ChaCha8Rng) -> EngineCtx<'a> {
        EngineCtx {
            rng,
            placement: Placement::Random,
        }
    }

    fn path_graph(n: usize) -> Graph {
        let mut g = Graph::new();
        for i in 0..n {
            g.add_node(NodeId::from(i));
        }
        for i in 1..n {
            g.add_edge(crate::graph::Edge::new(NodeId::from(i - 1), NodeId::from(i)))
                .unwrap();
        }
        g
    }

    #[test]
    fn ideal_lengths_scale_hops_to_the_canvas() {
        let g = path_graph(5);
        let mut layout = Layout::new(Canvas::new(100.0, 200.0));
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut model = KkModel::new(KkParams::default());
        model.init_section(&g, &mut layout, 1, &mut ctx(&mut rng));

        // min side 100, diameter 4, so two hops rest at 100 / 4 * 2 = 50.
        let a = NodeId::from(0usize);
        let c = NodeId::from(2usize);
        assert_eq!(model.hops_between(&a, &c), Some(Some(2)));
        let l = model.ideal_length(&a, &c).unwrap();
        assert!((l - 50.0).abs() < 1e-12);
        let k = model.stiffness_between(&a, &c).unwrap();
        assert!((k - 1.0 / 2500.0).abs() < 1e-15);
    }

    #[test]
    fn restricted_energy_and_gradient_match_hand_values() {
        let mut g = Graph::new();
        g.add_node(NodeId::from("i"));
        g.add_node(NodeId::from("m"));
        g.add_edge(crate::graph::Edge::new(NodeId::from("i"), NodeId::from("m")))
            .unwrap();
        let mut layout = Layout::new(Canvas::new(2.0, 2.0));
        let mut model = KkModel::new(KkParams::default());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        model.init_section(&g, &mut layout, 1, &mut ctx(&mut rng));
        // Canvas min side 2, diameter 1: l = 2. Force k = 0.25 explicitly.
        assert!((model.ideal_length(&NodeId::from("m"), &NodeId::from("i")).unwrap() - 2.0).abs() < 1e-12);
        assert!((model.stiffness_between(&NodeId::from("m"), &NodeId::from("i")).unwrap() - 0.25).abs() < 1e-12);

        layout.set_position(NodeId::from("i"), Position::new(0.0, 0.0));
        layout.set_position(NodeId::from("m"), Position::new(3.0, 4.0));
        let m = model.index[&NodeId::from("m")];
        // d = 5, l = 2, k = 1/4: energy = 0.5 * 0.25 * 9 = 1.125.
        assert!((model.restricted_energy(&layout, m) - 1.125).abs() < 1e-12);
        assert!((model.energy(&layout) - 1.125).abs() < 1e-12);
        // Energy is linear in the stiffness constant.
        let mut stiff = KkModel::new(KkParams {
            stiffness: 2.0,
            ..KkParams::default()
        });
        let mut sl = Layout::new(Canvas::new(2.0, 2.0));
        stiff.init_section(&g, &mut sl, 1, &mut ctx(&mut rng));
        sl.set_position(NodeId::from("i"), Position::new(0.0, 0.0));
        sl.set_position(NodeId::from("m"), Position::new(3.0, 4.0));
        assert!((stiff.energy(&sl) - 2.25).abs() < 1e-12);
        // gradient = k * (dx, dy) * (1 - l/d) = 0.25 * (3, 4) * 0.6.
        let (ex, ey, ..) = model.partials(&mut layout, m, &mut rng);
        assert!((ex - 0.45).abs() < 1e-12);
        assert!((ey - 0.6).abs() < 1e-12);
        assert!((model.gradient_norm(&mut layout, m, &mut rng) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn settled_layout_reports_convergence_and_stays_put() {
        let g = path_graph(2);
        let mut layout = Layout::new(Canvas::new(10.0, 10.0));
        let mut model = KkModel::new(KkParams::default());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        model.init_section(&g, &mut layout, 1, &mut ctx(&mut rng));
        // Rest length is the full min side (diameter 1).
        layout.set_position(NodeId::from(0usize), Position::new(0.0, 5.0));
        layout.set_position(NodeId::from(1usize), Position::new(10.0, 5.0));
        let before = layout.clone();
        let report = model.iteration_step(&g, &mut layout, &mut ctx(&mut rng));
        assert!(report.converged);
        assert_eq!(report.moved, 0);
        assert_eq!(layout, before);
        assert!(model.is_good_layout(&g, &layout));
    }

    #[test]
    fn inner_relaxation_strictly_decreases_the_gradient() {
        let g = path_graph(4);
        let mut layout = Layout::new(Canvas::new(10.0, 10.0));
        let mut model = KkModel::new(KkParams::default());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        model.init_section(&g, &mut layout, 1, &mut ctx(&mut rng));
        for (i, (x, y)) in [(1.0, 1.0), (1.5, 8.0), (9.0, 1.0), (4.0, 4.0)].iter().enumerate() {
            layout.set_position(NodeId::from(i), Position::new(*x, *y));
        }
        let report = model.iteration_step(&g, &mut layout, &mut ctx(&mut rng));
        assert!(!report.converged);
        assert!(report.max_displacement > 0.0);
        let trace = model.inner_deltas();
        assert!(trace.len() >= 2, "expected at least one accepted step");
        for pair in trace.windows(2) {
            assert!(pair[1] < pair[0], "trace not strictly decreasing: {trace:?}");
        }
    }

    #[test]
    fn insert_only_updates_match_a_full_rebuild() {
        let mut g = path_graph(4);
        let mut layout = Layout::new(Canvas::new(100.0, 100.0));
        let mut model = KkModel::new(KkParams::default());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        model.init_section(&g, &mut layout, 1, &mut ctx(&mut rng));

        let mut batch = UpdateBatch::at(1.0);
        batch.added_nodes.push(NodeId::from("x"));
        batch.added_edges.push(crate::graph::Edge::new(NodeId::from(0usize), NodeId::from("x")));
        batch.added_edges.push(crate::graph::Edge::new(NodeId::from("x"), NodeId::from(3usize)));
        let delta = g.apply_update(&batch, crate::graph::Strictness::Strict).unwrap();
        model.on_update(&g, &mut layout, &delta, &mut ctx(&mut rng));

        let mut fresh = KkModel::new(KkParams::default());
        let mut fresh_layout = Layout::new(layout.canvas);
        fresh.init_section(&g, &mut fresh_layout, 1, &mut ctx(&mut rng));

        for a in g.node_ids() {
            for b in g.node_ids() {
                assert_eq!(model.hops_between(a, b), fresh.hops_between(a, b));
                let (li, lf) = (model.ideal_length(a, b).unwrap(), fresh.ideal_length(a, b).unwrap());
                assert_eq!(li.to_bits(), lf.to_bits());
                let (ki, kf) = (
                    model.stiffness_between(a, b).unwrap(),
                    fresh.stiffness_between(a, b).unwrap(),
                );
                assert_eq!(ki.to_bits(), kf.to_bits());
            }
        }
        // The shortcut through x actually changed the metric.
        assert_eq!(
            model.hops_between(&NodeId::from(0usize), &NodeId::from(3usize)),
            Some(Some(2))
        );
    }

    #[test]
    fn removals_trigger_a_consistent_rebuild() {
        let mut g = path_graph(5);
        let mut layout = Layout::new(Canvas::new(100.0, 100.0));
        let mut model = KkModel::new(KkParams::default());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        model.init_section(&g, &mut layout, 1, &mut ctx(&mut rng));

        let mut batch = UpdateBatch::at(2.0);
        batch.removed_nodes.push(NodeId::from(2usize));
        let delta = g.apply_update(&batch, crate::graph::Strictness::Strict).unwrap();
        layout.remove(&NodeId::from(2usize));
        model.on_update(&g, &mut layout, &delta, &mut ctx(&mut rng));

        // 0-1 and 3-4 are now separate components.
        assert_eq!(
            model.hops_between(&NodeId::from(1usize), &NodeId::from(3usize)),
            Some(None)
        );
        let mut fresh = KkModel::new(KkParams::default());
        let mut fresh_layout = Layout::new(layout.canvas);
        fresh.init_section(&g, &mut fresh_layout, 1, &mut ctx(&mut rng));
        for a in g.node_ids() {
            for b in g.node_ids() {
                assert_eq!(model.hops_between(a, b), fresh.hops_between(a, b));
                assert_eq!(
                    model.ideal_length(a, b).unwrap().to_bits(),
                    fresh.ideal_length(a, b).unwrap().to_bits()
                );
            }
        }
    }
}
