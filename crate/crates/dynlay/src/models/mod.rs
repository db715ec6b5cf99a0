//! The five layout models. Each one implements
//! [`AlgorithmLifecycle`](crate::engine::AlgorithmLifecycle) and can run in
//! either engine mode; what "online" means is shared across them: entry
//! tasks extend internal state and place the new nodes, and never touch a
//! position that already exists.

pub mod dh;
pub mod fa2;
pub mod fr;
pub mod kk;
pub mod linlog;
pub mod quadtree;

pub use dh::DhModel;
pub use fa2::Fa2Model;
pub use fr::FrModel;
pub use kk::KkModel;
pub use linlog::LinLogModel;

use rand::{Rng, RngCore};

use crate::engine::{AlgorithmLifecycle, EngineCtx};
use crate::graph::{Graph, Layout, Position, UpdateDelta};

/// Relative scale of the nudge used to pull exactly coincident nodes apart
/// before force evaluation, as a fraction of the canvas short side.
pub(crate) const JITTER_SCALE: f64 = 1e-6;

/// Distances below this fraction of the canvas short side count as
/// coincident.
pub(crate) const COINCIDENT_SCALE: f64 = 1e-9;

/// Selects a model by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Fruchterman-Reingold spring embedder.
    Fr,
    /// Kamada-Kawai energy minimization over graph-theoretic distances.
    Kk,
    /// ForceAtlas2 with degree-scaled repulsion and swing-adaptive speed.
    Fa2,
    /// Davidson-Harel annealing with greedy acceptance.
    Dh,
    /// LinLog energy model with tree-aggregated repulsion.
    Linlog,
}

impl ModelKind {
    pub fn build(self) -> Box<dyn AlgorithmLifecycle> {
        match self {
            ModelKind::Fr => Box::new(FrModel::default()),
            ModelKind::Kk => Box::new(KkModel::default()),
            ModelKind::Fa2 => Box::new(Fa2Model::default()),
            ModelKind::Dh => Box::new(DhModel::default()),
            ModelKind::Linlog => Box::new(LinLogModel::default()),
        }
    }

    pub fn all() -> [ModelKind; 5] {
        [
            ModelKind::Fr,
            ModelKind::Kk,
            ModelKind::Fa2,
            ModelKind::Dh,
            ModelKind::Linlog,
        ]
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            ModelKind::Fr => "fr",
            ModelKind::Kk => "kk",
            ModelKind::Fa2 => "fa2",
            ModelKind::Dh => "dh",
            ModelKind::Linlog => "linlog",
        };
        f.write_str(name)
    }
}

/// Places every node the layout does not know yet, in graph order.
pub(crate) fn place_unpositioned(graph: &Graph, layout: &mut Layout, ctx: &mut EngineCtx) {
    for id in graph.node_ids() {
        if layout.position(id).is_none() {
            let p = crate::engine::place_node(graph, layout, id, ctx.placement, ctx.rng);
            layout.set_position(id.clone(), p);
        }
    }
}

/// Entry-task placement: only the nodes the delta added and the graph still
/// contains.
pub(crate) fn place_added(
    graph: &Graph,
    layout: &mut Layout,
    delta: &UpdateDelta,
    ctx: &mut EngineCtx,
) {
    for id in &delta.added_nodes {
        if graph.contains_node(id) && layout.position(id).is_none() {
            let p = crate::engine::place_node(graph, layout, id, ctx.placement, ctx.rng);
            layout.set_position(id.clone(), p);
        }
    }
}

/// Difference vector `to - from` with its length. When the two points
/// coincide, `to` is nudged by a tiny seeded offset first so force terms
/// never divide by zero; the nudge is written back to the layout.
pub(crate) fn separation(
    layout: &mut Layout,
    from: &crate::graph::NodeId,
    to: &crate::graph::NodeId,
    rng: &mut dyn RngCore,
) -> (f64, f64, f64) {
    let a = layout.position(from).expect("positioned");
    let mut b = layout.position(to).expect("positioned");
    let scale = layout.canvas.min_side();
    if a.distance_to(b) < COINCIDENT_SCALE * scale {
        let angle = rng.gen_range(0.0..std::f64::consts::TAU);
        let r = JITTER_SCALE * scale;
        b = Position::new(b.x + r * angle.cos(), b.y + r * angle.sin());
        layout.set_position(to.clone(), b);
    }
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    (dx, dy, (dx * dx + dy * dy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Canvas, Placement};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn separation_jitters_exact_overlaps_apart() {
        let mut layout = Layout::new(Canvas::new(100.0, 100.0));
        layout.set_position("a".into(), Position::new(5.0, 5.0));
        layout.set_position("b".into(), Position::new(5.0, 5.0));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (_, _, d) = separation(&mut layout, &"a".into(), &"b".into(), &mut rng);
        assert!(d > 0.0);
        let moved = layout.position(&"b".into()).unwrap();
        let nudge = moved.distance_to(Position::new(5.0, 5.0));
        assert!((nudge - 1e-4).abs() < 1e-12, "nudge is 1e-6 of min side");
    }

    #[test]
    fn model_kinds_build_and_report_names() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for kind in ModelKind::all() {
            let model = kind.build();
            assert!(!model.name().is_empty());
            let _ = &mut rng;
        }
        assert_eq!(ModelKind::Linlog.to_string(), "linlog");
    }

    #[test]
    fn place_unpositioned_covers_every_node_once() {
        let mut g = Graph::new();
        for i in 0..5usize {
            g.add_node(i.into());
        }
        let mut layout = Layout::new(Canvas::new(10.0, 10.0));
        layout.set_position(0usize.into(), Position::new(1.0, 1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut ctx = EngineCtx {
            rng: &mut rng,
            placement: Placement::Random,
        };
        place_unpositioned(&g, &mut layout, &mut ctx);
        assert_eq!(layout.len(), 5);
        // the preplaced node kept its position
        assert_eq!(
            layout.position(&0usize.into()),
            Some(Position::new(1.0, 1.0))
        );
    }
}
