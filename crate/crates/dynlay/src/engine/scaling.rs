//! Canvas growth for growing graphs, and post-run snapshot normalization so
//! frames taken on differently sized canvases can be compared side by side.

use super::{Canvas, Snapshot};
use crate::graph::Position;

/// Grows the canvas area in proportion to the node count: adding `added`
/// nodes to a graph of `current` multiplies the area by
/// `1 + added / current`, preserving the aspect ratio. The canvas never
/// shrinks, and an empty graph keeps its configured canvas.
pub fn rescale_canvas(canvas: Canvas, added: usize, current: usize) -> Canvas {
    if added == 0 || current == 0 {
        return canvas;
    }
    let area_factor = 1.0 + added as f64 / current as f64;
    let side_factor = area_factor.sqrt();
    Canvas::new(canvas.width() * side_factor, canvas.height() * side_factor)
}

/// Maps every snapshot onto the canvas of the "fullest" one (most nodes,
/// then most edges, then latest) with a uniform scale and centering, so that
/// a frame sequence spanning canvas growth renders coherently. Applying the
/// normalization twice is a no-op.
pub fn normalize_snapshots(snapshots: &[Snapshot]) -> Vec<Snapshot> {
    let Some(standard) = snapshots.iter().max_by(|a, b| {
        (a.node_count, a.edge_count)
            .cmp(&(b.node_count, b.edge_count))
            .then(a.at.total_cmp(&b.at))
    }) else {
        return Vec::new();
    };
    let target = standard.layout.canvas;
    snapshots
        .iter()
        .map(|snap| {
            let from = snap.layout.canvas;
            let scale = (target.width() / from.width()).min(target.height() / from.height());
            let tx = (target.width() - scale * from.width()) / 2.0;
            let ty = (target.height() - scale * from.height()) / 2.0;
            let mut mapped = snap.clone();
            let ids: Vec<_> = snap.layout.iter().map(|(id, _)| id.clone()).collect();
            for id in ids {
                let p = snap.layout.position(&id).unwrap();
                mapped
                    .layout
                    .set_position(id, Position::new(scale * p.x + tx, scale * p.y + ty));
            }
            mapped.layout.canvas = target;
            mapped
        })
        .collect()
}
