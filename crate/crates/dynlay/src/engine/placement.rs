//! First positions for nodes entering the layout.

use rand::{Rng, RngCore};

use crate::graph::{Graph, Layout, NodeId, Position};

use super::{Canvas, Placement};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlacementError {
    #[error("no positioned neighbors to average")]
    NoPositionedNeighbors,
    #[error("masses must be positive, got {0} and {1}")]
    NonPositiveMass(f64, f64),
}

/// Uniform position over the full canvas, endpoints included.
pub fn place_random(canvas: Canvas, rng: &mut dyn RngCore) -> Position {
    Position::new(
        rng.gen_range(0.0..=canvas.width()),
        rng.gen_range(0.0..=canvas.height()),
    )
}

/// Mean position of the given already-positioned neighbors. Neighbors
/// without a position are an error on the caller's side, as is an empty
/// list; callers fall back to [`place_random`].
pub fn place_barycenter(layout: &Layout, neighbors: &[NodeId]) -> Result<Position, PlacementError> {
    let mut sum_x = 0.0;
    let mut sum_y = 0.0;
    let mut n = 0usize;
    for id in neighbors {
        let p = layout
            .position(id)
            .ok_or(PlacementError::NoPositionedNeighbors)?;
        sum_x += p.x;
        sum_y += p.y;
        n += 1;
    }
    if n == 0 {
        return Err(PlacementError::NoPositionedNeighbors);
    }
    Ok(Position::new(sum_x / n as f64, sum_y / n as f64))
}

/// Preferred distance `a / (1 + m_i / m_j)` between a new node of mass `m_i`
/// and a placed neighbor of mass `m_j`, where `a` is the preferred edge
/// length. The heavier the new node relative to its neighbor, the closer it
/// wants to sit. Provided for mass-aware placement schemes; the built-in
/// heuristics do not consume it.
pub fn barycenter_distance(a: f64, m_i: f64, m_j: f64) -> Result<f64, PlacementError> {
    if m_i <= 0.0 || m_j <= 0.0 {
        return Err(PlacementError::NonPositiveMass(m_i, m_j));
    }
    Ok(a / (1.0 + m_i / m_j))
}

/// Applies the configured heuristic for one node: barycenter of positioned
/// neighbors when requested and possible, uniform random otherwise.
pub fn place_node(
    graph: &Graph,
    layout: &Layout,
    id: &NodeId,
    placement: Placement,
    rng: &mut dyn RngCore,
) -> Position {
    if placement == Placement::Barycenter {
        if let Ok(neighbors) = graph.neighbors(id) {
            let placed: Vec<NodeId> = neighbors
                .into_iter()
                .filter(|n| layout.position(n).is_some())
                .collect();
            if let Ok(p) = place_barycenter(layout, &placed) {
                return p;
            }
        }
    }
    place_random(layout.canvas, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn place_random_stays_in_bounds_and_covers_the_canvas() {
        let canvas = Canvas::new(10.0, 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut sum_x = 0.0;
        let mut sum_y = 0.0;
        let draws = 10_000;
        for _ in 0..draws {
            let p = place_random(canvas, &mut rng);
            assert!((0.0..=10.0).contains(&p.x) && (0.0..=10.0).contains(&p.y));
            sum_x += p.x;
            sum_y += p.y;
        }
        // Empirical mean of a uniform draw over [0, 10] is 5 +- ~0.1.
        assert!((sum_x / draws as f64 - 5.0).abs() < 0.15);
        assert!((sum_y / draws as f64 - 5.0).abs() < 0.15);
    }

    #[test]
    fn barycenter_is_the_neighbor_mean() {
        let mut layout = Layout::new(Canvas::new(10.0, 10.0));
        layout.set_position("a".into(), Position::new(0.0, 0.0));
        layout.set_position("b".into(), Position::new(2.0, 0.0));
        layout.set_position("c".into(), Position::new(1.0, 3.0));
        let p = place_barycenter(&layout, &["a".into(), "b".into(), "c".into()]).unwrap();
        assert_eq!(p, Position::new(1.0, 1.0));

        let single = place_barycenter(&layout, &["b".into()]).unwrap();
        assert_eq!(single, Position::new(2.0, 0.0));

        assert_eq!(
            place_barycenter(&layout, &[]),
            Err(PlacementError::NoPositionedNeighbors)
        );
    }

    #[test]
    fn barycenter_distance_matches_the_mass_ratio_rule() {
        // a = 12 with the new node twice as heavy: 12 / (1 + 2) = 4.
        assert_eq!(barycenter_distance(12.0, 2.0, 1.0).unwrap(), 4.0);
        // equal masses halve the preferred length
        assert_eq!(barycenter_distance(10.0, 3.0, 3.0).unwrap(), 5.0);
        assert!(barycenter_distance(10.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn place_node_falls_back_to_random_without_positioned_neighbors() {
        let mut g = Graph::new();
        g.add_node("a".into());
        g.add_node("b".into());
        g.add_edge(Edge::new("a", "b")).unwrap();
        let mut layout = Layout::new(Canvas::new(10.0, 10.0));
        let mut rng = ChaCha8Rng::seed_from_u64(5);

        // no neighbor placed yet: random, but in bounds
        let p = place_node(&g, &layout, &"a".into(), Placement::Barycenter, &mut rng);
        assert!((0.0..=10.0).contains(&p.x));

        // with a placed, b's barycenter is exactly a's position
        layout.set_position("a".into(), Position::new(4.0, 6.0));
        let p = place_node(&g, &layout, &"b".into(), Placement::Barycenter, &mut rng);
        assert_eq!(p, Position::new(4.0, 6.0));
    }
}
