//! Region quadtree over unit-mass points with cached aggregates per cell.
//!
//! Leaves hold one point. Inserting outside the current bounds grows the
//! root; inserting exactly on top of an existing point nudges the newcomer
//! by a tiny deterministic offset (with a depth-capped bucket as the
//! backstop for adversarial near-duplicates). Deletion is supported so a
//! long-lived tree can follow both graph updates and node movement.

use std::collections::HashMap;

use crate::graph::NodeId;

const MAX_DEPTH: usize = 40;
/// Nudge applied to an exact duplicate, relative to the root size.
const DUPLICATE_NUDGE: f64 = 1e-6;

/// Axis-aligned rectangle, closed on all sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Rect {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        assert!(min_x < max_x && min_y < max_y, "rectangle must have area");
        Rect {
            min_x,
            min_y,
            max_x,
            max_y,
        }
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }

    fn contains_rect(&self, other: &Rect) -> bool {
        self.min_x <= other.min_x
            && self.min_y <= other.min_y
            && self.max_x >= other.max_x
            && self.max_y >= other.max_y
    }

    fn intersects(&self, other: &Rect) -> bool {
        self.min_x <= other.max_x
            && other.min_x <= self.max_x
            && self.min_y <= other.max_y
            && other.min_y <= self.max_y
    }

    fn quadrant(&self, index: usize) -> Rect {
        let mx = self.min_x + self.width() / 2.0;
        let my = self.min_y + self.height() / 2.0;
        match index {
            0 => Rect { min_x: self.min_x, min_y: self.min_y, max_x: mx, max_y: my },
            1 => Rect { min_x: mx, min_y: self.min_y, max_x: self.max_x, max_y: my },
            2 => Rect { min_x: self.min_x, min_y: my, max_x: mx, max_y: self.max_y },
            _ => Rect { min_x: mx, min_y: my, max_x: self.max_x, max_y: self.max_y },
        }
    }

    fn quadrant_of(&self, x: f64, y: f64) -> usize {
        let mx = self.min_x + self.width() / 2.0;
        let my = self.min_y + self.height() / 2.0;
        (usize::from(x >= mx)) + 2 * usize::from(y >= my)
    }
}

#[derive(Debug, Clone)]
enum Cell {
    Empty,
    Leaf(NodeId, f64, f64),
    /// Overflow storage once splitting stops helping.
    Bucket(Vec<(NodeId, f64, f64)>),
    Internal(Box<Internal>),
}

#[derive(Debug, Clone)]
struct Internal {
    children: [Cell; 4],
    count: usize,
    sum_x: f64,
    sum_y: f64,
}

impl Cell {
    fn count(&self) -> usize {
        match self {
            Cell::Empty => 0,
            Cell::Leaf(..) => 1,
            Cell::Bucket(v) => v.len(),
            Cell::Internal(i) => i.count,
        }
    }

    fn sums(&self) -> (f64, f64) {
        match self {
            Cell::Empty => (0.0, 0.0),
            Cell::Leaf(_, x, y) => (*x, *y),
            Cell::Bucket(v) => v.iter().fold((0.0, 0.0), |(sx, sy), (_, x, y)| {
                (sx + x, sy + y)
            }),
            Cell::Internal(i) => (i.sum_x, i.sum_y),
        }
    }
}

impl Internal {
    fn refresh(&mut self) {
        self.count = self.children.iter().map(Cell::count).sum();
        let mut sx = 0.0;
        let mut sy = 0.0;
        for c in &self.children {
            let (x, y) = c.sums();
            sx += x;
            sy += y;
        }
        self.sum_x = sx;
        self.sum_y = sy;
    }
}

#[derive(Debug, Clone)]
pub struct QuadTree {
    bounds: Rect,
    root: Cell,
    stored: HashMap<NodeId, (f64, f64)>,
}

impl QuadTree {
    pub fn new(bounds: Rect) -> Self {
        QuadTree {
            bounds,
            root: Cell::Empty,
            stored: HashMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.stored.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stored.is_empty()
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.stored.contains_key(id)
    }

    pub fn bounds(&self) -> Rect {
        self.bounds
    }

    /// Total mass (one per point) and centroid of everything in the tree.
    pub fn total_aggregate(&self) -> (f64, Option<(f64, f64)>) {
        let count = self.root.count();
        if count == 0 {
            return (0.0, None);
        }
        let (sx, sy) = self.root.sums();
        (count as f64, Some((sx / count as f64, sy / count as f64)))
    }

    /// Inserts a point; the id must not already be present.
    pub fn insert(&mut self, id: NodeId, x: f64, y: f64) {
        assert!(
            !self.stored.contains_key(&id),
            "duplicate id `{id}` inserted into quadtree"
        );
        assert!(x.is_finite() && y.is_finite(), "non-finite point");
        self.grow_to_cover(x, y);
        let (mut px, mut py) = (x, y);
        let mut attempt = 0u32;
        // Exact duplicates split forever, so nudge the newcomer instead.
        while self.occupied_exactly(px, py) && attempt < 64 {
            attempt += 1;
            let r = DUPLICATE_NUDGE * self.bounds.width().max(self.bounds.height()) * attempt as f64;
            let angle = 2.399963229728653 * attempt as f64; // golden angle
            px = x + r * angle.cos();
            py = y + r * angle.sin();
        }
        self.grow_to_cover(px, py);
        let bounds = self.bounds;
        Self::insert_into(&mut self.root, bounds, id.clone(), px, py, 0);
        self.stored.insert(id, (px, py));
    }

    /// Removes a point by id; returns whether it was present.
    pub fn remove(&mut self, id: &NodeId) -> bool {
        let Some((x, y)) = self.stored.remove(id) else {
            return false;
        };
        let bounds = self.bounds;
        let removed = Self::remove_from(&mut self.root, bounds, id, x, y);
        debug_assert!(removed, "stored map and tree out of sync");
        removed
    }

    /// Moves an existing point.
    pub fn reinsert(&mut self, id: &NodeId, x: f64, y: f64) {
        if self.remove(id) {
            self.insert(id.clone(), x, y);
        }
    }

    /// Mass and centroid of the points inside `query` (closed bounds).
    pub fn aggregate_in(&self, query: Rect) -> (f64, Option<(f64, f64)>) {
        let mut count = 0usize;
        let mut sx = 0.0;
        let mut sy = 0.0;
        Self::aggregate(&self.root, self.bounds, &query, &mut count, &mut sx, &mut sy);
        if count == 0 {
            (0.0, None)
        } else {
            (count as f64, Some((sx / count as f64, sy / count as f64)))
        }
    }

    /// Inverse-distance repulsion exerted on `(px, py)` by every stored
    /// point except `skip`: each point or approximated cell of mass m at
    /// distance d pushes with magnitude m / d. Cells are approximated when
    /// their size over distance falls below `theta`; `theta = 0` therefore
    /// visits every point.
    pub fn repulsion_at(&self, px: f64, py: f64, theta: f64, skip: Option<&NodeId>) -> (f64, f64) {
        let mut fx = 0.0;
        let mut fy = 0.0;
        Self::repulse(&self.root, self.bounds, px, py, theta, skip, &mut fx, &mut fy);
        (fx, fy)
    }

    fn occupied_exactly(&self, x: f64, y: f64) -> bool {
        // The stored map doubles as an exact-position index; linear scan is
        // fine because collisions are vanishingly rare.
        self.stored.values().any(|&(sx, sy)| sx == x && sy == y)
    }

    fn grow_to_cover(&mut self, x: f64, y: f64) {
        while !self.bounds.contains(x, y) {
            let w = self.bounds.width();
            let h = self.bounds.height();
            let grow_west = x < self.bounds.min_x;
            let grow_north = y < self.bounds.min_y;
            let new_bounds = Rect {
                min_x: if grow_west { self.bounds.min_x - w } else { self.bounds.min_x },
                max_x: if grow_west { self.bounds.max_x } else { self.bounds.max_x + w },
                min_y: if grow_north { self.bounds.min_y - h } else { self.bounds.min_y },
                max_y: if grow_north { self.bounds.max_y } else { self.bounds.max_y + h },
            };
            let old_quadrant =
                (usize::from(grow_west)) + 2 * usize::from(grow_north);
            let old_root = std::mem::replace(&mut self.root, Cell::Empty);
            if old_root.count() == 0 {
                self.bounds = new_bounds;
                continue;
            }
            let mut internal = Internal {
                children: [Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty],
                count: 0,
                sum_x: 0.0,
                sum_y: 0.0,
            };
            internal.children[old_quadrant] = old_root;
            internal.refresh();
            self.root = Cell::Internal(Box::new(internal));
            self.bounds = new_bounds;
        }
    }

    fn insert_into(cell: &mut Cell, rect: Rect, id: NodeId, x: f64, y: f64, depth: usize) {
        match cell {
            Cell::Empty => *cell = Cell::Leaf(id, x, y),
            Cell::Leaf(..) if depth >= MAX_DEPTH => {
                let Cell::Leaf(eid, ex, ey) = std::mem::replace(cell, Cell::Empty) else {
                    unreachable!()
                };
                *cell = Cell::Bucket(vec![(eid, ex, ey), (id, x, y)]);
            }
            Cell::Leaf(..) => {
                let Cell::Leaf(eid, ex, ey) = std::mem::replace(cell, Cell::Empty) else {
                    unreachable!()
                };
                let mut internal = Internal {
                    children: [Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty],
                    count: 0,
                    sum_x: 0.0,
                    sum_y: 0.0,
                };
                let q = rect.quadrant_of(ex, ey);
                Self::insert_into(&mut internal.children[q], rect.quadrant(q), eid, ex, ey, depth + 1);
                let q = rect.quadrant_of(x, y);
                Self::insert_into(&mut internal.children[q], rect.quadrant(q), id, x, y, depth + 1);
                internal.refresh();
                *cell = Cell::Internal(Box::new(internal));
            }
            Cell::Bucket(points) => points.push((id, x, y)),
            Cell::Internal(internal) => {
                let q = rect.quadrant_of(x, y);
                Self::insert_into(&mut internal.children[q], rect.quadrant(q), id, x, y, depth + 1);
                internal.refresh();
            }
        }
    }

    fn remove_from(cell: &mut Cell, rect: Rect, id: &NodeId, x: f64, y: f64) -> bool {
        match cell {
            Cell::Empty => false,
            Cell::Leaf(eid, ..) => {
                if eid == id {
                    *cell = Cell::Empty;
                    true
                } else {
                    false
                }
            }
            Cell::Bucket(points) => {
                let Some(pos) = points.iter().position(|(eid, ..)| eid == id) else {
                    return false;
                };
                points.remove(pos);
                if points.len() == 1 {
                    let (eid, ex, ey) = points.pop().unwrap();
                    *cell = Cell::Leaf(eid, ex, ey);
                }
                true
            }
            Cell::Internal(internal) => {
                let q = rect.quadrant_of(x, y);
                let removed = Self::remove_from(&mut internal.children[q], rect.quadrant(q), id, x, y);
                if removed {
                    internal.refresh();
                    if internal.count == 0 {
                        *cell = Cell::Empty;
                    }
                }
                removed
            }
        }
    }

    fn aggregate(
        cell: &Cell,
        rect: Rect,
        query: &Rect,
        count: &mut usize,
        sx: &mut f64,
        sy: &mut f64,
    ) {
        if !rect.intersects(query) {
            return;
        }
        match cell {
            Cell::Empty => {}
            Cell::Leaf(_, x, y) => {
                if query.contains(*x, *y) {
                    *count += 1;
                    *sx += x;
                    *sy += y;
                }
            }
            Cell::Bucket(points) => {
                for (_, x, y) in points {
                    if query.contains(*x, *y) {
                        *count += 1;
                        *sx += x;
                        *sy += y;
                    }
                }
            }
            Cell::Internal(internal) => {
                if query.contains_rect(&rect) {
                    *count += internal.count;
                    *sx += internal.sum_x;
                    *sy += internal.sum_y;
                    return;
                }
                for (i, child) in internal.children.iter().enumerate() {
                    Self::aggregate(child, rect.quadrant(i), query, count, sx, sy);
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn repulse(
        cell: &Cell,
        rect: Rect,
        px: f64,
        py: f64,
        theta: f64,
        skip: Option<&NodeId>,
        fx: &mut f64,
        fy: &mut f64,
    ) {
        let point_force = |x: f64, y: f64, mass: f64, fx: &mut f64, fy: &mut f64| {
            let dx = px - x;
            let dy = py - y;
            let d2 = dx * dx + dy * dy;
            if d2 > 0.0 {
                // magnitude mass / d along the unit vector away
                let inv = mass / d2;
                *fx += dx * inv;
                *fy += dy * inv;
            }
        };
        match cell {
            Cell::Empty => {}
            Cell::Leaf(id, x, y) => {
                if skip != Some(id) {
                    point_force(*x, *y, 1.0, fx, fy);
                }
            }
            Cell::Bucket(points) => {
                for (id, x, y) in points {
                    if skip != Some(id) {
                        point_force(*x, *y, 1.0, fx, fy);
                    }
                }
            }
            Cell::Internal(internal) => {
                let cx = internal.sum_x / internal.count as f64;
                let cy = internal.sum_y / internal.count as f64;
                let dx = px - cx;
                let dy = py - cy;
                let d = (dx * dx + dy * dy).sqrt();
                let size = rect.width().max(rect.height());
                // A cell containing the query is always opened; otherwise an
                // approximation could fold the query's own mass into the
                // force acting on it.
                if d > 0.0 && size / d < theta && !rect.contains(px, py) {
                    point_force(cx, cy, internal.count as f64, fx, fy);
                } else {
                    for (i, child) in internal.children.iter().enumerate() {
                        Self::repulse(child, rect.quadrant(i), px, py, theta, skip, fx, fy);
                    }
                }
            }
        }
    }
}
