//! Mutable directed graph plus the topology queries the layout models need:
//! hop counts, diameter, degrees, neighbor lists and batched updates.
//!
//! Node identifiers are opaque tokens taken verbatim from the input. The
//! graph is directed for bookkeeping (datasets are), but every distance or
//! neighborhood query treats edges as undirected, which is what the force
//! models want. Iteration order over nodes and edges is insertion order, so
//! a run that performs the same operations in the same order sees the same
//! order back; this is what makes whole runs reproducible bit for bit.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use indexmap::IndexMap;

use crate::engine::Canvas;

/// Stable, opaque node identifier. Cheap to clone.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(Arc<str>);

impl serde::Serialize for NodeId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl NodeId {
    pub fn new(token: impl Into<Arc<str>>) -> Self {
        NodeId(token.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId::new(s)
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId::new(s)
    }
}

impl From<usize> for NodeId {
    fn from(n: usize) -> Self {
        NodeId::new(n.to_string())
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

/// A directed edge with an optional weight and the time it entered the graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub weight: f64,
    pub arrival: f64,
}

impl Edge {
    pub fn new(src: impl Into<NodeId>, dst: impl Into<NodeId>) -> Self {
        Edge {
            src: src.into(),
            dst: dst.into(),
            weight: 1.0,
            arrival: 0.0,
        }
    }

    pub fn weighted(src: impl Into<NodeId>, dst: impl Into<NodeId>, weight: f64) -> Self {
        Edge {
            weight,
            ..Edge::new(src, dst)
        }
    }
}

/// 2D position on the canvas.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn distance_to(self, other: Position) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// How strictly [`Graph::apply_update`] treats removals of things that are
/// not in the graph: reject the whole batch, or skip and count them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strictness {
    #[default]
    Strict,
    Lenient,
}

/// One batch of graph changes, delivered atomically at a point in time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UpdateBatch {
    /// Arrival time in seconds on the run clock.
    pub at: f64,
    pub added_nodes: Vec<NodeId>,
    pub added_edges: Vec<Edge>,
    pub removed_nodes: Vec<NodeId>,
    pub removed_edges: Vec<(NodeId, NodeId)>,
}

impl UpdateBatch {
    pub fn at(at: f64) -> Self {
        UpdateBatch {
            at,
            ..UpdateBatch::default()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.added_nodes.is_empty()
            && self.added_edges.is_empty()
            && self.removed_nodes.is_empty()
            && self.removed_edges.is_empty()
    }
}

/// What actually changed when a batch was applied. Removed edges include the
/// ones cascaded from node removals; additions that were already present are
/// not listed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UpdateDelta {
    pub added_nodes: Vec<NodeId>,
    pub added_edges: Vec<Edge>,
    pub removed_nodes: Vec<NodeId>,
    pub removed_edges: Vec<Edge>,
    pub dropped_self_loops: usize,
    pub skipped_removals: usize,
}

impl UpdateDelta {
    pub fn is_empty(&self) -> bool {
        self.added_nodes.is_empty()
            && self.added_edges.is_empty()
            && self.removed_nodes.is_empty()
            && self.removed_edges.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("unknown node `{0}`")]
    UnknownNode(NodeId),
    #[error("edge {src} -> {dst} references missing node `{endpoint}`")]
    DanglingEndpoint {
        src: NodeId,
        dst: NodeId,
        endpoint: NodeId,
    },
    #[error("self-loop {0} -> {0} is not allowed")]
    SelfLoop(NodeId),
    #[error("cannot remove nonexistent node `{0}`")]
    MissingNodeRemoval(NodeId),
    #[error("cannot remove nonexistent edge {0} -> {1}")]
    MissingEdgeRemoval(NodeId, NodeId),
    #[error("graph has no nodes")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LayoutError {
    #[error("node `{0}` has no position")]
    Unpositioned(NodeId),
}

#[derive(Debug, Clone, Default)]
struct NodeEntry {
    out: Vec<OutEdge>,
    /// One entry per incoming edge instance, holding its source.
    inc: Vec<NodeId>,
}

#[derive(Debug, Clone)]
struct OutEdge {
    dst: NodeId,
    weight: f64,
    arrival: f64,
}

/// Borrowed view of one edge, yielded by [`Graph::edges`].
#[derive(Debug, Clone, Copy)]
pub struct EdgeRef<'a> {
    pub src: &'a NodeId,
    pub dst: &'a NodeId,
    pub weight: f64,
    pub arrival: f64,
}

impl EdgeRef<'_> {
    pub fn to_owned(self) -> Edge {
        Edge {
            src: self.src.clone(),
            dst: self.dst.clone(),
            weight: self.weight,
            arrival: self.arrival,
        }
    }
}

/// Directed multigraph with adjacency kept on both endpoints.
///
/// By default repeated insertions of the same (src, dst) pair are collapsed
/// into one edge; construct with [`Graph::keeping_duplicate_edges`] to keep
/// every instance.
#[derive(Debug, Clone, Default)]
pub struct Graph {
    nodes: IndexMap<NodeId, NodeEntry>,
    edge_count: usize,
    keep_duplicates: bool,
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    pub fn keeping_duplicate_edges() -> Self {
        Graph {
            keep_duplicates: true,
            ..Graph::default()
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains_node(&self, id: &NodeId) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn contains_edge(&self, src: &NodeId, dst: &NodeId) -> bool {
        self.nodes
            .get(src)
            .is_some_and(|e| e.out.iter().any(|o| &o.dst == dst))
    }

    /// Nodes in insertion order.
    pub fn node_ids(&self) -> impl Iterator<Item = &NodeId> {
        self.nodes.keys()
    }

    /// Edges in deterministic order: by source insertion order, then by the
    /// order the source's edges were added.
    pub fn edges(&self) -> impl Iterator<Item = EdgeRef<'_>> {
        self.nodes.iter().flat_map(|(src, entry)| {
            entry.out.iter().map(move |o| EdgeRef {
                src,
                dst: &o.dst,
                weight: o.weight,
                arrival: o.arrival,
            })
        })
    }

    /// Adds a node if absent; returns whether it was new.
    pub fn add_node(&mut self, id: NodeId) -> bool {
        if self.nodes.contains_key(&id) {
            return false;
        }
        self.nodes.insert(id, NodeEntry::default());
        true
    }

    /// Adds an edge; both endpoints must already exist. Returns whether the
    /// edge was actually inserted (false when deduplicated away).
    pub fn add_edge(&mut self, edge: Edge) -> Result<bool, GraphError> {
        if edge.src == edge.dst {
            return Err(GraphError::SelfLoop(edge.src));
        }
        for endpoint in [&edge.src, &edge.dst] {
            if !self.nodes.contains_key(endpoint) {
                return Err(GraphError::DanglingEndpoint {
                    src: edge.src.clone(),
                    dst: edge.dst.clone(),
                    endpoint: endpoint.clone(),
                });
            }
        }
        if !self.keep_duplicates && self.contains_edge(&edge.src, &edge.dst) {
            return Ok(false);
        }
        let Edge {
            src,
            dst,
            weight,
            arrival,
        } = edge;
        self.nodes[&src].out.push(OutEdge {
            dst: dst.clone(),
            weight,
            arrival,
        });
        self.nodes[&dst].inc.push(src);
        self.edge_count += 1;
        Ok(true)
    }

    /// Removes one instance of (src, dst) and returns it.
    pub fn remove_edge(&mut self, src: &NodeId, dst: &NodeId) -> Option<Edge> {
        let entry = self.nodes.get_mut(src)?;
        let pos = entry.out.iter().position(|o| &o.dst == dst)?;
        let removed = entry.out.remove(pos);
        let dst_entry = self.nodes.get_mut(dst).expect("endpoints stay in sync");
        let ipos = dst_entry
            .inc
            .iter()
            .position(|s| s == src)
            .expect("incoming list stays in sync");
        dst_entry.inc.remove(ipos);
        self.edge_count -= 1;
        Some(Edge {
            src: src.clone(),
            dst: dst.clone(),
            weight: removed.weight,
            arrival: removed.arrival,
        })
    }

    /// Removes a node and every incident edge; returns the cascaded edges.
    pub fn remove_node(&mut self, id: &NodeId) -> Option<Vec<Edge>> {
        let entry = self.nodes.shift_remove(id)?;
        let mut removed = Vec::with_capacity(entry.out.len() + entry.inc.len());
        for o in entry.out {
            let dst_entry = self.nodes.get_mut(&o.dst).expect("endpoints stay in sync");
            let ipos = dst_entry
                .inc
                .iter()
                .position(|s| s == id)
                .expect("incoming list stays in sync");
            dst_entry.inc.remove(ipos);
            removed.push(Edge {
                src: id.clone(),
                dst: o.dst,
                weight: o.weight,
                arrival: o.arrival,
            });
        }
        for src in entry.inc {
            let src_entry = self.nodes.get_mut(&src).expect("endpoints stay in sync");
            let opos = src_entry
                .out
                .iter()
                .position(|o| &o.dst == id)
                .expect("outgoing list stays in sync");
            let o = src_entry.out.remove(opos);
            removed.push(Edge {
                src,
                dst: id.clone(),
                weight: o.weight,
                arrival: o.arrival,
            });
        }
        self.edge_count -= removed.len();
        Some(removed)
    }

    /// In-degree plus out-degree.
    pub fn degree(&self, id: &NodeId) -> Result<usize, GraphError> {
        self.nodes
            .get(id)
            .map(|e| e.out.len() + e.inc.len())
            .ok_or_else(|| GraphError::UnknownNode(id.clone()))
    }

    /// Distinct neighbors over undirected edges, in deterministic order.
    pub fn neighbors(&self, id: &NodeId) -> Result<Vec<NodeId>, GraphError> {
        let entry = self
            .nodes
            .get(id)
            .ok_or_else(|| GraphError::UnknownNode(id.clone()))?;
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for n in entry.out.iter().map(|o| &o.dst).chain(entry.inc.iter()) {
            if seen.insert(n) {
                out.push(n.clone());
            }
        }
        Ok(out)
    }

    /// Breadth-first hop counts from `src` over undirected edges. The map
    /// contains reachable nodes only (including `src` at 0 hops).
    pub fn bfs_hops(&self, src: &NodeId) -> Result<HashMap<NodeId, u32>, GraphError> {
        let entry = self
            .nodes
            .get(src)
            .ok_or_else(|| GraphError::UnknownNode(src.clone()))?;
        let _ = entry;
        let mut hops = HashMap::new();
        hops.insert(src.clone(), 0);
        let mut queue = VecDeque::new();
        queue.push_back(src.clone());
        while let Some(u) = queue.pop_front() {
            let base = hops[&u];
            let entry = &self.nodes[&u];
            for v in entry.out.iter().map(|o| &o.dst).chain(entry.inc.iter()) {
                if !hops.contains_key(v) {
                    hops.insert(v.clone(), base + 1);
                    queue.push_back(v.clone());
                }
            }
        }
        Ok(hops)
    }

    /// Minimum number of undirected edges between two nodes; `None` when
    /// they are in different components.
    pub fn hop_count(&self, a: &NodeId, b: &NodeId) -> Result<Option<u32>, GraphError> {
        if !self.nodes.contains_key(b) {
            return Err(GraphError::UnknownNode(b.clone()));
        }
        let hops = self.bfs_hops(a)?;
        Ok(hops.get(b).copied())
    }

    /// Longest shortest undirected path over all reachable pairs. A single
    /// node (or a graph with no edges) has diameter 0.
    pub fn diameter(&self) -> Result<u32, GraphError> {
        if self.nodes.is_empty() {
            return Err(GraphError::Empty);
        }
        let mut best = 0;
        for id in self.nodes.keys() {
            let hops = self.bfs_hops(id)?;
            for h in hops.values() {
                best = best.max(*h);
            }
        }
        Ok(best)
    }

    /// Applies one batch atomically: every addition is validated before
    /// anything mutates, so a bad batch leaves the graph untouched.
    ///
    /// Additions happen before removals. Self-loops are dropped with a
    /// warning rather than rejected, repeated node additions are no-ops, and
    /// node removals cascade to incident edges. Under `Strictness::Strict` a
    /// removal of something that does not exist rejects the batch; under
    /// `Lenient` it is skipped and counted.
    pub fn apply_update(
        &mut self,
        batch: &UpdateBatch,
        strictness: Strictness,
    ) -> Result<UpdateDelta, GraphError> {
        // Validation pass over the post-addition node set.
        let mut future: HashSet<&NodeId> = self.nodes.keys().collect();
        future.extend(batch.added_nodes.iter());
        for e in &batch.added_edges {
            if e.src == e.dst {
                continue; // dropped below, not an error
            }
            for endpoint in [&e.src, &e.dst] {
                if !future.contains(endpoint) {
                    return Err(GraphError::DanglingEndpoint {
                        src: e.src.clone(),
                        dst: e.dst.clone(),
                        endpoint: endpoint.clone(),
                    });
                }
            }
        }
        if strictness == Strictness::Strict {
            for n in &batch.removed_nodes {
                if !future.contains(n) {
                    return Err(GraphError::MissingNodeRemoval(n.clone()));
                }
            }
            for (u, v) in &batch.removed_edges {
                let exists = self.contains_edge(u, v)
                    || batch
                        .added_edges
                        .iter()
                        .any(|e| &e.src == u && &e.dst == v && e.src != e.dst);
                if !exists {
                    return Err(GraphError::MissingEdgeRemoval(u.clone(), v.clone()));
                }
            }
        }

        // Mutation pass.
        let mut delta = UpdateDelta::default();
        for n in &batch.added_nodes {
            if self.add_node(n.clone()) {
                delta.added_nodes.push(n.clone());
            }
        }
        for e in &batch.added_edges {
            if e.src == e.dst {
                log::warn!("dropping self-loop {} -> {}", e.src, e.dst);
                delta.dropped_self_loops += 1;
                continue;
            }
            if self.add_edge(e.clone())? {
                delta.added_edges.push(e.clone());
            }
        }
        for (u, v) in &batch.removed_edges {
            match self.remove_edge(u, v) {
                Some(edge) => delta.removed_edges.push(edge),
                None => delta.skipped_removals += 1,
            }
        }
        for n in &batch.removed_nodes {
            match self.remove_node(n) {
                Some(cascaded) => {
                    delta.removed_edges.extend(cascaded);
                    delta.removed_nodes.push(n.clone());
                }
                None => delta.skipped_removals += 1,
            }
        }
        Ok(delta)
    }
}

/// Node positions plus the canvas they live on. Exactly the nodes that have
/// been placed appear here; iteration order is placement order.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    positions: IndexMap<NodeId, Position>,
    pub canvas: Canvas,
}

impl Layout {
    pub fn new(canvas: Canvas) -> Self {
        Layout {
            positions: IndexMap::new(),
            canvas,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn position(&self, id: &NodeId) -> Option<Position> {
        self.positions.get(id).copied()
    }

    pub fn set_position(&mut self, id: NodeId, p: Position) {
        self.positions.insert(id, p);
    }

    pub fn remove(&mut self, id: &NodeId) -> Option<Position> {
        self.positions.shift_remove(id)
    }

    pub fn clear_positions(&mut self) {
        self.positions.clear();
    }

    pub fn iter(&self) -> impl Iterator<Item = (&NodeId, Position)> {
        self.positions.iter().map(|(id, p)| (id, *p))
    }

    /// Straight-line distance between two placed nodes.
    pub fn euclidean(&self, a: &NodeId, b: &NodeId) -> Result<f64, LayoutError> {
        let pa = self
            .position(a)
            .ok_or_else(|| LayoutError::Unpositioned(a.clone()))?;
        let pb = self
            .position(b)
            .ok_or_else(|| LayoutError::Unpositioned(b.clone()))?;
        Ok(pa.distance_to(pb))
    }

    pub fn all_finite(&self) -> bool {
        self.positions.values().all(|p| p.is_finite())
    }
}
