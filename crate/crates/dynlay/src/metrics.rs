//! Layout quality measurements: edge crossings, their variation over a run,
//! and the spread of edge lengths.
//!
//! Crossing counts use exact-ish orientation predicates with a small
//! tolerance for collinearity. Two edges that share a node never count as a
//! crossing (they always touch at that node), while collinear segments that
//! overlap along a stretch do.

use crate::graph::{Graph, Layout, Position};

/// Orientation sign treating |cross| below this as collinear.
const COLLINEAR_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("metric series is empty")]
    EmptySeries,
    #[error("layout has no edges to measure")]
    NoEdges,
}

/// One quality sample, taken between iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSample {
    pub wall_s: f64,
    pub iteration: u64,
    /// Number of crossing edge pairs.
    pub ec: u64,
    /// Population standard deviation of edge lengths; 0 when undefined.
    pub ec_sd: f64,
    /// False when there were no edges, in which case `ec_sd` is a filler 0.
    pub ec_sd_defined: bool,
    pub nodes: usize,
    pub edges: usize,
}

/// Append-only series of samples in time order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricSeries {
    samples: Vec<MetricSample>,
}

impl MetricSeries {
    pub fn push(&mut self, sample: MetricSample) {
        debug_assert!(
            self.samples.last().is_none_or(|l| l.wall_s <= sample.wall_s),
            "samples must arrive in time order"
        );
        self.samples.push(sample);
    }

    pub fn samples(&self) -> &[MetricSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn last(&self) -> Option<&MetricSample> {
        self.samples.last()
    }
}

impl FromIterator<MetricSample> for MetricSeries {
    fn from_iter<T: IntoIterator<Item = MetricSample>>(iter: T) -> Self {
        MetricSeries {
            samples: iter.into_iter().collect(),
        }
    }
}

fn orientation(a: Position, b: Position, c: Position) -> i8 {
    let cross = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    if cross.abs() < COLLINEAR_EPS {
        0
    } else if cross > 0.0 {
        1
    } else {
        -1
    }
}

/// True when the open segments a1-a2 and b1-b2 intersect: a shared endpoint
/// does not count, a collinear overlap of positive length does.
pub fn segments_properly_intersect(a1: Position, a2: Position, b1: Position, b2: Position) -> bool {
    let o1 = orientation(a1, a2, b1);
    let o2 = orientation(a1, a2, b2);
    let o3 = orientation(b1, b2, a1);
    let o4 = orientation(b1, b2, a2);

    if o1 * o2 < 0 && o3 * o4 < 0 {
        return true;
    }

    // Everything collinear: project on the axis with more extent and check
    // that the overlap has positive length (touching endpoints do not cross).
    if o1 == 0 && o2 == 0 && o3 == 0 && o4 == 0 {
        let use_x = (a2.x - a1.x).abs().max((b2.x - b1.x).abs())
            >= (a2.y - a1.y).abs().max((b2.y - b1.y).abs());
        let pick = |p: Position| if use_x { p.x } else { p.y };
        let (a_lo, a_hi) = min_max(pick(a1), pick(a2));
        let (b_lo, b_hi) = min_max(pick(b1), pick(b2));
        return a_hi.min(b_hi) - a_lo.max(b_lo) > 0.0;
    }

    false
}

fn min_max(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Number of edge pairs whose segments cross. Pairs that share a node are
/// skipped entirely. Every endpoint must be positioned.
pub fn edge_crossings(layout: &Layout, graph: &Graph) -> u64 {
    let edges: Vec<(&crate::graph::NodeId, &crate::graph::NodeId, Position, Position)> = graph
        .edges()
        .map(|e| {
            let ps = layout
                .position(e.src)
                .expect("every edge endpoint must be positioned");
            let pd = layout
                .position(e.dst)
                .expect("every edge endpoint must be positioned");
            (e.src, e.dst, ps, pd)
        })
        .collect();
    let mut count = 0;
    for i in 0..edges.len() {
        for j in (i + 1)..edges.len() {
            let (s1, d1, a1, a2) = edges[i];
            let (s2, d2, b1, b2) = edges[j];
            if s1 == s2 || s1 == d2 || d1 == s2 || d1 == d2 {
                continue;
            }
            if segments_properly_intersect(a1, a2, b1, b2) {
                count += 1;
            }
        }
    }
    count
}

/// Vertical movement of the crossing count over a run: max minus min.
pub fn ec_vm(series: &MetricSeries) -> Result<u64, MetricsError> {
    let first = series.samples.first().ok_or(MetricsError::EmptySeries)?;
    let mut lo = first.ec;
    let mut hi = first.ec;
    for s in &series.samples {
        lo = lo.min(s.ec);
        hi = hi.max(s.ec);
    }
    Ok(hi - lo)
}

/// Population standard deviation of edge lengths.
pub fn edge_length_sd(layout: &Layout, graph: &Graph) -> Result<f64, MetricsError> {
    let lengths: Vec<f64> = graph
        .edges()
        .map(|e| {
            layout
                .euclidean(e.src, e.dst)
                .expect("every edge endpoint must be positioned")
        })
        .collect();
    if lengths.is_empty() {
        return Err(MetricsError::NoEdges);
    }
    let n = lengths.len() as f64;
    let mean = lengths.iter().sum::<f64>() / n;
    let var = lengths.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / n;
    Ok(var.sqrt())
}

/// Takes one sample of the current state.
pub fn sample(wall_s: f64, iteration: u64, graph: &Graph, layout: &Layout) -> MetricSample {
    let (ec_sd, ec_sd_defined) = match edge_length_sd(layout, graph) {
        Ok(sd) => (sd, true),
        Err(MetricsError::NoEdges) => (0.0, false),
        Err(_) => (0.0, false),
    };
    MetricSample {
        wall_s,
        iteration,
        ec: edge_crossings(layout, graph),
        ec_sd,
        ec_sd_defined,
        nodes: graph.node_count(),
        edges: graph.edge_count(),
    }
}
