//! Update delivery: turning timestamped edge lists into schedules, sampling
//! synthetic inter-arrival times, and feeding the engine either from a
//! prebuilt schedule (simulated stream) or from a live line-delimited feed.
//!
//! A schedule groups dataset rows that share a timestamp into one update
//! batch, then assigns each batch an arrival time: in native mode the
//! original timestamps normalized onto the run window, in synthetic mode the
//! cumulative sum of draws from a configured inter-arrival distribution.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Read};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc::{Receiver, TryRecvError};
use std::sync::Arc;
use std::thread;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Normal};

use crate::graph::{Edge, NodeId, UpdateBatch};

/// Shortest interval a sampled arrival gap may have, in seconds. Gaussian
/// draws are clamped here so an unlucky tail never produces a zero or
/// negative wait.
pub const MIN_INTERVAL_S: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StreamError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("malformed message: {0}")]
    MalformedMessage(String),
    #[error("unknown verb `{0}`")]
    UnknownVerb(String),
    #[error("schedule arrivals must be non-decreasing")]
    UnorderedSchedule,
}

/// Inter-arrival time model for synthetic schedules. All parameters are in
/// seconds.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DistributionSpec {
    Gaussian { mean_s: f64, stddev_s: f64 },
    Poisson { mean_s: f64 },
    Uniform { min_s: f64, max_s: f64 },
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<(), StreamError> {
        let bad = |msg: String| Err(StreamError::InvalidDistribution(msg));
        let positive = |x: f64| x.is_finite() && x > 0.0;
        match *self {
            DistributionSpec::Gaussian { mean_s, stddev_s } => {
                if !positive(mean_s) || !stddev_s.is_finite() || stddev_s < 0.0 {
                    return bad(format!("gaussian({mean_s}, {stddev_s})"));
                }
            }
            DistributionSpec::Poisson { mean_s } => {
                if !positive(mean_s) {
                    return bad(format!("poisson({mean_s})"));
                }
            }
            DistributionSpec::Uniform { min_s, max_s } => {
                if !positive(min_s) || !max_s.is_finite() || max_s < min_s {
                    return bad(format!("uniform({min_s}, {max_s})"));
                }
            }
        }
        Ok(())
    }
}

/// Draws one inter-arrival gap. Gaussian draws are clamped to
/// [`MIN_INTERVAL_S`]; Poisson draws are whole event counts used as seconds,
/// generated by counting unit-rate exponential steps so the density never
/// has to be evaluated.
pub fn sample_interval(spec: DistributionSpec, rng: &mut dyn RngCore) -> f64 {
    debug_assert!(spec.validate().is_ok());
    match spec {
        DistributionSpec::Gaussian { mean_s, stddev_s } => {
            let normal = Normal::new(mean_s, stddev_s).expect("validated parameters");
            normal.sample(rng).max(MIN_INTERVAL_S)
        }
        DistributionSpec::Poisson { mean_s } => {
            // Count arrivals of a unit-rate Poisson process within mean_s.
            let mut t = 0.0_f64;
            let mut k = 0u64;
            loop {
                let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                t -= u.ln();
                if t > mean_s {
                    break;
                }
                k += 1;
            }
            k as f64
        }
        DistributionSpec::Uniform { min_s, max_s } => rng.gen_range(min_s..=max_s),
    }
}

/// Rescales raw timestamps onto `[0, span]`:
/// `z = (x - min) / (max - min) * span`. When all inputs coincide they all
/// map to 0. The smallest input maps to exactly 0 and the largest to exactly
/// `span`.
pub fn normalize_timestamps(raw: &[f64], span_s: f64) -> Vec<f64> {
    if raw.is_empty() {
        return Vec::new();
    }
    let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == min {
        return vec![0.0; raw.len()];
    }
    raw.iter()
        .map(|x| (x - min) / (max - min) * span_s)
        .collect()
}

/// One dataset row: a directed edge observed at a point in time.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalEdge {
    pub src: NodeId,
    pub dst: NodeId,
    pub weight: Option<f64>,
    pub timestamp: f64,
}

/// Arrival timing for [`build_schedule`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleTiming {
    /// Dataset timestamps, normalized onto the run window.
    Native,
    /// Synthetic inter-arrival gaps; update groups keep their dataset order.
    Synthetic(DistributionSpec),
}

/// Batches in non-decreasing arrival order, ready to replay.
#[derive(Debug, Clone, Default)]
pub struct UpdateSchedule {
    batches: Vec<UpdateBatch>,
}

impl UpdateSchedule {
    pub fn new(batches: Vec<UpdateBatch>) -> Result<Self, StreamError> {
        if batches.windows(2).any(|w| w[0].at > w[1].at) {
            return Err(StreamError::UnorderedSchedule);
        }
        Ok(UpdateSchedule { batches })
    }

    pub fn len(&self) -> usize {
        self.batches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.batches.is_empty()
    }

    pub fn batches(&self) -> &[UpdateBatch] {
        &self.batches
    }
}

/// Groups a temporal edge list into update batches and assigns arrivals.
///
/// Rows are processed in timestamp order (stable for ties), one batch per
/// distinct timestamp. Endpoints not seen earlier in the schedule ride along
/// as node additions of the batch that first mentions them. `span_s` is the
/// window native timestamps are normalized onto; synthetic timing ignores
/// it.
pub fn build_schedule(
    rows: &[TemporalEdge],
    timing: ScheduleTiming,
    span_s: f64,
    rng: &mut dyn RngCore,
) -> Result<UpdateSchedule, StreamError> {
    if let ScheduleTiming::Synthetic(spec) = timing {
        spec.validate()?;
    }
    if rows.is_empty() {
        return Ok(UpdateSchedule::default());
    }

    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| rows[a].timestamp.total_cmp(&rows[b].timestamp));

    // Group consecutive rows with identical timestamps.
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for idx in order {
        match groups.last_mut() {
            Some((t, members)) if *t == rows[idx].timestamp => members.push(idx),
            _ => groups.push((rows[idx].timestamp, vec![idx])),
        }
    }

    let arrivals: Vec<f64> = match timing {
        ScheduleTiming::Native => {
            let raw: Vec<f64> = groups.iter().map(|(t, _)| *t).collect();
            normalize_timestamps(&raw, span_s)
        }
        ScheduleTiming::Synthetic(spec) => {
            let mut clock = 0.0;
            groups
                .iter()
                .map(|_| {
                    clock += sample_interval(spec, rng);
                    clock
                })
                .collect()
        }
    };

    let mut seen: HashSet<NodeId> = HashSet::new();
    let mut batches = Vec::with_capacity(groups.len());
    for ((_, members), at) in groups.into_iter().zip(arrivals) {
        let mut batch = UpdateBatch::at(at);
        for idx in members {
            let row = &rows[idx];
            for endpoint in [&row.src, &row.dst] {
                if seen.insert(endpoint.clone()) {
                    batch.added_nodes.push(endpoint.clone());
                }
            }
            batch.added_edges.push(Edge {
                src: row.src.clone(),
                dst: row.dst.clone(),
                weight: row.weight.unwrap_or(1.0),
                arrival: at,
            });
        }
        batches.push(batch);
    }
    UpdateSchedule::new(batches)
}

/// Where update batches come from, as seen by the engine. `poll` hands over
/// everything due by `now`, exactly once, in order.
pub trait UpdateSource {
    fn poll(&mut self, now: f64) -> Vec<UpdateBatch>;

    /// Earliest known future arrival, if any.
    fn next_arrival(&self) -> Option<f64>;

    /// True once no batch will ever arrive again.
    fn finished(&self) -> bool;
}

/// Replays a prebuilt schedule against the run clock.
#[derive(Debug)]
pub struct InternalClockSource {
    pending: std::collections::VecDeque<UpdateBatch>,
}

impl InternalClockSource {
    pub fn new(schedule: UpdateSchedule) -> Self {
        InternalClockSource {
            pending: schedule.batches.into(),
        }
    }
}

impl UpdateSource for InternalClockSource {
    fn poll(&mut self, now: f64) -> Vec<UpdateBatch> {
        let mut due = Vec::new();
        while self.pending.front().is_some_and(|b| b.at <= now) {
            due.push(self.pending.pop_front().unwrap());
        }
        due
    }

    fn next_arrival(&self) -> Option<f64> {
        self.pending.front().map(|b| b.at)
    }

    fn finished(&self) -> bool {
        self.pending.is_empty()
    }
}

/// Parses one wire message into a batch. The format is line-delimited:
///
/// ```text
/// ADD_NODE <id>
/// ADD_EDGE <src> <dst> [weight]
/// DEL_NODE <id>
/// DEL_EDGE <src> <dst>
/// ```
///
/// `ADD_EDGE` lists both endpoints as node additions so a feed never has to
/// announce nodes explicitly; applying the batch makes already-known nodes a
/// no-op.
pub fn parse_message(line: &str) -> Result<UpdateBatch, StreamError> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    let mut batch = UpdateBatch::default();
    let malformed = || StreamError::MalformedMessage(line.trim().to_string());
    match tokens.as_slice() {
        ["ADD_NODE", id] => batch.added_nodes.push((*id).into()),
        ["ADD_EDGE", src, dst] => {
            batch.added_nodes.push((*src).into());
            batch.added_nodes.push((*dst).into());
            batch.added_edges.push(Edge::new(*src, *dst));
        }
        ["ADD_EDGE", src, dst, weight] => {
            let w: f64 = weight.parse().map_err(|_| malformed())?;
            batch.added_nodes.push((*src).into());
            batch.added_nodes.push((*dst).into());
            batch.added_edges.push(Edge::weighted(*src, *dst, w));
        }
        ["DEL_NODE", id] => batch.removed_nodes.push((*id).into()),
        ["DEL_EDGE", src, dst] => batch
            .removed_edges
            .push(((*src).into(), (*dst).into())),
        [verb, ..] if !matches!(*verb, "ADD_NODE" | "ADD_EDGE" | "DEL_NODE" | "DEL_EDGE") => {
            return Err(StreamError::UnknownVerb((*verb).to_string()))
        }
        _ => return Err(malformed()),
    }
    Ok(batch)
}

/// Live text-feed source. A background thread reads and parses lines and
/// pushes batches through a channel; `poll` is the only consumer, so all
/// cross-thread traffic goes through that one queue. Lines that do not parse
/// are logged and skipped.
pub struct StreamAdapter {
    rx: Receiver<UpdateBatch>,
    skipped: Arc<AtomicUsize>,
    disconnected: bool,
}

impl StreamAdapter {
    pub fn spawn<R: Read + Send + 'static>(feed: R) -> Self {
        let (tx, rx) = std::sync::mpsc::channel();
        let skipped = Arc::new(AtomicUsize::new(0));
        let skip_count = Arc::clone(&skipped);
        thread::spawn(move || {
            let reader = BufReader::new(feed);
            for line in reader.lines() {
                let Ok(line) = line else { break };
                if line.trim().is_empty() {
                    continue;
                }
                match parse_message(&line) {
                    Ok(batch) => {
                        if tx.send(batch).is_err() {
                            break;
                        }
                    }
                    Err(err) => {
                        log::warn!("skipping stream line: {err}");
                        skip_count.fetch_add(1, Ordering::Relaxed);
                    }
                }
            }
        });
        StreamAdapter {
            rx,
            skipped,
            disconnected: false,
        }
    }

    /// Lines dropped so far because they did not parse.
    pub fn skipped_lines(&self) -> usize {
        self.skipped.load(Ordering::Relaxed)
    }
}

impl UpdateSource for StreamAdapter {
    fn poll(&mut self, now: f64) -> Vec<UpdateBatch> {
        let mut due = Vec::new();
        loop {
            match self.rx.try_recv() {
                Ok(mut batch) => {
                    batch.at = now;
                    for e in &mut batch.added_edges {
                        e.arrival = now;
                    }
                    due.push(batch);
                }
                Err(TryRecvError::Empty) => break,
                Err(TryRecvError::Disconnected) => {
                    self.disconnected = true;
                    break;
                }
            }
        }
        due
    }

    fn next_arrival(&self) -> Option<f64> {
        None
    }

    fn finished(&self) -> bool {
        self.disconnected
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rows_from(ts: &[(&str, &str, f64)]) -> Vec<TemporalEdge> {
        ts.iter()
            .map(|(s, d, t)| TemporalEdge {
                src: (*s).into(),
                dst: (*d).into(),
                weight: None,
                timestamp: *t,
            })
            .collect()
    }

    #[test]
    fn normalize_maps_endpoints_exactly() {
        let z = normalize_timestamps(&[100.0, 300.0, 500.0], 300.0);
        assert_eq!(z, vec![0.0, 150.0, 300.0]);
        // all-equal inputs collapse to zero
        assert_eq!(normalize_timestamps(&[7.0, 7.0], 300.0), vec![0.0, 0.0]);
        assert!(normalize_timestamps(&[], 300.0).is_empty());
    }

    #[test]
    fn gaussian_intervals_are_clamped_and_zero_sigma_is_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(DistributionSpec::Gaussian {
            mean_s: -1.0,
            stddev_s: 1.0
        }
        .validate()
        .is_err());

        let tight = DistributionSpec::Gaussian {
            mean_s: 0.001,
            stddev_s: 1.0,
        };
        for _ in 0..200 {
            assert!(sample_interval(tight, &mut rng) >= MIN_INTERVAL_S);
        }

        let constant = DistributionSpec::Gaussian {
            mean_s: 10.0,
            stddev_s: 0.0,
        };
        for _ in 0..5 {
            assert_eq!(sample_interval(constant, &mut rng), 10.0);
        }
    }

    #[test]
    fn uniform_intervals_stay_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let spec = DistributionSpec::Uniform {
            min_s: 5.0,
            max_s: 15.0,
        };
        for _ in 0..500 {
            let v = sample_interval(spec, &mut rng);
            assert!((5.0..=15.0).contains(&v));
        }
        assert!(DistributionSpec::Uniform {
            min_s: 3.0,
            max_s: 2.0
        }
        .validate()
        .is_err());
    }

    #[test]
    fn poisson_draws_are_counts_with_the_right_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = DistributionSpec::Poisson { mean_s: 10.0 };
        let n = 20_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let v = sample_interval(spec, &mut rng);
            assert_eq!(v, v.floor(), "draws are whole counts");
            sum += v;
        }
        assert!((sum / n as f64 - 10.0).abs() < 0.1);
    }

    #[test]
    fn native_schedule_groups_by_timestamp_and_normalizes() {
        let rows = rows_from(&[
            ("a", "b", 100.0),
            ("b", "c", 100.0),
            ("c", "d", 500.0),
            ("a", "d", 300.0),
        ]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sched = build_schedule(&rows, ScheduleTiming::Native, 300.0, &mut rng).unwrap();
        assert_eq!(sched.len(), 3);
        let b = sched.batches();
        assert_eq!(b[0].at, 0.0);
        assert_eq!(b[1].at, 150.0);
        assert_eq!(b[2].at, 300.0);
        assert_eq!(b[0].added_edges.len(), 2);
        // a, b, c enter with the first batch; d with the second
        assert_eq!(b[0].added_nodes.len(), 3);
        assert_eq!(b[1].added_nodes, vec![NodeId::from("d")]);
        assert!(b[2].added_nodes.is_empty());
    }

    #[test]
    fn synthetic_schedule_accumulates_intervals_in_order() {
        let rows = rows_from(&[("a", "b", 3.0), ("b", "c", 1.0), ("c", "d", 2.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let spec = DistributionSpec::Gaussian {
            mean_s: 10.0,
            stddev_s: 0.0,
        };
        let sched =
            build_schedule(&rows, ScheduleTiming::Synthetic(spec), 300.0, &mut rng).unwrap();
        let at: Vec<f64> = sched.batches().iter().map(|b| b.at).collect();
        assert_eq!(at, vec![10.0, 20.0, 30.0]);
        // groups keep timestamp order: the t=1 row comes first
        assert_eq!(sched.batches()[0].added_edges[0].src, NodeId::from("b"));
    }

    #[test]
    fn empty_dataset_gives_an_empty_schedule() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let sched = build_schedule(&[], ScheduleTiming::Native, 300.0, &mut rng).unwrap();
        assert!(sched.is_empty());
    }

    #[test]
    fn internal_clock_source_delivers_exactly_once_in_order() {
        let batches = vec![
            UpdateBatch::at(1.0),
            UpdateBatch::at(2.0),
            UpdateBatch::at(2.0),
            UpdateBatch::at(5.0),
        ];
        let mut src = InternalClockSource::new(UpdateSchedule::new(batches).unwrap());
        assert_eq!(src.next_arrival(), Some(1.0));
        assert!(src.poll(0.5).is_empty());
        let first = src.poll(2.0);
        assert_eq!(first.len(), 3);
        assert!(src.poll(2.0).is_empty(), "no redelivery");
        assert!(!src.finished());
        assert_eq!(src.poll(10.0).len(), 1);
        assert!(src.finished());
    }

    #[test]
    fn unordered_schedules_are_rejected() {
        let batches = vec![UpdateBatch::at(2.0), UpdateBatch::at(1.0)];
        assert_eq!(
            UpdateSchedule::new(batches).unwrap_err(),
            StreamError::UnorderedSchedule
        );
    }

    #[test]
    fn parse_message_handles_the_four_verbs() {
        let b = parse_message("ADD_EDGE a b 2.5").unwrap();
        assert_eq!(b.added_nodes.len(), 2);
        assert_eq!(b.added_edges[0].weight, 2.5);

        let b = parse_message("ADD_NODE solo").unwrap();
        assert_eq!(b.added_nodes, vec![NodeId::from("solo")]);

        let b = parse_message("DEL_EDGE a b").unwrap();
        assert_eq!(b.removed_edges.len(), 1);

        assert!(matches!(
            parse_message("FROBNICATE a b"),
            Err(StreamError::UnknownVerb(_))
        ));
        assert!(matches!(
            parse_message("ADD_EDGE a"),
            Err(StreamError::MalformedMessage(_))
        ));
        assert!(matches!(
            parse_message("ADD_EDGE a b not-a-number"),
            Err(StreamError::MalformedMessage(_))
        ));
    }

    #[test]
    fn stream_adapter_delivers_bursts_in_receipt_order_and_skips_garbage() {
        let feed = "ADD_NODE a\nADD_EDGE a b\nwhat is this\nDEL_NODE a\n";
        let mut adapter = StreamAdapter::spawn(std::io::Cursor::new(feed.to_string()));
        let mut got = Vec::new();
        // The reader thread races poll, so spin until it drains.
        for _ in 0..200 {
            got.extend(adapter.poll(3.5));
            if adapter.finished() {
                break;
            }
            thread::sleep(std::time::Duration::from_millis(2));
        }
        assert!(adapter.finished());
        assert_eq!(got.len(), 3, "three parsable messages, one batch each");
        assert_eq!(got[0].added_nodes, vec![NodeId::from("a")]);
        assert_eq!(got[1].added_edges.len(), 1);
        assert_eq!(got[1].at, 3.5);
        assert_eq!(got[1].added_edges[0].arrival, 3.5);
        assert_eq!(got[2].removed_nodes, vec![NodeId::from("a")]);
        assert_eq!(adapter.skipped_lines(), 1);
    }
}
