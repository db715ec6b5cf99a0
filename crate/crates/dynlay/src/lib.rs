//! Force-directed layout of dynamic graphs, in two flavours per algorithm:
//! a *static* mode that recomputes the whole layout from scratch whenever the
//! graph changes, and an *online* mode that keeps every existing node where it
//! is and only places and refines what an update added.
//!
//! The crate is organised around a small engine loop ([`engine::run`]) that
//! owns the clock, drains update batches from an [`stream::UpdateSource`] at
//! iteration boundaries, and delegates the actual movement of nodes to one of
//! the five models in [`models`]: Fruchterman-Reingold, Kamada-Kawai,
//! ForceAtlas2, Davidson-Harel annealing and LinLog.
//!
//! Supporting pieces: [`graph`] holds the mutable graph and layout state,
//! [`stream`] turns timestamped edge lists or live text feeds into update
//! schedules, [`metrics`] measures layout quality (edge crossings, edge
//! length spread), and [`io`] provides the dataset parser, artifact writers
//! and the `dynlay` command line.

pub mod engine;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod models;
pub mod stream;

pub use engine::{run, AlgorithmLifecycle, Canvas, EngineConfig, Mode, Placement, RunResult};
pub use graph::{Edge, Graph, Layout, NodeId, Position, UpdateBatch, UpdateDelta};
pub use models::ModelKind;
