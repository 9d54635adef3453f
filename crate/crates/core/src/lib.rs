//! Multi-strand tracklet graph for a single PTZ camera tracker.
//!
//! * [`graph`]: the online association graph, labeling, matching by
//!   elimination, untangling and chain merging.
//! * [`auxdata`]: per-vertex recursive state maintained from direct parents.
//! * [`scheduler`]: zoom-in decisions, for the graph-aware policy and the
//!   exit-first baseline.
//! * [`sim`]: synthetic diagonal-road scenes, the tracker stub and the
//!   closed-loop simulation.
//! * [`metrics`], [`batch`], [`export`]: objective evaluation, experiment
//!   sweeps and DOT/JSONL/CSV output.

pub mod auxdata;
pub mod batch;
pub mod error;
pub mod export;
pub mod graph;
pub mod metrics;
pub mod scheduler;
pub mod sim;

pub use auxdata::AuxData;
pub use error::{GraphError, SimError};
pub use graph::{
    EventRecord, GraphConfig, MSGraph, MatchKind, MatchOutcome, Step, TargetLabel, Tracklet, Vertex, VertexId,
    VertexKind,
};
pub use scheduler::{Decision, Policy, Prediction, SchedulerConfig, ScoreBreakdown, TrackerPredictions};
