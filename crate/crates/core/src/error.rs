use thiserror::Error;

use crate::graph::{Step, VertexId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("vertex {0} is not on the active frontier")]
    NotActive(VertexId),
    #[error("a join needs at least two distinct vertices, got {0}")]
    TooFewJoining(usize),
    #[error("split shares {shares:?} do not partition member count {members}")]
    ShareMismatch { shares: Vec<u32>, members: u32 },
    #[error("vertex {0} is not a compound vertex")]
    NotCompound(VertexId),
    #[error("vertex {0} is not a solo vertex")]
    NotSolo(VertexId),
    #[error("vertex {0} is already labeled")]
    AlreadyLabeled(VertexId),
    #[error("vertex {0} already has parents")]
    HasParents(VertexId),
    #[error("edge {parent} -> {child} violates temporal order or the blind-gap window")]
    TemporalOrder { parent: VertexId, child: VertexId },
    #[error("closing vertex {0} at step {1} leaves an empty tracklet")]
    EmptyTracklet(VertexId, Step),
    #[error("member count must be positive")]
    ZeroMembers,
    #[error("graph contains a cycle")]
    Cycle,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("infeasible scene configuration: {0}")]
    Config(String),
    #[error("no tracked vertex for entity e{0}")]
    UnknownEntity(u64),
    #[error("simulation invariant violated at step {t}: {what}")]
    Invariant { t: Step, what: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
