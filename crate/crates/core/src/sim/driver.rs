//! Camera-side events keyed by world entities, and their translation into
//! graph operations.
//!
//! Recording what the camera saw rather than graph calls lets the same run
//! be rebuilt with a different labeling, which the offline solver needs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::scene::EntityId;
use crate::error::SimError;
use crate::graph::{GraphConfig, MSGraph, MatchOutcome, PieceId, Step, TargetLabel, VertexId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reappearance {
    pub entity: EntityId,
    pub members: u32,
    /// Entities last seen before the blind gap that could be this one.
    pub candidates: Vec<EntityId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObsEvent {
    Enter {
        t: Step,
        entity: EntityId,
        members: u32,
    },
    Join {
        t: Step,
        entities: Vec<EntityId>,
        into: EntityId,
    },
    Split {
        t: Step,
        entity: EntityId,
        parts: Vec<(EntityId, u32)>,
    },
    /// The entity is no longer observed from `t` on.
    Lost {
        t: Step,
        entity: EntityId,
    },
    /// Zoom-in right after `t`; only `keep` stays tracked.
    BlindGap {
        t: Step,
        keep: Option<EntityId>,
    },
    Reappear {
        t: Step,
        items: Vec<Reappearance>,
    },
    Label {
        t: Step,
        entity: EntityId,
        label: TargetLabel,
    },
}

impl ObsEvent {
    pub fn t(&self) -> Step {
        match self {
            ObsEvent::Enter { t, .. }
            | ObsEvent::Join { t, .. }
            | ObsEvent::Split { t, .. }
            | ObsEvent::Lost { t, .. }
            | ObsEvent::BlindGap { t, .. }
            | ObsEvent::Reappear { t, .. }
            | ObsEvent::Label { t, .. } => *t,
        }
    }
}

/// Maintains the graph from [`ObsEvent`]s.
#[derive(Debug, Clone)]
pub struct GraphDriver {
    graph: MSGraph,
    vertex_of: BTreeMap<EntityId, VertexId>,
    piece_of: BTreeMap<EntityId, PieceId>,
    entity_of: BTreeMap<PieceId, EntityId>,
}

impl GraphDriver {
    pub fn new(cfg: GraphConfig, journal: bool) -> Self {
        let graph = if journal {
            MSGraph::new(cfg).with_journal()
        } else {
            MSGraph::new(cfg)
        };
        GraphDriver {
            graph,
            vertex_of: BTreeMap::new(),
            piece_of: BTreeMap::new(),
            entity_of: BTreeMap::new(),
        }
    }

    pub fn graph(&self) -> &MSGraph {
        &self.graph
    }

    /// For callers that operate on the graph directly between events.
    pub fn graph_mut(&mut self) -> &mut MSGraph {
        &mut self.graph
    }

    pub fn into_graph(self) -> MSGraph {
        self.graph
    }

    /// Live vertex currently holding the entity's tracklet.
    pub fn vertex(&self, e: EntityId) -> Option<VertexId> {
        self.vertex_of.get(&e).map(|v| self.graph.resolve(*v))
    }

    /// Piece of the entity's most recent observation interval.
    pub fn piece(&self, e: EntityId) -> Option<PieceId> {
        self.piece_of.get(&e).copied()
    }

    /// Entity observed in each piece. An entity seen on both sides of a blind
    /// gap owns several pieces.
    pub fn piece_entities(&self) -> &BTreeMap<PieceId, EntityId> {
        &self.entity_of
    }

    fn bind(&mut self, e: EntityId, v: VertexId) {
        let piece = self.graph.vertex(v).expect("fresh vertex").tracklet().spans()[0].piece;
        self.vertex_of.insert(e, v);
        self.piece_of.insert(e, piece);
        self.entity_of.insert(piece, e);
    }

    fn need(&self, e: EntityId) -> Result<VertexId, SimError> {
        self.vertex(e).ok_or(SimError::UnknownEntity(e.0))
    }

    pub fn apply(&mut self, ev: &ObsEvent) -> Result<Option<MatchOutcome>, SimError> {
        match ev {
            ObsEvent::Enter { t, entity, members } => {
                let v = self.graph.add_vertex(*t, *members)?;
                self.bind(*entity, v);
            }
            ObsEvent::Join { t, entities, into } => {
                let vs = entities.iter().map(|e| self.need(*e)).collect::<Result<Vec<_>, _>>()?;
                let c = self.graph.record_join(&vs, *t)?;
                self.bind(*into, c);
            }
            ObsEvent::Split { t, entity, parts } => {
                let v = self.need(*entity)?;
                let shares: Vec<u32> = parts.iter().map(|p| p.1).collect();
                let out = self.graph.record_split(v, *t, &shares)?;
                for ((e, _), c) in parts.iter().zip(out) {
                    self.bind(*e, c);
                }
            }
            ObsEvent::Lost { t, entity } => {
                let v = self.need(*entity)?;
                self.graph.record_exit(v, *t)?;
            }
            ObsEvent::BlindGap { t, keep } => {
                let keep = match keep {
                    Some(e) => Some(self.need(*e)?),
                    None => None,
                };
                self.graph.begin_blind_gap(keep, *t);
            }
            ObsEvent::Reappear { t, items } => {
                // Candidates first: a reappearing entity may carry the id of
                // one that vanished.
                let cands = items
                    .iter()
                    .map(|it| {
                        it.candidates
                            .iter()
                            .map(|e| self.need(*e))
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let mut links = Vec::with_capacity(items.len());
                for (it, cands) in items.iter().zip(cands) {
                    let v = self.graph.add_vertex(*t, it.members)?;
                    self.bind(it.entity, v);
                    links.push((v, cands));
                }
                self.graph.link_reappearances(&links)?;
            }
            ObsEvent::Label { t, entity, label } => {
                let v = self.need(*entity)?;
                self.graph.advance_to(*t);
                return Ok(Some(self.graph.label_vertex(v, *label)?));
            }
        }
        Ok(None)
    }

    /// Rebuilds the graph of an observation log, skipping label events.
    pub fn replay_unlabeled(cfg: GraphConfig, log: &[ObsEvent]) -> Result<GraphDriver, SimError> {
        let mut d = GraphDriver::new(cfg, false);
        for ev in log {
            if !matches!(ev, ObsEvent::Label { .. }) {
                d.apply(ev)?;
            }
        }
        Ok(d)
    }
}
