use serde::{Deserialize, Serialize};

use super::{GraphConfig, MSGraph, MatchOutcome, Result, Step, TargetLabel, VertexId};

/// Operation-specific part of a journal record; serialized as `kind` plus
/// the operation's own fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventPayload {
    Enter { members: u32 },
    Join,
    Split { shares: Vec<u32> },
    Exit,
    BlindGap { keep: Option<VertexId> },
    Ambiguity { links: Vec<(VertexId, Vec<VertexId>)> },
    Label { label: TargetLabel },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum Outcome {
    Created { ids: Vec<VertexId> },
    Closed { ids: Vec<VertexId> },
    Linked { ids: Vec<VertexId> },
    Matched(MatchOutcome),
}

/// One applied event: `{t, kind, ..., vertex_ids, outcome}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub t: Step,
    #[serde(flatten)]
    pub payload: EventPayload,
    pub vertex_ids: Vec<VertexId>,
    pub outcome: Outcome,
}

impl MSGraph {
    /// Re-applies one recorded event. Vertex ids are assigned
    /// deterministically, so replaying a full journal on a fresh graph with
    /// the same configuration rebuilds the same graph.
    pub fn apply(&mut self, rec: &EventRecord) -> Result<()> {
        match &rec.payload {
            EventPayload::Enter { members } => {
                self.add_vertex(rec.t, *members)?;
            }
            EventPayload::Join => {
                self.record_join(&rec.vertex_ids, rec.t)?;
            }
            EventPayload::Split { shares } => {
                self.record_split(rec.vertex_ids[0], rec.t, shares)?;
            }
            EventPayload::Exit => {
                self.record_exit(rec.vertex_ids[0], rec.t)?;
            }
            EventPayload::BlindGap { keep } => {
                self.begin_blind_gap(*keep, rec.t);
            }
            EventPayload::Ambiguity { links } => {
                self.advance_to(rec.t);
                self.link_reappearances(links)?;
            }
            EventPayload::Label { label } => {
                self.advance_to(rec.t);
                self.label_vertex(rec.vertex_ids[0], *label)?;
            }
        }
        Ok(())
    }

    /// Rebuilds a graph from a journal, calling `each` after every event.
    pub fn replay<F: FnMut(&EventRecord, &MSGraph)>(
        cfg: GraphConfig,
        records: &[EventRecord],
        mut each: F,
    ) -> Result<MSGraph> {
        let mut g = MSGraph::new(cfg).with_journal();
        for rec in records {
            g.apply(rec)?;
            each(rec, &g);
        }
        Ok(g)
    }
}
