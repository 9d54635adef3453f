//! The multi-strand tracklet graph.
//!
//! Vertices hold tracklets of a single target (solo) or of several targets
//! walking together (compound). Edges point forward in time and encode
//! candidate associations produced by the tracker: join/split structure and
//! X-type ambiguities after blind gaps. The graph is built online, one
//! tracker event at a time, and simplified by chain merging and untangling
//! whenever a face capture resolves an identity.

mod journal;
mod tracklet;
mod untangle;

use std::cell::Cell;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::auxdata::{elimination_candidate, AuxData};
use crate::error::GraphError;

pub use journal::{EventPayload, EventRecord, Outcome};
pub use tracklet::{PieceId, Span, Step, Tracklet};
pub use untangle::UntangleSkip;

pub type Result<T> = std::result::Result<T, GraphError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub u64);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// Identity acquired by a face capture. Equal tokens are the same person.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TargetLabel(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VertexKind {
    Solo,
    Compound,
}

#[derive(Debug, Clone)]
pub struct Vertex {
    pub(crate) id: VertexId,
    pub(crate) member_count: u32,
    pub(crate) tracklet: Tracklet,
    pub(crate) label: Option<TargetLabel>,
    pub(crate) parents: Vec<VertexId>,
    pub(crate) children: Vec<VertexId>,
    pub(crate) aux: AuxData,
}

impl Vertex {
    pub fn id(&self) -> VertexId {
        self.id
    }
    pub fn kind(&self) -> VertexKind {
        if self.member_count == 1 {
            VertexKind::Solo
        } else {
            VertexKind::Compound
        }
    }
    pub fn is_solo(&self) -> bool {
        self.member_count == 1
    }
    pub fn member_count(&self) -> u32 {
        self.member_count
    }
    pub fn tracklet(&self) -> &Tracklet {
        &self.tracklet
    }
    pub fn label(&self) -> Option<TargetLabel> {
        self.label
    }
    pub fn parents(&self) -> &[VertexId] {
        &self.parents
    }
    pub fn children(&self) -> &[VertexId] {
        &self.children
    }
    /// Stored auxiliary data; for open tracklets the length-dependent fields
    /// reflect the last re-evaluation. Prefer [`MSGraph::aux`].
    pub fn stored_aux(&self) -> &AuxData {
        &self.aux
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GraphConfig {
    /// Longest unobserved interval bridged by a candidate edge.
    pub max_blind_gap: Step,
    /// Debug switch: when off, matches are reported but never untangled.
    pub untangle: bool,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            max_blind_gap: 5 + 2,
            untangle: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStats {
    pub vertices_created: u64,
    pub aux_writes: u64,
    pub merges: u64,
    pub untangles: u64,
    pub deferred: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "match", content = "with", rename_all = "snake_case")]
pub enum MatchKind {
    None,
    Direct(VertexId),
    Indirect(VertexId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchOutcome {
    pub kind: MatchKind,
    pub untangled: bool,
    /// The match was recorded but untangling had to wait.
    pub deferred: bool,
    /// Live vertex carrying the new label once all merges settled.
    pub labeled: VertexId,
}

#[derive(Debug, Clone)]
pub struct MSGraph {
    pub(crate) cfg: GraphConfig,
    pub(crate) vertices: BTreeMap<VertexId, Vertex>,
    next_id: u64,
    next_piece: PieceId,
    now: Step,
    pub(crate) frontier: BTreeSet<VertexId>,
    pub(crate) retired: HashMap<VertexId, VertexId>,
    pub(crate) labeled: BTreeSet<VertexId>,
    pub(crate) pending: Vec<(VertexId, VertexId)>,
    pub(crate) stats: GraphStats,
    aux_reads: Cell<u64>,
    journal: Option<Vec<EventRecord>>,
}

impl Default for MSGraph {
    fn default() -> Self {
        MSGraph::new(GraphConfig::default())
    }
}

impl MSGraph {
    pub fn new(cfg: GraphConfig) -> Self {
        MSGraph {
            cfg,
            vertices: BTreeMap::new(),
            next_id: 1,
            next_piece: 1,
            now: 0,
            frontier: BTreeSet::new(),
            retired: HashMap::new(),
            labeled: BTreeSet::new(),
            pending: Vec::new(),
            stats: GraphStats::default(),
            aux_reads: Cell::new(0),
            journal: None,
        }
    }

    /// Starts recording every applied event.
    pub fn with_journal(mut self) -> Self {
        self.journal = Some(Vec::new());
        self
    }

    pub fn journal(&self) -> &[EventRecord] {
        self.journal.as_deref().unwrap_or(&[])
    }

    pub fn config(&self) -> &GraphConfig {
        &self.cfg
    }

    pub fn set_untangle(&mut self, on: bool) {
        self.cfg.untangle = on;
    }

    pub fn now(&self) -> Step {
        self.now
    }

    /// Moves the clock forward; open tracklets grow implicitly.
    pub fn advance_to(&mut self, t: Step) {
        self.now = self.now.max(t);
    }

    pub fn stats(&self) -> GraphStats {
        self.stats
    }

    /// Number of aux reads through [`MSGraph::aux`].
    pub fn aux_reads(&self) -> u64 {
        self.aux_reads.get()
    }

    pub fn vertex(&self, id: VertexId) -> Option<&Vertex> {
        self.vertices.get(&id)
    }

    pub fn vertices(&self) -> impl Iterator<Item = &Vertex> {
        self.vertices.values()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.vertices.values().map(|v| v.children.len()).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.vertices
            .values()
            .flat_map(|v| v.children.iter().map(move |c| (v.id, *c)))
    }

    pub fn frontier(&self) -> &BTreeSet<VertexId> {
        &self.frontier
    }

    pub fn labeled_set(&self) -> &BTreeSet<VertexId> {
        &self.labeled
    }

    pub fn pending_matches(&self) -> &[(VertexId, VertexId)] {
        &self.pending
    }

    /// Follows the retirement map to the live vertex that absorbed `id`.
    pub fn resolve(&self, mut id: VertexId) -> VertexId {
        while let Some(next) = self.retired.get(&id) {
            id = *next;
        }
        id
    }

    /// Current auxiliary data of a live vertex, with length-dependent fields
    /// of open tracklets evaluated at the current step.
    pub fn aux(&self, id: VertexId) -> Option<AuxData> {
        let v = self.vertices.get(&id)?;
        self.aux_reads.set(self.aux_reads.get() + 1);
        if v.tracklet.is_open() {
            Some(self.evaluate(id))
        } else {
            Some(v.aux)
        }
    }

    /// Auxiliary data of every live vertex as [`MSGraph::aux`] reports it.
    pub fn aux_snapshot(&self) -> BTreeMap<VertexId, AuxData> {
        self.vertices
            .keys()
            .map(|id| {
                let a = if self.vertices[id].tracklet.is_open() {
                    self.evaluate(*id)
                } else {
                    self.vertices[id].aux
                };
                (*id, a)
            })
            .collect()
    }

    fn fresh_id(&mut self) -> VertexId {
        let id = VertexId(self.next_id);
        self.next_id += 1;
        id
    }

    /// Pieces are numbered only by tracker events, so replaying the same
    /// events without labels reproduces the same piece ids.
    fn fresh_piece(&mut self) -> PieceId {
        let p = self.next_piece;
        self.next_piece += 1;
        p
    }

    pub(crate) fn new_vertex(&mut self, members: u32, tracklet: Tracklet, label: Option<TargetLabel>) -> VertexId {
        let id = self.fresh_id();
        self.stats.vertices_created += 1;
        if tracklet.is_open() {
            self.frontier.insert(id);
        }
        if label.is_some() {
            self.labeled.insert(id);
        }
        self.vertices.insert(
            id,
            Vertex {
                id,
                member_count: members,
                tracklet,
                label,
                parents: Vec::new(),
                children: Vec::new(),
                aux: AuxData::default(),
            },
        );
        id
    }

    pub(crate) fn add_edge(&mut self, p: VertexId, c: VertexId) {
        let pv = self.vertices.get_mut(&p).expect("live parent");
        if pv.children.contains(&c) {
            return;
        }
        pv.children.push(c);
        self.vertices.get_mut(&c).expect("live child").parents.push(p);
    }

    pub(crate) fn remove_edge(&mut self, p: VertexId, c: VertexId) {
        if let Some(pv) = self.vertices.get_mut(&p) {
            pv.children.retain(|x| *x != c);
        }
        if let Some(cv) = self.vertices.get_mut(&c) {
            cv.parents.retain(|x| *x != p);
        }
    }

    fn live(&self, id: VertexId) -> Result<&Vertex> {
        self.vertices.get(&id).ok_or(GraphError::UnknownVertex(id))
    }

    fn require_active(&self, id: VertexId) -> Result<&Vertex> {
        let v = self.live(id)?;
        if !self.frontier.contains(&id) {
            return Err(GraphError::NotActive(id));
        }
        Ok(v)
    }

    fn close(&mut self, id: VertexId, end: Step) {
        let v = self.vertices.get_mut(&id).expect("live vertex");
        v.tracklet.close(end);
        self.frontier.remove(&id);
    }

    fn check_closable(&self, id: VertexId, end: Option<Step>) -> Result<()> {
        let v = self.require_active(id)?;
        let last = v.tracklet.spans().last().expect("span").start;
        match end {
            Some(e) if e >= last => Ok(()),
            Some(e) => Err(GraphError::EmptyTracklet(id, e)),
            None => Err(GraphError::EmptyTracklet(id, 0)),
        }
    }

    fn record(&mut self, t: Step, payload: EventPayload, ids: Vec<VertexId>, outcome: Outcome) {
        if let Some(j) = self.journal.as_mut() {
            j.push(EventRecord {
                t,
                payload,
                vertex_ids: ids,
                outcome,
            });
        }
    }

    // ---------------------------------------------------------------------
    // Tracker events
    // ---------------------------------------------------------------------

    /// A new open solo vertex with no parents.
    pub fn add_solo_vertex(&mut self, start: Step) -> VertexId {
        self.add_vertex(start, 1).expect("one member is valid")
    }

    /// A new open vertex for `members` targets seen together, with no parents.
    pub fn add_vertex(&mut self, start: Step, members: u32) -> Result<VertexId> {
        if members == 0 {
            return Err(GraphError::ZeroMembers);
        }
        self.advance_to(start);
        let piece = self.fresh_piece();
        let id = self.new_vertex(members, Tracklet::open(piece, start), None);
        self.refresh([id]);
        self.record(
            start,
            EventPayload::Enter { members },
            vec![],
            Outcome::Created { ids: vec![id] },
        );
        Ok(id)
    }

    /// Targets of `joining` become indistinguishable from step `t` on.
    pub fn record_join(&mut self, joining: &[VertexId], t: Step) -> Result<VertexId> {
        let mut uniq: Vec<VertexId> = Vec::with_capacity(joining.len());
        for id in joining {
            if !uniq.contains(id) {
                uniq.push(*id);
            }
        }
        if uniq.len() < 2 {
            return Err(GraphError::TooFewJoining(uniq.len()));
        }
        let joining = &uniq[..];
        for id in joining {
            self.check_closable(*id, t.checked_sub(1))?;
        }
        self.advance_to(t);
        let mut members = 0;
        for id in joining {
            members += self.vertices[id].member_count;
            self.close(*id, t - 1);
        }
        let piece = self.fresh_piece();
        let c = self.new_vertex(members, Tracklet::open(piece, t), None);
        for id in joining {
            self.add_edge(*id, c);
        }
        self.refresh(joining.iter().copied());
        self.record(
            t,
            EventPayload::Join,
            joining.to_vec(),
            Outcome::Created { ids: vec![c] },
        );
        Ok(c)
    }

    /// The compound vertex separates into parts with the given member shares.
    pub fn record_split(&mut self, compound: VertexId, t: Step, shares: &[u32]) -> Result<Vec<VertexId>> {
        let v = self.require_active(compound)?;
        if v.is_solo() {
            return Err(GraphError::NotCompound(compound));
        }
        let members = v.member_count;
        if shares.len() < 2 || shares.contains(&0) || shares.iter().sum::<u32>() != members {
            return Err(GraphError::ShareMismatch {
                shares: shares.to_vec(),
                members,
            });
        }
        self.check_closable(compound, t.checked_sub(1))?;
        self.advance_to(t);
        self.close(compound, t - 1);
        let mut out = Vec::with_capacity(shares.len());
        for &share in shares {
            let piece = self.fresh_piece();
            let c = self.new_vertex(share, Tracklet::open(piece, t), None);
            self.add_edge(compound, c);
            out.push(c);
        }
        self.refresh([compound]);
        self.record(
            t,
            EventPayload::Split {
                shares: shares.to_vec(),
            },
            vec![compound],
            Outcome::Created { ids: out.clone() },
        );
        Ok(out)
    }

    /// The vertex's targets left the scene; step `t` is the first unobserved one.
    pub fn record_exit(&mut self, v: VertexId, t: Step) -> Result<()> {
        self.check_closable(v, t.checked_sub(1))?;
        self.advance_to(t);
        self.close(v, t - 1);
        self.refresh([v]);
        self.record(t, EventPayload::Exit, vec![v], Outcome::Closed { ids: vec![v] });
        Ok(())
    }

    /// The camera zooms in after step `t`: every open tracklet except `keep`
    /// ends at `t`. Returns the closed vertices.
    pub fn begin_blind_gap(&mut self, keep: Option<VertexId>, t: Step) -> Vec<VertexId> {
        self.advance_to(t);
        let closing: Vec<VertexId> = self.frontier.iter().copied().filter(|id| Some(*id) != keep).collect();
        for id in &closing {
            self.close(*id, t);
        }
        self.refresh(closing.iter().copied());
        self.record(
            t,
            EventPayload::BlindGap { keep },
            vec![],
            Outcome::Closed { ids: closing.clone() },
        );
        closing
    }

    fn check_candidate(&self, parent: VertexId, child: VertexId) -> Result<()> {
        let p = self.live(parent)?;
        let c = self.live(child)?;
        let bad = GraphError::TemporalOrder { parent, child };
        let end = p.tracklet.end().ok_or(bad.clone())?;
        let start = c.tracklet.start();
        if end >= start || start - end - 1 > self.cfg.max_blind_gap {
            return Err(bad);
        }
        Ok(())
    }

    /// Links a fresh parentless vertex to its candidate predecessors.
    /// Returns the live id of the new vertex after any chain merge.
    pub fn add_ambiguity_edges(&mut self, new: VertexId, candidates: &[VertexId]) -> Result<VertexId> {
        let out = self.link_reappearances(&[(new, candidates.to_vec())])?;
        Ok(out[0])
    }

    /// Links several reappearing vertices at once, then merges chains.
    /// Merging only after all edges exist keeps a candidate shared by two
    /// reappearances from being absorbed prematurely.
    pub fn link_reappearances(&mut self, links: &[(VertexId, Vec<VertexId>)]) -> Result<Vec<VertexId>> {
        let mut resolved = Vec::with_capacity(links.len());
        for (new, cands) in links {
            if !self.live(*new)?.parents.is_empty() {
                return Err(GraphError::HasParents(*new));
            }
            let cands: Vec<VertexId> = cands.iter().map(|c| self.resolve(*c)).collect();
            for c in &cands {
                self.check_candidate(*c, *new)?;
            }
            resolved.push((*new, cands));
        }
        let mut seeds = Vec::new();
        for (new, cands) in &resolved {
            for c in cands {
                self.add_edge(*c, *new);
                seeds.extend(self.vertices[c].children.iter().copied());
            }
            seeds.push(*new);
        }
        self.refresh(seeds);
        let touched: Vec<VertexId> = resolved
            .iter()
            .flat_map(|(n, cs)| std::iter::once(*n).chain(cs.iter().copied()))
            .collect();
        self.settle(touched);
        let out: Vec<VertexId> = resolved.iter().map(|(n, _)| self.resolve(*n)).collect();
        let t = self.now;
        self.record(
            t,
            EventPayload::Ambiguity { links: links.to_vec() },
            links.iter().map(|l| l.0).collect(),
            Outcome::Linked { ids: out.clone() },
        );
        Ok(out)
    }

    // ---------------------------------------------------------------------
    // Labeling and matching
    // ---------------------------------------------------------------------

    /// Attaches a face identity to a solo vertex, then matches it directly or
    /// by elimination and untangles when the match permits.
    pub fn label_vertex(&mut self, v: VertexId, label: TargetLabel) -> Result<MatchOutcome> {
        let v = self.resolve(v);
        let vx = self.live(v)?;
        if !vx.is_solo() {
            return Err(GraphError::NotSolo(v));
        }
        if vx.label.is_some() {
            return Err(GraphError::AlreadyLabeled(v));
        }
        self.vertices.get_mut(&v).expect("live").label = Some(label);
        self.labeled.insert(v);

        let kind = match self.direct_match(v) {
            Some(u) => MatchKind::Direct(u),
            None => match self.indirect_match(v) {
                Some(w) => MatchKind::Indirect(w),
                None => MatchKind::None,
            },
        };

        let mut untangled = false;
        let mut deferred = false;
        if let MatchKind::Direct(u) | MatchKind::Indirect(u) = kind {
            if self.cfg.untangle {
                match self.untangle(u, v) {
                    Ok(()) => untangled = true,
                    Err(_) => {
                        self.pending.push((u, v));
                        self.stats.deferred += 1;
                        deferred = true;
                    }
                }
            }
        }
        let labeled = self.resolve(v);
        self.on_label(labeled);
        self.settle([labeled]);
        self.retry_pending();
        let labeled = self.resolve(labeled);

        let outcome = MatchOutcome {
            kind,
            untangled,
            deferred,
            labeled,
        };
        let t = self.now;
        self.record(t, EventPayload::Label { label }, vec![v], Outcome::Matched(outcome));
        Ok(outcome)
    }

    /// Labeled vertices reachable backwards from `v` through unlabeled
    /// vertices only.
    pub fn labeled_origins(&self, v: VertexId) -> Vec<VertexId> {
        let mut out = BTreeSet::new();
        let mut seen = BTreeSet::new();
        let mut stack = vec![v];
        while let Some(x) = stack.pop() {
            for p in &self.vertices[&x].parents {
                if self.vertices[p].label.is_some() {
                    out.insert(*p);
                } else if seen.insert(*p) {
                    stack.push(*p);
                }
            }
        }
        out.into_iter().collect()
    }

    /// A labeled origin of `v` carrying the same label, if any. When an
    /// earlier match of that label is still pending, several origins carry
    /// it; the target's most recent sighting is the one adjacent to `v`.
    pub fn direct_match(&self, v: VertexId) -> Option<VertexId> {
        let label = self.vertices.get(&v)?.label?;
        self.labeled_origins(v)
            .into_iter()
            .filter(|u| self.vertices[u].label == Some(label))
            .max_by_key(|u| (self.vertices[u].tracklet.end().unwrap_or(Step::MAX), *u))
    }

    /// The unlabeled vertex deduced by elimination to be the same target as
    /// `v`, assuming `v` matched none of its labeled origins.
    pub fn indirect_match(&self, v: VertexId) -> Option<VertexId> {
        let vx = self.vertices.get(&v)?;
        let parents: Vec<&Vertex> = vx.parents.iter().map(|p| &self.vertices[p]).collect();
        elimination_candidate(&self.view_of(vx), &parents)
            .filter(|c| self.vertices.get(c).is_some_and(|w| w.label.is_none()))
    }

    fn retry_pending(&mut self) {
        loop {
            let mut progressed = false;
            let pending = std::mem::take(&mut self.pending);
            let mut keep = Vec::new();
            for (u, v) in pending {
                let (u, v) = (self.resolve(u), self.resolve(v));
                if u == v || !self.vertices.contains_key(&u) || !self.vertices.contains_key(&v) {
                    progressed = true;
                    continue;
                }
                if self.untangle(u, v).is_ok() {
                    progressed = true;
                } else {
                    keep.push((u, v));
                }
            }
            self.pending = keep;
            if !progressed || self.pending.is_empty() {
                break;
            }
        }
    }

    // ---------------------------------------------------------------------
    // Structure queries
    // ---------------------------------------------------------------------

    /// Weakly connected component containing `v`.
    pub fn component_of(&self, v: VertexId) -> BTreeSet<VertexId> {
        let mut seen = BTreeSet::new();
        if !self.vertices.contains_key(&v) {
            return seen;
        }
        let mut stack = vec![v];
        seen.insert(v);
        while let Some(x) = stack.pop() {
            let vx = &self.vertices[&x];
            for n in vx.parents.iter().chain(vx.children.iter()) {
                if seen.insert(*n) {
                    stack.push(*n);
                }
            }
        }
        seen
    }

    pub fn components(&self) -> Vec<BTreeSet<VertexId>> {
        let mut done: BTreeSet<VertexId> = BTreeSet::new();
        let mut out = Vec::new();
        for id in self.vertices.keys() {
            if !done.contains(id) {
                let c = self.component_of(*id);
                done.extend(c.iter().copied());
                out.push(c);
            }
        }
        out
    }

    fn order_within(&self, set: &BTreeSet<VertexId>) -> Option<Vec<VertexId>> {
        let mut indeg: HashMap<VertexId, usize> = set
            .iter()
            .map(|id| {
                let n = self.vertices[id].parents.iter().filter(|p| set.contains(p)).count();
                (*id, n)
            })
            .collect();
        let mut queue: VecDeque<VertexId> = set.iter().copied().filter(|id| indeg[id] == 0).collect();
        let mut order = Vec::with_capacity(set.len());
        while let Some(id) = queue.pop_front() {
            order.push(id);
            for c in &self.vertices[&id].children {
                if let Some(d) = indeg.get_mut(c) {
                    *d -= 1;
                    if *d == 0 {
                        queue.push_back(*c);
                    }
                }
            }
        }
        (order.len() == set.len()).then_some(order)
    }

    /// Parents-before-children order of the whole graph; `None` on a cycle.
    pub fn topological_order(&self) -> Option<Vec<VertexId>> {
        let all: BTreeSet<VertexId> = self.vertices.keys().copied().collect();
        self.order_within(&all)
    }

    /// True iff the component containing `v` has no directed cycle.
    pub fn is_dag(&self, v: VertexId) -> bool {
        self.order_within(&self.component_of(v)).is_some()
    }

    // ---------------------------------------------------------------------
    // Fixture construction
    // ---------------------------------------------------------------------

    /// Inserts a vertex without any event semantics or aux evaluation.
    /// Intended for hand-built and randomized test fixtures; call
    /// [`MSGraph::refresh_all`] once the fixture is complete.
    pub fn insert_raw_vertex(&mut self, members: u32, tracklet: Tracklet, label: Option<TargetLabel>) -> VertexId {
        if let Some(e) = tracklet.end() {
            self.advance_to(e);
        }
        self.advance_to(tracklet.start());
        self.new_vertex(members.max(1), tracklet, label)
    }

    /// Inserts an edge without temporal checks.
    pub fn insert_raw_edge(&mut self, parent: VertexId, child: VertexId) {
        self.add_edge(parent, child);
    }

    /// Re-evaluates the aux data of every vertex. Fails on a cycle.
    pub fn refresh_all(&mut self) -> Result<()> {
        if self.topological_order().is_none() {
            return Err(GraphError::Cycle);
        }
        let sources: Vec<VertexId> = self
            .vertices
            .values()
            .filter(|v| v.parents.is_empty())
            .map(|v| v.id)
            .collect();
        self.refresh(sources);
        Ok(())
    }
}
