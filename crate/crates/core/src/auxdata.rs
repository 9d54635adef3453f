//! Per-vertex auxiliary data and its maintenance.
//!
//! Every field is defined recursively from the vertex itself and its direct
//! parents, so inserting a vertex costs `O(|P(v)|)`. Structural changes
//! (labeling, untangling, chain merges) re-evaluate the affected vertices and
//! their descendants in topological order; nothing ever walks towards the
//! sources.
//!
//! Counts are path counts and can in principle grow exponentially with the
//! depth of unresolved ambiguity, so all arithmetic saturates at `u64::MAX`.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::GraphError;
use crate::graph::{MSGraph, Vertex, VertexId};

/// Recursively maintained state of one vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AuxData {
    /// Number of unlabeled origins (counted as paths).
    pub n_not_labeled: u64,
    /// The single parent that carries unlabeled origins, if exactly one does.
    pub p_back: Option<VertexId>,
    /// Candidate for a match by elimination.
    pub c_candidate: Option<VertexId>,
    /// Number of origins, labeled or not.
    pub n_origins: u64,
    /// `n_origins - n_not_labeled`.
    pub n_labeled: u64,
    /// Expected gain over labeled origins, discounting forward labeling
    /// chains that are already labeled.
    pub delta_l_dir: u64,
    /// Same as `delta_l_dir` without the forward-chain discount.
    pub delta_l_dir_plain: u64,
    /// Expected gain over unlabeled origins.
    pub l_not_dir: u64,
    /// Number of forward labeling chains passing through the vertex.
    pub n_ret: u64,
}

impl AuxData {
    /// Values held by every labeled vertex.
    pub const LABELED: AuxData = AuxData {
        n_not_labeled: 0,
        p_back: None,
        c_candidate: None,
        n_origins: 1,
        n_labeled: 1,
        delta_l_dir: 0,
        delta_l_dir_plain: 0,
        l_not_dir: 0,
        n_ret: 1,
    };

    /// Selects the refined or the plain labeled-origin gain.
    pub fn delta(&self, refined: bool) -> u64 {
        if refined {
            self.delta_l_dir
        } else {
            self.delta_l_dir_plain
        }
    }
}

/// What the recursions need to know about the vertex being evaluated.
#[derive(Debug, Clone, Copy)]
pub struct VertexView {
    pub id: VertexId,
    pub solo: bool,
    pub labeled: bool,
    /// Tracklet length in time steps at evaluation time.
    pub length: u64,
}

/// What the recursions are allowed to read from a parent.
pub trait ParentView {
    fn id(&self) -> VertexId;
    fn aux(&self) -> &AuxData;
    fn is_labeled(&self) -> bool;
    /// `chain(p)`: the parent has exactly one child.
    fn has_single_child(&self) -> bool;
}

impl ParentView for &Vertex {
    fn id(&self) -> VertexId {
        Vertex::id(self)
    }
    fn aux(&self) -> &AuxData {
        &self.aux
    }
    fn is_labeled(&self) -> bool {
        self.label.is_some()
    }
    fn has_single_child(&self) -> bool {
        self.children.len() == 1
    }
}

/// Evaluates all fields of `v` from its own state and its direct parents.
///
/// Touches nothing but the supplied parents.
pub fn compute_on_insert<P: ParentView>(v: &VertexView, parents: &[P]) -> AuxData {
    if v.labeled {
        return AuxData::LABELED;
    }
    let len = v.length;
    if parents.is_empty() {
        return AuxData {
            n_not_labeled: 1,
            p_back: None,
            c_candidate: v.solo.then_some(v.id),
            n_origins: 1,
            n_labeled: 0,
            delta_l_dir: 0,
            delta_l_dir_plain: 0,
            l_not_dir: len,
            n_ret: 0,
        };
    }

    let mut n_not_labeled = 0u64;
    let mut n_origins = 0u64;
    let mut n_ret = 0u64;
    let mut sum_delta = 0u64;
    let mut sum_delta_plain = 0u64;
    let mut back: Option<usize> = None;
    let mut carriers = 0usize;
    for (i, p) in parents.iter().enumerate() {
        let a = p.aux();
        n_not_labeled = n_not_labeled.saturating_add(a.n_not_labeled);
        n_origins = n_origins.saturating_add(a.n_origins);
        if p.has_single_child() {
            n_ret = n_ret.saturating_add(a.n_ret);
        }
        sum_delta = sum_delta.saturating_add(a.delta_l_dir);
        sum_delta_plain = sum_delta_plain.saturating_add(a.delta_l_dir_plain);
        if a.n_not_labeled > 0 {
            carriers += 1;
            back = Some(i);
        }
    }
    let back = if carriers == 1 { back } else { None };
    let n_labeled = n_origins.saturating_sub(n_not_labeled);

    let c_candidate = if n_not_labeled == 0 {
        None
    } else {
        match back.and_then(|i| parents[i].aux().c_candidate) {
            Some(c) => Some(c),
            None => v.solo.then_some(v.id),
        }
    };

    let l_not_dir = len
        .saturating_mul(n_not_labeled)
        .saturating_add(back.map_or(0, |i| parents[i].aux().l_not_dir));

    AuxData {
        n_not_labeled,
        p_back: back.map(|i| parents[i].id()),
        c_candidate,
        n_origins,
        n_labeled,
        delta_l_dir: refined_delta(len, n_labeled, n_ret, n_origins, sum_delta),
        delta_l_dir_plain: len.saturating_mul(n_labeled).saturating_add(sum_delta_plain),
        l_not_dir,
        n_ret,
    }
}

fn refined_delta(len: u64, n_labeled: u64, n_ret: u64, n_origins: u64, parent_sum: u64) -> u64 {
    // A forward labeling chain through v is one of v's labeled-origin paths.
    assert!(
        n_ret <= n_labeled || n_origins == u64::MAX,
        "n_ret ({n_ret}) exceeds n_labeled ({n_labeled})"
    );
    len.saturating_mul(n_labeled.saturating_sub(n_ret))
        .saturating_add(parent_sum)
}

/// The forward-chain-aware gain of labeling `v` over its labeled origins.
pub fn delta_l_dir_refined<P: ParentView>(v: &VertexView, parents: &[P]) -> u64 {
    if v.labeled {
        return 0;
    }
    compute_on_insert(v, parents).delta_l_dir
}

/// The plain gain over labeled origins, without forward-chain discount.
pub fn delta_l_dir_plain<P: ParentView>(v: &VertexView, parents: &[P]) -> u64 {
    if v.labeled {
        return 0;
    }
    compute_on_insert(v, parents).delta_l_dir_plain
}

/// Candidate of `v` for a match by elimination, evaluated as if `v` were
/// still unlabeled (which is the state its parents saw it in).
pub fn elimination_candidate<P: ParentView>(v: &VertexView, parents: &[P]) -> Option<VertexId> {
    let unlabeled = VertexView { labeled: false, ..*v };
    compute_on_insert(&unlabeled, parents)
        .c_candidate
        .filter(|&c| c != v.id)
}

impl MSGraph {
    /// Resets `v` to labeled values and re-evaluates all its descendants.
    pub fn on_label(&mut self, v: VertexId) {
        self.refresh([v]);
    }

    /// Re-evaluates every vertex in `disconnected` and all their descendants.
    pub fn on_untangle_repair(&mut self, disconnected: &BTreeSet<VertexId>) {
        self.refresh(disconnected.iter().copied());
    }

    /// Re-evaluates `seeds` and their descendant cone, parents before children.
    pub(crate) fn refresh<I: IntoIterator<Item = VertexId>>(&mut self, seeds: I) {
        let mut cone: BTreeSet<VertexId> = BTreeSet::new();
        let mut stack: Vec<VertexId> = seeds.into_iter().filter(|id| self.vertices.contains_key(id)).collect();
        while let Some(id) = stack.pop() {
            if cone.insert(id) {
                stack.extend(self.vertices[&id].children.iter().copied());
            }
        }
        if cone.is_empty() {
            return;
        }

        let mut indeg: HashMap<VertexId, usize> = cone
            .iter()
            .map(|id| {
                let n = self.vertices[id].parents.iter().filter(|p| cone.contains(p)).count();
                (*id, n)
            })
            .collect();
        let mut queue: VecDeque<VertexId> = cone.iter().copied().filter(|id| indeg[id] == 0).collect();
        let mut done = 0usize;
        while let Some(id) = queue.pop_front() {
            done += 1;
            let aux = self.evaluate(id);
            self.vertices.get_mut(&id).expect("live vertex").aux = aux;
            self.stats.aux_writes += 1;
            for c in self.vertices[&id].children.clone() {
                if let Some(d) = indeg.get_mut(&c) {
                    *d -= 1;
                    if *d == 0 {
                        queue.push_back(c);
                    }
                }
            }
        }
        assert_eq!(done, cone.len(), "aux refresh over a cyclic region");
    }

    /// Evaluates one vertex from its parents' stored values.
    pub(crate) fn evaluate(&self, id: VertexId) -> AuxData {
        let v = &self.vertices[&id];
        let parents: Vec<&Vertex> = v.parents.iter().map(|p| &self.vertices[p]).collect();
        compute_on_insert(&self.view_of(v), &parents)
    }

    pub(crate) fn view_of(&self, v: &Vertex) -> VertexView {
        VertexView {
            id: v.id(),
            solo: v.is_solo(),
            labeled: v.label.is_some(),
            length: v.tracklet.len_at(self.now()),
        }
    }
}

/// Evaluates every recursion over the whole graph in one topological sweep,
/// ignoring all stored values.
pub fn recompute_from_scratch(graph: &MSGraph) -> Result<BTreeMap<VertexId, AuxData>, GraphError> {
    let order = graph.topological_order().ok_or(GraphError::Cycle)?;
    let now = graph.now();
    let mut out: BTreeMap<VertexId, AuxData> = BTreeMap::new();
    for id in order {
        let v = graph.vertex(id).expect("ordered vertex exists");
        let len = v.tracklet().len_at(now);
        let aux = if v.label().is_some() {
            AuxData::LABELED
        } else if v.parents().is_empty() {
            AuxData {
                n_not_labeled: 1,
                c_candidate: v.is_solo().then_some(id),
                n_origins: 1,
                l_not_dir: len,
                ..AuxData::default()
            }
        } else {
            let ps: Vec<(VertexId, &AuxData, bool)> = v
                .parents()
                .iter()
                .map(|p| {
                    let single = graph.vertex(*p).expect("parent").children().len() == 1;
                    (*p, &out[p], single)
                })
                .collect();
            let n_nl = ps.iter().fold(0u64, |s, p| s.saturating_add(p.1.n_not_labeled));
            let n_o = ps.iter().fold(0u64, |s, p| s.saturating_add(p.1.n_origins));
            let n_ret = ps.iter().filter(|p| p.2).fold(0u64, |s, p| s.saturating_add(p.1.n_ret));
            let carriers: Vec<_> = ps.iter().filter(|p| p.1.n_not_labeled > 0).collect();
            let p_back = (carriers.len() == 1).then(|| carriers[0].0);
            let c = if n_nl == 0 {
                None
            } else {
                p_back.and_then(|p| out[&p].c_candidate).or(v.is_solo().then_some(id))
            };
            let n_l = n_o.saturating_sub(n_nl);
            let d = ps.iter().fold(0u64, |s, p| s.saturating_add(p.1.delta_l_dir));
            let dp = ps.iter().fold(0u64, |s, p| s.saturating_add(p.1.delta_l_dir_plain));
            AuxData {
                n_not_labeled: n_nl,
                p_back,
                c_candidate: c,
                n_origins: n_o,
                n_labeled: n_l,
                delta_l_dir: len.saturating_mul(n_l.saturating_sub(n_ret)).saturating_add(d),
                delta_l_dir_plain: len.saturating_mul(n_l).saturating_add(dp),
                l_not_dir: len
                    .saturating_mul(n_nl)
                    .saturating_add(p_back.map_or(0, |p| out[&p].l_not_dir)),
                n_ret,
            }
        };
        out.insert(id, aux);
    }
    Ok(out)
}
