//! Evaluation against ground truth.
//!
//! A piece of tracklet counts as recovered for a target when the target
//! owns it and a vertex holding it is labeled with the target, or is reached
//! from such a vertex by a forward chain (each step leaves a vertex with a
//! single child) or a backward chain (each step leaves a vertex with a single
//! parent).

use std::collections::{BTreeMap, BTreeSet};

use crate::graph::GraphConfig;
use crate::graph::{MSGraph, PieceId, Tracklet, VertexId};
use crate::sim::driver::{GraphDriver, ObsEvent};
use crate::sim::run::GroundTruth;
use crate::sim::scene::{ScenarioScript, TargetId};

/// `(target, piece)` pairs recovered by labels, found by walking outwards
/// from every labeled vertex.
pub fn credited_pieces(
    graph: &MSGraph,
    owners: &BTreeMap<PieceId, BTreeSet<TargetId>>,
) -> BTreeSet<(TargetId, PieceId)> {
    let mut out = BTreeSet::new();
    let mut credit = |v: VertexId, z: TargetId| {
        for p in graph.vertex(v).expect("live").tracklet().pieces() {
            if owners.get(&p).is_some_and(|o| o.contains(&z)) {
                out.insert((z, p));
            }
        }
    };
    for &v in graph.labeled_set() {
        let z = graph.vertex(v).expect("live").label().expect("labeled").0;
        credit(v, z);
        let mut x = v;
        while let [c] = graph.vertex(x).expect("live").children() {
            x = *c;
            credit(x, z);
        }
        let mut x = v;
        while let [p] = graph.vertex(x).expect("live").parents() {
            x = *p;
            credit(x, z);
        }
    }
    out
}

fn piece_lengths(graph: &MSGraph) -> BTreeMap<PieceId, u64> {
    let now = graph.now();
    let mut out = BTreeMap::new();
    for v in graph.vertices() {
        for s in v.tracklet().spans() {
            out.insert(s.piece, s.len_at(now));
        }
    }
    out
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

/// Fraction of all observed target-steps that the final graph attributes to
/// the right target. An empty scene scores 1.
pub fn compute_m(graph: &MSGraph, truth: &GroundTruth) -> f64 {
    let lengths = piece_lengths(graph);
    let num: u64 = credited_pieces(graph, &truth.piece_owners)
        .iter()
        .map(|(_, p)| lengths[p])
        .sum();
    ratio(num, truth.observation_count())
}

/// [`compute_m`] computed the other way round: every recorded observation
/// asks whether some vertex holding its piece is reached by a label of its
/// target through the chains, searching towards the labels.
pub fn coverage_counter(graph: &MSGraph, truth: &GroundTruth) -> f64 {
    let mut holders: BTreeMap<PieceId, Vec<VertexId>> = BTreeMap::new();
    for v in graph.vertices() {
        for p in v.tracklet().pieces() {
            holders.entry(p).or_default().push(v.id());
        }
    }
    let reached = |x: VertexId, z: TargetId| -> bool {
        let is_z = |v: VertexId| graph.vertex(v).and_then(|v| v.label()).is_some_and(|l| l.0 == z);
        if is_z(x) {
            return true;
        }
        // Labels whose forward chains arrive here.
        let mut stack = vec![x];
        let mut seen = BTreeSet::new();
        while let Some(y) = stack.pop() {
            for p in graph.vertex(y).expect("live").parents() {
                if graph.vertex(*p).expect("live").children().len() == 1 && seen.insert(*p) {
                    if is_z(*p) {
                        return true;
                    }
                    stack.push(*p);
                }
            }
        }
        // Labels whose backward chains arrive here.
        let mut stack = vec![x];
        seen.clear();
        while let Some(y) = stack.pop() {
            for c in graph.vertex(y).expect("live").children() {
                if graph.vertex(*c).expect("live").parents().len() == 1 && seen.insert(*c) {
                    if is_z(*c) {
                        return true;
                    }
                    stack.push(*c);
                }
            }
        }
        false
    };
    let mut cache: BTreeMap<(TargetId, PieceId), bool> = BTreeMap::new();
    let mut hits = 0u64;
    let mut total = 0u64;
    for (z, obs) in &truth.observed {
        for (_, p) in obs {
            total += 1;
            let ok = *cache.entry((*z, *p)).or_insert_with(|| {
                truth.owners(*p).contains(z) && holders.get(p).is_some_and(|hs| hs.iter().any(|h| reached(*h, *z)))
            });
            hits += ok as u64;
        }
    }
    ratio(hits, total)
}

/// Number of times some target walking alone joins a group and later walks
/// alone again, summed over targets.
pub fn compute_njs(script: &ScenarioScript) -> u64 {
    #[derive(Clone, Copy, PartialEq)]
    enum S {
        Away,
        Solo,
        Grouped { from_solo: bool },
    }
    let mut state: BTreeMap<TargetId, S> = script.target_ids().map(|z| (z, S::Away)).collect();
    let mut count = 0;
    for f in &script.frames {
        let mut now: BTreeMap<TargetId, bool> = BTreeMap::new();
        for e in &f.entities {
            for m in &e.members {
                now.insert(*m, e.members.len() > 1);
            }
        }
        for (z, s) in state.iter_mut() {
            *s = match (*s, now.get(z)) {
                (_, None) => S::Away,
                (S::Grouped { from_solo: true }, Some(false)) => {
                    count += 1;
                    S::Solo
                }
                (_, Some(false)) => S::Solo,
                (S::Solo, Some(true)) => S::Grouped { from_solo: true },
                (S::Grouped { from_solo }, Some(true)) => S::Grouped { from_solo },
                (S::Away, Some(true)) => S::Grouped { from_solo: false },
            };
        }
    }
    count
}

/// Targets represented in each connected component, counted from the
/// member counts of its sources.
pub fn component_sizes(graph: &MSGraph) -> Vec<u64> {
    graph
        .components()
        .iter()
        .map(|c| {
            c.iter()
                .map(|v| graph.vertex(*v).expect("live"))
                .filter(|v| v.parents().is_empty())
                .map(|v| v.member_count() as u64)
                .sum()
        })
        .collect()
}

/// Labelings that an ideal policy would need: `sum_i (2 n_i - 1)` over
/// connected components.
pub fn ideal_bound(graph: &MSGraph) -> u64 {
    component_sizes(graph).iter().map(|n| (2 * n).saturating_sub(1)).sum()
}

/// Every vertex must hold tracklets of one consistent set of targets: a
/// solo vertex's pieces share a target (its label, if any), a compound's
/// pieces share at least as many targets as it has members.
pub fn check_owner_consistency(graph: &MSGraph, truth: &GroundTruth) -> Result<(), String> {
    for v in graph.vertices() {
        let mut common: Option<BTreeSet<TargetId>> = None;
        for p in v.tracklet().pieces() {
            let o = truth
                .piece_owners
                .get(&p)
                .ok_or(format!("{} holds unknown piece {p}", v.id()))?;
            common = Some(match common {
                None => o.clone(),
                Some(c) => c.intersection(o).copied().collect(),
            });
        }
        let common = common.unwrap_or_default();
        if (common.len() as u64) < v.member_count() as u64 {
            return Err(format!(
                "{} ({} members) mixes tracklets of different targets: common owners {common:?}",
                v.id(),
                v.member_count()
            ));
        }
        if let Some(l) = v.label() {
            if !common.contains(&l.0) {
                return Err(format!("{} labeled {} holds tracklets of {common:?}", v.id(), l.0));
            }
        }
    }
    Ok(())
}

/// Result of the offline labeling search on one connected component of the
/// unlabeled graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentCheck {
    pub vertices: usize,
    pub targets: u64,
    pub bound: u64,
    /// Fewest labels that recover every target of the component, if labeling
    /// every solo vertex recovers them at all.
    pub min_labels: Option<u64>,
}

/// Copies one component into a fresh graph.
fn extract(graph: &MSGraph, comp: &BTreeSet<VertexId>) -> (MSGraph, BTreeMap<VertexId, VertexId>) {
    let mut g = MSGraph::new(*graph.config());
    let mut map = BTreeMap::new();
    for id in comp {
        let v = graph.vertex(*id).expect("live");
        let tracklet: Tracklet = v.tracklet().clone();
        map.insert(*id, g.insert_raw_vertex(v.member_count(), tracklet, v.label()));
    }
    for id in comp {
        for c in graph.vertex(*id).expect("live").children() {
            g.insert_raw_edge(map[id], map[c]);
        }
    }
    g.advance_to(graph.now());
    g.refresh_all().expect("component of a dag");
    (g, map)
}

fn fully_recovered(g: &MSGraph, owners: &BTreeMap<PieceId, BTreeSet<TargetId>>) -> bool {
    let credited = credited_pieces(g, owners);
    g.vertices().all(|v| {
        v.tracklet()
            .pieces()
            .all(|p| owners[&p].iter().all(|z| credited.contains(&(*z, p))))
    })
}

/// Searches, smallest first, for a set of solo vertices whose labels (applied
/// in time order) recover every target of the component. Gives up above
/// `max_vertices`.
pub fn min_labels_for_component(
    graph: &MSGraph,
    comp: &BTreeSet<VertexId>,
    owners: &BTreeMap<PieceId, BTreeSet<TargetId>>,
    max_vertices: usize,
) -> Option<ComponentCheck> {
    if comp.len() > max_vertices {
        return None;
    }
    let (base, _) = extract(graph, comp);
    let targets: u64 = base
        .vertices()
        .filter(|v| v.parents().is_empty())
        .map(|v| v.member_count() as u64)
        .sum();
    let bound = (2 * targets).saturating_sub(1);
    let mut solos: Vec<(u32, VertexId, TargetId)> = base
        .vertices()
        .filter(|v| v.is_solo())
        .map(|v| {
            let z = v
                .tracklet()
                .pieces()
                .map(|p| owners[&p].clone())
                .reduce(|a, b| a.intersection(&b).copied().collect())
                .and_then(|s| s.first().copied())
                .expect("solo vertex has an owner");
            (v.tracklet().start(), v.id(), z)
        })
        .collect();
    solos.sort();
    let attempt = |mask: u64| -> bool {
        let mut g = base.clone();
        for (i, (_, v, z)) in solos.iter().enumerate() {
            if mask >> i & 1 == 1 {
                let live = g.resolve(*v);
                if g.vertex(live).is_some_and(|x| x.label().is_none()) {
                    g.label_vertex(live, crate::graph::TargetLabel(*z)).expect("solo");
                }
            }
        }
        fully_recovered(&g, owners)
    };
    let n = solos.len();
    let all = if n == 0 { 0 } else { (1u64 << n) - 1 };
    let min_labels = if !attempt(all) {
        None
    } else {
        let mut masks: Vec<u64> = (0..=all).collect();
        masks.sort_by_key(|m| (m.count_ones(), *m));
        masks.into_iter().find(|m| attempt(*m)).map(|m| m.count_ones() as u64)
    };
    Some(ComponentCheck {
        vertices: comp.len(),
        targets,
        bound,
        min_labels,
    })
}

/// Offline check of the labeling bound: rebuild the run's graph without any
/// label, then search each small enough component for a minimal full
/// recovery.
pub fn offline_bound_check(
    cfg: GraphConfig,
    log: &[ObsEvent],
    truth: &GroundTruth,
    max_vertices: usize,
) -> Result<Vec<ComponentCheck>, crate::error::SimError> {
    let drv = GraphDriver::replay_unlabeled(cfg, log)?;
    let g = drv.graph();
    Ok(g.components()
        .iter()
        .filter_map(|c| min_labels_for_component(g, c, &truth.piece_owners, max_vertices))
        .collect())
}
