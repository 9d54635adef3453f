//! Independent oracles shared by the integration tests: random fixtures,
//! brute-force path enumeration and feasible-assignment enumeration.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use msg_core::auxdata::recompute_from_scratch;
use msg_core::graph::PieceId;
use msg_core::sim::{EntityId, GraphDriver, ObsEvent, Reappearance};
use msg_core::{AuxData, GraphConfig, MSGraph, MatchKind, Step, TargetLabel, Tracklet, VertexId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// Random DAGs
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct DagSpec {
    pub max_vertices: usize,
    pub max_parents: usize,
    pub p_label: f64,
    pub p_compound: f64,
}

/// Vertex `i` lives in `[10 i, 10 i + 7]`, so every edge to a later vertex
/// points forward in time. Labels are distinct and only on solo vertices.
pub fn random_dag(r: &mut impl Rng, spec: DagSpec) -> MSGraph {
    let n = r.gen_range(1..=spec.max_vertices);
    let mut g = MSGraph::default();
    let mut ids = Vec::new();
    for i in 0..n {
        let start = 10 * i as Step;
        let len: Step = r.gen_range(1..=8);
        let solo = !r.gen_bool(spec.p_compound);
        let members = if solo { 1 } else { r.gen_range(2..=3) };
        let label = (solo && r.gen_bool(spec.p_label)).then_some(TargetLabel(i as u64 + 100));
        let v = g.insert_raw_vertex(members, Tracklet::closed(i as u64 + 1, start, start + len - 1), label);
        if i > 0 {
            let k = r.gen_range(0..=spec.max_parents.min(i));
            // Mostly recent parents, for deeper structures.
            let lo = i.saturating_sub(6);
            let pool: Vec<usize> = if i - lo >= k {
                (lo..i).collect()
            } else {
                (0..i).collect()
            };
            for p in pool.choose_multiple(r, k) {
                g.insert_raw_edge(ids[*p], v);
            }
        }
        ids.push(v);
    }
    g.refresh_all().expect("forward edges only");
    g
}

// ---------------------------------------------------------------------------
// Path enumeration
// ---------------------------------------------------------------------------

fn labeled(g: &MSGraph, x: VertexId) -> bool {
    g.vertex(x).expect("live").label().is_some()
}

/// Every unlabeled path ending at `v`, listed from its origin to `v`. An
/// origin is a labeled vertex or an unlabeled source. The label of `v`
/// itself plays no role.
pub fn origin_paths(g: &MSGraph, v: VertexId) -> Vec<Vec<VertexId>> {
    fn walk(g: &MSGraph, x: VertexId, rev: &mut Vec<VertexId>, out: &mut Vec<Vec<VertexId>>) {
        for p in g.vertex(x).expect("live").parents() {
            rev.push(*p);
            if labeled(g, *p) || g.vertex(*p).expect("live").parents().is_empty() {
                out.push(rev.iter().rev().copied().collect());
            } else {
                walk(g, *p, rev, out);
            }
            rev.pop();
        }
    }
    if g.vertex(v).expect("live").parents().is_empty() {
        return vec![vec![v]];
    }
    let mut out = Vec::new();
    walk(g, v, &mut vec![v], &mut out);
    out
}

fn from_labeled_origin(g: &MSGraph, path: &[VertexId]) -> bool {
    path.len() > 1 && labeled(g, path[0])
}

fn unlabeled_origin_count(g: &MSGraph, x: VertexId) -> u64 {
    if labeled(g, x) {
        return 0;
    }
    origin_paths(g, x).iter().filter(|p| !from_labeled_origin(g, p)).count() as u64
}

/// The match by elimination of `v`, evaluated by brute force: every path
/// from an unlabeled origin to `v` must pass through `w` and continue along
/// one and the same unlabeled path to `v`. Of all such solo vertices the one
/// farthest from `v` is the match.
pub fn elimination_by_paths(g: &MSGraph, v: VertexId) -> Option<VertexId> {
    let paths: Vec<Vec<VertexId>> = origin_paths(g, v)
        .into_iter()
        .filter(|p| !from_labeled_origin(g, p))
        .collect();
    let first = paths.first()?;
    (0..first.len() - 1)
        .map(|i| &first[i..])
        .find(|suffix| g.vertex(suffix[0]).expect("live").is_solo() && paths.iter().all(|p| p.ends_with(suffix)))
        .map(|suffix| suffix[0])
}

/// All auxiliary fields of `v` from path enumeration.
pub fn aux_by_paths(g: &MSGraph, v: VertexId) -> AuxData {
    if labeled(g, v) {
        return AuxData {
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
    }
    let now = g.now();
    let len = |x: VertexId| g.vertex(x).expect("live").tracklet().len_at(now);
    let paths = origin_paths(g, v);
    let n_origins = paths.len() as u64;
    let mut n_labeled = 0;
    let mut plain = 0;
    let mut refined = 0;
    let mut n_ret = 0;
    for p in paths.iter().filter(|p| from_labeled_origin(g, p)) {
        n_labeled += 1;
        let gain: u64 = p[1..].iter().map(|x| len(*x)).sum();
        // The forward labeling chain of the origin, as far as it follows p.
        let mut ext = 0;
        let mut whole = true;
        for w in p.windows(2) {
            if g.vertex(w[0]).expect("live").children().len() == 1 {
                ext += len(w[1]);
            } else {
                whole = false;
                break;
            }
        }
        plain += gain;
        refined += gain - ext;
        n_ret += u64::from(whole);
    }
    let n_not_labeled = n_origins - n_labeled;

    let back = |x: VertexId| {
        let carriers: Vec<VertexId> = g
            .vertex(x)
            .expect("live")
            .parents()
            .iter()
            .copied()
            .filter(|p| unlabeled_origin_count(g, *p) > 0)
            .collect();
        (carriers.len() == 1).then(|| carriers[0])
    };
    let mut l_not_dir = 0;
    let mut x = Some(v);
    while let Some(y) = x {
        l_not_dir += len(y) * unlabeled_origin_count(g, y);
        x = back(y);
    }
    let solo = g.vertex(v).expect("live").is_solo();
    let c_candidate = if n_not_labeled == 0 {
        None
    } else {
        elimination_by_paths(g, v).or(solo.then_some(v))
    };
    AuxData {
        n_not_labeled,
        p_back: back(v),
        c_candidate,
        n_origins,
        n_labeled,
        delta_l_dir: refined,
        delta_l_dir_plain: plain,
        l_not_dir,
        n_ret,
    }
}

/// Incrementally maintained aux data equals the from-scratch sweep.
pub fn check_incremental(g: &MSGraph) -> Result<(), String> {
    let scratch = recompute_from_scratch(g).map_err(|e| e.to_string())?;
    let live = g.aux_snapshot();
    if live == scratch {
        return Ok(());
    }
    for (v, a) in &live {
        if scratch.get(v) != Some(a) {
            return Err(format!("{v}: incremental {a:?} vs scratch {:?}", scratch.get(v)));
        }
    }
    Err("vertex sets differ".into())
}

// ---------------------------------------------------------------------------
// Feasible assignments
// ---------------------------------------------------------------------------

/// One target's trajectory: its label if it has one, and the tracklet
/// pieces it walked through.
pub type Trajectory = (Option<TargetLabel>, Vec<PieceId>);
/// Trajectories of all targets, sorted.
pub type Assignment = Vec<Trajectory>;

#[derive(Clone)]
struct Trail {
    last: VertexId,
    label: Option<TargetLabel>,
    pieces: Vec<PieceId>,
}

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if items.len() < k {
        return vec![];
    }
    let mut out = Vec::new();
    for (i, x) in items.iter().enumerate() {
        for mut rest in combinations(&items[i + 1..], k - 1) {
            rest.insert(0, *x);
            out.push(rest);
        }
    }
    out
}

/// Every way of explaining the graph by target trajectories: each target
/// starts at a source, moves along edges, may stop anywhere, every vertex is
/// walked by exactly as many targets as it has members, and each label
/// belongs to exactly one target.
pub fn feasible_assignments(g: &MSGraph) -> BTreeSet<Assignment> {
    fn go(
        g: &MSGraph,
        order: &[VertexId],
        trails: &mut Vec<Trail>,
        used: &mut BTreeSet<TargetLabel>,
        out: &mut BTreeSet<Assignment>,
    ) {
        let Some((&v, rest)) = order.split_first() else {
            let mut a: Assignment = trails
                .iter()
                .map(|t| {
                    let mut p = t.pieces.clone();
                    p.sort_unstable();
                    (t.label, p)
                })
                .collect();
            a.sort();
            out.insert(a);
            return;
        };
        let vx = g.vertex(v).expect("live");
        let m = vx.member_count() as usize;
        let pieces: Vec<PieceId> = vx.tracklet().pieces().collect();
        let label = vx.label();
        if vx.parents().is_empty() {
            if label.is_some_and(|l| used.contains(&l)) {
                return;
            }
            for _ in 0..m {
                trails.push(Trail {
                    last: v,
                    label,
                    pieces: pieces.clone(),
                });
            }
            if let Some(l) = label {
                used.insert(l);
            }
            go(g, rest, trails, used, out);
            if let Some(l) = label {
                used.remove(&l);
            }
            trails.truncate(trails.len() - m);
            return;
        }
        let cands: Vec<usize> = (0..trails.len())
            .filter(|k| vx.parents().contains(&trails[*k].last))
            .collect();
        for combo in combinations(&cands, m) {
            let mut fresh = None;
            if let Some(l) = label {
                match trails[combo[0]].label {
                    Some(x) if x == l => {}
                    Some(_) => continue,
                    None if used.contains(&l) => continue,
                    None => fresh = Some(l),
                }
            }
            let saved: Vec<Trail> = combo.iter().map(|k| trails[*k].clone()).collect();
            for k in &combo {
                let t = &mut trails[*k];
                t.last = v;
                t.pieces.extend_from_slice(&pieces);
                t.label = t.label.or(label);
            }
            if let Some(l) = fresh {
                used.insert(l);
            }
            go(g, rest, trails, used, out);
            if let Some(l) = fresh {
                used.remove(&l);
            }
            for (k, s) in combo.iter().zip(saved) {
                trails[*k] = s;
            }
        }
    }
    let order = g.topological_order().expect("acyclic");
    let mut out = BTreeSet::new();
    go(g, &order, &mut Vec::new(), &mut BTreeSet::new(), &mut out);
    out
}

// ---------------------------------------------------------------------------
// A small ground-truth world driving the graph through camera events
// ---------------------------------------------------------------------------

pub struct World {
    pub rng: ChaCha8Rng,
    pub t: Step,
    next_entity: u64,
    next_target: u64,
    pub max_targets: u64,
    pub active: BTreeMap<EntityId, Vec<u64>>,
    /// Targets of every entity ever created.
    pub members: BTreeMap<EntityId, Vec<u64>>,
    pub p_label: f64,
}

impl World {
    pub fn new(seed: u64, max_targets: u64, p_label: f64) -> Self {
        World {
            rng: rng(seed),
            t: 0,
            next_entity: 1,
            next_target: 1,
            max_targets,
            active: BTreeMap::new(),
            members: BTreeMap::new(),
            p_label,
        }
    }

    fn fresh(&mut self, targets: Vec<u64>) -> EntityId {
        let e = EntityId(self.next_entity);
        self.next_entity += 1;
        self.members.insert(e, targets.clone());
        self.active.insert(e, targets);
        e
    }

    fn new_target(&mut self) -> u64 {
        self.next_target += 1;
        self.next_target - 1
    }

    fn can_enter(&self) -> bool {
        self.next_target <= self.max_targets
    }

    /// Every target has entered and left.
    pub fn exhausted(&self) -> bool {
        self.active.is_empty() && !self.can_enter()
    }

    fn pick(&mut self, n: usize) -> Vec<EntityId> {
        let ids: Vec<EntityId> = self.active.keys().copied().collect();
        ids.choose_multiple(&mut self.rng, n).copied().collect()
    }

    /// The next camera events. Labels are the true identity of a solo entity
    /// whose vertex is still unlabeled.
    pub fn step(&mut self, drv: &GraphDriver) -> Vec<ObsEvent> {
        self.t += 1;
        let t = self.t;
        let labelable: Vec<(EntityId, u64)> = self
            .active
            .iter()
            .filter(|(e, m)| {
                m.len() == 1
                    && drv
                        .vertex(**e)
                        .and_then(|v| drv.graph().vertex(v))
                        .is_some_and(|v| v.label().is_none())
            })
            .map(|(e, m)| (*e, m[0]))
            .collect();
        let compounds: Vec<EntityId> = self
            .active
            .iter()
            .filter(|(_, m)| m.len() > 1)
            .map(|(e, _)| *e)
            .collect();
        let n = self.active.len();
        let roll: f64 = self.rng.gen();

        if n == 0 || (self.can_enter() && roll < 0.2) {
            if !self.can_enter() {
                return vec![];
            }
            let z = self.new_target();
            let e = self.fresh(vec![z]);
            return vec![ObsEvent::Enter {
                t,
                entity: e,
                members: 1,
            }];
        }
        if !labelable.is_empty() && self.rng.gen_bool(self.p_label) {
            let (e, z) = *labelable.choose(&mut self.rng).expect("nonempty");
            return vec![ObsEvent::Label {
                t,
                entity: e,
                label: TargetLabel(z),
            }];
        }
        let roll: f64 = self.rng.gen();
        if n >= 2 && roll < 0.3 {
            let k = if n >= 3 && self.rng.gen_bool(0.2) { 3 } else { 2 };
            let es = self.pick(k);
            let mut targets = Vec::new();
            for e in &es {
                targets.extend(self.active.remove(e).expect("active"));
            }
            let into = self.fresh(targets);
            return vec![ObsEvent::Join { t, entities: es, into }];
        }
        if !compounds.is_empty() && roll < 0.55 {
            let e = *compounds.choose(&mut self.rng).expect("nonempty");
            let mut ms = self.active.remove(&e).expect("active");
            ms.shuffle(&mut self.rng);
            let cut = self.rng.gen_range(1..ms.len());
            let parts: Vec<(EntityId, u32)> = [ms[..cut].to_vec(), ms[cut..].to_vec()]
                .into_iter()
                .map(|p| {
                    let c = p.len() as u32;
                    (self.fresh(p), c)
                })
                .collect();
            return vec![ObsEvent::Split { t, entity: e, parts }];
        }
        if roll < 0.65 {
            let e = self.pick(1)[0];
            self.active.remove(&e);
            return vec![ObsEvent::Lost { t, entity: e }];
        }
        self.blind_gap()
    }

    fn blind_gap(&mut self) -> Vec<ObsEvent> {
        let t = self.t;
        let keep = if self.rng.gen_bool(0.7) {
            Some(self.pick(1)[0])
        } else {
            None
        };
        let closed: Vec<EntityId> = self.active.keys().copied().filter(|e| Some(*e) != keep).collect();
        self.t += 3;
        let back = self.t;
        let mut items = Vec::new();
        for e in &closed {
            let ms = self.active.remove(e).expect("active");
            if self.rng.gen_bool(0.1) {
                continue;
            }
            let groups = if ms.len() > 1 && self.rng.gen_bool(0.25) {
                let cut = self.rng.gen_range(1..ms.len());
                vec![ms[..cut].to_vec(), ms[cut..].to_vec()]
            } else {
                vec![ms]
            };
            for grp in groups {
                let mut candidates = vec![*e];
                for o in &closed {
                    if o != e && self.rng.gen_bool(0.35) {
                        candidates.push(*o);
                    }
                }
                candidates.sort();
                let members = grp.len() as u32;
                let entity = self.fresh(grp);
                items.push(Reappearance {
                    entity,
                    members,
                    candidates,
                });
            }
        }
        if self.can_enter() && self.rng.gen_bool(0.2) {
            let z = self.new_target();
            let entity = self.fresh(vec![z]);
            items.push(Reappearance {
                entity,
                members: 1,
                candidates: vec![],
            });
        }
        vec![ObsEvent::BlindGap { t, keep }, ObsEvent::Reappear { t: back, items }]
    }

    /// Each target's true trajectory in the graph's terms.
    pub fn truth(&self, drv: &GraphDriver) -> Assignment {
        let labels: BTreeSet<u64> = drv.graph().vertices().filter_map(|v| v.label()).map(|l| l.0).collect();
        let mut by_target: BTreeMap<u64, Vec<PieceId>> = BTreeMap::new();
        for (p, e) in drv.piece_entities() {
            for z in &self.members[e] {
                by_target.entry(*z).or_default().push(*p);
            }
        }
        let mut a: Assignment = by_target
            .into_iter()
            .map(|(z, mut ps)| {
                ps.sort_unstable();
                (labels.contains(&z).then_some(TargetLabel(z)), ps)
            })
            .collect();
        a.sort();
        a
    }
}

pub fn graph_cfg(untangle: bool) -> GraphConfig {
    GraphConfig {
        max_blind_gap: 7,
        untangle,
    }
}

/// Drives a random world for `events` camera events, checking incremental
/// aux maintenance after each one. Returns how many events were checked.
pub fn incremental_run(seed: u64, max_targets: u64, events: usize) -> Result<usize, String> {
    let mut w = World::new(seed, max_targets, 0.15);
    let mut d = GraphDriver::new(graph_cfg(true), false);
    let mut checked = 0;
    while checked < events && !w.exhausted() {
        for ev in w.step(&d) {
            d.apply(&ev).map_err(|e| format!("seed {seed}: {e}"))?;
            check_incremental(d.graph()).map_err(|e| format!("seed {seed} after {ev:?}: {e}"))?;
            checked += 1;
        }
    }
    Ok(checked)
}

/// Labels in a small random world, untangling by hand, and compares the
/// feasible assignments around every untangle. Returns, per untangle
/// compared, the vertex count and the number of feasible assignments.
pub fn untangle_instance(seed: u64, max_vertices: usize) -> Result<Vec<(usize, usize)>, String> {
    let mut w = World::new(seed, 5, 0.25);
    let mut d = GraphDriver::new(graph_cfg(false), false);
    let mut compared = Vec::new();
    for _ in 0..60 {
        for ev in w.step(&d) {
            let out = d.apply(&ev).map_err(|e| format!("seed {seed}: {e}"))?;
            let Some(out) = out else { continue };
            let (MatchKind::Direct(u) | MatchKind::Indirect(u)) = out.kind else {
                continue;
            };
            if d.graph().vertex_count() > max_vertices {
                return Ok(compared);
            }
            let before = feasible_assignments(d.graph());
            let truth = w.truth(&d);
            if !before.contains(&truth) {
                return Err(format!(
                    "seed {seed}: truth {truth:?} not among {} feasible assignments",
                    before.len()
                ));
            }
            if d.graph_mut().untangle(u, out.labeled).is_err() {
                continue;
            }
            let after = feasible_assignments(d.graph());
            if before != after {
                let lost: Vec<_> = before.difference(&after).take(2).collect();
                let gained: Vec<_> = after.difference(&before).take(2).collect();
                return Err(format!("seed {seed} at {ev:?}: lost {lost:?} gained {gained:?}"));
            }
            compared.push((d.graph().vertex_count(), before.len()));
        }
        if d.graph().vertex_count() > max_vertices {
            break;
        }
    }
    Ok(compared)
}
