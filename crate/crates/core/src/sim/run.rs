use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::driver::{GraphDriver, ObsEvent, Reappearance};
use super::scene::{generate_scene, EntityId, EntityState, Frame, ScenarioScript, SceneConfig, TargetId, WorldEvent};
use super::tracker::{face_oracle, gate, predict, Vanished};
use crate::error::SimError;
use crate::graph::{GraphConfig, MSGraph, PieceId, Step, VertexId};
use crate::metrics;
use crate::scheduler::{choose, Decision, SchedulerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Debug switch forwarded to the graph.
    pub untangle: bool,
    /// Keep the graph's event journal.
    pub journal: bool,
    /// Fail the run when the final graph contradicts ground truth.
    pub verify: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            untangle: true,
            journal: false,
            verify: true,
        }
    }
}

/// What really happened, for evaluation only.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub script: ScenarioScript,
    /// Steps at which each target was seen by the camera, with the piece
    /// that recorded the observation.
    pub observed: BTreeMap<TargetId, Vec<(Step, PieceId)>>,
    /// Targets whose tracklet each piece is.
    pub piece_owners: BTreeMap<PieceId, BTreeSet<TargetId>>,
}

impl GroundTruth {
    pub fn owners(&self, p: PieceId) -> &BTreeSet<TargetId> {
        &self.piece_owners[&p]
    }

    pub fn observation_count(&self) -> u64 {
        self.observed.values().map(|v| v.len() as u64).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub m: f64,
    /// The same objective from the per-observation counter.
    pub m_counter: f64,
    pub n_js: u64,
    pub labelings_attempted: u64,
    pub labelings_succeeded: u64,
    pub vertices: u64,
    pub edges: u64,
    pub ideal_bound: u64,
    pub n_targets: u64,
    pub vertices_created: u64,
    pub aux_writes: u64,
    pub untangles: u64,
    pub wall_time: f64,
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub graph: MSGraph,
    pub truth: GroundTruth,
    pub metrics: RunMetrics,
    /// Everything the camera reported, labels included.
    pub log: Vec<ObsEvent>,
    pub decisions: Vec<(Step, Decision)>,
}

struct Zoom {
    target: TargetId,
    entity: EntityId,
    e_s: bool,
    stayed: bool,
    lost: bool,
    return_at: Step,
    vanished: Vec<Vanished>,
    last: EntityState,
    last_seen: Step,
}

struct Run<'a> {
    scene: &'a SceneConfig,
    drv: GraphDriver,
    log: Vec<ObsEvent>,
    observed: BTreeMap<TargetId, Vec<(Step, PieceId)>>,
    last_entity: HashMap<TargetId, EntityId>,
}

impl Run<'_> {
    fn emit(&mut self, ev: ObsEvent) -> Result<(), SimError> {
        self.drv.apply(&ev)?;
        self.log.push(ev);
        Ok(())
    }

    fn observe(&mut self, t: Step, e: &EntityState) {
        let piece = self.drv.piece(e.id).expect("observed entity is tracked");
        for m in &e.members {
            self.observed.entry(*m).or_default().push((t, piece));
            self.last_entity.insert(*m, e.id);
        }
    }

    fn world_events(&mut self, frame: &Frame, members: &BTreeMap<EntityId, Vec<TargetId>>) -> Result<(), SimError> {
        let t = frame.t;
        for ev in &frame.events {
            let obs = match ev {
                WorldEvent::Exit { entity } => ObsEvent::Lost { t, entity: *entity },
                WorldEvent::Split { entity, parts } => ObsEvent::Split {
                    t,
                    entity: *entity,
                    parts: parts.iter().map(|p| (*p, members[p].len() as u32)).collect(),
                },
                WorldEvent::Join { entities, into } => ObsEvent::Join {
                    t,
                    entities: entities.clone(),
                    into: *into,
                },
                WorldEvent::Enter { entity, .. } => ObsEvent::Enter {
                    t,
                    entity: *entity,
                    members: 1,
                },
            };
            self.emit(obs)?;
        }
        Ok(())
    }

    /// Camera back to the wide view at `frame.t`: everything visible is
    /// detected again and linked to what vanished.
    fn reappear(&mut self, frame: &Frame, z: &mut Zoom) -> Result<(), SimError> {
        let t = frame.t;
        let continuing = !z.lost && frame.entity(z.entity).is_some();
        if !z.lost && !continuing {
            self.emit(ObsEvent::Lost { t, entity: z.entity })?;
            z.lost = true;
            z.vanished.push(vanished_of(&z.last, z.last_seen));
        }
        let vanished_ids: BTreeSet<EntityId> = z.vanished.iter().map(|v| v.entity).collect();
        let present: BTreeSet<TargetId> = frame.entities.iter().flat_map(|e| e.members.iter().copied()).collect();
        let mut items = Vec::new();
        for e in &frame.entities {
            if continuing && e.id == z.entity {
                continue;
            }
            let known: Vec<EntityId> = e
                .members
                .iter()
                .filter_map(|m| self.last_entity.get(m).copied())
                .collect();
            if !known.is_empty() && known.len() != e.members.len() {
                return Err(SimError::Invariant {
                    t,
                    what: format!("{} mixes unseen and tracked targets", e.id),
                });
            }
            let mut truth: Vec<EntityId> = known.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
            truth.retain(|x| vanished_ids.contains(x));
            let candidates = gate(self.scene, t, e, &truth, &z.vanished, |m| present.contains(&m));
            items.push(Reappearance {
                entity: e.id,
                members: e.members.len() as u32,
                candidates,
            });
        }
        self.emit(ObsEvent::Reappear { t, items })?;
        if let Some(label) = face_oracle(z.target, z.e_s, z.stayed) {
            self.emit(ObsEvent::Label {
                t,
                entity: z.entity,
                label,
            })?;
        }
        Ok(())
    }

    fn check_conservation(&self, frame: &Frame) -> Result<(), SimError> {
        let g = self.drv.graph();
        let active: u64 = g
            .frontier()
            .iter()
            .map(|v| g.vertex(*v).expect("live").member_count() as u64)
            .sum();
        let visible: u64 = frame.entities.iter().map(|e| e.members.len() as u64).sum();
        if active != visible {
            return Err(SimError::Invariant {
                t: frame.t,
                what: format!("{active} tracked members for {visible} visible targets"),
            });
        }
        Ok(())
    }
}

fn vanished_of(e: &EntityState, seen: Step) -> Vanished {
    Vanished {
        entity: e.id,
        members: e.members.clone(),
        pos: e.pos,
        vel: e.vel,
        seen,
    }
}

/// Runs one closed-loop simulation with default options.
pub fn run_simulation(scene: &SceneConfig, sched: &SchedulerConfig) -> Result<SimOutcome, SimError> {
    run_with(scene, sched, RunOptions::default())
}

pub fn run_with(scene: &SceneConfig, sched: &SchedulerConfig, opts: RunOptions) -> Result<SimOutcome, SimError> {
    let started = Instant::now();
    sched.validate().map_err(SimError::Config)?;
    let script = generate_scene(scene)?;
    let d = scene.zoom_duration;
    let horizon = sched.sink_horizon.unwrap_or(2 * d);
    let gcfg = GraphConfig {
        max_blind_gap: d + 2,
        untangle: opts.untangle,
    };
    let mut run = Run {
        scene,
        drv: GraphDriver::new(gcfg, opts.journal),
        log: Vec::new(),
        observed: BTreeMap::new(),
        last_entity: HashMap::new(),
    };
    let mut decisions = Vec::new();
    let mut zoom: Option<Zoom> = None;
    let mut attempted = 0;

    for frame in &script.frames {
        let t = frame.t;
        match zoom.as_mut() {
            Some(z) if t < z.return_at => {
                z.stayed &= frame.entities.iter().any(|e| e.members.contains(&z.target));
                if z.lost {
                    continue;
                }
                match frame.entity(z.entity) {
                    Some(e) => {
                        z.last = e.clone();
                        z.last_seen = t;
                        run.observe(t, e);
                    }
                    None => {
                        run.emit(ObsEvent::Lost { t, entity: z.entity })?;
                        z.lost = true;
                        z.vanished.push(vanished_of(&z.last, z.last_seen));
                    }
                }
                continue;
            }
            Some(z) => {
                run.reappear(frame, z)?;
                zoom = None;
            }
            None => run.world_events(frame, &script.members)?,
        }

        for e in &frame.entities {
            run.observe(t, e);
        }
        run.check_conservation(frame)?;
        if frame.entities.is_empty() {
            continue;
        }

        let visible: Vec<(VertexId, &EntityState)> = frame
            .entities
            .iter()
            .map(|e| (run.drv.vertex(e.id).expect("tracked"), e))
            .collect();
        let preds = predict(scene, t, &visible, horizon);
        let ids: Vec<VertexId> = visible.iter().map(|x| x.0).collect();
        let decision = choose(run.drv.graph(), &ids, &preds, sched);
        decisions.push((t, decision));
        if let Decision::ZoomIn(v) = decision {
            let e = visible.iter().find(|x| x.0 == v).expect("chosen among visible").1;
            attempted += 1;
            run.emit(ObsEvent::BlindGap { t, keep: Some(e.id) })?;
            zoom = Some(Zoom {
                target: e.members[0],
                entity: e.id,
                e_s: preds.by_vertex[&v].e_s,
                stayed: true,
                lost: false,
                return_at: t + d + 1,
                vanished: frame
                    .entities
                    .iter()
                    .filter(|o| o.id != e.id)
                    .map(|o| vanished_of(o, t))
                    .collect(),
                last: e.clone(),
                last_seen: t,
            });
        }
    }

    let Run { drv, log, observed, .. } = run;
    let piece_owners: BTreeMap<PieceId, BTreeSet<TargetId>> = drv
        .piece_entities()
        .iter()
        .map(|(p, e)| (*p, script.members[e].iter().copied().collect()))
        .collect();
    let graph = drv.into_graph();
    let truth = GroundTruth {
        script,
        observed,
        piece_owners,
    };
    let last_t = truth.script.frames.last().map_or(0, |f| f.t);
    if opts.verify && !graph.frontier().is_empty() {
        return Err(SimError::Invariant {
            t: last_t,
            what: format!("{} tracklets still open at the end", graph.frontier().len()),
        });
    }
    if opts.verify {
        if let Err(what) = metrics::check_owner_consistency(&graph, &truth) {
            return Err(SimError::Invariant { t: last_t, what });
        }
    }

    let succeeded = log.iter().filter(|e| matches!(e, ObsEvent::Label { .. })).count() as u64;
    let stats = graph.stats();
    let metrics = RunMetrics {
        m: metrics::compute_m(&graph, &truth),
        m_counter: metrics::coverage_counter(&graph, &truth),
        n_js: metrics::compute_njs(&truth.script),
        labelings_attempted: attempted,
        labelings_succeeded: succeeded,
        vertices: graph.vertex_count() as u64,
        edges: graph.edge_count() as u64,
        ideal_bound: metrics::ideal_bound(&graph),
        n_targets: truth.script.targets.len() as u64,
        vertices_created: stats.vertices_created,
        aux_writes: stats.aux_writes,
        untangles: stats.untangles,
        wall_time: started.elapsed().as_secs_f64(),
    };
    Ok(SimOutcome {
        graph,
        truth,
        metrics,
        log,
        decisions,
    })
}
