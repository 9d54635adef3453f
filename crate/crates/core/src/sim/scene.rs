//! Scene configuration and the pre-scripted world.
//!
//! The world does not depend on the camera: targets walk, meet, group and
//! split the same way whatever the camera does, so two policies run on the
//! same seed see the same scene.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::graph::Step;

/// Ground-truth identity of one target. Face labels carry the same number.
pub type TargetId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(pub u64);

impl std::fmt::Display for EntityId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "e{}", self.0)
    }
}

pub type Vec2 = [f64; 2];

pub fn dist(a: Vec2, b: Vec2) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// A target given explicitly instead of drawn at random.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub enter_at: Step,
    pub pos: Vec2,
    /// Distance per step.
    pub vel: Vec2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub seed: u64,
    /// Roads per diagonal direction.
    pub grid_size: u32,
    /// Width and height.
    pub arena: Vec2,
    pub n_targets: u32,
    /// Entrance steps are drawn from `[start, end)`.
    pub entry_window: [Step; 2],
    pub speed_range: Vec2,
    pub p_join: f64,
    /// Group lifetime before a split, inclusive range.
    pub join_duration: [Step; 2],
    pub zoom_duration: Step,
    pub join_radius: f64,
    pub gate_radius: f64,
    /// When nonempty, these targets replace the random ones.
    pub targets: Vec<TargetSpec>,
    pub max_steps: Step,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            seed: 0,
            grid_size: 8,
            arena: [100.0, 100.0],
            n_targets: 10,
            entry_window: [0, 200],
            speed_range: [0.8, 1.6],
            p_join: 0.5,
            join_duration: [5, 15],
            zoom_duration: 5,
            join_radius: 1.5,
            gate_radius: 4.0,
            targets: Vec::new(),
            max_steps: 10_000,
        }
    }
}

impl SceneConfig {
    /// Three targets: two of them meet at step 6, walk together for eight
    /// steps and part; the third walks alone and leaves first.
    pub fn scenario_a() -> Self {
        let k = 3.4;
        SceneConfig {
            n_targets: 3,
            p_join: 1.0,
            join_duration: [8, 8],
            join_radius: 2.0,
            targets: vec![
                TargetSpec {
                    enter_at: 0,
                    pos: [30.0, 100.0],
                    vel: [k, -k],
                },
                TargetSpec {
                    enter_at: 0,
                    pos: [70.0, 100.0],
                    vel: [-k, -k],
                },
                TargetSpec {
                    enter_at: 0,
                    pos: [0.0, 40.0],
                    vel: [2.5, -2.5],
                },
            ],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        if self.grid_size == 0 {
            return bad("grid_size must be positive".into());
        }
        if !(self.arena[0] > 0.0 && self.arena[1] > 0.0) {
            return bad(format!("arena must be positive, got {:?}", self.arena));
        }
        if self.targets.is_empty() && self.n_targets > 0 && self.entry_window[0] >= self.entry_window[1] {
            return bad(format!("empty entry window {:?}", self.entry_window));
        }
        if !(self.speed_range[0] > 0.0 && self.speed_range[0] <= self.speed_range[1]) {
            return bad(format!("bad speed range {:?}", self.speed_range));
        }
        if !(0.0..=1.0).contains(&self.p_join) {
            return bad(format!("p_join {} outside [0, 1]", self.p_join));
        }
        if self.join_duration[0] == 0 || self.join_duration[0] > self.join_duration[1] {
            return bad(format!("bad join duration {:?}", self.join_duration));
        }
        if self.zoom_duration == 0 {
            return bad("zoom_duration must be positive".into());
        }
        if !(self.join_radius > 0.0 && self.gate_radius > 0.0) {
            return bad("radii must be positive".into());
        }
        Ok(())
    }

    pub fn contains(&self, p: Vec2) -> bool {
        const EPS: f64 = 1e-9;
        p[0] >= -EPS && p[0] <= self.arena[0] + EPS && p[1] >= -EPS && p[1] <= self.arena[1] + EPS
    }

    /// Steps until `pos` moving at `vel` leaves the arena: the first `k > 0`
    /// with `pos + k * vel` outside.
    pub fn steps_to_exit(&self, pos: Vec2, vel: Vec2) -> Step {
        let mut t = f64::INFINITY;
        for i in 0..2 {
            if vel[i] > 0.0 {
                t = t.min((self.arena[i] - pos[i]) / vel[i]);
            } else if vel[i] < 0.0 {
                t = t.min(-pos[i] / vel[i]);
            }
        }
        if !t.is_finite() {
            return Step::MAX;
        }
        // Strictly beyond the boundary.
        let mut k = (t.max(0.0).floor() as Step).saturating_add(1);
        while k > 1 && !self.contains([pos[0] + (k - 1) as f64 * vel[0], pos[1] + (k - 1) as f64 * vel[1]]) {
            k -= 1;
        }
        while self.contains([pos[0] + k as f64 * vel[0], pos[1] + k as f64 * vel[1]]) {
            k += 1;
        }
        k
    }

    /// Entry point and unit direction of road `k` of one diagonal family.
    /// Every road is walked downwards, towards the camera.
    fn road(&self, down_right: bool, k: u32) -> (Vec2, Vec2) {
        let [w, h] = self.arena;
        let frac = (k as f64 + 0.5) / self.grid_size as f64;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        if down_right {
            // x + y = c
            let c = frac * (w + h);
            let start = if c >= h { [(c - h).min(w), h] } else { [0.0, c] };
            (start, [s, -s])
        } else {
            // x - y = c
            let c = -h + frac * (w + h);
            let start = if h + c <= w { [(h + c).max(0.0), h] } else { [w, w - c] };
            (start, [-s, -s])
        }
    }

    fn random_targets(&self, rng: &mut ChaCha8Rng) -> Vec<TargetSpec> {
        (0..self.n_targets)
            .map(|_| {
                let enter_at = rng.gen_range(self.entry_window[0]..self.entry_window[1]);
                let down_right = rng.gen_bool(0.5);
                let k = rng.gen_range(0..self.grid_size);
                let speed = rng.gen_range(self.speed_range[0]..=self.speed_range[1]);
                let (pos, dir) = self.road(down_right, k);
                TargetSpec {
                    enter_at,
                    pos,
                    vel: [dir[0] * speed, dir[1] * speed],
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityState {
    pub id: EntityId,
    /// Targets walking together; the first one leads.
    pub members: Vec<TargetId>,
    pub pos: Vec2,
    pub vel: Vec2,
}

/// What happened in the world at one step, in the order exit, split, join,
/// enter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WorldEvent {
    Exit { entity: EntityId },
    Split { entity: EntityId, parts: Vec<EntityId> },
    Join { entities: Vec<EntityId>, into: EntityId },
    Enter { entity: EntityId, target: TargetId },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub t: Step,
    /// Entities present at `t`, after this step's events, ordered by id.
    pub entities: Vec<EntityState>,
    pub events: Vec<WorldEvent>,
}

impl Frame {
    pub fn entity(&self, id: EntityId) -> Option<&EntityState> {
        self.entities
            .binary_search_by_key(&id, |e| e.id)
            .ok()
            .map(|i| &self.entities[i])
    }
}

/// The complete world timeline of one scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioScript {
    pub targets: Vec<TargetSpec>,
    pub frames: Vec<Frame>,
    /// Members of every entity that ever existed.
    pub members: BTreeMap<EntityId, Vec<TargetId>>,
}

impl ScenarioScript {
    pub fn target_ids(&self) -> impl Iterator<Item = TargetId> {
        1..=self.targets.len() as TargetId
    }

    pub fn join_split_log(&self) -> impl Iterator<Item = (Step, &WorldEvent)> {
        self.frames.iter().flat_map(|f| {
            f.events
                .iter()
                .filter(|e| matches!(e, WorldEvent::Join { .. } | WorldEvent::Split { .. }))
                .map(move |e| (f.t, e))
        })
    }
}

struct Live {
    state: EntityState,
    created: Step,
    split_at: Option<Step>,
}

/// Builds the world timeline. Deterministic in `cfg`.
pub fn generate_scene(cfg: &SceneConfig) -> Result<ScenarioScript, SimError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let targets = if cfg.targets.is_empty() {
        cfg.random_targets(&mut rng)
    } else {
        cfg.targets.clone()
    };
    let own_vel = |m: TargetId| targets[(m - 1) as usize].vel;
    // A target cannot join before a blind gap started at its entrance is over.
    let ready_at = |m: TargetId| targets[(m - 1) as usize].enter_at + cfg.zoom_duration + 1;
    let last_entry = targets.iter().map(|t| t.enter_at).max();

    let mut next_entity = 1u64;
    let mut fresh = || {
        let e = EntityId(next_entity);
        next_entity += 1;
        e
    };
    let mut members: BTreeMap<EntityId, Vec<TargetId>> = BTreeMap::new();
    let mut live: Vec<Live> = Vec::new();
    let mut frames = Vec::new();

    let mut t: Step = 0;
    loop {
        let mut events = Vec::new();
        let prev: BTreeMap<EntityId, Vec2> = live.iter().map(|l| (l.state.id, l.state.pos)).collect();
        for l in &mut live {
            l.state.pos[0] += l.state.vel[0];
            l.state.pos[1] += l.state.vel[1];
        }

        live.retain(|l| {
            let inside = cfg.contains(l.state.pos);
            if !inside {
                events.push(WorldEvent::Exit { entity: l.state.id });
            }
            inside
        });

        let mut i = 0;
        while i < live.len() {
            if live[i].split_at != Some(t) {
                i += 1;
                continue;
            }
            let old = live.remove(i);
            let mut ms = old.state.members.clone();
            let k = rng.gen_range(1..ms.len());
            ms.shuffle(&mut rng);
            let (detached, rest) = ms.split_at(k);
            let mut parts = Vec::new();
            for group in [rest, detached] {
                let mut group = group.to_vec();
                // Keep the original walking order inside each part.
                group.sort_by_key(|m| old.state.members.iter().position(|x| x == m));
                let id = fresh();
                let split_at =
                    (group.len() > 1).then(|| t + rng.gen_range(cfg.join_duration[0]..=cfg.join_duration[1]));
                members.insert(id, group.clone());
                parts.push(id);
                live.insert(
                    i,
                    Live {
                        state: EntityState {
                            id,
                            vel: own_vel(group[0]),
                            members: group,
                            pos: old.state.pos,
                        },
                        created: t,
                        split_at,
                    },
                );
                i += 1;
            }
            events.push(WorldEvent::Split {
                entity: old.state.id,
                parts,
            });
        }

        let mut pairs = Vec::new();
        for a in 0..live.len() {
            for b in a + 1..live.len() {
                let (la, lb) = (&live[a], &live[b]);
                if la.created == t || lb.created == t {
                    continue;
                }
                if la
                    .state
                    .members
                    .iter()
                    .chain(&lb.state.members)
                    .any(|m| ready_at(*m) > t)
                {
                    continue;
                }
                let d = dist(la.state.pos, lb.state.pos);
                let d_prev = dist(prev[&la.state.id], prev[&lb.state.id]);
                if d < cfg.join_radius && d_prev >= cfg.join_radius {
                    pairs.push((d, la.state.id, lb.state.id));
                }
            }
        }
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        let mut consumed = Vec::new();
        for (_, a, b) in pairs {
            let go = rng.gen_bool(cfg.p_join);
            if !go || consumed.contains(&a) || consumed.contains(&b) {
                continue;
            }
            consumed.extend([a, b]);
            let ia = live.iter().position(|l| l.state.id == a).expect("live");
            let la = live.remove(ia);
            let ib = live.iter().position(|l| l.state.id == b).expect("live");
            let lb = live.remove(ib);
            let id = fresh();
            let mut ms = la.state.members.clone();
            ms.extend(&lb.state.members);
            members.insert(id, ms.clone());
            live.push(Live {
                state: EntityState {
                    id,
                    members: ms,
                    pos: la.state.pos,
                    vel: la.state.vel,
                },
                created: t,
                split_at: Some(t + rng.gen_range(cfg.join_duration[0]..=cfg.join_duration[1])),
            });
            events.push(WorldEvent::Join {
                entities: vec![a, b],
                into: id,
            });
        }

        for (i, spec) in targets.iter().enumerate() {
            if spec.enter_at != t {
                continue;
            }
            let target = i as TargetId + 1;
            let id = fresh();
            members.insert(id, vec![target]);
            live.push(Live {
                state: EntityState {
                    id,
                    members: vec![target],
                    pos: spec.pos,
                    vel: spec.vel,
                },
                created: t,
                split_at: None,
            });
            events.push(WorldEvent::Enter { entity: id, target });
        }

        live.sort_by_key(|l| l.state.id);
        frames.push(Frame {
            t,
            entities: live.iter().map(|l| l.state.clone()).collect(),
            events,
        });

        let done = live.is_empty() && last_entry.is_none_or(|e| t >= e);
        if done {
            break;
        }
        if t >= cfg.max_steps {
            return Err(SimError::Config(format!(
                "scene still populated after max_steps = {}",
                cfg.max_steps
            )));
        }
        t += 1;
    }

    Ok(ScenarioScript {
        targets,
        frames,
        members,
    })
}
