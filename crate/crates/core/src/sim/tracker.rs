//! Tracker stand-in: motion predictions for the scheduler, candidate gating
//! after a blind gap, and the face-capture oracle.

use std::collections::BTreeMap;

use super::scene::{dist, EntityId, EntityState, SceneConfig, TargetId, Vec2};
use crate::graph::{Step, TargetLabel, VertexId};
use crate::scheduler::{Prediction, TrackerPredictions};

/// Faces are visible to the camera at the south edge when walking south.
pub fn faces_camera(vel: Vec2) -> bool {
    vel[1] < 0.0
}

/// Closest approach of two linear motions within `(0, horizon]`, if they
/// are getting closer now.
pub fn closest_approach(pa: Vec2, va: Vec2, pb: Vec2, vb: Vec2, horizon: f64) -> Option<f64> {
    let p = [pb[0] - pa[0], pb[1] - pa[1]];
    let w = [vb[0] - va[0], vb[1] - va[1]];
    let pw = p[0] * w[0] + p[1] * w[1];
    let ww = w[0] * w[0] + w[1] * w[1];
    if pw >= 0.0 || ww == 0.0 {
        return None;
    }
    let tau = (-pw / ww).min(horizon);
    Some(dist([0.0, 0.0], [p[0] + tau * w[0], p[1] + tau * w[1]]))
}

/// Predictions for every visible entity, keyed by the vertex tracking it.
pub fn predict(cfg: &SceneConfig, t: Step, visible: &[(VertexId, &EntityState)], horizon: Step) -> TrackerPredictions {
    let mut by_vertex = BTreeMap::new();
    for (v, e) in visible {
        let to_exit = cfg.steps_to_exit(e.pos, e.vel);
        let join_flag = visible.iter().any(|(u, o)| {
            u != v && closest_approach(e.pos, e.vel, o.pos, o.vel, horizon as f64).is_some_and(|d| d < cfg.join_radius)
        });
        by_vertex.insert(
            *v,
            Prediction {
                e_s: to_exit > cfg.zoom_duration && faces_camera(e.vel),
                exit_at: t.saturating_add(to_exit),
                join_flag,
            },
        );
    }
    TrackerPredictions {
        now: t,
        zoom_duration: cfg.zoom_duration,
        by_vertex,
    }
}

/// An entity last seen at `seen` before the camera zoomed in.
#[derive(Debug, Clone)]
pub struct Vanished {
    pub entity: EntityId,
    pub members: Vec<TargetId>,
    pub pos: Vec2,
    pub vel: Vec2,
    pub seen: Step,
}

impl Vanished {
    pub fn predicted(&self, t: Step) -> Vec2 {
        let dt = (t - self.seen) as f64;
        [self.pos[0] + dt * self.vel[0], self.pos[1] + dt * self.vel[1]]
    }
}

/// Candidate predecessors of an entity seen again at `t`: its true
/// predecessors plus every vanished entity whose predicted position falls
/// within the gate and whose targets are still in the scene.
pub fn gate(
    cfg: &SceneConfig,
    t: Step,
    seen: &EntityState,
    truth: &[EntityId],
    vanished: &[Vanished],
    in_scene: impl Fn(TargetId) -> bool,
) -> Vec<EntityId> {
    let mut out: Vec<EntityId> = truth.to_vec();
    if truth.is_empty() {
        // Entered during the gap: nothing to link.
        return out;
    }
    for v in vanished {
        if out.contains(&v.entity) || !v.members.iter().any(|m| in_scene(*m)) {
            continue;
        }
        if dist(v.predicted(t), seen.pos) <= cfg.gate_radius {
            out.push(v.entity);
        }
    }
    out.sort();
    out
}

/// Face capture succeeds when it was expected to at decision time and the
/// target stayed in the scene for the whole zoom.
pub fn face_oracle(target: TargetId, e_s_at_decision: bool, stayed: bool) -> Option<TargetLabel> {
    (e_s_at_decision && stayed).then_some(TargetLabel(target))
}
