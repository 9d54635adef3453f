//! Zoom-in target selection.
//!
//! In zoom-out mode the camera either stays wide or zooms on one visible,
//! unlabeled solo target. The graph-aware policy scores each candidate by
//! how much tracking information its label is expected to add; the baseline
//! simply grabs whoever is about to leave.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::graph::{MSGraph, Step, VertexId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    #[default]
    Msg,
    Naive,
}

impl std::str::FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "msg" => Ok(Policy::Msg),
            "naive" => Ok(Policy::Naive),
            other => Err(format!("unknown policy `{other}` (expected msg or naive)")),
        }
    }
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Policy::Msg => "msg",
            Policy::Naive => "naive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchedulerConfig {
    /// Zoom-out score: zoom only when the best target beats it.
    pub s_zo: f64,
    pub alpha_source: f64,
    pub alpha_default: f64,
    pub beta_sink: f64,
    pub beta_default: f64,
    /// Use the labeled-origin gain that discounts already labeled forward
    /// chains.
    pub refined_delta: bool,
    pub policy: Policy,
    /// A target predicted to exit within this many steps, with no join in
    /// between, is an expected sink. `None` means twice the zoom duration.
    pub sink_horizon: Option<Step>,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig {
            s_zo: 0.5,
            alpha_source: 2.0,
            alpha_default: 1.0,
            beta_sink: 2.0,
            beta_default: 1.0,
            refined_delta: true,
            policy: Policy::Msg,
            sink_horizon: None,
        }
    }
}

impl SchedulerConfig {
    pub fn naive() -> Self {
        SchedulerConfig {
            policy: Policy::Naive,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let w = [self.alpha_source, self.alpha_default, self.beta_sink, self.beta_default];
        if w.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(format!("scheduler weights must be positive, got {w:?}"));
        }
        if self.s_zo.is_nan() || self.s_zo < 0.0 {
            return Err(format!("s_zo must be nonnegative, got {}", self.s_zo));
        }
        Ok(())
    }
}

/// What the tracker expects to happen to one visible target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    /// A zoom started now is expected to capture the face.
    pub e_s: bool,
    /// Step at which the target is expected to leave the scene.
    pub exit_at: Step,
    /// The target is expected to join another one soon.
    pub join_flag: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrackerPredictions {
    pub now: Step,
    /// Zoom duration the predictions were made for.
    pub zoom_duration: Step,
    pub by_vertex: BTreeMap<VertexId, Prediction>,
}

impl TrackerPredictions {
    pub fn get(&self, v: VertexId) -> Option<&Prediction> {
        self.by_vertex.get(&v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub vertex: VertexId,
    pub e_s: bool,
    pub join_flag: bool,
    pub s_f: f64,
    pub s_p: f64,
    pub alpha: f64,
    pub beta: f64,
    pub s_l: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "decision", content = "vertex", rename_all = "snake_case")]
pub enum Decision {
    StayZoomedOut,
    ZoomIn(VertexId),
}

fn expected_sink(p: &Prediction, preds: &TrackerPredictions, cfg: &SchedulerConfig) -> bool {
    let h = cfg.sink_horizon.unwrap_or(2 * preds.zoom_duration);
    !p.join_flag && p.exit_at <= preds.now.saturating_add(h)
}

/// Labeling score of one active unlabeled solo vertex.
///
/// Panics if `v` is not a live vertex or has no prediction.
pub fn score_vertex(graph: &MSGraph, v: VertexId, preds: &TrackerPredictions, cfg: &SchedulerConfig) -> ScoreBreakdown {
    let vx = graph.vertex(v).expect("scored vertex is live");
    debug_assert!(vx.is_solo() && vx.label().is_none());
    let p = preds.get(v).expect("prediction for every visible vertex");
    let aux = graph.aux(v).expect("live");
    let n_o = aux.n_origins.max(1) as f64;
    let s_f = if p.join_flag {
        aux.n_not_labeled as f64 / n_o
    } else {
        0.0
    };
    let gain = aux.delta(cfg.refined_delta).saturating_add(aux.l_not_dir);
    let s_p = gain as f64 / n_o;
    let alpha = if vx.parents().is_empty() {
        cfg.alpha_source
    } else {
        cfg.alpha_default
    };
    let beta = if expected_sink(p, preds, cfg) {
        cfg.beta_sink
    } else {
        cfg.beta_default
    };
    let s_l = if p.e_s { alpha * s_f + beta * s_p } else { 0.0 };
    ScoreBreakdown {
        vertex: v,
        e_s: p.e_s,
        join_flag: p.join_flag,
        s_f,
        s_p,
        alpha,
        beta,
        s_l,
    }
}

fn eligible<'a>(
    graph: &'a MSGraph,
    visible: &'a [VertexId],
    preds: &'a TrackerPredictions,
) -> impl Iterator<Item = VertexId> + 'a {
    visible.iter().copied().filter(move |v| {
        graph
            .vertex(*v)
            .is_some_and(|x| x.is_solo() && x.label().is_none() && preds.get(*v).is_some())
    })
}

/// Scores of every eligible visible vertex, in `visible` order.
pub fn score_all(
    graph: &MSGraph,
    visible: &[VertexId],
    preds: &TrackerPredictions,
    cfg: &SchedulerConfig,
) -> Vec<ScoreBreakdown> {
    eligible(graph, visible, preds)
        .map(|v| score_vertex(graph, v, preds, cfg))
        .collect()
}

/// Graph-aware decision: the highest score if it beats `s_zo`. Ties go to
/// the earliest predicted exit, then to the lowest id.
pub fn decide(graph: &MSGraph, visible: &[VertexId], preds: &TrackerPredictions, cfg: &SchedulerConfig) -> Decision {
    let best = score_all(graph, visible, preds, cfg)
        .into_iter()
        .filter(|s| s.s_l > cfg.s_zo)
        .min_by(|a, b| {
            b.s_l
                .total_cmp(&a.s_l)
                .then(
                    preds.by_vertex[&a.vertex]
                        .exit_at
                        .cmp(&preds.by_vertex[&b.vertex].exit_at),
                )
                .then(a.vertex.cmp(&b.vertex))
        });
    match best {
        Some(s) => Decision::ZoomIn(s.vertex),
        None => Decision::StayZoomedOut,
    }
}

/// Baseline: the unlabeled target expected to leave first, among those whose
/// face is expected to be captured. Reads no auxiliary data.
pub fn decide_naive(graph: &MSGraph, visible: &[VertexId], preds: &TrackerPredictions) -> Decision {
    eligible(graph, visible, preds)
        .filter(|v| preds.by_vertex[v].e_s)
        .min_by_key(|v| (preds.by_vertex[v].exit_at, *v))
        .map_or(Decision::StayZoomedOut, Decision::ZoomIn)
}

/// Dispatches on `cfg.policy`.
pub fn choose(graph: &MSGraph, visible: &[VertexId], preds: &TrackerPredictions, cfg: &SchedulerConfig) -> Decision {
    match cfg.policy {
        Policy::Msg => decide(graph, visible, preds, cfg),
        Policy::Naive => decide_naive(graph, visible, preds),
    }
}
