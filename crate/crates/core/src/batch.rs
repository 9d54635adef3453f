//! Parameter sweeps over many seeds, run in parallel, with CSV output.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::BatchError;
use crate::scheduler::{Policy, SchedulerConfig};
use crate::sim::{run_simulation, SceneConfig, SimOutcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Scene parameters not swept.
    pub scene: SceneConfig,
    /// Weights shared by both policies; the policy field is overridden.
    pub scheduler: SchedulerConfig,
    pub first_seed: u64,
    pub n_targets: Vec<u32>,
    pub p_join: Vec<f64>,
    pub reps: u32,
    pub policies: Vec<Policy>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            scene: SceneConfig::default(),
            scheduler: SchedulerConfig::default(),
            first_seed: 1,
            n_targets: vec![10, 20, 40],
            p_join: vec![0.2, 0.5, 0.8],
            reps: 1,
            policies: vec![Policy::Msg, Policy::Naive],
        }
    }
}

/// One scene of the sweep; every policy runs on it.
#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub seed: u64,
    pub scene: SceneConfig,
}

impl SweepConfig {
    pub fn jobs(&self) -> Vec<Job> {
        let mut seed = self.first_seed;
        let mut out = Vec::new();
        for &n in &self.n_targets {
            for &p in &self.p_join {
                for _ in 0..self.reps {
                    out.push(Job {
                        seed,
                        scene: SceneConfig {
                            seed,
                            n_targets: n,
                            p_join: p,
                            ..self.scene.clone()
                        },
                    });
                    seed += 1;
                }
            }
        }
        out
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub policy: Policy,
    pub n_js: u64,
    pub m: f64,
    pub labelings: u64,
    pub vertices: u64,
    pub edges: u64,
    pub ideal_bound: u64,
    pub wall_time: f64,
    pub n_targets: u32,
    pub p_join: f64,
    pub vertices_created: u64,
    pub aux_writes: u64,
}

impl RunRecord {
    pub fn from_outcome(job: &Job, policy: Policy, out: &SimOutcome) -> Self {
        let m = &out.metrics;
        RunRecord {
            seed: job.seed,
            policy,
            n_js: m.n_js,
            m: m.m,
            labelings: m.labelings_succeeded,
            vertices: m.vertices,
            edges: m.edges,
            ideal_bound: m.ideal_bound,
            wall_time: m.wall_time,
            n_targets: job.scene.n_targets,
            p_join: job.scene.p_join,
            vertices_created: m.vertices_created,
            aux_writes: m.aux_writes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub seed: u64,
    pub policy: Policy,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BatchReport {
    pub records: Vec<RunRecord>,
    pub failures: Vec<Failure>,
}

impl BatchReport {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Runs every job under every policy on `jobs` worker threads. Runs share
/// nothing; results come back in job order.
pub fn run_batch(sweep: &SweepConfig, jobs: usize) -> BatchReport {
    let work: Vec<(Job, Policy)> = sweep
        .jobs()
        .into_iter()
        .flat_map(|j| sweep.policies.iter().map(move |p| (j.clone(), *p)))
        .collect();
    let run_one = |(job, policy): &(Job, Policy)| {
        let sched = SchedulerConfig {
            policy: *policy,
            ..sweep.scheduler
        };
        match run_simulation(&job.scene, &sched) {
            Ok(out) => Ok(RunRecord::from_outcome(job, *policy, &out)),
            Err(e) => Err(Failure {
                seed: job.seed,
                policy: *policy,
                error: e.to_string(),
            }),
        }
    };
    let results: Vec<Result<RunRecord, Failure>> =
        match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
            Ok(pool) => pool.install(|| work.par_iter().map(run_one).collect()),
            Err(_) => work.iter().map(run_one).collect(),
        };
    let mut report = BatchReport::default();
    for r in results {
        match r {
            Ok(rec) => report.records.push(rec),
            Err(f) => report.failures.push(f),
        }
    }
    report
}

pub fn write_csv<W: Write>(records: &[RunRecord], w: W) -> Result<(), BatchError> {
    let mut wr = csv::Writer::from_writer(w);
    for r in records {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<RunRecord>, BatchError> {
    let mut rd = csv::Reader::from_reader(r);
    rd.deserialize().map(|r| r.map_err(BatchError::from)).collect()
}

pub fn write_failures<W: Write>(failures: &[Failure], w: W) -> Result<(), BatchError> {
    let mut wr = csv::Writer::from_writer(w);
    for f in failures {
        wr.serialize(f)?;
    }
    wr.flush()?;
    Ok(())
}

/// Mean objective of one policy over runs with `lo <= n_js < lo + width`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub lo: u64,
    pub policy: Policy,
    pub runs: usize,
    pub mean_m: f64,
}

pub const BUCKET_WIDTH: u64 = 3;

pub fn bucketize(records: &[RunRecord], width: u64) -> Vec<Bucket> {
    let mut acc: std::collections::BTreeMap<(u64, Policy), (usize, f64)> = Default::default();
    for r in records {
        let e = acc.entry((r.n_js / width * width, r.policy)).or_default();
        e.0 += 1;
        e.1 += r.m;
    }
    acc.into_iter()
        .map(|((lo, policy), (runs, sum))| Bucket {
            lo,
            policy,
            runs,
            mean_m: sum / runs as f64,
        })
        .collect()
}
