//! End-to-end acceptance checks. Runs as a plain binary so that every
//! criterion prints its own line whether or not it passes.

mod common;

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use common::{aux_by_paths, elimination_by_paths, incremental_run, random_dag, rng, untangle_instance, DagSpec};
use msg_core::batch::{bucketize, run_batch, BatchReport, SweepConfig, BUCKET_WIDTH};
use msg_core::metrics::offline_bound_check;
use msg_core::sim::{run_with, RunOptions, SceneConfig};
use msg_core::{GraphConfig, MSGraph, Policy, SchedulerConfig};
use rayon::prelude::*;

type Verdict = Result<String, String>;

fn incremental_equality() -> Verdict {
    let seqs = 1000u64;
    let events: Vec<usize> = (0..seqs)
        .into_par_iter()
        .map(|seed| incremental_run(seed, 5 + seed % 36, 200))
        .collect::<Result<_, _>>()?;
    let total: usize = events.iter().sum();
    Ok(format!(
        "{seqs} sequences, {total} events, every vertex equal after every event"
    ))
}

fn elimination_equivalence() -> Verdict {
    let spec = DagSpec {
        max_vertices: 30,
        max_parents: 3,
        p_label: 0.25,
        p_compound: 0.25,
    };
    let mut solos = 0;
    let mut matched = 0;
    for seed in 0..500 {
        let g = random_dag(&mut rng(seed), spec);
        for v in g.vertices().filter(|v| v.is_solo()) {
            let fast = g.indirect_match(v.id());
            let slow = elimination_by_paths(&g, v.id());
            if fast != slow {
                return Err(format!(
                    "seed {seed} {}: recursion {fast:?}, conditions {slow:?}",
                    v.id()
                ));
            }
            solos += 1;
            matched += usize::from(fast.is_some());
        }
    }
    Ok(format!("500 dags, {solos} solo vertices, {matched} with a match"))
}

fn untangle_lossless() -> Verdict {
    let mut instances = 0;
    let mut untangles = 0;
    let mut seed = 0;
    while instances < 200 {
        if seed > 50_000 {
            return Err(format!("only {instances} instances found"));
        }
        let found = untangle_instance(seed, 12)?;
        if !found.is_empty() {
            instances += 1;
            untangles += found.len();
        }
        seed += 1;
    }
    Ok(format!(
        "{instances} instances, {untangles} untangles, feasible sets unchanged"
    ))
}

fn refined_gain() -> Verdict {
    let spec = DagSpec {
        max_vertices: 20,
        max_parents: 3,
        p_label: 0.35,
        p_compound: 0.3,
    };
    let mut nonzero = 0;
    for seed in 0..200 {
        let g: MSGraph = random_dag(&mut rng(seed), spec);
        for v in g.vertices() {
            let want = aux_by_paths(&g, v.id());
            let got = g.aux(v.id()).expect("live");
            if (got.delta_l_dir, got.delta_l_dir_plain) != (want.delta_l_dir, want.delta_l_dir_plain) {
                return Err(format!(
                    "seed {seed} {}: stored ({}, {}), paths ({}, {})",
                    v.id(),
                    got.delta_l_dir,
                    got.delta_l_dir_plain,
                    want.delta_l_dir,
                    want.delta_l_dir_plain
                ));
            }
            nonzero += usize::from(got.delta_l_dir != got.delta_l_dir_plain);
        }
    }
    Ok(format!("200 dags, refined differs from plain at {nonzero} vertices"))
}

fn scenario_a() -> Verdict {
    let run = |policy, untangle| {
        let sched = SchedulerConfig {
            policy,
            ..Default::default()
        };
        let opts = RunOptions {
            untangle,
            ..Default::default()
        };
        run_with(&SceneConfig::scenario_a(), &sched, opts).map_err(|e| e.to_string())
    };
    let ideal = |g: &MSGraph| g.edge_count() == 0 && g.vertices().all(|v| v.is_solo() && v.label().is_some());
    let msg = run(Policy::Msg, true)?;
    if !ideal(&msg.graph) || msg.metrics.m != 1.0 {
        return Err(format!("msg: ideal {} M {}", ideal(&msg.graph), msg.metrics.m));
    }
    let tangled = run(Policy::Msg, false)?;
    if ideal(&tangled.graph) {
        return Err("ideal without untangling".into());
    }
    let naive = run(Policy::Naive, true)?;
    if naive.metrics.m >= 1.0 {
        return Err(format!("naive M {}", naive.metrics.m));
    }
    Ok(format!(
        "msg ideal with M 1, {} vertices left without untangling, naive M {:.3}",
        tangled.graph.vertex_count(),
        naive.metrics.m
    ))
}

/// The sweep behind the trend check and the update probe, shared with the
/// command line.
fn trend_sweep() -> SweepConfig {
    toml::from_str(include_str!("../../../configs/sweep.toml")).expect("valid sweep file")
}

fn trend(report: &BatchReport) -> Verdict {
    let paired = report.records.len() / 2;
    if paired < 414 {
        return Err(format!("only {paired} paired runs"));
    }
    let buckets = bucketize(&report.records, BUCKET_WIDTH);
    let mean = |lo: u64, p: Policy| buckets.iter().find(|b| b.lo == lo && b.policy == p).map(|b| b.mean_m);
    let mut problems = Vec::new();

    let low: Vec<f64> = report
        .records
        .iter()
        .filter(|r| r.policy == Policy::Msg && r.n_js <= 2)
        .map(|r| r.m)
        .collect();
    let low = low.iter().sum::<f64>() / low.len().max(1) as f64;
    if low < 0.95 {
        problems.push(format!("(a) msg {low:.3} at n_js <= 2"));
    }

    let at15 = 15 / BUCKET_WIDTH * BUCKET_WIDTH;
    let (m15, n15) = (mean(at15, Policy::Msg), mean(at15, Policy::Naive));
    match (m15, n15) {
        (Some(m), Some(n)) => {
            if m <= 0.85 {
                problems.push(format!("(b) msg {m:.3} at n_js 15"));
            }
            if (n - 0.55).abs() > 0.15 {
                problems.push(format!("(b) naive {n:.3} at n_js 15"));
            }
        }
        _ => problems.push("(b) no runs at n_js 15".into()),
    }

    for b in buckets
        .iter()
        .filter(|b| b.policy == Policy::Msg && b.lo + BUCKET_WIDTH > 5)
    {
        if let Some(n) = mean(b.lo, Policy::Naive) {
            if b.mean_m <= n {
                problems.push(format!("(c) msg {:.3} <= naive {n:.3} at n_js {}", b.mean_m, b.lo));
            }
        }
    }

    let high = buckets
        .iter()
        .filter(|b| b.policy == Policy::Msg && b.lo > 30)
        .map(|b| b.mean_m)
        .fold(f64::INFINITY, f64::min);
    match n15 {
        Some(n) if high.is_finite() => {
            if high + 0.05 <= n {
                problems.push(format!("(d) worst msg {high:.3} above n_js 30 vs naive {n:.3} at 15"));
            }
        }
        _ => problems.push("(d) no runs above n_js 30".into()),
    }

    let summary = format!(
        "{paired} paired runs; low {low:.3}; at 15 msg {:.3} naive {:.3}; worst msg above 30 {high:.3}",
        m15.unwrap_or(f64::NAN),
        n15.unwrap_or(f64::NAN)
    );
    if problems.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{summary}; {}", problems.join("; ")))
    }
}

fn ideal_bound(report: &BatchReport) -> Verdict {
    for r in &report.records {
        if r.ideal_bound > (2 * r.n_targets as u64).saturating_sub(1) {
            return Err(format!(
                "seed {} {}: bound {} for {} targets",
                r.seed, r.policy, r.ideal_bound, r.n_targets
            ));
        }
    }
    let mut within = 0;
    let mut over = Vec::new();
    for seed in 0..150 {
        let scene = SceneConfig {
            seed,
            n_targets: 5 + (seed % 4) as u32 * 5,
            p_join: 0.8,
            ..trend_sweep().scene
        };
        let policy = if seed % 2 == 0 { Policy::Msg } else { Policy::Naive };
        let sched = SchedulerConfig {
            policy,
            ..Default::default()
        };
        let out = run_with(&scene, &sched, RunOptions::default()).map_err(|e| e.to_string())?;
        let cfg = GraphConfig {
            max_blind_gap: scene.zoom_duration + 2,
            untangle: true,
        };
        for c in offline_bound_check(cfg, &out.log, &out.truth, 12).map_err(|e| e.to_string())? {
            match c.min_labels {
                Some(k) if k <= c.bound => within += 1,
                other => over.push(format!(
                    "seed {seed}: {} vertices, {} targets, bound {}, needs {other:?}",
                    c.vertices, c.targets, c.bound
                )),
            }
        }
    }
    let line = format!(
        "{} final graphs within 2N-1; {within} components solved within the bound, {} over",
        report.records.len(),
        over.len()
    );
    if over.is_empty() {
        Ok(line)
    } else {
        Err(format!("{line}: {}", over.join("; ")))
    }
}

fn amortized_updates(report: &BatchReport) -> Verdict {
    let mut per_n: BTreeMap<u32, (u64, u64)> = BTreeMap::new();
    for r in &report.records {
        let e = per_n.entry(r.n_targets).or_default();
        e.0 += r.aux_writes;
        e.1 += r.vertices_created;
    }
    let ratio = |n: u32| per_n.get(&n).map(|(w, v)| *w as f64 / *v as f64);
    let (Some(a), Some(b), Some(c)) = (ratio(10), ratio(20), ratio(40)) else {
        return Err("sweep lacks 10, 20 or 40 targets".into());
    };
    let (w, v) = per_n.values().fold((0, 0), |acc, x| (acc.0 + x.0, acc.1 + x.1));
    let overall = w as f64 / v as f64;
    let line = format!("writes per vertex {overall:.2} overall; {a:.2} / {b:.2} / {c:.2} at 10 / 20 / 40 targets");
    if overall >= 50.0 || c > 1.25 * a {
        Err(line)
    } else {
        Ok(line)
    }
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |n: u32, name: &str, f: &dyn Fn() -> Verdict| {
        let t = Instant::now();
        let v = f();
        let secs = t.elapsed().as_secs_f64();
        match v {
            Ok(s) => println!("criterion {n} {name}: PASS ({s}) [{secs:.1}s]"),
            Err(s) => {
                failed += 1;
                println!("criterion {n} {name}: FAIL ({s}) [{secs:.1}s]");
            }
        }
    };
    report(1, "incremental aux equals scratch", &incremental_equality);
    report(2, "elimination match equals path conditions", &elimination_equivalence);
    report(3, "untangling keeps feasible assignments", &untangle_lossless);
    report(4, "refined and plain gains equal path sums", &refined_gain);
    report(5, "scenario A", &scenario_a);
    let t = Instant::now();
    let batch = run_batch(&trend_sweep(), 8);
    let batch_secs = t.elapsed().as_secs_f64();
    let batch = if batch.is_complete() {
        Ok(batch)
    } else {
        Err(format!(
            "{} runs failed, first {:?}",
            batch.failures.len(),
            batch.failures[0]
        ))
    };
    let on_batch = |f: fn(&BatchReport) -> Verdict| batch.as_ref().map_err(Clone::clone).and_then(f);
    report(6, &format!("trend over the sweep [batch {batch_secs:.1}s]"), &|| {
        on_batch(trend)
    });
    report(7, "labeling bound", &|| on_batch(ideal_bound));
    report(8, "amortized aux writes", &|| on_batch(amortized_updates));
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
