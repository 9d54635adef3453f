use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Deserialize;

use msg_core::batch::{bucketize, run_batch, write_csv, write_failures, SweepConfig, BUCKET_WIDTH};
use msg_core::export::{read_jsonl, to_dot, write_jsonl};
use msg_core::sim::{run_with, GraphDriver, ObsEvent, RunOptions, SceneConfig};
use msg_core::{GraphConfig, Policy, SchedulerConfig};

#[derive(Parser)]
#[command(name = "msg", version, about = "Tracklet graph simulator for a single PTZ camera")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one simulation and print its metrics as JSON.
    Run {
        #[arg(long)]
        seed: Option<u64>,
        /// TOML file with optional [scene] and [scheduler] tables.
        #[arg(long)]
        scene: Option<PathBuf>,
        #[arg(long)]
        policy: Option<Policy>,
        /// Keep the association ambiguity instead of untangling.
        #[arg(long)]
        no_untangle: bool,
        /// Directory for DOT snapshots after every label and of the final graph.
        #[arg(long)]
        dot_out: Option<PathBuf>,
        /// JSON-lines file for the camera event log.
        #[arg(long)]
        events_out: Option<PathBuf>,
    },
    /// Run a sweep over both policies and write one CSV row per run.
    Batch {
        /// TOML sweep file.
        #[arg(long)]
        sweep: Option<PathBuf>,
        #[arg(long)]
        reps: Option<u32>,
        #[arg(long, default_value_t = 8)]
        jobs: usize,
        #[arg(long)]
        csv_out: Option<PathBuf>,
        /// Where failed runs are listed; defaults next to the CSV.
        #[arg(long)]
        failures_out: Option<PathBuf>,
    },
    /// Rebuild the graph from an event log and write DOT snapshots.
    Replay {
        #[arg(long)]
        events_in: PathBuf,
        #[arg(long)]
        dot_out: PathBuf,
        /// Must match the zoom duration of the run plus two.
        #[arg(long, default_value_t = 7)]
        max_blind_gap: u32,
        #[arg(long)]
        no_untangle: bool,
    },
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunFile {
    scene: SceneConfig,
    scheduler: SchedulerConfig,
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Replays `log`, writing a snapshot after every label event and the final
/// graph. Returns the number of files written.
fn write_snapshots(cfg: GraphConfig, log: &[ObsEvent], dir: &Path) -> Result<usize> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut drv = GraphDriver::new(cfg, false);
    let mut written = 0;
    for (i, ev) in log.iter().enumerate() {
        drv.apply(ev).with_context(|| format!("replaying event {i}"))?;
        if matches!(ev, ObsEvent::Label { .. }) {
            let name = format!("step{:05}_event{i:05}.dot", ev.t());
            fs::write(dir.join(name), to_dot(drv.graph()))?;
            written += 1;
        }
    }
    fs::write(dir.join("final.dot"), to_dot(drv.graph()))?;
    Ok(written + 1)
}

fn run(
    seed: Option<u64>,
    scene: Option<PathBuf>,
    policy: Option<Policy>,
    no_untangle: bool,
    dot_out: Option<PathBuf>,
    events_out: Option<PathBuf>,
) -> Result<()> {
    let mut file: RunFile = match scene {
        Some(p) => read_toml(&p)?,
        None => RunFile::default(),
    };
    if let Some(s) = seed {
        file.scene.seed = s;
    }
    if let Some(p) = policy {
        file.scheduler.policy = p;
    }
    let opts = RunOptions {
        untangle: !no_untangle,
        ..Default::default()
    };
    let out = run_with(&file.scene, &file.scheduler, opts)?;
    if let Some(path) = events_out {
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        write_jsonl(&out.log, BufWriter::new(f))?;
    }
    if let Some(dir) = dot_out {
        let cfg = GraphConfig {
            max_blind_gap: file.scene.zoom_duration + 2,
            untangle: opts.untangle,
        };
        write_snapshots(cfg, &out.log, &dir)?;
    }
    println!("{}", serde_json::to_string_pretty(&out.metrics)?);
    Ok(())
}

fn batch(
    sweep: Option<PathBuf>,
    reps: Option<u32>,
    jobs: usize,
    csv_out: Option<PathBuf>,
    failures_out: Option<PathBuf>,
) -> Result<bool> {
    let mut cfg: SweepConfig = match sweep {
        Some(p) => read_toml(&p)?,
        None => SweepConfig::default(),
    };
    if let Some(r) = reps {
        cfg.reps = r;
    }
    let report = run_batch(&cfg, jobs);
    if let Some(path) = &csv_out {
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        write_csv(&report.records, BufWriter::new(f))?;
    }

    let buckets = bucketize(&report.records, BUCKET_WIDTH);
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "n_js\tpolicy\truns\tmean_m")?;
    for b in &buckets {
        writeln!(
            stdout,
            "{}-{}\t{}\t{}\t{:.4}",
            b.lo,
            b.lo + BUCKET_WIDTH - 1,
            b.policy,
            b.runs,
            b.mean_m
        )?;
    }

    if report.is_complete() {
        return Ok(true);
    }
    let path = failures_out.unwrap_or_else(|| match &csv_out {
        Some(p) => p.with_extension("failures.csv"),
        None => PathBuf::from("failures.csv"),
    });
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    write_failures(&report.failures, BufWriter::new(f))?;
    eprintln!(
        "{} of {} runs failed; see {}",
        report.failures.len(),
        report.failures.len() + report.records.len(),
        path.display()
    );
    Ok(false)
}

fn replay(events_in: PathBuf, dot_out: PathBuf, max_blind_gap: u32, no_untangle: bool) -> Result<()> {
    let f = File::open(&events_in).with_context(|| format!("opening {}", events_in.display()))?;
    let log: Vec<ObsEvent> =
        read_jsonl(BufReader::new(f)).with_context(|| format!("reading {}", events_in.display()))?;
    if log.is_empty() {
        bail!("{} holds no events", events_in.display());
    }
    let cfg = GraphConfig {
        max_blind_gap,
        untangle: !no_untangle,
    };
    let n = write_snapshots(cfg, &log, &dot_out)?;
    eprintln!("wrote {n} snapshots to {}", dot_out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Run {
            seed,
            scene,
            policy,
            no_untangle,
            dot_out,
            events_out,
        } => run(seed, scene, policy, no_untangle, dot_out, events_out).map(|_| true),
        Cmd::Batch {
            sweep,
            reps,
            jobs,
            csv_out,
            failures_out,
        } => batch(sweep, reps, jobs, csv_out, failures_out),
        Cmd::Replay {
            events_in,
            dot_out,
            max_blind_gap,
            no_untangle,
        } => replay(events_in, dot_out, max_blind_gap, no_untangle).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
