//! Graphviz snapshots and JSON-lines event logs.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::graph::MSGraph;

/// DOT rendering: solo vertices are circles, compound ones diamonds, labeled
/// ones carry an asterisk. Auxiliary data goes into the tooltip.
pub fn to_dot(graph: &MSGraph) -> String {
    let aux = graph.aux_snapshot();
    let now = graph.now();
    let mut s = String::from("digraph msg {\n  rankdir=LR;\n");
    for v in graph.vertices() {
        let shape = if v.is_solo() { "circle" } else { "diamond" };
        let star = if v.label().is_some() { "*" } else { "" };
        let a = &aux[&v.id()];
        let t = v.tracklet();
        let end = t.end().map_or("open".to_string(), |e| e.to_string());
        let mut tip = format!(
            "steps {}..{} len {} members {}",
            t.start(),
            end,
            t.len_at(now),
            v.member_count()
        );
        if let Some(l) = v.label() {
            let _ = write!(tip, " label {}", l.0);
        }
        let _ = write!(
            tip,
            "&#10;n_notL {} n_o {} n_L {} n_ret {}&#10;dL_dir {} (plain {}) L_notdir {}&#10;p_back {} C {}",
            a.n_not_labeled,
            a.n_origins,
            a.n_labeled,
            a.n_ret,
            a.delta_l_dir,
            a.delta_l_dir_plain,
            a.l_not_dir,
            a.p_back.map_or("-".into(), |p| p.to_string()),
            a.c_candidate.map_or("-".into(), |p| p.to_string()),
        );
        let _ = writeln!(
            s,
            "  {} [shape={shape}, label=\"{}{star}\", tooltip=\"{tip}\"];",
            v.id(),
            v.id()
        );
    }
    for (a, b) in graph.edges() {
        let _ = writeln!(s, "  {a} -> {b};");
    }
    s.push_str("}\n");
    s
}

pub fn write_jsonl<T: Serialize, W: Write>(items: &[T], mut w: W) -> std::io::Result<()> {
    for it in items {
        serde_json::to_writer(&mut w, it)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn read_jsonl<T: DeserializeOwned, R: BufRead>(r: R) -> std::io::Result<Vec<T>> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(std::io::Error::other)?);
    }
    Ok(out)
}
