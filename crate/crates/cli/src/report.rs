//! Serializable run reports and their human-readable rendering.

use std::fmt::Write as _;

use conflictbn::{BoundsReport, Counters, Network, StopReason, Val, VarId};
use serde::Serialize;

/// Settings echoed back in every report.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Config {
    pub network: String,
    pub evidence: Option<String>,
    pub query: Option<String>,
    pub strategy: String,
    pub conflicts: bool,
    pub epsilon_normal: f64,
    pub max_error: Option<f64>,
    pub max_worlds: Option<usize>,
    pub max_expansions: Option<u64>,
    pub top: usize,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct WorldSummary {
    pub probability: f64,
    /// Assignments whose conditional probability is not near one.
    pub faults: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunReport {
    pub config: Config,
    pub variables: usize,
    pub searched_variables: usize,
    pub stop: Option<StopReason>,
    pub bounds: Option<BoundsReport>,
    pub worlds: Vec<WorldSummary>,
    pub conflicts: Vec<Vec<String>>,
    pub counters: Counters,
}

/// Non-normal assignments of `values`, where `values[i]` is the value of
/// `vars[i]` in `net`. Variables whose parents are not all present are
/// skipped.
pub fn faults(net: &Network, vars: &[VarId], values: &[Val], epsilon_normal: f64) -> Vec<String> {
    let mut full: Vec<Option<Val>> = vec![None; net.len()];
    for (&v, &val) in vars.iter().zip(values) {
        full[v] = Some(val);
    }
    let mut out = Vec::new();
    for (&v, &val) in vars.iter().zip(values) {
        let Some(parent_values) = net
            .parents(v)
            .iter()
            .map(|&p| full[p])
            .collect::<Option<Vec<Val>>>()
        else {
            continue;
        };
        match net.normal_value(v, &parent_values, epsilon_normal) {
            Ok(Some(normal)) if normal == val => {}
            Ok(None) => {}
            _ => {
                let var = net.variable(v);
                out.push(format!("{}={}", var.name, var.value_name(val)));
            }
        }
    }
    out
}

pub fn trace_line(s: &BoundsReport) -> String {
    format!(
        "step,{},{},{:e},{:e},{:e},{:e}",
        s.expansions, s.worlds, s.p_q, s.post_lower, s.post_upper, s.max_error
    )
}

pub fn progress_line(s: &BoundsReport) -> String {
    format!(
        "  {:>9} expansions  {:>6} worlds  pQ {:.3e}  posterior [{:.6}, {:.6}]  maxError {:.3e}",
        s.expansions, s.worlds, s.p_q, s.post_lower, s.post_upper, s.max_error
    )
}

impl RunReport {
    pub fn human(&self) -> String {
        let mut out = String::new();
        let c = &self.config;
        let _ = writeln!(
            out,
            "network {} ({} variables, {} searched)",
            c.network, self.variables, self.searched_variables
        );
        if let Some(q) = &c.query {
            let _ = writeln!(out, "query {q}");
        }
        let _ = writeln!(
            out,
            "strategy {}, conflicts {}, epsilon-normal {}",
            c.strategy,
            if c.conflicts { "on" } else { "off" },
            c.epsilon_normal
        );
        if let Some(b) = &self.bounds {
            if c.query.is_some() {
                let _ = writeln!(
                    out,
                    "posterior {:.6} ± {:.3e}  [{:.6}, {:.6}]",
                    b.midpoint, b.max_error, b.post_lower, b.post_upper
                );
                if let (Some(l), Some(u)) = (b.prior_lower, b.prior_upper) {
                    let _ = writeln!(out, "prior in [{l:.6}, {u:.6}]");
                }
            }
            let _ = writeln!(
                out,
                "generated mass {:.6e}, unexplored mass at most {:.3e}",
                b.p_w_obs, b.p_q
            );
        }
        if let Some(stop) = self.stop {
            let _ = writeln!(out, "stopped: {stop:?}");
        }
        let k = &self.counters;
        let _ = writeln!(
            out,
            "{} expansions, {} generated, {} pruned inconsistent, {} credited early",
            k.expansions, k.generated, k.pruned_inconsistent, k.pruned_decided
        );
        if !self.worlds.is_empty() {
            if self.searched_variables < self.variables {
                let _ = writeln!(out, "most probable worlds (over the searched variables):");
            } else {
                let _ = writeln!(out, "most probable worlds:");
            }
            for (i, w) in self.worlds.iter().enumerate() {
                let faults = if w.faults.is_empty() {
                    "no faults".to_owned()
                } else {
                    w.faults.join(", ")
                };
                let _ = writeln!(out, "  {:>3}. {:.6e}  {faults}", i + 1, w.probability);
            }
        }
        let _ = writeln!(out, "conflicts: {}", self.conflicts.len());
        for conflict in &self.conflicts {
            let _ = writeln!(out, "  {{{}}}", conflict.join(", "));
        }
        out
    }
}
