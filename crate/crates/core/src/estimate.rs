//! Anytime bounds on prior and posterior probabilities.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{prune_for_query, Network, Observation, QueryFormula, VarId};
use crate::search::{Counters, SearchParams, SearchState, StopReason, WorldRecord};

/// Snapshot of an anytime run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BoundsReport {
    /// Mass of generated worlds satisfying the query and the observation.
    pub p_wg_obs: f64,
    /// Mass of generated worlds satisfying the observation.
    pub p_w_obs: f64,
    /// Bound on the observation-consistent mass still unexplored.
    pub p_q: f64,
    /// Present only for runs without an observation.
    pub prior_lower: Option<f64>,
    pub prior_upper: Option<f64>,
    pub post_lower: f64,
    pub post_upper: f64,
    pub midpoint: f64,
    pub max_error: f64,
    pub worlds: usize,
    pub expansions: u64,
    pub elapsed_us: u64,
}

/// Posterior interval with its midpoint and half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PosteriorBounds {
    pub lower: f64,
    pub upper: f64,
    pub midpoint: f64,
    pub max_error: f64,
}

fn check_mass(x: f64) -> Result<()> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidMass(x))
    }
}

/// `(P_W^g, min(1, P_W^g + P_Q))`.
pub fn prior_bounds(p_wg: f64, p_q: f64) -> Result<(f64, f64)> {
    check_mass(p_wg)?;
    check_mass(p_q)?;
    Ok((p_wg, (p_wg + p_q).min(1.0)))
}

/// Bounds on `P(g | obs)` from the generated mass and the queue mass. The
/// upper bound is clamped to 1; `max_error` is half the unclamped width.
pub fn posterior_bounds(p_wg_obs: f64, p_w_obs: f64, p_q: f64) -> Result<PosteriorBounds> {
    check_mass(p_wg_obs)?;
    check_mass(p_w_obs)?;
    check_mass(p_q)?;
    let denom = p_w_obs + p_q;
    if denom <= 0.0 {
        return Err(Error::ZeroEvidence);
    }
    let lower = p_wg_obs / denom;
    let upper = ((p_wg_obs + p_q) / denom).min(1.0);
    Ok(PosteriorBounds {
        lower,
        upper,
        midpoint: (lower + upper) / 2.0,
        max_error: p_q / (2.0 * denom),
    })
}

/// Outcome of [`run_anytime`].
#[derive(Debug, Clone)]
pub struct AnytimeRun {
    pub report: BoundsReport,
    pub stop: StopReason,
    pub counters: Counters,
    /// Generated worlds over the retained variables.
    pub worlds: Vec<WorldRecord>,
    /// Original index of each retained variable.
    pub retained: Vec<VarId>,
    /// Conflicts found, as original variable names.
    pub conflicts: Vec<Vec<String>>,
}

/// Prunes the network to what `query` and `obs` need, then searches until a
/// stopping rule fires, passing a snapshot to `observer` after every step.
pub fn run_anytime(
    net: &Network,
    obs: &Observation,
    query: &QueryFormula,
    params: &SearchParams,
    mut observer: impl FnMut(&BoundsReport),
) -> Result<AnytimeRun> {
    let pruned = prune_for_query(net, query, obs)?;
    let p_query = pruned.map_formula(query)?;
    let p_obs = pruned.map_observation(obs);
    let mut state = SearchState::new(&pruned.network, &p_query, &p_obs, params.clone())?;
    let stop = state.run(|_, st| {
        if let Ok(snapshot) = st.snapshot() {
            observer(&snapshot);
        }
    })?;
    let report = state.snapshot()?;
    let conflicts = state
        .conflicts()
        .iter()
        .map(|c| {
            c.names(&pruned.network)
                .into_iter()
                .map(str::to_owned)
                .collect()
        })
        .collect();
    Ok(AnytimeRun {
        report,
        stop,
        counters: state.counters(),
        worlds: state.worlds().to_vec(),
        retained: pruned.to_original.clone(),
        conflicts,
    })
}
