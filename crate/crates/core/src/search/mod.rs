//! Search over partial descriptions in the network's variable order.
//!
//! Each node is a prefix of values. Children that contradict the observation
//! or have probability zero are never created; children on which both the
//! query and the observation are already decided have their mass credited
//! directly. Best-first search pops the node with the largest `f = g × h`;
//! iterative deepening runs depth-first rounds under a falling threshold on
//! `f`.

mod best_first;
mod deepening;
mod params;

use std::collections::HashSet;
use std::time::Instant;

use serde::Serialize;

use crate::conflicts::{extract_counter, init_heuristic, Conflict, HeuristicTable};
use crate::error::{Error, Result};
use crate::estimate::{posterior_bounds, prior_bounds, BoundsReport};
use crate::model::{normal_in_row, Network, Observation, QueryFormula, Truth, Val, VarId};
use crate::numeric::NeumaierSum;

pub use params::{IddfsSchedule, MassMode, SearchParams, StoppingRule, Strategy};

use best_first::Queue;
use deepening::Dfs;

/// Steps between full recomputations of the incremental frontier mass.
pub const RECOMPUTE_PERIOD: u64 = 1 << 12;

/// What a single step did.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum StepReport {
    /// An internal node was expanded.
    Expanded {
        var: VarId,
        enqueued: usize,
        inconsistent: usize,
        decided: usize,
        new_conflict: bool,
    },
    /// A complete world was added to the generated set.
    CompletedWorld { index: usize },
    /// A world already generated in an earlier round was reached again.
    KnownWorld,
    /// A node whose key was stale went back into the queue.
    Reinserted,
    /// A node whose subtree has no observation-consistent world was dropped.
    Discarded,
    /// A node fell below the current threshold.
    Suppressed,
    /// A deepening round ended; the next starts from the root.
    RoundFinished { round: u32, log_threshold: f64 },
    /// Nothing is left to explore.
    QueueEmpty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StopReason {
    Exhausted,
    MaxError,
    MaxWorlds,
    MaxExpansions,
    TimeBudget,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorldRecord {
    pub values: Vec<Val>,
    pub log_g: f64,
    pub satisfies_query: bool,
}

impl WorldRecord {
    pub fn g(&self) -> f64 {
        self.log_g.exp()
    }
}

/// One processed node, kept when `record_expansions` is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpansionRecord {
    pub depth: usize,
    pub log_g: f64,
    pub log_f: f64,
    pub heuristic_version: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counters {
    pub steps: u64,
    pub expansions: u64,
    pub generated: u64,
    pub pruned_inconsistent: u64,
    pub pruned_decided: u64,
    pub suppressed: u64,
    pub reinserted: u64,
    pub conflicts_found: u64,
    pub rounds: u32,
    pub revisits: u64,
}

/// Frontier mass split by depth, so the conflict-adjusted total can use the
/// current per-depth factor without touching the nodes.
#[derive(Debug, Clone, Default)]
pub(crate) struct DepthMass {
    sums: Vec<NeumaierSum>,
}

impl DepthMass {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            sums: vec![NeumaierSum::new(); n + 1],
        }
    }

    pub(crate) fn add(&mut self, depth: usize, g: f64) {
        self.sums[depth] += g;
    }

    pub(crate) fn sub(&mut self, depth: usize, g: f64) {
        self.sums[depth] -= g;
    }

    pub(crate) fn clear(&mut self) {
        self.sums.iter_mut().for_each(NeumaierSum::reset);
    }

    pub(crate) fn total(&self, heur: &HeuristicTable, mode: MassMode) -> f64 {
        let mut s = NeumaierSum::new();
        for (d, part) in self.sums.iter().enumerate() {
            let v = part.value().max(0.0);
            if v > 0.0 {
                s += match mode {
                    MassMode::Naive => v,
                    MassMode::ConflictAdjusted => v * heur.log_mass_factor(d).exp(),
                };
            }
        }
        s.value()
    }
}

#[derive(Debug, Clone, Default)]
enum Frontier {
    #[default]
    Idle,
    Queue(Queue),
    Dfs(Dfs),
}

pub(crate) struct Child {
    value: Val,
    log_g: f64,
    log_f: f64,
}

pub(crate) struct Decided {
    value: Val,
    log_g: f64,
    truth: Truth,
}

pub(crate) struct Expansion {
    children: Vec<Child>,
    decided: Vec<Decided>,
    inconsistent: usize,
    new_conflict: bool,
}

/// A search run over one network, query and observation.
#[derive(Debug, Clone)]
pub struct SearchState<'a> {
    net: &'a Network,
    query: QueryFormula,
    obs: Vec<Option<Val>>,
    has_obs: bool,
    last_obs: Option<VarId>,
    params: SearchParams,
    heur: HeuristicTable,
    frontier: Frontier,
    worlds: Vec<WorldRecord>,
    p_wg_obs: NeumaierSum,
    p_w_obs: NeumaierSum,
    counters: Counters,
    seen: Option<HashSet<Vec<Val>>>,
    expansion_log: Vec<ExpansionRecord>,
    started: Instant,
}

impl<'a> SearchState<'a> {
    pub fn new(
        net: &'a Network,
        query: &QueryFormula,
        obs: &Observation,
        params: SearchParams,
    ) -> Result<Self> {
        params.validate()?;
        if let Some(&v) = query.variables().iter().find(|&&v| v >= net.len()) {
            return Err(Error::BadReference(format!(
                "query variable index {v} out of range"
            )));
        }
        for (v, val) in obs.iter() {
            if v >= net.len() || val as usize >= net.variable(v).arity() {
                return Err(Error::BadReference(format!(
                    "observation {v}={val} out of range"
                )));
            }
        }
        let heur = init_heuristic(net, params.epsilon_normal);
        let mut state = Self {
            net,
            query: query.clone(),
            obs: obs.dense(net.len()),
            has_obs: !obs.is_empty(),
            last_obs: obs.last_var(),
            seen: params.track_revisits.then(HashSet::new),
            params,
            heur,
            frontier: Frontier::Idle,
            worlds: Vec::new(),
            p_wg_obs: NeumaierSum::new(),
            p_w_obs: NeumaierSum::new(),
            counters: Counters::default(),
            expansion_log: Vec::new(),
            started: Instant::now(),
        };

        let root_decided = state.params.decide_early && !state.has_obs && !net.is_empty();
        let root_truth = state.query.evaluate_prefix(&[]);
        if root_decided && root_truth != Truth::Unknown {
            state.credit(0.0, root_truth);
        } else {
            state.frontier = match state.params.strategy {
                Strategy::BestFirst => Frontier::Queue(Queue::new(&state)),
                Strategy::IterativeDeepening => Frontier::Dfs(Dfs::new(&state)),
            };
        }
        Ok(state)
    }

    pub fn network(&self) -> &'a Network {
        self.net
    }

    pub fn params(&self) -> &SearchParams {
        &self.params
    }

    pub fn heuristic(&self) -> &HeuristicTable {
        &self.heur
    }

    pub fn conflicts(&self) -> &[Conflict] {
        self.heur.conflicts()
    }

    pub fn worlds(&self) -> &[WorldRecord] {
        &self.worlds
    }

    pub fn counters(&self) -> Counters {
        self.counters
    }

    pub fn expansion_log(&self) -> &[ExpansionRecord] {
        &self.expansion_log
    }

    pub fn p_wg_obs(&self) -> f64 {
        self.p_wg_obs.value()
    }

    pub fn p_w_obs(&self) -> f64 {
        self.p_w_obs.value()
    }

    /// Current threshold on `ln f` for iterative deepening.
    pub fn log_threshold(&self) -> Option<f64> {
        match &self.frontier {
            Frontier::Dfs(d) => Some(d.log_threshold()),
            _ => None,
        }
    }

    pub fn is_exhausted(&self) -> bool {
        match &self.frontier {
            Frontier::Idle => true,
            Frontier::Queue(q) => q.is_empty(),
            Frontier::Dfs(d) => d.is_exhausted(),
        }
    }

    /// Bound on the observation-consistent mass not yet generated or credited.
    pub fn queue_mass(&self, mode: MassMode) -> f64 {
        match &self.frontier {
            Frontier::Idle => 0.0,
            Frontier::Queue(q) => q.mass(&self.heur, mode),
            Frontier::Dfs(d) => d.mass(&self.heur, mode),
        }
    }

    /// Frontier mass summed node by node rather than from the incremental
    /// per-depth totals.
    pub fn recomputed_queue_mass(&self, mode: MassMode) -> f64 {
        match &self.frontier {
            Frontier::Idle => 0.0,
            Frontier::Queue(q) => q.recomputed(&self.heur, self.net.len(), mode),
            Frontier::Dfs(d) => d.recomputed(&self.heur, self.net.len(), mode),
        }
    }

    /// Current bounds, with the queue mass counted per the run's mode.
    pub fn snapshot(&self) -> Result<BoundsReport> {
        self.snapshot_with(self.params.mass_mode)
    }

    pub fn snapshot_with(&self, mode: MassMode) -> Result<BoundsReport> {
        let p_q = self.queue_mass(mode);
        let (p_wg_obs, p_w_obs) = (self.p_wg_obs(), self.p_w_obs());
        let post = posterior_bounds(p_wg_obs, p_w_obs, p_q)?;
        let (prior_lower, prior_upper) = if self.has_obs {
            (None, None)
        } else {
            let (l, u) = prior_bounds(p_wg_obs, p_q)?;
            (Some(l), Some(u))
        };
        Ok(BoundsReport {
            p_wg_obs,
            p_w_obs,
            p_q,
            prior_lower,
            prior_upper,
            post_lower: post.lower,
            post_upper: post.upper,
            midpoint: post.midpoint,
            max_error: post.max_error,
            worlds: self.worlds.len(),
            expansions: self.counters.expansions,
            elapsed_us: self.started.elapsed().as_micros() as u64,
        })
    }

    /// Processes one frontier node.
    pub fn step(&mut self) -> Result<StepReport> {
        let mut frontier = std::mem::take(&mut self.frontier);
        let report = match &mut frontier {
            Frontier::Idle => Ok(StepReport::QueueEmpty),
            Frontier::Queue(q) => q.step(self),
            Frontier::Dfs(d) => d.step(self),
        };
        match &mut frontier {
            Frontier::Queue(q) => q.settle(&self.heur),
            Frontier::Dfs(d) => d.settle(&self.heur),
            Frontier::Idle => {}
        }
        self.frontier = frontier;
        let report = report?;
        if report != StepReport::QueueEmpty {
            self.counters.steps += 1;
            if self.counters.steps.is_multiple_of(RECOMPUTE_PERIOD) {
                let n = self.net.len();
                match &mut self.frontier {
                    Frontier::Queue(q) => q.refresh_mass(n),
                    Frontier::Dfs(d) => d.refresh_mass(n),
                    Frontier::Idle => {}
                }
            }
        }
        Ok(report)
    }

    /// Steps until a stopping rule fires or the frontier is exhausted,
    /// handing every report and the state after it to `observer`.
    pub fn run(
        &mut self,
        mut observer: impl FnMut(&StepReport, &SearchState<'a>),
    ) -> Result<StopReason> {
        loop {
            if let Some(reason) = self.limit_reached() {
                return Ok(reason);
            }
            let report = self.step()?;
            observer(&report, self);
            if report == StepReport::QueueEmpty {
                return Ok(StopReason::Exhausted);
            }
        }
    }

    fn limit_reached(&self) -> Option<StopReason> {
        let stop = &self.params.stop;
        if stop.max_worlds.is_some_and(|m| self.worlds.len() >= m) {
            return Some(StopReason::MaxWorlds);
        }
        if stop
            .max_expansions
            .is_some_and(|m| self.counters.expansions >= m)
        {
            return Some(StopReason::MaxExpansions);
        }
        if stop
            .time_budget
            .is_some_and(|b| self.started.elapsed() >= b)
        {
            return Some(StopReason::TimeBudget);
        }
        if let Some(target) = stop.max_error {
            if let Ok(s) = self.snapshot() {
                if s.max_error <= target {
                    return Some(StopReason::MaxError);
                }
            }
        }
        None
    }

    fn credit(&mut self, log_g: f64, truth: Truth) {
        let g = log_g.exp();
        self.p_w_obs += g;
        if truth == Truth::True {
            self.p_wg_obs += g;
        }
        self.counters.pruned_decided += 1;
    }

    fn record_world(&mut self, values: Vec<Val>, log_g: f64) -> usize {
        let satisfies_query = self.query.holds(&values);
        let g = log_g.exp();
        self.p_w_obs += g;
        if satisfies_query {
            self.p_wg_obs += g;
        }
        self.worlds.push(WorldRecord {
            values,
            log_g,
            satisfies_query,
        });
        self.worlds.len() - 1
    }

    fn log_processed(&mut self, depth: usize, log_g: f64, log_f: f64) {
        if self.params.record_expansions {
            self.expansion_log.push(ExpansionRecord {
                depth,
                log_g,
                log_f,
                heuristic_version: self.heur.version(),
            });
        }
    }

    fn note_generated(&mut self, prefix: &[Val], value: Val) {
        self.counters.generated += 1;
        if let Some(seen) = &mut self.seen {
            let mut key = Vec::with_capacity(prefix.len() + 1);
            key.extend_from_slice(prefix);
            key.push(value);
            if !seen.insert(key) {
                self.counters.revisits += 1;
            }
        }
    }

    /// Children of the node `values` (probability `exp(log_g)`), after
    /// registering any conflict its observed variable exposes.
    fn expand_node(&mut self, values: &mut Vec<Val>, log_g: f64) -> Result<Expansion> {
        let net = self.net;
        let var = values.len();
        let cpt = net.cpt(var);
        let row = cpt.row(cpt.row_in(values));
        let observed = self.obs[var];
        self.counters.expansions += 1;

        let mut new_conflict = false;
        if let (true, Some(o)) = (self.params.conflicts, observed) {
            if let Some(normal) = normal_in_row(row, self.params.epsilon_normal) {
                if normal != o {
                    values.push(normal);
                    let counter = extract_counter(net, var, o, values, self.params.epsilon_normal);
                    values.pop();
                    if let Some(counter) = counter? {
                        let c = Conflict::new(net, counter, (var, o), self.params.epsilon_normal);
                        if self.heur.register_conflict(c) {
                            self.counters.conflicts_found += 1;
                            new_conflict = true;
                        }
                    }
                }
            }
        }

        let child_depth = var + 1;
        let obs_decided = self.last_obs.is_none_or(|l| l < child_depth);
        let may_decide = self.params.decide_early && obs_decided && child_depth < net.len();
        let log_h = self.heur.log_h(child_depth);

        let mut out = Expansion {
            children: Vec::with_capacity(row.len()),
            decided: Vec::new(),
            inconsistent: 0,
            new_conflict,
        };
        for (v, &p) in row.iter().enumerate() {
            let value = v as Val;
            if p == 0.0 {
                continue;
            }
            if observed.is_some_and(|o| o != value) {
                out.inconsistent += 1;
                continue;
            }
            let child_log_g = log_g + p.ln();
            if may_decide {
                values.push(value);
                let truth = self.query.evaluate_prefix(values);
                values.pop();
                if truth != Truth::Unknown {
                    out.decided.push(Decided {
                        value,
                        log_g: child_log_g,
                        truth,
                    });
                    continue;
                }
            }
            let log_f = child_log_g + log_h;
            if log_f == f64::NEG_INFINITY {
                out.inconsistent += 1;
                continue;
            }
            out.children.push(Child {
                value,
                log_g: child_log_g,
                log_f,
            });
        }
        self.counters.pruned_inconsistent += out.inconsistent as u64;
        Ok(out)
    }
}

/// Runs best-first search under `params` (its strategy field is ignored).
pub fn best_first<'a>(
    net: &'a Network,
    obs: &Observation,
    query: &QueryFormula,
    params: &SearchParams,
) -> Result<SearchState<'a>> {
    let mut state = SearchState::new(
        net,
        query,
        obs,
        params.clone().with_strategy(Strategy::BestFirst),
    )?;
    state.run(|_, _| {})?;
    Ok(state)
}

/// Runs iterative deepening under `params` (its strategy field is ignored).
pub fn iterative_deepening<'a>(
    net: &'a Network,
    obs: &Observation,
    query: &QueryFormula,
    params: &SearchParams,
) -> Result<SearchState<'a>> {
    let mut state = SearchState::new(
        net,
        query,
        obs,
        params.clone().with_strategy(Strategy::IterativeDeepening),
    )?;
    state.run(|_, _| {})?;
    Ok(state)
}

/// The `m` most probable worlds consistent with `obs`, in non-increasing
/// probability; fewer if there are not that many, and
/// [`Error::ZeroEvidence`] if there are none. Iterative deepening only
/// stops at the end of a round, when every world above the threshold is known.
pub fn top_m_worlds(
    net: &Network,
    obs: &Observation,
    m: usize,
    params: &SearchParams,
) -> Result<TopWorlds> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be at least 1".into()));
    }
    let mut params = params.clone();
    params.decide_early = false;
    params.stop = StoppingRule::default();
    let mut state = SearchState::new(net, &QueryFormula::Const(true), obs, params)?;
    loop {
        let report = state.step()?;
        let enough = state.worlds.len() >= m;
        match report {
            StepReport::QueueEmpty => break,
            StepReport::RoundFinished { .. } if enough => break,
            StepReport::CompletedWorld { .. }
                if enough && state.params.strategy == Strategy::BestFirst =>
            {
                break
            }
            _ => {}
        }
    }
    if state.worlds.is_empty() {
        return Err(Error::ZeroEvidence);
    }
    let mut worlds = state.worlds.clone();
    worlds.sort_by(|a, b| b.log_g.total_cmp(&a.log_g));
    worlds.truncate(m);
    Ok(TopWorlds {
        bounds: state.snapshot().ok(),
        worlds,
        counters: state.counters,
        conflicts: state.conflicts().to_vec(),
    })
}

#[derive(Debug, Clone)]
pub struct TopWorlds {
    pub worlds: Vec<WorldRecord>,
    /// Bounds for the trivially true query when the search stopped.
    pub bounds: Option<BoundsReport>,
    pub counters: Counters,
    pub conflicts: Vec<Conflict>,
}
