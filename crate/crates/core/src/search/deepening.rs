use std::collections::HashSet;

use super::{DepthMass, MassMode, SearchState, StepReport};
use crate::conflicts::HeuristicTable;
use crate::error::Result;
use crate::model::Val;
use crate::numeric::NeumaierSum;

/// Slack on threshold comparisons, in log space.
const THRESHOLD_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
struct Pending {
    depth: usize,
    value: Val,
    log_g: f64,
}

/// Depth-first rounds under a threshold on `ln f`.
///
/// Within a round the unexplored mass is bounded by what is on the stack
/// plus what was suppressed; across rounds, by the bound reported at the end
/// of the previous round minus the mass newly generated since. The reported
/// mass is the smaller of the two, so it never rises when a round restarts.
#[derive(Debug, Clone, Default)]
pub(super) struct Dfs {
    log_threshold: f64,
    log_multiplier: f64,
    round: u32,
    stack: Vec<Pending>,
    path: Vec<Val>,
    pending: DepthMass,
    suppressed: DepthMass,
    suppressed_count: u64,
    prev_bound: [f64; 2],
    new_mass: NeumaierSum,
    /// Smallest naive mass reported so far; see `Queue::settle`.
    naive_ceiling: f64,
    found: HashSet<Vec<Val>>,
    credited: HashSet<Vec<Val>>,
    exhausted: bool,
}

fn mode_index(mode: MassMode) -> usize {
    match mode {
        MassMode::Naive => 0,
        MassMode::ConflictAdjusted => 1,
    }
}

impl Dfs {
    pub(super) fn new(state: &SearchState<'_>) -> Self {
        let n = state.net.len();
        let schedule = state.params.iddfs;
        let mut d = Self {
            log_threshold: schedule
                .initial_log_threshold
                .unwrap_or(state.heur.log_h(0)),
            log_multiplier: schedule.log_multiplier,
            round: 1,
            pending: DepthMass::new(n),
            suppressed: DepthMass::new(n),
            prev_bound: [1.0; 2],
            naive_ceiling: f64::INFINITY,
            ..Self::default()
        };
        d.push_root();
        d
    }

    fn push_root(&mut self) {
        self.stack.push(Pending {
            depth: 0,
            value: 0,
            log_g: 0.0,
        });
        self.pending.add(0, 1.0);
    }

    pub(super) fn is_exhausted(&self) -> bool {
        self.exhausted
    }

    pub(super) fn log_threshold(&self) -> f64 {
        self.log_threshold
    }

    pub(super) fn mass(&self, heur: &HeuristicTable, mode: MassMode) -> f64 {
        if self.exhausted {
            return 0.0;
        }
        let frontier = self.pending.total(heur, mode) + self.suppressed.total(heur, mode);
        let carried = self.prev_bound[mode_index(mode)] - self.new_mass.value();
        let bound = frontier.min(carried).max(0.0);
        match mode {
            MassMode::Naive => bound.min(self.naive_ceiling),
            MassMode::ConflictAdjusted => bound,
        }
    }

    pub(super) fn settle(&mut self, heur: &HeuristicTable) {
        self.naive_ceiling = self.mass(heur, MassMode::Naive);
    }

    pub(super) fn recomputed(&self, heur: &HeuristicTable, n: usize, mode: MassMode) -> f64 {
        if self.exhausted {
            return 0.0;
        }
        let mut fresh = DepthMass::new(n);
        for p in &self.stack {
            fresh.add(p.depth, p.log_g.exp());
        }
        let frontier = fresh.total(heur, mode) + self.suppressed.total(heur, mode);
        let carried = self.prev_bound[mode_index(mode)] - self.new_mass.value();
        frontier.min(carried).max(0.0)
    }

    pub(super) fn refresh_mass(&mut self, n: usize) {
        self.pending = DepthMass::new(n);
        for p in &self.stack {
            self.pending.add(p.depth, p.log_g.exp());
        }
    }

    fn finish_round(&mut self, state: &mut SearchState<'_>) -> StepReport {
        if self.suppressed_count == 0 {
            self.exhausted = true;
            return StepReport::QueueEmpty;
        }
        for mode in [MassMode::Naive, MassMode::ConflictAdjusted] {
            self.prev_bound[mode_index(mode)] = self.mass(&state.heur, mode);
        }
        let finished = self.round;
        self.round += 1;
        self.log_threshold += self.log_multiplier;
        self.suppressed.clear();
        self.suppressed_count = 0;
        self.new_mass.reset();
        self.path.clear();
        self.push_root();
        state.counters.rounds = finished;
        StepReport::RoundFinished {
            round: finished,
            log_threshold: self.log_threshold,
        }
    }

    pub(super) fn step(&mut self, state: &mut SearchState<'_>) -> Result<StepReport> {
        if self.exhausted {
            return Ok(StepReport::QueueEmpty);
        }
        let Some(node) = self.stack.pop() else {
            return Ok(self.finish_round(state));
        };
        let g = node.log_g.exp();
        self.pending.sub(node.depth, g);
        if node.depth > 0 {
            self.path.truncate(node.depth - 1);
            self.path.push(node.value);
        }

        let log_f = node.log_g + state.heur.log_h(node.depth);
        if log_f == f64::NEG_INFINITY {
            state.counters.pruned_inconsistent += 1;
            return Ok(StepReport::Discarded);
        }
        if log_f < self.log_threshold - THRESHOLD_SLACK {
            self.suppressed.add(node.depth, g);
            self.suppressed_count += 1;
            state.counters.suppressed += 1;
            return Ok(StepReport::Suppressed);
        }

        state.log_processed(node.depth, node.log_g, log_f);
        if node.depth == state.net.len() {
            if !self.found.insert(self.path.clone()) {
                return Ok(StepReport::KnownWorld);
            }
            self.new_mass += g;
            let index = state.record_world(self.path.clone(), node.log_g);
            return Ok(StepReport::CompletedWorld { index });
        }

        let mut values = std::mem::take(&mut self.path);
        let expansion = state.expand_node(&mut values, node.log_g);
        self.path = values;
        let expansion = expansion?;

        if self.round == 1 {
            for c in &expansion.children {
                state.note_generated(&self.path, c.value);
            }
            for d in &expansion.decided {
                state.note_generated(&self.path, d.value);
            }
        }
        for d in &expansion.decided {
            let mut key = self.path.clone();
            key.push(d.value);
            if self.credited.insert(key) {
                self.new_mass += d.log_g.exp();
                state.credit(d.log_g, d.truth);
            }
        }

        let mut order: Vec<usize> = (0..expansion.children.len()).collect();
        // Highest f is popped first; equal f keeps value order.
        order.sort_by(|&a, &b| {
            let (ca, cb) = (&expansion.children[a], &expansion.children[b]);
            ca.log_f.total_cmp(&cb.log_f).then(cb.value.cmp(&ca.value))
        });
        let depth = node.depth + 1;
        for i in order {
            let c = &expansion.children[i];
            self.pending.add(depth, c.log_g.exp());
            self.stack.push(Pending {
                depth,
                value: c.value,
                log_g: c.log_g,
            });
        }
        Ok(StepReport::Expanded {
            var: node.depth,
            enqueued: expansion.children.len(),
            inconsistent: expansion.inconsistent,
            decided: expansion.decided.len(),
            new_conflict: expansion.new_conflict,
        })
    }
}
