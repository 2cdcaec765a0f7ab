//! Conflicts extracted from expectation failures, and the admissible
//! heuristic they refine.
//!
//! `h(j)` bounds the probability that variables `j..n` can contribute to any
//! completion consistent with the observation. It starts as the product of
//! each remaining variable's largest CPT entry; every registered conflict
//! whose variables are all unassigned at depth `j` may replace the product of
//! its members' maxima with its own, smaller, bound. Only pairwise-disjoint
//! conflicts are combined.
//!
//! A second per-depth factor bounds the *fraction* of a subtree's mass that
//! can be consistent with the observation: every such world has a fault in
//! each applicable conflict, and the chance of a fault in `C` given any
//! history is at most the sum of its members' largest per-row fault mass.
//! This factor, not `h`, is what the conflict-adjusted queue mass uses, since
//! `h` bounds a single completion rather than their sum.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::rc::Rc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{check_epsilon, Network, Val, VarId};

/// Variables that cannot all be normal while some assignment holds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counter {
    pub vars: BTreeSet<VarId>,
}

/// Variables that cannot all be normal in any world consistent with the
/// observation, with an upper bound on the probability their values can
/// jointly contribute.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conflict {
    /// Sorted, non-empty.
    pub vars: Vec<VarId>,
    pub log_max_prob: f64,
    /// Observed assignment whose expectation failure produced the conflict.
    pub trigger: (VarId, Val),
}

impl Conflict {
    pub fn new(
        net: &Network,
        counter: Counter,
        trigger: (VarId, Val),
        epsilon_normal: f64,
    ) -> Self {
        let vars: Vec<VarId> = counter.vars.into_iter().collect();
        let log_max_prob = conflict_max_prob(net, &vars, epsilon_normal).ln();
        Self {
            vars,
            log_max_prob,
            trigger,
        }
    }

    pub fn max_prob(&self) -> f64 {
        self.log_max_prob.exp()
    }

    pub fn min_var(&self) -> VarId {
        self.vars[0]
    }

    pub fn names<'a>(&'a self, net: &'a Network) -> Vec<&'a str> {
        self.vars
            .iter()
            .map(|&v| net.variable(v).name.as_str())
            .collect()
    }
}

/// Upper bound on the product of CPT entries over `vars` in any world where at
/// least one of them is a fault: the best case puts the fault on the member
/// whose largest fault entry costs least.
pub fn conflict_max_prob(net: &Network, vars: &[VarId], epsilon_normal: f64) -> f64 {
    let log_max: Vec<f64> = vars.iter().map(|&v| net.cpt(v).max_entry().ln()).collect();
    let total: f64 = log_max.iter().sum();
    vars.iter()
        .zip(&log_max)
        .map(|(&v, &lm)| net.cpt(v).max_fault_entry(epsilon_normal).ln() + (total - lm))
        .fold(f64::NEG_INFINITY, f64::max)
        .exp()
}

/// Builds a counter to `var = o` from the partial description `delta`, which
/// must assign `var` a different value. Returns `Ok(None)` when the failure
/// is explained by a fault already present in `delta`.
///
/// For every parent tuple that makes `var = o` near certain, the first parent
/// whose value in `delta` differs from the tuple is chosen, and a counter to
/// that parent's tuple value is extracted recursively.
pub fn extract_counter(
    net: &Network,
    var: VarId,
    o: Val,
    delta: &[Val],
    epsilon_normal: f64,
) -> Result<Option<Counter>> {
    check_epsilon(epsilon_normal)?;
    if var >= net.len() || o as usize >= net.variable(var).arity() {
        return Err(Error::BadReference(format!("{var}={o} out of range")));
    }
    if delta.len() <= var {
        return Err(Error::NotAFailure(format!(
            "`{}` is not assigned by the partial description",
            net.variable(var).name
        )));
    }
    if delta[var] == o {
        return Err(Error::NotAFailure(format!(
            "`{}` already takes the observed value",
            net.variable(var).name
        )));
    }

    struct Frame {
        var: VarId,
        o: Val,
        needs: Vec<(VarId, Val)>,
        next: usize,
        acc: BTreeSet<VarId>,
    }

    let frame = |var: VarId, o: Val| -> Option<Frame> {
        let cpt = net.cpt(var);
        let mut needs = Vec::new();
        for row in 0..cpt.row_count() {
            if cpt.prob(row, o) < 1.0 - epsilon_normal {
                continue;
            }
            let tuple = cpt.parent_tuple(row);
            let falsified = cpt
                .parents()
                .iter()
                .zip(&tuple)
                .find(|(&p, &v)| delta[p] != v)
                .map(|(&p, &v)| (p, v))?;
            if !needs.contains(&falsified) {
                needs.push(falsified);
            }
        }
        Some(Frame {
            var,
            o,
            needs,
            next: 0,
            acc: BTreeSet::new(),
        })
    };

    let mut memo: HashMap<(VarId, Val), Rc<BTreeSet<VarId>>> = HashMap::new();
    let mut stack = match frame(var, o) {
        Some(f) => vec![f],
        None => return Ok(None),
    };
    loop {
        let top = stack.last_mut().expect("non-empty until returned");
        if let Some(&key) = top.needs.get(top.next) {
            if let Some(done) = memo.get(&key) {
                top.acc.extend(done.iter().copied());
                top.next += 1;
            } else {
                match frame(key.0, key.1) {
                    Some(f) => stack.push(f),
                    None => return Ok(None),
                }
            }
            continue;
        }
        let mut finished = stack.pop().expect("checked above");
        finished.acc.insert(finished.var);
        if stack.is_empty() {
            return Ok(Some(Counter { vars: finished.acc }));
        }
        let set = Rc::new(finished.acc);
        let parent = stack.last_mut().expect("checked above");
        parent.acc.extend(set.iter().copied());
        parent.next += 1;
        memo.insert((finished.var, finished.o), set);
    }
}

/// Evolving admissible heuristic, in log space.
#[derive(Debug, Clone)]
pub struct HeuristicTable {
    epsilon_normal: f64,
    log_max_entry: Vec<f64>,
    log_suffix: Vec<f64>,
    log_h: Vec<f64>,
    fault_mass: Vec<f64>,
    log_mass: Vec<f64>,
    conflicts: Vec<Conflict>,
    seen: HashSet<Vec<VarId>>,
    version: u64,
}

/// Heuristic with no conflicts: one backward pass over the variables.
pub fn init_heuristic(net: &Network, epsilon_normal: f64) -> HeuristicTable {
    HeuristicTable::new(net, epsilon_normal)
}

impl HeuristicTable {
    pub fn new(net: &Network, epsilon_normal: f64) -> Self {
        let n = net.len();
        let log_max_entry: Vec<f64> = net.cpts().iter().map(|c| c.max_entry().ln()).collect();
        let mut log_suffix = vec![0.0; n + 1];
        for j in (0..n).rev() {
            log_suffix[j] = log_suffix[j + 1] + log_max_entry[j];
        }
        let fault_mass = net
            .cpts()
            .iter()
            .map(|c| {
                c.rows()
                    .map(|row| {
                        row.iter()
                            .filter(|&&p| p < 1.0 - epsilon_normal)
                            .sum::<f64>()
                    })
                    .fold(0.0, f64::max)
                    .min(1.0)
            })
            .collect();
        Self {
            epsilon_normal,
            log_h: log_suffix.clone(),
            fault_mass,
            log_mass: vec![0.0; n + 1],
            log_max_entry,
            log_suffix,
            conflicts: Vec::new(),
            seen: HashSet::new(),
            version: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.log_max_entry.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_max_entry.is_empty()
    }

    pub fn epsilon_normal(&self) -> f64 {
        self.epsilon_normal
    }

    /// `ln M[j]`: product of the largest CPT entries of variables `j..n`.
    pub fn log_suffix_max(&self, depth: usize) -> f64 {
        self.log_suffix[depth]
    }

    pub fn log_max_entry(&self, var: VarId) -> f64 {
        self.log_max_entry[var]
    }

    /// `ln h(depth)` for a partial description assigning `depth` variables.
    #[inline]
    pub fn log_h(&self, depth: usize) -> f64 {
        self.log_h[depth]
    }

    pub fn h(&self, depth: usize) -> f64 {
        self.log_h[depth].exp()
    }

    /// Log of the bound on the fraction of a depth-`depth` subtree's mass
    /// that can be consistent with the observation.
    #[inline]
    pub fn log_mass_factor(&self, depth: usize) -> f64 {
        self.log_mass[depth]
    }

    /// Largest total probability of non-normal values in any row of `var`.
    pub fn fault_mass(&self, var: VarId) -> f64 {
        self.fault_mass[var]
    }

    pub fn conflicts(&self) -> &[Conflict] {
        &self.conflicts
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    /// Stores `conflict` and tightens `h`. Returns false for a duplicate
    /// variable set.
    pub fn register_conflict(&mut self, conflict: Conflict) -> bool {
        assert!(!conflict.vars.is_empty(), "empty conflict");
        if !self.seen.insert(conflict.vars.clone()) {
            return false;
        }
        self.conflicts.push(conflict);
        self.version += 1;
        self.rebuild();
        true
    }

    /// Log ratio of a conflict's bound to the unrefined product over its
    /// members; never positive.
    fn gain(&self, c: &Conflict) -> f64 {
        let unrefined: f64 = c.vars.iter().map(|&v| self.log_max_entry[v]).sum();
        (c.log_max_prob - unrefined).min(0.0)
    }

    fn mass_gain(&self, c: &Conflict) -> f64 {
        c.vars
            .iter()
            .map(|&v| self.fault_mass[v])
            .sum::<f64>()
            .min(1.0)
            .ln()
    }

    fn rebuild(&mut self) {
        let gains: Vec<f64> = self.conflicts.iter().map(|c| self.gain(c)).collect();
        let correction = greedy_disjoint(&self.conflicts, &gains, self.len());
        for (j, c) in correction.into_iter().enumerate() {
            self.log_h[j] = self.log_suffix[j] + c;
        }
        let gains: Vec<f64> = self.conflicts.iter().map(|c| self.mass_gain(c)).collect();
        self.log_mass = greedy_disjoint(&self.conflicts, &gains, self.len());
    }
}

/// For each depth `j` in `0..=n`, the summed gain of pairwise-disjoint
/// conflicts lying entirely in `j..n`, picked greedily from the most negative
/// gain.
fn greedy_disjoint(conflicts: &[Conflict], gains: &[f64], n: usize) -> Vec<f64> {
    let mut ranked: Vec<(f64, &Conflict)> = gains
        .iter()
        .copied()
        .zip(conflicts)
        .filter(|(g, _)| *g < 0.0)
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut breakpoints: Vec<VarId> = ranked.iter().map(|(_, c)| c.min_var()).collect();
    breakpoints.sort_unstable();
    breakpoints.dedup();

    let mut used = vec![false; n];
    let mut totals = Vec::with_capacity(breakpoints.len());
    for &b in &breakpoints {
        let mut touched = Vec::new();
        let mut total = 0.0;
        for (gain, c) in &ranked {
            if c.min_var() < b || c.vars.iter().any(|&v| used[v]) {
                continue;
            }
            for &v in &c.vars {
                used[v] = true;
                touched.push(v);
            }
            total += gain;
        }
        for v in touched {
            used[v] = false;
        }
        totals.push(total);
    }

    let mut out = vec![0.0; n + 1];
    let mut next = breakpoints.len();
    for j in (0..=n).rev() {
        while next > 0 && breakpoints[next - 1] >= j {
            next -= 1;
        }
        if next < breakpoints.len() {
            out[j] = totals[next];
        }
    }
    out
}
