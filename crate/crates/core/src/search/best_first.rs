use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::rc::Rc;

use super::{DepthMass, MassMode, SearchState, StepReport};
use crate::conflicts::HeuristicTable;
use crate::error::Result;
use crate::model::Val;

/// Shared tail of a prefix: each node stores its last value and a link to
/// its parent's prefix.
#[derive(Debug)]
struct Prefix {
    value: Val,
    parent: Option<Rc<Prefix>>,
}

impl Drop for Prefix {
    // Long chains would otherwise drop recursively.
    fn drop(&mut self) {
        let mut next = self.parent.take();
        while let Some(rc) = next {
            match Rc::try_unwrap(rc) {
                Ok(mut p) => next = p.parent.take(),
                Err(_) => break,
            }
        }
    }
}

fn materialize(prefix: &Option<Rc<Prefix>>, depth: usize) -> Vec<Val> {
    let mut values = vec![0; depth];
    let mut cur = prefix.as_deref();
    for slot in values.iter_mut().rev() {
        let p = cur.expect("prefix shorter than its depth");
        *slot = p.value;
        cur = p.parent.as_deref();
    }
    values
}

/// `ln f` on a fixed grid, so that ties are decided by depth and age rather
/// than by rounding noise.
fn quantize(log_f: f64) -> i64 {
    (log_f * 1e9).round() as i64
}

#[derive(Debug)]
struct Entry {
    key: i64,
    depth: usize,
    generation: u64,
    log_g: f64,
    version: u64,
    prefix: Option<Rc<Prefix>>,
}

impl Entry {
    fn rank(&self) -> (i64, usize, Reverse<u64>) {
        (self.key, self.depth, Reverse(self.generation))
    }
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.rank() == other.rank()
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank().cmp(&other.rank())
    }
}

#[derive(Debug)]
pub(super) struct Queue {
    heap: BinaryHeap<Entry>,
    mass: DepthMass,
    /// Smallest naive mass reported so far. Expanding a node never adds
    /// naive mass, so this only hides rounding drift in the running sums.
    naive_ceiling: f64,
    next_generation: u64,
}

impl Clone for Queue {
    fn clone(&self) -> Self {
        let heap = self
            .heap
            .iter()
            .map(|e| Entry {
                key: e.key,
                depth: e.depth,
                generation: e.generation,
                log_g: e.log_g,
                version: e.version,
                prefix: e.prefix.clone(),
            })
            .collect();
        Self {
            heap,
            mass: self.mass.clone(),
            naive_ceiling: self.naive_ceiling,
            next_generation: self.next_generation,
        }
    }
}

impl Queue {
    pub(super) fn new(state: &SearchState<'_>) -> Self {
        let mut q = Self {
            heap: BinaryHeap::new(),
            mass: DepthMass::new(state.net.len()),
            naive_ceiling: f64::INFINITY,
            next_generation: 0,
        };
        q.push(None, 0, 0.0, state.heur.log_h(0), state.heur.version());
        q
    }

    fn push(
        &mut self,
        prefix: Option<Rc<Prefix>>,
        depth: usize,
        log_g: f64,
        log_f: f64,
        version: u64,
    ) {
        self.mass.add(depth, log_g.exp());
        self.heap.push(Entry {
            key: quantize(log_f),
            depth,
            generation: self.next_generation,
            log_g,
            version,
            prefix,
        });
        self.next_generation += 1;
    }

    pub(super) fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub(super) fn mass(&self, heur: &HeuristicTable, mode: MassMode) -> f64 {
        if self.heap.is_empty() {
            0.0
        } else {
            match mode {
                MassMode::Naive => self.mass.total(heur, mode).min(self.naive_ceiling),
                MassMode::ConflictAdjusted => self.mass.total(heur, mode),
            }
        }
    }

    /// Records the naive mass after a step.
    pub(super) fn settle(&mut self, heur: &HeuristicTable) {
        self.naive_ceiling = self.mass(heur, MassMode::Naive);
    }

    pub(super) fn recomputed(&self, heur: &HeuristicTable, n: usize, mode: MassMode) -> f64 {
        let mut fresh = DepthMass::new(n);
        for e in &self.heap {
            fresh.add(e.depth, e.log_g.exp());
        }
        fresh.total(heur, mode)
    }

    pub(super) fn refresh_mass(&mut self, n: usize) {
        self.mass = DepthMass::new(n);
        for e in &self.heap {
            self.mass.add(e.depth, e.log_g.exp());
        }
    }

    pub(super) fn step(&mut self, state: &mut SearchState<'_>) -> Result<StepReport> {
        let Some(mut entry) = self.heap.pop() else {
            return Ok(StepReport::QueueEmpty);
        };
        self.mass.sub(entry.depth, entry.log_g.exp());

        let log_f = entry.log_g + state.heur.log_h(entry.depth);
        if log_f == f64::NEG_INFINITY {
            state.counters.pruned_inconsistent += 1;
            return Ok(StepReport::Discarded);
        }
        if entry.version != state.heur.version() {
            let key = quantize(log_f);
            if self.heap.peek().is_some_and(|top| key < top.key) {
                entry.key = key;
                entry.version = state.heur.version();
                self.mass.add(entry.depth, entry.log_g.exp());
                self.heap.push(entry);
                state.counters.reinserted += 1;
                return Ok(StepReport::Reinserted);
            }
        }

        state.log_processed(entry.depth, entry.log_g, log_f);
        let mut values = materialize(&entry.prefix, entry.depth);
        if entry.depth == state.net.len() {
            let index = state.record_world(values, entry.log_g);
            return Ok(StepReport::CompletedWorld { index });
        }

        let var = entry.depth;
        let expansion = state.expand_node(&mut values, entry.log_g)?;
        for d in &expansion.decided {
            state.note_generated(&values, d.value);
            state.credit(d.log_g, d.truth);
        }
        let version = state.heur.version();
        for c in &expansion.children {
            state.note_generated(&values, c.value);
            let prefix = Some(Rc::new(Prefix {
                value: c.value,
                parent: entry.prefix.clone(),
            }));
            self.push(prefix, var + 1, c.log_g, c.log_f, version);
        }
        Ok(StepReport::Expanded {
            var,
            enqueued: expansion.children.len(),
            inconsistent: expansion.inconsistent,
            decided: expansion.decided.len(),
            new_conflict: expansion.new_conflict,
        })
    }
}
