//! Random instances and brute-force oracles shared by the integration tests.
//! The oracles walk worlds directly from the CPTs and do not use the
//! library's own enumeration.

#![allow(dead_code)]

use conflictbn::circuits::{build_adder, single_error_scenario, AdderSpec};
use conflictbn::{HeuristicTable, Network, NetworkBuilder, Observation, QueryFormula, Val, VarId};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub const EPS: f64 = 1e-3;

/// One test instance: a network, a query and an observation that has
/// positive probability.
pub struct Instance {
    pub label: String,
    pub net: Network,
    pub query: QueryFormula,
    pub obs: Observation,
}

fn random_row(rng: &mut StdRng, arity: usize) -> Vec<f64> {
    match rng.gen_range(0..4) {
        // near-certain value, the rest tiny
        0 | 1 => {
            let main = rng.gen_range(0..arity);
            let rest: Vec<f64> = (0..arity - 1).map(|_| rng.gen_range(1e-6..1e-4)).collect();
            let total: f64 = rest.iter().sum();
            let mut row = Vec::with_capacity(arity);
            let mut it = rest.into_iter();
            for v in 0..arity {
                row.push(if v == main {
                    1.0 - total
                } else {
                    it.next().unwrap()
                });
            }
            row
        }
        // deterministic
        2 if rng.gen_bool(0.5) => {
            let main = rng.gen_range(0..arity);
            (0..arity)
                .map(|v| if v == main { 1.0 } else { 0.0 })
                .collect()
        }
        // arbitrary, sometimes with a zero entry
        _ => {
            let mut w: Vec<f64> = (0..arity).map(|_| rng.gen_range(0.05..1.0)).collect();
            if arity > 2 && rng.gen_bool(0.3) {
                w[rng.gen_range(0..arity)] = 0.0;
            }
            let s: f64 = w.iter().sum();
            w.iter().map(|x| x / s).collect()
        }
    }
}

/// A random network with `n` variables, domains of size 2 or 3 and up to
/// three parents drawn from earlier variables.
pub fn random_network(rng: &mut StdRng, n: usize) -> Network {
    let mut b = NetworkBuilder::new("random");
    let mut arities = Vec::new();
    for i in 0..n {
        let arity = rng.gen_range(2..=3);
        let domain: Vec<String> = (0..arity).map(|v| format!("v{v}")).collect();
        b.add_variable(&format!("X{i}"), domain.iter().map(String::as_str))
            .unwrap();
        arities.push(arity);
    }
    for i in 0..n {
        let k = rng.gen_range(0..=i.min(3));
        let mut parents: Vec<usize> = Vec::new();
        while parents.len() < k {
            let p = rng.gen_range(0..i);
            if !parents.contains(&p) {
                parents.push(p);
            }
        }
        let rows: usize = parents.iter().map(|&p| arities[p]).product();
        let table = (0..rows)
            .flat_map(|_| random_row(rng, arities[i]))
            .collect();
        b.set_cpt(i, parents, table).unwrap();
    }
    b.build().unwrap()
}

pub fn random_query(rng: &mut StdRng, net: &Network) -> QueryFormula {
    let atom = |rng: &mut StdRng| {
        let v = rng.gen_range(0..net.len());
        let val = rng.gen_range(0..net.variable(v).arity()) as Val;
        QueryFormula::atom(v, val)
    };
    match rng.gen_range(0..4) {
        0 => atom(rng),
        1 => QueryFormula::And(vec![atom(rng), atom(rng)]),
        2 => QueryFormula::Or(vec![atom(rng), QueryFormula::Not(Box::new(atom(rng)))]),
        _ => QueryFormula::Not(Box::new(QueryFormula::And(vec![atom(rng), atom(rng)]))),
    }
}

/// Observes up to `max` variables at values of a sampled world, so the
/// observation has positive probability.
pub fn random_observation(rng: &mut StdRng, net: &Network, max: usize) -> Observation {
    let world = sample_world(rng, net);
    let mut obs = Observation::new();
    for _ in 0..rng.gen_range(0..=max) {
        let v = rng.gen_range(0..net.len());
        let _ = obs.insert(net, v, world[v]);
    }
    obs
}

pub fn sample_world(rng: &mut StdRng, net: &Network) -> Vec<Val> {
    let mut world: Vec<Val> = Vec::with_capacity(net.len());
    for v in 0..net.len() {
        let cpt = net.cpt(v);
        let row = cpt.row(cpt.row_in(&world));
        let mut u: f64 = rng.gen();
        let mut pick = row.iter().rposition(|&p| p > 0.0).unwrap();
        for (i, &p) in row.iter().enumerate() {
            if u < p {
                pick = i;
                break;
            }
            u -= p;
        }
        world.push(pick as Val);
    }
    world
}

/// `count` random instances with at most `max_vars` variables, seeded.
pub fn random_instances(seed: u64, count: usize, max_vars: usize) -> Vec<Instance> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let n = rng.gen_range(1..=max_vars);
            let net = random_network(&mut rng, n);
            let query = random_query(&mut rng, &net);
            let obs = if i % 3 == 0 {
                Observation::new()
            } else {
                random_observation(&mut rng, &net, 3)
            };
            Instance {
                label: format!("random#{i} (n={n})"),
                net,
                query,
                obs,
            }
        })
        .collect()
}

/// Single-error adders with 2 and 3 bits, querying a gate status.
pub fn adder_instances() -> Vec<Instance> {
    let mut out = Vec::new();
    for (bits, k, query) in [
        (2, 2, "x2ok_2=stuck1"),
        (2, 1, "x1ok_1=stuck1 | x2ok_1=stuck1"),
        (3, 2, "o1ok_1=stuck1"),
        (3, 3, "a1ok_2=stuck1"),
    ] {
        let adder = build_adder(&AdderSpec::new(bits)).unwrap();
        let obs = single_error_scenario(&adder, k).unwrap();
        let query = QueryFormula::parse(query, &adder.network).unwrap();
        out.push(Instance {
            label: format!("adder{bits} k={k}"),
            net: adder.network,
            query,
            obs,
        });
    }
    out
}

/// Visits every positive-probability world consistent with `obs` (all
/// worlds when `obs` is empty), with its probability.
pub fn oracle_worlds(net: &Network, obs: &Observation, mut visit: impl FnMut(&[Val], f64)) {
    fn go(
        net: &Network,
        obs: &[Option<Val>],
        world: &mut Vec<Val>,
        p: f64,
        visit: &mut dyn FnMut(&[Val], f64),
    ) {
        let v = world.len();
        if v == net.len() {
            visit(world, p);
            return;
        }
        let cpt = net.cpt(v);
        let parent_values: Vec<Val> = cpt.parents().iter().map(|&q| world[q]).collect();
        let row = cpt.row_of(&parent_values);
        for val in 0..net.variable(v).arity() {
            let q = cpt.prob(row, val as Val);
            if q == 0.0 || obs[v].is_some_and(|o| o as usize != val) {
                continue;
            }
            world.push(val as Val);
            go(net, obs, world, p * q, visit);
            world.pop();
        }
    }
    let dense: Vec<Option<Val>> = (0..net.len()).map(|v| obs.get(v)).collect();
    go(net, &dense, &mut Vec::new(), 1.0, &mut visit);
}

/// `(P(query), P(obs), P(query & obs))` by brute force, with plain
/// summation sorted from small to large.
pub fn oracle(net: &Network, query: &QueryFormula, obs: &Observation) -> (f64, f64, f64) {
    let mut prior = Vec::new();
    oracle_worlds(net, &Observation::new(), |w, p| {
        if query.holds(w) {
            prior.push(p);
        }
    });
    let mut p_obs = Vec::new();
    let mut joint = Vec::new();
    oracle_worlds(net, obs, |w, p| {
        p_obs.push(p);
        if query.holds(w) {
            joint.push(p);
        }
    });
    (sorted_sum(prior), sorted_sum(p_obs), sorted_sum(joint))
}

/// `P(query | obs)` visiting only observation-consistent worlds.
pub fn oracle_posterior(net: &Network, query: &QueryFormula, obs: &Observation) -> f64 {
    let mut p_obs = Vec::new();
    let mut joint = Vec::new();
    oracle_worlds(net, obs, |w, p| {
        p_obs.push(p);
        if query.holds(w) {
            joint.push(p);
        }
    });
    sorted_sum(joint) / sorted_sum(p_obs)
}

fn sorted_sum(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs.iter().sum()
}

/// Whether `var` takes a normal value in `world`.
pub fn is_normal(net: &Network, world: &[Val], var: VarId) -> bool {
    let cpt = net.cpt(var);
    let parent_values: Vec<Val> = cpt.parents().iter().map(|&q| world[q]).collect();
    cpt.prob(cpt.row_of(&parent_values), world[var]) >= 1.0 - EPS
}

/// Observation-consistent worlds in which every variable of `conflict` is
/// normal; a sound conflict has none.
pub fn conflict_counterexamples(net: &Network, obs: &Observation, conflict: &[VarId]) -> usize {
    let mut bad = 0;
    oracle_worlds(net, obs, |w, _| {
        if conflict.iter().all(|&v| is_normal(net, w, v)) {
            bad += 1;
        }
    });
    bad
}

/// Relative-or-absolute closeness.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Gate-level simulation of the cascaded adder with all inputs zero.
/// `faults` maps `(gate, bit)` to the forced output; returns the output bits
/// (index 0 is bit 1).
pub fn simulate_zero_adder(n: usize, faults: &[(&str, usize, bool)]) -> Vec<bool> {
    let forced = |gate: &str, bit: usize, ok: bool| {
        faults
            .iter()
            .find(|(g, b, _)| *g == gate && *b == bit)
            .map_or(ok, |&(_, _, v)| v)
    };
    let mut carry = false;
    let mut outputs = Vec::with_capacity(n);
    for bit in 1..=n {
        let (i1, i2, i3) = (false, false, carry);
        let x1 = forced("x1", bit, i1 != i2);
        let x2 = forced("x2", bit, x1 != i3);
        let a1 = forced("a1", bit, i1 && i2);
        let a2 = forced("a2", bit, x1 && i3);
        let o1 = forced("o1", bit, a1 || a2);
        outputs.push(x2);
        carry = o1;
    }
    outputs
}

/// Single stuck-at faults, as `(gate, bit offset from the error bit,
/// value name)`, that explain an `n`-bit zero adder whose only wrong
/// output is bit `k`.
pub fn single_fault_explanations(n: usize, k: usize) -> Vec<(String, isize, String)> {
    let mut out = Vec::new();
    for bit in 1..=n {
        for gate in ["x1", "x2", "a1", "a2", "o1"] {
            for (stuck, name) in [(true, "stuck1"), (false, "stuck0")] {
                let outputs = simulate_zero_adder(n, &[(gate, bit, stuck)]);
                if outputs.iter().enumerate().all(|(i, &o)| o == (i + 1 == k)) {
                    out.push((gate.to_owned(), bit as isize - k as isize, name.to_owned()));
                }
            }
        }
    }
    out
}

/// Whether some positive-probability world has `trigger` and every variable
/// of `conflict` normal. Exhaustive over the trigger's ancestors, merging
/// prefixes that agree on every variable still needed later.
pub fn conflict_witness_exists(net: &Network, trigger: (VarId, Val), conflict: &[VarId]) -> bool {
    use std::collections::HashSet;
    let (tv, to) = trigger;
    let mut relevant = vec![false; net.len()];
    let mut stack = vec![tv];
    while let Some(v) = stack.pop() {
        if !std::mem::replace(&mut relevant[v], true) {
            stack.extend(net.parents(v));
        }
    }
    // last relevant variable that reads each variable
    let mut last_use = vec![None; net.len()];
    for v in (0..net.len()).filter(|&v| relevant[v]) {
        for &p in net.parents(v) {
            last_use[p] = Some(v);
        }
    }
    let mut states: HashSet<Vec<(VarId, Val)>> = HashSet::from([Vec::new()]);
    for v in (0..net.len()).filter(|&v| relevant[v]) {
        let cpt = net.cpt(v);
        let mut next = HashSet::new();
        for s in &states {
            let value_of = |p: VarId| s.iter().find(|(q, _)| *q == p).expect("live parent").1;
            let parent_values: Vec<Val> = cpt.parents().iter().map(|&p| value_of(p)).collect();
            let row = cpt.row_of(&parent_values);
            for val in 0..net.variable(v).arity() as Val {
                let p = cpt.prob(row, val);
                if p == 0.0 || (v == tv && val != to) || (conflict.contains(&v) && p < 1.0 - EPS) {
                    continue;
                }
                let mut t: Vec<(VarId, Val)> = s
                    .iter()
                    .copied()
                    .filter(|&(q, _)| last_use[q].is_some_and(|u| u > v))
                    .collect();
                if last_use[v].is_some() {
                    t.push((v, val));
                }
                next.insert(t);
            }
        }
        states = next;
        if states.is_empty() {
            return false;
        }
    }
    true
}

/// Random networks with mostly near-certain rows and an observation that
/// contradicts a prediction, so that searches register conflicts.
pub fn conflict_prone_instances(seed: u64, count: usize, max_vars: usize) -> Vec<Instance> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let n = rng.gen_range(4..=max_vars);
        let net = random_network(&mut rng, n);
        // sample forward, taking a non-normal value at one variable
        let target = rng.gen_range(n / 2..n);
        let mut world: Vec<Val> = Vec::with_capacity(n);
        let mut failed = false;
        for v in 0..n {
            let cpt = net.cpt(v);
            let row = cpt.row(cpt.row_in(&world));
            let normal = row.iter().position(|&p| p >= 1.0 - EPS);
            let pick = if v == target {
                match (
                    normal,
                    row.iter()
                        .enumerate()
                        .find(|&(i, &p)| p > 0.0 && Some(i) != normal),
                ) {
                    (Some(_), Some((i, _))) => i,
                    _ => {
                        failed = true;
                        break;
                    }
                }
            } else {
                row.iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .unwrap()
                    .0
            };
            world.push(pick as Val);
        }
        if failed {
            continue;
        }
        let mut obs = Observation::new();
        obs.insert(&net, target, world[target]).unwrap();
        if rng.gen_bool(0.5) {
            let other = rng.gen_range(0..n);
            let _ = obs.insert(&net, other, world[other]);
        }
        let query = random_query(&mut rng, &net);
        out.push(Instance {
            label: format!("conflict-prone#{} (n={n})", out.len()),
            net,
            query,
            obs,
        });
    }
    out
}

/// For every prefix, the largest and the total probability of its
/// observation-consistent extensions; checks both against the heuristic.
pub struct Admissibility<'a> {
    net: &'a Network,
    obs: Vec<Option<Val>>,
    heur: &'a HeuristicTable,
    pub prefixes: u64,
    pub h_violations: u64,
    pub mass_violations: u64,
}

impl<'a> Admissibility<'a> {
    pub fn check(net: &'a Network, obs: &Observation, heur: &'a HeuristicTable) -> Self {
        let mut c = Self {
            net,
            obs: obs.dense(net.len()),
            heur,
            prefixes: 0,
            h_violations: 0,
            mass_violations: 0,
        };
        c.visit(&mut Vec::new(), 1.0);
        c
    }

    fn visit(&mut self, prefix: &mut Vec<Val>, g: f64) -> (f64, f64) {
        let d = prefix.len();
        let (max, sum) = if d == self.net.len() {
            (g, g)
        } else {
            let cpt = self.net.cpt(d);
            let row = cpt.row_in(prefix);
            let (mut max, mut sum) = (0.0f64, 0.0);
            for val in 0..self.net.variable(d).arity() as Val {
                let p = cpt.prob(row, val);
                if p == 0.0 || self.obs[d].is_some_and(|o| o != val) {
                    continue;
                }
                prefix.push(val);
                let (m, s) = self.visit(prefix, g * p);
                prefix.pop();
                max = max.max(m);
                sum += s;
            }
            (max, sum)
        };
        if max > 0.0 {
            self.prefixes += 1;
            if max.ln() - (g.ln() + self.heur.log_h(d)) > 1e-12 {
                self.h_violations += 1;
            }
            if sum.ln() - (g.ln() + self.heur.log_mass_factor(d)) > 1e-12 {
                self.mass_violations += 1;
            }
        }
        (max, sum)
    }
}
