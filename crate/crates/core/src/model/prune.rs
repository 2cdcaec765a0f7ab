//! Query-directed structural pruning.
//!
//! The requisite nodes for `P(query | obs)` are found with the Bayes-ball
//! reachability walk, which removes barren (non-ancestor) variables and
//! variables d-separated from the query by the observation in one pass.
//! Observed variables whose own CPT is not requisite are kept as roots with a
//! point mass on the observed value.

use std::collections::VecDeque;

use super::network::{Cpt, Network, VarId, Variable};
use super::query::{Observation, QueryFormula};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct PrunedNetwork {
    pub network: Network,
    /// Original index of each retained variable.
    pub to_original: Vec<VarId>,
    /// Retained index of each original variable, if kept.
    pub from_original: Vec<Option<VarId>>,
}

impl PrunedNetwork {
    pub fn map_observation(&self, obs: &Observation) -> Observation {
        let mut out = Observation::new();
        for (var, val) in obs.iter() {
            if let Some(new) = self.from_original[var] {
                out.insert(&self.network, new, val)
                    .expect("retained variable");
            }
        }
        out
    }

    pub fn map_formula(&self, formula: &QueryFormula) -> Result<QueryFormula> {
        formula.remap(&self.from_original)
    }

    /// Translates a world over retained variables back to original indices.
    pub fn original_assignment<'a>(
        &'a self,
        values: &'a [u16],
    ) -> impl Iterator<Item = (VarId, u16)> + 'a {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| (self.to_original[i], v))
    }
}

/// Variables reached by Bayes-ball from the query, split into those whose CPT
/// is requisite and observed variables that only contribute their value.
pub(crate) fn requisite(
    net: &Network,
    query_vars: &[VarId],
    obs: &Observation,
) -> (Vec<bool>, Vec<bool>) {
    let n = net.len();
    let observed: Vec<bool> = (0..n).map(|v| obs.get(v).is_some()).collect();
    let mut visited = vec![false; n];
    let mut top = vec![false; n];
    let mut bottom = vec![false; n];
    let mut schedule: VecDeque<(VarId, bool)> = query_vars.iter().map(|&q| (q, true)).collect();

    while let Some((j, from_child)) = schedule.pop_front() {
        visited[j] = true;
        if from_child {
            if !observed[j] {
                if !top[j] {
                    top[j] = true;
                    schedule.extend(net.parents(j).iter().map(|&p| (p, true)));
                }
                if !bottom[j] {
                    bottom[j] = true;
                    schedule.extend(net.children(j).iter().map(|&c| (c, false)));
                }
            }
        } else if observed[j] {
            if !top[j] {
                top[j] = true;
                schedule.extend(net.parents(j).iter().map(|&p| (p, true)));
            }
        } else if !bottom[j] {
            bottom[j] = true;
            schedule.extend(net.children(j).iter().map(|&c| (c, false)));
        }
    }
    let evidence_only = (0..n)
        .map(|v| observed[v] && visited[v] && !top[v])
        .collect();
    (top, evidence_only)
}

/// Keeps only the variables that can influence `P(query | obs)`.
pub fn prune_for_query(
    net: &Network,
    query: &QueryFormula,
    obs: &Observation,
) -> Result<PrunedNetwork> {
    let query_vars = query.variables();
    if let Some(&bad) = query_vars.iter().find(|&&v| v >= net.len()) {
        return Err(Error::BadReference(format!(
            "query variable index {bad} out of range"
        )));
    }
    if let Some((bad, _)) = obs.iter().find(|&(v, _)| v >= net.len()) {
        return Err(Error::BadReference(format!(
            "observed variable index {bad} out of range"
        )));
    }

    // A query without variables still needs P(obs), which depends on the
    // observed variables' ancestors.
    let (cpt_needed, evidence_only) = if query_vars.is_empty() {
        let observed: Vec<VarId> = obs.iter().map(|(v, _)| v).collect();
        requisite(net, &observed, &Observation::new())
    } else {
        requisite(net, &query_vars, obs)
    };
    let keep: Vec<bool> = (0..net.len())
        .map(|v| cpt_needed[v] || evidence_only[v])
        .collect();

    let mut from_original = vec![None; net.len()];
    let mut to_original = Vec::new();
    for v in (0..net.len()).filter(|&v| keep[v]) {
        from_original[v] = Some(to_original.len());
        to_original.push(v);
    }

    let mut variables = Vec::with_capacity(to_original.len());
    let mut cpts = Vec::with_capacity(to_original.len());
    for (new, &old) in to_original.iter().enumerate() {
        let var = net.variable(old);
        variables.push(Variable {
            index: new,
            name: var.name.clone(),
            domain: var.domain.clone(),
        });
        if cpt_needed[old] {
            let cpt = net.cpt(old);
            let parents = cpt
                .parents()
                .iter()
                .map(|&p| from_original[p].expect("requisite CPTs keep their parents"))
                .collect();
            let table = cpt.rows().flatten().copied().collect();
            cpts.push(Cpt::new(
                new,
                parents,
                cpt.parent_arities().to_vec(),
                cpt.arity(),
                table,
            ));
        } else {
            let observed = obs.get(old).expect("evidence-only variables are observed");
            // the point mass below would hide a value that is impossible outright
            if net.cpt(old).rows().all(|row| row[observed as usize] == 0.0) {
                return Err(Error::ZeroEvidence);
            }
            let mut table = vec![0.0; var.arity()];
            table[observed as usize] = 1.0;
            cpts.push(Cpt::new(new, Vec::new(), Vec::new(), var.arity(), table));
        }
    }

    Ok(PrunedNetwork {
        network: Network::from_parts(net.name().to_owned(), variables, cpts),
        to_original,
        from_original,
    })
}
