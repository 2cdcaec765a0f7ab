//! Partial descriptions, possible worlds and the exhaustive-enumeration oracle.

use crate::error::{Error, Result};
use crate::model::{Network, Observation, QueryFormula, Truth, Val};
use crate::numeric::NeumaierSum;

/// Default cap on the number of positive-probability worlds
/// [`enumerate_exact`] will visit.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 24;

/// A prefix `<v1 .. vj>` of values in the network's variable order together
/// with the log of its probability.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialDescription {
    values: Vec<Val>,
    log_g: f64,
}

impl Default for PartialDescription {
    fn default() -> Self {
        Self::empty()
    }
}

impl PartialDescription {
    pub fn empty() -> Self {
        Self {
            values: Vec::new(),
            log_g: 0.0,
        }
    }

    pub fn depth(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[Val] {
        &self.values
    }

    pub fn log_g(&self) -> f64 {
        self.log_g
    }

    pub fn g(&self) -> f64 {
        self.log_g.exp()
    }

    pub fn is_world(&self, net: &Network) -> bool {
        self.depth() == net.len()
    }

    /// Assigns `value` to the next variable in the order.
    pub fn extend(&self, net: &Network, value: Val) -> Result<Self> {
        let var = self.depth();
        if var >= net.len() {
            return Err(Error::DepthExceeded);
        }
        if value as usize >= net.variable(var).arity() {
            return Err(Error::BadReference(format!(
                "value {value} out of range for `{}`",
                net.variable(var).name
            )));
        }
        let p = net.conditional(var, &self.values, value);
        let mut values = Vec::with_capacity(var + 1);
        values.extend_from_slice(&self.values);
        values.push(value);
        Ok(Self {
            values,
            log_g: self.log_g + p.ln(),
        })
    }

    /// Value names, for display.
    pub fn named<'a>(&'a self, net: &'a Network) -> impl Iterator<Item = (&'a str, &'a str)> + 'a {
        self.values.iter().enumerate().map(move |(i, &v)| {
            let var = net.variable(i);
            (var.name.as_str(), var.value_name(v))
        })
    }
}

/// Three-valued evaluation of `formula` on `pd`: true or false only when every
/// world extending `pd` agrees.
pub fn evaluate(formula: &QueryFormula, pd: &PartialDescription) -> Truth {
    formula.evaluate_prefix(pd.values())
}

/// Probability of a complete assignment, as a linear-space product.
pub fn world_probability(net: &Network, world: &[Val]) -> f64 {
    assert_eq!(world.len(), net.len(), "not a complete world");
    (0..net.len())
        .map(|v| net.conditional(v, world, world[v]))
        .product()
}

/// Calls `visit` on every positive-probability world, restricted to worlds
/// consistent with `obs` when one is given. Fails once more than `cap` worlds
/// would be visited.
pub fn for_each_world(
    net: &Network,
    obs: Option<&Observation>,
    cap: u64,
    mut visit: impl FnMut(&[Val], f64),
) -> Result<u64> {
    let dense = obs.map(|o| o.dense(net.len()));
    let mut values = Vec::with_capacity(net.len());
    let mut count = 0u64;
    walk(
        net,
        dense.as_deref(),
        cap,
        &mut values,
        1.0,
        &mut count,
        &mut visit,
    )?;
    Ok(count)
}

fn walk(
    net: &Network,
    obs: Option<&[Option<Val>]>,
    cap: u64,
    values: &mut Vec<Val>,
    p: f64,
    count: &mut u64,
    visit: &mut impl FnMut(&[Val], f64),
) -> Result<()> {
    let var = values.len();
    if var == net.len() {
        *count += 1;
        if *count > cap {
            return Err(Error::TooLarge {
                worlds: *count as f64,
                cap,
            });
        }
        visit(values, p);
        return Ok(());
    }
    let cpt = net.cpt(var);
    let row = cpt.row(cpt.row_in(values));
    for (v, &q) in row.iter().enumerate() {
        if q == 0.0 {
            continue;
        }
        if let Some(Some(o)) = obs.map(|o| o[var]) {
            if o as usize != v {
                continue;
            }
        }
        values.push(v as Val);
        let r = walk(net, obs, cap, values, p * q, count, visit);
        values.pop();
        r?;
    }
    Ok(())
}

/// Exact answers obtained by enumerating possible worlds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactAnswer {
    pub prior: f64,
    pub p_obs: f64,
    pub p_query_and_obs: f64,
    pub posterior: f64,
}

/// Exact `P(query)`, `P(obs)`, `P(query & obs)` and `P(query | obs)`.
pub fn enumerate_exact(
    net: &Network,
    query: &QueryFormula,
    obs: &Observation,
) -> Result<ExactAnswer> {
    enumerate_exact_capped(net, query, obs, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_exact_capped(
    net: &Network,
    query: &QueryFormula,
    obs: &Observation,
    cap: u64,
) -> Result<ExactAnswer> {
    let mut prior = NeumaierSum::new();
    let mut p_obs = NeumaierSum::new();
    let mut joint = NeumaierSum::new();
    for_each_world(net, None, cap, |w, p| {
        let q = query.holds(w);
        if q {
            prior += p;
        }
        if obs.holds_in(w) {
            p_obs += p;
            if q {
                joint += p;
            }
        }
    })?;
    let (p_obs, joint) = (p_obs.value(), joint.value());
    if p_obs <= 0.0 {
        return Err(Error::ZeroEvidence);
    }
    Ok(ExactAnswer {
        prior: prior.value(),
        p_obs,
        p_query_and_obs: joint,
        posterior: joint / p_obs,
    })
}

/// Exact `P(query | obs)` visiting only worlds consistent with `obs`; usable on
/// networks whose full world set is too large for [`enumerate_exact`].
pub fn exact_posterior(
    net: &Network,
    query: &QueryFormula,
    obs: &Observation,
    cap: u64,
) -> Result<f64> {
    let mut p_obs = NeumaierSum::new();
    let mut joint = NeumaierSum::new();
    for_each_world(net, Some(obs), cap, |w, p| {
        p_obs += p;
        if query.holds(w) {
            joint += p;
        }
    })?;
    if p_obs.value() <= 0.0 {
        return Err(Error::ZeroEvidence);
    }
    Ok(joint.value() / p_obs.value())
}
