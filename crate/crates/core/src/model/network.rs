use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};

use crate::error::{Error, Result};

/// Position of a variable in the network's total order.
pub type VarId = usize;
/// Index of a value inside its variable's domain.
pub type Val = u16;

/// Row-sum tolerance used when validating CPTs.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub index: VarId,
    pub name: String,
    pub domain: Vec<String>,
}

impl Variable {
    pub fn arity(&self) -> usize {
        self.domain.len()
    }

    pub fn value_index(&self, value: &str) -> Option<Val> {
        self.domain
            .iter()
            .position(|v| v == value)
            .map(|i| i as Val)
    }

    pub fn value_name(&self, value: Val) -> &str {
        &self.domain[value as usize]
    }
}

/// Dense conditional probability table. Rows are indexed by the mixed-radix
/// encoding of the parent values, last parent varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    owner: VarId,
    parents: Vec<VarId>,
    parent_arities: Vec<usize>,
    strides: Vec<usize>,
    arity: usize,
    table: Vec<f64>,
}

impl Cpt {
    pub(crate) fn new(
        owner: VarId,
        parents: Vec<VarId>,
        parent_arities: Vec<usize>,
        arity: usize,
        table: Vec<f64>,
    ) -> Self {
        let mut strides = vec![1; parents.len()];
        for i in (0..parents.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * parent_arities[i + 1];
        }
        debug_assert_eq!(
            table.len(),
            parent_arities.iter().product::<usize>() * arity
        );
        Self {
            owner,
            parents,
            parent_arities,
            strides,
            arity,
            table,
        }
    }

    pub fn owner(&self) -> VarId {
        self.owner
    }

    pub fn parents(&self) -> &[VarId] {
        &self.parents
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn row_count(&self) -> usize {
        self.table.len() / self.arity
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.table[row * self.arity..(row + 1) * self.arity]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.table.chunks_exact(self.arity)
    }

    #[inline]
    pub fn prob(&self, row: usize, value: Val) -> f64 {
        self.table[row * self.arity + value as usize]
    }

    /// Row selected by the parent values found in `assignment`, which is
    /// indexed by variable and must cover every parent.
    #[inline]
    pub fn row_in(&self, assignment: &[Val]) -> usize {
        self.parents
            .iter()
            .zip(&self.strides)
            .map(|(&p, &s)| assignment[p] as usize * s)
            .sum()
    }

    /// Row selected by an explicit tuple of parent values.
    pub fn row_of(&self, parent_values: &[Val]) -> usize {
        parent_values
            .iter()
            .zip(&self.strides)
            .map(|(&v, &s)| v as usize * s)
            .sum()
    }

    /// Inverse of [`Cpt::row_of`].
    pub fn parent_tuple(&self, mut row: usize) -> Vec<Val> {
        let mut out = vec![0; self.parents.len()];
        for (i, &s) in self.strides.iter().enumerate() {
            out[i] = (row / s) as Val;
            row %= s;
        }
        out
    }

    pub fn max_entry(&self) -> f64 {
        self.table.iter().copied().fold(0.0, f64::max)
    }

    /// Largest entry strictly below the normality threshold `1 - epsilon`.
    pub fn max_fault_entry(&self, epsilon_normal: f64) -> f64 {
        self.table
            .iter()
            .copied()
            .filter(|&p| p < 1.0 - epsilon_normal)
            .fold(0.0, f64::max)
    }

    pub(crate) fn parent_arities(&self) -> &[usize] {
        &self.parent_arities
    }
}

/// Immutable Bayesian network with variables stored in a parent-first order.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    name: String,
    variables: Vec<Variable>,
    cpts: Vec<Cpt>,
    by_name: HashMap<String, VarId>,
    children: Vec<Vec<VarId>>,
}

impl Network {
    pub(crate) fn from_parts(name: String, variables: Vec<Variable>, cpts: Vec<Cpt>) -> Self {
        let by_name = variables
            .iter()
            .map(|v| (v.name.clone(), v.index))
            .collect();
        let mut children = vec![Vec::new(); variables.len()];
        for cpt in &cpts {
            for &p in cpt.parents() {
                children[p].push(cpt.owner);
            }
        }
        Self {
            name,
            variables,
            cpts,
            by_name,
            children,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, var: VarId) -> &Variable {
        &self.variables[var]
    }

    pub fn cpt(&self, var: VarId) -> &Cpt {
        &self.cpts[var]
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn parents(&self, var: VarId) -> &[VarId] {
        self.cpts[var].parents()
    }

    pub fn children(&self, var: VarId) -> &[VarId] {
        &self.children[var]
    }

    pub fn index_of(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn lookup(&self, name: &str) -> Result<VarId> {
        self.index_of(name)
            .ok_or_else(|| Error::BadReference(format!("unknown variable `{name}`")))
    }

    /// Resolves `name = value` to indices.
    pub fn resolve(&self, name: &str, value: &str) -> Result<(VarId, Val)> {
        let var = self.lookup(name)?;
        let val = self.variables[var]
            .value_index(value)
            .ok_or_else(|| Error::BadReference(format!("`{value}` is not a value of `{name}`")))?;
        Ok((var, val))
    }

    /// Product of domain sizes, as a float so it cannot overflow.
    pub fn world_count(&self) -> f64 {
        self.variables.iter().map(|v| v.arity() as f64).product()
    }

    /// Probability of `var` taking `value` given the parent values recorded in
    /// `assignment`.
    #[inline]
    pub fn conditional(&self, var: VarId, assignment: &[Val], value: Val) -> f64 {
        let cpt = &self.cpts[var];
        cpt.prob(cpt.row_in(assignment), value)
    }

    /// The normal value of `var` for the given parent tuple: the unique value
    /// whose conditional probability is at least `1 - epsilon_normal`.
    pub fn normal_value(
        &self,
        var: VarId,
        parent_values: &[Val],
        epsilon_normal: f64,
    ) -> Result<Option<Val>> {
        check_epsilon(epsilon_normal)?;
        let var_ref = self
            .variables
            .get(var)
            .ok_or_else(|| Error::BadReference(format!("variable index {var} out of range")))?;
        let cpt = &self.cpts[var];
        if parent_values.len() != cpt.parents.len() {
            return Err(Error::BadReference(format!(
                "`{}` has {} parents, got {} values",
                var_ref.name,
                cpt.parents.len(),
                parent_values.len()
            )));
        }
        for (&v, &a) in parent_values.iter().zip(&cpt.parent_arities) {
            if v as usize >= a {
                return Err(Error::BadReference(format!(
                    "parent value {v} out of range"
                )));
            }
        }
        Ok(normal_in_row(
            cpt.row(cpt.row_of(parent_values)),
            epsilon_normal,
        ))
    }
}

pub(crate) fn check_epsilon(epsilon_normal: f64) -> Result<()> {
    if epsilon_normal > 0.0 && epsilon_normal < 0.5 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "epsilon_normal must lie in (0, 0.5), got {epsilon_normal}"
        )))
    }
}

/// Value whose probability in `row` is at least `1 - epsilon_normal`, if any.
#[inline]
pub fn normal_in_row(row: &[f64], epsilon_normal: f64) -> Option<Val> {
    row.iter()
        .position(|&p| p >= 1.0 - epsilon_normal)
        .map(|i| i as Val)
}

/// A network description as read from a file: names rather than indices,
/// rows keyed by parent value names.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawNetwork {
    pub name: String,
    pub variables: Vec<RawVariable>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawVariable {
    pub name: String,
    pub domain: Vec<String>,
    pub parents: Vec<String>,
    pub rows: Vec<RawRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawRow {
    pub parent_values: Vec<String>,
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BuildOptions {
    /// Rescale rows whose sum is off by more than the tolerance instead of
    /// rejecting them.
    pub renormalize: bool,
}

impl RawNetwork {
    pub fn build(&self) -> Result<Network> {
        self.build_with(BuildOptions::default())
    }

    pub fn build_with(&self, options: BuildOptions) -> Result<Network> {
        let mut builder = NetworkBuilder::new(self.name.clone());
        for v in &self.variables {
            builder.add_variable(&v.name, v.domain.iter().map(String::as_str))?;
        }
        for v in &self.variables {
            let owner = builder.decl_index(&v.name).expect("declared above");
            let parents = v
                .parents
                .iter()
                .map(|p| {
                    builder.decl_index(p).ok_or_else(|| {
                        Error::BadReference(format!("`{}` lists unknown parent `{p}`", v.name))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let arities: Vec<usize> = parents.iter().map(|&p| builder.domains[p].len()).collect();
            let arity = builder.domains[owner].len();
            let row_count: usize = arities.iter().product();
            let mut table = vec![f64::NAN; row_count * arity];
            let mut seen = vec![false; row_count];
            for row in &v.rows {
                if row.parent_values.len() != parents.len() {
                    return Err(Error::BadReference(format!(
                        "row of `{}` gives {} parent values, expected {}",
                        v.name,
                        row.parent_values.len(),
                        parents.len()
                    )));
                }
                if row.probs.len() != arity {
                    return Err(Error::IncompleteCpt {
                        var: v.name.clone(),
                        detail: format!("row has {} entries, expected {arity}", row.probs.len()),
                    });
                }
                let mut index = 0;
                for (pv, &p) in row.parent_values.iter().zip(&parents) {
                    let pos = builder.domains[p]
                        .iter()
                        .position(|d| d == pv)
                        .ok_or_else(|| {
                            Error::BadReference(format!(
                                "`{pv}` is not a value of `{}`",
                                builder.names[p]
                            ))
                        })?;
                    index = index * builder.domains[p].len() + pos;
                }
                if std::mem::replace(&mut seen[index], true) {
                    return Err(Error::IncompleteCpt {
                        var: v.name.clone(),
                        detail: format!("duplicate row for ({})", row.parent_values.join(" ")),
                    });
                }
                table[index * arity..(index + 1) * arity].copy_from_slice(&row.probs);
            }
            if let Some(missing) = seen.iter().position(|s| !s) {
                return Err(Error::IncompleteCpt {
                    var: v.name.clone(),
                    detail: format!(
                        "{} of {row_count} rows missing (first: row {missing})",
                        seen.iter().filter(|s| !**s).count()
                    ),
                });
            }
            builder.set_cpt(owner, parents, table)?;
        }
        builder.build_with(options)
    }
}

/// Index-based construction. Variables are addressed by declaration order;
/// [`NetworkBuilder::build`] sorts them into a parent-first order.
#[derive(Debug, Clone, Default)]
pub struct NetworkBuilder {
    name: String,
    names: Vec<String>,
    domains: Vec<Vec<String>>,
    parents: Vec<Vec<usize>>,
    tables: Vec<Option<Vec<f64>>>,
    by_name: HashMap<String, usize>,
}

impl NetworkBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    pub fn decl_index(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn add_variable<'a>(
        &mut self,
        name: &str,
        domain: impl IntoIterator<Item = &'a str>,
    ) -> Result<usize> {
        if self.by_name.contains_key(name) {
            return Err(Error::BadReference(format!(
                "variable `{name}` declared twice"
            )));
        }
        let domain: Vec<String> = domain.into_iter().map(str::to_owned).collect();
        if domain.is_empty() {
            return Err(Error::BadReference(format!(
                "variable `{name}` has an empty domain"
            )));
        }
        if domain.len() > Val::MAX as usize {
            return Err(Error::BadReference(format!(
                "domain of `{name}` is too large"
            )));
        }
        let unique: HashSet<&String> = domain.iter().collect();
        if unique.len() != domain.len() {
            return Err(Error::BadReference(format!(
                "domain of `{name}` repeats a value"
            )));
        }
        let index = self.names.len();
        self.by_name.insert(name.to_owned(), index);
        self.names.push(name.to_owned());
        self.domains.push(domain);
        self.parents.push(Vec::new());
        self.tables.push(None);
        Ok(index)
    }

    /// Sets the CPT of `var`. `table` holds one row per parent tuple in
    /// mixed-radix order (last parent fastest), each row one entry per value.
    pub fn set_cpt(&mut self, var: usize, parents: Vec<usize>, table: Vec<f64>) -> Result<()> {
        let name = self
            .names
            .get(var)
            .ok_or_else(|| Error::BadReference(format!("variable index {var} out of range")))?
            .clone();
        for &p in &parents {
            if p >= self.names.len() {
                return Err(Error::BadReference(format!(
                    "`{name}` has unknown parent index {p}"
                )));
            }
        }
        let unique: HashSet<&usize> = parents.iter().collect();
        if unique.len() != parents.len() {
            return Err(Error::BadReference(format!(
                "`{name}` lists a parent twice"
            )));
        }
        let rows: usize = parents.iter().map(|&p| self.domains[p].len()).product();
        let expected = rows * self.domains[var].len();
        if table.len() != expected {
            return Err(Error::IncompleteCpt {
                var: name,
                detail: format!("table has {} entries, expected {expected}", table.len()),
            });
        }
        self.parents[var] = parents;
        self.tables[var] = Some(table);
        Ok(())
    }

    pub fn build(self) -> Result<Network> {
        self.build_with(BuildOptions::default())
    }

    pub fn build_with(self, options: BuildOptions) -> Result<Network> {
        let n = self.names.len();
        let order = self.topological_order()?;
        let mut new_index = vec![0; n];
        for (pos, &decl) in order.iter().enumerate() {
            new_index[decl] = pos;
        }

        let mut variables = Vec::with_capacity(n);
        let mut cpts = Vec::with_capacity(n);
        let mut tables = self.tables;
        for (pos, &decl) in order.iter().enumerate() {
            let name = &self.names[decl];
            let mut table = tables[decl].take().ok_or_else(|| Error::IncompleteCpt {
                var: name.clone(),
                detail: "no CPT given".into(),
            })?;
            let arity = self.domains[decl].len();
            for (r, row) in table.chunks_exact_mut(arity).enumerate() {
                if row.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
                    return Err(Error::UnnormalizedRow {
                        var: name.clone(),
                        row: r,
                        sum: row.iter().sum(),
                    });
                }
                let sum = crate::numeric::sum(row.iter().copied());
                if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                    if options.renormalize && sum > 0.0 {
                        row.iter_mut().for_each(|p| *p /= sum);
                    } else {
                        return Err(Error::UnnormalizedRow {
                            var: name.clone(),
                            row: r,
                            sum,
                        });
                    }
                }
            }
            let parents: Vec<VarId> = self.parents[decl].iter().map(|&p| new_index[p]).collect();
            let arities = self.parents[decl]
                .iter()
                .map(|&p| self.domains[p].len())
                .collect();
            cpts.push(Cpt::new(pos, parents, arities, arity, table));
            variables.push(Variable {
                index: pos,
                name: name.clone(),
                domain: self.domains[decl].clone(),
            });
        }
        Ok(Network::from_parts(self.name, variables, cpts))
    }

    /// Kahn's algorithm; among ready variables the earliest declared wins.
    fn topological_order(&self) -> Result<Vec<usize>> {
        let n = self.names.len();
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut children = vec![Vec::new(); n];
        for (c, ps) in self.parents.iter().enumerate() {
            for &p in ps {
                children[p].push(c);
            }
        }
        let mut ready: BinaryHeap<Reverse<usize>> =
            (0..n).filter(|&v| indegree[v] == 0).map(Reverse).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(Reverse(v)) = ready.pop() {
            order.push(v);
            for &c in &children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.push(Reverse(c));
                }
            }
        }
        if order.len() < n {
            let stuck = (0..n)
                .filter(|&v| indegree[v] > 0)
                .map(|v| self.names[v].clone())
                .collect();
            return Err(Error::CyclicNetwork(stuck));
        }
        Ok(order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain_declared_backwards() -> NetworkBuilder {
        let mut b = NetworkBuilder::new("chain");
        let bv = b.add_variable("B", ["t", "f"]).unwrap();
        let av = b.add_variable("A", ["t", "f"]).unwrap();
        b.set_cpt(bv, vec![av], vec![0.8, 0.2, 0.3, 0.7]).unwrap();
        b.set_cpt(av, vec![], vec![0.9, 0.1]).unwrap();
        b
    }

    #[test]
    fn parents_are_ordered_first() {
        let net = chain_declared_backwards().build().unwrap();
        assert_eq!(net.variable(0).name, "A");
        assert_eq!(net.variable(1).name, "B");
        assert_eq!(net.parents(1), &[0]);
        assert_eq!(net.children(0), &[1]);
    }

    #[test]
    fn ties_keep_declaration_order() {
        let mut b = NetworkBuilder::new("roots");
        for name in ["z", "y", "x"] {
            let v = b.add_variable(name, ["a"]).unwrap();
            b.set_cpt(v, vec![], vec![1.0]).unwrap();
        }
        let net = b.build().unwrap();
        let names: Vec<_> = net.variables().iter().map(|v| v.name.as_str()).collect();
        assert_eq!(names, ["z", "y", "x"]);
    }

    #[test]
    fn cycles_are_rejected() {
        let mut b = NetworkBuilder::new("cyc");
        let a = b.add_variable("a", ["0", "1"]).unwrap();
        let c = b.add_variable("c", ["0", "1"]).unwrap();
        b.set_cpt(a, vec![c], vec![0.5; 4]).unwrap();
        b.set_cpt(c, vec![a], vec![0.5; 4]).unwrap();
        assert!(matches!(b.build(), Err(Error::CyclicNetwork(_))));
    }

    #[test]
    fn unnormalized_rows_are_rejected_unless_renormalizing() {
        let mut b = NetworkBuilder::new("bad");
        let a = b.add_variable("a", ["0", "1"]).unwrap();
        b.set_cpt(a, vec![], vec![0.5, 0.6]).unwrap();
        assert!(matches!(
            b.clone().build(),
            Err(Error::UnnormalizedRow { .. })
        ));
        let net = b.build_with(BuildOptions { renormalize: true }).unwrap();
        assert!((net.cpt(0).prob(0, 0) - 0.5 / 1.1).abs() < 1e-15);
    }

    #[test]
    fn status_prior_row_is_accepted() {
        let mut b = NetworkBuilder::new("status");
        let a = b.add_variable("a2ok", ["ok", "stuck1", "stuck0"]).unwrap();
        b.set_cpt(a, vec![], vec![0.99999, 0.000005, 0.000005])
            .unwrap();
        let net = b.build().unwrap();
        assert_eq!(net.normal_value(0, &[], 1e-3).unwrap(), Some(0));
    }

    #[test]
    fn uniform_root_has_no_normal_value() {
        let mut b = NetworkBuilder::new("u");
        let a = b.add_variable("a", ["0", "1"]).unwrap();
        b.set_cpt(a, vec![], vec![0.5, 0.5]).unwrap();
        let net = b.build().unwrap();
        assert_eq!(net.normal_value(0, &[], 1e-3).unwrap(), None);
        assert!(net.normal_value(0, &[], 0.5).is_err());
        assert!(net.normal_value(0, &[1], 1e-3).is_err());
    }

    #[test]
    fn row_encoding_round_trips() {
        let mut b = NetworkBuilder::new("radix");
        let p = b.add_variable("p", ["a", "b", "c"]).unwrap();
        let q = b.add_variable("q", ["x", "y"]).unwrap();
        let r = b.add_variable("r", ["0", "1"]).unwrap();
        b.set_cpt(p, vec![], vec![0.2, 0.3, 0.5]).unwrap();
        b.set_cpt(q, vec![], vec![0.5, 0.5]).unwrap();
        b.set_cpt(
            r,
            vec![p, q],
            (0..6)
                .flat_map(|i| [i as f64 / 10.0, 1.0 - i as f64 / 10.0])
                .collect(),
        )
        .unwrap();
        let net = b.build().unwrap();
        let cpt = net.cpt(2);
        assert_eq!(cpt.row_count(), 6);
        for row in 0..6 {
            assert_eq!(cpt.row_of(&cpt.parent_tuple(row)), row);
        }
        // last parent varies fastest
        assert_eq!(cpt.row_of(&[1, 0]), 2);
        assert_eq!(cpt.row_in(&[2, 1, 0]), 5);
    }
}
