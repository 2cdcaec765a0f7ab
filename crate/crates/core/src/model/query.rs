use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use super::network::{Network, Val, VarId};
use crate::error::{Error, Result};

/// Conjunction of `variable = value` assignments.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Observation {
    assignments: BTreeMap<VarId, Val>,
}

impl Observation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_names<'a>(
        net: &Network,
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self> {
        let mut obs = Self::new();
        for (name, value) in pairs {
            let (var, val) = net.resolve(name, value)?;
            obs.insert(net, var, val)?;
        }
        Ok(obs)
    }

    /// Adds `var = value`. Re-asserting the same value is a no-op; a
    /// conflicting value is an error.
    pub fn insert(&mut self, net: &Network, var: VarId, value: Val) -> Result<()> {
        if var >= net.len() || value as usize >= net.variable(var).arity() {
            return Err(Error::BadReference(format!(
                "observation {var}={value} out of range"
            )));
        }
        match self.assignments.get(&var) {
            Some(&old) if old != value => Err(Error::BadReference(format!(
                "`{}` observed with two values",
                net.variable(var).name
            ))),
            _ => {
                self.assignments.insert(var, value);
                Ok(())
            }
        }
    }

    pub fn get(&self, var: VarId) -> Option<Val> {
        self.assignments.get(&var).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, Val)> + '_ {
        self.assignments.iter().map(|(&k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    /// Largest observed variable index.
    pub fn last_var(&self) -> Option<VarId> {
        self.assignments.keys().next_back().copied()
    }

    /// One slot per network variable.
    pub fn dense(&self, n: usize) -> Vec<Option<Val>> {
        let mut out = vec![None; n];
        for (var, val) in self.iter() {
            out[var] = Some(val);
        }
        out
    }

    /// True when `world` (indexed by variable) agrees with every assignment.
    pub fn holds_in(&self, world: &[Val]) -> bool {
        self.iter().all(|(var, val)| world[var] == val)
    }
}

/// Three-valued truth used when evaluating formulas on partial descriptions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Truth {
    True,
    False,
    Unknown,
}

impl Truth {
    fn not(self) -> Self {
        match self {
            Truth::True => Truth::False,
            Truth::False => Truth::True,
            Truth::Unknown => Truth::Unknown,
        }
    }
}

impl From<bool> for Truth {
    fn from(b: bool) -> Self {
        if b {
            Truth::True
        } else {
            Truth::False
        }
    }
}

/// Propositional formula over `variable = value` atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryFormula {
    Const(bool),
    Atom { var: VarId, value: Val },
    Not(Box<QueryFormula>),
    And(Vec<QueryFormula>),
    Or(Vec<QueryFormula>),
}

impl QueryFormula {
    pub fn atom(var: VarId, value: Val) -> Self {
        QueryFormula::Atom { var, value }
    }

    /// Parses `name=value` atoms joined by `!`, `&`, `|` and parentheses.
    pub fn parse(text: &str, net: &Network) -> Result<Self> {
        let mut parser = FormulaParser { text, pos: 0, net };
        let f = parser.parse_or()?;
        parser.skip_ws();
        if parser.pos < text.len() {
            return Err(parser.error("unexpected trailing input"));
        }
        Ok(f)
    }

    /// Kleene evaluation against the first `values.len()` variables; atoms on
    /// later variables are unknown.
    pub fn evaluate_prefix(&self, values: &[Val]) -> Truth {
        match self {
            QueryFormula::Const(b) => (*b).into(),
            QueryFormula::Atom { var, value } => match values.get(*var) {
                Some(v) => (v == value).into(),
                None => Truth::Unknown,
            },
            QueryFormula::Not(f) => f.evaluate_prefix(values).not(),
            QueryFormula::And(fs) => {
                let mut out = Truth::True;
                for f in fs {
                    match f.evaluate_prefix(values) {
                        Truth::False => return Truth::False,
                        Truth::Unknown => out = Truth::Unknown,
                        Truth::True => {}
                    }
                }
                out
            }
            QueryFormula::Or(fs) => {
                let mut out = Truth::False;
                for f in fs {
                    match f.evaluate_prefix(values) {
                        Truth::True => return Truth::True,
                        Truth::Unknown => out = Truth::Unknown,
                        Truth::False => {}
                    }
                }
                out
            }
        }
    }

    /// Two-valued evaluation in a complete world.
    pub fn holds(&self, world: &[Val]) -> bool {
        self.evaluate_prefix(world) == Truth::True
    }

    pub fn variables(&self) -> Vec<VarId> {
        fn walk(f: &QueryFormula, out: &mut Vec<VarId>) {
            match f {
                QueryFormula::Const(_) => {}
                QueryFormula::Atom { var, .. } => out.push(*var),
                QueryFormula::Not(g) => walk(g, out),
                QueryFormula::And(gs) | QueryFormula::Or(gs) => {
                    gs.iter().for_each(|g| walk(g, out))
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Rewrites variable indices through `map`; `None` entries are errors.
    pub fn remap(&self, map: &[Option<VarId>]) -> Result<Self> {
        Ok(match self {
            QueryFormula::Const(b) => QueryFormula::Const(*b),
            QueryFormula::Atom { var, value } => QueryFormula::Atom {
                var: map.get(*var).copied().flatten().ok_or_else(|| {
                    Error::BadReference(format!("query variable {var} was pruned"))
                })?,
                value: *value,
            },
            QueryFormula::Not(f) => QueryFormula::Not(Box::new(f.remap(map)?)),
            QueryFormula::And(fs) => {
                QueryFormula::And(fs.iter().map(|f| f.remap(map)).collect::<Result<_>>()?)
            }
            QueryFormula::Or(fs) => {
                QueryFormula::Or(fs.iter().map(|f| f.remap(map)).collect::<Result<_>>()?)
            }
        })
    }

    pub fn display<'a>(&'a self, net: &'a Network) -> impl fmt::Display + 'a {
        FormulaDisplay { f: self, net }
    }
}

struct FormulaDisplay<'a> {
    f: &'a QueryFormula,
    net: &'a Network,
}

impl fmt::Display for FormulaDisplay<'_> {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |out: &mut fmt::Formatter<'_>, fs: &[QueryFormula], op: &str| {
            write!(out, "(")?;
            for (i, g) in fs.iter().enumerate() {
                if i > 0 {
                    write!(out, " {op} ")?;
                }
                write!(out, "{}", g.display(self.net))?;
            }
            write!(out, ")")
        };
        match self.f {
            QueryFormula::Const(b) => write!(out, "{b}"),
            QueryFormula::Atom { var, value } => {
                let v = self.net.variable(*var);
                write!(out, "{}={}", v.name, v.value_name(*value))
            }
            QueryFormula::Not(g) => write!(out, "!{}", g.display(self.net)),
            QueryFormula::And(gs) => join(out, gs, "&"),
            QueryFormula::Or(gs) => join(out, gs, "|"),
        }
    }
}

struct FormulaParser<'a> {
    text: &'a str,
    pos: usize,
    net: &'a Network,
}

impl FormulaParser<'_> {
    fn error(&self, message: &str) -> Error {
        Error::Parse {
            line: 1,
            col: self.text[..self.pos].chars().count() + 1,
            message: message.to_owned(),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn parse_or(&mut self) -> Result<QueryFormula> {
        let mut terms = vec![self.parse_and()?];
        while self.eat('|') {
            terms.push(self.parse_and()?);
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            QueryFormula::Or(terms)
        })
    }

    fn parse_and(&mut self) -> Result<QueryFormula> {
        let mut terms = vec![self.parse_unary()?];
        while self.eat('&') {
            terms.push(self.parse_unary()?);
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            QueryFormula::And(terms)
        })
    }

    fn parse_unary(&mut self) -> Result<QueryFormula> {
        if self.eat('!') {
            return Ok(QueryFormula::Not(Box::new(self.parse_unary()?)));
        }
        if self.eat('(') {
            let f = self.parse_or()?;
            if !self.eat(')') {
                return Err(self.error("expected `)`"));
            }
            return Ok(f);
        }
        self.parse_atom()
    }

    fn ident(&mut self) -> Result<&str> {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | '\'') {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        if self.pos == start {
            return Err(self.error("expected a name"));
        }
        Ok(&self.text[start..self.pos])
    }

    fn parse_atom(&mut self) -> Result<QueryFormula> {
        let name = self.ident()?.to_owned();
        if !self.eat('=') {
            return Err(self.error("expected `=`"));
        }
        let value = self.ident()?.to_owned();
        let (var, value) = self.net.resolve(&name, &value)?;
        Ok(QueryFormula::Atom { var, value })
    }
}
