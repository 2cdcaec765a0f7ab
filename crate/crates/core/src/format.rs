//! Line-based text formats for networks and evidence.
//!
//! ```text
//! # comment
//! net <name>
//! var <name> <value>+
//! parents <var> <parent>*
//! cpt <var>
//! <parent values> | <probabilities>
//! end
//! ```
//!
//! Sections appear in that order. A `cpt` block has one row per parent
//! tuple; a root's single row is `| p1 .. pm`. Evidence files hold one
//! `name = value` per line.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{Network, Observation, RawNetwork, RawRow, RawVariable};

fn parse_err(line: usize, col: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        col,
        message: message.into(),
    }
}

/// Whitespace-separated tokens with their 1-based columns, comments removed.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let code = line.split('#').next().unwrap_or("");
    let mut out = Vec::new();
    let mut start = None;
    for (i, (byte, c)) in code.char_indices().enumerate() {
        match (c.is_whitespace(), start) {
            (false, None) => start = Some((i + 1, byte)),
            (true, Some((col, from))) => {
                out.push((col, &code[from..byte]));
                start = None;
            }
            _ => {}
        }
    }
    if let Some((col, from)) = start {
        out.push((col, &code[from..]));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Section {
    Start,
    Net,
    Vars,
    Parents,
    Cpts,
    End,
}

/// Parses the network format into its raw description. Structural checks
/// (declared names, arities, parent-value counts) happen here; CPT
/// completeness and acyclicity are checked when the description is built.
pub fn parse_network(text: &str) -> Result<RawNetwork> {
    let mut raw = RawNetwork::default();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut parents_set = vec![];
    let mut section = Section::Start;
    let mut current_cpt: Option<usize> = None;
    let mut last_line = 0;

    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        last_line = lineno;
        let toks = tokens(line);
        let Some(&(col, head)) = toks.first() else {
            continue;
        };
        if section == Section::End {
            return Err(parse_err(lineno, col, "content after `end`"));
        }
        let mut enter = |next: Section, what: &str| -> Result<()> {
            if next < section || (section == Section::Start && next != Section::Net) {
                return Err(parse_err(lineno, col, format!("`{what}` out of order")));
            }
            if next == Section::Net && section != Section::Start {
                return Err(parse_err(lineno, col, "`net` given twice"));
            }
            section = next;
            Ok(())
        };
        let lookup = |name: &str, col: usize, index: &HashMap<String, usize>| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| parse_err(lineno, col, format!("undeclared variable `{name}`")))
        };

        match head {
            "net" => {
                enter(Section::Net, "net")?;
                match toks.as_slice() {
                    [_, (_, name)] => raw.name = (*name).to_owned(),
                    [_] => return Err(parse_err(lineno, col + 3, "expected a network name")),
                    [_, _, (c, _), ..] => return Err(parse_err(lineno, *c, "unexpected token")),
                    [] => unreachable!(),
                }
            }
            "var" => {
                enter(Section::Vars, "var")?;
                let Some(&(ncol, name)) = toks.get(1) else {
                    return Err(parse_err(lineno, col + 3, "expected a variable name"));
                };
                if toks.len() < 3 {
                    return Err(parse_err(
                        lineno,
                        ncol + name.len(),
                        "expected at least one value",
                    ));
                }
                if index.contains_key(name) {
                    return Err(parse_err(
                        lineno,
                        ncol,
                        format!("variable `{name}` declared twice"),
                    ));
                }
                let domain: Vec<String> = toks[2..].iter().map(|(_, v)| (*v).to_owned()).collect();
                for (j, (vcol, v)) in toks[2..].iter().enumerate() {
                    if domain[..j].iter().any(|d| d == v) {
                        return Err(parse_err(lineno, *vcol, format!("value `{v}` repeated")));
                    }
                }
                index.insert(name.to_owned(), raw.variables.len());
                parents_set.push(false);
                raw.variables.push(RawVariable {
                    name: name.to_owned(),
                    domain,
                    ..RawVariable::default()
                });
            }
            "parents" => {
                enter(Section::Parents, "parents")?;
                let Some(&(ncol, name)) = toks.get(1) else {
                    return Err(parse_err(lineno, col + 7, "expected a variable name"));
                };
                let v = lookup(name, ncol, &index)?;
                if std::mem::replace(&mut parents_set[v], true) {
                    return Err(parse_err(
                        lineno,
                        ncol,
                        format!("parents of `{name}` given twice"),
                    ));
                }
                let mut ps = Vec::new();
                for &(pcol, p) in &toks[2..] {
                    lookup(p, pcol, &index)?;
                    if ps.iter().any(|q: &String| q == p) {
                        return Err(parse_err(lineno, pcol, format!("parent `{p}` repeated")));
                    }
                    ps.push(p.to_owned());
                }
                raw.variables[v].parents = ps;
            }
            "cpt" => {
                enter(Section::Cpts, "cpt")?;
                let Some(&(ncol, name)) = toks.get(1) else {
                    return Err(parse_err(lineno, col + 3, "expected a variable name"));
                };
                if let Some(&(c, _)) = toks.get(2) {
                    return Err(parse_err(lineno, c, "unexpected token"));
                }
                let v = lookup(name, ncol, &index)?;
                if !raw.variables[v].rows.is_empty() {
                    return Err(parse_err(
                        lineno,
                        ncol,
                        format!("cpt of `{name}` given twice"),
                    ));
                }
                current_cpt = Some(v);
            }
            "end" => {
                if section < Section::Net {
                    return Err(parse_err(lineno, col, "`end` before `net`"));
                }
                section = Section::End;
                current_cpt = None;
            }
            _ => {
                let Some(v) = current_cpt.filter(|_| section == Section::Cpts) else {
                    return Err(parse_err(lineno, col, format!("unexpected `{head}`")));
                };
                let bar = toks
                    .iter()
                    .position(|(_, t)| *t == "|")
                    .ok_or_else(|| parse_err(lineno, col, "cpt row lacks `|`"))?;
                let var = &raw.variables[v];
                if bar != var.parents.len() {
                    let c = toks[bar].0;
                    return Err(parse_err(
                        lineno,
                        c,
                        format!(
                            "expected {} parent values before `|`, found {bar}",
                            var.parents.len()
                        ),
                    ));
                }
                let probs = toks[bar + 1..]
                    .iter()
                    .map(|&(c, t)| match t.parse::<f64>() {
                        Ok(p) if p.is_finite() => Ok(p),
                        _ => Err(parse_err(lineno, c, format!("`{t}` is not a probability"))),
                    })
                    .collect::<Result<Vec<f64>>>()?;
                if probs.len() != var.domain.len() {
                    let c = toks.last().map_or(col, |&(c, _)| c);
                    return Err(parse_err(
                        lineno,
                        c,
                        format!(
                            "`{}` has {} values but the row gives {} probabilities",
                            var.name,
                            var.domain.len(),
                            probs.len()
                        ),
                    ));
                }
                let parent_values = toks[..bar].iter().map(|(_, t)| (*t).to_owned()).collect();
                raw.variables[v].rows.push(RawRow {
                    parent_values,
                    probs,
                });
            }
        }
    }
    if section != Section::End {
        return Err(parse_err(last_line.max(1), 1, "missing `end`"));
    }
    Ok(raw)
}

/// Parses and builds a network.
pub fn read_network(text: &str) -> Result<Network> {
    parse_network(text)?.build()
}

/// Writes `net` in the network format; rows follow the CPT's parent-tuple
/// order and probabilities use shortest round-trip formatting.
pub fn emit_network(net: &Network) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "net {}", net.name());
    for v in net.variables() {
        let _ = writeln!(out, "var {} {}", v.name, v.domain.join(" "));
    }
    for v in net.variables() {
        let parents = net.parents(v.index);
        if !parents.is_empty() {
            let names: Vec<&str> = parents
                .iter()
                .map(|&p| net.variable(p).name.as_str())
                .collect();
            let _ = writeln!(out, "parents {} {}", v.name, names.join(" "));
        }
    }
    for v in net.variables() {
        let cpt = net.cpt(v.index);
        let _ = writeln!(out, "cpt {}", v.name);
        for row in 0..cpt.row_count() {
            let tuple = cpt.parent_tuple(row);
            let mut line: Vec<String> = cpt
                .parents()
                .iter()
                .zip(&tuple)
                .map(|(&p, &val)| net.variable(p).value_name(val).to_owned())
                .collect();
            line.push("|".into());
            line.extend(cpt.row(row).iter().map(|p| p.to_string()));
            let _ = writeln!(out, "{}", line.join(" "));
        }
    }
    out.push_str("end\n");
    out
}

/// Parses `name = value` lines against `net`.
pub fn parse_evidence(text: &str, net: &Network) -> Result<Observation> {
    let mut obs = Observation::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let code = line.split('#').next().unwrap_or("");
        if code.trim().is_empty() {
            continue;
        }
        let col_of = |s: &str| {
            line[..(s.as_ptr() as usize - line.as_ptr() as usize)]
                .chars()
                .count()
                + 1
        };
        let Some((name, value)) = code.split_once('=') else {
            return Err(parse_err(
                lineno,
                col_of(code.trim_start()),
                "expected `name = value`",
            ));
        };
        let (name, value) = (name.trim(), value.trim());
        if name.is_empty() || value.is_empty() || value.contains(char::is_whitespace) {
            return Err(parse_err(
                lineno,
                col_of(code.trim_start()),
                "expected `name = value`",
            ));
        }
        let (var, val) = net
            .resolve(name, value)
            .map_err(|e| parse_err(lineno, col_of(name), e.to_string()))?;
        obs.insert(net, var, val)
            .map_err(|e| parse_err(lineno, col_of(name), e.to_string()))?;
    }
    Ok(obs)
}

/// Writes `obs` as `name = value` lines in variable order.
pub fn emit_evidence(obs: &Observation, net: &Network) -> String {
    let mut out = String::new();
    for (var, val) in obs.iter() {
        let v = net.variable(var);
        let _ = writeln!(out, "{} = {}", v.name, v.value_name(val));
    }
    out
}
