//! Cascaded n-bit adders with stuck-at gate faults, output-error scenarios
//! and an expansion-count benchmark.
//!
//! Each bit is a full adder: `x1 = xor(i1, i2)`, `x2 = xor(x1, i3)` (the
//! bit's output), `a1 = and(i1, i2)`, `a2 = and(x1, i3)`, `o1 = or(a1, a2)`
//! (the carry). Every gate has a status variable with values
//! `ok | stuck1 | stuck0`; the carry of bit `k - 1` feeds `i3` of bit `k`.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Network, NetworkBuilder, Observation, Val, VarId};
use crate::search::{top_m_worlds, SearchParams, Strategy};

pub const STATUS_VALUES: [&str; 3] = ["ok", "stuck1", "stuck0"];
pub const SIGNAL_VALUES: [&str; 2] = ["on", "off"];
pub const DEFAULT_STATUS_PRIOR: [f64; 3] = [0.99999, 0.000005, 0.000005];
pub const VARS_PER_BIT: usize = 13;

pub const OK: Val = 0;
pub const ON: Val = 0;
pub const OFF: Val = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateKind {
    Xor,
    And,
    Or,
}

impl GateKind {
    pub fn eval(self, a: bool, b: bool) -> bool {
        match self {
            Self::Xor => a != b,
            Self::And => a && b,
            Self::Or => a || b,
        }
    }
}

/// Gate names in per-bit order, with kind and input signal names.
pub const GATES: [(&str, GateKind, &str, &str); 5] = [
    ("x1", GateKind::Xor, "i1", "i2"),
    ("x2", GateKind::Xor, "out-x1", "i3"),
    ("a1", GateKind::And, "i1", "i2"),
    ("a2", GateKind::And, "out-x1", "i3"),
    ("o1", GateKind::Or, "out-a1", "out-a2"),
];

#[derive(Debug, Clone, PartialEq)]
pub enum InputPolicy {
    /// Inputs fixed with probability one; bit `k` of `a` and `b` is
    /// `a[k - 1]`, `b[k - 1]`.
    PointMass {
        a: Vec<bool>,
        b: Vec<bool>,
        carry_in: bool,
    },
    /// Every root input is on or off with probability one half.
    Uniform,
}

impl InputPolicy {
    pub fn zeros(n_bits: usize) -> Self {
        Self::PointMass {
            a: vec![false; n_bits],
            b: vec![false; n_bits],
            carry_in: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdderSpec {
    pub n_bits: usize,
    pub inputs: InputPolicy,
    pub status_prior: [f64; 3],
}

impl AdderSpec {
    /// All inputs zero with probability one.
    pub fn new(n_bits: usize) -> Self {
        Self {
            n_bits,
            inputs: InputPolicy::zeros(n_bits),
            status_prior: DEFAULT_STATUS_PRIOR,
        }
    }
}

/// An adder network together with its size.
#[derive(Debug, Clone)]
pub struct Adder {
    pub network: Network,
    pub n_bits: usize,
}

impl Adder {
    /// Index of `<base>_<bit>`, e.g. `("out-x2", 3)`.
    pub fn var(&self, base: &str, bit: usize) -> Result<VarId> {
        self.network
            .index_of(&format!("{base}_{bit}"))
            .ok_or_else(|| Error::BadReference(format!("no variable `{base}_{bit}`")))
    }

    pub fn status_vars(&self) -> Vec<VarId> {
        (1..=self.n_bits)
            .flat_map(|bit| GATES.iter().map(move |(g, ..)| (g, bit)))
            .map(|(g, bit)| self.var(&format!("{g}ok"), bit).expect("status variable"))
            .collect()
    }

    /// Status variables of `world` that are not `ok`, as `name=value`.
    pub fn faults(&self, world: &[Val]) -> Vec<String> {
        self.status_vars()
            .into_iter()
            .filter(|&v| world[v] != OK)
            .map(|v| {
                let var = self.network.variable(v);
                format!("{}={}", var.name, var.value_name(world[v]))
            })
            .collect()
    }
}

fn bool_val(on: bool) -> Val {
    if on {
        ON
    } else {
        OFF
    }
}

/// Builds the cascaded adder described by `spec`.
pub fn build_adder(spec: &AdderSpec) -> Result<Adder> {
    let n = spec.n_bits;
    if n == 0 {
        return Err(Error::InvalidParameter(
            "an adder needs at least one bit".into(),
        ));
    }
    if let InputPolicy::PointMass { a, b, .. } = &spec.inputs {
        if a.len() != n || b.len() != n {
            return Err(Error::InvalidParameter(format!(
                "input vectors must have {n} bits, got {} and {}",
                a.len(),
                b.len()
            )));
        }
    }

    let root = |on: Option<bool>| match on {
        Some(true) => vec![1.0, 0.0],
        Some(false) => vec![0.0, 1.0],
        None => vec![0.5, 0.5],
    };
    let input = |which: &str, bit: usize| -> Option<bool> {
        match &spec.inputs {
            InputPolicy::PointMass { a, b, carry_in } => Some(match which {
                "i1" => a[bit - 1],
                "i2" => b[bit - 1],
                _ => *carry_in,
            }),
            InputPolicy::Uniform => None,
        }
    };

    let mut b = NetworkBuilder::new(format!("adder{n}"));
    let mut prev_carry = None;
    for bit in 1..=n {
        let name = |base: &str| format!("{base}_{bit}");
        let i1 = b.add_variable(&name("i1"), SIGNAL_VALUES)?;
        b.set_cpt(i1, vec![], root(input("i1", bit)))?;
        let i2 = b.add_variable(&name("i2"), SIGNAL_VALUES)?;
        b.set_cpt(i2, vec![], root(input("i2", bit)))?;
        let i3 = b.add_variable(&name("i3"), SIGNAL_VALUES)?;
        match prev_carry {
            None => b.set_cpt(i3, vec![], root(input("i3", bit)))?,
            Some(carry) => b.set_cpt(i3, vec![carry], vec![1.0, 0.0, 0.0, 1.0])?,
        }

        let mut outs: Vec<(String, usize)> =
            vec![("i1".into(), i1), ("i2".into(), i2), ("i3".into(), i3)];
        for (gate, kind, in_a, in_b) in GATES {
            let status = b.add_variable(&name(&format!("{gate}ok")), STATUS_VALUES)?;
            b.set_cpt(status, vec![], spec.status_prior.to_vec())?;
            let out = b.add_variable(&name(&format!("out-{gate}")), SIGNAL_VALUES)?;
            let find = |s: &str| {
                outs.iter()
                    .find(|(k, _)| k == s)
                    .map(|&(_, v)| v)
                    .expect("wired earlier")
            };
            let (pa, pb) = (find(in_a), find(in_b));
            b.set_cpt(out, vec![status, pa, pb], gate_table(kind))?;
            outs.push((format!("out-{gate}"), out));
        }
        prev_carry = outs.last().map(|&(_, v)| v);
    }
    Ok(Adder {
        network: b.build()?,
        n_bits: n,
    })
}

/// Rows over (status, a, b) with `b` varying fastest; columns (on, off).
fn gate_table(kind: GateKind) -> Vec<f64> {
    let mut table = Vec::with_capacity(24);
    for status in 0..3 {
        for a in [true, false] {
            for b in [true, false] {
                let on = match status {
                    0 => kind.eval(a, b),
                    1 => true,
                    _ => false,
                };
                table.extend(if on { [1.0, 0.0] } else { [0.0, 1.0] });
            }
        }
    }
    table
}

/// Observes every output bit: on for the bits in `ones`, off elsewhere.
pub fn output_scenario(adder: &Adder, ones: &[usize]) -> Result<Observation> {
    if let Some(&bad) = ones.iter().find(|&&k| k == 0 || k > adder.n_bits) {
        return Err(Error::InvalidParameter(format!(
            "output bit {bad} outside 1..={}",
            adder.n_bits
        )));
    }
    let mut obs = Observation::new();
    for bit in 1..=adder.n_bits {
        obs.insert(
            &adder.network,
            adder.var("out-x2", bit)?,
            bool_val(ones.contains(&bit)),
        )?;
    }
    Ok(obs)
}

/// All outputs off except bit `k`.
pub fn single_error_scenario(adder: &Adder, k: usize) -> Result<Observation> {
    output_scenario(adder, &[k])
}

/// All outputs off except bits `k1` and `k2`.
pub fn double_error_scenario(adder: &Adder, k1: usize, k2: usize) -> Result<Observation> {
    output_scenario(adder, &[k1, k2])
}

/// One benchmark configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GridPoint {
    pub n_bits: usize,
    pub k: usize,
    pub conflicts: bool,
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BenchmarkRow {
    pub n_bits: usize,
    pub k: usize,
    pub conflicts: bool,
    pub m: usize,
    pub expansions: u64,
    pub worlds: usize,
    pub max_error: f64,
    pub wall_ms: f64,
    pub error: Option<String>,
}

pub const BENCHMARK_CSV_HEADER: &str = "nBits,k,conflicts,m,expansions,worlds,maxError,wallMs";

/// Runs every grid point with a single error at bit `k` and records the
/// cost of finding the `m` most probable worlds. Failures are kept per row.
pub fn run_benchmark(grid: &[GridPoint], strategy: Strategy) -> Vec<BenchmarkRow> {
    grid.iter().map(|&p| benchmark_point(p, strategy)).collect()
}

pub fn benchmark_point(p: GridPoint, strategy: Strategy) -> BenchmarkRow {
    let started = Instant::now();
    let outcome = (|| -> Result<(u64, usize, f64)> {
        let adder = build_adder(&AdderSpec::new(p.n_bits))?;
        let obs = single_error_scenario(&adder, p.k)?;
        let params = SearchParams::default()
            .with_strategy(strategy)
            .with_conflicts(p.conflicts);
        let top = top_m_worlds(&adder.network, &obs, p.m, &params)?;
        let max_error = top.bounds.map_or(f64::NAN, |b| b.max_error);
        Ok((top.counters.expansions, top.worlds.len(), max_error))
    })();
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;
    let (expansions, worlds, max_error, error) = match outcome {
        Ok((e, w, m)) => (e, w, m, None),
        Err(e) => (0, 0, f64::NAN, Some(e.to_string())),
    };
    BenchmarkRow {
        n_bits: p.n_bits,
        k: p.k,
        conflicts: p.conflicts,
        m: p.m,
        expansions,
        worlds,
        max_error,
        wall_ms,
        error,
    }
}

pub fn benchmark_csv(rows: &[BenchmarkRow]) -> String {
    let mut out = String::from(BENCHMARK_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{:e},{:.3}",
            r.n_bits,
            r.k,
            if r.conflicts { "on" } else { "off" },
            r.m,
            r.expansions,
            r.worlds,
            r.max_error,
            r.wall_ms
        );
    }
    out
}

/// Cartesian grid from `key=v1,v2;key=...` with keys `n`, `k`, `conflicts`
/// and `m`. `k` accepts integers, `half` (n/2) and `last` (n-1); defaults
/// are `k=half`, `conflicts=on`, `m=5`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridSpec(pub Vec<GridPoint>);

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: String| Error::InvalidParameter(format!("grid: {msg}"));
        let mut ns = Vec::new();
        let mut ks = vec!["half".to_owned()];
        let mut conflicts = vec![true];
        let mut ms = vec![5];
        for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, values) = part
                .split_once('=')
                .ok_or_else(|| bad(format!("`{part}` lacks `=`")))?;
            let values: Vec<&str> = values.split(',').map(str::trim).collect();
            let ints = |vs: &[&str]| -> Result<Vec<usize>> {
                vs.iter()
                    .map(|v| v.parse().map_err(|_| bad(format!("`{v}` is not a count"))))
                    .collect()
            };
            match key.trim() {
                "n" => ns = ints(&values)?,
                "k" => ks = values.iter().map(|v| v.to_string()).collect(),
                "m" => ms = ints(&values)?,
                "conflicts" => {
                    conflicts = values
                        .iter()
                        .map(|v| match *v {
                            "on" => Ok(true),
                            "off" => Ok(false),
                            _ => Err(bad(format!("conflicts must be on or off, got `{v}`"))),
                        })
                        .collect::<Result<_>>()?
                }
                other => return Err(bad(format!("unknown key `{other}`"))),
            }
        }
        if ns.is_empty() {
            return Err(bad("no sizes given (n=...)".into()));
        }
        let mut points = Vec::new();
        for &n in &ns {
            for k in &ks {
                let k = match k.as_str() {
                    "half" => n / 2,
                    "last" => n.saturating_sub(1),
                    v => v
                        .parse()
                        .map_err(|_| bad(format!("`{v}` is not a bit index")))?,
                };
                if k == 0 || k > n {
                    return Err(bad(format!("bit {k} outside 1..={n}")));
                }
                for &c in &conflicts {
                    for &m in &ms {
                        points.push(GridPoint {
                            n_bits: n,
                            k,
                            conflicts: c,
                            m,
                        });
                    }
                }
            }
        }
        Ok(GridSpec(points))
    }
}
