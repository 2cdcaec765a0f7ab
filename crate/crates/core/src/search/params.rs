use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{check_epsilon, DEFAULT_EPSILON_NORMAL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Strategy {
    BestFirst,
    IterativeDeepening,
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bestfirst" | "best-first" | "best_first" => Ok(Self::BestFirst),
            "iddfs" | "iterative-deepening" | "iterative_deepening" => Ok(Self::IterativeDeepening),
            _ => Err(Error::InvalidParameter(format!("unknown strategy `{s}`"))),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::BestFirst => "bestfirst",
            Self::IterativeDeepening => "iddfs",
        })
    }
}

/// How the unexplored mass is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MassMode {
    /// Sum of `g` over frontier nodes.
    Naive,
    /// Each frontier node's `g` scaled by the conflict-derived bound on the
    /// fraction of its subtree consistent with the observation.
    ConflictAdjusted,
}

/// Disjunction of limits; `None` disables a limit.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StoppingRule {
    pub max_error: Option<f64>,
    pub max_worlds: Option<usize>,
    pub max_expansions: Option<u64>,
    pub time_budget: Option<Duration>,
}

/// Thresholds for iterative deepening, in log space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IddfsSchedule {
    /// Defaults to `ln f` of the empty description.
    pub initial_log_threshold: Option<f64>,
    /// Added to the threshold after each round; must be negative.
    pub log_multiplier: f64,
}

impl Default for IddfsSchedule {
    fn default() -> Self {
        Self {
            initial_log_threshold: None,
            log_multiplier: 1e-2f64.ln(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchParams {
    pub strategy: Strategy,
    pub conflicts: bool,
    pub epsilon_normal: f64,
    pub mass_mode: MassMode,
    /// Credit a subtree's mass without expanding it once both the query and
    /// the observation are decided on it.
    pub decide_early: bool,
    pub stop: StoppingRule,
    pub iddfs: IddfsSchedule,
    /// Keep every enqueued prefix and count duplicates. For small networks.
    pub track_revisits: bool,
    /// Keep a record of every processed node.
    pub record_expansions: bool,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            strategy: Strategy::BestFirst,
            conflicts: true,
            epsilon_normal: DEFAULT_EPSILON_NORMAL,
            mass_mode: MassMode::ConflictAdjusted,
            decide_early: true,
            stop: StoppingRule::default(),
            iddfs: IddfsSchedule::default(),
            track_revisits: false,
            record_expansions: false,
        }
    }
}

impl SearchParams {
    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn with_conflicts(mut self, on: bool) -> Self {
        self.conflicts = on;
        self
    }

    pub fn with_mass_mode(mut self, mode: MassMode) -> Self {
        self.mass_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_epsilon(self.epsilon_normal)?;
        let m = self.iddfs.log_multiplier;
        if !(m.is_finite() && m < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "round multiplier must be below 1, got exp({m})"
            )));
        }
        if let Some(t) = self.iddfs.initial_log_threshold {
            if t.is_nan() || t > 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "initial threshold must be at most 1, got exp({t})"
                )));
            }
        }
        if let Some(e) = self.stop.max_error {
            if e.is_nan() || e < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "max error must be non-negative, got {e}"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategy_names_round_trip() {
        for s in [Strategy::BestFirst, Strategy::IterativeDeepening] {
            assert_eq!(s.to_string().parse::<Strategy>().unwrap(), s);
        }
        assert!("dfs".parse::<Strategy>().is_err());
    }

    #[test]
    fn validation() {
        assert!(SearchParams::default().validate().is_ok());
        let mut p = SearchParams::default();
        p.iddfs.log_multiplier = 0.0;
        assert!(p.validate().is_err());
        let p = SearchParams {
            epsilon_normal: 0.7,
            ..SearchParams::default()
        };
        assert!(p.validate().is_err());
    }
}
