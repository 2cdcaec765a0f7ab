//! Bayesian-network data model.

mod network;
mod prune;
mod query;

pub(crate) use network::check_epsilon;
pub use network::{
    normal_in_row, BuildOptions, Cpt, Network, NetworkBuilder, RawNetwork, RawRow, RawVariable,
    Val, VarId, Variable, ROW_SUM_TOLERANCE,
};
pub use prune::{prune_for_query, PrunedNetwork};
pub use query::{Observation, QueryFormula, Truth};

/// Default normality threshold: a value is normal when its conditional
/// probability is at least `1 - DEFAULT_EPSILON_NORMAL`.
pub const DEFAULT_EPSILON_NORMAL: f64 = 1e-3;
