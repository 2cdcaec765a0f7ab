//! Anytime inference for discrete Bayesian networks by best-first and
//! iterative-deepening search over possible worlds, with guaranteed bounds
//! on prior and posterior probabilities.

pub mod circuits;
pub mod conflicts;
pub mod error;
pub mod estimate;
pub mod format;
pub mod model;
pub mod numeric;
pub mod search;
pub mod worlds;

pub use conflicts::{
    conflict_max_prob, extract_counter, init_heuristic, Conflict, Counter, HeuristicTable,
};
pub use error::{Error, Result};
pub use estimate::{
    posterior_bounds, prior_bounds, run_anytime, AnytimeRun, BoundsReport, PosteriorBounds,
};
pub use model::{
    prune_for_query, Network, NetworkBuilder, Observation, PrunedNetwork, QueryFormula, Truth, Val,
    VarId, DEFAULT_EPSILON_NORMAL,
};
pub use search::{
    best_first, iterative_deepening, top_m_worlds, Counters, MassMode, SearchParams, SearchState,
    StepReport, StopReason, StoppingRule, Strategy, TopWorlds, WorldRecord,
};
pub use worlds::{
    enumerate_exact, exact_posterior, world_probability, ExactAnswer, PartialDescription,
};
