//! Linear programming: a dense simplex solver and the no-signaling
//! polytope programs built on it.

mod polytope;
mod simplex;

pub use polytope::{
    min_disturbance_adversary, ns_value, ns_value_deterministic, relevance, AdversaryResult,
    MAX_ADVERSARY_SETTINGS, MAX_NS_SETTINGS,
};
pub use simplex::{
    solve_lp, Constraint, LpProblem, LpSolution, LpStatus, Relation, Sense, FEAS_TOL, RESIDUAL_TOL,
};
