//! Measurement-uncertainty trade-offs implied by no-signaling and Bell
//! non-locality.
//!
//! A gentle measurement of strength `epsilon` on one of Bob's observables
//! must disturb his remaining observables whenever the shared correlations
//! violate a Bell inequality. This crate provides the pieces needed to
//! compute and check that trade-off numerically:
//!
//! * [`boxes`]: bipartite and tripartite correlation boxes, conditionals,
//!   correlators and the averaged disturbance measure.
//! * [`bell`]: CHSH, chain and generalized-chain functionals, evaluation and
//!   classical values by enumeration.
//! * [`lp`]: a dense simplex solver and the no-signaling polytope programs
//!   (no-signaling value, relevance, minimal-disturbance adversary).
//! * [`quantum`]: two-qubit simulation of gentle Kraus measurements and
//!   spectral-norm quantum values.
//! * [`tradeoff`]: closed-form lower bounds on disturbance and figure data.
//! * [`check`]: runtime invariant suites used by the CLI.

pub mod bell;
pub mod boxes;
pub mod check;
pub mod error;
pub mod io;
pub mod lp;
pub mod quantum;
pub mod tradeoff;

pub use bell::BellFunctional;
pub use boxes::{BipartiteBox, DisturbanceReport, TripartiteBox};
pub use error::{Error, Result};

/// Worker count for parallel enumeration. Honors `NONSIG_LAB_THREADS`.
pub fn worker_threads() -> usize {
    std::env::var("NONSIG_LAB_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}
