//! Rosenblum/Sylvester machinery for the block models: closed-form shift
//! solutions, a masked least-squares solver for generic right-hand sides,
//! growth-exponent fits, the valency >= 2 block elimination, commutant
//! construction, and the idempotent (strong irreducibility) probe.

mod commutant;
mod reduction;
mod sylvester;

pub use commutant::{commutant_element, idempotent_probe, IdempotentReport};
pub use reduction::{similarity_reduce, ReductionResult};
pub use sylvester::{
    growth_exponent, solve_shift_recursion, solve_sylvester_closed, solve_sylvester_generic,
    Boundedness, SylvesterOptions, SylvesterSolution,
};

/// Sup-norm growth per truncation doubling below this ratio counts as
/// stable (bounded); the divergent regimes of interest grow by >= 1.3.
pub(crate) const STABLE_RATIO: f64 = 1.15;
