//! Stationary states of the tilted discrete nonlinear Schrödinger lattice
//!
//! ```text
//! μ c_l = -β (c_{l+1} + c_{l-1} + 2 c_l) + ν c_l³ + f l c_l,   Σ c_l² = 1
//! ```
//!
//! and the bifurcation tree they form as the ratio `ν/f` grows: exact
//! solutions at β = 0, branch counting through partitions into distinct parts,
//! Newton continuation to small β, and the time-dependent beating of
//! superposed states.

pub mod anticontinuum;
pub mod continuation;
pub mod dynamics;
pub mod error;
pub mod lattice;
pub mod linalg;
pub mod partitions;

pub use anticontinuum::{
    admissible, bifurcation_tree, build_state, complementary_set, consecutive_threshold,
    energy_of_set, enumerate_solution_sets, translate_state, BifurcationTree, Branch,
    StationaryState,
};
pub use continuation::{
    continue_in_beta, dnls_residual, jacobian_diagonal_t0, newton_solve, ContinuationResult,
    NewtonOptions, RescaledProblem,
};
pub use dynamics::{beat_periods, beating_profile, evolve, spectrum, DynamicsTrace};
pub use error::{Error, Result};
pub use lattice::{LatticeParams, Sign, SignPattern, SolutionSet, Window};
pub use partitions::{counting_function, q_distinct, DistinctPartition};
