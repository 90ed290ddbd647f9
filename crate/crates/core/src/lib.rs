//! Nonnegative matrix factorization under the I-divergence, computed by
//! alternating I-projections between two sets of lifted `m x k x n` tensors.
//!
//! The crate is `no_std` (it needs `alloc`). Given `V >= 0` and an inner size
//! `k`, [`solve`] approximately minimizes `D(V||WH)` over nonnegative `W` and
//! row-stochastic `H`. Every step of the algorithm is a pair of closed-form
//! partial minimizations ([`best_p_tensor`], [`best_q_pair`]), and the identities
//! that make it work (the Pythagorean rules, the exact decomposition of the
//! per-iteration gain, the auxiliary-function bounds and the first-order
//! optimality conditions at limit points) are exposed as diagnostics so that
//! any run can be audited.
//!
//! ```
//! use lifted_nmf::{solve, NonnegMatrix, SolverConfig, Status};
//!
//! let v = NonnegMatrix::from_rows(&[[3.0, 2.0], [1.0, 4.0]]).unwrap();
//! let result = solve(&v, &SolverConfig::new(1)).unwrap();
//! assert_eq!(result.status, Status::Converged);
//! let h = result.pair.qplus();
//! assert!((h.get(0, 0) - 0.4).abs() < 1e-12);
//! ```
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod diagnostics;
pub mod divergence;
mod error;
pub mod lifted;
pub mod matrix;
mod pair;
pub mod problem;
pub mod solver;

pub use diagnostics::{
    audit_step, aux_g, aux_g_minus, aux_g_plus, aux_gain_identities, finite_diff_grad,
    gain_representation, grad, gradient_step, kkt_report, AuxEval, AuxGainIdentities, Gradient,
    GainRepresentation, IdentityCheck, KktReport,
};
pub use divergence::{hellinger_tensor, i_div_matrix, i_div_scalar, i_div_tensor, ExtendedReal};
pub use error::{Error, Result};
pub use lifted::{
    best_p_tensor, best_q_pair, check_pythagorean_p, check_pythagorean_q, collapse, is_member_p,
    is_member_q, tensor_from_pair, LiftedTensor, Membership, PythagoreanCheck,
};
pub use matrix::{NonnegMatrix, ProbMatrix};
pub use pair::FactorPair;
pub use problem::{denormalize_solution, normalize_factors, normalize_problem, ScaledProblem};
pub use solver::{
    gain_components, init_deterministic, init_random, objective, sequential_gain_components, solve,
    solve_with, step_sequential, step_simultaneous, step_unnormalized, GainComponents, Init,
    IterationRecord, SolveResult, SolverConfig, Status, StepView, Variant,
};
