//! Asymptotic analysis of difference equations: iterated forward differences
//! and remainders, weighted-summability classification, a catalog of
//! asymptotic difference pairs, and fixed-point construction of solutions of
//! `delta^m x_n = a_n f(x_sigma(n)) + b_n` with prescribed behavior.
//!
//! Everything is pure: sequences are immutable evaluators, operators return
//! new sequences, and results are deterministic for identical inputs.

// Parameter validation writes `!(x > 0.0)` rather than `x <= 0.0` so that
// NaN fails the check too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod error;
pub mod expr;
pub mod pairs;
pub mod remainder;
pub mod seq;
pub mod spaces;

pub use engine::{
    check_precondition, construct_solution, forward_solve, residual, verify_equivalence,
    verify_equivalence_traj, ConstructOpts, ConstructReport, EquationSpec, PreconditionReport,
    SolutionKind, Trajectory,
};
pub use error::{Error, Result};
pub use expr::{
    parse_delay_spec, parse_function_spec, parse_sequence_spec, DelaySpec, FunctionSpec,
};
pub use pairs::{
    check_pair_instance, delta_inverse, lookup_pair, poly_sequence, InverseRoute, PairCheckReport,
    PairParams, PairSpec, PolynomialSeq,
};
pub use remainder::{
    in_a_m, remainder, remainder_sequence, tail_bound, RemainderOpts, RemainderResult,
};
pub use seq::{binomial, delta, sample_prefix, Sequence, TailModel};
pub use spaces::{
    classify_space, classify_space_windowed, direct_sum_oracle, liminf_estimate, Classification,
    ClassifyOptions, Outcome, SpaceSpec, Verdict,
};
