//! Multi-adjoint normal logic programs: weighted rules over the unit interval
//! or the lattice of closed subintervals of `[0,1]`, with default negation.
//!
//! The crate parses programs, evaluates the immediate consequence operator and
//! reducts, searches for and verifies stable models, and certifies uniqueness
//! of the stable model for interval programs built from ei-implications.
//! A brute-force [`oracle`] cross-checks the analytic routines on small inputs.

pub mod engine;
pub mod error;
pub mod generate;
pub mod lattice;
pub mod oracle;
pub mod par;
pub mod semantics;
pub mod syntax;
pub mod uniqueness;

pub use engine::{
    default_starts, is_stable, iterate, least_fixpoint, partition, reduct, stable_search, stable_search_with, sup_norm,
    tp, FixpointConfig, FixpointTrace, SearchOptions, SearchOutcome, StabilityCheck, StartStatus,
};
pub use error::{Error, Result};
pub use lattice::{Adjoint, Aggregator, EiParams, Interval, LatticeKind, TruthValue};
pub use oracle::{brute_force_residuum, brute_force_stable, minimality_check, GridSpec, OracleReport};
pub use par::Execution;
pub use semantics::{evaluate, is_model, rule_value, Interpretation};
pub use syntax::{parse_program, render_program, Atom, BodyExpr, Connective, ParseError, Program, Rule};
pub use uniqueness::{certify, eligible, empirical_contraction_check, solve_unique, CertificateReport};
