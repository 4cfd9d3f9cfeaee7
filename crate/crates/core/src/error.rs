use thiserror::Error;

use crate::lattice::LatticeError;
use crate::syntax::{ParseError, ProgramError};
use crate::uniqueness::Violation;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("interpretations range over different symbol sets")]
    SymbolMismatch,
    #[error("interpretation has no value for symbol `{0}`")]
    MissingSymbol(String),
    #[error("symbol `{0}` does not occur in the program")]
    UnknownSymbol(String),
    #[error("malformed interpretation: {0}")]
    InterpretationFormat(String),
    #[error("program contains default negation; a positive program is required")]
    NotPositive,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("grid enumeration needs {needed} points, budget is {limit}")]
    BudgetExceeded { needed: u128, limit: u64 },
    #[error("iteration did not converge after {iterations} steps (last step {residual})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("program is outside the uniqueness theorem's hypotheses ({} violation(s))", .0.len())]
    Ineligible(Vec<Violation>),
    #[error("uniqueness certificate fails (global Lipschitz bound {0})")]
    NotCertified(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
