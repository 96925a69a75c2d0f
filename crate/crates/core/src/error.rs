use thiserror::Error;

use crate::algebra::Divergence;
use crate::scalar::Rational;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("pieces do not partition (0, inf): {0}")]
    MalformedPartition(String),

    #[error("not integrable at 0+: leading term x^({exponent}) * ln(x)^{log_power}")]
    NonIntegrableAtZero { exponent: Rational, log_power: u32 },

    #[error("function is not in L1: {0}")]
    NotInL1(Box<Divergence>),

    #[error("exact coefficients cannot represent the value of x^({exponent}) * ln(x)^{log_power} at x = {at}")]
    InexactConstant {
        at: String,
        exponent: Rational,
        log_power: u32,
    },

    #[error("convergence not certified: {0}")]
    ConvergenceNotCertified(String),

    #[error("operation requires {expected}, got r = {r}, p = {p}")]
    WrongRegime {
        expected: &'static str,
        r: String,
        p: String,
    },

    #[error("exponent {name} = {value} outside [{lo}, {hi}]")]
    ExponentOutOfRange {
        name: &'static str,
        value: String,
        lo: String,
        hi: String,
    },

    #[error("witness is not in A_r: {0}")]
    WitnessNotInAr(String),

    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("internal inconsistency: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
