use alloc::boxed::Box;
use alloc::string::String;

use crate::real::Complex;

/// Partial sum carried out of a summation that hit its radius limit.
#[derive(Clone, Debug)]
pub struct Partial {
    pub value: Complex,
    pub tail_bound: f64,
    pub terms_evaluated: u64,
    pub radius_used: u32,
}

#[derive(Clone, Debug, thiserror::Error)]
pub enum Error {
    #[error("division by a vanishing factor: {0}")]
    DivisionByVanishingFactor(String),
    #[error("pole hit: {0}")]
    PoleHit(String),
    #[error("gamma pole at nonpositive integer {0}")]
    PoleAtNonpositiveInteger(i64),
    #[error("nome out of range: |q| must be < 1")]
    NomeOutOfRange,
    #[error("zero argument")]
    ZeroArgument,
    #[error("theta function vanishes: {0}")]
    ThetaZeroHit(String),
    #[error("convergence condition violated (margin {margin})")]
    ConvergenceViolated { margin: f64 },
    #[error("genericity violated: {0}")]
    GenericityViolated(String),
    #[error("truncation condition violated: {0}")]
    TruncationViolated(String),
    #[error("radius exhausted at r = {}", .0.radius_used)]
    RadiusExhausted(Box<Partial>),
    #[error("exponent is not an integer combination of generators: {0}")]
    NonIntegralExponent(String),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    /// Stable machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DivisionByVanishingFactor(_) => "DivisionByVanishingFactor",
            Error::PoleHit(_) => "PoleHit",
            Error::PoleAtNonpositiveInteger(_) => "PoleAtNonpositiveInteger",
            Error::NomeOutOfRange => "NomeOutOfRange",
            Error::ZeroArgument => "ZeroArgument",
            Error::ThetaZeroHit(_) => "ThetaZeroHit",
            Error::ConvergenceViolated { .. } => "ConvergenceViolated",
            Error::GenericityViolated(_) => "GenericityViolated",
            Error::TruncationViolated(_) => "TruncationViolated",
            Error::RadiusExhausted(_) => "RadiusExhausted",
            Error::NonIntegralExponent(_) => "NonIntegralExponent",
            Error::InvalidParameters(_) => "InvalidParameters",
            Error::Unsupported(_) => "Unsupported",
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
