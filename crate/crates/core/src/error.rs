use thiserror::Error;

use crate::cone::Inadmissible;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate map: {0}")]
    DegenerateMap(&'static str),

    #[error("map is not invertible: det(A_L)·det(A_R) = {0} ≤ 0")]
    NotInvertible(f64),

    #[error("tangent vector is zero")]
    DegenerateTangent,

    #[error("sin(pφ) vanishes at p = {0}")]
    ResonantAngle(usize),

    #[error("point ({0}, {1}) lies outside the closed left half-plane")]
    OutsideDomain(f64, f64),

    #[error("no escape from the left half-plane within {0} iterations")]
    CapExceeded(usize),

    #[error("C1 failed: {0}")]
    FailureC1(String),

    #[error("C2 failed: {0}")]
    FailureC2(String),

    #[error("C3 failed: {0}")]
    FailureC3(Inadmissible),

    #[error("degenerate polygon chain: {0}")]
    DegenerateChain(String),

    #[error("polygon chain self-intersects")]
    SelfIntersecting,

    #[error("escape time of {0} is infinite although the placement conditions held")]
    InconsistentEscape(&'static str),

    #[error("epsilon {0} too large: vertex {1} would cross the origin")]
    EpsilonTooLarge(f64, usize),

    #[error("expansion factor {0} does not exceed 1")]
    NotExpanding(f64),

    #[error("parameters outside the orientation-preserving regime: delta_L = {0}, delta_R = {1}")]
    InvalidRegime(f64, f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("orbit diverged at step {step} (|x| = {norm:e})")]
    Diverged { step: usize, norm: f64 },

    #[error("certificate does not certify chaos")]
    NotCertified,
}
