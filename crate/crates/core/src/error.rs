use std::fmt;

use thiserror::Error;

use crate::fpf::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A body taking part in a distance computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Body {
    VirtualAgent,
    Robot(usize),
    /// Source point `point` of obstacle `obstacle`.
    Source { obstacle: usize, point: usize },
    /// A bare position handed to a free function.
    Point,
}

impl fmt::Display for Body {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Body::VirtualAgent => write!(f, "virtual agent"),
            Body::Robot(i) => write!(f, "robot {i}"),
            Body::Source { obstacle, point } => write!(f, "obstacle {obstacle} source {point}"),
            Body::Point => write!(f, "query point"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("malformed parameter `{name}`: {value} is not a finite number")]
    MalformedParameter { name: &'static str, value: f64 },

    #[error("invalid FPF parameters: {0}")]
    InvalidParams(ValidationReport),

    #[error("no equilibrium radius for k_v = {k_v}, varsigma = {varsigma}: no sign change of the equilibrium residual up to scaled radius {horizon}")]
    NoEquilibrium { k_v: f64, varsigma: f64, horizon: f64 },

    #[error("malformed range: {0}")]
    MalformedRange(String),

    #[error("degenerate distance between {a} and {b}: direction undefined")]
    DegenerateDistance { a: Body, b: Body },

    #[error("integration diverged at step {step}: non-finite force or state")]
    Divergence { step: usize },

    #[error("infeasible seeding: could not place {n} points at separation {min_separation} after {attempts} attempts")]
    InfeasibleSeeding { n: usize, min_separation: f64, attempts: usize },

    #[error("invalid scenario: `{key}` violates `{rule}`")]
    InvalidScenario { key: String, rule: String },

    #[error("unknown robot id {0}")]
    UnknownRobot(usize),

    #[error("degenerate polygon: {0}")]
    DegeneratePolygon(String),
}
