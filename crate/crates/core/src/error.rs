use thiserror::Error;

/// Errors raised by the bulk solver, the operators and the probes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid interface: {0}")]
    InvalidInterface(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("interface violates the class constraints: {}", .violations.join("; "))]
    ClassViolation { violations: Vec<String> },

    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),

    #[error("linear solver stalled after {iterations} iterations (relative residual {residual:.3e})")]
    SolverDiverged {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("edge {edge} does not belong to the {phase} phase")]
    EdgePhaseMismatch { edge: &'static str, phase: &'static str },

    #[error("source node ({0}, {1}) lies on the boundary")]
    SourceOnBoundary(usize, usize),

    #[error("normal ladder leaves the domain at s = {0}")]
    LadderOutsideDomain(f64),

    #[error("time step rejected after {halvings} halvings at t = {t}")]
    StepRejected {
        halvings: usize,
        t: f64,
        last_state: Box<crate::evolution::FlowState>,
    },

    #[error("finite-difference probe too noisy: Richardson defect {defect:.3e}; try eps = {suggested_eps:.3e}")]
    RichardsonDefect { defect: f64, suggested_eps: f64 },

    #[error("mode xi = {xi} is not resolved (xi*dx = {xi_dx:.3} > 0.5)")]
    UnresolvedMode { xi: f64, xi_dx: f64 },

    #[error("perturbation support violates the decay geometry: {0}")]
    SupportViolation(String),

    #[error("incompatible rescaling: {0}")]
    IncompatibleScale(String),

    #[error("not enough snapshots: {0}")]
    InsufficientSnapshots(String),
}

pub type Result<T> = std::result::Result<T, Error>;
