//! Two-phase Hele-Shaw flow of a periodic graph interface in a strip.
//!
//! The interface `f` separates the phase `0 < y < f(x)` from `f(x) < y < L`.
//! Each phase carries a harmonic (or `tr(A2 D^2)`-harmonic) potential, and the
//! interface moves with normal speed `G(I+, I-)`.

pub mod dtn;
pub mod elliptic;
pub mod error;
pub mod evolution;
pub mod interface;
pub mod parabolic;
pub mod probe;
pub mod quadrature;
pub mod spectral;

pub use error::{Error, Result};
pub use interface::{
    class_k_check, ClassKParams, ClassReport, DiniModulus, GradientBackend, GraphInterface,
    SeminormKind, SeminormReport,
};
pub use dtn::{BoundaryLaw, HeleShawOperator, LawKind, VelocityField};
pub use elliptic::{BulkConfig, Phase, Spd2};
pub use evolution::{cfl_dt, evolve, step, EvolutionConfig, FlowState, Trajectory};
