//! Whitney decompositions of `R^N \ 2^-m Z^N`, their partitions of unity, the extensions
//! `E0`, `E1` built on them, the projection `pi_m = E1 T_m` and finite-rank operator
//! approximations `J^m = E0 T_m J pi_m`.

pub mod audit;
pub mod cubes;
pub mod error;
pub mod extension;
pub mod partition;
pub mod suite;

pub use cubes::{decompose, decompose_to_depth, Cube, CubeKey, WhitneyDecomposition};
pub use error::{Error, Result};
pub use extension::{
    approximate, discrete_gradient, extend0, extend1, field, project, Approximation, Field, FractionalLaplacian,
    GridSamples, Identity, Operator, Projection,
};
pub use suite::{run_suite, sample_points, SuiteConfig, SuiteItem, SuiteReport};
