//! Quasi-reversibility reconstruction of an unknown initial condition of the
//! 2D wave equation `u_tt = Δu` from lateral Cauchy data.
//!
//! The pipeline: sample a phantom, simulate the forward problem on an
//! enlarged walled box, record the trace and normal derivative on the
//! boundary of the inverse domain, corrupt them with multiplicative noise,
//! then minimize a Tikhonov-regularized least-squares functional of the
//! discrete wave residual and the data misfits by conjugate gradients.

pub mod cauchy;
pub mod error;
pub mod experiments;
pub mod forward;
pub mod functional;
pub mod grid;
pub mod noise;
pub mod optimizer;
pub mod phantoms;

pub use cauchy::{BoundarySegment, CauchyData, SegmentData};
pub use error::{QrmError, Result};
pub use experiments::{
    noise_sweep, reconstruct, run_experiment, simulate, ExperimentPreset, Metrics, RunReport,
    Simulation, SweepReport,
};
pub use forward::{extract_cauchy, solve_forward, DataMode, ForwardProblem};
pub use functional::{
    evaluate, gradient, FunctionalBreakdown, FunctionalSpec, ProblemKind, Weights,
};
pub use grid::{make_grid, Extent, Field, SpaceTimeGrid, SpatialField, Steps};
pub use noise::{add_noise, NoiseSpec};
pub use optimizer::{minimize, CgConfig, ConvergenceHistory};
pub use phantoms::Phantom;
