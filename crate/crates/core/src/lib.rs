//! Response-surface modelling and multi-objective optimization of face-milling
//! parameters: surface roughness (Ra) is minimized while material removal
//! rate (MRR) is maximized over a box of cutting speed, feed and depth of cut.
//!
//! Model fitting, dominance utilities and diagnostics are generic over
//! [`Scalar`] (`f32` or `f64`). The solvers work in `f64`.

pub mod dataset;
pub mod error;
pub mod evolve;
pub mod nlsolver;
pub mod pareto;
pub mod polymodel;
pub mod regression;
pub mod report;
pub mod scalar;
pub mod scalarize;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type ExperimentRecord = dataset::ExperimentRecord<f64>;
pub type Bounds = dataset::Bounds<f64>;
pub type PolynomialModel = polymodel::Polynomial<f64>;
pub type FitDiagnostics = regression::FitDiagnostics<f64>;
pub type ModelPair = regression::ModelPair<f64>;
pub type ModelComparison = regression::ModelComparison<f64>;
pub type ParetoPoint = pareto::ParetoPoint<f64>;
pub type Front = pareto::Front<f64>;

pub type ExperimentRecordF32 = dataset::ExperimentRecord<f32>;
pub type BoundsF32 = dataset::Bounds<f32>;
pub type PolynomialModelF32 = polymodel::Polynomial<f32>;
pub type FitDiagnosticsF32 = regression::FitDiagnostics<f32>;
pub type ParetoPointF32 = pareto::ParetoPoint<f32>;
pub type FrontF32 = pareto::Front<f32>;

pub use evolve::{run_ga, GaConfig, GaOutcome};
pub use nlsolver::{MultistartConfig, RunCounters, SolveOutcome, Tolerances};
pub use pareto::Sense;
pub use polymodel::{PolyBasis, PublishedModel};
pub use scalarize::{MooProblem, Objective, Study, Sweep, UtopiaRecord};
