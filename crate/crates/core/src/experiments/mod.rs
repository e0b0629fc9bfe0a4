//! Benchmark problems: the Lomer dipole under shear, slip under tension,
//! and the scalar dipole model.

pub mod analytic;
pub mod continuation;
pub mod detector;
pub mod dislocation;
pub mod loading;
pub mod metrics;

pub use analytic::{analytic_fold, analytic_force, AnalyticDipoleParams};
pub use continuation::{run_continuation, ContinuationConfig, ContinuationTrace, EquilibriumSolver, Method};
pub use detector::Detector;
pub use dislocation::{edge_dislocation_displacement, DipoleConfig};
pub use loading::Loading;
pub use metrics::{critical_error, relative_error, w1inf_norm};
