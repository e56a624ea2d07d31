//! Hybrid agent/field model: agents move by Newtonian dynamics driven by the
//! gradient of a chemical field, and the field solves a linear parabolic
//! equation whose source depends on the agent positions.
//!
//! All numerics are generic over the scalar type (`f32` or `f64`); the
//! aliases at the crate root fix the scalar for the common case.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod field;
pub mod kernel;
pub mod linalg;
pub mod model;
pub mod picard;
pub mod quadrature;
pub mod real;
pub mod verify;

pub use error::{Error, Result};
pub use field::{Backend, FieldProbe, QuadratureSpec};
pub use kernel::{EstimateParams, Kernel};
pub use model::Scenario;
pub use picard::{AgentPath, GradientMode, HorizonCertificate, SolverOptions};
pub use real::Real;
pub use verify::EstimateReport;

pub type ScenarioF64 = Scenario<f64>;
pub type ScenarioF32 = Scenario<f32>;
pub type KernelF64 = Kernel<f64>;
pub type KernelF32 = Kernel<f32>;
pub type AgentPathF64 = AgentPath<f64>;
pub type AgentPathF32 = AgentPath<f32>;
pub type FieldProbeF64 = FieldProbe<f64>;
pub type FieldProbeF32 = FieldProbe<f32>;
pub type SolverOptionsF64 = SolverOptions<f64>;
pub type SolverOptionsF32 = SolverOptions<f32>;
pub type MatF64 = linalg::Mat<f64>;
pub type MatF32 = linalg::Mat<f32>;
