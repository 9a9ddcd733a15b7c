//! Real-time dynamic controller placement for mobile software-defined networks.
//!
//! Controllers are steered continuously by a Lyapunov-based control law on a
//! maximum-entropy clustering free energy, so each network snapshot costs a
//! single clustering iteration. A frame-by-frame deterministic-annealing
//! solver serves as the reference and timing baseline.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the common `f64` and `f32` instantiations.

pub mod baseline;
pub mod clustering;
pub mod compare;
pub mod error;
pub mod metrics;
pub mod model;
pub mod plot;
pub mod rcp;
pub mod rng;
pub mod scalar;
pub mod scenario;
pub mod trace;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Point64 = model::Point<f64>;
pub type NetworkState64 = model::NetworkState<f64>;
pub type MobilitySpec64 = model::MobilitySpec<f64>;
pub type DomainBox64 = model::DomainBox<f64>;
pub type AssociationMatrix64 = clustering::AssociationMatrix<f64>;
pub type ClusterMasses64 = clustering::ClusterMasses<f64>;
pub type CostBreakdown64 = clustering::CostBreakdown<f64>;
pub type ControllerGains64 = rcp::ControllerGains<f64>;
pub type AnnealSchedule64 = rcp::AnnealSchedule<f64>;
pub type FrameSolverConfig64 = baseline::FrameSolverConfig<f64>;
pub type Scenario64 = scenario::Scenario<f64>;

pub type Point32 = model::Point<f32>;
pub type NetworkState32 = model::NetworkState<f32>;
pub type MobilitySpec32 = model::MobilitySpec<f32>;
pub type DomainBox32 = model::DomainBox<f32>;
pub type AssociationMatrix32 = clustering::AssociationMatrix<f32>;
pub type ClusterMasses32 = clustering::ClusterMasses<f32>;
pub type CostBreakdown32 = clustering::CostBreakdown<f32>;
pub type ControllerGains32 = rcp::ControllerGains<f32>;
pub type AnnealSchedule32 = rcp::AnnealSchedule<f32>;
pub type FrameSolverConfig32 = baseline::FrameSolverConfig<f32>;
pub type Scenario32 = scenario::Scenario<f32>;
