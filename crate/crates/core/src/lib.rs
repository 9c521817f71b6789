//! Desk-scale simulator of a virtualized RAN compute platform plus a learning
//! orchestrator that decides, per decision interval, how many CPU cores to
//! power for a varying population of virtual base stations (vBS).
//!
//! The platform model captures the three effects that make co-located vBS
//! workloads non-additive on shared hardware:
//!
//! * cache/IPC degradation as more instances share the CPU complex,
//! * per-instance syscall-filter overhead,
//! * context-switch overhead as the instance count approaches the core count.
//!
//! On top of the simulator sit three allocation policies: a relation-network +
//! DQN contextual bandit ([`agent::RnDqnAgent`]), a contention-oblivious
//! baseline that assumes perfect isolation ([`baselines::sira_allocate`]), and
//! an exhaustive oracle ([`baselines::oracle_allocate`]).
//!
//! All floating-point math is generic over the scalar type through
//! [`scalar::Real`]; `f32` is the default experiment precision and `f64` is
//! used where tests need high-precision references.

pub mod agent;
pub mod baselines;
pub mod context;
pub mod energy;
pub mod env;
pub mod error;
pub mod nn;
pub mod radio;
pub mod relnet;
pub mod scalar;
pub mod topology;
pub mod traces;

pub use error::CoreError;
pub use scalar::Real;

/// Default experiment precision.
pub type Scalar = f32;

/// Agent at the default experiment precision.
pub type Agent32 = agent::RnDqnAgent<f32>;
/// Agent at high precision, used by numeric reference tests.
pub type Agent64 = agent::RnDqnAgent<f64>;
/// Feed-forward network at the default experiment precision.
pub type MlpNet32 = nn::MlpNet<f32>;
/// Feed-forward network at high precision.
pub type MlpNet64 = nn::MlpNet<f64>;
