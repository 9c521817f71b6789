//! Minimal feed-forward network stack: dense layers with optional layer
//! normalization, Adam, the robust regression loss, an experience replay
//! buffer, and the exploration schedule. Everything is deterministic given
//! the seeds fed in; no threading, no global state.

pub mod adam;
pub mod loss;
pub mod mlp;
pub mod replay;
pub mod schedule;

pub use adam::{AdamHyper, AdamState};
pub use loss::{smooth_l1, smooth_l1_grad, td_target};
pub use mlp::{Activation, ForwardCache, Layer, LayerNorm, MlpNet, NetGrad};
pub use replay::ReplayBuffer;
pub use schedule::EpsilonSchedule;
