//! Resource-theory workbench for resource-nongenerating operations.
//!
//! The crate covers robustness-type quantifiers of states and channels,
//! a constructive state-transformation channel, the erasure protocol and its
//! bounds, finite-copy cost bounds, and a communication capacity bound. Every
//! optimization goes through the semidefinite solver in [`conic`].

pub mod asymptotic;
pub mod comms;
pub mod conic;
pub mod dynamic_measures;
pub mod erasure;
pub mod error;
pub mod freesets;
pub mod qmath;
pub mod static_measures;
pub mod transform;

pub use error::{Error, Result};
pub use freesets::{ChannelMembership, FreeSetModel, Membership};
pub use qmath::{Channel, ChoiNormalization, DensityMatrix};
