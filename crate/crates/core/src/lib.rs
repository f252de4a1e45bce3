//! Rate-distortion bounds for the Gaussian many-help-one problem with
//! tree-structured correlation among the helper observations.
//!
//! All rates are in nats.

pub mod battery;
pub mod cli;
pub mod error;
pub mod gaussian;
pub mod mi;
pub mod oracle;
pub mod recursions;
pub mod region;
pub mod sample;
pub mod source;
pub mod subset;
pub mod sum_rate;

pub use error::{Error, Result};
pub use source::{DistortionBudget, RateAllocation, SourceSpec};
pub use subset::Subset;
