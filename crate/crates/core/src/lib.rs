//! Secure transmission through a STAR-RIS with a location-uncertain eavesdropper.
//!
//! Alternating optimization of BS precoders (MMSE surrogate plus dual search)
//! and discrete-phase STAR-RIS coefficients (cross-entropy search).

pub mod active;
pub mod beam;
pub mod ceo;
pub mod channel;
pub mod config;
pub mod error;
pub mod experiment;
pub mod optimizer;
pub mod rates;
pub mod rng;
pub mod validation;

pub use num_complex::Complex64 as C64;

pub use beam::{BeamformerPair, StarCoefficients};
pub use channel::ChannelSet;
pub use config::SystemConfig;
pub use error::{Error, Result};
