//! Gaussianizing reduction for additive-noise networks.
//!
//! A coding scheme designed for a Gaussian-noise network is run in `b`
//! parallel copies whose transmissions are mixed by a unitary DFT. Each copy
//! then sees noise that is a normalised sum of `b` independent samples and
//! so approaches a Gaussian as `b` grows. The crate implements the mixing,
//! the bookkeeping around it and the Monte Carlo checks that measure how
//! close the mixed scheme gets to its Gaussian-network error rate.

pub mod coding;
pub mod dither;
pub mod error;
pub mod experiment;
pub mod interleaver;
pub mod mixer;
pub mod montecarlo;
pub mod network;
pub mod noise_lab;
pub mod pipeline;
pub mod scalar;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Scalar used by the Monte Carlo layers.
pub type Real = f64;
pub type Network = network::NetworkModel<f64>;
pub type Network32 = network::NetworkModel<f32>;
pub type Mixer = mixer::OfdmMixer<f64>;
pub type Mixer32 = mixer::OfdmMixer<f32>;
pub type Packed = mixer::PackedVector<f64>;
pub type Blocks = interleaver::BlockMatrix<f64>;
