//! Optimum linear LLR computation for fading channels without side
//! information, with the tooling needed to check it end to end: capacity
//! integrals, quantized density evolution, LDPC code design, finite-length
//! sum-product decoding and Monte Carlo BER simulation.

pub mod capacity;
pub mod channel;
pub mod density;
pub mod design;
pub mod ensemble;
pub mod error;
pub mod ldpc;
pub mod llr;
pub mod optimize;
pub mod quadrature;
pub mod special;

pub use error::{Error, NumericalError, Result};
