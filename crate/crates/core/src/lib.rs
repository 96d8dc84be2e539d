//! Joint equalization and decoding for the nonlinear two-dimensional ISI
//! channel of two-dimensional optical storage (TWODOS).
//!
//! The crate is split along the signal chain:
//!
//! * [`channel`]: hexagonal page, 14-level nearest-neighbour readback, AWGN, SNR.
//! * [`ldpc`]: regular LDPC construction, GF(2) encoder, syndromes, alist I/O.
//! * [`fullgraph`]: sum-product message passing on the joint code/channel graph.
//! * [`density_evolution`]: quantized density evolution and noise-tolerance thresholds.
//! * [`harness`]: BER sweeps, threshold runs, seeding and result files.

pub mod channel;
pub mod density_evolution;
mod error;
pub mod fullgraph;
pub mod harness;
pub mod ldpc;
pub mod seed;

pub use error::{Error, Result};
