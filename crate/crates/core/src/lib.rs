//! Short-block channel coding and link-level simulation.
//!
//! Payloads of a few bits are split into sub-blocks, each protected by a
//! first-order Reed-Muller code RM(1, m) and decoded with a fast Hadamard
//! transform in `m * 2^m` additions instead of the `2^(2m)` of a dense
//! correlator. The crate also carries the 3GPP C(32, K) code with an
//! exhaustive maximum-likelihood decoder as a baseline, and a Monte Carlo
//! harness that runs both over Rayleigh block fading with DMRS-based least
//! squares channel estimation and a configurable pilot amplitude boost.
//!
//! Modules, bottom up:
//!
//! - [`rmcode`]: RM(1, m) and C(32, K) construction, encoding, codebooks.
//! - [`hadamard`]: Sylvester matrices, dense correlation, staged FHT.
//! - [`blockcodec`]: segmentation, concatenation, rate matching, block decoding.
//! - [`phylayer`]: QPSK, DMRS and resource-element mapping.
//! - [`channel`]: Rayleigh fading, AWGN, per-trial random streams.
//! - [`receiver`]: LS estimation, MRC, ML decoding, SIMO and 4x4 MIMO receivers.
//! - [`sim`]: trials, sweeps, CSV output and SNR-gap analysis.

pub mod blockcodec;
pub mod channel;
pub mod error;
pub mod hadamard;
pub mod phylayer;
pub mod receiver;
pub mod rmcode;
pub mod sim;

pub use error::{Error, Result};

/// A single binary digit stored as `0` or `1`.
pub type Bit = u8;

/// Maps a bit to its bipolar value `(-1)^bit`.
#[inline]
pub fn bipolar(bit: Bit) -> f64 {
    if bit & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub(crate) fn check_bits(bits: &[Bit]) -> Result<()> {
    match bits.iter().position(|&b| b > 1) {
        Some(i) => Err(Error::InvalidParameter(format!(
            "bit {i} has value {}, expected 0 or 1",
            bits[i]
        ))),
        None => Ok(()),
    }
}
