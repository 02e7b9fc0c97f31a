//! Rayleigh block fading and AWGN, `y_t = H x_t + z_t` per resource element.
//!
//! SNR is per receive antenna and referenced to unit-energy data symbols, so
//! each real noise component has variance `sigma^2 = 10^(-snr/10) / 2`.
//! Boosted pilots are received `beta^2` above that.
//!
//! Every trial owns a ChaCha stream keyed by `(seed, trial)`. Noise is always
//! drawn at unit variance and then scaled, so the same trial seen at two SNRs
//! shares its fading, message and noise shape.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::phylayer::TxGrid;
use crate::{Error, Result};

/// Random stream for one Monte Carlo trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Circularly symmetric complex Gaussian with `variance` per real component.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = variance.sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

/// Flat channel matrix, `n_rx x n_tx`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub n_rx: usize,
    pub n_tx: usize,
    pub h: Vec<Complex64>,
}

impl ChannelRealization {
    pub fn new(n_rx: usize, n_tx: usize, h: Vec<Complex64>) -> Result<Self> {
        if n_rx == 0 || n_tx == 0 {
            return Err(Error::InvalidParameter(
                "channel dimensions must be >= 1".into(),
            ));
        }
        if h.len() != n_rx * n_tx {
            return Err(Error::length("channel matrix", n_rx * n_tx, h.len()));
        }
        Ok(ChannelRealization { n_rx, n_tx, h })
    }

    pub fn get(&self, rx: usize, tx: usize) -> Complex64 {
        self.h[rx * self.n_tx + tx]
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        ChannelRealization {
            h: self.h.iter().map(|v| v * s).collect(),
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    /// Variance of each real noise component.
    pub sigma2: f64,
    pub snr_db: f64,
}

impl NoiseParams {
    pub fn noiseless() -> Self {
        NoiseParams {
            sigma2: 0.0,
            snr_db: f64::INFINITY,
        }
    }
}

pub fn snr_to_sigma(snr_db: f64) -> NoiseParams {
    NoiseParams {
        sigma2: 10f64.powf(-snr_db / 10.0) / 2.0,
        snr_db,
    }
}

/// Draws i.i.d. CN(0, 1) entries.
pub fn draw_channel<R: Rng + ?Sized>(n_rx: usize, n_tx: usize, rng: &mut R) -> ChannelRealization {
    let h = (0..n_rx * n_tx)
        .map(|_| complex_gaussian(rng, 0.5))
        .collect();
    ChannelRealization { n_rx, n_tx, h }
}

/// One length-`N` RE vector per receive antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedGrid {
    pub antennas: Vec<Vec<Complex64>>,
}

impl ReceivedGrid {
    pub fn n_rx(&self) -> usize {
        self.antennas.len()
    }

    pub fn n_re(&self) -> usize {
        self.antennas.first().map_or(0, Vec::len)
    }
}

pub fn apply_channel<R: Rng + ?Sized>(
    grid: &TxGrid,
    h: &ChannelRealization,
    noise: &NoiseParams,
    rng: &mut R,
) -> Result<ReceivedGrid> {
    if grid.n_layers() != h.n_tx {
        return Err(Error::length("transmit layers", h.n_tx, grid.n_layers()));
    }
    if !(noise.sigma2 >= 0.0 && noise.sigma2.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise variance must be finite and nonnegative, got {}",
            noise.sigma2
        )));
    }
    let n = grid.n_re();
    let scale = noise.sigma2.sqrt();
    let antennas = (0..h.n_rx)
        .map(|rx| {
            (0..n)
                .map(|t| {
                    let signal: Complex64 = grid
                        .layers
                        .iter()
                        .enumerate()
                        .map(|(tx, layer)| h.get(rx, tx) * layer[t])
                        .sum();
                    signal + complex_gaussian(rng, 1.0) * scale
                })
                .collect()
        })
        .collect();
    Ok(ReceivedGrid { antennas })
}
