//! QPSK, DMRS and resource-element mapping.
//!
//! An allocation spans `P` PRBs of 12 resource elements over `L` symbols, so
//! `N = 12 P L`. RE `t` of symbol `l` has index `l * 12 P + t`. Pilots sit at
//! fixed offsets inside every PRB (PUCCH format 2 uses 1, 4, 7, 10). With
//! several layers the pilot REs are dealt round-robin between them and each
//! layer stays silent on the others' pilots.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{check_bits, Bit, Error, Result};

pub const SUBCARRIERS_PER_PRB: usize = 12;
pub const PUCCH2_DMRS_OFFSETS: [usize; 4] = [1, 4, 7, 10];
pub const MAX_PRBS: usize = 16;
pub const MAX_SYMBOLS: usize = 14;

const INV_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResourceConfig {
    prbs: usize,
    symbols: usize,
    pilot_offsets: Vec<usize>,
    dmrs_positions: Vec<usize>,
    data_positions: Vec<usize>,
}

impl ResourceConfig {
    pub fn new(prbs: usize, symbols: usize, pilot_offsets: &[usize]) -> Result<Self> {
        if !(1..=MAX_PRBS).contains(&prbs) {
            return Err(Error::InvalidParameter(format!(
                "PRB count must be 1..={MAX_PRBS}, got {prbs}"
            )));
        }
        if !(1..=MAX_SYMBOLS).contains(&symbols) {
            return Err(Error::InvalidParameter(format!(
                "symbol count must be 1..={MAX_SYMBOLS}, got {symbols}"
            )));
        }
        let mut offsets = pilot_offsets.to_vec();
        offsets.sort_unstable();
        offsets.dedup();
        if offsets.len() != pilot_offsets.len()
            || offsets.iter().any(|&o| o >= SUBCARRIERS_PER_PRB)
            || offsets.is_empty()
            || offsets.len() == SUBCARRIERS_PER_PRB
        {
            return Err(Error::InvalidParameter(format!(
                "pilot offsets must be distinct values in 0..12 leaving room for data, got {pilot_offsets:?}"
            )));
        }
        let n = SUBCARRIERS_PER_PRB * prbs * symbols;
        let (dmrs_positions, data_positions) =
            (0..n).partition(|&re| offsets.contains(&(re % SUBCARRIERS_PER_PRB)));
        Ok(ResourceConfig {
            prbs,
            symbols,
            pilot_offsets: offsets,
            dmrs_positions,
            data_positions,
        })
    }

    /// PUCCH format 2 layout: DMRS on REs 1, 4, 7, 10 of every PRB.
    pub fn pucch2(prbs: usize, symbols: usize) -> Result<Self> {
        Self::new(prbs, symbols, &PUCCH2_DMRS_OFFSETS)
    }

    pub fn prbs(&self) -> usize {
        self.prbs
    }

    pub fn symbols(&self) -> usize {
        self.symbols
    }

    pub fn pilot_offsets(&self) -> &[usize] {
        &self.pilot_offsets
    }

    /// `N = 12 P L`.
    pub fn n_total(&self) -> usize {
        SUBCARRIERS_PER_PRB * self.prbs * self.symbols
    }

    pub fn n_data(&self) -> usize {
        self.data_positions.len()
    }

    pub fn n_pilot(&self) -> usize {
        self.dmrs_positions.len()
    }

    pub fn dmrs_positions(&self) -> &[usize] {
        &self.dmrs_positions
    }

    pub fn data_positions(&self) -> &[usize] {
        &self.data_positions
    }

    /// Indices into [`dmrs_positions`](Self::dmrs_positions) owned by `layer`.
    pub fn layer_pilots(&self, layer: usize, n_layers: usize) -> Result<Vec<usize>> {
        if n_layers == 0 || layer >= n_layers {
            return Err(Error::InvalidParameter(format!(
                "layer {layer} out of range for {n_layers} layers"
            )));
        }
        if n_layers > self.n_pilot() {
            return Err(Error::InvalidParameter(format!(
                "{n_layers} layers need at least as many pilots, have {}",
                self.n_pilot()
            )));
        }
        Ok((layer..self.n_pilot()).step_by(n_layers).collect())
    }
}

/// QPSK: `((1 - 2 b0) + j (1 - 2 b1)) / sqrt(2)`.
pub fn qpsk_modulate(bits: &[Bit]) -> Result<Vec<Complex64>> {
    if !bits.len().is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "QPSK needs an even number of bits, got {}",
            bits.len()
        )));
    }
    check_bits(bits)?;
    Ok(bits
        .chunks_exact(2)
        .map(|p| Complex64::new(crate::bipolar(p[0]), crate::bipolar(p[1])) * INV_SQRT2)
        .collect())
}

/// Soft bits `(g Re r, g Im r)` per symbol. Positive means bit 0.
pub fn qpsk_soft_demod(equalized: &[Complex64], gain: &[f64]) -> Result<Vec<f64>> {
    if equalized.len() != gain.len() {
        return Err(Error::length(
            "demodulator gain",
            equalized.len(),
            gain.len(),
        ));
    }
    let mut out = Vec::with_capacity(2 * equalized.len());
    for (z, &g) in equalized.iter().zip(gain) {
        if g < 0.0 || !g.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "demodulator gain must be finite and nonnegative, got {g}"
            )));
        }
        out.push(z.re * g);
        out.push(z.im * g);
    }
    Ok(out)
}

/// Hard decisions from soft bits; zero decides 0.
pub fn hard_decisions(soft: &[f64]) -> Vec<Bit> {
    soft.iter().map(|&v| Bit::from(v < 0.0)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DmrsSequence {
    pub symbols: Vec<Complex64>,
    pub seed: u64,
    pub layer: usize,
}

/// Pseudorandom QPSK pilots for `layer`, one per pilot RE it owns.
pub fn gen_dmrs(
    config: &ResourceConfig,
    layer: usize,
    n_layers: usize,
    seed: u64,
) -> Result<DmrsSequence> {
    let count = config.layer_pilots(layer, n_layers)?.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(layer as u64);
    let symbols = (0..count)
        .map(|_| {
            let (b0, b1) = (rng.random::<bool>(), rng.random::<bool>());
            Complex64::new(if b0 { -1.0 } else { 1.0 }, if b1 { -1.0 } else { 1.0 }) * INV_SQRT2
        })
        .collect();
    Ok(DmrsSequence {
        symbols,
        seed,
        layer,
    })
}

/// One length-`N` RE vector per transmit layer, `x = x_d + beta x_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct TxGrid {
    pub layers: Vec<Vec<Complex64>>,
    pub beta: f64,
}

impl TxGrid {
    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn n_re(&self) -> usize {
        self.layers.first().map_or(0, Vec::len)
    }

    pub fn layer_energy(&self, layer: usize) -> f64 {
        self.layers[layer].iter().map(Complex64::norm_sqr).sum()
    }
}

/// Single-layer mapping.
pub fn map_resources(
    data_syms: &[Complex64],
    dmrs: &DmrsSequence,
    config: &ResourceConfig,
    beta: f64,
) -> Result<TxGrid> {
    map_layers(
        std::slice::from_ref(&data_syms.to_vec()),
        std::slice::from_ref(dmrs),
        config,
        beta,
    )
}

/// Places every layer's data on all data REs and its pilots, scaled by `beta`,
/// on the pilot REs it owns.
pub fn map_layers(
    data: &[Vec<Complex64>],
    dmrs: &[DmrsSequence],
    config: &ResourceConfig,
    beta: f64,
) -> Result<TxGrid> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "pilot amplitude must be finite and nonnegative, got {beta}"
        )));
    }
    if data.len() != dmrs.len() || data.is_empty() {
        return Err(Error::length(
            "DMRS sequences per layer",
            data.len(),
            dmrs.len(),
        ));
    }
    let n_layers = data.len();
    let mut layers = Vec::with_capacity(n_layers);
    for (layer, (syms, pilots)) in data.iter().zip(dmrs).enumerate() {
        if syms.len() != config.n_data() {
            return Err(Error::length("data symbols", config.n_data(), syms.len()));
        }
        let own = config.layer_pilots(layer, n_layers)?;
        if pilots.symbols.len() != own.len() {
            return Err(Error::length(
                "DMRS symbols",
                own.len(),
                pilots.symbols.len(),
            ));
        }
        let mut grid = vec![Complex64::new(0.0, 0.0); config.n_total()];
        for (&re, &s) in config.data_positions().iter().zip(syms) {
            grid[re] = s;
        }
        for (&p, &s) in own.iter().zip(&pilots.symbols) {
            grid[config.dmrs_positions()[p]] = s * beta;
        }
        layers.push(grid);
    }
    Ok(TxGrid { layers, beta })
}

/// Splits one antenna's REs into `(pilot_obs, data_obs)`, both in RE order.
pub fn extract_resources(
    grid: &[Complex64],
    config: &ResourceConfig,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    if grid.len() != config.n_total() {
        return Err(Error::length("received grid", config.n_total(), grid.len()));
    }
    let pick = |idx: &[usize]| idx.iter().map(|&re| grid[re]).collect();
    Ok((pick(config.dmrs_positions()), pick(config.data_positions())))
}

/// Deals symbols round-robin across layers: symbol `s` goes to layer
/// `s % n_layers`, slot `s / n_layers`.
pub fn layer_map<T: Copy>(symbols: &[T], n_layers: usize) -> Result<Vec<Vec<T>>> {
    if n_layers == 0 || !symbols.len().is_multiple_of(n_layers) {
        return Err(Error::InvalidParameter(format!(
            "{} symbols do not divide into {n_layers} layers",
            symbols.len()
        )));
    }
    Ok((0..n_layers)
        .map(|l| symbols.iter().skip(l).step_by(n_layers).copied().collect())
        .collect())
}

/// Inverse of [`layer_map`] on per-layer soft-bit streams (two values per
/// symbol).
pub fn layer_demap_soft(per_layer: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n_layers = per_layer.len();
    let len = per_layer.first().map_or(0, Vec::len);
    if n_layers == 0 || !len.is_multiple_of(2) || per_layer.iter().any(|l| l.len() != len) {
        return Err(Error::InvalidParameter(
            "per-layer soft streams must be non-empty, equal and even in length".into(),
        ));
    }
    let mut out = Vec::with_capacity(n_layers * len);
    for slot in 0..len / 2 {
        for layer in per_layer {
            out.extend_from_slice(&layer[2 * slot..2 * slot + 2]);
        }
    }
    Ok(out)
}

/// Coded bits to a transmit grid: QPSK, round-robin layer mapping, then RE
/// mapping with pilots boosted by `beta`. Needs `E = 2 N_d L`.
pub fn build_tx_grid(
    coded: &[Bit],
    dmrs: &[DmrsSequence],
    config: &ResourceConfig,
    beta: f64,
) -> Result<TxGrid> {
    let expected = 2 * config.n_data() * dmrs.len();
    if coded.len() != expected {
        return Err(Error::length(
            "coded bits for the allocation",
            expected,
            coded.len(),
        ));
    }
    let symbols = qpsk_modulate(coded)?;
    map_layers(&layer_map(&symbols, dmrs.len())?, dmrs, config, beta)
}
