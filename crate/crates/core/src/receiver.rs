//! Receivers: LS channel estimation, MRC, the C(32, K) ML baseline, the
//! block HT/FHT decoder and a zero-forcing 4x4 spatial multiplexing path.
//!
//! The LS estimate is never divided by the pilot boost, so it converges to
//! `beta h`. Every decision metric downstream is invariant to a positive real
//! scale, which keeps the boost invisible to the receiver.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::blockcodec::{derate_block, rate_match_block, BlockCodec, DecodedMessage, Transform};
use crate::channel::ReceivedGrid;
use crate::phylayer::{
    extract_resources, layer_demap_soft, qpsk_soft_demod, DmrsSequence, ResourceConfig,
};
use crate::rmcode::{index_to_bits, GppRmCode, GPP_CODE_LENGTH};
use crate::{bipolar, Bit, Error, Result};

/// `n_rx x n_tx` estimate, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub n_rx: usize,
    pub n_tx: usize,
    pub h_hat: Vec<Complex64>,
}

impl ChannelEstimate {
    pub fn get(&self, rx: usize, tx: usize) -> Complex64 {
        self.h_hat[rx * self.n_tx + tx]
    }

    pub fn scaled(&self, s: f64) -> Self {
        ChannelEstimate {
            h_hat: self.h_hat.iter().map(|h| h * s).collect(),
            ..*self
        }
    }
}

/// Single-layer LS estimate, one coefficient per antenna. `pilot_obs[a]` holds
/// antenna `a`'s observations of exactly the REs carrying `pilot_ref`.
pub fn ls_estimate(
    pilot_obs: &[Vec<Complex64>],
    pilot_ref: &DmrsSequence,
) -> Result<ChannelEstimate> {
    let energy: f64 = pilot_ref.symbols.iter().map(Complex64::norm_sqr).sum();
    if energy <= 0.0 {
        return Err(Error::ZeroPilotEnergy);
    }
    let mut h_hat = Vec::with_capacity(pilot_obs.len());
    for obs in pilot_obs {
        if obs.len() != pilot_ref.symbols.len() {
            return Err(Error::length(
                "pilot observations",
                pilot_ref.symbols.len(),
                obs.len(),
            ));
        }
        let corr: Complex64 = obs
            .iter()
            .zip(&pilot_ref.symbols)
            .map(|(y, x)| y * x.conj())
            .sum();
        h_hat.push(corr / energy);
    }
    Ok(ChannelEstimate {
        n_rx: pilot_obs.len(),
        n_tx: 1,
        h_hat,
    })
}

/// Per-layer LS estimates from FDM pilots. `pilot_obs[a]` covers every pilot
/// RE of the allocation; each layer uses only the REs it owns.
pub fn ls_estimate_layers(
    pilot_obs: &[Vec<Complex64>],
    refs: &[DmrsSequence],
    config: &ResourceConfig,
) -> Result<ChannelEstimate> {
    let n_rx = pilot_obs.len();
    let n_tx = refs.len();
    let mut h_hat = vec![Complex64::new(0.0, 0.0); n_rx * n_tx];
    for (l, r) in refs.iter().enumerate() {
        let own = config.layer_pilots(l, n_tx)?;
        let subset = pilot_obs
            .iter()
            .map(|obs| {
                if obs.len() != config.n_pilot() {
                    return Err(Error::length(
                        "pilot observations",
                        config.n_pilot(),
                        obs.len(),
                    ));
                }
                Ok(own.iter().map(|&p| obs[p]).collect())
            })
            .collect::<Result<Vec<Vec<Complex64>>>>()?;
        let est = ls_estimate(&subset, r)?;
        for a in 0..n_rx {
            h_hat[a * n_tx + l] = est.h_hat[a];
        }
    }
    Ok(ChannelEstimate { n_rx, n_tx, h_hat })
}

/// `r_t = sum_a conj(h_a) y_(a,t)`, then QPSK soft demapping at unit gain.
pub fn mrc_soft_bits(data_obs: &[Vec<Complex64>], est: &ChannelEstimate) -> Result<Vec<f64>> {
    if est.n_tx != 1 {
        return Err(Error::InvalidParameter(format!(
            "MRC needs a single transmit layer, got {}",
            est.n_tx
        )));
    }
    if data_obs.len() != est.n_rx {
        return Err(Error::length("receive antennas", est.n_rx, data_obs.len()));
    }
    let n = data_obs.first().map_or(0, Vec::len);
    if data_obs.iter().any(|v| v.len() != n) {
        return Err(Error::InvalidParameter(
            "antenna observations differ in length".into(),
        ));
    }
    let combined: Vec<Complex64> = (0..n)
        .map(|t| {
            data_obs
                .iter()
                .zip(&est.h_hat)
                .map(|(y, h)| h.conj() * y[t])
                .sum()
        })
        .collect();
    qpsk_soft_demod(&combined, &vec![1.0; n])
}

/// Exhaustive correlation decoder over all `2^K` codewords of C(32, K).
#[derive(Debug, Clone)]
pub struct MlDecoder {
    code: GppRmCode,
    /// Bipolar codewords, one row of 32 per message index.
    table: Vec<f64>,
}

impl MlDecoder {
    pub fn new(code: GppRmCode) -> Self {
        let table = code
            .codebook()
            .iter()
            .flat_map(|c| c.to_bipolar())
            .collect();
        MlDecoder { code, table }
    }

    pub fn code(&self) -> &GppRmCode {
        &self.code
    }

    /// Index maximizing `sum_i lambda_i (1 - 2 c_i)`, lowest index on ties,
    /// with its metric.
    pub fn decode_index(&self, soft: &[f64]) -> Result<(usize, f64)> {
        if soft.len() != GPP_CODE_LENGTH {
            return Err(Error::length("ML soft input", GPP_CODE_LENGTH, soft.len()));
        }
        let mut best = (0, f64::NEG_INFINITY);
        for (idx, row) in self.table.chunks_exact(GPP_CODE_LENGTH).enumerate() {
            let metric: f64 = row.iter().zip(soft).map(|(c, l)| c * l).sum();
            if metric > best.1 {
                best = (idx, metric);
            }
        }
        Ok(best)
    }

    pub fn decode(&self, soft: &[f64]) -> Result<Vec<Bit>> {
        let (idx, _) = self.decode_index(soft)?;
        Ok(index_to_bits(idx, self.code.k()))
    }
}

/// One-shot ML decode; builds the codebook on every call.
pub fn ml_decode(soft: &[f64], code: &GppRmCode) -> Result<Vec<Bit>> {
    MlDecoder::new(code.clone()).decode(soft)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReceiverKind {
    #[serde(rename = "ml")]
    MlGpp,
    #[serde(rename = "ht")]
    BlockHt,
    #[serde(rename = "fht")]
    BlockFht,
}

impl ReceiverKind {
    pub fn name(self) -> &'static str {
        match self {
            ReceiverKind::MlGpp => "ml",
            ReceiverKind::BlockHt => "ht",
            ReceiverKind::BlockFht => "fht",
        }
    }
}

impl fmt::Display for ReceiverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReceiverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ml" => Ok(ReceiverKind::MlGpp),
            "ht" => Ok(ReceiverKind::BlockHt),
            "fht" => Ok(ReceiverKind::BlockFht),
            other => Err(Error::InvalidParameter(format!(
                "unknown receiver '{other}', expected ml, ht or fht"
            ))),
        }
    }
}

/// Channel code plus rate matching to `E` bits, for either receiver family.
#[derive(Debug, Clone)]
pub enum PayloadCodec {
    Gpp {
        ml: MlDecoder,
        e: usize,
    },
    Block {
        codec: BlockCodec,
        transform: Transform,
    },
}

impl PayloadCodec {
    pub fn new(kind: ReceiverKind, k: usize, e: usize) -> Result<Self> {
        Ok(match kind {
            ReceiverKind::MlGpp => {
                if e == 0 || !e.is_multiple_of(2) {
                    return Err(Error::InvalidParameter(format!(
                        "E must be even and positive, got {e}"
                    )));
                }
                PayloadCodec::Gpp {
                    ml: MlDecoder::new(GppRmCode::standard(k)?),
                    e,
                }
            }
            ReceiverKind::BlockHt | ReceiverKind::BlockFht => PayloadCodec::Block {
                codec: BlockCodec::new(k, e)?,
                transform: if kind == ReceiverKind::BlockHt {
                    Transform::Dense
                } else {
                    Transform::Fast
                },
            },
        })
    }

    pub fn k(&self) -> usize {
        match self {
            PayloadCodec::Gpp { ml, .. } => ml.code().k(),
            PayloadCodec::Block { codec, .. } => codec.plan().payload_bits(),
        }
    }

    pub fn e(&self) -> usize {
        match self {
            PayloadCodec::Gpp { e, .. } => *e,
            PayloadCodec::Block { codec, .. } => codec.e(),
        }
    }

    /// Payload to `E` rate-matched code bits.
    pub fn encode(&self, msg: &[Bit]) -> Result<Vec<Bit>> {
        match self {
            PayloadCodec::Gpp { ml, e } => Ok(rate_match_block(&ml.code().encode(msg)?.bits, *e)),
            PayloadCodec::Block { codec, .. } => Ok(codec.encode(msg)?.bits),
        }
    }

    /// `E` soft values (positive means bit 0) to a payload.
    pub fn decode(&self, soft: &[f64]) -> Result<DecodedMessage> {
        if soft.len() != self.e() {
            return Err(Error::length(
                "rate-matched soft input",
                self.e(),
                soft.len(),
            ));
        }
        match self {
            PayloadCodec::Gpp { ml, .. } => {
                let (idx, metric) = ml.decode_index(&derate_block(soft, GPP_CODE_LENGTH))?;
                Ok(DecodedMessage {
                    bits: index_to_bits(idx, ml.code().k()),
                    per_block_metric: vec![metric],
                })
            }
            PayloadCodec::Block { codec, transform } => codec.decode(soft, *transform),
        }
    }
}

/// Replaces soft values by hard bipolar decisions; zero decides bit 0.
pub fn harden(soft: &mut [f64]) {
    for v in soft {
        *v = if *v < 0.0 { -1.0 } else { 1.0 };
    }
}

/// SIMO front end: extraction, LS estimation and MRC. ML and block decoders
/// both consume this output.
pub fn simo_soft_bits(
    y: &ReceivedGrid,
    config: &ResourceConfig,
    dmrs: &DmrsSequence,
) -> Result<Vec<f64>> {
    let (pilots, data): (Vec<_>, Vec<_>) = y
        .antennas
        .iter()
        .map(|a| extract_resources(a, config))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    let est = ls_estimate(&pilots, dmrs)?;
    mrc_soft_bits(&data, &est)
}

/// Full SIMO receiver: front end, optional hard slicing, de-rate-matching and
/// decoding with the codec's correlator.
pub fn fht_receive(
    y: &ReceivedGrid,
    config: &ResourceConfig,
    dmrs: &DmrsSequence,
    codec: &PayloadCodec,
    hard_input: bool,
) -> Result<DecodedMessage> {
    let mut soft = simo_soft_bits(y, config, dmrs)?;
    if hard_input {
        harden(&mut soft);
    }
    codec.decode(&soft)
}

/// Zero-forcing filter `W` (`n_tx x n_rx`, row-major): the inverse when
/// square and invertible, the pseudo-inverse otherwise.
pub fn zf_filter(est: &ChannelEstimate) -> Result<Vec<Complex64>> {
    let h = DMatrix::from_row_slice(est.n_rx, est.n_tx, &est.h_hat);
    let inverse = if est.n_rx == est.n_tx {
        h.clone()
            .try_inverse()
            .filter(|w| w.iter().all(|v| v.is_finite()))
    } else {
        None
    };
    let w = match inverse {
        Some(w) => w,
        None => h
            .pseudo_inverse(1e-12)
            .map_err(|e| Error::InvalidParameter(format!("pseudo-inverse failed: {e}")))?,
    };
    Ok((0..w.nrows())
        .flat_map(|r| (0..w.ncols()).map(move |c| (r, c)))
        .map(|(r, c)| w[(r, c)])
        .collect())
}

/// Spatial multiplexing soft bits: per-layer LS, ZF per data RE, per-layer
/// demapping at gain `1 / |w_l|^2` and round-robin layer demapping.
pub fn mimo_soft_bits(
    y: &ReceivedGrid,
    config: &ResourceConfig,
    dmrs: &[DmrsSequence],
) -> Result<Vec<f64>> {
    let n_rx = y.n_rx();
    let n_tx = dmrs.len();
    if n_tx == 0 || n_rx < n_tx {
        return Err(Error::InvalidParameter(format!(
            "spatial multiplexing needs 1 <= n_tx <= n_rx, got {n_tx} x {n_rx}"
        )));
    }
    let (pilots, data): (Vec<_>, Vec<_>) = y
        .antennas
        .iter()
        .map(|a| extract_resources(a, config))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    let est = ls_estimate_layers(&pilots, dmrs, config)?;
    let w = zf_filter(&est)?;
    let n_d = config.n_data();
    let mut per_layer = Vec::with_capacity(n_tx);
    for l in 0..n_tx {
        let row = &w[l * n_rx..(l + 1) * n_rx];
        let norm2: f64 = row.iter().map(Complex64::norm_sqr).sum();
        let gain = if norm2 > 0.0 { 1.0 / norm2 } else { 0.0 };
        let eq: Vec<Complex64> = (0..n_d)
            .map(|t| row.iter().zip(&data).map(|(w, ya)| w * ya[t]).sum())
            .collect();
        per_layer.push(qpsk_soft_demod(&eq, &vec![gain; n_d])?);
    }
    layer_demap_soft(&per_layer)
}

pub fn mimo_receive(
    y: &ReceivedGrid,
    config: &ResourceConfig,
    dmrs: &[DmrsSequence],
    codec: &PayloadCodec,
    hard_input: bool,
) -> Result<DecodedMessage> {
    let mut soft = mimo_soft_bits(y, config, dmrs)?;
    if hard_input {
        harden(&mut soft);
    }
    codec.decode(&soft)
}

/// Bipolar image of a rate-matched codeword, as a noiseless soft input.
pub fn clean_soft(coded: &[Bit]) -> Vec<f64> {
    coded.iter().map(|&b| bipolar(b)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{
        apply_channel, draw_channel, snr_to_sigma, trial_rng, ChannelRealization, NoiseParams,
    };
    use crate::phylayer::{build_tx_grid, gen_dmrs};
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_msg<R: Rng>(rng: &mut R, k: usize) -> Vec<Bit> {
        (0..k).map(|_| rng.random_range(0..2u8)).collect()
    }

    struct Simo {
        cfg: ResourceConfig,
        dmrs: DmrsSequence,
    }

    impl Simo {
        fn p2() -> Self {
            let cfg = ResourceConfig::pucch2(2, 1).unwrap();
            let dmrs = gen_dmrs(&cfg, 0, 1, 99).unwrap();
            Simo { cfg, dmrs }
        }

        fn send(
            &self,
            coded: &[Bit],
            h: &ChannelRealization,
            noise: &NoiseParams,
            beta: f64,
            seed: u64,
        ) -> ReceivedGrid {
            let grid =
                build_tx_grid(coded, std::slice::from_ref(&self.dmrs), &self.cfg, beta).unwrap();
            apply_channel(&grid, h, noise, &mut trial_rng(seed, 0)).unwrap()
        }
    }

    fn pilot_obs(y: &ReceivedGrid, cfg: &ResourceConfig) -> Vec<Vec<Complex64>> {
        y.antennas
            .iter()
            .map(|a| extract_resources(a, cfg).unwrap().0)
            .collect()
    }

    #[test]
    fn ls_noiseless_recovers_beta_h() {
        let s = Simo::p2();
        let h = draw_channel(4, 1, &mut trial_rng(1, 1));
        for beta in [1.0, 1.75] {
            let y = s.send(&[0; 32], &h, &NoiseParams::noiseless(), beta, 0);
            let est = ls_estimate(&pilot_obs(&y, &s.cfg), &s.dmrs).unwrap();
            for a in 0..4 {
                assert!((est.get(a, 0) - h.get(a, 0) * beta).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn ls_rejects_bad_input() {
        let s = Simo::p2();
        let zero = DmrsSequence {
            symbols: vec![c(0.0, 0.0); 8],
            seed: 0,
            layer: 0,
        };
        assert!(matches!(
            ls_estimate(&[vec![c(1.0, 0.0); 8]], &zero),
            Err(Error::ZeroPilotEnergy)
        ));
        assert!(ls_estimate(&[vec![c(1.0, 0.0); 7]], &s.dmrs).is_err());
    }

    // Var(h_hat - h) = 2 sigma^2 / sum |x|^2, so twice the pilots halve it.
    #[test]
    fn ls_error_variance_halves_with_twice_the_pilots() {
        let noise = snr_to_sigma(0.0);
        let mut mse = Vec::new();
        for prbs in [2, 4] {
            let cfg = ResourceConfig::pucch2(prbs, 1).unwrap();
            let dmrs = gen_dmrs(&cfg, 0, 1, 5).unwrap();
            let h = ChannelRealization::new(1, 1, vec![c(0.6, -0.8)]).unwrap();
            let coded = vec![0; 2 * cfg.n_data()];
            let grid = build_tx_grid(&coded, std::slice::from_ref(&dmrs), &cfg, 1.0).unwrap();
            let trials = 100_000;
            let mut acc = 0.0;
            for t in 0..trials {
                let y = apply_channel(&grid, &h, &noise, &mut trial_rng(77, t)).unwrap();
                let est = ls_estimate(&pilot_obs(&y, &cfg), &dmrs).unwrap();
                acc += (est.h_hat[0] - h.h[0]).norm_sqr();
            }
            let m = acc / trials as f64;
            let energy = dmrs.symbols.len() as f64;
            assert!(
                (m / (2.0 * noise.sigma2 / energy) - 1.0).abs() < 0.05,
                "{m}"
            );
            mse.push(m);
        }
        assert!((mse[0] / mse[1] - 2.0).abs() < 0.1, "{mse:?}");
    }

    #[test]
    fn mrc_single_antenna_signs() {
        let s = Simo::p2();
        let mut rng = trial_rng(3, 3);
        let coded = random_msg(&mut rng, 32);
        let h = ChannelRealization::new(1, 1, vec![c(1.0, 0.0)]).unwrap();
        let y = s.send(&coded, &h, &NoiseParams::noiseless(), 1.0, 0);
        let data: Vec<_> = y
            .antennas
            .iter()
            .map(|a| extract_resources(a, &s.cfg).unwrap().1)
            .collect();
        let est = ChannelEstimate {
            n_rx: 1,
            n_tx: 1,
            h_hat: vec![c(1.0, 0.0)],
        };
        let soft = mrc_soft_bits(&data, &est).unwrap();
        assert_eq!(soft.len(), 32);
        for (v, &b) in soft.iter().zip(&coded) {
            assert_eq!(v.signum(), bipolar(b));
        }
        let scaled = mrc_soft_bits(&data, &est.scaled(2.5)).unwrap();
        for (a, b) in soft.iter().zip(&scaled) {
            assert!((a * 2.5 - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mrc_four_antennas_magnitude() {
        let s = Simo::p2();
        let beta = 1.75;
        let h = draw_channel(4, 1, &mut trial_rng(4, 4));
        let coded = random_msg(&mut trial_rng(4, 5), 32);
        let y = s.send(&coded, &h, &NoiseParams::noiseless(), beta, 0);
        let (pilots, data): (Vec<_>, Vec<_>) = y
            .antennas
            .iter()
            .map(|a| extract_resources(a, &s.cfg).unwrap())
            .unzip();
        let est = ls_estimate(&pilots, &s.dmrs).unwrap();
        let soft = mrc_soft_bits(&data, &est).unwrap();
        let energy: f64 = h.h.iter().map(Complex64::norm_sqr).sum();
        for pair in soft.chunks(2) {
            let r = c(pair[0], pair[1]).norm();
            assert!((r - beta * energy).abs() < 1e-9);
        }
    }

    #[test]
    fn ml_exhaustive_round_trip() {
        let ml = MlDecoder::new(GppRmCode::standard(11).unwrap());
        for idx in 0..2048 {
            let msg = index_to_bits(idx, 11);
            let soft = clean_soft(&ml.code().encode(&msg).unwrap().bits);
            assert_eq!(ml.decode(&soft).unwrap(), msg);
        }
    }

    #[test]
    fn ml_tie_break_and_scale() {
        let code = GppRmCode::standard(11).unwrap();
        let ml = MlDecoder::new(code.clone());
        assert_eq!(ml.decode_index(&[0.0; 32]).unwrap().0, 0);
        assert_eq!(ml_decode(&[0.0; 32], &code).unwrap(), vec![0; 11]);
        assert!(ml.decode(&[0.0; 31]).is_err());
        let mut rng = trial_rng(6, 6);
        for _ in 0..50 {
            let soft: Vec<f64> = (0..32).map(|_| rng.random_range(-1.0..1.0)).collect();
            let scaled: Vec<f64> = soft.iter().map(|v| v * 3.7).collect();
            assert_eq!(ml.decode(&soft).unwrap(), ml.decode(&scaled).unwrap());
        }
    }

    #[test]
    fn receiver_kind_names() {
        for kind in [
            ReceiverKind::MlGpp,
            ReceiverKind::BlockHt,
            ReceiverKind::BlockFht,
        ] {
            assert_eq!(kind.name().parse::<ReceiverKind>().unwrap(), kind);
            let json = serde_json::to_string(&kind).unwrap();
            assert_eq!(json, format!("\"{}\"", kind.name()));
        }
        assert!("viterbi".parse::<ReceiverKind>().is_err());
    }

    #[test]
    fn noiseless_simo_recovery() {
        let s = Simo::p2();
        let mut rng = trial_rng(10, 0);
        for kind in [ReceiverKind::MlGpp, ReceiverKind::BlockFht] {
            let codec = PayloadCodec::new(kind, 11, 32).unwrap();
            for t in 0..200 {
                let msg = random_msg(&mut rng, 11);
                let h = draw_channel(4, 1, &mut rng);
                let y = s.send(
                    &codec.encode(&msg).unwrap(),
                    &h,
                    &NoiseParams::noiseless(),
                    1.0,
                    t,
                );
                assert_eq!(
                    fht_receive(&y, &s.cfg, &s.dmrs, &codec, false)
                        .unwrap()
                        .bits,
                    msg
                );
                assert_eq!(
                    fht_receive(&y, &s.cfg, &s.dmrs, &codec, true).unwrap().bits,
                    msg
                );
            }
        }
    }

    #[test]
    fn ht_and_fht_decide_identically() {
        let s = Simo::p2();
        let ht = PayloadCodec::new(ReceiverKind::BlockHt, 11, 32).unwrap();
        let fht = PayloadCodec::new(ReceiverKind::BlockFht, 11, 32).unwrap();
        let noise = snr_to_sigma(0.0);
        let mut errors = 0;
        for t in 0..2000 {
            let mut rng = trial_rng(21, t);
            let msg = random_msg(&mut rng, 11);
            let h = draw_channel(4, 1, &mut rng);
            let y = s.send(&fht.encode(&msg).unwrap(), &h, &noise, 1.0, 1000 + t);
            let a = fht_receive(&y, &s.cfg, &s.dmrs, &ht, false).unwrap();
            let b = fht_receive(&y, &s.cfg, &s.dmrs, &fht, false).unwrap();
            assert_eq!(a.bits, b.bits);
            errors += usize::from(b.bits != msg);
        }
        assert!(errors > 0);
    }

    #[test]
    fn zero_channel_decodes_to_default() {
        let s = Simo::p2();
        let h = ChannelRealization::new(4, 1, vec![c(0.0, 0.0); 4]).unwrap();
        for kind in [
            ReceiverKind::MlGpp,
            ReceiverKind::BlockHt,
            ReceiverKind::BlockFht,
        ] {
            let codec = PayloadCodec::new(kind, 11, 32).unwrap();
            let msg = vec![1; 11];
            let y = s.send(
                &codec.encode(&msg).unwrap(),
                &h,
                &NoiseParams::noiseless(),
                1.0,
                0,
            );
            assert_eq!(
                fht_receive(&y, &s.cfg, &s.dmrs, &codec, false)
                    .unwrap()
                    .bits,
                vec![0; 11]
            );
        }
    }

    #[test]
    fn decisions_ignore_estimate_scale() {
        let s = Simo::p2();
        let codec = PayloadCodec::new(ReceiverKind::BlockFht, 11, 32).unwrap();
        let ml = PayloadCodec::new(ReceiverKind::MlGpp, 11, 32).unwrap();
        let noise = snr_to_sigma(-2.0);
        for t in 0..300 {
            let mut rng = trial_rng(31, t);
            let msg = random_msg(&mut rng, 11);
            let h = draw_channel(2, 1, &mut rng);
            let y = s.send(&codec.encode(&msg).unwrap(), &h, &noise, 1.0, 500 + t);
            let (p, d): (Vec<_>, Vec<_>) = y
                .antennas
                .iter()
                .map(|a| extract_resources(a, &s.cfg).unwrap())
                .unzip();
            let est = ls_estimate(&p, &s.dmrs).unwrap();
            let base = mrc_soft_bits(&d, &est).unwrap();
            let scaled = mrc_soft_bits(&d, &est.scaled(0.37)).unwrap();
            for cdc in [&codec, &ml] {
                assert_eq!(
                    cdc.decode(&base).unwrap().bits,
                    cdc.decode(&scaled).unwrap().bits
                );
            }
        }
    }

    fn mimo_setup() -> (ResourceConfig, Vec<DmrsSequence>) {
        let cfg = ResourceConfig::pucch2(2, 1).unwrap();
        let dmrs = (0..4).map(|l| gen_dmrs(&cfg, l, 4, 7).unwrap()).collect();
        (cfg, dmrs)
    }

    #[test]
    fn mimo_identity_channel() {
        let (cfg, dmrs) = mimo_setup();
        let mut eye = vec![c(0.0, 0.0); 16];
        for i in 0..4 {
            eye[i * 5] = c(1.0, 0.0);
        }
        let h = ChannelRealization::new(4, 4, eye).unwrap();
        for kind in [ReceiverKind::MlGpp, ReceiverKind::BlockFht] {
            let codec = PayloadCodec::new(kind, 11, 128).unwrap();
            let mut rng = trial_rng(40, 0);
            for _ in 0..50 {
                let msg = random_msg(&mut rng, 11);
                let grid = build_tx_grid(&codec.encode(&msg).unwrap(), &dmrs, &cfg, 1.0).unwrap();
                let y = apply_channel(&grid, &h, &NoiseParams::noiseless(), &mut rng).unwrap();
                assert_eq!(
                    mimo_receive(&y, &cfg, &dmrs, &codec, false).unwrap().bits,
                    msg
                );
            }
        }
    }

    #[test]
    fn mimo_random_channel_noiseless() {
        let (cfg, dmrs) = mimo_setup();
        let codec = PayloadCodec::new(ReceiverKind::BlockFht, 11, 128).unwrap();
        let mut rng = trial_rng(41, 0);
        for _ in 0..200 {
            let msg = random_msg(&mut rng, 11);
            let h = draw_channel(4, 4, &mut rng);
            let grid = build_tx_grid(&codec.encode(&msg).unwrap(), &dmrs, &cfg, 1.75).unwrap();
            let y = apply_channel(&grid, &h, &NoiseParams::noiseless(), &mut rng).unwrap();
            let soft = mimo_soft_bits(&y, &cfg, &dmrs).unwrap();
            let coded = codec.encode(&msg).unwrap();
            for (v, &b) in soft.iter().zip(&coded) {
                assert_eq!(v.signum(), bipolar(b));
            }
            assert_eq!(codec.decode(&soft).unwrap().bits, msg);
        }
    }

    #[test]
    fn zf_falls_back_on_singular_channel() {
        let est = ChannelEstimate {
            n_rx: 2,
            n_tx: 2,
            h_hat: vec![c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)],
        };
        let w = zf_filter(&est).unwrap();
        assert!(w.iter().all(|v| v.is_finite()));
        for v in &w {
            assert!((v - c(0.25, 0.0)).norm() < 1e-12);
        }
        let zero = ChannelEstimate {
            n_rx: 2,
            n_tx: 2,
            h_hat: vec![c(0.0, 0.0); 4],
        };
        assert!(zf_filter(&zero).unwrap().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn codec_rejects_wrong_soft_length() {
        let codec = PayloadCodec::new(ReceiverKind::MlGpp, 11, 32).unwrap();
        assert!(codec.decode(&[0.0; 30]).is_err());
        assert!(PayloadCodec::new(ReceiverKind::MlGpp, 11, 31).is_err());
        assert!(PayloadCodec::new(ReceiverKind::MlGpp, 12, 32).is_err());
    }
}
