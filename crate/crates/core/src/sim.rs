//! Monte Carlo BLER harness.
//!
//! A trial is a pure function of `(seed, trial index, SNR)`: it draws the
//! payload, the channel and unit-variance noise from the trial's own stream,
//! so every receiver and every SNR point sees the same realizations. Sweeps
//! evaluate trials in fixed-size batches (serially or on the rayon pool) and
//! then apply the stopping rule sequentially in trial order, which makes the
//! result independent of how the work was partitioned.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blockcodec::DecodedMessage;
use crate::channel::{apply_channel, draw_channel, snr_to_sigma, trial_rng};
use crate::phylayer::{build_tx_grid, gen_dmrs, DmrsSequence, ResourceConfig, PUCCH2_DMRS_OFFSETS};
use crate::receiver::{fht_receive, mimo_receive, PayloadCodec, ReceiverKind};
use crate::{Bit, Error, Result};

pub const DEFAULT_MAX_TRIALS: u64 = 1_000_000;
pub const DEFAULT_MIN_BLOCK_ERRORS: u64 = 100;
pub const DEFAULT_BATCH: u64 = 1024;
pub const CSV_HEADER: [&str; 12] = [
    "snr_db",
    "trials",
    "block_errors",
    "bler",
    "ci95",
    "receiver",
    "n_rx",
    "n_tx",
    "beta",
    "k",
    "e",
    "seed",
];

fn default_max_trials() -> u64 {
    DEFAULT_MAX_TRIALS
}

fn default_min_block_errors() -> u64 {
    DEFAULT_MIN_BLOCK_ERRORS
}

fn default_pilot_offsets() -> Vec<usize> {
    PUCCH2_DMRS_OFFSETS.to_vec()
}

fn default_one() -> usize {
    1
}

fn default_beta() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub k: usize,
    pub receiver: ReceiverKind,
    pub n_rx: usize,
    #[serde(default = "default_one")]
    pub n_tx: usize,
    #[serde(default = "default_beta")]
    pub beta: f64,
    pub snr_db: Vec<f64>,
    #[serde(default = "default_max_trials")]
    pub max_trials: u64,
    #[serde(default = "default_min_block_errors")]
    pub min_block_errors: u64,
    #[serde(default)]
    pub seed: u64,
    pub prbs: usize,
    #[serde(default = "default_one")]
    pub symbols: usize,
    #[serde(default = "default_pilot_offsets")]
    pub pilot_offsets: Vec<usize>,
    /// Rate-matched length; must equal `2 N_d n_tx`.
    pub e: usize,
    /// Slice the soft bits to +-1 before decoding.
    #[serde(default)]
    pub hard_input: bool,
}

impl SimConfig {
    /// K = 11 over 2 PRBs x 1 symbol of PUCCH format 2, E = 32.
    pub fn pucch2_simo(receiver: ReceiverKind, n_rx: usize, beta: f64) -> Self {
        SimConfig {
            k: 11,
            receiver,
            n_rx,
            n_tx: 1,
            beta,
            snr_db: vec![0.0],
            max_trials: DEFAULT_MAX_TRIALS,
            min_block_errors: DEFAULT_MIN_BLOCK_ERRORS,
            seed: 0,
            prbs: 2,
            symbols: 1,
            pilot_offsets: default_pilot_offsets(),
            e: 32,
            hard_input: false,
        }
    }

    /// 4x4 spatial multiplexing on the same allocation, E = 128.
    pub fn pucch2_mimo(receiver: ReceiverKind, beta: f64) -> Self {
        SimConfig {
            n_tx: 4,
            e: 128,
            ..Self::pucch2_simo(receiver, 4, beta)
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SimConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn resources(&self) -> Result<ResourceConfig> {
        ResourceConfig::new(self.prbs, self.symbols, &self.pilot_offsets)
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.max_trials == 0 {
            return bad("max_trials must be at least 1".into());
        }
        if self.snr_db.is_empty() {
            return bad("snr_db must not be empty".into());
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return bad("snr_db values must be finite".into());
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return bad(format!(
                "beta must be finite and nonnegative, got {}",
                self.beta
            ));
        }
        if self.n_rx == 0 || self.n_tx == 0 {
            return bad("n_rx and n_tx must be at least 1".into());
        }
        if self.n_tx > self.n_rx {
            return bad(format!(
                "n_tx = {} exceeds n_rx = {}; zero forcing needs n_tx <= n_rx",
                self.n_tx, self.n_rx
            ));
        }
        let res = self.resources()?;
        if self.n_tx > res.n_pilot() {
            return bad(format!(
                "{} layers need at least as many pilot REs",
                self.n_tx
            ));
        }
        let e = 2 * res.n_data() * self.n_tx;
        if self.e != e {
            return bad(format!(
                "e = {} does not fill the allocation: 2 x {} data REs x {} layers = {e}",
                self.e,
                res.n_data(),
                self.n_tx
            ));
        }
        PayloadCodec::new(self.receiver, self.k, self.e)
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }
}

/// Validated configuration with its codec and pilots built once.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: SimConfig,
    resources: ResourceConfig,
    dmrs: Vec<DmrsSequence>,
    codec: PayloadCodec,
}

/// Sent and decoded payloads of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub sent: Vec<Bit>,
    pub decoded: DecodedMessage,
}

impl TrialOutcome {
    pub fn is_error(&self) -> bool {
        self.sent != self.decoded.bits
    }
}

impl Simulator {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let resources = config.resources()?;
        let dmrs = (0..config.n_tx)
            .map(|l| gen_dmrs(&resources, l, config.n_tx, config.seed))
            .collect::<Result<Vec<_>>>()?;
        let codec = PayloadCodec::new(config.receiver, config.k, config.e)?;
        Ok(Simulator {
            config,
            resources,
            dmrs,
            codec,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn codec(&self) -> &PayloadCodec {
        &self.codec
    }

    pub fn run_trial_detailed(&self, snr_db: f64, trial: u64) -> Result<TrialOutcome> {
        let cfg = &self.config;
        let mut rng = trial_rng(cfg.seed, trial);
        let sent: Vec<Bit> = (0..cfg.k)
            .map(|_| Bit::from(rng.random::<bool>()))
            .collect();
        let h = draw_channel(cfg.n_rx, cfg.n_tx, &mut rng);
        let coded = self.codec.encode(&sent)?;
        let grid = build_tx_grid(&coded, &self.dmrs, &self.resources, cfg.beta)?;
        let y = apply_channel(&grid, &h, &snr_to_sigma(snr_db), &mut rng)?;
        let decoded = if cfg.n_tx == 1 {
            fht_receive(
                &y,
                &self.resources,
                &self.dmrs[0],
                &self.codec,
                cfg.hard_input,
            )?
        } else {
            mimo_receive(&y, &self.resources, &self.dmrs, &self.codec, cfg.hard_input)?
        };
        Ok(TrialOutcome { sent, decoded })
    }

    /// Whether trial `trial` at `snr_db` ends in a block error.
    pub fn run_trial(&self, snr_db: f64, trial: u64) -> Result<bool> {
        Ok(self.run_trial_detailed(snr_db, trial)?.is_error())
    }

    /// Outcomes of trials `start..end` in order.
    fn batch(&self, snr_db: f64, start: u64, end: u64, parallel: bool) -> Result<Vec<bool>> {
        if parallel {
            (start..end)
                .into_par_iter()
                .map(|t| self.run_trial(snr_db, t))
                .collect()
        } else {
            (start..end).map(|t| self.run_trial(snr_db, t)).collect()
        }
    }

    /// Runs trials `0, 1, ...` until `min_block_errors` errors have occurred
    /// or `max_trials` is reached; the stop point is exact.
    pub fn run_point(&self, snr_db: f64, opts: &SweepOptions) -> Result<BlerPoint> {
        let batch = opts.batch.max(1);
        let (max, min_err) = (self.config.max_trials, self.config.min_block_errors);
        let mut trials = 0;
        let mut errors = 0;
        'outer: while trials < max {
            let end = (trials + batch).min(max);
            for err in self.batch(snr_db, trials, end, opts.parallel)? {
                trials += 1;
                errors += u64::from(err);
                if min_err > 0 && errors >= min_err {
                    break 'outer;
                }
            }
        }
        Ok(BlerPoint::new(snr_db, trials, errors))
    }

    pub fn run_sweep(&self, opts: &SweepOptions) -> Result<SweepResult> {
        let mut snrs = self.config.snr_db.clone();
        snrs.sort_by(f64::total_cmp);
        let points = snrs
            .iter()
            .map(|&s| self.run_point(s, opts))
            .collect::<Result<Vec<_>>>()?;
        Ok(SweepResult {
            config: self.config.clone(),
            points,
            version: concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")).to_string(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepOptions {
    pub parallel: bool,
    /// Trials evaluated between stop-rule checks.
    pub batch: u64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            parallel: true,
            batch: DEFAULT_BATCH,
        }
    }
}

impl SweepOptions {
    pub fn serial() -> Self {
        SweepOptions {
            parallel: false,
            ..Default::default()
        }
    }
}

pub fn run_sweep(config: &SimConfig, opts: &SweepOptions) -> Result<SweepResult> {
    Simulator::new(config.clone())?.run_sweep(opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlerPoint {
    pub snr_db: f64,
    pub trials: u64,
    pub block_errors: u64,
    pub bler: f64,
    /// Normal-approximation 95% half-width.
    pub ci95: f64,
}

impl BlerPoint {
    pub fn new(snr_db: f64, trials: u64, block_errors: u64) -> Self {
        let (bler, ci95) = if trials == 0 {
            (0.0, 0.0)
        } else {
            let p = block_errors as f64 / trials as f64;
            (p, 1.96 * (p * (1.0 - p) / trials as f64).sqrt())
        };
        BlerPoint {
            snr_db,
            trials,
            block_errors,
            bler,
            ci95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SimConfig,
    pub points: Vec<BlerPoint>,
    pub version: String,
}

impl SweepResult {
    pub fn label(&self) -> String {
        let c = &self.config;
        format!("{} {}x{} beta={}", c.receiver, c.n_rx, c.n_tx, c.beta)
    }

    /// SNR where the BLER crosses `target`, by linear interpolation of
    /// `log10(bler)` between the first bracketing pair of points.
    pub fn snr_at_bler(&self, target: f64) -> Result<f64> {
        let not_bracketed = || Error::NotBracketed {
            target,
            sweep: self.label(),
        };
        if !(target > 0.0 && target < 1.0) {
            return Err(not_bracketed());
        }
        for w in self.points.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if a.bler == target {
                return Ok(a.snr_db);
            }
            if a.bler > target && b.bler <= target {
                if b.bler == target {
                    return Ok(b.snr_db);
                }
                if b.bler == 0.0 {
                    return Err(not_bracketed());
                }
                let (la, lb, lt) = (a.bler.log10(), b.bler.log10(), target.log10());
                return Ok(a.snr_db + (lt - la) / (lb - la) * (b.snr_db - a.snr_db));
            }
        }
        match self.points.last() {
            Some(p) if p.bler == target => Ok(p.snr_db),
            _ => Err(not_bracketed()),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `snr(b) - snr(a)` at `target`; positive when `b` needs more SNR.
pub fn gap_at_bler(a: &SweepResult, b: &SweepResult, target: f64) -> Result<f64> {
    Ok(b.snr_at_bler(target)? - a.snr_at_bler(target)?)
}

/// Writes one header row, then one row per point of every sweep.
pub fn write_csv<W: Write>(writer: W, sweeps: &[&SweepResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for s in sweeps {
        let c = &s.config;
        for p in &s.points {
            w.write_record([
                p.snr_db.to_string(),
                p.trials.to_string(),
                p.block_errors.to_string(),
                p.bler.to_string(),
                p.ci95.to_string(),
                c.receiver.to_string(),
                c.n_rx.to_string(),
                c.n_tx.to_string(),
                c.beta.to_string(),
                c.k.to_string(),
                c.e.to_string(),
                c.seed.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(sweeps: &[&SweepResult]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(&mut buf, sweeps)?;
    Ok(String::from_utf8(buf).expect("CSV output is UTF-8"))
}
