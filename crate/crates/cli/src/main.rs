use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use shortblock::receiver::{PayloadCodec, ReceiverKind};
use shortblock::rmcode::{bits_to_string, GppRmCode, Rm1Code};
use shortblock::sim::{gap_at_bler, write_csv, SimConfig, SweepOptions, SweepResult};
use shortblock::{Bit, Error};

mod selftest;

const SEED_ENV: &str = "SHORTBLOCK_SEED";

#[derive(Parser, Debug)]
#[command(
    name = "shortblock",
    version,
    about = "Short-block RM coding with fast Hadamard decoding, and a BLER simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dump an RM(1, m) or C(32, K) codebook, one codeword per line.
    Codebook(CodebookArgs),
    /// Encode a hex payload (MSB first) to rate-matched code bits.
    Encode(EncodeArgs),
    /// Decode a code-bit string or soft values back to a hex payload.
    Decode(DecodeArgs),
    /// Run one BLER sweep and write CSV.
    Simulate(SimArgs),
    /// Run two sweeps and report the SNR gap at a target BLER.
    Compare(CompareArgs),
    /// Run the built-in oracle checks.
    Selftest(SelftestArgs),
}

#[derive(Args, Debug)]
struct CodebookArgs {
    /// RM(1, m) order.
    #[arg(long, conflicts_with = "gpp", required_unless_present = "gpp")]
    rm: Option<usize>,
    /// C(32, K) payload size.
    #[arg(long)]
    gpp: Option<usize>,
    /// Basis table replacing the built-in one (32 lines of K digits).
    #[arg(long, requires = "gpp")]
    basis: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct CodecArgs {
    #[arg(long, default_value_t = 11)]
    k: usize,
    #[arg(long, default_value = "fht")]
    receiver: ReceiverKind,
    /// Rate-matched length.
    #[arg(long, default_value_t = 32)]
    e: usize,
}

#[derive(Args, Debug)]
struct EncodeArgs {
    #[command(flatten)]
    codec: CodecArgs,
    /// Payload in hex, most significant bit first.
    #[arg(long)]
    payload: String,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct DecodeArgs {
    #[command(flatten)]
    codec: CodecArgs,
    /// Hard code bits as a 0/1 string.
    #[arg(long, conflicts_with = "soft", required_unless_present = "soft")]
    bits: Option<String>,
    /// Comma-separated soft values, positive meaning bit 0.
    #[arg(long, allow_hyphen_values = true)]
    soft: Option<String>,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug, Clone, Default)]
struct Overrides {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// SNR points as start:step:stop or a comma-separated list.
    #[arg(long, allow_hyphen_values = true)]
    snr: Option<String>,
    #[arg(long)]
    receiver: Option<ReceiverKind>,
    #[arg(long)]
    nrx: Option<usize>,
    #[arg(long)]
    ntx: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    /// Maximum trials per SNR point.
    #[arg(long)]
    trials: Option<u64>,
    /// Stop a point after this many block errors (0 disables).
    #[arg(long)]
    min_errors: Option<u64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    prbs: Option<usize>,
    #[arg(long)]
    symbols: Option<usize>,
    /// Rate-matched length; derived from the allocation when omitted.
    #[arg(long)]
    e: Option<usize>,
    /// Slice soft bits to +-1 before decoding.
    #[arg(long)]
    hard: bool,
    /// Evaluate trials on one thread.
    #[arg(long)]
    serial: bool,
}

#[derive(Args, Debug)]
struct SimArgs {
    #[command(flatten)]
    opts: Overrides,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print a JSON summary to stdout.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    opts: Overrides,
    /// Configuration of the second sweep; defaults to the first.
    #[arg(long)]
    against: Option<PathBuf>,
    /// Receiver of the second sweep.
    #[arg(long)]
    receiver_b: Option<ReceiverKind>,
    /// Pilot boost of the second sweep.
    #[arg(long)]
    beta_b: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    target: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct SelftestArgs {
    /// Basis table to check instead of the built-in one.
    #[arg(long)]
    basis: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", one_line(&e.to_string()));
            ExitCode::from(match e {
                Error::DataAsset { .. } => 2,
                _ => 1,
            })
        }
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn run(cli: Cli) -> shortblock::Result<ExitCode> {
    match cli.command {
        Command::Codebook(a) => codebook(a),
        Command::Encode(a) => encode(a),
        Command::Decode(a) => decode(a),
        Command::Simulate(a) => simulate(a),
        Command::Compare(a) => compare(a),
        Command::Selftest(a) => Ok(selftest::run(a.basis.as_deref())?),
    }
}

fn codebook(a: CodebookArgs) -> shortblock::Result<ExitCode> {
    let words = match (a.rm, a.gpp) {
        (Some(m), _) => Rm1Code::new(m)?.codebook()?,
        (None, Some(k)) => match &a.basis {
            Some(p) => GppRmCode::load(p, k)?.codebook(),
            None => GppRmCode::standard(k)?.codebook(),
        },
        (None, None) => unreachable!("clap requires one of --rm, --gpp"),
    };
    let lines: Vec<String> = words.iter().map(|w| bits_to_string(&w.bits)).collect();
    let mut out = BufWriter::new(io::stdout().lock());
    if a.json {
        writeln!(out, "{}", serde_json::to_string(&lines)?)?;
    } else {
        for (i, l) in lines.iter().enumerate() {
            writeln!(out, "{i} {l}")?;
        }
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn parse_payload(hex: &str, k: usize) -> shortblock::Result<Vec<Bit>> {
    let digits = hex.trim().trim_start_matches("0x").trim_start_matches("0X");
    let value = u128::from_str_radix(digits, 16)
        .map_err(|e| Error::InvalidParameter(format!("payload '{hex}' is not hex: {e}")))?;
    if k < 128 && value >> k != 0 {
        return Err(Error::InvalidParameter(format!(
            "payload {hex} does not fit in {k} bits"
        )));
    }
    Ok((0..k).rev().map(|i| ((value >> i) & 1) as Bit).collect())
}

fn payload_hex(bits: &[Bit]) -> String {
    let value = bits
        .iter()
        .fold(0u128, |acc, &b| (acc << 1) | u128::from(b));
    format!("0x{value:0width$x}", width = bits.len().div_ceil(4))
}

fn encode(a: EncodeArgs) -> shortblock::Result<ExitCode> {
    let codec = PayloadCodec::new(a.codec.receiver, a.codec.k, a.codec.e)?;
    let msg = parse_payload(&a.payload, a.codec.k)?;
    let coded = bits_to_string(&codec.encode(&msg)?);
    if a.json {
        let v = serde_json::json!({ "payload": payload_hex(&msg), "bits": coded });
        println!("{v}");
    } else {
        println!("{coded}");
    }
    Ok(ExitCode::SUCCESS)
}

fn decode(a: DecodeArgs) -> shortblock::Result<ExitCode> {
    let codec = PayloadCodec::new(a.codec.receiver, a.codec.k, a.codec.e)?;
    let soft: Vec<f64> = match (&a.bits, &a.soft) {
        (Some(bits), _) => bits
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(1.0),
                '1' => Ok(-1.0),
                other => Err(Error::InvalidParameter(format!(
                    "code bit '{other}' is not 0 or 1"
                ))),
            })
            .collect::<shortblock::Result<_>>()?,
        (None, Some(soft)) => soft
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidParameter(format!("soft value '{v}': {e}")))
            })
            .collect::<shortblock::Result<_>>()?,
        (None, None) => unreachable!("clap requires one of --bits, --soft"),
    };
    let decoded = codec.decode(&soft)?;
    let hex = payload_hex(&decoded.bits);
    if a.json {
        let v = serde_json::json!({ "payload": hex, "metrics": decoded.per_block_metric });
        println!("{v}");
    } else {
        println!("{hex}");
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_snr(text: &str) -> shortblock::Result<Vec<f64>> {
    let bad = || {
        Error::Config(format!(
            "--snr '{text}': expected start:step:stop or a comma list"
        ))
    };
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [start, step, stop] => {
            let (start, step, stop) = (num(start)?, num(step)?, num(stop)?);
            let valid = step > 0.0 && start.is_finite() && stop.is_finite() && stop >= start;
            if !valid {
                return Err(bad());
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
            if n > 10_000 {
                return Err(bad());
            }
            Ok((0..n)
                .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
                .collect())
        }
        [_] => text.split(',').map(num).collect(),
        _ => Err(bad()),
    }
}

fn seed_from_env() -> shortblock::Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("{SEED_ENV}='{v}' is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

/// Reads an optional config file, then applies flag overrides. Seed
/// precedence: flag, config file, `SHORTBLOCK_SEED`, 0.
fn load_config(path: Option<&PathBuf>, o: &Overrides) -> shortblock::Result<SimConfig> {
    let (mut cfg, file_seed) = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            let value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            let has_seed = value.get("seed").is_some();
            let cfg: SimConfig = serde_json::from_value(value)
                .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            (cfg, has_seed)
        }
        None => (
            SimConfig::pucch2_simo(ReceiverKind::BlockFht, 4, 1.0),
            false,
        ),
    };
    cfg.seed = match (o.seed, file_seed) {
        (Some(s), _) => s,
        (None, true) => cfg.seed,
        (None, false) => seed_from_env()?.unwrap_or(0),
    };
    if let Some(s) = &o.snr {
        cfg.snr_db = parse_snr(s)?;
    }
    if let Some(r) = o.receiver {
        cfg.receiver = r;
    }
    if let Some(n) = o.nrx {
        cfg.n_rx = n;
    }
    if let Some(b) = o.beta {
        cfg.beta = b;
    }
    if let Some(t) = o.trials {
        cfg.max_trials = t;
    }
    if let Some(m) = o.min_errors {
        cfg.min_block_errors = m;
    }
    if let Some(k) = o.k {
        cfg.k = k;
    }
    let reshaped = o.ntx.is_some() || o.prbs.is_some() || o.symbols.is_some();
    if let Some(n) = o.ntx {
        cfg.n_tx = n;
    }
    if let Some(p) = o.prbs {
        cfg.prbs = p;
    }
    if let Some(s) = o.symbols {
        cfg.symbols = s;
    }
    match o.e {
        Some(e) => cfg.e = e,
        None if reshaped => {
            if let Ok(res) = cfg.resources() {
                cfg.e = 2 * res.n_data() * cfg.n_tx;
            }
        }
        None => {}
    }
    cfg.hard_input |= o.hard;
    cfg.validate()?;
    Ok(cfg)
}

fn sweep_options(o: &Overrides) -> SweepOptions {
    if o.serial {
        SweepOptions::serial()
    } else {
        SweepOptions::default()
    }
}

fn emit_csv(
    out: Option<&PathBuf>,
    sweeps: &[&SweepResult],
    to_stdout: bool,
) -> shortblock::Result<()> {
    match out {
        Some(p) => write_csv(BufWriter::new(File::create(p)?), sweeps),
        None if to_stdout => write_csv(io::stdout().lock(), sweeps),
        None => Ok(()),
    }
}

fn simulate(a: SimArgs) -> shortblock::Result<ExitCode> {
    let cfg = load_config(a.opts.config.as_ref(), &a.opts)?;
    let result = shortblock::sim::run_sweep(&cfg, &sweep_options(&a.opts))?;
    emit_csv(a.out.as_ref(), &[&result], !a.json)?;
    if a.json {
        println!("{}", result.to_json()?);
    }
    Ok(ExitCode::SUCCESS)
}

fn compare(a: CompareArgs) -> shortblock::Result<ExitCode> {
    let cfg_a = load_config(a.opts.config.as_ref(), &a.opts)?;
    let mut cfg_b = match &a.against {
        Some(p) => load_config(Some(p), &a.opts)?,
        None => cfg_a.clone(),
    };
    if let Some(r) = a.receiver_b {
        cfg_b.receiver = r;
    }
    if let Some(b) = a.beta_b {
        cfg_b.beta = b;
    }
    cfg_b.validate()?;
    let opts = sweep_options(&a.opts);
    let ra = shortblock::sim::run_sweep(&cfg_a, &opts)?;
    let rb = shortblock::sim::run_sweep(&cfg_b, &opts)?;
    emit_csv(a.out.as_ref(), &[&ra, &rb], !a.json)?;
    let gap = gap_at_bler(&ra, &rb, a.target);
    if a.json {
        let v = serde_json::json!({
            "a": ra,
            "b": rb,
            "target_bler": a.target,
            "gap_db": gap.as_ref().ok(),
            "gap_error": gap.as_ref().err().map(|e| e.to_string()),
        });
        println!("{}", serde_json::to_string_pretty(&v)?);
    } else {
        match &gap {
            Ok(g) => eprintln!(
                "gap at BLER {}: {g:.2} dB ({} needs {g:.2} dB more than {})",
                a.target,
                rb.label(),
                ra.label()
            ),
            Err(e) => eprintln!("gap at BLER {}: {e}", a.target),
        }
    }
    Ok(ExitCode::SUCCESS)
}
