//! Quick oracle checks runnable from the command line.

use std::path::Path;
use std::process::ExitCode;

use shortblock::channel::{apply_channel, trial_rng, ChannelRealization, NoiseParams};
use shortblock::hadamard::{fht, ht_correlate, stage_matrix, sylvester, IntMatrix};
use shortblock::phylayer::{build_tx_grid, gen_dmrs, ResourceConfig};
use shortblock::receiver::{fht_receive, PayloadCodec, ReceiverKind};
use shortblock::rmcode::{index_to_bits, min_distance, GppRmCode, Rm1Code};
use shortblock::Result;

fn naive_correlation(u: &[f64]) -> Vec<f64> {
    (0..u.len())
        .map(|i| {
            u.iter()
                .enumerate()
                .map(|(j, v)| {
                    if (i & j).count_ones() % 2 == 1 {
                        -v
                    } else {
                        *v
                    }
                })
                .sum()
        })
        .collect()
}

fn transforms() -> Result<bool> {
    let mut ok = true;
    for m in 1..=6 {
        for cw in Rm1Code::new(m)?.codebook()? {
            let u = cw.to_bipolar();
            let f = fht(&u, m)?;
            let h = ht_correlate(&u, m)?;
            ok &= f.values == h.values && f.values == naive_correlation(&u);
            ok &= h.op_count == 1 << (2 * m) && f.op_count == (m as u64) << m;
        }
    }
    Ok(ok)
}

fn factorization() -> Result<bool> {
    let mut ok = true;
    for m in [4, 5] {
        let mut prod = IntMatrix::identity(1 << m);
        for i in 1..=m {
            prod = stage_matrix(m, i)?.mul(&prod);
        }
        ok &= prod == sylvester(m)?.to_int_matrix();
    }
    Ok(ok)
}

fn distances(basis: Option<&Path>) -> Result<bool> {
    let rm4 = min_distance(&Rm1Code::new(4)?.codebook()?)?;
    let rm5 = min_distance(&Rm1Code::new(5)?.codebook()?)?;
    let gpp = match basis {
        Some(p) => GppRmCode::load(p, 11)?,
        None => GppRmCode::standard(11)?,
    };
    let book = gpp.codebook();
    let mut distinct: Vec<_> = book.iter().map(|c| c.bits.clone()).collect();
    distinct.sort();
    distinct.dedup();
    Ok(rm4 == 8 && rm5 == 16 && distinct.len() == 2048 && min_distance(&book)? == 10)
}

fn round_trip() -> Result<bool> {
    let cfg = ResourceConfig::pucch2(2, 1)?;
    let dmrs = gen_dmrs(&cfg, 0, 1, 1)?;
    let h = ChannelRealization::new(1, 1, vec![1.0.into()])?;
    for kind in [ReceiverKind::BlockFht, ReceiverKind::MlGpp] {
        let codec = PayloadCodec::new(kind, 11, 32)?;
        for idx in 0..2048 {
            let msg = index_to_bits(idx, 11);
            let grid = build_tx_grid(&codec.encode(&msg)?, std::slice::from_ref(&dmrs), &cfg, 1.0)?;
            let y = apply_channel(
                &grid,
                &h,
                &NoiseParams::noiseless(),
                &mut trial_rng(0, idx as u64),
            )?;
            if fht_receive(&y, &cfg, &dmrs, &codec, false)?.bits != msg {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

pub fn run(basis: Option<&Path>) -> Result<ExitCode> {
    let checks = [
        (
            "fht matches dense and naive correlation, op counts",
            transforms()?,
        ),
        (
            "butterfly stages multiply to the Sylvester matrix",
            factorization()?,
        ),
        (
            "minimum distances RM(1,4)=8, RM(1,5)=16, C(32,11)=10",
            distances(basis)?,
        ),
        ("noiseless round trip of all 2048 payloads", round_trip()?),
    ];
    for (name, ok) in &checks {
        println!("[{}] {name}", if *ok { "PASS" } else { "FAIL" });
    }
    Ok(if checks.iter().all(|c| c.1) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
