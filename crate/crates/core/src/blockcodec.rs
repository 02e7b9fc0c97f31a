//! Block-segmented RM(1, m) coding.
//!
//! A `K`-bit payload is cut into `ceil(K / 6)` sub-blocks whose sizes differ
//! by at most one (smaller blocks first), so `K = 11` becomes `5 + 6`. A block
//! of `s` bits is carried by RM(1, s - 1), the sub-codewords are concatenated,
//! and the result is rate matched to `E` bits with a per-block proportional
//! budget. On reception each block is de-rate-matched, correlated with a
//! Hadamard transform and the peak is mapped back to message bits.
//!
//! Within a block, message bits are ordered `(m0, m_m, ..., m_1)`. A peak at
//! index `i` with sign `s` decodes to `m0 = (s < 0)` and `m_r = bit (r - 1) of i`.

use crate::hadamard::{argmax_abs, fht_in_place, ht_correlate, Peak, SoftVector};
use crate::rmcode::Rm1Code;
use crate::{check_bits, Bit, Error, Result};

pub const MIN_PAYLOAD: usize = 3;
pub const MAX_PAYLOAD: usize = 64;
/// Largest sub-block message size; the policy never exceeds 6 in practice.
pub const MAX_BLOCK_BITS: usize = 7;
const TARGET_BLOCK_BITS: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentPlan {
    payload_bits: usize,
    block_sizes: Vec<usize>,
    codes: Vec<Rm1Code>,
}

impl SegmentPlan {
    pub fn payload_bits(&self) -> usize {
        self.payload_bits
    }

    pub fn num_blocks(&self) -> usize {
        self.block_sizes.len()
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn orders(&self) -> Vec<usize> {
        self.codes.iter().map(Rm1Code::order).collect()
    }

    pub fn code_lengths(&self) -> Vec<usize> {
        self.codes.iter().map(Rm1Code::n).collect()
    }

    /// `sum N'_b`.
    pub fn coded_length(&self) -> usize {
        self.codes.iter().map(Rm1Code::n).sum()
    }

    pub fn codes(&self) -> &[Rm1Code] {
        &self.codes
    }
}

/// Splits a `k`-bit payload into balanced RM(1, m) sub-blocks.
pub fn plan_segments(k: usize) -> Result<SegmentPlan> {
    if !(MIN_PAYLOAD..=MAX_PAYLOAD).contains(&k) {
        return Err(Error::InvalidParameter(format!(
            "payload must be {MIN_PAYLOAD}..={MAX_PAYLOAD} bits, got {k}"
        )));
    }
    let blocks = k.div_ceil(TARGET_BLOCK_BITS);
    let (base, extra) = (k / blocks, k % blocks);
    let block_sizes: Vec<usize> = (0..blocks)
        .map(|b| if b < blocks - extra { base } else { base + 1 })
        .collect();
    let codes = block_sizes
        .iter()
        .map(|&s| Rm1Code::new(s - 1))
        .collect::<Result<_>>()?;
    Ok(SegmentPlan {
        payload_bits: k,
        block_sizes,
        codes,
    })
}

/// `c = [c(1) ... c(N)]` with the start offset of each sub-codeword.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConcatenatedCodeword {
    pub bits: Vec<Bit>,
    pub boundaries: Vec<usize>,
}

impl ConcatenatedCodeword {
    pub fn num_blocks(&self) -> usize {
        self.boundaries.len()
    }

    pub fn block(&self, b: usize) -> &[Bit] {
        let end = self
            .boundaries
            .get(b + 1)
            .copied()
            .unwrap_or(self.bits.len());
        &self.bits[self.boundaries[b]..end]
    }

    pub fn block_lengths(&self) -> Vec<usize> {
        (0..self.num_blocks())
            .map(|b| self.block(b).len())
            .collect()
    }
}

pub fn encode_blocks(msg: &[Bit], plan: &SegmentPlan) -> Result<ConcatenatedCodeword> {
    if msg.len() != plan.payload_bits {
        return Err(Error::length("payload", plan.payload_bits, msg.len()));
    }
    check_bits(msg)?;
    let mut bits = Vec::with_capacity(plan.coded_length());
    let mut boundaries = Vec::with_capacity(plan.num_blocks());
    let mut offset = 0;
    for (code, &size) in plan.codes.iter().zip(&plan.block_sizes) {
        boundaries.push(bits.len());
        bits.extend(code.encode(&msg[offset..offset + size])?.bits);
        offset += size;
    }
    Ok(ConcatenatedCodeword { bits, boundaries })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RateMatchedBits {
    pub bits: Vec<Bit>,
    pub per_block_e: Vec<usize>,
}

/// Splits `e` in proportion to `lengths` by largest remainder (ties go to the
/// lower block index), with every block receiving at least one bit.
pub fn allocate_rate(lengths: &[usize], e: usize) -> Result<Vec<usize>> {
    if lengths.is_empty() || lengths.contains(&0) {
        return Err(Error::InvalidParameter(
            "rate allocation needs non-empty blocks".into(),
        ));
    }
    if e < lengths.len() {
        return Err(Error::InvalidParameter(format!(
            "E = {e} cannot give {} blocks one bit each",
            lengths.len()
        )));
    }
    let total: usize = lengths.iter().sum();
    let mut alloc: Vec<usize> = lengths.iter().map(|&n| e * n / total).collect();
    // Remainders compared exactly as (e * n) mod total.
    let mut order: Vec<usize> = (0..lengths.len()).collect();
    order.sort_by_key(|&b| (std::cmp::Reverse((e * lengths[b]) % total), b));
    let short = e - alloc.iter().sum::<usize>();
    for &b in order.iter().take(short) {
        alloc[b] += 1;
    }
    while let Some(empty) = alloc.iter().position(|&a| a == 0) {
        let donor = (0..alloc.len())
            .max_by_key(|&b| (alloc[b], std::cmp::Reverse(b)))
            .expect("non-empty");
        alloc[donor] -= 1;
        alloc[empty] += 1;
    }
    Ok(alloc)
}

/// Cyclic rate matching of one block: `e(i) = c(i mod N')`.
pub fn rate_match_block(bits: &[Bit], e: usize) -> Vec<Bit> {
    (0..e).map(|i| bits[i % bits.len()]).collect()
}

/// Inverse of [`rate_match_block`]: repeated positions are summed, punctured
/// positions stay at 0.
pub fn derate_block(soft: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (i, &v) in soft.iter().enumerate() {
        out[i % n] += v;
    }
    out
}

pub fn rate_match(c: &ConcatenatedCodeword, e: usize) -> Result<RateMatchedBits> {
    let blocks = c.num_blocks();
    if e < 2 * blocks || !e.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "E must be even and at least {}, got {e}",
            2 * blocks
        )));
    }
    let per_block_e = allocate_rate(&c.block_lengths(), e)?;
    let mut bits = Vec::with_capacity(e);
    for (b, &eb) in per_block_e.iter().enumerate() {
        bits.extend(rate_match_block(c.block(b), eb));
    }
    Ok(RateMatchedBits { bits, per_block_e })
}

pub fn derate_match(
    soft: &[f64],
    code_lengths: &[usize],
    per_block_e: &[usize],
) -> Result<Vec<SoftVector>> {
    let e: usize = per_block_e.iter().sum();
    if soft.len() != e {
        return Err(Error::length("rate-matched soft input", e, soft.len()));
    }
    if code_lengths.len() != per_block_e.len() {
        return Err(Error::length(
            "per-block rate budget",
            code_lengths.len(),
            per_block_e.len(),
        ));
    }
    let mut offset = 0;
    code_lengths
        .iter()
        .zip(per_block_e)
        .map(|(&n, &eb)| {
            let block = derate_block(&soft[offset..offset + eb], n);
            offset += eb;
            SoftVector::new(block)
        })
        .collect()
}

/// Which correlator to run per block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Transform {
    /// Dense correlation, `2^(2m)` operations.
    Dense,
    /// Fast Hadamard transform, `m * 2^m` operations.
    Fast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedMessage {
    pub bits: Vec<Bit>,
    pub per_block_metric: Vec<f64>,
}

/// Message bits `(m0, m_m, ..., m_1)` for a correlation peak.
pub fn index_to_message(index: usize, sign: i8, m: usize) -> Vec<Bit> {
    debug_assert!(index < 1 << m);
    let mut bits = Vec::with_capacity(m + 1);
    bits.push(Bit::from(sign < 0));
    bits.extend((1..=m).rev().map(|r| ((index >> (r - 1)) & 1) as Bit));
    bits
}

/// Correlates one block and returns its message bits and peak.
pub fn decode_block(soft: &[f64], m: usize, transform: Transform) -> Result<(Vec<Bit>, Peak)> {
    let peak = match transform {
        Transform::Dense => argmax_abs(&ht_correlate(soft, m)?.values),
        Transform::Fast => {
            if soft.len() != 1 << m {
                return Err(Error::length("Hadamard input", 1 << m, soft.len()));
            }
            let mut buf = soft.to_vec();
            fht_in_place(&mut buf)?;
            argmax_abs(&buf)
        }
    };
    Ok((index_to_message(peak.index, peak.sign, m), peak))
}

pub fn decode_blocks(
    softs: &[SoftVector],
    plan: &SegmentPlan,
    transform: Transform,
) -> Result<DecodedMessage> {
    if softs.len() != plan.num_blocks() {
        return Err(Error::length(
            "soft block count",
            plan.num_blocks(),
            softs.len(),
        ));
    }
    let mut bits = Vec::with_capacity(plan.payload_bits);
    let mut per_block_metric = Vec::with_capacity(softs.len());
    for (soft, code) in softs.iter().zip(&plan.codes) {
        let (block, peak) = decode_block(soft.as_slice(), code.order(), transform)?;
        bits.extend(block);
        per_block_metric.push(peak.magnitude);
    }
    Ok(DecodedMessage {
        bits,
        per_block_metric,
    })
}

/// Segmentation, rate matching and decoding bundled for a fixed `(K, E)`.
#[derive(Debug, Clone)]
pub struct BlockCodec {
    plan: SegmentPlan,
    e: usize,
    per_block_e: Vec<usize>,
}

impl BlockCodec {
    pub fn new(k: usize, e: usize) -> Result<Self> {
        let plan = plan_segments(k)?;
        if e < 2 * plan.num_blocks() || !e.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "E must be even and at least {}, got {e}",
                2 * plan.num_blocks()
            )));
        }
        let per_block_e = allocate_rate(&plan.code_lengths(), e)?;
        Ok(BlockCodec {
            plan,
            e,
            per_block_e,
        })
    }

    pub fn plan(&self) -> &SegmentPlan {
        &self.plan
    }

    pub fn e(&self) -> usize {
        self.e
    }

    pub fn per_block_e(&self) -> &[usize] {
        &self.per_block_e
    }

    pub fn encode(&self, msg: &[Bit]) -> Result<RateMatchedBits> {
        rate_match(&encode_blocks(msg, &self.plan)?, self.e)
    }

    pub fn decode(&self, soft: &[f64], transform: Transform) -> Result<DecodedMessage> {
        let blocks = derate_match(soft, &self.plan.code_lengths(), &self.per_block_e)?;
        decode_blocks(&blocks, &self.plan, transform)
    }
}
