//! First-order Reed-Muller codes and the 3GPP C(32, K) code.
//!
//! RM(1, m) messages are ordered `(m0, m_m, ..., m_1)` and the generator rows
//! are `(1, v_m, ..., v_1)`, where `v_r` at column `j` is bit `r - 1` of `j`.
//! So `v_1` is the fastest-alternating row `0101...` and `v_m` is `0...01...1`.

use std::fmt::Write as _;
use std::path::Path;

use crate::{check_bits, Bit, Error, Result};

/// Largest order accepted by [`Rm1Code::new`].
pub const MAX_RM_ORDER: usize = 15;
/// Largest order for which a full codebook is materialized.
pub const MAX_CODEBOOK_ORDER: usize = 10;
/// Codeword length of the 3GPP small-block code.
pub const GPP_CODE_LENGTH: usize = 32;
/// Dimension range supported by the 3GPP small-block code.
pub const GPP_K_RANGE: std::ops::RangeInclusive<usize> = 3..=11;

const STANDARD_BASIS: &str = include_str!("../assets/gpp_c32_basis.txt");

/// A codeword together with the index of the sub-block that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CodewordBits {
    pub bits: Vec<Bit>,
    pub block_id: usize,
}

impl CodewordBits {
    pub fn new(bits: Vec<Bit>) -> Self {
        CodewordBits { bits, block_id: 0 }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn weight(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    /// Bipolar form `(-1)^c`.
    pub fn to_bipolar(&self) -> Vec<f64> {
        self.bits.iter().map(|&b| crate::bipolar(b)).collect()
    }
}

/// The first-order Reed-Muller code RM(1, m).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rm1Code {
    order: usize,
    generator: Vec<Vec<Bit>>,
}

impl Rm1Code {
    pub fn new(order: usize) -> Result<Self> {
        if !(1..=MAX_RM_ORDER).contains(&order) {
            return Err(Error::InvalidParameter(format!(
                "RM(1, m) order must be in 1..={MAX_RM_ORDER}, got {order}"
            )));
        }
        let n = 1usize << order;
        let mut generator = Vec::with_capacity(order + 1);
        generator.push(vec![1; n]);
        for r in 1..=order {
            let shift = order - r;
            generator.push((0..n).map(|j| ((j >> shift) & 1) as Bit).collect());
        }
        Ok(Rm1Code { order, generator })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Message length `m + 1`.
    pub fn k(&self) -> usize {
        self.order + 1
    }

    /// Code length `2^m`.
    pub fn n(&self) -> usize {
        1 << self.order
    }

    pub fn min_distance(&self) -> usize {
        1 << (self.order - 1)
    }

    /// Rows `(1, v_m, ..., v_1)`.
    pub fn generator(&self) -> &[Vec<Bit>] {
        &self.generator
    }

    /// Encodes `msg = (m0, m_m, ..., m_1)` as `msg * G` over GF(2).
    pub fn encode(&self, msg: &[Bit]) -> Result<CodewordBits> {
        if msg.len() != self.k() {
            return Err(Error::length("RM(1, m) message", self.k(), msg.len()));
        }
        check_bits(msg)?;
        let mut bits = vec![0; self.n()];
        for (row, &m) in self.generator.iter().zip(msg) {
            if m == 1 {
                bits.iter_mut().zip(row).for_each(|(b, &g)| *b ^= g);
            }
        }
        Ok(CodewordBits::new(bits))
    }

    /// Encodes a message packed as an integer: bit 0 is `m0`, bit `r` of the
    /// higher part is `m_r`. This is the `(sign, index)` layout used by the
    /// Hadamard decoder, where index `i` carries `m_1` in its LSB.
    pub fn encode_packed(&self, m0: bool, index: usize) -> CodewordBits {
        let bits = (0..self.n())
            .map(|j| (((index & j).count_ones() & 1) as Bit) ^ m0 as Bit)
            .collect();
        CodewordBits::new(bits)
    }

    /// All `2^(m+1)` codewords, enumerated by message value with `m0` as the
    /// most significant message bit.
    pub fn codebook(&self) -> Result<Vec<CodewordBits>> {
        if self.order > MAX_CODEBOOK_ORDER {
            return Err(Error::InvalidParameter(format!(
                "codebook enumeration limited to m <= {MAX_CODEBOOK_ORDER}, got {}",
                self.order
            )));
        }
        let k = self.k();
        (0..1usize << k)
            .map(|v| {
                let msg: Vec<Bit> = (0..k).map(|t| ((v >> (k - 1 - t)) & 1) as Bit).collect();
                self.encode(&msg)
            })
            .collect()
    }
}

/// The 3GPP C(32, K) code, defined by 32 basis rows of K bits each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GppRmCode {
    k: usize,
    basis: Vec<Vec<Bit>>,
}

impl GppRmCode {
    pub fn from_basis(basis: Vec<Vec<Bit>>) -> Result<Self> {
        if basis.len() != GPP_CODE_LENGTH {
            return Err(Error::InvalidParameter(format!(
                "basis must have {GPP_CODE_LENGTH} rows, got {}",
                basis.len()
            )));
        }
        let k = basis[0].len();
        if !GPP_K_RANGE.contains(&k) {
            return Err(Error::InvalidParameter(format!(
                "C(32, K) requires K in 3..=11, got {k}"
            )));
        }
        for (i, row) in basis.iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidParameter(format!(
                    "basis row {i} has {} columns, expected {k}",
                    row.len()
                )));
            }
            check_bits(row)?;
        }
        Ok(GppRmCode { k, basis })
    }

    /// The tabulated basis shipped with the crate, restricted to the first `k`
    /// columns.
    pub fn standard(k: usize) -> Result<Self> {
        if !GPP_K_RANGE.contains(&k) {
            return Err(Error::InvalidParameter(format!(
                "C(32, K) requires K in 3..=11, got {k}"
            )));
        }
        let full = parse_basis(STANDARD_BASIS, 11, Path::new("<embedded>"))?;
        Self::from_basis(full.into_iter().map(|r| r[..k].to_vec()).collect())
    }

    /// Loads a basis asset holding exactly `k` digits per line.
    pub fn load(path: impl AsRef<Path>, k: usize) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::DataAsset {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
        Self::parse(&text, k, path)
    }

    pub fn parse(text: &str, k: usize, origin: &Path) -> Result<Self> {
        if !GPP_K_RANGE.contains(&k) {
            return Err(Error::InvalidParameter(format!(
                "C(32, K) requires K in 3..=11, got {k}"
            )));
        }
        Self::from_basis(parse_basis(text, k, origin)?)
    }

    /// Serializes the basis in the asset format (one row per line).
    pub fn to_asset_string(&self) -> String {
        let mut out = String::with_capacity(GPP_CODE_LENGTH * (self.k + 1));
        for row in &self.basis {
            for &b in row {
                out.push(if b == 1 { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_asset_string())?;
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        GPP_CODE_LENGTH
    }

    pub fn basis(&self) -> &[Vec<Bit>] {
        &self.basis
    }

    /// `c_i = XOR_j (a_j AND M(i, j))`.
    pub fn encode(&self, msg: &[Bit]) -> Result<CodewordBits> {
        if msg.len() != self.k {
            return Err(Error::length("C(32, K) message", self.k, msg.len()));
        }
        check_bits(msg)?;
        let bits = self
            .basis
            .iter()
            .map(|row| row.iter().zip(msg).fold(0, |acc, (&m, &a)| acc ^ (m & a)))
            .collect();
        Ok(CodewordBits::new(bits))
    }

    /// Codewords indexed by message index, where message bit `a_j` is bit `j`
    /// of the index.
    pub fn codebook(&self) -> Vec<CodewordBits> {
        (0..1usize << self.k)
            .map(|idx| {
                let msg = index_to_bits(idx, self.k);
                self.encode(&msg).expect("message length matches k")
            })
            .collect()
    }
}

/// LSB-first expansion of a message index: element `j` is bit `j` of `idx`.
pub fn index_to_bits(idx: usize, k: usize) -> Vec<Bit> {
    (0..k).map(|j| ((idx >> j) & 1) as Bit).collect()
}

fn parse_basis(text: &str, k: usize, origin: &Path) -> Result<Vec<Vec<Bit>>> {
    let asset_err = |detail: String| Error::DataAsset {
        path: origin.to_path_buf(),
        detail,
    };
    let body = text.strip_suffix('\n').unwrap_or(text);
    let lines: Vec<&str> = if body.is_empty() {
        Vec::new()
    } else {
        body.split('\n').collect()
    };
    if lines.len() != GPP_CODE_LENGTH {
        return Err(asset_err(format!(
            "expected {GPP_CODE_LENGTH} rows, found {}",
            lines.len()
        )));
    }
    let mut rows = Vec::with_capacity(GPP_CODE_LENGTH);
    for (i, line) in lines.iter().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.chars().count() != k {
            return Err(asset_err(format!(
                "row {i}: expected {k} columns, found {}",
                line.chars().count()
            )));
        }
        let row = line
            .chars()
            .enumerate()
            .map(|(j, c)| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(asset_err(format!(
                    "row {i}, column {j}: invalid digit {other:?}"
                ))),
            })
            .collect::<Result<Vec<Bit>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Minimum pairwise Hamming distance, by exhaustive comparison.
pub fn min_distance(codebook: &[CodewordBits]) -> Result<usize> {
    if codebook.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "minimum distance needs at least 2 codewords, got {}",
            codebook.len()
        )));
    }
    let n = codebook[0].len();
    if let Some(bad) = codebook.iter().find(|c| c.len() != n) {
        return Err(Error::length("codebook entry", n, bad.len()));
    }
    // Pack into 64-bit words so the pairwise scan stays cheap for 2^11 entries.
    let words = n.div_ceil(64);
    let packed: Vec<Vec<u64>> = codebook
        .iter()
        .map(|c| {
            let mut w = vec![0u64; words];
            for (i, &b) in c.bits.iter().enumerate() {
                w[i / 64] |= u64::from(b) << (i % 64);
            }
            w
        })
        .collect();
    let mut best = usize::MAX;
    for (a, pa) in packed.iter().enumerate() {
        for pb in &packed[a + 1..] {
            let d: u32 = pa.iter().zip(pb).map(|(x, y)| (x ^ y).count_ones()).sum();
            best = best.min(d as usize);
        }
    }
    Ok(best)
}

/// Renders bits as a `0`/`1` string.
pub fn bits_to_string(bits: &[Bit]) -> String {
    let mut s = String::with_capacity(bits.len());
    for &b in bits {
        let _ = write!(s, "{b}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn bits(s: &str) -> Vec<Bit> {
        s.bytes().map(|c| c - b'0').collect()
    }

    #[test]
    fn smallest_generator() {
        let code = Rm1Code::new(1).unwrap();
        assert_eq!(code.generator(), &[vec![1, 1], vec![0, 1]]);
    }

    #[test]
    fn rm14_monomial_rows() {
        let code = Rm1Code::new(4).unwrap();
        assert_eq!(code.generator().len(), 5);
        assert_eq!(code.generator()[4], bits("0101010101010101"));
        assert_eq!(code.generator()[1], bits("0000000011111111"));
        // Column j of (v4 v3 v2 v1) is j in binary, as in the monomial table.
        for j in 0..16 {
            let col: Vec<Bit> = (1..=4).map(|r| code.generator()[r][j]).collect();
            assert_eq!(col, bits(&format!("{j:04b}")));
        }
    }

    #[test]
    fn rm15_dimensions() {
        let code = Rm1Code::new(5).unwrap();
        assert_eq!((code.k(), code.n()), (6, 32));
    }

    #[test]
    fn order_out_of_range() {
        assert!(matches!(Rm1Code::new(0), Err(Error::InvalidParameter(_))));
        assert!(matches!(Rm1Code::new(16), Err(Error::InvalidParameter(_))));
        assert!(Rm1Code::new(15).is_ok());
    }

    #[test]
    fn encode_examples() {
        let code = Rm1Code::new(4).unwrap();
        assert_eq!(code.encode(&[0; 5]).unwrap().bits, vec![0; 16]);
        assert_eq!(code.encode(&[1, 0, 0, 0, 0]).unwrap().bits, vec![1; 16]);
        assert_eq!(
            code.encode(&[0, 0, 0, 0, 1]).unwrap().bits,
            bits("0101010101010101")
        );
        assert!(matches!(
            code.encode(&[0; 4]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(code.encode(&[0, 0, 2, 0, 0]).is_err());
    }

    #[test]
    fn encode_matches_bitwise_formula() {
        // bit j = m0 ^ XOR_r (m_r & bit_{r-1}(j)), with msg = (m0, m_m, .., m_1)
        for m in 1..=6usize {
            let code = Rm1Code::new(m).unwrap();
            for v in 0..1usize << (m + 1) {
                let msg: Vec<Bit> = (0..=m).map(|t| ((v >> t) & 1) as Bit).collect();
                let expect: Vec<Bit> = (0..1usize << m)
                    .map(|j| {
                        let mut b = msg[0];
                        for r in 1..=m {
                            b ^= msg[m + 1 - r] & ((j >> (r - 1)) & 1) as Bit;
                        }
                        b
                    })
                    .collect();
                assert_eq!(code.encode(&msg).unwrap().bits, expect, "m={m} v={v}");
            }
        }
    }

    #[test]
    fn packed_encoding_agrees() {
        let code = Rm1Code::new(5).unwrap();
        for index in 0..32usize {
            for m0 in [false, true] {
                let mut msg = vec![m0 as Bit];
                msg.extend((1..=5).rev().map(|r| ((index >> (r - 1)) & 1) as Bit));
                assert_eq!(code.encode(&msg).unwrap(), code.encode_packed(m0, index));
            }
        }
    }

    #[test]
    fn codebook_rm14() {
        let book = Rm1Code::new(4).unwrap().codebook().unwrap();
        assert_eq!(book.len(), 32);
        let set: HashSet<_> = book.iter().map(|c| c.bits.clone()).collect();
        assert_eq!(set.len(), 32);
        assert!(set.contains(&vec![0; 16]));
        for c in &book {
            let comp: Vec<Bit> = c.bits.iter().map(|b| b ^ 1).collect();
            assert!(set.contains(&comp));
        }
        assert_eq!(min_distance(&book).unwrap(), 8);
    }

    #[test]
    fn codebook_guard() {
        assert!(Rm1Code::new(11).unwrap().codebook().is_err());
    }

    #[test]
    fn weight_spectrum() {
        for m in 1..=6usize {
            let book = Rm1Code::new(m).unwrap().codebook().unwrap();
            let n = 1usize << m;
            let mut counts = std::collections::BTreeMap::new();
            for c in &book {
                *counts.entry(c.weight()).or_insert(0usize) += 1;
            }
            if m == 1 {
                // weight 1 == 2^(m-1): four words, two of them of weight 1
                assert_eq!(counts[&0], 1);
                assert_eq!(counts[&1], 2);
                assert_eq!(counts[&2], 1);
            } else {
                assert_eq!(counts.len(), 3, "m={m}");
                assert_eq!(counts[&0], 1);
                assert_eq!(counts[&(n / 2)], (1 << (m + 1)) - 2);
                assert_eq!(counts[&n], 1);
            }
        }
    }

    #[test]
    fn min_distance_small_cases() {
        let book = vec![
            CodewordBits::new(bits("000")),
            CodewordBits::new(bits("011")),
        ];
        assert_eq!(min_distance(&book).unwrap(), 2);
        assert!(min_distance(&book[..1]).is_err());
        assert!(min_distance(&[]).is_err());
        let uneven = vec![
            CodewordBits::new(bits("00")),
            CodewordBits::new(bits("011")),
        ];
        assert!(matches!(
            min_distance(&uneven),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn rm15_min_distance() {
        let book = Rm1Code::new(5).unwrap().codebook().unwrap();
        assert_eq!(book.len(), 64);
        assert_eq!(min_distance(&book).unwrap(), 16);
    }

    #[test]
    fn gpp_zero_and_unit_messages() {
        let code = GppRmCode::standard(11).unwrap();
        assert_eq!(code.encode(&[0; 11]).unwrap().bits, vec![0; 32]);
        for j in 0..11 {
            let mut msg = vec![0; 11];
            msg[j] = 1;
            let col: Vec<Bit> = code.basis().iter().map(|r| r[j]).collect();
            assert_eq!(code.encode(&msg).unwrap().bits, col);
        }
        assert!(code.encode(&[0; 10]).is_err());
    }

    #[test]
    fn gpp_standard_prefixes() {
        let full = GppRmCode::standard(11).unwrap();
        let five = GppRmCode::standard(5).unwrap();
        for (a, b) in full.basis().iter().zip(five.basis()) {
            assert_eq!(&a[..5], &b[..]);
        }
        assert!(GppRmCode::standard(2).is_err());
        assert!(GppRmCode::standard(12).is_err());
    }

    #[test]
    fn gpp_min_distance_full_code() {
        // Independent route: for a linear code d_min is the minimum nonzero
        // weight. Computed offline by exhaustive enumeration as 10.
        let code = GppRmCode::standard(11).unwrap();
        let book = code.codebook();
        let min_weight = book[1..].iter().map(CodewordBits::weight).min().unwrap();
        assert_eq!(min_weight, 10);
        assert_eq!(min_distance(&book).unwrap(), 10);
    }

    #[test]
    fn asset_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("basis.txt");
        let code = GppRmCode::standard(11).unwrap();
        code.save(&path).unwrap();
        let loaded = GppRmCode::load(&path, 11).unwrap();
        assert_eq!(loaded, code);
        assert_eq!(loaded.k(), 11);
    }

    #[test]
    fn asset_dimension_errors() {
        let good = GppRmCode::standard(11).unwrap().to_asset_string();
        let origin = Path::new("test");
        let short: String = good.lines().take(31).map(|l| format!("{l}\n")).collect();
        let err = GppRmCode::parse(&short, 11, origin).unwrap_err();
        assert!(matches!(err, Error::DataAsset { .. }));
        assert!(err.to_string().contains("32 rows"));

        let err = GppRmCode::parse(&good, 10, origin).unwrap_err();
        assert!(err.to_string().contains("row 0"), "{err}");

        let bad = good.replacen('1', "x", 1);
        let err = GppRmCode::parse(&bad, 11, origin).unwrap_err();
        assert!(err.to_string().contains("row 0, column 0"), "{err}");

        // trailing newline is optional
        assert!(GppRmCode::parse(good.trim_end(), 11, origin).is_ok());
        assert!(GppRmCode::load("/nonexistent/basis.txt", 11).is_err());
    }
}
