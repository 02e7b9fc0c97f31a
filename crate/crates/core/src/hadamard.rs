//! Hadamard transforms for correlation decoding of RM(1, m).
//!
//! Everything uses the natural (Sylvester) ordering, `H[i][j] = (-1)^popcount(i & j)`.
//! Correlations are computed for a row vector, `delta = u * H`. The fast
//! transform factors `H_{2^m} = W(1) W(2) ... W(m)` with
//! `W(i) = I_{2^(m-i)} (x) H_2 (x) I_{2^(i-1)}`, so stage `i` combines entries
//! at stride `2^(i-1)` and stage 1 runs first.

use crate::{Error, Result};

/// Largest order for which [`sylvester`] builds a dense matrix.
pub const MAX_DENSE_ORDER: usize = 14;
/// Largest order accepted by [`stage_matrix`].
pub const MAX_STAGE_ORDER: usize = 6;

/// A dense square integer matrix, used for the Hadamard matrix, its stage
/// factors and the identities checked against them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    n: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn zeros(n: usize) -> Self {
        IntMatrix {
            n,
            data: vec![0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> i64) -> Self {
        let data = (0..n * n).map(|x| f(x / n, x % n)).collect();
        IntMatrix { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> i64 {
        self.data[row * self.n + col]
    }

    pub fn row(&self, row: usize) -> &[i64] {
        &self.data[row * self.n..(row + 1) * self.n]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |r, c| self.get(c, r))
    }

    pub fn mul(&self, rhs: &IntMatrix) -> IntMatrix {
        assert_eq!(self.n, rhs.n, "matrix dimensions differ");
        let n = self.n;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                if a == 0 {
                    continue;
                }
                for c in 0..n {
                    out.data[r * n + c] += a * rhs.data[k * n + c];
                }
            }
        }
        out
    }

    pub fn kron(&self, rhs: &IntMatrix) -> IntMatrix {
        let (a, b) = (self.n, rhs.n);
        Self::from_fn(a * b, |r, c| self.get(r / b, c / b) * rhs.get(r % b, c % b))
    }

    pub fn scaled(&self, s: i64) -> IntMatrix {
        IntMatrix {
            n: self.n,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }
}

/// A Sylvester-type Hadamard matrix of order `2^m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HadamardMatrix {
    order: usize,
    entries: Vec<i8>,
}

impl HadamardMatrix {
    /// `m`, where the matrix is `2^m x 2^m`.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn size(&self) -> usize {
        1 << self.order
    }

    pub fn get(&self, row: usize, col: usize) -> i8 {
        self.entries[row * self.size() + col]
    }

    pub fn row(&self, row: usize) -> &[i8] {
        let n = self.size();
        &self.entries[row * n..(row + 1) * n]
    }

    pub fn to_int_matrix(&self) -> IntMatrix {
        IntMatrix::from_fn(self.size(), |r, c| i64::from(self.get(r, c)))
    }
}

/// Builds `H_{2^m}` by the recursion `[[H, H], [H, -H]]`.
pub fn sylvester(m: usize) -> Result<HadamardMatrix> {
    if m > MAX_DENSE_ORDER {
        return Err(Error::InvalidParameter(format!(
            "dense Hadamard matrix limited to m <= {MAX_DENSE_ORDER}, got {m}"
        )));
    }
    let mut entries = vec![1i8];
    let mut n = 1usize;
    for _ in 0..m {
        let next = 2 * n;
        let mut grown = vec![0i8; next * next];
        for r in 0..n {
            let src = &entries[r * n..(r + 1) * n];
            let top = r * next;
            let bottom = (r + n) * next;
            grown[top..top + n].copy_from_slice(src);
            grown[top + n..top + next].copy_from_slice(src);
            grown[bottom..bottom + n].copy_from_slice(src);
            for (d, &s) in grown[bottom + n..bottom + next].iter_mut().zip(src) {
                *d = -s;
            }
        }
        entries = grown;
        n = next;
    }
    Ok(HadamardMatrix { order: m, entries })
}

/// Soft or bipolar received values `U` fed to a correlation decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftVector(Vec<f64>);

impl SoftVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "soft value {i} is not finite"
            )));
        }
        Ok(SoftVector(values))
    }

    pub fn zeros(len: usize) -> Self {
        SoftVector(vec![0.0; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl AsRef<[f64]> for SoftVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Correlations `delta_i` of the input with every row of `H`, plus the number
/// of additions/subtractions spent computing them.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSpectrum {
    pub values: Vec<f64>,
    pub op_count: u64,
}

/// One factor `W(i) = I_{2^(m-i)} (x) H_2 (x) I_{2^(i-1)}` of the fast transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ButterflyStage {
    m: usize,
    i: usize,
}

impl ButterflyStage {
    pub fn new(m: usize, i: usize) -> Result<Self> {
        if i == 0 || i > m {
            return Err(Error::InvalidParameter(format!(
                "stage index must be in 1..={m}, got {i}"
            )));
        }
        Ok(ButterflyStage { m, i })
    }

    pub fn stride(&self) -> usize {
        1 << (self.i - 1)
    }

    /// Applies `v <- v * W(i)` in place, returning the add/sub count.
    pub fn apply(&self, v: &mut [f64]) -> u64 {
        debug_assert_eq!(v.len(), 1 << self.m);
        let half = self.stride();
        for block in v.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        1 << self.m
    }

    pub fn matrix(&self) -> IntMatrix {
        let h2 = IntMatrix::from_fn(2, |r, c| if r == 1 && c == 1 { -1 } else { 1 });
        IntMatrix::identity(1 << (self.m - self.i))
            .kron(&h2)
            .kron(&IntMatrix::identity(self.stride()))
    }
}

fn check_len(u: &[f64], m: usize) -> Result<()> {
    if m >= usize::BITS as usize || u.len() != 1 << m {
        return Err(Error::length(
            "Hadamard input",
            1usize << m.min(62),
            u.len(),
        ));
    }
    Ok(())
}

/// Dense correlation `delta = u * H_{2^m}`, `2^m` operations per output entry.
pub fn ht_correlate(u: &[f64], m: usize) -> Result<CorrelationSpectrum> {
    check_len(u, m)?;
    let n = u.len();
    let mut values = vec![0.0; n];
    let mut op_count = 0u64;
    for (i, out) in values.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, &x) in u.iter().enumerate() {
            if (i & j).count_ones() & 1 == 0 {
                acc += x;
            } else {
                acc -= x;
            }
        }
        op_count += n as u64;
        *out = acc;
    }
    Ok(CorrelationSpectrum { values, op_count })
}

/// In-place fast Hadamard transform; returns the add/sub count `m * 2^m`.
pub fn fht_in_place(v: &mut [f64]) -> Result<u64> {
    if !v.len().is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "FHT length must be a power of two, got {}",
            v.len()
        )));
    }
    let m = v.len().trailing_zeros() as usize;
    let mut ops = 0;
    for i in 1..=m {
        ops += ButterflyStage { m, i }.apply(v);
    }
    Ok(ops)
}

/// Fast transform `delta = u * W(1) ... W(m)`.
pub fn fht(u: &[f64], m: usize) -> Result<CorrelationSpectrum> {
    check_len(u, m)?;
    let mut values = u.to_vec();
    let op_count = fht_in_place(&mut values)?;
    Ok(CorrelationSpectrum { values, op_count })
}

/// Dense stage factor `W(i)` for test-sized transforms.
pub fn stage_matrix(m: usize, i: usize) -> Result<IntMatrix> {
    if m == 0 || m > MAX_STAGE_ORDER {
        return Err(Error::InvalidParameter(format!(
            "stage matrices limited to 1 <= m <= {MAX_STAGE_ORDER}, got {m}"
        )));
    }
    Ok(ButterflyStage::new(m, i)?.matrix())
}

/// Position, sign and magnitude of the largest-magnitude correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub index: usize,
    /// `+1` or `-1`; a zero peak counts as `+1`.
    pub sign: i8,
    pub magnitude: f64,
}

/// Largest `|delta_i|`, lowest index on ties.
pub fn argmax_abs(values: &[f64]) -> Peak {
    let mut best = Peak {
        index: 0,
        sign: 1,
        magnitude: f64::NEG_INFINITY,
    };
    for (i, &v) in values.iter().enumerate() {
        if v.abs() > best.magnitude {
            best = Peak {
                index: i,
                sign: if v < 0.0 { -1 } else { 1 },
                magnitude: v.abs(),
            };
        }
    }
    if values.is_empty() {
        best.magnitude = 0.0;
    }
    best
}
