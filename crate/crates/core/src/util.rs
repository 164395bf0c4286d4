//! Shared numeric utilities: deterministic reductions, FFT-length
//! factorization and bit-level checksums.

/// Pairwise (tree) summation over an index-ascending slice.
///
/// The recursion splits at the midpoint, so the evaluation order is a fixed
/// function of the slice length. All norm and dot-product reductions in the
/// crate go through this routine so results are bit-identical regardless of
/// thread count.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        3 => (values[0] + values[1]) + values[2],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Pairwise sum of `f(i)` for `i` in `0..n` without materializing the terms.
pub fn pairwise_sum_by<F: Fn(usize) -> f64 + Copy>(n: usize, f: F) -> f64 {
    fn go<F: Fn(usize) -> f64 + Copy>(lo: usize, hi: usize, f: F) -> f64 {
        match hi - lo {
            0 => 0.0,
            1 => f(lo),
            2 => f(lo) + f(lo + 1),
            3 => (f(lo) + f(lo + 1)) + f(lo + 2),
            n => {
                let mid = lo + n / 2;
                go(lo, mid, f) + go(mid, hi, f)
            }
        }
    }
    go(0, n, f)
}

/// Deterministic dot product with the same fixed reduction tree as
/// [`pairwise_sum`].
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    pairwise_sum_by(a.len(), |i| a[i] * b[i])
}

/// Euclidean norm built on the deterministic dot product.
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// True iff `n` factors as `2^a 3^b 5^c` with `n >= 1`.
pub fn is_235(n: usize) -> bool {
    if n == 0 {
        return false;
    }
    let mut m = n;
    for p in [2usize, 3, 5] {
        while m.is_multiple_of(p) {
            m /= p;
        }
    }
    m == 1
}

/// Smallest `m >= n` factorizable as `2^a 3^b 5^c`.
pub fn next_235(n: usize) -> usize {
    let mut m = n.max(1);
    while !is_235(m) {
        m += 1;
    }
    m
}

/// Smallest even `m >= n` factorizable as `2^a 3^b 5^c`.
///
/// Grid longitude counts are kept even so an across-pole shift by half a
/// revolution lands on a grid column.
pub fn next_even_235(n: usize) -> usize {
    let mut m = n.max(2);
    if m % 2 == 1 {
        m += 1;
    }
    while !(m.is_multiple_of(2) && is_235(m)) {
        m += 2;
    }
    m
}

/// Order-sensitive checksum over IEEE-754 bit patterns (FNV-1a).
///
/// Two runs produce the same checksum iff every value is bit-identical and
/// appears in the same order, which is exactly the reproducibility contract
/// the kernels promise.
#[derive(Debug, Clone)]
pub struct BitChecksum {
    state: u64,
}

impl BitChecksum {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;

    pub fn new() -> Self {
        Self {
            state: Self::OFFSET,
        }
    }

    pub fn push_f64(&mut self, v: f64) {
        for byte in v.to_bits().to_le_bytes() {
            self.state ^= u64::from(byte);
            self.state = self.state.wrapping_mul(Self::PRIME);
        }
    }

    pub fn push_u64(&mut self, v: u64) {
        for byte in v.to_le_bytes() {
            self.state ^= u64::from(byte);
            self.state = self.state.wrapping_mul(Self::PRIME);
        }
    }

    pub fn push_bytes(&mut self, bytes: &[u8]) {
        for &byte in bytes {
            self.state ^= u64::from(byte);
            self.state = self.state.wrapping_mul(Self::PRIME);
        }
    }

    pub fn push_slice(&mut self, values: &[f64]) {
        for &v in values {
            self.push_f64(v);
        }
    }

    pub fn finish(&self) -> u64 {
        self.state
    }
}

impl Default for BitChecksum {
    fn default() -> Self {
        Self::new()
    }
}
