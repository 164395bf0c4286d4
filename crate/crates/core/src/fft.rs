//! Mixed-radix (2, 3, 5) Fourier transforms.
//!
//! The direct transform maps gridpoint values to harmonic amplitudes
//!
//! ```text
//! a_k =  (1/n) sum_j psi_j cos(2 pi j k / n)
//! b_k = -(1/n) sum_j psi_j sin(2 pi j k / n)
//! ```
//!
//! and the inverse reconstructs `psi_j = sum_k c_k exp(2 pi i j k / n)` with
//! `c_k = a_k + i b_k` for `k < n/2` and `c_k = a_{n-k} - i b_{n-k}` above.
//! Only the half spectrum `k <= n/2` is stored; the mirror rule supplies the
//! rest.
//!
//! The transform length must factor as `2^a 3^b 5^c`. The recursion is
//! realized iteratively (self-sorting decimation in time) with twiddle
//! tables precomputed per length and cached, so the floating-point
//! evaluation order is fixed and repeated calls are bit-identical.

use crate::error::{DwarfError, Result};
use num_complex::Complex64;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Half-spectrum amplitudes of a real signal of length `n`.
///
/// `a` and `b` hold the cosine and sine amplitudes for `k = 0..=n/2`.
/// `b[0] = 0` always, and `b[n/2] = 0` for even `n` (Hermitian symmetry of a
/// real signal).
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCoeffs {
    pub n: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl FourierCoeffs {
    /// All-zero spectrum for length `n`.
    pub fn zeros(n: usize) -> Self {
        let len = n / 2 + 1;
        Self {
            n,
            a: vec![0.0; len],
            b: vec![0.0; len],
        }
    }

    /// Spectral energy `sum_k |c_k|^2` over the full (mirrored) spectrum.
    pub fn energy(&self) -> f64 {
        let n = self.n;
        let mut e = self.a[0] * self.a[0] + self.b[0] * self.b[0];
        for k in 1..self.a.len() {
            let m = self.a[k] * self.a[k] + self.b[k] * self.b[k];
            // interior modes appear twice in the full spectrum
            if 2 * k == n {
                e += m;
            } else {
                e += 2.0 * m;
            }
        }
        e
    }
}

struct Stage {
    radix: usize,
    /// span of already-combined sub-transforms before this stage
    len_before: usize,
    /// twiddles `w^(p*k1)` for `p = 1..radix`, `k1 = 0..len_before`,
    /// laid out `[k1 * (radix-1) + (p-1)]`, for the forward sign.
    forward: Vec<Complex64>,
    /// exact conjugates of `forward`
    inverse: Vec<Complex64>,
}

/// Precomputed transform plan for one length, shareable across threads.
pub struct FftPlan {
    n: usize,
    stages: Vec<Stage>,
}

fn factorize_235(n: usize) -> Result<Vec<usize>> {
    let mut m = n;
    let mut factors = Vec::new();
    for p in [2usize, 3, 5] {
        while m.is_multiple_of(p) {
            factors.push(p);
            m /= p;
        }
    }
    if m != 1 {
        return Err(DwarfError::Contract(format!(
            "transform length {n} contains factor {m}, not in {{2,3,5}}"
        )));
    }
    Ok(factors)
}

impl FftPlan {
    fn new(n: usize) -> Result<Self> {
        let factors = factorize_235(n)?;
        let mut stages = Vec::with_capacity(factors.len());
        let mut len_before = 1usize;
        for &radix in &factors {
            let span = len_before * radix;
            let mut forward = Vec::with_capacity(len_before * (radix - 1));
            for k1 in 0..len_before {
                for p in 1..radix {
                    // exact integer angle reduction before the trig call
                    let idx = (p * k1) % span;
                    let angle = -2.0 * std::f64::consts::PI * idx as f64 / span as f64;
                    forward.push(Complex64::new(angle.cos(), angle.sin()));
                }
            }
            let inverse = forward.iter().map(|w| w.conj()).collect();
            stages.push(Stage {
                radix,
                len_before,
                forward,
                inverse,
            });
            len_before = span;
        }
        Ok(Self { n, stages })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Unnormalized forward transform `X_k = sum_j x_j e^(-2 pi i j k / n)`.
    pub fn forward(&self, data: &[Complex64]) -> Vec<Complex64> {
        self.run(data, true)
    }

    /// Unnormalized inverse transform `x_j = sum_k X_k e^(+2 pi i j k / n)`.
    pub fn inverse(&self, data: &[Complex64]) -> Vec<Complex64> {
        self.run(data, false)
    }

    fn run(&self, data: &[Complex64], forward: bool) -> Vec<Complex64> {
        assert_eq!(data.len(), self.n, "plan length mismatch");
        let n = self.n;
        let mut src = data.to_vec();
        let mut dst = vec![Complex64::new(0.0, 0.0); n];
        let sign = if forward { -1.0 } else { 1.0 };
        for stage in &self.stages {
            let r = stage.radix;
            let l = stage.len_before;
            let s_prev = n / l;
            let s_new = s_prev / r;
            let tw = if forward {
                &stage.forward
            } else {
                &stage.inverse
            };
            let mut t = [Complex64::new(0.0, 0.0); 5];
            for q in 0..s_new {
                for k1 in 0..l {
                    t[0] = src[q + s_prev * k1];
                    for p in 1..r {
                        let u = src[q + s_new * p + s_prev * k1];
                        t[p] = u * tw[k1 * (r - 1) + (p - 1)];
                    }
                    let base = q + s_new * k1;
                    let step = s_new * l;
                    butterfly(&t[..r], sign, |k2, v| dst[base + step * k2] = v);
                }
            }
            std::mem::swap(&mut src, &mut dst);
        }
        src
    }
}

/// Radix-r DFT of the twiddled inputs; `emit(k2, value)` stores output `k2`.
#[inline]
fn butterfly(t: &[Complex64], sign: f64, mut emit: impl FnMut(usize, Complex64)) {
    // multiply by i, scaled
    #[inline]
    fn muli(s: f64, z: Complex64) -> Complex64 {
        Complex64::new(-s * z.im, s * z.re)
    }
    match t.len() {
        1 => emit(0, t[0]),
        2 => {
            emit(0, t[0] + t[1]);
            emit(1, t[0] - t[1]);
        }
        3 => {
            const C: f64 = -0.5; // cos(2 pi / 3)
            let s = sign * (3.0f64.sqrt() / 2.0); // sign * sin(2 pi / 3)
            let z1 = t[1] + t[2];
            let z2 = t[1] - t[2];
            emit(0, t[0] + z1);
            emit(1, t[0] + z1 * C + muli(s, z2));
            emit(2, t[0] + z1 * C - muli(s, z2));
        }
        5 => {
            let c1 = (2.0 * std::f64::consts::PI / 5.0).cos();
            let c2 = (4.0 * std::f64::consts::PI / 5.0).cos();
            let s1 = sign * (2.0 * std::f64::consts::PI / 5.0).sin();
            let s2 = sign * (4.0 * std::f64::consts::PI / 5.0).sin();
            let z1 = t[1] + t[4];
            let z2 = t[1] - t[4];
            let z3 = t[2] + t[3];
            let z4 = t[2] - t[3];
            emit(0, t[0] + z1 + z3);
            let e1 = t[0] + z1 * c1 + z3 * c2;
            let o1 = muli(1.0, z2 * s1 + z4 * s2);
            emit(1, e1 + o1);
            emit(4, e1 - o1);
            let e2 = t[0] + z1 * c2 + z3 * c1;
            let o2 = muli(1.0, z2 * s2 - z4 * s1);
            emit(2, e2 + o2);
            emit(3, e2 - o2);
        }
        r => unreachable!("unsupported radix {r}"),
    }
}

/// Fetch (building on first use) the cached plan for length `n`.
pub fn plan(n: usize) -> Result<Arc<FftPlan>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<FftPlan>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    {
        let guard = cache.lock().unwrap();
        if let Some(p) = guard.get(&n) {
            return Ok(p.clone());
        }
    }
    let built = Arc::new(FftPlan::new(n)?);
    let mut guard = cache.lock().unwrap();
    Ok(guard.entry(n).or_insert(built).clone())
}

/// Direct transform of a real signal; `1/n`-normalized cosine/sine amplitudes.
pub fn dft_direct(psi: &[f64]) -> Result<FourierCoeffs> {
    let n = psi.len();
    if n == 0 {
        return Err(DwarfError::Contract("empty transform input".into()));
    }
    if n == 1 {
        return Ok(FourierCoeffs {
            n,
            a: vec![psi[0]],
            b: vec![0.0],
        });
    }
    let p = plan(n)?;
    let input: Vec<Complex64> = psi.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let spec = p.forward(&input);
    let half = n / 2 + 1;
    let scale = 1.0 / n as f64;
    let mut a = Vec::with_capacity(half);
    let mut b = Vec::with_capacity(half);
    for c in spec.iter().take(half) {
        a.push(c.re * scale);
        b.push(c.im * scale);
    }
    b[0] = 0.0;
    if n.is_multiple_of(2) {
        b[n / 2] = 0.0;
    }
    Ok(FourierCoeffs { n, a, b })
}

/// Inverse transform; reconstructs the real signal from the half spectrum.
pub fn dft_inverse(coeffs: &FourierCoeffs) -> Vec<f64> {
    let n = coeffs.n;
    if n == 1 {
        return vec![coeffs.a[0]];
    }
    let p = plan(n).expect("coeffs constructed with a valid length");
    let mut full = Vec::with_capacity(n);
    for k in 0..n {
        if k <= n / 2 {
            full.push(Complex64::new(coeffs.a[k], coeffs.b[k]));
        } else {
            // mirror rule: c_k = a_{n-k} - i b_{n-k}
            full.push(Complex64::new(coeffs.a[n - k], -coeffs.b[n - k]));
        }
    }
    p.inverse(&full).iter().map(|c| c.re).collect()
}
