//! Normalized associated Legendre polynomials evaluated at Gaussian
//! latitudes.
//!
//! Normalization: `sum_k w_k Pbar_n^m(x_k) Pbar_{n'}^m(x_k) = delta_{nn'}`
//! under the `sum w = 2` quadrature convention, i.e. the continuous
//! `integral Pbar^2 dx = 1`. This choice makes the direct/inverse
//! spherical-harmonics pair an exact discrete inverse. The Condon-Shortley
//! phase is omitted (it cancels in round trips).
//!
//! Values are produced by the normalized three-term recurrence in `n` for
//! fixed `m`, seeded by the closed-form sectoral value, so no overflow can
//! occur at any desk-scale truncation.

use crate::grids::GaussianGrid;
use rayon::prelude::*;

/// Table of `Pbar_n^m(x_k)` for `m in 0..=N`, `n in m..=N`, `k in 0..K`.
#[derive(Debug, Clone)]
pub struct LegendreTable {
    pub truncation_n: usize,
    pub nlat: usize,
    /// per order `m`: values laid out `[(n - m) * nlat + k]`
    values: Vec<Vec<f64>>,
}

impl LegendreTable {
    pub fn value(&self, n: usize, m: usize, k: usize) -> f64 {
        self.values[m][(n - m) * self.nlat + k]
    }

    /// Row of values over all latitudes for one `(n, m)`.
    pub fn row(&self, n: usize, m: usize) -> &[f64] {
        let k = self.nlat;
        &self.values[m][(n - m) * k..(n - m + 1) * k]
    }
}

/// Column of `Pbar_n^m(x)` for fixed `m`, `n = m..=nmax`, at a single `x`.
fn column_at(nmax: usize, m: usize, x: f64) -> Vec<f64> {
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut out = Vec::with_capacity(nmax + 1 - m);
    // sectoral seed Pbar_m^m
    let mut pmm = std::f64::consts::FRAC_1_SQRT_2;
    for j in 1..=m {
        pmm *= ((2 * j + 1) as f64 / (2 * j) as f64).sqrt() * s;
    }
    out.push(pmm);
    if nmax == m {
        return out;
    }
    let mut pm2 = pmm;
    let mut pm1 = x * ((2 * m + 3) as f64).sqrt() * pmm;
    out.push(pm1);
    for n in m + 2..=nmax {
        let nf = n as f64;
        let mf = m as f64;
        let a = ((4.0 * nf * nf - 1.0) / (nf * nf - mf * mf)).sqrt();
        let b = (((nf - 1.0) * (nf - 1.0) - mf * mf) / (4.0 * (nf - 1.0) * (nf - 1.0) - 1.0))
            .sqrt();
        let p = a * (x * pm1 - b * pm2);
        out.push(p);
        pm2 = pm1;
        pm1 = p;
    }
    out
}

/// Single-point evaluation of `Pbar_n^m(x)`.
pub fn normalized_assoc_legendre(n: usize, m: usize, x: f64) -> f64 {
    assert!(m <= n);
    *column_at(n, m, x).last().unwrap()
}

/// Build the full table for the grid's truncation at its latitudes.
///
/// Orders are independent, so the build parallelizes over `m`; the result
/// does not depend on the thread count.
pub fn build_legendre_table(grid: &GaussianGrid) -> LegendreTable {
    let n = grid.truncation_n;
    let k = grid.nlat;
    let values: Vec<Vec<f64>> = (0..=n)
        .into_par_iter()
        .map(|m| {
            let mut block = vec![0.0; (n + 1 - m) * k];
            for (ki, &x) in grid.latitudes.iter().enumerate() {
                let col = column_at(n, m, x);
                for (ni, v) in col.into_iter().enumerate() {
                    block[ni * k + ki] = v;
                }
            }
            block
        })
        .collect();
    LegendreTable {
        truncation_n: n,
        nlat: k,
        values,
    }
}
