//! Spherical-harmonics spectral transform on the Gaussian grid.
//!
//! The direct transform is an FFT in longitude followed by Gaussian
//! quadrature of the Legendre transform in latitude,
//! `psi_n^m = sum_k w_k psi_m(x_k) Pbar_n^m(x_k)`; the inverse is Legendre
//! synthesis per order followed by an inverse FFT per latitude. Triangular
//! truncation `N(m) = N` throughout. On reduced grids, Fourier modes beyond
//! a latitude's Nyquist are treated as zero.

use crate::error::{DwarfError, Result};
use crate::fft::{dft_direct, dft_inverse, FourierCoeffs};
use crate::grids::{Field3d, GaussianGrid};
use crate::legendre::LegendreTable;
use num_complex::Complex64;
use rayon::prelude::*;
use std::time::Instant;

/// Complex harmonic amplitudes under a triangular truncation.
///
/// Only `m >= 0` is stored; negative orders are implied conjugates.
/// Amplitudes at `m = 0` of a real field have zero imaginary part.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalCoeffs {
    pub truncation_n: usize,
    pub nlev: usize,
    /// level-major; within a level, order-major triangular layout
    data: Vec<Complex64>,
}

impl SphericalCoeffs {
    pub fn zeros(truncation_n: usize, nlev: usize) -> Self {
        let t = Self::per_level(truncation_n);
        Self {
            truncation_n,
            nlev,
            data: vec![Complex64::new(0.0, 0.0); t * nlev],
        }
    }

    fn per_level(n: usize) -> usize {
        (n + 1) * (n + 2) / 2
    }

    fn offset(&self, m: usize) -> usize {
        m * (self.truncation_n + 1) - m * (m.saturating_sub(1)) / 2
    }

    pub fn get(&self, lev: usize, n: usize, m: usize) -> Complex64 {
        let t = Self::per_level(self.truncation_n);
        self.data[lev * t + self.offset(m) + (n - m)]
    }

    pub fn set(&mut self, lev: usize, n: usize, m: usize, v: Complex64) {
        let t = Self::per_level(self.truncation_n);
        let off = self.offset(m);
        self.data[lev * t + off + (n - m)] = v;
    }

    /// Slice of amplitudes for one level and order: `n = m..=N`.
    pub fn order_slice(&self, lev: usize, m: usize) -> &[Complex64] {
        let t = Self::per_level(self.truncation_n);
        let off = lev * t + self.offset(m);
        &self.data[off..off + (self.truncation_n + 1 - m)]
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn raw(&self) -> &[Complex64] {
        &self.data
    }
}

fn check_support(grid: &GaussianGrid, n: usize) -> Result<()> {
    let need = (2 * n + 1).div_ceil(2);
    if grid.nlat < need {
        return Err(DwarfError::Contract(format!(
            "truncation N={n} needs at least {need} Gaussian latitudes, grid has {}",
            grid.nlat
        )));
    }
    Ok(())
}

/// Direct transform: gridpoint field to spectral amplitudes.
pub fn sht_direct(
    f: &Field3d,
    grid: &GaussianGrid,
    table: &LegendreTable,
) -> Result<SphericalCoeffs> {
    let n = table.truncation_n;
    check_support(grid, n)?;
    if f.points_per_level != grid.total_points() {
        return Err(DwarfError::Contract(
            "field does not live on the given grid".into(),
        ));
    }
    let mut out = SphericalCoeffs::zeros(n, f.nlev);
    for lev in 0..f.nlev {
        let field = f.level(lev);
        // FFT per latitude
        let rows: Vec<FourierCoeffs> = (0..grid.nlat)
            .into_par_iter()
            .map(|k| {
                let off = grid.row_offset(k);
                let nl = grid.nlon_per_lat[k];
                dft_direct(&field[off..off + nl]).expect("grid lengths are valid by construction")
            })
            .collect();
        // Legendre quadrature per order, fixed latitude order in the sum
        let coeffs: Vec<Vec<Complex64>> = (0..=n)
            .into_par_iter()
            .map(|m| {
                let mut col = vec![Complex64::new(0.0, 0.0); n + 1 - m];
                for k in 0..grid.nlat {
                    let row = &rows[k];
                    if m > row.n / 2 {
                        continue; // beyond this latitude's Nyquist
                    }
                    let psi_m = Complex64::new(row.a[m], row.b[m]);
                    let w = grid.weights[k];
                    for nn in m..=n {
                        col[nn - m] += psi_m * (w * table.value(nn, m, k));
                    }
                }
                col
            })
            .collect();
        for (m, col) in coeffs.into_iter().enumerate() {
            for (i, v) in col.into_iter().enumerate() {
                out.set(lev, m + i, m, v);
            }
        }
    }
    Ok(out)
}

/// Inverse transform: spectral amplitudes to gridpoint field.
pub fn sht_inverse(
    c: &SphericalCoeffs,
    grid: &GaussianGrid,
    table: &LegendreTable,
) -> Result<Field3d> {
    let n = c.truncation_n;
    if n > table.truncation_n {
        return Err(DwarfError::Contract(
            "coefficient truncation exceeds table truncation".into(),
        ));
    }
    check_support(grid, n)?;
    let mut f = Field3d::zeros(c.nlev, grid.total_points(), "synthesized");
    for lev in 0..c.nlev {
        let rows: Vec<Vec<f64>> = (0..grid.nlat)
            .into_par_iter()
            .map(|k| {
                let nl = grid.nlon_per_lat[k];
                let mut half = FourierCoeffs::zeros(nl);
                let mmax = n.min(nl / 2);
                for m in 0..=mmax {
                    let amps = c.order_slice(lev, m);
                    let mut s = Complex64::new(0.0, 0.0);
                    for (i, a) in amps.iter().enumerate() {
                        s += a * table.value(m + i, m, k);
                    }
                    half.a[m] = s.re;
                    half.b[m] = s.im;
                }
                half.b[0] = 0.0;
                if nl.is_multiple_of(2) {
                    half.b[nl / 2] = 0.0;
                }
                dft_inverse(&half)
            })
            .collect();
        let field = f.level_mut(lev);
        for (k, row) in rows.into_iter().enumerate() {
            let off = grid.row_offset(k);
            field[off..off + row.len()].copy_from_slice(&row);
        }
    }
    Ok(f)
}

/// One iteration row of the round-trip benchmark report.
#[derive(Debug, Clone)]
pub struct ShtBenchRow {
    pub iter: usize,
    pub seconds: f64,
    pub max_err: f64,
}

#[derive(Debug, Clone)]
pub struct ShtBenchReport {
    pub rows: Vec<ShtBenchRow>,
    pub max_err: f64,
    pub setup_seconds: f64,
}

/// Timed round-trip driver: repeats `inverse(direct(f))` on a fixed
/// band-limited field and tracks the running max Linf error against the
/// initial state.
///
/// `fields` transforms that many copies of the level set; fields beyond the
/// first are modulo copies of the generated levels.
pub fn sht_roundtrip_bench(
    n: usize,
    nlev: usize,
    iters: usize,
    fields: usize,
    seed: u64,
) -> Result<ShtBenchReport> {
    use rand::{Rng, SeedableRng};
    if iters < 1 {
        return Err(DwarfError::Contract("iters must be >= 1".into()));
    }
    let setup = Instant::now();
    let grid = crate::grids::make_gaussian_grid(n, crate::grids::GridKind::Linear, false)?;
    let table = crate::legendre::build_legendre_table(&grid);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let total_lev = nlev * fields.max(1);
    let mut coeffs = SphericalCoeffs::zeros(n, total_lev);
    for lev in 0..nlev {
        for m in 0..=n {
            for nn in m..=n {
                let re = rng.gen_range(-1.0..1.0);
                let im = if m == 0 { 0.0 } else { rng.gen_range(-1.0..1.0) };
                coeffs.set(lev, nn, m, Complex64::new(re, im));
            }
        }
    }
    for lev in nlev..total_lev {
        for m in 0..=n {
            for nn in m..=n {
                let src = coeffs.get(lev % nlev, nn, m);
                coeffs.set(lev, nn, m, src);
            }
        }
    }
    let f0 = sht_inverse(&coeffs, &grid, &table)?;
    let setup_seconds = setup.elapsed().as_secs_f64();

    let mut f = f0.clone();
    let mut rows = Vec::with_capacity(iters);
    let mut max_err = 0.0f64;
    for it in 1..=iters {
        let t0 = Instant::now();
        let spec = sht_direct(&f, &grid, &table)?;
        f = sht_inverse(&spec, &grid, &table)?;
        let seconds = t0.elapsed().as_secs_f64();
        let err = crate::grids::field_norms(&f, &f0)?.linf;
        max_err = max_err.max(err);
        rows.push(ShtBenchRow {
            iter: it,
            seconds,
            max_err,
        });
    }
    Ok(ShtBenchReport {
        rows,
        max_err,
        setup_seconds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids::{make_gaussian_grid, GridKind};
    use crate::legendre::build_legendre_table;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(n: usize) -> (GaussianGrid, LegendreTable) {
        let grid = make_gaussian_grid(n, GridKind::Linear, false).unwrap();
        let table = build_legendre_table(&grid);
        (grid, table)
    }

    fn random_coeffs(n: usize, nlev: usize, seed: u64) -> SphericalCoeffs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = SphericalCoeffs::zeros(n, nlev);
        for lev in 0..nlev {
            for m in 0..=n {
                for nn in m..=n {
                    let re = rng.gen_range(-1.0..1.0);
                    let im = if m == 0 { 0.0 } else { rng.gen_range(-1.0..1.0) };
                    c.set(lev, nn, m, Complex64::new(re, im));
                }
            }
        }
        c
    }

    #[test]
    fn constant_field_projects_to_scaled_dc() {
        let (grid, table) = setup(9);
        let mut f = Field3d::zeros(1, grid.total_points(), "c");
        for v in f.values.iter_mut() {
            *v = 3.0;
        }
        let c = sht_direct(&f, &grid, &table).unwrap();
        let want = 3.0 * 2.0f64.sqrt();
        assert!((c.get(0, 0, 0).re - want).abs() < 1e-12);
        assert!(c.get(0, 0, 0).im.abs() < 1e-13);
        for m in 0..=9usize {
            for n in m..=9usize {
                if (n, m) != (0, 0) {
                    assert!(c.get(0, n, m).norm() < 1e-12, "({n},{m}) leaked");
                }
            }
        }
    }

    #[test]
    fn zonal_p10_field_projects_to_single_mode() {
        let (grid, table) = setup(9);
        let mut f = Field3d::zeros(1, grid.total_points(), "p10");
        for k in 0..grid.nlat {
            let v = table.value(1, 0, k);
            let off = grid.row_offset(k);
            for j in 0..grid.nlon_per_lat[k] {
                f.values[off + j] = v;
            }
        }
        let c = sht_direct(&f, &grid, &table).unwrap();
        assert!((c.get(0, 1, 0).re - 1.0).abs() < 1e-11);
        for m in 0..=9usize {
            for n in m..=9usize {
                if (n, m) != (1, 0) {
                    assert!(c.get(0, n, m).norm() <= 1e-11);
                }
            }
        }
    }

    #[test]
    fn dc_coefficient_synthesizes_constant_one() {
        let (grid, table) = setup(7);
        let mut c = SphericalCoeffs::zeros(7, 1);
        c.set(0, 0, 0, Complex64::new(2.0f64.sqrt(), 0.0));
        let f = sht_inverse(&c, &grid, &table).unwrap();
        for v in &f.values {
            assert!((v - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn synthesize_then_analyze_recovers_coefficients() {
        let n = 21;
        let (grid, table) = setup(n);
        let c = random_coeffs(n, 1, 11);
        let f = sht_inverse(&c, &grid, &table).unwrap();
        let c2 = sht_direct(&f, &grid, &table).unwrap();
        assert!(c.max_abs_diff(&c2) < 1e-10, "diff {}", c.max_abs_diff(&c2));
    }

    #[test]
    fn round_trip_on_band_limited_fields_up_to_n42() {
        for n in [10usize, 21, 31, 42] {
            let (grid, table) = setup(n);
            let c = random_coeffs(n, 1, n as u64);
            let f = sht_inverse(&c, &grid, &table).unwrap();
            let back = sht_inverse(&sht_direct(&f, &grid, &table).unwrap(), &grid, &table).unwrap();
            let err = crate::grids::field_norms(&f, &back).unwrap().linf;
            assert!(err <= 1e-10, "N={n}: round-trip Linf {err}");
        }
    }

    #[test]
    fn reality_condition_m0_exactly_real() {
        let (grid, table) = setup(15);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut f = Field3d::zeros(1, grid.total_points(), "r");
        for v in f.values.iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        let c = sht_direct(&f, &grid, &table).unwrap();
        for n in 0..=15usize {
            assert!(c.get(0, n, 0).im.abs() < 1e-12);
        }
    }

    #[test]
    fn linearity_of_direct_transform() {
        let (grid, table) = setup(12);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut x = Field3d::zeros(1, grid.total_points(), "x");
        let mut y = Field3d::zeros(1, grid.total_points(), "y");
        for v in x.values.iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        for v in y.values.iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        let (alpha, beta) = (0.7, -2.2);
        let mut z = Field3d::zeros(1, grid.total_points(), "z");
        for i in 0..z.values.len() {
            z.values[i] = alpha * x.values[i] + beta * y.values[i];
        }
        let cx = sht_direct(&x, &grid, &table).unwrap();
        let cy = sht_direct(&y, &grid, &table).unwrap();
        let cz = sht_direct(&z, &grid, &table).unwrap();
        for m in 0..=12usize {
            for n in m..=12usize {
                let want = cx.get(0, n, m) * alpha + cy.get(0, n, m) * beta;
                assert!((cz.get(0, n, m) - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn repeated_transforms_bit_identical() {
        let (grid, table) = setup(21);
        let c = random_coeffs(21, 2, 8);
        let f = sht_inverse(&c, &grid, &table).unwrap();
        let a = sht_direct(&f, &grid, &table).unwrap();
        let b = sht_direct(&f, &grid, &table).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn truncation_beyond_grid_support_rejected() {
        let grid = make_gaussian_grid(10, GridKind::Linear, false).unwrap();
        let table = build_legendre_table(&grid); // N=10 table
        let big = make_gaussian_grid(20, GridKind::Linear, false).unwrap();
        let t20 = build_legendre_table(&big);
        let f = Field3d::zeros(1, grid.total_points(), "f");
        assert!(sht_direct(&f, &grid, &t20).is_err());
        let _ = table;
    }

    #[test]
    fn bench_error_behaviour() {
        let rep = sht_roundtrip_bench(21, 1, 3, 1, 17).unwrap();
        assert_eq!(rep.rows.len(), 3);
        let e1 = rep.rows[0].max_err;
        let e3 = rep.rows[2].max_err;
        assert!(e3 <= 10.0 * e1.max(1e-15), "e1={e1} e3={e3}");
        // single iteration equals a single round-trip error
        let one = sht_roundtrip_bench(21, 1, 1, 1, 17).unwrap();
        assert_eq!(one.rows.len(), 1);
        assert_eq!(one.rows[0].max_err.to_bits(), rep.rows[0].max_err.to_bits());
    }

    #[test]
    fn reduced_grid_round_trip_on_low_order_modes() {
        // content well below every latitude's Nyquist survives on a reduced grid
        let n = 10;
        let grid = make_gaussian_grid(n, GridKind::Linear, true).unwrap();
        let table = build_legendre_table(&grid);
        let mut c = SphericalCoeffs::zeros(n, 1);
        c.set(0, 2, 0, Complex64::new(0.9, 0.0));
        c.set(0, 3, 2, Complex64::new(0.4, -0.2));
        let f = sht_inverse(&c, &grid, &table).unwrap();
        let c2 = sht_direct(&f, &grid, &table).unwrap();
        assert!(c.max_abs_diff(&c2) < 1e-10);
    }
}
