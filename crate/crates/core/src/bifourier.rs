//! 2D Fourier transforms on a limited-area grid with elliptic truncation
//! and extension-zone periodicization.
//!
//! Transforms run consecutively in the zonal and meridional directions
//! using the mixed-radix module. The 2D spectrum is truncated elliptically:
//! amplitudes with `(kx/kmax_x)^2 + (ky/kmax_y)^2 > 1` are zero, which keeps
//! the minimum resolved wavelength isotropic (the diagonal corner mode is
//! removed while the axis modes at `kmax` survive).

use crate::error::{DwarfError, Result};
use crate::fft::{dft_direct, dft_inverse, plan, FourierCoeffs};
use crate::grids::LamGrid;
use num_complex::Complex64;
use rayon::prelude::*;
use std::time::Instant;

/// Complex amplitudes on the extended LAM domain, half-spectrum in x.
///
/// Layout: `coeffs[kx * nyt + ky]` for `kx in 0..=nxt/2`, `ky in 0..nyt`
/// (meridional wavenumbers above `nyt/2` represent negative `ky`).
#[derive(Debug, Clone, PartialEq)]
pub struct LamSpectral {
    pub nxt: usize,
    pub nyt: usize,
    pub kmax_x: usize,
    pub kmax_y: usize,
    pub coeffs: Vec<Complex64>,
}

impl LamSpectral {
    fn zeros(grid: &LamGrid) -> Self {
        let (nxt, nyt) = grid.extended();
        Self {
            nxt,
            nyt,
            kmax_x: grid.kmax_x,
            kmax_y: grid.kmax_y,
            coeffs: vec![Complex64::new(0.0, 0.0); (nxt / 2 + 1) * nyt],
        }
    }

    /// Signed meridional wavenumber for storage index `ky`.
    fn ky_signed(&self, ky: usize) -> i64 {
        if ky <= self.nyt / 2 {
            ky as i64
        } else {
            ky as i64 - self.nyt as i64
        }
    }

    /// True iff `(kx, ky)` lies inside the elliptic truncation.
    pub fn in_mask(&self, kx: usize, ky: usize) -> bool {
        let fx = kx as f64 / self.kmax_x as f64;
        let fy = self.ky_signed(ky) as f64 / self.kmax_y as f64;
        fx * fx + fy * fy <= 1.0
    }

    pub fn get(&self, kx: usize, ky: usize) -> Complex64 {
        self.coeffs[kx * self.nyt + ky]
    }

    /// L2 norm over the stored (masked) coefficients.
    pub fn norm(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn norm_diff(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// One-dimensional extension fill: cosine-weighted blend of the periodic
/// continuations from the two opposing seams.
///
/// `row` holds `n` interior values followed by `ext` slots to fill. The
/// continuation matching the right seam wraps the interior pattern forward
/// (`d[g mod n]`); the one matching the left seam of the wrapped copy leads
/// into `d[0]` (`d[n + g - ext]`). Interior values are never touched.
fn fill_gap(row: &mut [f64], n: usize, ext: usize) {
    debug_assert_eq!(row.len(), n + ext);
    for g in 0..ext {
        let t = (g + 1) as f64 / (ext + 1) as f64;
        let w = 0.5 * (1.0 + (std::f64::consts::PI * t).cos());
        let right = row[g % n];
        let left = row[(g as i64 - ext as i64).rem_euclid(n as i64) as usize];
        row[n + g] = left + w * (right - left);
    }
}

/// Periodicize an interior `nx x ny` field onto the extended domain.
///
/// Input and output are row-major with `ix` fastest. Interior values are
/// copied bit-exactly; extension slots are filled by the cosine blend, x
/// first, then y over the already-extended rows.
pub fn extend_periodic(interior: &[f64], grid: &LamGrid) -> Result<Vec<f64>> {
    let (nx, ny) = (grid.nx, grid.ny);
    let (ext_x, ext_y) = (grid.ext_x, grid.ext_y);
    if ext_x < 2 || ext_y < 2 {
        return Err(DwarfError::Contract(
            "extension widths must be at least 2".into(),
        ));
    }
    if interior.len() != nx * ny {
        return Err(DwarfError::Contract(format!(
            "interior field has {} values, expected {}",
            interior.len(),
            nx * ny
        )));
    }
    let (nxt, nyt) = grid.extended();
    let mut out = vec![0.0; nxt * nyt];
    let mut row = vec![0.0; nxt];
    for iy in 0..ny {
        row[..nx].copy_from_slice(&interior[iy * nx..(iy + 1) * nx]);
        fill_gap(&mut row, nx, ext_x);
        out[iy * nxt..(iy + 1) * nxt].copy_from_slice(&row);
    }
    let mut col = vec![0.0; nyt];
    for ix in 0..nxt {
        for iy in 0..ny {
            col[iy] = out[iy * nxt + ix];
        }
        fill_gap(&mut col, ny, ext_y);
        for iy in ny..nyt {
            out[iy * nxt + ix] = col[iy];
        }
    }
    Ok(out)
}

/// Direct 2D transform of an extended field, elliptic mask applied.
pub fn bifft_direct(extended: &[f64], grid: &LamGrid) -> Result<LamSpectral> {
    let (nxt, nyt) = grid.extended();
    if extended.len() != nxt * nyt {
        return Err(DwarfError::Contract(format!(
            "extended field has {} values, expected {}",
            extended.len(),
            nxt * nyt
        )));
    }
    // zonal direction first
    let rows: Vec<FourierCoeffs> = (0..nyt)
        .into_par_iter()
        .map(|iy| dft_direct(&extended[iy * nxt..(iy + 1) * nxt]).expect("validated length"))
        .collect();
    let mut spec = LamSpectral::zeros(grid);
    let yplan = plan(nyt)?;
    let half = nxt / 2 + 1;
    let columns: Vec<Vec<Complex64>> = (0..half)
        .into_par_iter()
        .map(|kx| {
            let col: Vec<Complex64> = (0..nyt)
                .map(|iy| Complex64::new(rows[iy].a[kx], rows[iy].b[kx]))
                .collect();
            let mut f = yplan.forward(&col);
            let scale = 1.0 / nyt as f64;
            for c in f.iter_mut() {
                *c *= scale;
            }
            f
        })
        .collect();
    for (kx, col) in columns.into_iter().enumerate() {
        for (ky, c) in col.into_iter().enumerate() {
            spec.coeffs[kx * nyt + ky] = if spec.in_mask(kx, ky) {
                c
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
    }
    Ok(spec)
}

/// Inverse 2D transform back to the extended gridpoint field.
pub fn bifft_inverse(spec: &LamSpectral) -> Result<Vec<f64>> {
    let (nxt, nyt) = (spec.nxt, spec.nyt);
    let yplan = plan(nyt)?;
    let half = nxt / 2 + 1;
    let columns: Vec<Vec<Complex64>> = (0..half)
        .into_par_iter()
        .map(|kx| yplan.inverse(&spec.coeffs[kx * nyt..(kx + 1) * nyt]))
        .collect();
    let rows: Vec<Vec<f64>> = (0..nyt)
        .into_par_iter()
        .map(|iy| {
            let mut hc = FourierCoeffs::zeros(nxt);
            for (kx, col) in columns.iter().enumerate() {
                hc.a[kx] = col[iy].re;
                hc.b[kx] = col[iy].im;
            }
            hc.b[0] = 0.0;
            if nxt % 2 == 0 {
                hc.b[nxt / 2] = 0.0;
            }
            dft_inverse(&hc)
        })
        .collect();
    let mut out = vec![0.0; nxt * nyt];
    for (iy, row) in rows.into_iter().enumerate() {
        out[iy * nxt..(iy + 1) * nxt].copy_from_slice(&row);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct BiFourierBenchRow {
    pub field: usize,
    pub iter: usize,
    pub seconds: f64,
    pub spectral_norm_diff: f64,
}

/// Built-in analytic interior field for the benchmark: a few low modes plus
/// a smooth bump.
pub fn analytic_interior(grid: &LamGrid) -> Vec<f64> {
    let (nx, ny) = (grid.nx, grid.ny);
    let mut f = vec![0.0; nx * ny];
    let tau = 2.0 * std::f64::consts::PI;
    for iy in 0..ny {
        for ix in 0..nx {
            let x = ix as f64 / nx as f64;
            let y = iy as f64 / ny as f64;
            f[iy * nx + ix] = (tau * 2.0 * x).sin()
                + 0.5 * (tau * 3.0 * y).cos()
                + 0.3 * (tau * x).sin() * (tau * y).sin()
                + (-((x - 0.5).powi(2) + (y - 0.5).powi(2)) / 0.02).exp();
        }
    }
    f
}

/// Back-and-forth transform benchmark; reports per-iteration time and the
/// spectral-norm difference between the first-pass spectrum and the current
/// one. The built-in analytic interior field is used for every field slot.
pub fn bifourier_bench(
    grid: &LamGrid,
    nfld: usize,
    iters: usize,
) -> Result<Vec<BiFourierBenchRow>> {
    bifourier_bench_on(grid, &analytic_interior(grid), nfld, iters)
}

/// Benchmark on a caller-supplied interior field (e.g. read from an NWPF
/// dump).
pub fn bifourier_bench_on(
    grid: &LamGrid,
    interior: &[f64],
    nfld: usize,
    iters: usize,
) -> Result<Vec<BiFourierBenchRow>> {
    if iters < 1 {
        return Err(DwarfError::Contract("iters must be >= 1".into()));
    }
    let mut rows = Vec::with_capacity(nfld * iters);
    for field in 0..nfld {
        let extended = extend_periodic(interior, grid)?;
        let s0 = bifft_direct(&extended, grid)?;
        let mut s = s0.clone();
        for iter in 1..=iters {
            let t0 = Instant::now();
            let f = bifft_inverse(&s)?;
            s = bifft_direct(&f, grid)?;
            let seconds = t0.elapsed().as_secs_f64();
            rows.push(BiFourierBenchRow {
                field,
                iter,
                seconds,
                spectral_norm_diff: s.norm_diff(&s0),
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids::GridKind;

    fn grid() -> LamGrid {
        LamGrid::new(54, 48, 6, 6, 1.0, 1.0, GridKind::Linear).unwrap()
    }

    #[test]
    fn extension_of_constant_is_bit_exact() {
        let g = grid();
        let interior = vec![4.25; g.nx * g.ny];
        let ext = extend_periodic(&interior, &g).unwrap();
        for &v in &ext {
            assert_eq!(v.to_bits(), 4.25f64.to_bits());
        }
    }

    #[test]
    fn extension_reproduces_periodic_sine() {
        // period 6 divides nx=54, ext_x=6, ny=48 and ext_y=6, hence both
        // extended lengths as well
        let g = grid();
        let f = |ix: usize, iy: usize| {
            (2.0 * std::f64::consts::PI * ix as f64 / 6.0).sin()
                + (2.0 * std::f64::consts::PI * iy as f64 / 6.0).cos()
        };
        let mut interior = vec![0.0; g.nx * g.ny];
        for iy in 0..g.ny {
            for ix in 0..g.nx {
                interior[iy * g.nx + ix] = f(ix, iy);
            }
        }
        let ext = extend_periodic(&interior, &g).unwrap();
        let (nxt, nyt) = g.extended();
        for iy in 0..nyt {
            for ix in 0..nxt {
                assert!(
                    (ext[iy * nxt + ix] - f(ix, iy)).abs() < 1e-12,
                    "({ix},{iy})"
                );
            }
        }
    }

    #[test]
    fn extension_of_ramp_is_monotone_and_bounded() {
        let g = grid();
        let mut interior = vec![0.0; g.nx * g.ny];
        for iy in 0..g.ny {
            for ix in 0..g.nx {
                interior[iy * g.nx + ix] = ix as f64;
            }
        }
        let ext = extend_periodic(&interior, &g).unwrap();
        let (nxt, _) = g.extended();
        let (lo, hi) = (0.0, (g.nx - 1) as f64);
        // the gap climbs from near the wrapped start value toward the right edge value
        for iy in 0..g.ny {
            let mut prev = ext[iy * nxt + g.nx];
            assert!((lo..=hi).contains(&prev));
            for ix in g.nx + 1..nxt {
                let v = ext[iy * nxt + ix];
                assert!((lo..=hi).contains(&v), "overshoot at {ix}: {v}");
                assert!(v >= prev - 1e-12, "not monotone at {ix}");
                prev = v;
            }
        }
    }

    #[test]
    fn extension_preserves_interior_bit_exactly() {
        let g = grid();
        let interior: Vec<f64> = (0..g.nx * g.ny).map(|i| (i as f64 * 0.7).sin()).collect();
        let ext = extend_periodic(&interior, &g).unwrap();
        let (nxt, _) = g.extended();
        for iy in 0..g.ny {
            for ix in 0..g.nx {
                assert_eq!(
                    ext[iy * nxt + ix].to_bits(),
                    interior[iy * g.nx + ix].to_bits()
                );
            }
        }
    }

    #[test]
    fn extension_requires_width_two() {
        let g = LamGrid::new(59, 48, 1, 6, 1.0, 1.0, GridKind::Linear).unwrap();
        assert!(extend_periodic(&vec![0.0; 59 * 48], &g).is_err());
    }

    #[test]
    fn constant_field_transforms_to_dc_only() {
        let g = grid();
        let (nxt, nyt) = g.extended();
        let s = bifft_direct(&vec![1.5; nxt * nyt], &g).unwrap();
        assert!((s.get(0, 0).re - 1.5).abs() < 1e-13);
        for kx in 0..=nxt / 2 {
            for ky in 0..nyt {
                if (kx, ky) != (0, 0) {
                    assert!(s.get(kx, ky).norm() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn in_ellipse_mode_survives_round_trip() {
        let g = grid();
        let (nxt, nyt) = g.extended();
        let k = 7usize; // inside the ellipse on the kx axis
        let mut f = vec![0.0; nxt * nyt];
        for iy in 0..nyt {
            for ix in 0..nxt {
                f[iy * nxt + ix] =
                    (2.0 * std::f64::consts::PI * (k * ix) as f64 / nxt as f64).cos();
            }
        }
        let s = bifft_direct(&f, &g).unwrap();
        let back = bifft_inverse(&s).unwrap();
        for (a, b) in f.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn out_of_ellipse_mode_is_zeroed() {
        // (kx, ky) = (24, 24): below both Nyquists (30, 27) but outside the
        // ellipse: (24/30)^2 + (24/27)^2 > 1
        let g = grid();
        let (nxt, nyt) = g.extended();
        let (kx, ky) = (24usize, 24usize);
        let mut f = vec![0.0; nxt * nyt];
        for iy in 0..nyt {
            for ix in 0..nxt {
                let ph = 2.0 * std::f64::consts::PI
                    * (kx as f64 * ix as f64 / nxt as f64 + ky as f64 * iy as f64 / nyt as f64);
                f[iy * nxt + ix] = ph.cos();
            }
        }
        let s = bifft_direct(&f, &g).unwrap();
        assert!(!s.in_mask(kx, ky));
        for c in &s.coeffs {
            assert!(c.norm() < 1e-13);
        }
    }

    #[test]
    fn axis_modes_at_kmax_survive_corner_removed() {
        let g = grid();
        let s = LamSpectral::zeros(&g);
        assert!(s.in_mask(g.kmax_x, 0));
        assert!(s.in_mask(0, g.kmax_y));
        assert!(!s.in_mask(g.kmax_x, g.kmax_y));
    }

    #[test]
    fn truncation_projector_is_idempotent() {
        let g = grid();
        let interior = analytic_interior(&g);
        let ext = extend_periodic(&interior, &g).unwrap();
        let once = bifft_inverse(&bifft_direct(&ext, &g).unwrap()).unwrap();
        let twice = bifft_inverse(&bifft_direct(&once, &g).unwrap()).unwrap();
        for (a, b) in once.iter().zip(&twice) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_spectrum_gives_zero_field() {
        let g = grid();
        let s = LamSpectral::zeros(&g);
        let f = bifft_inverse(&s).unwrap();
        assert!(f.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn direct_after_inverse_identity_on_masked_coeffs() {
        let g = grid();
        let interior = analytic_interior(&g);
        let ext = extend_periodic(&interior, &g).unwrap();
        let s = bifft_direct(&ext, &g).unwrap();
        let s2 = bifft_direct(&bifft_inverse(&s).unwrap(), &g).unwrap();
        assert!(s.norm_diff(&s2) < 1e-12);
    }

    #[test]
    fn bench_first_iteration_diff_vanishes() {
        let g = grid();
        let rows = bifourier_bench(&g, 1, 1).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].spectral_norm_diff <= 1e-13);
    }

    #[test]
    fn bench_identical_fields_identical_rows() {
        let g = grid();
        let rows = bifourier_bench(&g, 3, 2).unwrap();
        assert_eq!(rows.len(), 6);
        for f in 1..3usize {
            for it in 0..2usize {
                assert_eq!(
                    rows[it].spectral_norm_diff.to_bits(),
                    rows[f * 2 + it].spectral_norm_diff.to_bits()
                );
            }
        }
    }

    #[test]
    fn bench_hundred_iterations_stays_tight() {
        let g = grid();
        let rows = bifourier_bench(&g, 1, 100).unwrap();
        assert!(rows.last().unwrap().spectral_norm_diff <= 1e-10);
    }
}
