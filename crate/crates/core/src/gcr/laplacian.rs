//! Discrete Laplacian on the full Gaussian grid and the 2D solver benchmark.
//!
//! Second-order centered differences in longitude and (non-uniform)
//! co-latitude with the metric terms `1/sin^2(theta)` and `cot(theta)`,
//! periodic in longitude. Pole rows use a ghost row reflected across the
//! pole with a longitude shift of half a revolution. All stencils are
//! evaluated in difference form so constant fields are annihilated exactly;
//! constants span the operator's null space, which is why benchmark errors
//! are measured after removing the mean offset.

use crate::error::{DwarfError, Result};
use crate::gcr::{gcr_solve, GcrConfig, GcrReport, IdentityPrecond, JacobiPrecond, LinearOp};
use crate::grids::{gaussian_hill, Field3d, GaussianGrid};
use crate::util::pairwise_sum_by;

/// Spherical Laplacian on a full (non-reduced) Gaussian grid, single level.
pub struct SphereLaplacian {
    nlat: usize,
    nlon: usize,
    inv_sin2_dlam2: Vec<f64>,
    cot: Vec<f64>,
    /// spacing to the north neighbor (ghost across the pole for row 0)
    h_north: Vec<f64>,
    /// spacing to the south neighbor (ghost across the pole for the last row)
    h_south: Vec<f64>,
}

impl SphereLaplacian {
    pub fn new(grid: &GaussianGrid) -> Result<Self> {
        if !grid.is_full() {
            return Err(DwarfError::Contract(
                "spherical Laplacian requires a full (non-reduced) grid".into(),
            ));
        }
        if grid.nlat < 4 {
            return Err(DwarfError::Contract(
                "grid too coarse: need at least 4 Gaussian latitudes".into(),
            ));
        }
        let nlat = grid.nlat;
        let nlon = grid.nlon_per_lat[0];
        let theta: Vec<f64> = (0..nlat).map(|k| grid.colatitude_rad(k)).collect();
        let dlam = 2.0 * std::f64::consts::PI / nlon as f64;
        let inv_sin2_dlam2: Vec<f64> = theta
            .iter()
            .map(|t| 1.0 / (t.sin() * t.sin() * dlam * dlam))
            .collect();
        let cot = theta.iter().map(|t| t.cos() / t.sin()).collect();
        let mut h_north = vec![0.0; nlat];
        let mut h_south = vec![0.0; nlat];
        for k in 0..nlat {
            h_north[k] = if k == 0 {
                2.0 * theta[0]
            } else {
                theta[k] - theta[k - 1]
            };
            h_south[k] = if k == nlat - 1 {
                2.0 * (std::f64::consts::PI - theta[nlat - 1])
            } else {
                theta[k + 1] - theta[k]
            };
        }
        Ok(Self {
            nlat,
            nlon,
            inv_sin2_dlam2,
            cot,
            h_north,
            h_south,
        })
    }

    /// Diagonal of the discrete operator, for the Jacobi preconditioner.
    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.nlat * self.nlon];
        for k in 0..self.nlat {
            let (h1, h2) = (self.h_north[k], self.h_south[k]);
            let denom = h1 * h2 * (h1 + h2);
            // center coefficients of the zonal, d2 and cot*d1 terms
            let dval = -2.0 * self.inv_sin2_dlam2[k] - 2.0 / (h1 * h2)
                + self.cot[k] * (h2 * h2 - h1 * h1) / denom;
            for j in 0..self.nlon {
                d[k * self.nlon + j] = dval;
            }
        }
        d
    }
}

impl LinearOp for SphereLaplacian {
    fn len(&self) -> usize {
        self.nlat * self.nlon
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let (nlat, nlon) = (self.nlat, self.nlon);
        let half = nlon / 2;
        for k in 0..nlat {
            let row = k * nlon;
            let (h1, h2) = (self.h_north[k], self.h_south[k]);
            let denom = h1 * h2 * (h1 + h2);
            for j in 0..nlon {
                let c = x[row + j];
                let west = x[row + (j + nlon - 1) % nlon];
                let east = x[row + (j + 1) % nlon];
                let north = if k == 0 {
                    x[(j + half) % nlon] // across the pole, shifted by pi
                } else {
                    x[(k - 1) * nlon + j]
                };
                let south = if k == nlat - 1 {
                    x[(nlat - 1) * nlon + (j + half) % nlon]
                } else {
                    x[(k + 1) * nlon + j]
                };
                let zonal = ((west - c) + (east - c)) * self.inv_sin2_dlam2[k];
                let d2 = 2.0 * (h1 * (south - c) + h2 * (north - c)) / denom;
                let d1 = (h1 * h1 * (south - c) - h2 * h2 * (north - c)) / denom;
                out[row + j] = zonal + d2 + self.cot[k] * d1;
            }
        }
    }
}

/// Mean-offset-corrected mean absolute error between two flat fields:
/// the constant offset (null space of the periodic problem) is removed
/// before averaging `|psi0 - psi|`.
pub fn mean_offset_error(psi0: &[f64], psi: &[f64]) -> f64 {
    assert_eq!(psi0.len(), psi.len());
    let n = psi0.len();
    let offset = pairwise_sum_by(n, |i| psi0[i] - psi[i]) / n as f64;
    pairwise_sum_by(n, |i| (psi0[i] - psi[i] - offset).abs()) / n as f64
}

#[derive(Debug, Clone)]
pub struct LaplacianBenchReport {
    pub err_mean: f64,
    pub gcr: GcrReport,
}

/// Laplacian recovery benchmark: build the hill, apply the operator to get
/// the right-hand side, solve from zero, and report the mean-offset error.
pub fn solve_laplacian_benchmark(
    grid: &GaussianGrid,
    hill_center: (f64, f64),
    hill_height: f64,
    cfg: &GcrConfig,
    jacobi: bool,
) -> Result<LaplacianBenchReport> {
    let op = SphereLaplacian::new(grid)?;
    let psi0 = gaussian_hill(grid, hill_center, hill_height)?;
    let mut rhs = vec![0.0; op.len()];
    op.apply(&psi0.values, &mut rhs);
    let guess = vec![0.0; op.len()];
    let (psi, gcr) = if jacobi {
        let pre = JacobiPrecond::from_diagonal(&op.diagonal());
        gcr_solve(&op, &pre, &rhs, &guess, cfg)?
    } else {
        gcr_solve(&op, &IdentityPrecond, &rhs, &guess, cfg)?
    };
    Ok(LaplacianBenchReport {
        err_mean: mean_offset_error(&psi0.values, &psi),
        gcr,
    })
}

/// Convenience: wrap a flat single-level vector in a [`Field3d`].
pub fn flat_field(values: Vec<f64>, name: &str) -> Field3d {
    Field3d {
        nlev: 1,
        points_per_level: values.len(),
        values,
        name: name.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids::{make_gaussian_grid, GridKind};

    fn laplacian(n: usize) -> (GaussianGrid, SphereLaplacian) {
        let grid = make_gaussian_grid(n, GridKind::Linear, false).unwrap();
        let op = SphereLaplacian::new(&grid).unwrap();
        (grid, op)
    }

    #[test]
    fn annihilates_constants_exactly() {
        let (_, op) = laplacian(15);
        let x = vec![3.7; op.len()];
        let mut out = vec![1.0; op.len()];
        op.apply(&x, &mut out);
        for v in out {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn eigenfunction_cos_theta_with_refinement_slope() {
        // Y_1^0 ~ cos(theta): Laplacian eigenvalue -2 on the unit sphere
        let mut errs = Vec::new();
        for n in [15usize, 31, 63] {
            let (grid, op) = laplacian(n);
            let nlon = grid.nlon_per_lat[0];
            let mut f = vec![0.0; op.len()];
            for k in 0..grid.nlat {
                let v = grid.colatitude_rad(k).cos();
                for j in 0..nlon {
                    f[k * nlon + j] = v;
                }
            }
            let mut lf = vec![0.0; op.len()];
            op.apply(&f, &mut lf);
            let err = lf
                .iter()
                .zip(&f)
                .map(|(a, b)| (a + 2.0 * b).abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        let s1 = (errs[0] / errs[1]).log2();
        let s2 = (errs[1] / errs[2]).log2();
        assert!(
            s1 > 1.7 && s2 > 1.7,
            "refinement slopes {s1:.2}, {s2:.2} below second order ({errs:?})"
        );
    }

    #[test]
    fn commutes_with_zonal_rotation() {
        let (grid, op) = laplacian(15);
        let nlon = grid.nlon_per_lat[0];
        let n = op.len();
        let mut x = vec![0.0; n];
        for k in 0..grid.nlat {
            for j in 0..nlon {
                x[k * nlon + j] = ((k * 3 + j) as f64 * 0.7).sin();
            }
        }
        // rotate input by one gridpoint
        let mut xr = vec![0.0; n];
        for k in 0..grid.nlat {
            for j in 0..nlon {
                xr[k * nlon + (j + 1) % nlon] = x[k * nlon + j];
            }
        }
        let mut lx = vec![0.0; n];
        let mut lxr = vec![0.0; n];
        op.apply(&x, &mut lx);
        op.apply(&xr, &mut lxr);
        for k in 0..grid.nlat {
            for j in 0..nlon {
                let a = lx[k * nlon + j];
                let b = lxr[k * nlon + (j + 1) % nlon];
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn too_coarse_grid_rejected() {
        let grid = make_gaussian_grid(1, GridKind::Linear, false).unwrap();
        assert!(SphereLaplacian::new(&grid).is_err());
    }

    #[test]
    fn reduced_grid_rejected() {
        let grid = make_gaussian_grid(15, GridKind::Linear, true).unwrap();
        assert!(SphereLaplacian::new(&grid).is_err());
    }

    #[test]
    fn constant_initial_state_is_a_fixpoint() {
        let (_, op) = laplacian(10);
        let psi0 = vec![2.0; op.len()];
        let mut rhs = vec![0.0; op.len()];
        op.apply(&psi0, &mut rhs);
        let cfg = GcrConfig {
            k: 3,
            eps: 1e-10,
            max_restarts: 100,
        };
        let (psi, rep) = gcr_solve(&op, &IdentityPrecond, &rhs, &vec![0.0; op.len()], &cfg).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iterations, 0);
        assert_eq!(mean_offset_error(&psi0, &psi), 0.0);
    }

    #[test]
    fn benchmark_error_shrinks_with_tolerance() {
        let grid = make_gaussian_grid(21, GridKind::Linear, false).unwrap();
        let center = (std::f64::consts::PI, 0.35);
        let mut errs = Vec::new();
        for eps in [1e-6, 1e-8, 1e-10] {
            let cfg = GcrConfig {
                k: 3,
                eps,
                max_restarts: 100_000,
            };
            let rep = solve_laplacian_benchmark(&grid, center, 1.0, &cfg, true).unwrap();
            assert!(rep.gcr.converged, "eps={eps} did not converge");
            errs.push(rep.err_mean);
        }
        assert!(errs[1] <= errs[0]);
        assert!(errs[2] <= errs[1]);
        assert!(errs[2] <= 1e-6, "err at 1e-10: {}", errs[2]);
    }

    #[test]
    fn null_space_covariance_of_initial_guess() {
        let grid = make_gaussian_grid(15, GridKind::Linear, false).unwrap();
        let op = SphereLaplacian::new(&grid).unwrap();
        let psi0 = gaussian_hill(&grid, (3.0, 0.2), 1.0).unwrap();
        let mut rhs = vec![0.0; op.len()];
        op.apply(&psi0.values, &mut rhs);
        let cfg = GcrConfig {
            k: 3,
            eps: 1e-10,
            max_restarts: 100_000,
        };
        let pre = JacobiPrecond::from_diagonal(&op.diagonal());
        let (a, _) = gcr_solve(&op, &pre, &rhs, &vec![0.0; op.len()], &cfg).unwrap();
        let (b, _) = gcr_solve(&op, &pre, &rhs, &vec![5.0; op.len()], &cfg).unwrap();
        let ea = mean_offset_error(&psi0.values, &a);
        let eb = mean_offset_error(&psi0.values, &b);
        assert!((ea - eb).abs() < 1e-10, "{ea} vs {eb}");
    }
}
