//! Terrain-following metrics and the 3D potential-flow boundary-value
//! problem.
//!
//! The coordinate map is `z = H (z_cart - h) / (H - h)` over a rectangular
//! box, periodic in x and y, walls at z = 0 and z = H. The metric terms are
//!
//! ```text
//! G13 = -h_x (H - z) / (H - h)       G23 = -h_y (H - z) / (H - h)
//! J   = (H - h) / H                  G33 = G13^2 + G23^2 + 1/J^2
//! ```
//!
//! with `rho* = J rho_bar(z)` and `rho_bar(z) = exp(-z / H_s)` (the paper
//! leaves the reference density profile open; the exponential profile is a
//! stand-in). The boundary-value operator is
//! `L(phi) = -(1/rho*) div(rho* P_f(phi))` restricted to the linear part of
//! the pressure-force vector; the right-hand side carries the ambient part
//! with `omega_e = J^-1 w_e + G13 u_e + G23 v_e`. Discretization is
//! second-order centered on the collocated box; vertical fluxes reflect
//! oddly at the walls (w = 0) and vertical derivatives of `phi` use mirror
//! ghosts (zero normal gradient).

use crate::error::{DwarfError, Result};
use crate::gcr::LinearOp;

/// Geometry and hill parameters for the terrain box.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct TerrainConfig {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    /// domain lengths
    pub lx: f64,
    pub ly: f64,
    /// model depth H
    pub depth: f64,
    /// hill peak height (must stay below depth)
    pub hill_height: f64,
    /// hill Gaussian width
    pub hill_sigma: f64,
    /// density scale height H_s
    pub scale_height: f64,
}

impl Default for TerrainConfig {
    fn default() -> Self {
        Self {
            nx: 48,
            ny: 24,
            nz: 8,
            lx: 48.0,
            ly: 24.0,
            depth: 8.0,
            hill_height: 1.0,
            hill_sigma: 6.0,
            scale_height: 8.0,
        }
    }
}

/// Per-point metric terms of the terrain-following map.
#[derive(Debug, Clone)]
pub struct TerrainMetrics {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub depth: f64,
    /// terrain height h(x, y), nx*ny
    pub h: Vec<f64>,
    /// Jacobian J = (H - h)/H, nx*ny
    pub jac: Vec<f64>,
    /// 3D metric terms, level-major nz*ny*nx
    pub g13: Vec<f64>,
    pub g23: Vec<f64>,
    pub g33: Vec<f64>,
    /// rho* = J rho_bar(z), level-major
    pub rho_star: Vec<f64>,
}

impl TerrainMetrics {
    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.ny + j) * self.nx + i
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cell-center height of level `k`.
    pub fn z_at(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.dz
    }
}

/// Gaussian hill centered mid-domain.
fn hill_and_gradient(cfg: &TerrainConfig, x: f64, y: f64) -> (f64, f64, f64) {
    let (xc, yc) = (cfg.lx / 2.0, cfg.ly / 2.0);
    let s2 = cfg.hill_sigma * cfg.hill_sigma;
    let h = cfg.hill_height * (-((x - xc).powi(2) + (y - yc).powi(2)) / s2).exp();
    let hx = -2.0 * (x - xc) / s2 * h;
    let hy = -2.0 * (y - yc) / s2 * h;
    (h, hx, hy)
}

/// Build the metric terms from analytic derivatives of the coordinate map.
pub fn build_terrain_metrics(cfg: &TerrainConfig) -> Result<TerrainMetrics> {
    if cfg.nz < 4 {
        return Err(DwarfError::Contract("need nz >= 4".into()));
    }
    if cfg.hill_height >= cfg.depth {
        return Err(DwarfError::InvalidTerrain(format!(
            "hill height {} reaches the model depth {}",
            cfg.hill_height, cfg.depth
        )));
    }
    let (nx, ny, nz) = (cfg.nx, cfg.ny, cfg.nz);
    let dx = cfg.lx / nx as f64;
    let dy = cfg.ly / ny as f64;
    let dz = cfg.depth / nz as f64;
    let hcap = cfg.depth;
    let mut h = vec![0.0; nx * ny];
    let mut jac = vec![0.0; nx * ny];
    let mut g13 = vec![0.0; nx * ny * nz];
    let mut g23 = vec![0.0; nx * ny * nz];
    let mut g33 = vec![0.0; nx * ny * nz];
    let mut rho_star = vec![0.0; nx * ny * nz];
    for j in 0..ny {
        for i in 0..nx {
            let (hv, hx, hy) = hill_and_gradient(cfg, (i as f64 + 0.5) * dx, (j as f64 + 0.5) * dy);
            h[j * nx + i] = hv;
            let jv = (hcap - hv) / hcap;
            jac[j * nx + i] = jv;
            for k in 0..nz {
                let z = (k as f64 + 0.5) * dz;
                let fac = (hcap - z) / (hcap - hv);
                let idx = (k * ny + j) * nx + i;
                g13[idx] = -hx * fac;
                g23[idx] = -hy * fac;
                g33[idx] = g13[idx] * g13[idx] + g23[idx] * g23[idx] + 1.0 / (jv * jv);
                rho_star[idx] = jv * (-z / cfg.scale_height).exp();
            }
        }
    }
    Ok(TerrainMetrics {
        nx,
        ny,
        nz,
        dx,
        dy,
        dz,
        depth: cfg.depth,
        h,
        jac,
        g13,
        g23,
        g33,
        rho_star,
    })
}

/// Prescribed ambient winds on the box (Cartesian components).
#[derive(Debug, Clone)]
pub struct AmbientWind {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
}

impl AmbientWind {
    pub fn uniform(metrics: &TerrainMetrics, u0: f64) -> Self {
        let n = metrics.len();
        Self {
            u: vec![u0; n],
            v: vec![0.0; n],
            w: vec![0.0; n],
        }
    }
}

/// Gradient components of `phi` at one point, centered differences with
/// periodic x/y wrap and mirror ghosts in z.
#[inline]
fn grad_phi(
    m: &TerrainMetrics,
    phi: &[f64],
    i: usize,
    j: usize,
    k: usize,
) -> (f64, f64, f64) {
    let (nx, ny, nz) = (m.nx, m.ny, m.nz);
    let ip = m.idx((i + 1) % nx, j, k);
    let im = m.idx((i + nx - 1) % nx, j, k);
    let jp = m.idx(i, (j + 1) % ny, k);
    let jm = m.idx(i, (j + ny - 1) % ny, k);
    let px = (phi[ip] - phi[im]) / (2.0 * m.dx);
    let py = (phi[jp] - phi[jm]) / (2.0 * m.dy);
    let above = if k + 1 < nz { phi[m.idx(i, j, k + 1)] } else { phi[m.idx(i, j, k)] };
    let below = if k > 0 { phi[m.idx(i, j, k - 1)] } else { phi[m.idx(i, j, k)] };
    let pz = (above - below) / (2.0 * m.dz);
    (px, py, pz)
}

/// `rho* x` flux components of the linear pressure-force part at one point.
#[inline]
fn linear_flux(m: &TerrainMetrics, phi: &[f64], i: usize, j: usize, k: usize) -> (f64, f64, f64) {
    let (px, py, pz) = grad_phi(m, phi, i, j, k);
    let idx = m.idx(i, j, k);
    let rs = m.rho_star[idx];
    let a = -(px + m.g13[idx] * pz);
    let b = -(py + m.g23[idx] * pz);
    let c = -(m.g13[idx] * px + m.g23[idx] * py + m.g33[idx] * pz);
    (rs * a, rs * b, rs * c)
}

/// Divergence of a flux triple field, periodic in x/y, odd wall reflection
/// of the vertical component.
fn divergence(m: &TerrainMetrics, fx: &[f64], fy: &[f64], fz: &[f64], out: &mut [f64]) {
    let (nx, ny, nz) = (m.nx, m.ny, m.nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let ip = m.idx((i + 1) % nx, j, k);
                let im = m.idx((i + nx - 1) % nx, j, k);
                let jp = m.idx(i, (j + 1) % ny, k);
                let jm = m.idx(i, (j + ny - 1) % ny, k);
                let c = m.idx(i, j, k);
                let above = if k + 1 < nz { fz[m.idx(i, j, k + 1)] } else { -fz[c] };
                let below = if k > 0 { fz[m.idx(i, j, k - 1)] } else { -fz[c] };
                out[c] = (fx[ip] - fx[im]) / (2.0 * m.dx)
                    + (fy[jp] - fy[jm]) / (2.0 * m.dy)
                    + (above - below) / (2.0 * m.dz);
            }
        }
    }
}

/// The linear elliptic operator `phi -> -(1/rho*) div(rho* P_f(phi))`.
pub struct PotentialFlowOp {
    metrics: TerrainMetrics,
}

impl PotentialFlowOp {
    pub fn new(metrics: TerrainMetrics) -> Self {
        Self { metrics }
    }

    pub fn metrics(&self) -> &TerrainMetrics {
        &self.metrics
    }
}

impl LinearOp for PotentialFlowOp {
    fn len(&self) -> usize {
        self.metrics.len()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let m = &self.metrics;
        let n = m.len();
        let mut fx = vec![0.0; n];
        let mut fy = vec![0.0; n];
        let mut fz = vec![0.0; n];
        for k in 0..m.nz {
            for j in 0..m.ny {
                for i in 0..m.nx {
                    let (a, b, c) = linear_flux(m, x, i, j, k);
                    let idx = m.idx(i, j, k);
                    fx[idx] = a;
                    fy[idx] = b;
                    fz[idx] = c;
                }
            }
        }
        divergence(m, &fx, &fy, &fz, out);
        for idx in 0..n {
            out[idx] = -out[idx] / m.rho_star[idx];
        }
    }
}

/// Right-hand side from the ambient part:
/// `Q = (1/rho*) div(rho* (u_e, v_e, omega_e))`.
pub fn potential_flow_rhs(m: &TerrainMetrics, wind: &AmbientWind) -> Vec<f64> {
    let n = m.len();
    let mut fx = vec![0.0; n];
    let mut fy = vec![0.0; n];
    let mut fz = vec![0.0; n];
    for k in 0..m.nz {
        for j in 0..m.ny {
            for i in 0..m.nx {
                let idx = m.idx(i, j, k);
                let jv = m.jac[j * m.nx + i];
                let omega_e = wind.w[idx] / jv
                    + m.g13[idx] * wind.u[idx]
                    + m.g23[idx] * wind.v[idx];
                let rs = m.rho_star[idx];
                fx[idx] = rs * wind.u[idx];
                fy[idx] = rs * wind.v[idx];
                fz[idx] = rs * omega_e;
            }
        }
    }
    let mut out = vec![0.0; n];
    divergence(m, &fx, &fy, &fz, &mut out);
    for idx in 0..n {
        out[idx] /= m.rho_star[idx];
    }
    out
}

/// Post-hoc audit: discrete `div(rho* v*)` for the solved potential, where
/// `v* = P_f(phi) + ambient part`. Uses the same stencils as the operator.
pub fn divergence_audit(m: &TerrainMetrics, phi: &[f64], wind: &AmbientWind) -> Vec<f64> {
    let n = m.len();
    let mut fx = vec![0.0; n];
    let mut fy = vec![0.0; n];
    let mut fz = vec![0.0; n];
    for k in 0..m.nz {
        for j in 0..m.ny {
            for i in 0..m.nx {
                let idx = m.idx(i, j, k);
                let jv = m.jac[j * m.nx + i];
                let omega_e = wind.w[idx] / jv
                    + m.g13[idx] * wind.u[idx]
                    + m.g23[idx] * wind.v[idx];
                let rs = m.rho_star[idx];
                let (la, lb, lc) = linear_flux(m, phi, i, j, k);
                fx[idx] = rs * wind.u[idx] + la;
                fy[idx] = rs * wind.v[idx] + lb;
                fz[idx] = rs * omega_e + lc;
            }
        }
    }
    let mut out = vec![0.0; n];
    divergence(m, &fx, &fy, &fz, &mut out);
    out
}
