//! Preconditioned Generalized Conjugate Residual solver.
//!
//! The solver follows the restarted GCR recursion literally: the residual is
//! driven down by variational steps `beta = -<r, Lp> / <Lp, Lp>`, new
//! directions are built from the preconditioned residual and orthogonalized
//! against the stored `Lp` images (`alpha_l = -<Le, Lp_l> / <Lp_l, Lp_l>`),
//! and `L p` is accumulated from stored images without re-applying the
//! operator. After `k` inner iterations the newest direction becomes the
//! starting one and the history resets. The inner product is the plain
//! unweighted sum `<xi, zeta> = sum_i xi_i zeta_i`.

pub mod laplacian;
pub mod potential;

pub use laplacian::{mean_offset_error, solve_laplacian_benchmark, LaplacianBenchReport, SphereLaplacian};
pub use potential::{
    build_terrain_metrics, divergence_audit, potential_flow_rhs, PotentialFlowOp, TerrainConfig,
    TerrainMetrics,
};

use crate::error::{DwarfError, Result};
use crate::util::{dot, norm2};

/// A discrete linear operator on flat state vectors.
pub trait LinearOp: Sync {
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn apply(&self, x: &[f64], out: &mut [f64]);
}

/// Left preconditioner: application of `P^{-1}` to a residual.
pub trait Preconditioner: Sync {
    fn apply_inverse(&self, r: &[f64], out: &mut [f64]);
}

/// The trivial preconditioner.
pub struct IdentityPrecond;

impl Preconditioner for IdentityPrecond {
    fn apply_inverse(&self, r: &[f64], out: &mut [f64]) {
        out.copy_from_slice(r);
    }
}

/// Diagonal (Jacobi) preconditioner.
pub struct JacobiPrecond {
    pub inv_diag: Vec<f64>,
}

impl JacobiPrecond {
    /// Build from an operator diagonal; zero entries fall back to identity.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self {
            inv_diag: diag
                .iter()
                .map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 })
                .collect(),
        }
    }
}

impl Preconditioner for JacobiPrecond {
    fn apply_inverse(&self, r: &[f64], out: &mut [f64]) {
        for i in 0..r.len() {
            out[i] = r[i] * self.inv_diag[i];
        }
    }
}

/// Dense row-major matrix as a [`LinearOp`]; the matrix-backed test route.
pub struct DenseOperator {
    pub n: usize,
    pub a: Vec<f64>,
}

impl DenseOperator {
    pub fn new(n: usize, a: Vec<f64>) -> Self {
        assert_eq!(a.len(), n * n);
        Self { n, a }
    }
}

impl LinearOp for DenseOperator {
    fn len(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let row = &self.a[i * self.n..(i + 1) * self.n];
            out[i] = dot(row, x);
        }
    }
}

/// Restart depth, residual tolerance and restart budget.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct GcrConfig {
    /// restart depth (order of the damped-oscillation recursion)
    pub k: usize,
    /// absolute residual L2 tolerance
    pub eps: f64,
    pub max_restarts: usize,
}

impl Default for GcrConfig {
    fn default() -> Self {
        Self {
            k: 3,
            eps: 1e-8,
            max_restarts: 100_000,
        }
    }
}

/// Convergence record of one solve.
#[derive(Debug, Clone)]
pub struct GcrReport {
    pub iterations: usize,
    pub restarts: usize,
    pub residual_history: Vec<f64>,
    pub converged: bool,
}

/// Solve `L(psi) = Q` from initial guess `psi0`.
///
/// Returns the final iterate and report; non-convergence within the restart
/// budget is reported with `converged = false`, not as an error. A direction
/// with `<Lp, Lp> = 0` raises [`DwarfError::GcrBreakdown`].
pub fn gcr_solve(
    op: &dyn LinearOp,
    precond: &dyn Preconditioner,
    q: &[f64],
    psi0: &[f64],
    cfg: &GcrConfig,
) -> Result<(Vec<f64>, GcrReport)> {
    let n = op.len();
    if q.len() != n || psi0.len() != n {
        return Err(DwarfError::Contract(
            "rhs/guess length does not match operator".into(),
        ));
    }
    if cfg.k < 1 || cfg.eps <= 0.0 {
        return Err(DwarfError::Contract(
            "gcr requires k >= 1 and eps > 0".into(),
        ));
    }
    let k = cfg.k;
    let mut psi = psi0.to_vec();
    let mut r = vec![0.0; n];
    op.apply(&psi, &mut r);
    for i in 0..n {
        r[i] -= q[i];
    }
    let mut history = vec![norm2(&r)];
    let mut report = GcrReport {
        iterations: 0,
        restarts: 0,
        residual_history: Vec::new(),
        converged: false,
    };
    if history[0] <= cfg.eps {
        report.converged = true;
        report.residual_history = history;
        return Ok((psi, report));
    }

    // direction stack: p[0..=k] with images lp[0..=k]
    let mut p = vec![vec![0.0; n]; k + 1];
    let mut lp = vec![vec![0.0; n]; k + 1];
    let mut denoms = vec![0.0; k + 1];
    precond.apply_inverse(&r, &mut p[0]);
    op.apply(&p[0], &mut lp[0]);

    let mut e = vec![0.0; n];
    let mut le = vec![0.0; n];
    for _restart in 0..cfg.max_restarts {
        for nu in 0..k {
            let denom = dot(&lp[nu], &lp[nu]);
            if denom == 0.0 {
                report.residual_history = history;
                return Err(DwarfError::GcrBreakdown {
                    report: Box::new(report),
                });
            }
            denoms[nu] = denom;
            let beta = -dot(&r, &lp[nu]) / denom;
            for i in 0..n {
                psi[i] += beta * p[nu][i];
                r[i] += beta * lp[nu][i];
            }
            report.iterations += 1;
            let resid = norm2(&r);
            history.push(resid);
            if resid <= cfg.eps {
                report.converged = true;
                report.residual_history = history;
                return Ok((psi, report));
            }
            precond.apply_inverse(&r, &mut e);
            op.apply(&e, &mut le);
            let (p_prev, p_new) = p.split_at_mut(nu + 1);
            let (lp_prev, lp_new) = lp.split_at_mut(nu + 1);
            p_new[0].copy_from_slice(&e);
            lp_new[0].copy_from_slice(&le);
            for l in 0..=nu {
                let alpha = -dot(&le, &lp_prev[l]) / denoms[l];
                for i in 0..n {
                    p_new[0][i] += alpha * p_prev[l][i];
                    lp_new[0][i] += alpha * lp_prev[l][i];
                }
            }
        }
        // restart: the freshest direction becomes index 0
        p.swap(0, k);
        lp.swap(0, k);
        report.restarts += 1;
    }
    report.residual_history = history;
    Ok((psi, report))
}
