//! Per-level implicit solve: assemble the m x m system and solve it by
//! non-pivoting LU factorization with back substitution.

use super::processes::SourceMatrices;
use super::{ColumnState, NCAT};
use crate::error::{DwarfError, Result};

/// Non-pivoting LU solve of a small dense system, in place.
///
/// The assembled cloud matrix is strictly column-diagonally dominant with
/// unit-plus diagonal, so pivoting is unnecessary; a zero pivot still
/// raises an error rather than corrupting the solution.
pub fn lu_solve_nopivot<const N: usize>(mut m: [[f64; N]; N], mut rhs: [f64; N]) -> Result<[f64; N]> {
    for col in 0..N {
        let pivot = m[col][col];
        if pivot == 0.0 {
            return Err(DwarfError::SingularSystem(format!(
                "zero pivot at column {col}"
            )));
        }
        for row in col + 1..N {
            let f = m[row][col] / pivot;
            if f != 0.0 {
                for j in col..N {
                    m[row][j] -= f * m[col][j];
                }
                rhs[row] -= f * rhs[col];
            }
        }
    }
    let mut x = [0.0; N];
    for col in (0..N).rev() {
        let mut s = rhs[col];
        for j in col + 1..N {
            s -= m[col][j] * x[j];
        }
        x[col] = s / m[col][col];
    }
    Ok(x)
}

/// Assemble and solve the implicit update for one level.
///
/// Left-hand side: diagonal `1 + dt (V_x / dz + sum_y B[y][x])`,
/// off-diagonal `-dt B[x][y]`. Right-hand side: the explicit row sum and
/// the sedimentation inflow, `q^n + dt (A_sum + inflow)`, where `inflow`
/// carries `rho_{k-1} V_x q_{x,k-1}^{n+1} / (rho_k dz_k)` from the level
/// above (zero at the top). Right-hand sides are floored at zero (the
/// positivity scaling leaves at most rounding-level undershoot).
pub fn solve_level(
    state: &ColumnState,
    m: &SourceMatrices,
    level: usize,
    inflow: &[f64; NCAT],
) -> Result<[f64; NCAT]> {
    let dt = state.dt;
    let dz = state.dz[level];
    let q = [
        state.qv[level],
        state.ql[level],
        state.qi[level],
        state.qr[level],
        state.qs[level],
    ];
    let mut lhs = [[0.0; NCAT]; NCAT];
    let mut rhs = [0.0; NCAT];
    for x in 0..NCAT {
        let mut implicit_sinks = 0.0;
        for y in 0..NCAT {
            if y != x {
                implicit_sinks += m.b[y][x];
                lhs[x][y] = -dt * m.b[x][y];
            }
        }
        lhs[x][x] = 1.0 + dt * (m.fall_speed[x] / dz + implicit_sinks);
        rhs[x] = (q[x] + dt * (m.explicit_sum(x) + inflow[x])).max(0.0);
    }
    lu_solve_nopivot(lhs, rhs)
}
