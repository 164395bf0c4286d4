//! Per-level process rates: the explicit anti-symmetric matrix `A`, the
//! implicit matrix `B`, and the positivity scaling of explicit sinks.
//!
//! Conventions: `A[x][y] > 0` is an explicit source of category `x` paired
//! with the sink entry `A[y][x] = -A[x][y]`; diagonals hold external
//! sources. `B[x][y] > 0` is an implicit pathway feeding `x` from `y`
//! (multiplying `q_y` at the new time level), zero on the diagonal.
//! Category indices: 0 vapour, 1 liquid, 2 ice, 3 rain, 4 snow.

use super::constants::*;
use super::{ColumnState, NCAT, QI, QL, QR, QS, QV};
use crate::error::{DwarfError, Result};

/// Explicit/implicit source matrices and fall speeds for one level.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceMatrices {
    pub a: [[f64; NCAT]; NCAT],
    pub b: [[f64; NCAT]; NCAT],
    pub fall_speed: [f64; NCAT],
    /// explicit cloud-fraction source accumulator (per step, dimensionless)
    pub a_cloud: f64,
    /// implicit cloud-fraction sink accumulator (per step, dimensionless)
    pub b_cloud: f64,
    /// signed saturation-adjustment mass for diagnostics [kg/kg]
    pub sat_adjust: f64,
}

impl SourceMatrices {
    fn empty() -> Self {
        Self {
            a: [[0.0; NCAT]; NCAT],
            b: [[0.0; NCAT]; NCAT],
            fall_speed: FALL_SPEED,
            a_cloud: 0.0,
            b_cloud: 0.0,
            sat_adjust: 0.0,
        }
    }

    /// Record a conserving explicit pair: `rate >= 0` transfers from `from`
    /// into `to`.
    fn put_pair(&mut self, to: usize, from: usize, rate: f64, process: &str) -> Result<()> {
        if !rate.is_finite() {
            return Err(DwarfError::NonFiniteRate(process.to_string()));
        }
        self.a[to][from] += rate;
        self.a[from][to] -= rate;
        Ok(())
    }

    fn put_implicit(&mut self, to: usize, from: usize, rate: f64, process: &str) -> Result<()> {
        if !rate.is_finite() {
            return Err(DwarfError::NonFiniteRate(process.to_string()));
        }
        self.b[to][from] += rate;
        Ok(())
    }

    /// Net explicit source of category `x` (row sum, diagonal included).
    pub fn explicit_sum(&self, x: usize) -> f64 {
        self.a[x].iter().sum()
    }
}

/// Build the process rates for one level of the column.
///
/// Pathways: saturation adjustment (condensation into liquid/ice split by
/// the mixed-phase fraction, or evaporation of existing condensate),
/// Sundqvist autoconversion liquid->rain (explicit), ice->snow
/// autoconversion (implicit), riming of cloud liquid by snow (implicit),
/// melting of ice and snow into rain, freezing of rain into snow, where
/// homogeneous freezing converts all cloud liquid to ice, and rain/snow
/// evaporation back to vapour in the cloud-free fraction.
pub fn build_process_rates(state: &ColumnState, level: usize) -> Result<SourceMatrices> {
    let k = level;
    let t = state.t[k];
    let p = state.rho[k] * R_DRY * t; // ideal-gas pressure stand-in
    let dt = state.dt;
    let (qv, ql, qi, qr, qs) = (
        state.qv[k],
        state.ql[k],
        state.qi[k],
        state.qr[k],
        state.qs[k],
    );
    let a_frac = state.a[k];
    let mut m = SourceMatrices::empty();

    // condensation / evaporation: one Newton step of the saturation
    // adjustment
    let qsat = q_sat_mixed(t, p);
    let lheat = latent_effective(t);
    let gamma = 1.0 + (lheat / CP) * lheat * qsat / (R_VAP * t * t);
    let dq = (qv - qsat) / gamma;
    m.sat_adjust = dq;
    if dq > 0.0 {
        // condensation of new/existing cloud, split by phase
        let alpha = liquid_fraction(t);
        let rate = dq / dt;
        m.put_pair(QL, QV, alpha * rate, "condensation-liquid")?;
        m.put_pair(QI, QV, (1.0 - alpha) * rate, "condensation-ice")?;
        m.a_cloud = (1.0 - a_frac) * (dq / qsat).min(1.0);
    } else if dq < 0.0 && ql + qi > 0.0 {
        // evaporation of existing cloud condensate, proportional split
        let demand = -dq / dt;
        let rate_l = demand * ql / (ql + qi);
        let rate_i = demand * qi / (ql + qi);
        m.put_pair(QV, QL, rate_l, "cloud-evaporation-liquid")?;
        m.put_pair(QV, QI, rate_i, "cloud-evaporation-ice")?;
        m.b_cloud = (dt * demand / (ql + qi)).min(1e3);
    }

    // autoconversion of liquid to rain (explicit, Sundqvist form)
    if ql > 0.0 {
        let s = ql * K_AUTO_RAIN * (1.0 - (-(ql / Q_CRIT_AUTO).powi(2)).exp());
        m.put_pair(QR, QL, s, "autoconversion-rain")?;
    }

    // autoconversion of ice to snow (implicit)
    if qi > 0.0 {
        let rate = K_AUTO_SNOW * (C_AUTO_SNOW_T * (t - T0)).exp();
        m.put_implicit(QS, QI, rate, "autoconversion-snow")?;
    }

    // riming: collection of cloud liquid by falling snow (implicit)
    if t < T_MELT && qs > 0.0 && ql > 0.0 {
        m.put_implicit(QS, QL, K_RIME * qs, "riming")?;
    }

    // melting of ice and snow into rain
    if t > T_MELT {
        let excess = t - T_MELT;
        if qi > 0.0 {
            m.put_pair(QR, QI, qi * K_MELT * excess, "melting-ice")?;
        }
        if qs > 0.0 {
            m.put_pair(QR, QS, qs * K_MELT * excess, "melting-snow")?;
        }
    }

    // freezing of rain into snow
    if t < T_RAIN_FRZ && qr > 0.0 {
        let s = qr * K_RAIN_FRZ * (T_RAIN_FRZ - t);
        m.put_pair(QS, QR, s, "freezing-rain")?;
    }

    // homogeneous freezing of cloud liquid
    if t < T_HOMOG_FRZ && ql > 0.0 {
        m.put_pair(QI, QL, ql / dt, "freezing-liquid")?;
    }

    // rain evaporation in the cloud-free fraction
    let qsw = q_sat_water(t, p);
    if qr > 0.0 && qv < qsw {
        let subsat = 1.0 - qv / qsw;
        m.put_pair(QV, QR, K_EVAP_RAIN * qr * subsat * (1.0 - a_frac), "rain-evaporation")?;
    }

    // snow sublimation in the cloud-free fraction
    let qsi = q_sat_ice(t, p);
    if qs > 0.0 && qv < qsi {
        let subsat = 1.0 - qv / qsi;
        m.put_pair(QV, QS, K_EVAP_SNOW * qs * subsat * (1.0 - a_frac), "snow-evaporation")?;
    }

    Ok(m)
}

/// Scale explicit sinks so no category is driven negative.
///
/// For each category the total explicit sink over the step is compared with
/// the available content; on overshoot every sink entry of that category
/// (and its conserving mirror) is multiplied by the common factor that
/// empties the category exactly. Factors are computed from the unscaled
/// matrices first, then applied, so categories stay independent.
pub fn scale_sinks(state: &ColumnState, m: &SourceMatrices, level: usize) -> SourceMatrices {
    let dt = state.dt;
    let q = [
        state.qv[level],
        state.ql[level],
        state.qi[level],
        state.qr[level],
        state.qs[level],
    ];
    let mut factors = [1.0f64; NCAT];
    for x in 0..NCAT {
        let mut sink = 0.0;
        for y in 0..NCAT {
            if y != x && m.a[x][y] < 0.0 {
                sink -= m.a[x][y];
            }
        }
        if sink > 0.0 && dt * sink > q[x] {
            factors[x] = q[x] / (dt * sink);
        }
    }
    let mut out = m.clone();
    for x in 0..NCAT {
        if factors[x] == 1.0 {
            continue;
        }
        for y in 0..NCAT {
            if y != x && out.a[x][y] < 0.0 {
                out.a[x][y] *= factors[x];
                out.a[y][x] *= factors[x];
            }
        }
    }
    out
}
