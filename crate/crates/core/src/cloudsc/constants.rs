//! Physical constants and process-rate coefficients, in one table.
//!
//! The process structure (which explicit/implicit pathways exist) follows
//! the scheme's source/sink bookkeeping; the closed-form rate coefficients
//! below are minimal standard stand-ins (Sundqvist-style autoconversion,
//! linear melting, two-branch saturation fits, constant fall speeds) and do
//! not claim operational fidelity.

/// Dry-air heat capacity [J/(kg K)].
pub const CP: f64 = 1004.7;
/// Dry-air gas constant [J/(kg K)].
pub const R_DRY: f64 = 287.04;
/// Water-vapour gas constant [J/(kg K)].
pub const R_VAP: f64 = 461.5;
/// Ratio of gas constants.
pub const EPSILON: f64 = R_DRY / R_VAP;
/// Latent heat of condensation [J/kg].
pub const L_VAP: f64 = 2.5008e6;
/// Latent heat of freezing [J/kg].
pub const L_FUS: f64 = 3.337e5;
/// Triple-point temperature [K].
pub const T0: f64 = 273.16;
/// Melting threshold [K].
pub const T_MELT: f64 = 273.15;
/// Homogeneous freezing of cloud liquid [K].
pub const T_HOMOG_FRZ: f64 = 235.15;
/// Rain starts freezing below this temperature [K].
pub const T_RAIN_FRZ: f64 = 271.15;
/// All new condensate is ice below this temperature [K]; the liquid
/// fraction ramps linearly up to `T0`.
pub const T_ICE_ALL: f64 = 250.16;

/// Fall speeds [m/s] for (vapour, liquid, ice, rain, snow).
pub const FALL_SPEED: [f64; 5] = [0.0, 0.0, 0.15, 4.0, 1.0];

/// Sundqvist autoconversion rate scale, liquid to rain [1/s].
pub const K_AUTO_RAIN: f64 = 1.0e-3;
/// Autoconversion critical content [kg/kg].
pub const Q_CRIT_AUTO: f64 = 5.0e-4;
/// Ice-to-snow autoconversion base rate [1/s] (implicit).
pub const K_AUTO_SNOW: f64 = 1.0e-3;
/// Temperature factor in the ice-to-snow rate [1/K].
pub const C_AUTO_SNOW_T: f64 = 0.025;
/// Riming collection efficiency [1/s per kg/kg of snow] (implicit).
pub const K_RIME: f64 = 5.0;
/// Linear melting rate [1/(s K)].
pub const K_MELT: f64 = 5.0e-3;
/// Rain freezing rate [1/(s K)].
pub const K_RAIN_FRZ: f64 = 2.0e-2;
/// Rain evaporation rate per unit subsaturation [1/s].
pub const K_EVAP_RAIN: f64 = 1.0e-3;
/// Snow sublimation rate per unit subsaturation [1/s].
pub const K_EVAP_SNOW: f64 = 5.0e-4;

/// Saturation vapour pressure over water [Pa] (Buck-style fit).
pub fn e_sat_water(t: f64) -> f64 {
    611.21 * ((17.502 * (t - T0)) / (t - 32.19)).exp()
}

/// Saturation vapour pressure over ice [Pa] (Buck-style fit).
pub fn e_sat_ice(t: f64) -> f64 {
    611.21 * ((22.587 * (t - T0)) / (t + 0.7)).exp()
}

/// Liquid fraction of new condensate in the mixed-phase band.
pub fn liquid_fraction(t: f64) -> f64 {
    ((t - T_ICE_ALL) / (T0 - T_ICE_ALL)).clamp(0.0, 1.0)
}

/// Mixed-phase saturation specific humidity at temperature and pressure.
pub fn q_sat_mixed(t: f64, p: f64) -> f64 {
    let alpha = liquid_fraction(t);
    let es = alpha * e_sat_water(t) + (1.0 - alpha) * e_sat_ice(t);
    EPSILON * es / (p - (1.0 - EPSILON) * es)
}

/// Saturation specific humidity over water only.
pub fn q_sat_water(t: f64, p: f64) -> f64 {
    let es = e_sat_water(t);
    EPSILON * es / (p - (1.0 - EPSILON) * es)
}

/// Saturation specific humidity over ice only.
pub fn q_sat_ice(t: f64, p: f64) -> f64 {
    let es = e_sat_ice(t);
    EPSILON * es / (p - (1.0 - EPSILON) * es)
}

/// Effective latent heat for the saturation adjustment at temperature `t`.
pub fn latent_effective(t: f64) -> f64 {
    L_VAP + (1.0 - liquid_fraction(t)) * L_FUS
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saturation_fits_have_sane_anchor_points() {
        // ~611 Pa at the triple point for both branches
        assert!((e_sat_water(T0) - 611.21).abs() < 0.01);
        assert!((e_sat_ice(T0) - 611.21).abs() < 0.01);
        // water branch exceeds ice branch below freezing
        assert!(e_sat_water(250.0) > e_sat_ice(250.0));
        // ballpark: ~2.3 kPa at 293 K
        assert!((e_sat_water(293.15) - 2339.0).abs() < 50.0);
    }

    #[test]
    fn liquid_fraction_ramp() {
        assert_eq!(liquid_fraction(200.0), 0.0);
        assert_eq!(liquid_fraction(T0), 1.0);
        assert_eq!(liquid_fraction(300.0), 1.0);
        let mid = liquid_fraction(0.5 * (T_ICE_ALL + T0));
        assert!((mid - 0.5).abs() < 1e-12);
    }

    #[test]
    fn q_sat_increases_with_temperature() {
        let p = 85_000.0;
        assert!(q_sat_mixed(280.0, p) > q_sat_mixed(270.0, p));
        assert!(q_sat_mixed(270.0, p) > q_sat_mixed(250.0, p));
    }
}
