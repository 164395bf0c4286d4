//! Passive semi-Lagrangian tracer advection on the sphere with prescribed
//! winds.
//!
//! Each step traces a trajectory backward from every gridpoint (the arrival
//! point) to its departure point, using either the iterative mid-point rule
//! with `V^{t+dt/2} = 1.5 V^t - 0.5 V^{t-dt}` or the SETTLS scheme with
//! `V* = 2 V^t - V^{t-dt}`, then interpolates every tracer at the departure
//! point. Spherical geometry is handled by the rotation-matrix method
//! (displacement along the great circle tangent to the transported wind);
//! the naive rectangular (lon, lat) update is retained for comparison and
//! is exact only on the equator. Wind interpolation is linear; tracer
//! interpolation is tri-linear, tri-cubic, or the 32-point quasi-tri-cubic
//! kernel, optionally limited.

use crate::error::{DwarfError, Result};
use crate::grids::{field_norms, hill_value, Field3d, GaussianGrid};
use crate::interp::{
    compute_weights, cubic_basis, laitri, quasi_monotone_clip, tricubic64, trilinear,
    InterpWeights, Kqm, Stencil32,
};
use crate::util::BitChecksum;
use rayon::prelude::*;
use std::time::Instant;

/// Departure-point spherical handling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum DpMethod {
    /// naive (lon, lat) arithmetic; inaccurate away from the equator
    RitchieRectangular,
    /// great-circle rotation of the local displacement (default)
    RotationMatrix,
}

/// Wind time-extrapolation for the trajectory solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum DpExtrap {
    /// mid-point rule with second-order extrapolation
    SecondOrder,
    /// stable two-time-level extrapolation (default)
    Settls,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum InterpMethod {
    TriLinear,
    TriCubic,
    QuasiTriCubic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum InitCase {
    SolidBody,
    RossbyHaurwitz,
}

/// Full configuration of the advection dwarf.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SlConfig {
    pub dp_meth: DpMethod,
    pub dp_extrap: DpExtrap,
    pub interp_meth: InterpMethod,
    /// quasi-monotone limiter for the cubic schemes
    pub lqm: bool,
    pub ndp_iter: usize,
    pub nsteps: usize,
    pub ntrac: usize,
    pub nlev: usize,
    pub init: InitCase,
    /// output frequency in timesteps (0 = never)
    pub iout: usize,
    /// accepted for interface fidelity; inert on a global single-process field
    pub halo: usize,
    pub dt: f64,
    /// wind speed scale (angular rate for solid-body rotation)
    pub u0: f64,
    /// solid-body rotation-axis tilt
    pub tilt: f64,
    pub hill_center: (f64, f64),
    pub hill_height: f64,
}

impl Default for SlConfig {
    fn default() -> Self {
        // defaults give max CFL about 3 on the O32-analog grid and close a
        // full revolution in nsteps
        let nsteps = 22;
        Self {
            dp_meth: DpMethod::RotationMatrix,
            dp_extrap: DpExtrap::Settls,
            interp_meth: InterpMethod::QuasiTriCubic,
            lqm: true,
            ndp_iter: 3,
            nsteps,
            ntrac: 1,
            nlev: 4,
            init: InitCase::SolidBody,
            iout: 0,
            halo: 0,
            dt: 2.0 * std::f64::consts::PI / nsteps as f64,
            u0: 1.0,
            tilt: 0.0,
            hill_center: (std::f64::consts::PI, 0.0),
            hill_height: 1.0,
        }
    }
}

impl SlConfig {
    /// Map the numeric flag codes onto the enums
    /// (`dp_meth` 1/2, `dp_extrap` 1/2, `interp_meth` 1/3/4, `init` 1/2).
    pub fn from_codes(
        dp_meth: u8,
        dp_extrap: u8,
        interp_meth: u8,
        init: u8,
    ) -> Result<(DpMethod, DpExtrap, InterpMethod, InitCase)> {
        let dm = match dp_meth {
            1 => DpMethod::RitchieRectangular,
            2 => DpMethod::RotationMatrix,
            v => return Err(DwarfError::Config(format!("dp_meth {v} not in {{1,2}}"))),
        };
        let de = match dp_extrap {
            1 => DpExtrap::SecondOrder,
            2 => DpExtrap::Settls,
            v => return Err(DwarfError::Config(format!("dp_extrap {v} not in {{1,2}}"))),
        };
        let im = match interp_meth {
            1 => InterpMethod::TriLinear,
            3 => InterpMethod::TriCubic,
            4 => InterpMethod::QuasiTriCubic,
            v => {
                return Err(DwarfError::Config(format!(
                    "interp_meth {v} not in {{1,3,4}}"
                )))
            }
        };
        let ic = match init {
            1 => InitCase::SolidBody,
            2 => InitCase::RossbyHaurwitz,
            v => return Err(DwarfError::Config(format!("init {v} not in {{1,2}}"))),
        };
        Ok((dm, de, im, ic))
    }

    fn validate(&self) -> Result<()> {
        if self.ndp_iter < 1 {
            return Err(DwarfError::Contract("ndp_iter must be >= 1".into()));
        }
        if self.nlev < 4 {
            return Err(DwarfError::Contract("nlev minimum is 4".into()));
        }
        if self.dt <= 0.0 {
            return Err(DwarfError::Contract("dt must be positive".into()));
        }
        Ok(())
    }
}

/// Wind components at two time levels, all as level-major fields.
#[derive(Debug, Clone)]
pub struct WindField {
    pub u_now: Field3d,
    pub v_now: Field3d,
    pub w_now: Field3d,
    pub u_prev: Field3d,
    pub v_prev: Field3d,
    pub w_prev: Field3d,
}

impl WindField {
    /// Reverse the wind direction (for reversibility experiments).
    pub fn reversed(&self) -> Self {
        let flip = |f: &Field3d| {
            let mut g = f.clone();
            for v in g.values.iter_mut() {
                *v = -*v;
            }
            g
        };
        Self {
            u_now: flip(&self.u_now),
            v_now: flip(&self.v_now),
            w_now: flip(&self.w_now),
            u_prev: flip(&self.u_prev),
            v_prev: flip(&self.v_prev),
            w_prev: flip(&self.w_prev),
        }
    }
}

/// Time-extrapolated wind arrays: `1.5 V^t - 0.5 V^{t-dt}` for the
/// mid-point rule, `2 V^t - V^{t-dt}` for SETTLS.
///
/// Evaluated as `V^t + c (V^t - V^{t-dt})` so steady winds extrapolate to
/// themselves bit-exactly.
pub fn extrapolate_wind(wind: &WindField, mode: DpExtrap) -> (Field3d, Field3d, Field3d) {
    let c = match mode {
        DpExtrap::SecondOrder => 0.5,
        DpExtrap::Settls => 1.0,
    };
    let combine = |now: &Field3d, prev: &Field3d| {
        let mut out = now.clone();
        for (o, (a, b)) in out
            .values
            .iter_mut()
            .zip(now.values.iter().zip(&prev.values))
        {
            *o = a + c * (a - b);
        }
        out
    };
    (
        combine(&wind.u_now, &wind.u_prev),
        combine(&wind.v_now, &wind.v_prev),
        combine(&wind.w_now, &wind.w_prev),
    )
}

/// Departure coordinates per gridpoint per level, plus iteration
/// diagnostics.
#[derive(Debug, Clone)]
pub struct DeparturePointSet {
    pub lon: Vec<f64>,
    pub lat: Vec<f64>,
    pub eta: Vec<f64>,
    pub iterations: usize,
    pub vertical_clamps: usize,
    /// max displacement change per iteration, for convergence diagnostics
    pub iter_deltas: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Vec3 {
    x: f64,
    y: f64,
    z: f64,
}

impl Vec3 {
    fn from_sphere(lon: f64, lat: f64) -> Self {
        Self {
            x: lat.cos() * lon.cos(),
            y: lat.cos() * lon.sin(),
            z: lat.sin(),
        }
    }

    fn to_sphere(self) -> (f64, f64) {
        let lon = self.y.atan2(self.x).rem_euclid(2.0 * std::f64::consts::PI);
        let lat = self.z.atan2((self.x * self.x + self.y * self.y).sqrt());
        (lon, lat)
    }

    fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    fn scale(self, s: f64) -> Self {
        Self {
            x: self.x * s,
            y: self.y * s,
            z: self.z * s,
        }
    }

    fn sub(self, o: Self) -> Self {
        Self {
            x: self.x - o.x,
            y: self.y - o.y,
            z: self.z - o.z,
        }
    }

    fn add(self, o: Self) -> Self {
        Self {
            x: self.x + o.x,
            y: self.y + o.y,
            z: self.z + o.z,
        }
    }
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    Vec3 {
        x: a.y * b.z - a.z * b.y,
        y: a.z * b.x - a.x * b.z,
        z: a.x * b.y - a.y * b.x,
    }
}

/// Parallel transport of a tangent vector along the great circle from
/// `from` to `to` (the rotation-matrix step: Rodrigues rotation about the
/// common normal of the two position vectors).
fn transport(v: Vec3, from: Vec3, to: Vec3) -> Vec3 {
    let axis = cross(from, to);
    let s = axis.norm(); // sin of the separation angle
    let c = from.dot(to);
    if s == 0.0 {
        return v;
    }
    let n = axis.scale(1.0 / s);
    let ncv = cross(n, v);
    v.scale(c).add(ncv.scale(s)).add(n.scale(n.dot(v) * (1.0 - c)))
}

/// Local east/north unit vectors at (lon, lat).
fn local_basis(lon: f64, lat: f64) -> (Vec3, Vec3) {
    let east = Vec3 {
        x: -lon.sin(),
        y: lon.cos(),
        z: 0.0,
    };
    let north = Vec3 {
        x: -lat.sin() * lon.cos(),
        y: -lat.sin() * lon.sin(),
        z: lat.cos(),
    };
    (east, north)
}

/// Precomputed geometry of a full Gaussian grid for the advection kernels.
struct Geom<'g> {
    grid: &'g GaussianGrid,
    nlon: usize,
    dlam: f64,
    /// co-latitudes of the physical rows, increasing north -> south
    theta: Vec<f64>,
    nlev: usize,
}

impl<'g> Geom<'g> {
    fn new(grid: &'g GaussianGrid, nlev: usize) -> Result<Self> {
        if !grid.is_full() {
            return Err(DwarfError::Contract(
                "advection requires a full Gaussian grid".into(),
            ));
        }
        let nlon = grid.nlon_per_lat[0];
        Ok(Self {
            grid,
            nlon,
            dlam: 2.0 * std::f64::consts::PI / nlon as f64,
            theta: (0..grid.nlat).map(|k| grid.colatitude_rad(k)).collect(),
            nlev,
        })
    }

    /// Co-latitude of a virtual row (rows beyond the poles reflect).
    fn virtual_theta(&self, i: i64) -> f64 {
        let k = self.grid.nlat as i64;
        if i < 0 {
            -self.theta[(-1 - i) as usize]
        } else if i >= k {
            2.0 * std::f64::consts::PI - self.theta[(2 * k - 1 - i) as usize]
        } else {
            self.theta[i as usize]
        }
    }

    /// Flat horizontal index of a virtual (row, col); rows beyond the poles
    /// map to the reflected row with a half-revolution longitude shift.
    fn point_index(&self, row: i64, col: i64) -> usize {
        let k = self.grid.nlat as i64;
        let nlon = self.nlon as i64;
        let (r, shift) = if row < 0 {
            ((-1 - row) as usize, true)
        } else if row >= k {
            ((2 * k - 1 - row) as usize, true)
        } else {
            (row as usize, false)
        };
        let mut c = col.rem_euclid(nlon) as usize;
        if shift {
            c = (c + self.nlon / 2) % self.nlon;
        }
        self.grid.row_offset(r) + c
    }

    /// Crossing the pole flips the sign of vector components.
    fn pole_sign(&self, row: i64) -> f64 {
        let k = self.grid.nlat as i64;
        if row < 0 || row >= k {
            -1.0
        } else {
            1.0
        }
    }

    /// Bracketing virtual row r with theta_r <= theta < theta_{r+1}.
    fn locate_row(&self, theta: f64) -> i64 {
        let k = self.grid.nlat;
        if theta < self.theta[0] {
            return -1;
        }
        if theta >= self.theta[k - 1] {
            return k as i64 - 1;
        }
        // binary search over physical rows
        let mut lo = 0usize;
        let mut hi = k - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.theta[mid] <= theta {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo as i64
    }

    /// Vertical coordinate of level centers.
    fn eta_of_level(&self, l: usize) -> f64 {
        (l as f64 + 0.5) / self.nlev as f64
    }

    /// Clamp eta into the level-center range; returns (eta, clamped).
    fn clamp_eta(&self, eta: f64) -> (f64, bool) {
        let lo = self.eta_of_level(0);
        let hi = self.eta_of_level(self.nlev - 1);
        if eta < lo {
            (lo, true)
        } else if eta > hi {
            (hi, true)
        } else {
            (eta, false)
        }
    }
}

/// Linear (bilinear horizontal + linear vertical) interpolation of one wind
/// component, with sign flips on across-pole ghost rows.
fn wind_linear(geom: &Geom, f: &Field3d, lon: f64, theta: f64, eta: f64, vector: bool) -> f64 {
    let x = lon.rem_euclid(2.0 * std::f64::consts::PI) / geom.dlam;
    let col = x.floor() as i64;
    let ax = x - x.floor();
    let row = geom.locate_row(theta);
    let t0 = geom.virtual_theta(row);
    let t1 = geom.virtual_theta(row + 1);
    let ay = ((theta - t0) / (t1 - t0)).clamp(0.0, 1.0);
    // vertical bracket
    let zpos = eta * geom.nlev as f64 - 0.5;
    let lv = (zpos.floor() as i64).clamp(0, geom.nlev as i64 - 2) as usize;
    let az = (zpos - lv as f64).clamp(0.0, 1.0);
    let mut vals = [0.0f64; 8];
    for (slot, (dl, dr, dc)) in [
        (0i64, 0i64, 0i64),
        (0, 0, 1),
        (0, 1, 0),
        (0, 1, 1),
        (1, 0, 0),
        (1, 0, 1),
        (1, 1, 0),
        (1, 1, 1),
    ]
    .iter()
    .enumerate()
    .map(|(s, t)| (s, *t))
    {
        let r = row + dr;
        let idx = geom.point_index(r, col + dc);
        let sign = if vector { geom.pole_sign(r) } else { 1.0 };
        vals[slot] = sign * f.level(lv + dl as usize)[idx];
    }
    trilinear(&vals, ax, ay, az)
}

/// Great-circle backward displacement from the arrival point by the wind
/// vector `v` (Cartesian) over `dt`; zero wind returns the arrival
/// coordinates bit-exactly.
fn move_rotation(ra: Vec3, arrival: (f64, f64), v: Vec3, dt: f64) -> (f64, f64) {
    let speed = v.norm();
    if speed == 0.0 {
        return arrival;
    }
    let delta = dt * speed;
    let tangent = v.sub(ra.scale(v.dot(ra)));
    let tnorm = tangent.norm();
    if tnorm == 0.0 {
        return arrival;
    }
    let rd = ra.scale(delta.cos()).sub(tangent.scale(delta.sin() / tnorm));
    rd.to_sphere()
}

/// Naive rectangular backward displacement (kept for comparison).
fn move_rectangular(arrival: (f64, f64), u: f64, v: f64, dt: f64) -> (f64, f64) {
    if u == 0.0 && v == 0.0 {
        return arrival;
    }
    let (lon, lat) = arrival;
    let lon_d = (lon - dt * u / lat.cos()).rem_euclid(2.0 * std::f64::consts::PI);
    let lat_d = (lat - dt * v).clamp(
        -std::f64::consts::FRAC_PI_2,
        std::f64::consts::FRAC_PI_2,
    );
    (lon_d, lat_d)
}

/// Solve the trajectory equation backward from every gridpoint.
pub fn departure_points(
    wind: &WindField,
    grid: &GaussianGrid,
    cfg: &SlConfig,
) -> Result<DeparturePointSet> {
    cfg.validate()?;
    let geom = Geom::new(grid, cfg.nlev)?;
    let npts = grid.total_points();
    let nlev = cfg.nlev;
    let (ue, ve, we) = extrapolate_wind(wind, cfg.dp_extrap);
    let dt = cfg.dt;

    let mut lon_d = vec![0.0; npts * nlev];
    let mut lat_d = vec![0.0; npts * nlev];
    let mut eta_d = vec![0.0; npts * nlev];
    let mut iter_deltas = vec![0.0f64; cfg.ndp_iter.saturating_sub(1)];
    let mut clamps = 0usize;

    for lev in 0..nlev {
        let eta_a = geom.eta_of_level(lev);
        let results: Vec<(f64, f64, f64, bool, Vec<f64>)> = (0..npts)
            .into_par_iter()
            .map(|idx| {
                // arrival coordinates (canonical grid accessors, so the
                // zero-wind shortcut reproduces them bit-exactly)
                let (row, col) = {
                    let mut r = 0usize;
                    while r + 1 < grid.nlat && grid.row_offset(r + 1) <= idx {
                        r += 1;
                    }
                    (r, idx - grid.row_offset(r))
                };
                let lon_a = grid.longitude_rad(row, col);
                let lat_a = grid.latitude_rad(row);
                let ua = wind.u_now.level(lev)[idx];
                let va = wind.v_now.level(lev)[idx];
                let wa = wind.w_now.level(lev)[idx];
                if ua == 0.0 && va == 0.0 && wa == 0.0 {
                    // zero wind: the departure point is the arrival point
                    return (lon_a, lat_a, eta_a, false, vec![0.0; cfg.ndp_iter - 1]);
                }
                let ra = Vec3::from_sphere(lon_a, lat_a);
                let (e_a, n_a) = local_basis(lon_a, lat_a);
                let va_vec = e_a.scale(ua).add(n_a.scale(va));
                let mut dp = match cfg.dp_meth {
                    DpMethod::RotationMatrix => move_rotation(ra, (lon_a, lat_a), va_vec, dt),
                    DpMethod::RitchieRectangular => move_rectangular((lon_a, lat_a), ua, va, dt),
                };
                let (mut eta, mut was_clamped) = geom.clamp_eta(eta_a - dt * wa);
                let mut deltas = Vec::with_capacity(cfg.ndp_iter - 1);
                for _nu in 2..=cfg.ndp_iter {
                    let prev = dp;
                    let theta_d = std::f64::consts::FRAC_PI_2 - dp.1;
                    let (qlon, qtheta, qeta, wtraj) = match cfg.dp_extrap {
                        DpExtrap::SecondOrder => {
                            // interpolate the mid-level wind at the midpoint
                            let rm = ra.add(Vec3::from_sphere(dp.0, dp.1)).scale(0.5);
                            let rm = rm.scale(1.0 / rm.norm().max(1e-300));
                            let (mlon, mlat) = rm.to_sphere();
                            let mtheta = std::f64::consts::FRAC_PI_2 - mlat;
                            let meta = 0.5 * (eta_a + eta);
                            (mlon, mtheta, meta, 1.0)
                        }
                        DpExtrap::Settls => {
                            let meta = eta;
                            (dp.0, theta_d, meta, 0.5)
                        }
                    };
                    let uq = wind_linear(&geom, &ue, qlon, qtheta, qeta, true);
                    let vq = wind_linear(&geom, &ve, qlon, qtheta, qeta, true);
                    let wq = wind_linear(&geom, &we, qlon, qtheta, qeta, false);
                    let qlat = std::f64::consts::FRAC_PI_2 - qtheta;
                    let (e_q, n_q) = local_basis(qlon, qlat);
                    let rq = Vec3::from_sphere(qlon, qlat);
                    // transport the interpolated wind to the arrival point
                    // before combining (the rotation-matrix step)
                    let vq_at_a = transport(e_q.scale(uq).add(n_q.scale(vq)), rq, ra);
                    let (wind_vec, weff) = match cfg.dp_extrap {
                        DpExtrap::SecondOrder => (vq_at_a, wq),
                        DpExtrap::Settls => {
                            (va_vec.add(vq_at_a).scale(0.5), wtraj * (wa + wq))
                        }
                    };
                    dp = match cfg.dp_meth {
                        DpMethod::RotationMatrix => {
                            move_rotation(ra, (lon_a, lat_a), wind_vec, dt)
                        }
                        DpMethod::RitchieRectangular => {
                            let (uu, vv) = match cfg.dp_extrap {
                                DpExtrap::SecondOrder => (uq, vq),
                                DpExtrap::Settls => (0.5 * (ua + uq), 0.5 * (va + vq)),
                            };
                            move_rectangular((lon_a, lat_a), uu, vv, dt)
                        }
                    };
                    let (e2, c2) = geom.clamp_eta(eta_a - dt * weff);
                    eta = e2;
                    was_clamped |= c2;
                    let dvec = Vec3::from_sphere(dp.0, dp.1)
                        .sub(Vec3::from_sphere(prev.0, prev.1));
                    deltas.push(dvec.norm());
                }
                (dp.0, dp.1, eta, was_clamped, deltas)
            })
            .collect();
        for (idx, (lo, la, et, cl, deltas)) in results.into_iter().enumerate() {
            let slot = lev * npts + idx;
            lon_d[slot] = lo;
            lat_d[slot] = la;
            eta_d[slot] = et;
            if cl {
                clamps += 1;
            }
            for (i, d) in deltas.iter().enumerate() {
                if *d > iter_deltas[i] {
                    iter_deltas[i] = *d;
                }
            }
        }
    }
    Ok(DeparturePointSet {
        lon: lon_d,
        lat: lat_d,
        eta: eta_d,
        iterations: cfg.ndp_iter,
        vertical_clamps: clamps,
        iter_deltas,
    })
}

/// Precomputed interpolation recipe for one departure point: stencil
/// indices and weights are built once and applied to every tracer.
enum InterpPlan {
    /// the departure point coincides bit-exactly with the arrival gridpoint
    Copy { slot: usize },
    TriLinear {
        idx: [usize; 8],
        ax: f64,
        ay: f64,
        az: f64,
    },
    TriCubic {
        idx: Box<[usize; 64]>,
        env: [usize; 8],
        wlon: [f64; 3],
        wlat: [f64; 3],
        wvert: [f64; 3],
        lqm: bool,
    },
    QuasiTriCubic(Box<(Stencil32, InterpWeights)>),
}

impl InterpPlan {
    fn apply(&self, values: &[f64]) -> f64 {
        match self {
            Self::Copy { slot } => values[*slot],
            Self::TriLinear { idx, ax, ay, az } => {
                let vals = std::array::from_fn(|i| values[idx[i]]);
                trilinear(&vals, *ax, *ay, *az)
            }
            Self::TriCubic {
                idx,
                env,
                wlon,
                wlat,
                wvert,
                lqm,
            } => {
                let vals = std::array::from_fn(|i| values[idx[i]]);
                let mut v = tricubic64(&vals, wlon, wlat, wvert);
                if *lqm {
                    let mut lo = f64::INFINITY;
                    let mut hi = f64::NEG_INFINITY;
                    for &e in env {
                        lo = lo.min(values[e]);
                        hi = hi.max(values[e]);
                    }
                    v = quasi_monotone_clip(v, (lo, hi));
                }
                v
            }
            Self::QuasiTriCubic(plan) => laitri(values, &plan.0, &plan.1),
        }
    }
}

/// Build the interpolation plan for one departure point.
fn build_plan(
    geom: &Geom,
    npts: usize,
    lon: f64,
    lat: f64,
    eta: f64,
    method: InterpMethod,
    lqm: bool,
) -> InterpPlan {
    let theta = std::f64::consts::FRAC_PI_2 - lat;
    let x = lon.rem_euclid(2.0 * std::f64::consts::PI) / geom.dlam;
    let col = x.floor() as i64;
    let ax = x - x.floor();
    let row = geom.locate_row(theta);
    let t0 = geom.virtual_theta(row);
    let t1 = geom.virtual_theta(row + 1);
    let ay = ((theta - t0) / (t1 - t0)).clamp(0.0, 1.0);
    let zpos = eta * geom.nlev as f64 - 0.5;

    let flat = |r: i64, c: i64, l: usize| l * npts + geom.point_index(r, c);

    match method {
        InterpMethod::TriLinear => {
            let lv = (zpos.floor() as i64).clamp(0, geom.nlev as i64 - 2) as usize;
            let az = (zpos - lv as f64).clamp(0.0, 1.0);
            let mut idx = [0usize; 8];
            let mut s = 0;
            for dl in 0..2usize {
                for dr in 0..2i64 {
                    for dc in 0..2i64 {
                        idx[s] = flat(row + dr, col + dc, lv + dl);
                        s += 1;
                    }
                }
            }
            InterpPlan::TriLinear { idx, ax, ay, az }
        }
        InterpMethod::TriCubic => {
            let base = ((zpos.floor() as i64) - 1).clamp(0, geom.nlev as i64 - 4) as usize;
            let az = zpos - (base as f64 + 1.0);
            let mut idx = Box::new([0usize; 64]);
            let mut s = 0;
            for dl in 0..4usize {
                for dr in -1..3i64 {
                    for dc in -1..3i64 {
                        idx[s] = flat(row + dr, col + dc, base + dl);
                        s += 1;
                    }
                }
            }
            // 2x2x2 limiter envelope around the departure point
            let lv = (zpos.floor() as i64).clamp(0, geom.nlev as i64 - 2) as usize;
            let mut env = [0usize; 8];
            let mut s = 0;
            for dl in 0..2usize {
                for dr in 0..2i64 {
                    for dc in 0..2i64 {
                        env[s] = flat(row + dr, col + dc, lv + dl);
                        s += 1;
                    }
                }
            }
            InterpPlan::TriCubic {
                idx,
                env,
                wlon: cubic_basis(ax),
                wlat: cubic_basis(ay),
                wvert: cubic_basis(az),
                lqm,
            }
        }
        InterpMethod::QuasiTriCubic => {
            let base = ((zpos.floor() as i64) - 1).clamp(0, geom.nlev as i64 - 4) as usize;
            let az = zpos - (base as f64 + 1.0);
            let lin = [0usize, 3].map(|dl| {
                [
                    flat(row, col, base + dl),
                    flat(row, col + 1, base + dl),
                    flat(row + 1, col, base + dl),
                    flat(row + 1, col + 1, base + dl),
                ]
            });
            let cubic_levels = [1usize, 2].map(|dl| {
                let l = base + dl;
                [
                    flat(row - 1, col, l),
                    flat(row - 1, col + 1, l),
                    flat(row, col - 1, l),
                    flat(row, col, l),
                    flat(row, col + 1, l),
                    flat(row, col + 2, l),
                    flat(row + 1, col - 1, l),
                    flat(row + 1, col, l),
                    flat(row + 1, col + 1, l),
                    flat(row + 1, col + 2, l),
                    flat(row + 2, col, l),
                    flat(row + 2, col + 1, l),
                ]
            });
            let st = Stencil32 {
                lin,
                cubic: cubic_levels,
            };
            let kqm = if lqm { Kqm::QuasiMonotone } else { Kqm::NonMonotone };
            InterpPlan::QuasiTriCubic(Box::new((st, compute_weights([ax; 4], ay, az, kqm))))
        }
    }
}

/// One semi-Lagrangian step: departure points, stencils and weights are
/// computed once per gridpoint, then every tracer is interpolated at its
/// departure point with the shared plan.
pub fn advect_step(
    tracers: &[Field3d],
    wind: &WindField,
    grid: &GaussianGrid,
    cfg: &SlConfig,
) -> Result<(Vec<Field3d>, DeparturePointSet)> {
    let geom = Geom::new(grid, cfg.nlev)?;
    let dps = departure_points(wind, grid, cfg)?;
    let npts = grid.total_points();
    for tr in tracers {
        if tr.nlev != cfg.nlev || tr.points_per_level != npts {
            return Err(DwarfError::Contract("tracer shape mismatch".into()));
        }
    }
    // build one plan per (level, gridpoint)
    let plans: Vec<Vec<InterpPlan>> = (0..cfg.nlev)
        .map(|lev| {
            let eta_a = geom.eta_of_level(lev);
            (0..npts)
                .into_par_iter()
                .map(|idx| {
                    let slot = lev * npts + idx;
                    let (lon, lat, eta) = (dps.lon[slot], dps.lat[slot], dps.eta[slot]);
                    let (row, col) = {
                        let mut r = 0usize;
                        while r + 1 < grid.nlat && grid.row_offset(r + 1) <= idx {
                            r += 1;
                        }
                        (r, idx - grid.row_offset(r))
                    };
                    if lon == grid.longitude_rad(row, col)
                        && lat == grid.latitude_rad(row)
                        && eta == eta_a
                    {
                        return InterpPlan::Copy { slot };
                    }
                    build_plan(&geom, npts, lon, lat, eta, cfg.interp_meth, cfg.lqm)
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(tracers.len());
    for tr in tracers {
        let mut new = tr.clone();
        for (lev, level_plans) in plans.iter().enumerate() {
            let vals: Vec<f64> = level_plans
                .par_iter()
                .map(|plan| plan.apply(&tr.values))
                .collect();
            new.level_mut(lev).copy_from_slice(&vals);
        }
        out.push(new);
    }
    Ok((out, dps))
}

/// Build the initial wind and tracer for a named test case; winds are
/// steady (both time slots equal).
pub fn init_case(grid: &GaussianGrid, cfg: &SlConfig) -> Result<(WindField, Field3d)> {
    let npts = grid.total_points();
    let nlev = cfg.nlev;
    let mut u = Field3d::zeros(nlev, npts, "u");
    let mut v = Field3d::zeros(nlev, npts, "v");
    let w = Field3d::zeros(nlev, npts, "w");
    for k in 0..grid.nlat {
        let lat = grid.latitude_rad(k);
        let off = grid.row_offset(k);
        for j in 0..grid.nlon_per_lat[k] {
            let lon = grid.longitude_rad(k, j);
            let (uu, vv) = match cfg.init {
                InitCase::SolidBody => {
                    let a = cfg.tilt;
                    (
                        cfg.u0 * (lat.cos() * a.cos() + lat.sin() * lon.cos() * a.sin()),
                        -cfg.u0 * lon.sin() * a.sin(),
                    )
                }
                InitCase::RossbyHaurwitz => {
                    // classical wavenumber-4 configuration on the unit
                    // sphere, angular rates scaled by u0
                    let r = 4.0;
                    let omega = cfg.u0;
                    let kk = cfg.u0;
                    let c = lat.cos();
                    let s = lat.sin();
                    (
                        omega * c
                            + kk * c.powf(r - 1.0) * (r * s * s - c * c) * (r * lon).cos(),
                        -kk * r * c.powf(r - 1.0) * s * (r * lon).sin(),
                    )
                }
            };
            for lev in 0..nlev {
                u.level_mut(lev)[off + j] = uu;
                v.level_mut(lev)[off + j] = vv;
            }
        }
    }
    let hill = crate::grids::gaussian_hill(grid, cfg.hill_center, cfg.hill_height)?;
    let mut tracer = Field3d::zeros(nlev, npts, "tracer");
    for lev in 0..nlev {
        tracer.level_mut(lev).copy_from_slice(hill.level(0));
    }
    let wind = WindField {
        u_now: u.clone(),
        v_now: v.clone(),
        w_now: w.clone(),
        u_prev: u,
        v_prev: v,
        w_prev: w,
    };
    Ok((wind, tracer))
}

/// Analytic solid-body solution (zero tilt): the initial hill shifted in
/// longitude by the accumulated rotation angle.
pub fn solid_body_analytic(
    grid: &GaussianGrid,
    cfg: &SlConfig,
    time: f64,
) -> Result<Field3d> {
    let shift = cfg.u0 * time;
    let center = (cfg.hill_center.0 + shift, cfg.hill_center.1);
    let npts = grid.total_points();
    let mut f = Field3d::zeros(cfg.nlev, npts, "analytic");
    for k in 0..grid.nlat {
        let lat = grid.latitude_rad(k);
        let off = grid.row_offset(k);
        for j in 0..grid.nlon_per_lat[k] {
            let lon = grid.longitude_rad(k, j);
            let val = hill_value(lon, lat, center, cfg.hill_height);
            for lev in 0..cfg.nlev {
                f.level_mut(lev)[off + j] = val;
            }
        }
    }
    Ok(f)
}

#[derive(Debug, Clone)]
pub struct AdvectionStepRow {
    pub step: usize,
    pub l2_err: f64,
    pub linf_err: f64,
    pub min: f64,
    pub max: f64,
    pub seconds: f64,
}

/// Callback receiving `(step, tracer)` at the configured output cadence.
pub type DumpSink<'a> = &'a mut (dyn FnMut(usize, &Field3d) -> Result<()> + Send);

#[derive(Debug, Clone)]
pub struct AdvectionReport {
    pub rows: Vec<AdvectionStepRow>,
    pub tracers: Vec<Field3d>,
    pub checksum: u64,
    pub vertical_clamps: usize,
}

/// Run the timestepping loop; error norms are measured against the analytic
/// solution for the untilted solid-body case and against the initial state
/// otherwise. Field dumps every `iout` steps go through `dump`.
pub fn run_advection(
    grid: &GaussianGrid,
    cfg: &SlConfig,
    mut dump: Option<DumpSink>,
) -> Result<AdvectionReport> {
    cfg.validate()?;
    let (wind, tracer0) = init_case(grid, cfg)?;
    let mut tracers: Vec<Field3d> = (0..cfg.ntrac.max(1)).map(|_| tracer0.clone()).collect();
    let mut rows = Vec::with_capacity(cfg.nsteps);
    let mut clamps = 0usize;
    for step in 1..=cfg.nsteps {
        let t0 = Instant::now();
        let (new, dps) = advect_step(&tracers, &wind, grid, cfg)?;
        tracers = new;
        clamps += dps.vertical_clamps;
        let seconds = t0.elapsed().as_secs_f64();
        let reference = if cfg.init == InitCase::SolidBody && cfg.tilt == 0.0 {
            solid_body_analytic(grid, cfg, step as f64 * cfg.dt)?
        } else {
            tracer0.clone()
        };
        let norms = field_norms(&tracers[0], &reference)?;
        let min = tracers[0].values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = tracers[0]
            .values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        rows.push(AdvectionStepRow {
            step,
            l2_err: norms.l2,
            linf_err: norms.linf,
            min,
            max,
            seconds,
        });
        if cfg.iout > 0 && step % cfg.iout == 0 {
            if let Some(d) = dump.as_mut() {
                d(step, &tracers[0])?;
            }
        }
    }
    let mut sum = BitChecksum::new();
    for tr in &tracers {
        sum.push_slice(&tr.values);
    }
    Ok(AdvectionReport {
        rows,
        tracers,
        checksum: sum.finish(),
        vertical_clamps: clamps,
    })
}
