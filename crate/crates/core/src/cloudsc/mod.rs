//! Column-wise cloud and precipitation microphysics with an implicit
//! per-level solve.
//!
//! Five water categories (vapour, cloud liquid, cloud ice, rain, snow) plus
//! a grid-box cloud fraction are stepped level by level from the model top
//! down: process rates populate the explicit anti-symmetric matrix `A` and
//! the implicit matrix `B`, the cloud fraction is updated by the scalar
//! implicit formula `a' = (a + A_a) / (1 + B_a)`, explicit sinks are scaled
//! for positivity, and the category system is solved by non-pivoting LU.
//! Sedimentation acts downward only, so each level consumes the already
//! updated contents of the level above. The temperature tendency is
//! assembled from the realized phase-change fluxes after the solve.

pub mod constants;
pub mod processes;
pub mod solver;

pub use processes::{build_process_rates, scale_sinks, SourceMatrices};
pub use solver::solve_level;

use crate::error::{DwarfError, Result};
use crate::util::BitChecksum;
use constants::{CP, L_FUS, L_VAP};
use rayon::prelude::*;

/// Number of water categories.
pub const NCAT: usize = 5;
pub const QV: usize = 0;
pub const QL: usize = 1;
pub const QI: usize = 2;
pub const QR: usize = 3;
pub const QS: usize = 4;

/// Per-column prognostic profiles, levels ordered top to bottom.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnState {
    pub klev: usize,
    pub t: Vec<f64>,
    pub qv: Vec<f64>,
    pub ql: Vec<f64>,
    pub qi: Vec<f64>,
    pub qr: Vec<f64>,
    pub qs: Vec<f64>,
    /// cloud fraction in [0, 1]
    pub a: Vec<f64>,
    pub rho: Vec<f64>,
    pub dz: Vec<f64>,
    pub dt: f64,
}

impl ColumnState {
    pub fn validate(&self) -> Result<()> {
        let k = self.klev;
        if [
            self.t.len(),
            self.qv.len(),
            self.ql.len(),
            self.qi.len(),
            self.qr.len(),
            self.qs.len(),
            self.a.len(),
            self.rho.len(),
            self.dz.len(),
        ]
        .iter()
        .any(|&l| l != k)
        {
            return Err(DwarfError::Contract("column profile length mismatch".into()));
        }
        if self.dt <= 0.0 {
            return Err(DwarfError::Contract("dt must be positive".into()));
        }
        for lev in 0..k {
            if self.dz[lev] <= 0.0 || self.rho[lev] <= 0.0 {
                return Err(DwarfError::Contract("dz and rho must be positive".into()));
            }
            if self.qv[lev] < 0.0
                || self.ql[lev] < 0.0
                || self.qi[lev] < 0.0
                || self.qr[lev] < 0.0
                || self.qs[lev] < 0.0
            {
                return Err(DwarfError::Contract("negative water content".into()));
            }
            if !(0.0..=1.0).contains(&self.a[lev]) {
                return Err(DwarfError::Contract("cloud fraction outside [0,1]".into()));
            }
        }
        Ok(())
    }

    fn q(&self, level: usize) -> [f64; NCAT] {
        [
            self.qv[level],
            self.ql[level],
            self.qi[level],
            self.qr[level],
            self.qs[level],
        ]
    }
}

/// Tendencies and diagnostic fluxes produced by one column step.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnTendencies {
    pub dt_dt: Vec<f64>,
    pub dq_dt: Vec<[f64; NCAT]>,
    pub da_dt: Vec<f64>,
    /// sedimentation flux through the bottom of each level [kg/(m^2 s)]
    pub flux_bottom: Vec<[f64; NCAT]>,
    /// sedimentation contribution to dq/dt, for budget audits
    pub sed_dq_dt: Vec<[f64; NCAT]>,
}

impl ColumnTendencies {
    pub fn push_into(&self, sum: &mut BitChecksum) {
        for k in 0..self.dt_dt.len() {
            sum.push_f64(self.dt_dt[k]);
            for x in 0..NCAT {
                sum.push_f64(self.dq_dt[k][x]);
            }
            sum.push_f64(self.da_dt[k]);
        }
    }
}

/// Latent-heat coefficient for a transfer `from -> to` [J/kg].
fn latent_coeff(to: usize, from: usize) -> f64 {
    let phase = |x: usize| -> i32 {
        match x {
            QV => 0,
            QL | QR => 1,
            _ => 2, // ice phase
        }
    };
    let (pf, pt) = (phase(from), phase(to));
    match (pf, pt) {
        (0, 1) => L_VAP,
        (1, 0) => -L_VAP,
        (0, 2) => L_VAP + L_FUS,
        (2, 0) => -(L_VAP + L_FUS),
        (1, 2) => L_FUS,
        (2, 1) => -L_FUS,
        _ => 0.0,
    }
}

/// Advance one column by one timestep, top level down.
pub fn cloud_column_step(state: &ColumnState) -> Result<ColumnTendencies> {
    state.validate()?;
    let klev = state.klev;
    let dt = state.dt;
    let mut out = ColumnTendencies {
        dt_dt: vec![0.0; klev],
        dq_dt: vec![[0.0; NCAT]; klev],
        da_dt: vec![0.0; klev],
        flux_bottom: vec![[0.0; NCAT]; klev],
        sed_dq_dt: vec![[0.0; NCAT]; klev],
    };
    let mut above: Option<([f64; NCAT], usize)> = None; // (q^{n+1}, level)
    for k in 0..klev {
        let rates = build_process_rates(state, k)?;
        // cloud cover update: a' = (a + A_a) / (1 + B_a)
        let a_new = (state.a[k] + rates.a_cloud) / (1.0 + rates.b_cloud);
        if !(0.0..=1.0 + 1e-12).contains(&a_new) {
            return Err(DwarfError::Contract(format!(
                "cloud fraction {a_new} left [0,1] at level {k}"
            )));
        }
        let a_new = a_new.min(1.0);
        let scaled = scale_sinks(state, &rates, k);
        // sedimentation inflow from the level above, using its updated contents
        let mut inflow = [0.0; NCAT];
        if let Some((qa, ka)) = above {
            for (x, q) in qa.iter().enumerate() {
                inflow[x] =
                    state.rho[ka] * scaled.fall_speed[x] * q / (state.rho[k] * state.dz[k]);
            }
        }
        let q_new = solve_level(state, &scaled, k, &inflow)?;
        for (x, q) in q_new.iter().enumerate() {
            if *q < -1e-12 {
                return Err(DwarfError::Contract(format!(
                    "negative content {q} in category {x} at level {k}"
                )));
            }
        }
        let q_new: [f64; NCAT] = std::array::from_fn(|x| q_new[x].max(0.0));

        let q_old = state.q(k);
        for x in 0..NCAT {
            out.dq_dt[k][x] = (q_new[x] - q_old[x]) / dt;
            out.flux_bottom[k][x] = state.rho[k] * scaled.fall_speed[x] * q_new[x];
            let influx = if let Some((qa, ka)) = above {
                state.rho[ka] * scaled.fall_speed[x] * qa[x]
            } else {
                0.0
            };
            out.sed_dq_dt[k][x] =
                (influx - out.flux_bottom[k][x]) / (state.rho[k] * state.dz[k]);
        }
        out.da_dt[k] = (a_new - state.a[k]) / dt;

        // temperature tendency from realized phase changes: explicit pairs
        // at their (scaled) rates, implicit pathways at B q^{n+1}
        let mut heating = 0.0;
        for to in 0..NCAT {
            for from in 0..NCAT {
                if to == from {
                    continue;
                }
                if scaled.a[to][from] > 0.0 {
                    heating += latent_coeff(to, from) * scaled.a[to][from];
                }
                if scaled.b[to][from] > 0.0 {
                    heating += latent_coeff(to, from) * scaled.b[to][from] * q_new[from];
                }
            }
        }
        out.dt_dt[k] = heating / CP;

        above = Some((q_new, k));
    }
    Ok(out)
}

/// Seeded synthetic column generator: a tropical-ish profile with a cloud
/// layer, used in place of the unavailable binary input data.
pub fn synthetic_columns(count: usize, klev: usize, dt: f64, seed: u64) -> Vec<ColumnState> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let dz = 12_000.0 / klev as f64;
        let mut t = Vec::with_capacity(klev);
        let mut qv = Vec::with_capacity(klev);
        let mut ql = vec![0.0; klev];
        let mut qi = vec![0.0; klev];
        let mut qr = vec![0.0; klev];
        let mut qs = vec![0.0; klev];
        let mut a = vec![0.0; klev];
        let mut rho = Vec::with_capacity(klev);
        for k in 0..klev {
            // level k counts from the top; z is height above ground
            let z = (klev - 1 - k) as f64 * dz + 0.5 * dz;
            let temp = (300.0 - 0.0065 * z).max(205.0) + rng.gen_range(-1.0..1.0);
            let p = 101_325.0 * (-z / 8_000.0).exp();
            let dens = p / (constants::R_DRY * temp);
            let rh = if z < 3_000.0 {
                0.75 + rng.gen_range(0.0..0.2)
            } else {
                0.25 + rng.gen_range(0.0..0.3)
            };
            t.push(temp);
            rho.push(dens);
            qv.push(rh * constants::q_sat_mixed(temp, p));
            if (2_000.0..7_000.0).contains(&z) {
                a[k] = rng.gen_range(0.1..0.9);
                if temp > constants::T_MELT {
                    ql[k] = rng.gen_range(0.0..5e-4);
                } else {
                    ql[k] = rng.gen_range(0.0..2e-4);
                    qi[k] = rng.gen_range(0.0..3e-4);
                }
            }
            if z < 2_500.0 {
                qr[k] = rng.gen_range(0.0..1e-4);
            }
            if (4_000.0..9_000.0).contains(&z) {
                qs[k] = rng.gen_range(0.0..1e-4);
            }
        }
        out.push(ColumnState {
            klev,
            t,
            qv,
            ql,
            qi,
            qr,
            qs,
            a,
            rho,
            dz: vec![dz; klev],
            dt,
        });
    }
    out
}

#[derive(Debug, Clone)]
pub struct CloudBenchReport {
    pub ngptot: usize,
    pub nproma: usize,
    pub threads: usize,
    pub seconds: f64,
    pub checksum: u64,
}

/// NPROMA-blocked multi-column benchmark.
///
/// 100 synthetic base columns are inflated to `ngptot` by modulo
/// replication and processed in blocks of `nproma` on `threads` workers.
/// The checksum runs over tendencies in column-index order, so it is
/// invariant under the block size and thread count.
pub fn cloudsc_bench(
    ngptot: usize,
    klev: usize,
    nproma: usize,
    threads: usize,
    seed: u64,
) -> Result<CloudBenchReport> {
    if ngptot < 1 || nproma < 1 {
        return Err(DwarfError::Contract("ngptot and nproma must be >= 1".into()));
    }
    let base = synthetic_columns(100, klev, 1800.0, seed);
    let columns: Vec<&ColumnState> = (0..ngptot).map(|i| &base[i % base.len()]).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| DwarfError::Contract(format!("thread pool: {e}")))?;
    let t0 = std::time::Instant::now();
    let results: Vec<Result<Vec<ColumnTendencies>>> = pool.install(|| {
        columns
            .par_chunks(nproma)
            .map(|block| block.iter().map(|c| cloud_column_step(c)).collect())
            .collect()
    });
    let seconds = t0.elapsed().as_secs_f64();
    let mut sum = BitChecksum::new();
    for block in results {
        for tend in block? {
            tend.push_into(&mut sum);
        }
    }
    Ok(CloudBenchReport {
        ngptot,
        nproma,
        threads,
        seconds,
        checksum: sum.finish(),
    })
}
