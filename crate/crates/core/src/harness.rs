//! Unified configuration ingestion, dwarf dispatch, report output and the
//! regression registry.
//!
//! Every dwarf runs from a JSON document `{"dwarf": "...", "seed": ...,
//! "threads": ..., <dwarf keys>}`; unknown keys are rejected naming the
//! offending key. Reports carry per-metric rows plus a checksum over the
//! numeric payload (never over timings), so a report checksum is invariant
//! across reruns and thread counts. Exit-code contract: 0 success,
//! 1 verification failure, 2 configuration error.

use crate::error::{DwarfError, Result};
use crate::gcr::LinearOp;
use crate::util::BitChecksum;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::time::Instant;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "NWP_DWARFS_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DwarfKind {
    Sht,
    Bifourier,
    Gcr,
    Cloudsc,
    Laitri,
    Sladv,
}

impl DwarfKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Sht => "sht",
            Self::Bifourier => "bifourier",
            Self::Gcr => "gcr",
            Self::Cloudsc => "cloudsc",
            Self::Laitri => "laitri",
            Self::Sladv => "sladv",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShtParams {
    pub truncation: usize,
    pub nlev: usize,
    pub iters: usize,
    /// mirror of the norms switch: record per-iteration error norms
    pub norms: bool,
    /// number of fields to transform; extra fields are modulo copies
    pub fields: usize,
}

impl Default for ShtParams {
    fn default() -> Self {
        Self {
            truncation: 21,
            nlev: 1,
            iters: 100,
            norms: false,
            fields: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BiFourierParams {
    pub nx: usize,
    pub ny: usize,
    pub ext: usize,
    pub kind: crate::grids::GridKind,
    pub nfld: usize,
    pub iters: usize,
    /// optional NWPF dump holding the interior field (level 0 is used);
    /// defaults to the built-in analytic field
    pub input: Option<String>,
    /// spectral-space distribution parameters, parsed for interface
    /// fidelity but inert in a single process
    pub nprtrw: usize,
    pub nprtrv: usize,
    pub nprgpew: usize,
    pub nprgpns: usize,
}

impl Default for BiFourierParams {
    fn default() -> Self {
        Self {
            nx: 54,
            ny: 48,
            ext: 6,
            kind: crate::grids::GridKind::Linear,
            nfld: 1,
            iters: 100,
            input: None,
            nprtrw: 1,
            nprtrv: 1,
            nprgpew: 1,
            nprgpns: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HillParams {
    pub lon: f64,
    pub lat: f64,
    pub height: f64,
}

impl Default for HillParams {
    fn default() -> Self {
        Self {
            lon: std::f64::consts::PI,
            lat: 0.35,
            height: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GcrParams {
    /// spectral truncation of the Gaussian grid (laplacian2d)
    pub grid: usize,
    pub k: usize,
    pub eps: f64,
    pub max_restarts: usize,
    /// "laplacian2d" or "potential3d"
    pub problem: String,
    pub hill: HillParams,
    /// model depth H (potential3d)
    pub depth: f64,
    pub precond: String,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl Default for GcrParams {
    fn default() -> Self {
        Self {
            grid: 31,
            k: 3,
            eps: 1e-8,
            max_restarts: 100_000,
            problem: "laplacian2d".into(),
            hill: HillParams::default(),
            depth: 8.0,
            precond: "identity".into(),
            nx: 48,
            ny: 24,
            nz: 8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CloudscParams {
    pub ngptot: usize,
    pub klev: usize,
    pub nproma_list: Vec<usize>,
}

impl Default for CloudscParams {
    fn default() -> Self {
        Self {
            ngptot: 16_000,
            klev: 40,
            nproma_list: vec![1, 10, 100],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LaitriParams {
    pub kqm: u8,
    pub npoints: usize,
    pub nlev: usize,
}

impl Default for LaitriParams {
    fn default() -> Self {
        Self {
            kqm: 2,
            npoints: 100_000,
            nlev: 8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SladvParams {
    pub init: u8,
    pub nlev: usize,
    pub halo: usize,
    pub iout: usize,
    pub dp_meth: u8,
    pub dp_extrap: u8,
    pub interp_meth: u8,
    pub lqm: u8,
    pub ndp_iter: usize,
    pub nsteps: usize,
    pub ntrac: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u0: Option<f64>,
}

impl Default for SladvParams {
    fn default() -> Self {
        Self {
            init: 1,
            nlev: 4,
            halo: 0,
            iout: 0,
            dp_meth: 2,
            dp_extrap: 2,
            interp_meth: 4,
            lqm: 1,
            ndp_iter: 3,
            nsteps: 22,
            ntrac: 1,
            truncation: None,
            dt: None,
            u0: None,
        }
    }
}

impl SladvParams {
    pub fn to_config(&self) -> Result<(crate::sladv::SlConfig, usize)> {
        let (dp_meth, dp_extrap, interp_meth, init) = crate::sladv::SlConfig::from_codes(
            self.dp_meth,
            self.dp_extrap,
            self.interp_meth,
            self.init,
        )?;
        let nsteps = self.nsteps;
        let cfg = crate::sladv::SlConfig {
            dp_meth,
            dp_extrap,
            interp_meth,
            init,
            lqm: self.lqm != 0,
            ndp_iter: self.ndp_iter,
            nsteps,
            ntrac: self.ntrac,
            nlev: self.nlev,
            iout: self.iout,
            halo: self.halo,
            dt: self
                .dt
                .unwrap_or(2.0 * std::f64::consts::PI / nsteps.max(1) as f64),
            u0: self.u0.unwrap_or(1.0),
            ..crate::sladv::SlConfig::default()
        };
        Ok((cfg, self.truncation.unwrap_or(31)))
    }
}

#[derive(Debug, Clone)]
pub enum DwarfParams {
    Sht(ShtParams),
    Bifourier(BiFourierParams),
    Gcr(GcrParams),
    Cloudsc(CloudscParams),
    Laitri(LaitriParams),
    Sladv(SladvParams),
}

/// Parsed and validated configuration for one dwarf run.
#[derive(Debug, Clone)]
pub struct DwarfConfig {
    pub dwarf: DwarfKind,
    pub seed: u64,
    pub threads: usize,
    pub params: DwarfParams,
}

fn config_err<E: std::fmt::Display>(e: E) -> DwarfError {
    DwarfError::Config(e.to_string())
}

/// Parse a configuration document; unknown keys are rejected naming the
/// key, and each dwarf validates its own subtree.
pub fn parse_config_str(text: &str) -> Result<DwarfConfig> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(config_err)?;
    let mut map = match value {
        serde_json::Value::Object(m) => m,
        _ => return Err(DwarfError::Config("top level must be an object".into())),
    };
    let dwarf_val = map
        .remove("dwarf")
        .ok_or_else(|| DwarfError::Config("missing key `dwarf`".into()))?;
    let dwarf: DwarfKind = serde_json::from_value(dwarf_val).map_err(config_err)?;
    let seed = match map.remove("seed") {
        Some(v) => serde_json::from_value(v).map_err(config_err)?,
        None => 0u64,
    };
    let threads = match map.remove("threads") {
        Some(v) => serde_json::from_value(v).map_err(config_err)?,
        None => 0usize,
    };
    let rest = serde_json::Value::Object(map);
    let params = match dwarf {
        DwarfKind::Sht => DwarfParams::Sht(serde_json::from_value(rest).map_err(config_err)?),
        DwarfKind::Bifourier => {
            DwarfParams::Bifourier(serde_json::from_value(rest).map_err(config_err)?)
        }
        DwarfKind::Gcr => DwarfParams::Gcr(serde_json::from_value(rest).map_err(config_err)?),
        DwarfKind::Cloudsc => {
            DwarfParams::Cloudsc(serde_json::from_value(rest).map_err(config_err)?)
        }
        DwarfKind::Laitri => {
            DwarfParams::Laitri(serde_json::from_value(rest).map_err(config_err)?)
        }
        DwarfKind::Sladv => DwarfParams::Sladv(serde_json::from_value(rest).map_err(config_err)?),
    };
    Ok(DwarfConfig {
        dwarf,
        seed,
        threads,
        params,
    })
}

pub fn parse_config(path: &std::path::Path) -> Result<DwarfConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

/// Serialize a config back to a JSON document (for round-trip checks).
pub fn serialize_config(cfg: &DwarfConfig) -> Result<String> {
    let params = match &cfg.params {
        DwarfParams::Sht(p) => serde_json::to_value(p),
        DwarfParams::Bifourier(p) => serde_json::to_value(p),
        DwarfParams::Gcr(p) => serde_json::to_value(p),
        DwarfParams::Cloudsc(p) => serde_json::to_value(p),
        DwarfParams::Laitri(p) => serde_json::to_value(p),
        DwarfParams::Sladv(p) => serde_json::to_value(p),
    }
    .map_err(config_err)?;
    let mut map = match params {
        serde_json::Value::Object(m) => m,
        _ => unreachable!("params serialize to objects"),
    };
    map.insert(
        "dwarf".into(),
        serde_json::Value::String(cfg.dwarf.name().into()),
    );
    map.insert("seed".into(), serde_json::json!(cfg.seed));
    map.insert("threads".into(), serde_json::json!(cfg.threads));
    serde_json::to_string_pretty(&serde_json::Value::Object(map)).map_err(config_err)
}

/// Result of one dwarf run: wall time, metric rows, verification flag and
/// a reproducibility checksum over the numeric payload.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub dwarf: String,
    pub wall_seconds: f64,
    pub metrics: Vec<(String, f64)>,
    pub threads: usize,
    pub build_id: String,
    pub checksum: u64,
    pub verified: bool,
    /// detail CSV (per-iteration / per-step rows) for file output
    pub detail_csv: String,
}

impl RunReport {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }

    /// Summary CSV: metric rows plus the environment stamp. The optional
    /// `energy_j` column is reserved for external measurement and left
    /// empty.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("name,value,energy_j\n");
        for (name, value) in &self.metrics {
            s.push_str(&format!("{name},{value},\n"));
        }
        s.push_str(&format!("wall_seconds,{},\n", self.wall_seconds));
        s.push_str(&format!("threads,{},\n", self.threads));
        s.push_str(&format!("checksum,{:#018x},\n", self.checksum));
        s
    }
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 0 {
        Ok(f())
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| DwarfError::Config(format!("thread pool: {e}")))?;
        Ok(pool.install(f))
    }
}

/// Dispatch a validated config to its dwarf driver.
///
/// `dump_dir`, when given, receives optional side outputs (NWPF tracer
/// dumps from the advection dwarf at its `iout` cadence).
pub fn run_dwarf_with_dumps(
    cfg: &DwarfConfig,
    dump_dir: Option<&std::path::Path>,
) -> Result<RunReport> {
    run_dwarf_impl(cfg, dump_dir)
}

/// Dispatch a validated config to its dwarf driver (no side outputs).
pub fn run_dwarf(cfg: &DwarfConfig) -> Result<RunReport> {
    run_dwarf_impl(cfg, None)
}

fn run_dwarf_impl(cfg: &DwarfConfig, dump_dir: Option<&std::path::Path>) -> Result<RunReport> {
    let t0 = Instant::now();
    let threads = cfg.threads;
    let seed = cfg.seed;
    let mut metrics = Vec::new();
    let mut sum = BitChecksum::new();
    let mut detail = String::new();
    let verified;
    match &cfg.params {
        DwarfParams::Sht(p) => {
            let rep = in_pool(threads, || {
                crate::sht::sht_roundtrip_bench(p.truncation, p.nlev, p.iters, p.fields, seed)
            })??;
            detail.push_str("iter,seconds,max_err\n");
            for row in &rep.rows {
                detail.push_str(&format!("{},{},{}\n", row.iter, row.seconds, row.max_err));
                if p.norms {
                    metrics.push((format!("err_iter_{}", row.iter), row.max_err));
                }
                sum.push_f64(row.max_err);
            }
            metrics.push(("max_err".into(), rep.max_err));
            verified = rep.max_err <= 1e-9;
        }
        DwarfParams::Bifourier(p) => {
            let grid = crate::grids::LamGrid::new(p.nx, p.ny, p.ext, p.ext, 1.0, 1.0, p.kind)?;
            let interior = match &p.input {
                Some(path) => {
                    let mut f = std::fs::File::open(path)?;
                    let field = crate::grids::read_nwpf(&mut f, "input")?;
                    if field.points_per_level != p.nx * p.ny {
                        return Err(DwarfError::Config(format!(
                            "input field has {} points per level, grid interior needs {}",
                            field.points_per_level,
                            p.nx * p.ny
                        )));
                    }
                    field.level(0).to_vec()
                }
                None => crate::bifourier::analytic_interior(&grid),
            };
            let rows = in_pool(threads, || {
                crate::bifourier::bifourier_bench_on(&grid, &interior, p.nfld, p.iters)
            })??;
            detail.push_str("field,iter,seconds,spectral_norm_diff\n");
            let mut last = 0.0;
            for r in &rows {
                detail.push_str(&format!(
                    "{},{},{},{}\n",
                    r.field, r.iter, r.seconds, r.spectral_norm_diff
                ));
                sum.push_f64(r.spectral_norm_diff);
                last = r.spectral_norm_diff;
            }
            metrics.push(("final_norm_diff".into(), last));
            verified = last <= 1e-10;
        }
        DwarfParams::Gcr(p) => {
            let gcfg = crate::gcr::GcrConfig {
                k: p.k,
                eps: p.eps,
                max_restarts: p.max_restarts,
            };
            match p.problem.as_str() {
                "laplacian2d" => {
                    let grid =
                        crate::grids::make_gaussian_grid(p.grid, crate::grids::GridKind::Linear, false)?;
                    let jacobi = p.precond == "jacobi";
                    let rep = in_pool(threads, || {
                        crate::gcr::solve_laplacian_benchmark(
                            &grid,
                            (p.hill.lon, p.hill.lat),
                            p.hill.height,
                            &gcfg,
                            jacobi,
                        )
                    })??;
                    detail.push_str("iter,residual\n");
                    for (i, r) in rep.gcr.residual_history.iter().enumerate() {
                        detail.push_str(&format!("{i},{r}\n"));
                        sum.push_f64(*r);
                    }
                    metrics.push(("err_mean".into(), rep.err_mean));
                    metrics.push(("iterations".into(), rep.gcr.iterations as f64));
                    metrics.push((
                        "converged".into(),
                        if rep.gcr.converged { 1.0 } else { 0.0 },
                    ));
                    verified = rep.gcr.converged;
                }
                "potential3d" => {
                    let tcfg = crate::gcr::TerrainConfig {
                        nx: p.nx,
                        ny: p.ny,
                        nz: p.nz,
                        lx: p.nx as f64,
                        ly: p.ny as f64,
                        depth: p.depth,
                        hill_height: p.hill.height,
                        ..crate::gcr::TerrainConfig::default()
                    };
                    let metrics3d = crate::gcr::build_terrain_metrics(&tcfg)?;
                    let wind = crate::gcr::potential::AmbientWind::uniform(&metrics3d, 1.0);
                    let rhs = crate::gcr::potential_flow_rhs(&metrics3d, &wind);
                    let op = crate::gcr::PotentialFlowOp::new(metrics3d);
                    let guess = vec![0.0; op.len()];
                    let (phi, rep) = in_pool(threads, || {
                        crate::gcr::gcr_solve(&op, &crate::gcr::IdentityPrecond, &rhs, &guess, &gcfg)
                    })??;
                    let div = crate::gcr::divergence_audit(op.metrics(), &phi, &wind);
                    let linf = div.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
                    detail.push_str("iter,residual\n");
                    for (i, r) in rep.residual_history.iter().enumerate() {
                        detail.push_str(&format!("{i},{r}\n"));
                        sum.push_f64(*r);
                    }
                    metrics.push(("divergence_linf".into(), linf));
                    metrics.push(("iterations".into(), rep.iterations as f64));
                    metrics.push(("converged".into(), if rep.converged { 1.0 } else { 0.0 }));
                    verified = rep.converged && linf <= 10.0 * p.eps;
                }
                other => {
                    return Err(DwarfError::Config(format!(
                        "unknown gcr problem `{other}` (expected laplacian2d or potential3d)"
                    )))
                }
            }
        }
        DwarfParams::Cloudsc(p) => {
            detail.push_str("nproma,seconds,checksum\n");
            let mut checksums = Vec::new();
            for &nproma in &p.nproma_list {
                let rep = crate::cloudsc::cloudsc_bench(
                    p.ngptot,
                    p.klev,
                    nproma,
                    threads.max(1),
                    seed,
                )?;
                detail.push_str(&format!(
                    "{},{},{:#018x}\n",
                    nproma, rep.seconds, rep.checksum
                ));
                metrics.push((format!("seconds_nproma_{nproma}"), rep.seconds));
                checksums.push(rep.checksum);
                sum.push_u64(rep.checksum);
            }
            verified = checksums.windows(2).all(|w| w[0] == w[1]);
        }
        DwarfParams::Laitri(p) => {
            let kqm = crate::interp::Kqm::from_index(p.kqm)
                .ok_or_else(|| DwarfError::Config(format!("kqm {} not in 0..=2", p.kqm)))?;
            let rep = crate::interp::laitri_bench(p.npoints, p.nlev, kqm, seed);
            let rep2 = crate::interp::laitri_bench(p.npoints, p.nlev, kqm, seed);
            detail.push_str("npoints,seconds,points_per_second,checksum\n");
            detail.push_str(&format!(
                "{},{},{},{:#018x}\n",
                rep.npoints, rep.seconds, rep.points_per_second, rep.checksum
            ));
            metrics.push(("points_per_second".into(), rep.points_per_second));
            sum.push_u64(rep.checksum);
            verified = rep.checksum == rep2.checksum;
        }
        DwarfParams::Sladv(p) => {
            let (scfg, truncation) = p.to_config()?;
            let grid =
                crate::grids::make_gaussian_grid(truncation, crate::grids::GridKind::Linear, false)?;
            let mut dump_fn;
            let mut dump: Option<crate::sladv::DumpSink> = match dump_dir {
                Some(dir) if scfg.iout > 0 => {
                    std::fs::create_dir_all(dir)?;
                    let dir = dir.to_path_buf();
                    dump_fn = move |step: usize, f: &crate::grids::Field3d| -> Result<()> {
                        let path = dir.join(format!("tracer_step_{step:04}.nwpf"));
                        let mut file = std::fs::File::create(path)?;
                        crate::grids::write_nwpf(f, &mut file)
                    };
                    Some(&mut dump_fn)
                }
                _ => None,
            };
            let rep = in_pool(threads, || {
                crate::sladv::run_advection(&grid, &scfg, dump.take())
            })??;
            detail.push_str("step,l2_err,linf_err,min,max,seconds\n");
            for r in &rep.rows {
                detail.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.step, r.l2_err, r.linf_err, r.min, r.max, r.seconds
                ));
                sum.push_f64(r.l2_err);
                sum.push_f64(r.linf_err);
            }
            sum.push_u64(rep.checksum);
            if let Some(last) = rep.rows.last() {
                metrics.push(("final_l2_err".into(), last.l2_err));
                metrics.push(("final_linf_err".into(), last.linf_err));
                metrics.push(("final_max".into(), last.max));
            }
            let overshoot_ok = !scfg.lqm
                || rep
                    .rows
                    .iter()
                    .all(|r| r.max <= scfg.hill_height + 1e-12 && r.min >= -1e-12);
            verified = overshoot_ok && rep.rows.iter().all(|r| r.l2_err.is_finite());
        }
    }
    Ok(RunReport {
        dwarf: cfg.dwarf.name().to_string(),
        wall_seconds: t0.elapsed().as_secs_f64(),
        metrics,
        threads,
        build_id: format!("nwp-dwarfs-{}", env!("CARGO_PKG_VERSION")),
        checksum: sum.finish(),
        verified,
        detail_csv: detail,
    })
}

/// Write the summary and detail CSVs into `out_dir`.
pub fn write_reports(report: &RunReport, out_dir: &std::path::Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let summary = out_dir.join(format!("{}_report.csv", report.dwarf));
    let mut f = std::fs::File::create(summary)?;
    f.write_all(report.to_csv().as_bytes())?;
    if !report.detail_csv.is_empty() {
        let detail = out_dir.join(format!("{}_detail.csv", report.dwarf));
        let mut f = std::fs::File::create(detail)?;
        f.write_all(report.detail_csv.as_bytes())?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// regression registry
// ---------------------------------------------------------------------------

/// Comparison mode against a pinned value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PinKind {
    /// measured bits must equal the pinned bits
    Bits,
    /// measured value must not exceed the pinned bound
    Leq,
}

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub dwarf: &'static str,
    pub measured: f64,
    pub pass: bool,
    pub note: String,
}

#[derive(Debug, Clone)]
pub struct RegressSummary {
    pub checks: Vec<CheckResult>,
    pub checksum: u64,
    pub all_pass: bool,
}

/// Pinned regression values, frozen from the first build's oracle runs.
pub const PINNED_DEFAULT: &str = include_str!("pinned.json");

struct Check {
    name: &'static str,
    dwarf: &'static str,
    kind: PinKind,
    run: fn() -> f64,
}

fn checks() -> Vec<Check> {
    use crate::grids::{make_gaussian_grid, GridKind};
    vec![
        Check {
            name: "fft_naive_oracle_n60",
            dwarf: "fft",
            kind: PinKind::Leq,
            run: || {
                let psi: Vec<f64> = (0..60).map(|j| ((j * j) as f64 * 0.11).sin()).collect();
                let fast = crate::fft::dft_direct(&psi).unwrap();
                let n = psi.len();
                let mut worst = 0.0f64;
                for k in 0..=n / 2 {
                    let mut sa = 0.0;
                    let mut sb = 0.0;
                    for (j, &x) in psi.iter().enumerate() {
                        let ang = 2.0 * std::f64::consts::PI * (j * k) as f64 / n as f64;
                        sa += x * ang.cos();
                        sb -= x * ang.sin();
                    }
                    worst = worst.max((fast.a[k] - sa / n as f64).abs());
                    if k != 0 && 2 * k != n {
                        worst = worst.max((fast.b[k] - sb / n as f64).abs());
                    }
                }
                worst
            },
        },
        Check {
            name: "grids_weights_sum_n21",
            dwarf: "grids",
            kind: PinKind::Leq,
            run: || {
                let g = make_gaussian_grid(21, GridKind::Linear, false).unwrap();
                (g.weights.iter().sum::<f64>() - 2.0).abs()
            },
        },
        Check {
            name: "legendre_orthonormality_n10",
            dwarf: "legendre",
            kind: PinKind::Leq,
            run: || {
                let g = make_gaussian_grid(10, GridKind::Linear, false).unwrap();
                let t = crate::legendre::build_legendre_table(&g);
                let mut worst = 0.0f64;
                for m in 0..=10usize {
                    for n1 in m..=10 {
                        for n2 in m..=10 {
                            let mut s = 0.0;
                            for k in 0..g.nlat {
                                s += g.weights[k] * t.value(n1, m, k) * t.value(n2, m, k);
                            }
                            let want = if n1 == n2 { 1.0 } else { 0.0 };
                            worst = worst.max((s - want).abs());
                        }
                    }
                }
                worst
            },
        },
        Check {
            name: "sht_bench_maxerr_n21_iters3",
            dwarf: "sht",
            kind: PinKind::Bits,
            run: || {
                crate::sht::sht_roundtrip_bench(21, 1, 3, 1, 12345)
                    .unwrap()
                    .max_err
            },
        },
        Check {
            name: "bifourier_bench_diff_100iters",
            dwarf: "bifourier",
            kind: PinKind::Bits,
            run: || {
                let g = crate::grids::LamGrid::new(54, 48, 6, 6, 1.0, 1.0, GridKind::Linear)
                    .unwrap();
                crate::bifourier::bifourier_bench(&g, 1, 100)
                    .unwrap()
                    .last()
                    .unwrap()
                    .spectral_norm_diff
            },
        },
        Check {
            name: "gcr_laplacian_errmean_n21",
            dwarf: "gcr",
            kind: PinKind::Bits,
            run: || {
                let g = make_gaussian_grid(21, GridKind::Linear, false).unwrap();
                let cfg = crate::gcr::GcrConfig {
                    k: 3,
                    eps: 1e-8,
                    max_restarts: 100_000,
                };
                crate::gcr::solve_laplacian_benchmark(
                    &g,
                    (std::f64::consts::PI, 0.35),
                    1.0,
                    &cfg,
                    true,
                )
                .unwrap()
                .err_mean
            },
        },
        Check {
            name: "cloudsc_checksum_nproma_invariance",
            dwarf: "cloudsc",
            kind: PinKind::Leq,
            run: || {
                let a = crate::cloudsc::cloudsc_bench(100, 12, 1, 1, 2024).unwrap();
                let b = crate::cloudsc::cloudsc_bench(100, 12, 10, 2, 2024).unwrap();
                let c = crate::cloudsc::cloudsc_bench(100, 12, 100, 4, 2024).unwrap();
                if a.checksum == b.checksum && b.checksum == c.checksum {
                    0.0
                } else {
                    1.0
                }
            },
        },
        Check {
            name: "cloudsc_fixed_column_checksum",
            dwarf: "cloudsc",
            kind: PinKind::Bits,
            run: || {
                let rep = crate::cloudsc::cloudsc_bench(100, 12, 10, 1, 2024).unwrap();
                f64::from_bits(rep.checksum)
            },
        },
        Check {
            name: "laitri_bench_checksum",
            dwarf: "laitri",
            kind: PinKind::Bits,
            run: || {
                let rep =
                    crate::interp::laitri_bench(2000, 6, crate::interp::Kqm::QuasiMonotone, 99);
                f64::from_bits(rep.checksum)
            },
        },
        Check {
            name: "sladv_short_run_l2",
            dwarf: "sladv",
            kind: PinKind::Bits,
            run: || {
                let g = make_gaussian_grid(21, GridKind::Linear, false).unwrap();
                let cfg = crate::sladv::SlConfig {
                    nsteps: 5,
                    ..crate::sladv::SlConfig::default()
                };
                let rep = crate::sladv::run_advection(&g, &cfg, None).unwrap();
                rep.rows.last().unwrap().l2_err
            },
        },
        Check {
            name: "sladv_zero_wind_fixpoint",
            dwarf: "sladv",
            kind: PinKind::Leq,
            run: || {
                let g = make_gaussian_grid(15, GridKind::Linear, false).unwrap();
                let cfg = crate::sladv::SlConfig {
                    u0: 0.0,
                    nsteps: 1,
                    ..crate::sladv::SlConfig::default()
                };
                let (wind, tracer) = crate::sladv::init_case(&g, &cfg).unwrap();
                let (out, _) = crate::sladv::advect_step(std::slice::from_ref(&tracer), &wind, &g, &cfg).unwrap();
                if out[0].values == tracer.values {
                    0.0
                } else {
                    1.0
                }
            },
        },
    ]
}

/// Run the pinned-value regression registry.
///
/// `suite` filters by dwarf name (`all` runs everything); `pinned_json` is
/// the frozen-value document (defaults to the one embedded at build time).
pub fn regress(suite: &str, pinned_json: &str) -> Result<RegressSummary> {
    let pinned: std::collections::BTreeMap<String, serde_json::Value> =
        serde_json::from_str(pinned_json)
            .map_err(|e| DwarfError::Config(format!("pinned file: {e}")))?;
    let mut results = Vec::new();
    let mut sum = BitChecksum::new();
    for check in checks() {
        if suite != "all" && suite != check.dwarf {
            continue;
        }
        let measured = (check.run)();
        let (pass, note) = match pinned.get(check.name) {
            None => (false, "missing pinned value".to_string()),
            Some(v) => {
                let pin = match v.as_f64() {
                    Some(x) => x,
                    None => {
                        // bits stored as hex string for exactness
                        match v.as_str().and_then(|s| u64::from_str_radix(
                            s.trim_start_matches("0x"), 16).ok())
                        {
                            Some(bits) => f64::from_bits(bits),
                            None => {
                                results.push(CheckResult {
                                    name: check.name.into(),
                                    dwarf: check.dwarf,
                                    measured,
                                    pass: false,
                                    note: "unparseable pinned value".into(),
                                });
                                sum.push_f64(measured);
                                continue;
                            }
                        }
                    }
                };
                match check.kind {
                    PinKind::Bits => (
                        measured.to_bits() == pin.to_bits(),
                        format!("pinned {:#018x}", pin.to_bits()),
                    ),
                    PinKind::Leq => (measured <= pin, format!("bound {pin:e}")),
                }
            }
        };
        sum.push_f64(measured);
        sum.push_u64(u64::from(pass));
        results.push(CheckResult {
            name: check.name.into(),
            dwarf: check.dwarf,
            measured,
            pass,
            note,
        });
    }
    let all_pass = !results.is_empty() && results.iter().all(|c| c.pass);
    Ok(RegressSummary {
        checks: results,
        checksum: sum.finish(),
        all_pass,
    })
}

/// Produce a pinned-value document from the current build (used once to
/// freeze the regression values).
pub fn freeze_pinned() -> String {
    let mut map = serde_json::Map::new();
    for check in checks() {
        let measured = (check.run)();
        let value = match check.kind {
            PinKind::Bits => {
                serde_json::Value::String(format!("{:#018x}", measured.to_bits()))
            }
            PinKind::Leq => {
                // freeze a generous bound above the measured value
                let bound = if measured == 0.0 { 1e-12 } else { measured * 10.0 };
                serde_json::json!(bound)
            }
        };
        map.insert(check.name.to_string(), value);
    }
    serde_json::to_string_pretty(&serde_json::Value::Object(map)).unwrap()
}
