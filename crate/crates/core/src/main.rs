//! `nwp-dwarfs`: run a dwarf kernel from a JSON config and/or flags, write
//! CSV reports, or run the pinned regression registry.
//!
//! Exit codes: 0 success, 1 verification/runtime failure, 2 config error.

use clap::{Parser, Subcommand};
use nwp_dwarfs::harness::{
    self, BiFourierParams, CloudscParams, DwarfConfig, DwarfKind, DwarfParams, GcrParams,
    LaitriParams, ShtParams, SladvParams,
};
use nwp_dwarfs::DwarfError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "nwp-dwarfs",
    version,
    about = "NWP dwarf kernels: benchmark and verification harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone, Default)]
struct Common {
    /// JSON configuration file (flags override its keys)
    #[arg(long)]
    config: Option<PathBuf>,
    /// worker threads (0 = library default)
    #[arg(long)]
    threads: Option<usize>,
    /// output directory for reports (default: $NWP_DWARFS_OUT or .)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Spherical-harmonics transform round-trip benchmark
    Sht {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        truncation: Option<usize>,
        #[arg(long)]
        nlev: Option<usize>,
        #[arg(long)]
        iters: Option<usize>,
        /// record per-iteration error norms
        #[arg(long)]
        norms: bool,
        /// number of fields to transform (modulo copies)
        #[arg(long)]
        fields: Option<usize>,
    },
    /// Bi-Fourier limited-area transform benchmark
    Bifourier {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        nx: Option<usize>,
        #[arg(long)]
        ny: Option<usize>,
        #[arg(long)]
        ext: Option<usize>,
        /// linear | quadratic | cubic
        #[arg(long)]
        kind: Option<String>,
        /// number of fields to transform
        #[arg(long)]
        nfld: Option<usize>,
        #[arg(long)]
        iters: Option<usize>,
    },
    /// Elliptic GCR solver (laplacian2d or potential3d problem)
    Gcr {
        #[command(flatten)]
        common: Common,
    },
    /// Cloud microphysics NPROMA benchmark
    /// (positional form mirrors the reference driver: THREADS NGPTOT NPROMA...)
    Cloudsc {
        #[command(flatten)]
        common: Common,
        threads_pos: Option<usize>,
        ngptot: Option<usize>,
        nproma: Vec<usize>,
        #[arg(long)]
        klev: Option<usize>,
    },
    /// 32-point interpolation kernel micro-benchmark
    Laitri {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        kqm: Option<u8>,
        #[arg(long)]
        npoints: Option<usize>,
        #[arg(long)]
        nlev: Option<usize>,
    },
    /// Semi-Lagrangian advection driver
    Sladv {
        #[command(flatten)]
        common: Common,
    },
    /// Run the pinned regression registry
    Regress {
        /// all | fft | grids | legendre | sht | bifourier | gcr | cloudsc | laitri | sladv
        #[arg(long, default_value = "all")]
        suite: String,
        /// alternative pinned-value file
        #[arg(long)]
        pinned: Option<PathBuf>,
        /// print a freshly frozen pinned-value document and exit
        #[arg(long, hide = true)]
        freeze: bool,
    },
}

fn load_or_default(common: &Common, kind: DwarfKind) -> Result<DwarfConfig, DwarfError> {
    let mut cfg = match &common.config {
        Some(path) => {
            let cfg = harness::parse_config(path)?;
            if cfg.dwarf != kind {
                return Err(DwarfError::Config(format!(
                    "config is for dwarf `{}`, expected `{}`",
                    cfg.dwarf.name(),
                    kind.name()
                )));
            }
            cfg
        }
        None => DwarfConfig {
            dwarf: kind,
            seed: 0,
            threads: 0,
            params: match kind {
                DwarfKind::Sht => DwarfParams::Sht(ShtParams::default()),
                DwarfKind::Bifourier => DwarfParams::Bifourier(BiFourierParams::default()),
                DwarfKind::Gcr => DwarfParams::Gcr(GcrParams::default()),
                DwarfKind::Cloudsc => DwarfParams::Cloudsc(CloudscParams::default()),
                DwarfKind::Laitri => DwarfParams::Laitri(LaitriParams::default()),
                DwarfKind::Sladv => DwarfParams::Sladv(SladvParams::default()),
            },
        },
    };
    if let Some(t) = common.threads {
        cfg.threads = t;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn out_dir(common: &Common) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| std::env::var(harness::OUT_DIR_ENV).ok().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn execute(cfg: &DwarfConfig, dir: &std::path::Path) -> Result<bool, DwarfError> {
    let report = harness::run_dwarf_with_dumps(cfg, Some(dir))?;
    harness::write_reports(&report, dir)?;
    println!(
        "{}: wall {:.3} s, checksum {:#018x}, verification {}",
        report.dwarf,
        report.wall_seconds,
        report.checksum,
        if report.verified { "PASSED" } else { "FAILED" }
    );
    for (name, value) in &report.metrics {
        println!("  {name} = {value:.6e}");
    }
    Ok(report.verified)
}

fn run() -> Result<bool, DwarfError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Sht {
            common,
            truncation,
            nlev,
            iters,
            norms,
            fields,
        } => {
            let mut cfg = load_or_default(&common, DwarfKind::Sht)?;
            if let DwarfParams::Sht(p) = &mut cfg.params {
                if let Some(v) = truncation {
                    p.truncation = v;
                }
                if let Some(v) = nlev {
                    p.nlev = v;
                }
                if let Some(v) = iters {
                    p.iters = v;
                }
                if norms {
                    p.norms = true;
                }
                if let Some(v) = fields {
                    p.fields = v;
                }
            }
            execute(&cfg, &out_dir(&common))
        }
        Command::Bifourier {
            common,
            nx,
            ny,
            ext,
            kind,
            nfld,
            iters,
        } => {
            let mut cfg = load_or_default(&common, DwarfKind::Bifourier)?;
            if let DwarfParams::Bifourier(p) = &mut cfg.params {
                if let Some(v) = nx {
                    p.nx = v;
                }
                if let Some(v) = ny {
                    p.ny = v;
                }
                if let Some(v) = ext {
                    p.ext = v;
                }
                if let Some(k) = kind {
                    p.kind = match k.as_str() {
                        "linear" => nwp_dwarfs::grids::GridKind::Linear,
                        "quadratic" => nwp_dwarfs::grids::GridKind::Quadratic,
                        "cubic" => nwp_dwarfs::grids::GridKind::Cubic,
                        other => {
                            return Err(DwarfError::Config(format!(
                                "unknown grid kind `{other}`"
                            )))
                        }
                    };
                }
                if let Some(v) = nfld {
                    p.nfld = v;
                }
                if let Some(v) = iters {
                    p.iters = v;
                }
            }
            execute(&cfg, &out_dir(&common))
        }
        Command::Gcr { common } => {
            let cfg = load_or_default(&common, DwarfKind::Gcr)?;
            execute(&cfg, &out_dir(&common))
        }
        Command::Cloudsc {
            common,
            threads_pos,
            ngptot,
            nproma,
            klev,
        } => {
            let mut cfg = load_or_default(&common, DwarfKind::Cloudsc)?;
            if let Some(t) = threads_pos {
                cfg.threads = t;
            }
            if let DwarfParams::Cloudsc(p) = &mut cfg.params {
                if let Some(v) = ngptot {
                    p.ngptot = v;
                }
                if !nproma.is_empty() {
                    p.nproma_list = nproma;
                }
                if let Some(v) = klev {
                    p.klev = v;
                }
            }
            execute(&cfg, &out_dir(&common))
        }
        Command::Laitri {
            common,
            kqm,
            npoints,
            nlev,
        } => {
            let mut cfg = load_or_default(&common, DwarfKind::Laitri)?;
            if let DwarfParams::Laitri(p) = &mut cfg.params {
                if let Some(v) = kqm {
                    p.kqm = v;
                }
                if let Some(v) = npoints {
                    p.npoints = v;
                }
                if let Some(v) = nlev {
                    p.nlev = v;
                }
            }
            execute(&cfg, &out_dir(&common))
        }
        Command::Sladv { common } => {
            let cfg = load_or_default(&common, DwarfKind::Sladv)?;
            execute(&cfg, &out_dir(&common))
        }
        Command::Regress {
            suite,
            pinned,
            freeze,
        } => {
            if freeze {
                print!("{}", harness::freeze_pinned());
                return Ok(true);
            }
            let pinned_text = match pinned {
                Some(path) => std::fs::read_to_string(path)?,
                None => harness::PINNED_DEFAULT.to_string(),
            };
            let summary = harness::regress(&suite, &pinned_text)?;
            for check in &summary.checks {
                println!(
                    "{} {} ({}) measured {:.6e} [{}]",
                    if check.pass { "PASS" } else { "FAIL" },
                    check.name,
                    check.dwarf,
                    check.measured,
                    check.note
                );
            }
            println!(
                "regress: {}/{} checks passed, checksum {:#018x}",
                summary.checks.iter().filter(|c| c.pass).count(),
                summary.checks.len(),
                summary.checksum
            );
            Ok(summary.all_pass)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ DwarfError::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
