use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use focalforge::families::{family_from_key, Side};
use focalforge::geometry::{
    fd_covariant_derivatives, sample_focal_point, shape_operators_with, FdMethod, DEFAULT_FD_STEP,
};
use focalforge::invariants::compute_invariants;
use focalforge::report::{
    classification_table_with, emit, emit_table, render, render_table, roster, run_family, OutputFormat, RunConfig,
    DEFAULT_NUM_POINTS,
};
use focalforge::Error;
use serde_json::json;

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_INTEGRITY: u8 = 3;
const EXIT_ERROR: u8 = 4;

/// Relative tolerance of the finite-difference oracle against the Simons route.
const ORACLE_REL_TOL: f64 = 0.05;
const ORACLE_ABS_TOL: f64 = 1e-2;

#[derive(Parser)]
#[command(
    name = "focalforge",
    version,
    about = "Curvature invariants of focal submanifolds of isoparametric hypersurfaces"
)]
struct Cli {
    /// Directory for report files when --out is not given.
    #[arg(long, global = true, env = "FOCALFORGE_OUT_DIR")]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample points on one focal submanifold and report its invariants.
    Verify {
        family_key: String,
        #[arg(long, default_value = "plus")]
        side: Side,
        #[arg(long, default_value_t = DEFAULT_NUM_POINTS)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_FD_STEP)]
        fd_step: f64,
        #[arg(long, default_value = "text")]
        format: OutputFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the family roster and compare against the published classification.
    Table {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_NUM_POINTS)]
        points: usize,
        #[arg(long, default_value = "text")]
        format: OutputFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print one sampled focal point with its tangent and normal frames.
    Sample {
        family_key: String,
        #[arg(long)]
        side: Side,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compare the finite-difference covariant derivative with the Simons route.
    Oracle {
        family_key: String,
        #[arg(long)]
        side: Side,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_FD_STEP)]
        fd_step: f64,
    },
    /// Print the calibration record of a family.
    Snapshot { family_key: String },
}

fn file_stem(key: &str) -> String {
    key.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn target(out: Option<PathBuf>, out_dir: Option<&Path>, name: &str) -> Option<PathBuf> {
    out.or_else(|| out_dir.map(|d| d.join(name)))
}

fn print(text: &str) -> Result<(), Error> {
    std::io::stdout().write_all(text.as_bytes()).map_err(|source| Error::Io { path: PathBuf::from("<stdout>"), source })
}

fn run(cli: Cli) -> Result<u8, Error> {
    let out_dir = cli.out_dir.as_deref();
    match cli.command {
        Command::Verify { family_key, side, points, seed, fd_step, format, out } => {
            let mut config = RunConfig::new(family_key, side);
            config.num_points = points;
            config.seed = seed;
            config.fd_step = fd_step;
            config.output_format = format;
            let report = run_family(&config)?;
            let name = format!("{}-{}.{}", file_stem(&report.family_key), side, format.extension());
            match target(out, out_dir, &name) {
                Some(path) => {
                    emit(&report, format, &path)?;
                    eprintln!("wrote {}", path.display());
                }
                None => print(&render(&report, format)?)?,
            }
            if !report.integrity_ok() {
                Ok(EXIT_INTEGRITY)
            } else if !report.checks_pass() {
                Ok(EXIT_CHECK_FAILED)
            } else {
                Ok(0)
            }
        }
        Command::Table { seed, points, format, out } => {
            let table = classification_table_with(&roster()?, seed, points)?;
            match target(out, out_dir, &format!("classification.{}", format.extension())) {
                Some(path) => {
                    emit_table(&table, format, &path)?;
                    eprintln!("wrote {}", path.display());
                }
                None => print(&render_table(&table, format)?)?,
            }
            Ok(if table.all_agree() { 0 } else { EXIT_CHECK_FAILED })
        }
        Command::Sample { family_key, side, seed } => {
            let family = family_from_key(&family_key)?;
            let point = sample_focal_point(&family, side, seed)?;
            let columns = |m: &focalforge::numkit::Mat| -> Vec<Vec<f64>> {
                m.column_iter().map(|c| c.iter().copied().collect()).collect()
            };
            let value = json!({
                "family_key": family.key,
                "side": side,
                "seed": seed,
                "x": point.x.iter().copied().collect::<Vec<f64>>(),
                "f": family.f(&point.x),
                "tangent": columns(point.tangent.matrix()),
                "normal": columns(point.normal.matrix()),
            });
            print(&(serde_json::to_string_pretty(&value)? + "\n"))?;
            Ok(0)
        }
        Command::Oracle { family_key, side, seed, fd_step } => {
            let family = family_from_key(&family_key)?;
            let point = sample_focal_point(&family, side, seed)?;
            let ops = shape_operators_with(&family, &point, fd_step, FdMethod::RichardsonExtrapolated)?;
            let inv = compute_invariants(&ops, family.g, family.m1(), family.m2(), side)?;
            let fd = fd_covariant_derivatives(&family, &point, fd_step)?;
            let gap = (fd.nabla_b_sq - inv.nabla_b_sq_simons).abs();
            let limit = ORACLE_ABS_TOL.max(ORACLE_REL_TOL * inv.nabla_b_sq_simons.abs());
            let agree = gap < limit;
            let value = json!({
                "family_key": family.key,
                "side": side,
                "seed": seed,
                "fd_step": fd_step,
                "nabla_b_sq_simons": inv.nabla_b_sq_simons,
                "nabla_b_sq_fd": fd.nabla_b_sq,
                "gap": gap,
                "limit": limit,
                "ricci_parallel_defect_fd": fd.ricci_parallel_defect,
                "normal_connection_skew_defect": fd.connection.skew_defect(),
                "agree": agree,
            });
            print(&(serde_json::to_string_pretty(&value)? + "\n"))?;
            Ok(if agree { 0 } else { EXIT_CHECK_FAILED })
        }
        Command::Snapshot { family_key } => {
            let family = family_from_key(&family_key)?;
            match &family.calibration {
                Some(snapshot) => print(&(snapshot.to_json()? + "\n"))?,
                None => print(&format!("{}: closed-form polynomial, no calibration\n", family.key))?,
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if matches!(e, Error::Integrity(_) | Error::Precision { .. }) {
                EXIT_INTEGRITY
            } else {
                EXIT_ERROR
            })
        }
    }
}
