//! `sgip` command-line front end.
//!
//! Every failure prints one JSON object on stderr and exits nonzero:
//! `{"error": <kind>, "message": <text>}` plus `key`/`line` for config errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use sgip_core::diagnostics::{front_position, l2_error, restrict_to_common};
use sgip_core::io::config::parse_config;
use sgip_core::io::tables::{format_convergence, format_front_series, write_text};
use sgip_core::io::{parse_schedule, read_snapshot, AnyConfig, FdmConfig, SimConfig};
use sgip_core::{
    convergence_study, fdm_run, run, ConfigError, ConvergenceSchedule, DensityField, FdmSolver,
    Level, RunArtifacts, RunStatus, SgipError,
};

#[derive(Parser)]
#[command(name = "sgip", version, about = "Stochastic particle solver for reaction-diffusion-advection equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the particle solver and write snapshots.
    Run {
        config: PathBuf,
        /// Output directory (overrides the config's `output`).
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Run the finite-difference reference solver.
    Fdm {
        config: PathBuf,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// L2 distance of two snapshots on the coarser of their grids.
    Compare { a: PathBuf, b: PathBuf },
    /// Front positions of a snapshot or of every snapshot in a run directory.
    Front {
        path: PathBuf,
        #[arg(long, default_value_t = 0.2)]
        threshold: f64,
        #[arg(long, default_value_t = 0)]
        axis: usize,
        /// 3-point smoothing of the center trace before the crossing search.
        #[arg(long)]
        smooth: bool,
        /// Write the table here instead of stdout.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Refinement study against a reference solution.
    Converge {
        config: PathBuf,
        /// `dt,dx,N` per line, coarsest first.
        #[arg(long)]
        schedule: PathBuf,
        /// Number of seeds per level, starting at the config's seed.
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        /// Reference snapshot; by default a reference run at a quarter of
        /// the finest spacing is computed.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Core(SgipError),
}

impl From<SgipError> for Failure {
    fn from(e: SgipError) -> Self {
        Failure::Core(e)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Core(e.into())
    }
}

fn error_line(f: &Failure) -> Value {
    match f {
        Failure::Usage(msg) => json!({"error": "usage", "message": msg}),
        Failure::Core(e) => {
            let mut v = json!({"error": e.kind(), "message": e.to_string()});
            let mut inner = e;
            while let SgipError::Step { step, source } = inner {
                v["step"] = json!(step);
                inner = source;
            }
            if let SgipError::Config(c) = inner {
                if let Some(k) = c.key() {
                    v["key"] = json!(k);
                }
                if let Some(l) = c.line() {
                    v["line"] = json!(l);
                }
            }
            v
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("{}", error_line(&Failure::Usage(first.to_string())));
            return ExitCode::from(2);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", error_line(&f));
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run { config, output } => {
            let AnyConfig::Sim(cfg) = parse_config(&config)? else {
                return Err(Failure::Usage(format!(
                    "{} is a reference-solver config; use `sgip fdm`",
                    config.display()
                )));
            };
            let dir = output_dir(&config, cfg.output.as_deref(), output);
            report(&run(&cfg, &dir)?, &dir);
            Ok(())
        }
        Command::Fdm { config, output } => {
            let AnyConfig::Fdm(cfg) = parse_config(&config)? else {
                return Err(Failure::Usage(format!(
                    "{} has no `dx`; use `sgip run`",
                    config.display()
                )));
            };
            let dir = output_dir(&config, cfg.output.as_deref(), output);
            report(&fdm_run(&cfg, &dir)?, &dir);
            Ok(())
        }
        Command::Compare { a, b } => {
            let fa = read_snapshot(&a)?.field;
            let fb = read_snapshot(&b)?.field;
            let (ra, rb) = restrict_to_common(&fa, &fb)?;
            println!("{:?}", l2_error(&ra, &rb)?);
            Ok(())
        }
        Command::Front {
            path,
            threshold,
            axis,
            smooth,
            output,
        } => {
            if !(threshold > 0.0 && threshold < 1.0) {
                return Err(SgipError::InvalidParameter(format!(
                    "threshold {threshold} is not in (0, 1)"
                ))
                .into());
            }
            let mut rows = Vec::new();
            for snap in snapshot_paths(&path)? {
                let field = read_snapshot(&snap)?.field;
                rows.push((field.time(), front_position(&field, threshold, axis, smooth)?));
            }
            emit(&format_front_series(&rows), output.as_deref())
        }
        Command::Converge {
            config,
            schedule,
            seeds,
            reference,
            output,
        } => {
            let AnyConfig::Sim(base) = parse_config(&config)? else {
                return Err(Failure::Usage("converge needs a particle config".into()));
            };
            if seeds == 0 {
                return Err(Failure::Usage("--seeds must be at least 1".into()));
            }
            let text = fs::read_to_string(&schedule).map_err(|e| SgipError::Io {
                path: schedule.clone(),
                source: e,
            })?;
            let levels: Vec<Level> = parse_schedule(&text)?
                .into_iter()
                .map(|(dt, dx, particles)| Level { dt, dx, particles })
                .collect();
            let plan = ConvergenceSchedule::new(base.dim, levels.clone())?;
            let reference = match reference {
                Some(p) => read_snapshot(&p)?.field,
                None => reference_run(&base, &levels)?,
            };
            let seed_list: Vec<u64> = (0..seeds).map(|k| base.seed.wrapping_add(k)).collect();
            let table = convergence_study(&base, &plan, &seed_list, &reference)?;
            for l in &table.levels {
                eprintln!(
                    "level {}: mean l2 {:e}, kappa {}, nu {}",
                    l.level, l.mean_l2, l.kappa, l.nu
                );
            }
            eprintln!("monotone: {}", table.monotone);
            emit(&format_convergence(&table.rows), output.as_deref())
        }
    }
}

/// `--output`, else the config's `output` relative to the config file,
/// else `<stem>_out` next to it.
fn output_dir(config: &Path, from_config: Option<&Path>, flag: Option<PathBuf>) -> PathBuf {
    if let Some(p) = flag {
        return p;
    }
    let base = config.parent().unwrap_or(Path::new("."));
    match from_config {
        Some(p) => base.join(p),
        None => {
            let stem = config.file_stem().map(|s| s.to_string_lossy()).unwrap_or_default();
            base.join(format!("{stem}_out"))
        }
    }
}

fn report(art: &RunArtifacts, dir: &Path) {
    let status = match art.status {
        RunStatus::Complete => "complete",
        RunStatus::Extinct => "extinct",
    };
    println!(
        "{}",
        json!({
            "status": status,
            "steps": art.steps,
            "snapshots": art.snapshots.len(),
            "output": dir.display().to_string(),
        })
    );
}

fn snapshot_paths(path: &Path) -> Result<Vec<PathBuf>, Failure> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let entries = fs::read_dir(path).map_err(|e| SgipError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut out: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "sgrd"))
        .collect();
    out.sort();
    if out.is_empty() {
        return Err(Failure::Usage(format!("no .sgrd snapshots in {}", path.display())));
    }
    Ok(out)
}

fn reference_run(base: &SimConfig, levels: &[Level]) -> Result<DensityField, Failure> {
    let finest = levels.iter().map(|l| l.dx).fold(f64::INFINITY, f64::min);
    let cfg = FdmConfig::reference_for(base, finest / 4.0);
    cfg.validate()?;
    eprintln!("computing reference at dx = {}", cfg.dx);
    Ok(FdmSolver::new(cfg)?.run_to_end()?)
}

fn emit(text: &str, output: Option<&Path>) -> Result<(), Failure> {
    match output {
        Some(p) => Ok(write_text(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
