//! Main loop: initialize, then advect, bin, react and resample each step.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::diagnostics::front_position;
use crate::error::{Result, SgipError};
use crate::grid::{DensityField, GridSpec, ParticleEnsemble};
use crate::init::init_particles;
use crate::io::config::{FrontSettings, SimConfig};
use crate::io::snapshot::{write_snapshot, Producer};
use crate::io::tables::{format_diagnostics, write_text, DiagnosticsRow};
use crate::reactions::integrate_reaction_field;
use crate::resampling::resample;
use crate::rng::{lane, RngStream};
use crate::transport::{advect_diffuse_step, assign_bins, density_from_counts};

/// What one step produced.
#[derive(Debug, Clone)]
pub struct StepReport {
    /// Index of the completed step, starting at 1.
    pub step: u64,
    pub time: f64,
    /// Post-reaction, pre-resampling density at `time`.
    pub field: DensityField,
    pub total_mass: f64,
    pub clamped_bins: usize,
    /// Particles per bin after resampling.
    pub targets: Vec<usize>,
}

#[derive(Debug, Clone)]
pub enum StepOutcome {
    Advanced(StepReport),
    /// The reaction removed all mass; the ensemble is left as it was.
    Extinct { step: u64, time: f64, field: DensityField },
}

/// Particle state between steps.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: SimConfig,
    grid: GridSpec,
    ensemble: ParticleEnsemble,
    step: u64,
    steps: u64,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let grid = config.grid()?;
        let ensemble = init_particles(
            &config.init,
            config.dim,
            config.half_width,
            config.particles,
            &RngStream::new(config.seed, 0).with_lane(lane::INIT),
        )?;
        let steps = config.steps();
        Ok(Simulation {
            config,
            grid,
            ensemble,
            step: 0,
            steps,
        })
    }

    /// Starts from a given ensemble at step 0 instead of sampling `u_0`.
    pub fn from_ensemble(config: SimConfig, ensemble: ParticleEnsemble) -> Result<Self> {
        config.validate()?;
        let grid = config.grid()?;
        if ensemble.dim() != grid.dim() {
            return Err(SgipError::DimensionMismatch {
                expected: grid.dim(),
                got: ensemble.dim(),
            });
        }
        let steps = config.steps();
        Ok(Simulation {
            config,
            grid,
            ensemble,
            step: 0,
            steps,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn ensemble(&self) -> &ParticleEnsemble {
        &self.ensemble
    }

    /// Completed steps.
    pub fn step_index(&self) -> u64 {
        self.step
    }

    pub fn total_steps(&self) -> u64 {
        self.steps
    }

    pub fn is_finished(&self) -> bool {
        self.step >= self.steps
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.config.dt
    }

    /// Histogram of the current ensemble.
    pub fn current_field(&self) -> Result<DensityField> {
        crate::transport::estimate_density(&self.ensemble, &self.grid, self.time())
    }

    /// Advances one step of size `dt`, whether or not `T` has been reached.
    pub fn step(&mut self) -> Result<StepOutcome> {
        let n = self.step;
        self.advance().map_err(|source| SgipError::Step {
            step: n + 1,
            source: Box::new(source),
        })
    }

    fn advance(&mut self) -> Result<StepOutcome> {
        let cfg = &self.config;
        let n = self.step;
        let t = n as f64 * cfg.dt;
        let t_next = (n + 1) as f64 * cfg.dt;

        let mut moved = self.ensemble.clone();
        advect_diffuse_step(
            &mut moved,
            &cfg.flow,
            cfg.diffusion,
            cfg.dt,
            t,
            cfg.half_width,
            &RngStream::new(cfg.seed, n).with_lane(lane::TRANSPORT),
        )?;
        let assignment = assign_bins(&moved, &self.grid)?;
        let density = density_from_counts(&assignment.counts, moved.particle_mass(), &self.grid, t_next);
        let reacted = integrate_reaction_field(&density, &cfg.reaction, &cfg.scheme, cfg.dt, cfg.u_max)?;
        if reacted.total_mass <= 0.0 {
            self.step += 1;
            return Ok(StepOutcome::Extinct {
                step: n + 1,
                time: t_next,
                field: reacted.field,
            });
        }
        let mut gen = RngStream::new(cfg.seed, n).with_lane(lane::RESAMPLE).generator();
        let (next, plan) = resample(&moved, &assignment, &reacted.field, reacted.total_mass, &mut gen)?;
        self.ensemble = next;
        self.step += 1;
        Ok(StepOutcome::Advanced(StepReport {
            step: n + 1,
            time: t_next,
            field: reacted.field,
            total_mass: reacted.total_mass,
            clamped_bins: reacted.clamped_bins,
            targets: plan.targets,
        }))
    }
}

/// In-memory run result.
#[derive(Debug, Clone)]
pub struct SimOutcome {
    /// Last emitted field (the initial histogram when `T = 0`).
    pub field: DensityField,
    pub steps: u64,
    pub extinct: bool,
}

/// Runs to `T` without writing files.
pub fn simulate(config: &SimConfig) -> Result<SimOutcome> {
    simulate_with(config, |_| Ok(()))
}

/// Runs to `T`, handing every emitted field (initial included) to `observe`.
pub fn simulate_with<F>(config: &SimConfig, mut observe: F) -> Result<SimOutcome>
where
    F: FnMut(&DensityField) -> Result<()>,
{
    let mut sim = Simulation::new(config.clone())?;
    let mut field = sim.current_field()?;
    observe(&field)?;
    while !sim.is_finished() {
        match sim.step()? {
            StepOutcome::Advanced(r) => field = r.field,
            StepOutcome::Extinct { field: f, .. } => {
                observe(&f)?;
                return Ok(SimOutcome {
                    field: f,
                    steps: sim.step_index(),
                    extinct: true,
                });
            }
        }
        observe(&field)?;
    }
    Ok(SimOutcome {
        field,
        steps: sim.step_index(),
        extinct: false,
    })
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Complete,
    Extinct,
}

/// Files written by a run.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub status: RunStatus,
    pub steps: u64,
    pub snapshots: Vec<PathBuf>,
    pub diagnostics: PathBuf,
    pub manifest: PathBuf,
}

pub fn snapshot_name(step: u64) -> String {
    format!("snap_{step:06}.sgrd")
}

/// Snapshot, diagnostics and manifest writer shared by both solvers.
pub(crate) struct RunWriter {
    dir: PathBuf,
    producer: Producer,
    front: Option<FrontSettings>,
    pub(crate) rows: Vec<DiagnosticsRow>,
    pub(crate) snapshots: Vec<PathBuf>,
}

impl RunWriter {
    pub(crate) fn new(dir: &Path, producer: Producer, front: Option<FrontSettings>) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| SgipError::io(dir, e))?;
        Ok(RunWriter {
            dir: dir.to_path_buf(),
            producer,
            front,
            rows: Vec::new(),
            snapshots: Vec::new(),
        })
    }

    pub(crate) fn record(&mut self, step: u64, field: &DensityField, total_mass: f64) -> Result<()> {
        let front_x = match self.front {
            Some(f) => front_position(field, f.threshold, 0, f.smooth)?,
            None => None,
        };
        self.rows.push(DiagnosticsRow {
            step,
            time: field.time(),
            total_mass,
            front_x,
        });
        Ok(())
    }

    pub(crate) fn snapshot(&mut self, step: u64, field: &DensityField) -> Result<()> {
        let path = self.dir.join(snapshot_name(step));
        write_snapshot(field, self.producer, &path)?;
        self.snapshots.push(path);
        Ok(())
    }

    pub(crate) fn diagnostics_path(&self) -> PathBuf {
        self.dir.join("diagnostics.csv")
    }

    pub(crate) fn manifest_path(&self) -> PathBuf {
        self.dir.join("manifest.txt")
    }

    /// Writes diagnostics and the manifest. `status` is `complete`,
    /// `extinct` or `error`.
    pub(crate) fn finish(&self, status: &str, config_text: &str, error: Option<&SgipError>) -> Result<()> {
        write_text(
            &self.diagnostics_path(),
            &format_diagnostics(&self.rows, self.front.is_some()),
        )?;
        let mut m = String::new();
        let _ = writeln!(m, "producer={}", self.producer.label());
        let _ = writeln!(m, "status={status}");
        if let Some(e) = error {
            let _ = writeln!(m, "error.kind={}", e.kind());
            let _ = writeln!(m, "error.message={}", e.to_string().replace('\n', " "));
        }
        let _ = writeln!(m, "steps={}", self.rows.last().map(|r| r.step).unwrap_or(0));
        m.push_str("diagnostics=diagnostics.csv\n");
        for p in &self.snapshots {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            let _ = writeln!(m, "snapshot={name}");
        }
        m.push_str("[config]\n");
        m.push_str(config_text);
        write_text(&self.manifest_path(), &m)
    }
}

/// Runs to `T`, writing `snap_NNNNNN.sgrd` files (the initial histogram and
/// every `snapshot_every` steps), `diagnostics.csv` and `manifest.txt` into
/// `out_dir`. A failing stage still leaves a manifest with `status=error`.
pub fn run(config: &SimConfig, out_dir: &Path) -> Result<RunArtifacts> {
    let mut w = RunWriter::new(out_dir, Producer::Sgip, config.front)?;
    let result = run_inner(config, &mut w);
    let text = config.to_text();
    match result {
        Ok((status, steps)) => {
            let label = match status {
                RunStatus::Complete => "complete",
                RunStatus::Extinct => "extinct",
            };
            w.finish(label, &text, None)?;
            Ok(RunArtifacts {
                status,
                steps,
                snapshots: w.snapshots.clone(),
                diagnostics: w.diagnostics_path(),
                manifest: w.manifest_path(),
            })
        }
        Err(e) => {
            // The original error matters more than a failure to record it.
            let _ = w.finish("error", &text, Some(&e));
            Err(e)
        }
    }
}

fn run_inner(config: &SimConfig, w: &mut RunWriter) -> Result<(RunStatus, u64)> {
    let mut sim = Simulation::new(config.clone())?;
    let initial = sim.current_field()?;
    w.record(0, &initial, initial.total_mass())?;
    w.snapshot(0, &initial)?;
    while !sim.is_finished() {
        match sim.step()? {
            StepOutcome::Advanced(r) => {
                w.record(r.step, &r.field, r.total_mass)?;
                if r.step % config.snapshot_every == 0 || r.step == sim.total_steps() {
                    w.snapshot(r.step, &r.field)?;
                }
            }
            StepOutcome::Extinct { step, field, .. } => {
                w.record(step, &field, 0.0)?;
                w.snapshot(step, &field)?;
                return Ok((RunStatus::Extinct, step));
            }
        }
    }
    Ok((RunStatus::Complete, sim.step_index()))
}
