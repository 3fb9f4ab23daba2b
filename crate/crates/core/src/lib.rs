//! Stochastic particle solver (SGIP) for reaction-diffusion-advection
//! equations
//!
//! ```text
//! u_t + div(v u) = D lap(u) + r(u)   on [-L, L]^d, reflecting walls
//! ```
//!
//! with incompressible `v`. Particles carry the transport step, a histogram
//! turns them into a density, the reaction acts bin by bin and a multinomial
//! resampling step hands the new mass back to particles. A finite-difference
//! reference solver and comparison diagnostics are included.

pub mod diagnostics;
pub mod driver;
pub mod error;
pub mod fdm;
pub mod flows;
pub mod grid;
pub mod init;
pub mod io;
pub mod reactions;
pub mod resampling;
pub mod rng;
pub mod transport;

pub use diagnostics::{
    convergence_study, front_position, front_speed, l2_error, relative_l2, restrict,
    ConvergenceSchedule, ConvergenceTable, Level,
};
pub use driver::{run, simulate, simulate_with, RunArtifacts, RunStatus, SimOutcome, Simulation, StepOutcome, StepReport};
pub use error::{ConfigError, ReactionError, Result, SgipError, SnapshotError};
pub use fdm::{fdm_run, fdm_step, stable_time_step, FdmSolver};
pub use flows::FlowField;
pub use grid::{field_total_mass, DensityField, GridSpec, ParticleEnsemble};
pub use init::{init_particles, InitSpec};
pub use io::{AnyConfig, FdmConfig, FrontSettings, Producer, SimConfig};
pub use reactions::{integrate_reaction_field, IntegratorScheme, ReactionModel};
pub use rng::RngStream;
