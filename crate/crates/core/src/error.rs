use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the solver, the reference solver and the file formats.
#[derive(Debug, Error)]
pub enum SgipError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite coordinate {value} on axis {axis}")]
    NonFiniteCoordinate { axis: usize, value: f64 },

    #[error("bin index {index} out of range (grid has {bins} bins)")]
    BinOutOfRange { index: usize, bins: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("reaction solve failed: {0}")]
    Reaction(#[from] ReactionError),

    #[error("reaction solve failed in bin {bin}: {source}")]
    ReactionBin {
        bin: usize,
        #[source]
        source: ReactionError,
    },

    #[error("particle {index} left the finite range")]
    NonFiniteParticle { index: usize },

    #[error("total mass is {0}; nothing left to resample")]
    ZeroMass(f64),

    #[error("resampling mismatch: {0}")]
    ResampleMismatch(String),

    #[error("initial condition: {0}")]
    InitialCondition(String),

    #[error("stability violation: {0}")]
    Stability(String),

    #[error("non-finite value in cell {cell}")]
    NonFiniteCell { cell: usize },

    #[error("step {step}: {source}")]
    Step {
        step: u64,
        #[source]
        source: Box<SgipError>,
    },

    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Snapshot(#[from] SnapshotError),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SgipError {
    /// Short machine-readable tag used by the command-line front end.
    pub fn kind(&self) -> &'static str {
        match self {
            SgipError::InvalidGrid(_) => "invalid_grid",
            SgipError::NonFiniteCoordinate { .. } => "non_finite_coordinate",
            SgipError::BinOutOfRange { .. } => "bin_out_of_range",
            SgipError::DimensionMismatch { .. } => "dimension_mismatch",
            SgipError::GridMismatch(_) => "grid_mismatch",
            SgipError::InvalidParameter(_) => "invalid_parameter",
            SgipError::Reaction(_) | SgipError::ReactionBin { .. } => "reaction",
            SgipError::NonFiniteParticle { .. } => "non_finite_particle",
            SgipError::ZeroMass(_) => "zero_mass",
            SgipError::ResampleMismatch(_) => "resample_mismatch",
            SgipError::InitialCondition(_) => "initial_condition",
            SgipError::Stability(_) => "stability",
            SgipError::NonFiniteCell { .. } => "non_finite_cell",
            SgipError::Step { source, .. } => source.kind(),
            SgipError::Config(_) => "config",
            SgipError::Snapshot(e) => e.kind(),
            SgipError::Io { .. } => "io",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SgipError::Io {
            path: path.into(),
            source,
        }
    }
}

/// Failure of a per-bin reaction solve.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReactionError {
    #[error("Newton did not converge in {iterations} iterations (last iterate {last}, residual {residual:e})")]
    NoConvergence {
        iterations: usize,
        last: f64,
        residual: f64,
    },

    #[error("non-finite Newton iterate")]
    NonFinite,

    #[error("logistic denominator {0} is not positive")]
    Denominator(f64),

    #[error("{0} has no closed-form solution")]
    NoClosedForm(&'static str),

    #[error("invalid reaction parameter: {0}")]
    InvalidParameter(String),
}

/// Configuration file problems; each carries the offending key and line.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("missing required key `{key}`")]
    MissingKey { key: String },

    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { key: String, line: usize },

    #[error("line {line}: cannot parse `{key}`: {message}")]
    BadValue {
        key: String,
        line: usize,
        message: String,
    },

    #[error("line {line}: malformed line, expected key=value")]
    Malformed { line: usize },

    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { key: String, line: usize },

    #[error("`{key}`: {message}")]
    Invalid { key: String, message: String },
}

impl ConfigError {
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::MissingKey { key }
            | ConfigError::UnknownKey { key, .. }
            | ConfigError::BadValue { key, .. }
            | ConfigError::Duplicate { key, .. }
            | ConfigError::Invalid { key, .. } => Some(key),
            ConfigError::Malformed { .. } => None,
        }
    }

    pub fn line(&self) -> Option<usize> {
        match self {
            ConfigError::UnknownKey { line, .. }
            | ConfigError::BadValue { line, .. }
            | ConfigError::Malformed { line }
            | ConfigError::Duplicate { line, .. } => Some(*line),
            ConfigError::MissingKey { .. } | ConfigError::Invalid { .. } => None,
        }
    }
}

/// Snapshot decoding errors, one variant per failure kind.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SnapshotError {
    #[error("bad magic bytes {0:?}")]
    BadMagic([u8; 4]),

    #[error("unsupported snapshot version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("truncated snapshot: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("malformed snapshot: {0}")]
    Malformed(String),
}

impl SnapshotError {
    pub fn kind(&self) -> &'static str {
        match self {
            SnapshotError::BadMagic(_) => "bad_magic",
            SnapshotError::VersionMismatch { .. } => "version_mismatch",
            SnapshotError::Truncated { .. } => "truncated",
            SnapshotError::Malformed(_) => "malformed_snapshot",
        }
    }
}

pub type Result<T, E = SgipError> = std::result::Result<T, E>;
