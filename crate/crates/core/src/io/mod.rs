//! File formats: run configuration, binary snapshots and CSV tables.

pub mod config;
pub mod snapshot;
pub mod tables;

pub use config::{parse_config, parse_schedule, Advection, AnyConfig, FdmConfig, FrontSettings, SimConfig};
pub use snapshot::{decode_snapshot, encode_snapshot, read_snapshot, write_snapshot, Producer, Snapshot};
pub use tables::{ConvergenceRow, DiagnosticsRow};
