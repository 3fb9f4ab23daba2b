//! Text tables: diagnostics, front series and convergence results.
//!
//! Each file starts with a versioned `#` comment line followed by a column
//! header. Floats are printed in shortest round-trip form.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Result, SgipError};

pub const DIAGNOSTICS_HEADER: &str = "# sgip-diag v1";
pub const FRONT_HEADER: &str = "# sgip-front v1";
pub const CONVERGENCE_HEADER: &str = "# sgip-converge v1";

/// One row of the per-step diagnostics table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRow {
    pub step: u64,
    pub time: f64,
    pub total_mass: f64,
    pub front_x: Option<f64>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn format_diagnostics(rows: &[DiagnosticsRow], with_front: bool) -> String {
    let mut s = String::new();
    s.push_str(DIAGNOSTICS_HEADER);
    s.push('\n');
    s.push_str(if with_front {
        "step,time,total_mass,front_x\n"
    } else {
        "step,time,total_mass\n"
    });
    for r in rows {
        let _ = write!(s, "{},{},{}", r.step, r.time, r.total_mass);
        if with_front {
            let _ = write!(s, ",{}", opt(r.front_x));
        }
        s.push('\n');
    }
    s
}

pub fn format_front_series(rows: &[(f64, Option<f64>)]) -> String {
    let mut s = format!("{FRONT_HEADER}\nt,front_x\n");
    for (t, x) in rows {
        let _ = writeln!(s, "{t},{}", opt(*x));
    }
    s
}

/// Parses a `t,front_x` table; rows without a front are skipped.
pub fn parse_front_series(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("t,") {
            continue;
        }
        let mut parts = line.split(',');
        let t = parts.next().unwrap_or("");
        let x = parts.next().unwrap_or("");
        if x.is_empty() {
            continue;
        }
        let bad = || SgipError::InvalidParameter(format!("front table line {}: `{line}`", n + 1));
        out.push((t.parse().map_err(|_| bad())?, x.parse().map_err(|_| bad())?));
    }
    Ok(out)
}

/// One row of a convergence study: `level,dt,dx,N,seed,l2_error`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub level: usize,
    pub dt: f64,
    pub dx: f64,
    pub particles: usize,
    pub seed: u64,
    pub l2_error: f64,
}

pub fn format_convergence(rows: &[ConvergenceRow]) -> String {
    let mut s = format!("{CONVERGENCE_HEADER}\nlevel,dt,dx,N,seed,l2_error\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.level, r.dt, r.dx, r.particles, r.seed, r.l2_error
        );
    }
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| SgipError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagnostics_layout() {
        let rows = [
            DiagnosticsRow { step: 0, time: 0.0, total_mass: 1.0, front_x: Some(0.5) },
            DiagnosticsRow { step: 1, time: 0.5, total_mass: 1.25, front_x: None },
        ];
        assert_eq!(
            format_diagnostics(&rows, true),
            "# sgip-diag v1\nstep,time,total_mass,front_x\n0,0,1,0.5\n1,0.5,1.25,\n"
        );
        assert_eq!(
            format_diagnostics(&rows[..1], false),
            "# sgip-diag v1\nstep,time,total_mass\n0,0,1\n"
        );
    }

    #[test]
    fn front_series_round_trip() {
        let rows = [(0.5, Some(1.25)), (1.0, None), (1.5, Some(-3.0))];
        let text = format_front_series(&rows);
        assert_eq!(parse_front_series(&text).unwrap(), vec![(0.5, 1.25), (1.5, -3.0)]);
        assert!(parse_front_series("1,abc\n").is_err());
    }
}
