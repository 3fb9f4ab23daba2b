//! Field comparison, front tracking and refinement studies.

use rayon::prelude::*;

use crate::driver::simulate;
use crate::error::{Result, SgipError};
use crate::grid::{compensated_sum, DensityField, GridSpec};
use crate::io::config::SimConfig;
use crate::io::tables::ConvergenceRow;

fn check_same_grid(a: &DensityField, b: &DensityField) -> Result<()> {
    if a.grid().same_shape(b.grid()) {
        Ok(())
    } else {
        Err(SgipError::GridMismatch(format!(
            "{:?} vs {:?}",
            a.grid(),
            b.grid()
        )))
    }
}

/// Discrete `L2` norm `sqrt(sum_j dx^d u_j^2)`.
pub fn l2_norm(a: &DensityField) -> f64 {
    let sq: Vec<f64> = a.values().iter().map(|v| v * v).collect();
    (compensated_sum(&sq) * a.grid().bin_volume()).sqrt()
}

/// Discrete `L2` distance `sqrt(sum_j dx^d (a_j - b_j)^2)`.
pub fn l2_error(a: &DensityField, b: &DensityField) -> Result<f64> {
    check_same_grid(a, b)?;
    let sq: Vec<f64> = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y) * (x - y))
        .collect();
    Ok((compensated_sum(&sq) * a.grid().bin_volume()).sqrt())
}

/// `||a - reference|| / ||reference||`.
pub fn relative_l2(a: &DensityField, reference: &DensityField) -> Result<f64> {
    let norm = l2_norm(reference);
    if norm == 0.0 {
        return Err(SgipError::InvalidParameter("reference field is zero".into()));
    }
    Ok(l2_error(a, reference)? / norm)
}

/// Cell-averages `field` onto the coarser `target` grid. The target must
/// cover the same domain with a bin count dividing the source bin count.
pub fn restrict(field: &DensityField, target: &GridSpec) -> Result<DensityField> {
    let src = field.grid();
    let ratio = src.bins_per_dim() / target.bins_per_dim().max(1);
    if src.dim() != target.dim()
        || (src.half_width() - target.half_width()).abs() > 1e-12 * src.half_width()
        || ratio == 0
        || ratio * target.bins_per_dim() != src.bins_per_dim()
    {
        return Err(SgipError::GridMismatch(format!(
            "cannot restrict {} bins per axis onto {}",
            src.bins_per_dim(),
            target.bins_per_dim()
        )));
    }
    if ratio == 1 {
        return Ok(field.clone());
    }
    let d = src.dim();
    let (ms, mt) = (src.bins_per_dim(), target.bins_per_dim());
    let mut out = vec![0.0; target.num_bins()];
    // Sum fine cells along the fastest axis first, then fold the others.
    let mut k = [0usize; 3];
    for (line, chunk) in field.values().chunks_exact(ms).enumerate() {
        let mut rest = line;
        for a in (0..d - 1).rev() {
            k[a] = rest % ms;
            rest /= ms;
        }
        let mut base = 0;
        for &ka in &k[..d - 1] {
            base = base * mt + ka / ratio;
        }
        let row = &mut out[base * mt..(base + 1) * mt];
        for (c, block) in chunk.chunks_exact(ratio).enumerate() {
            row[c] += block.iter().sum::<f64>();
        }
    }
    let scale = 1.0 / (ratio as f64).powi(d as i32);
    for v in &mut out {
        *v *= scale;
    }
    DensityField::new(*target, out, field.time())
}

/// Restricts both fields to the coarser of the two grids.
pub fn restrict_to_common(a: &DensityField, b: &DensityField) -> Result<(DensityField, DensityField)> {
    if a.grid().bins_per_dim() >= b.grid().bins_per_dim() {
        Ok((restrict(a, b.grid())?, b.clone()))
    } else {
        Ok((a.clone(), restrict(b, a.grid())?))
    }
}

/// Trace of `field` along `axis` through the domain center. With an even bin
/// count the two central lines of each other axis are averaged.
pub fn axis_trace(field: &DensityField, axis: usize) -> Result<Vec<f64>> {
    let g = field.grid();
    let d = g.dim();
    if axis >= d {
        return Err(SgipError::InvalidParameter(format!("axis {axis} in {d}D")));
    }
    let m = g.bins_per_dim();
    let mid: Vec<usize> = if m % 2 == 0 { vec![m / 2 - 1, m / 2] } else { vec![m / 2] };
    let others: Vec<usize> = (0..d).filter(|&a| a != axis).collect();
    let combos = mid.len().pow(others.len() as u32);
    let mut trace = vec![0.0; m];
    for c in 0..combos {
        let mut idx = [0usize; 3];
        let mut rest = c;
        for &a in &others {
            idx[a] = mid[rest % mid.len()];
            rest /= mid.len();
        }
        for (k, t) in trace.iter_mut().enumerate() {
            idx[axis] = k;
            let flat = idx[..d].iter().fold(0, |acc, &i| acc * m + i);
            *t += field.values()[flat];
        }
    }
    for t in &mut trace {
        *t /= combos as f64;
    }
    Ok(trace)
}

/// One pass of three-point averaging; the end bins see themselves as ghosts.
pub fn smooth_trace(trace: &[f64]) -> Vec<f64> {
    let n = trace.len();
    (0..n)
        .map(|j| {
            let l = trace[j.saturating_sub(1)];
            let r = trace[(j + 1).min(n - 1)];
            (l + trace[j] + r) / 3.0
        })
        .collect()
}

fn check_threshold(threshold: f64) -> Result<()> {
    if threshold > 0.0 && threshold < 1.0 {
        Ok(())
    } else {
        Err(SgipError::InvalidParameter(format!(
            "threshold {threshold} must lie in (0, 1)"
        )))
    }
}

/// Rightmost point where `trace` drops from `>= threshold` to `< threshold`,
/// linearly interpolated between bin centers `lower + (j + 1/2) dx`.
/// `None` when there is no such crossing.
pub fn trace_front(trace: &[f64], lower: f64, dx: f64, threshold: f64) -> Option<f64> {
    (0..trace.len().saturating_sub(1))
        .rev()
        .find(|&j| trace[j] >= threshold && trace[j + 1] < threshold)
        .map(|j| {
            let c = lower + (j as f64 + 0.5) * dx;
            c + dx * (trace[j] - threshold) / (trace[j] - trace[j + 1])
        })
}

/// Front position on the center trace along `axis`; `Ok(None)` means no front.
pub fn front_position(
    field: &DensityField,
    threshold: f64,
    axis: usize,
    smooth: bool,
) -> Result<Option<f64>> {
    check_threshold(threshold)?;
    let mut trace = axis_trace(field, axis)?;
    if smooth {
        trace = smooth_trace(&trace);
    }
    let g = field.grid();
    Ok(trace_front(&trace, -g.half_width(), g.bin_size(), threshold))
}

/// Least-squares slope of `x` against `t`.
pub fn front_speed(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(SgipError::InvalidParameter(format!(
            "front speed needs at least 3 points, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let tm = points.iter().map(|p| p.0).sum::<f64>() / n;
    let xm = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - tm) * (p.1 - xm)).sum();
    if sxx == 0.0 {
        return Err(SgipError::InvalidParameter("all front times coincide".into()));
    }
    Ok(sxy / sxx)
}

/// Slope over the points with `t0 <= t <= t1`.
pub fn front_speed_window(points: &[(f64, f64)], t0: f64, t1: f64) -> Result<f64> {
    let eps = 1e-9 * t1.abs().max(1.0);
    let sel: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(t, _)| t >= t0 - eps && t <= t1 + eps)
        .collect();
    front_speed(&sel)
}

/// Default fitting window: the second half of the series.
pub fn front_speed_second_half(points: &[(f64, f64)]) -> Result<f64> {
    let t_end = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    front_speed_window(points, 0.5 * t_end, t_end)
}

/// One level of a refinement schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub dt: f64,
    pub dx: f64,
    pub particles: usize,
}

impl Level {
    /// `kappa = dx / dt`.
    pub fn kappa(&self) -> f64 {
        self.dx / self.dt
    }

    /// `nu = 1 / (sqrt(N dx^d) dt)`.
    pub fn nu(&self, dim: usize) -> f64 {
        1.0 / ((self.particles as f64 * self.dx.powi(dim as i32)).sqrt() * self.dt)
    }
}

/// Refinement levels with non-increasing `kappa` and `nu`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSchedule {
    dim: usize,
    levels: Vec<Level>,
}

impl ConvergenceSchedule {
    pub fn new(dim: usize, levels: Vec<Level>) -> Result<Self> {
        if levels.is_empty() {
            return Err(SgipError::InvalidParameter("empty schedule".into()));
        }
        for l in &levels {
            if !(l.dt > 0.0 && l.dx > 0.0 && l.particles > 0) {
                return Err(SgipError::InvalidParameter(format!("bad level {l:?}")));
            }
        }
        let slack = 1.0 + 1e-12;
        for (i, w) in levels.windows(2).enumerate() {
            if w[1].kappa() > w[0].kappa() * slack {
                return Err(SgipError::InvalidParameter(format!(
                    "kappa increases from level {} to {}",
                    i + 1,
                    i + 2
                )));
            }
            if w[1].nu(dim) > w[0].nu(dim) * slack {
                return Err(SgipError::InvalidParameter(format!(
                    "nu increases from level {} to {}",
                    i + 1,
                    i + 2
                )));
            }
        }
        Ok(ConvergenceSchedule { dim, levels })
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSummary {
    pub level: usize,
    pub mean_l2: f64,
    pub kappa: f64,
    pub nu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    pub levels: Vec<LevelSummary>,
    /// Whether the mean error never increases along the schedule.
    pub monotone: bool,
}

/// Runs `base` at every level and seed and compares the final field with
/// the reference restricted to each level's grid. Levels are numbered from 1.
pub fn convergence_study(
    base: &SimConfig,
    schedule: &ConvergenceSchedule,
    seeds: &[u64],
    reference: &DensityField,
) -> Result<ConvergenceTable> {
    if seeds.is_empty() {
        return Err(SgipError::InvalidParameter("no seeds".into()));
    }
    if schedule.dim != base.dim {
        return Err(SgipError::DimensionMismatch {
            expected: base.dim,
            got: schedule.dim,
        });
    }
    let finest = schedule
        .levels
        .iter()
        .map(|l| l.dx)
        .fold(f64::INFINITY, f64::min);
    if reference.grid().bin_size() > finest / 4.0 * (1.0 + 1e-9) {
        return Err(SgipError::InvalidParameter(format!(
            "reference spacing {} is not 4x finer than {finest}",
            reference.grid().bin_size()
        )));
    }
    let mut jobs = Vec::new();
    for (i, level) in schedule.levels.iter().enumerate() {
        let grid = GridSpec::with_spacing(base.dim, base.half_width, level.dx)?;
        let target = restrict(reference, &grid)?;
        let mut cfg = base.clone();
        cfg.dt = level.dt;
        cfg.bins_per_dim = grid.bins_per_dim();
        cfg.particles = level.particles;
        cfg.validate()?;
        for &seed in seeds {
            let mut c = cfg.clone();
            c.seed = seed;
            jobs.push((i, c, target.clone()));
        }
    }
    let rows = jobs
        .into_par_iter()
        .map(|(i, cfg, target)| {
            let out = simulate(&cfg)?;
            Ok(ConvergenceRow {
                level: i + 1,
                dt: cfg.dt,
                dx: target.grid().bin_size(),
                particles: cfg.particles,
                seed: cfg.seed,
                l2_error: l2_error(&out.field, &target)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let levels: Vec<LevelSummary> = schedule
        .levels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let errs: Vec<f64> = rows.iter().filter(|r| r.level == i + 1).map(|r| r.l2_error).collect();
            LevelSummary {
                level: i + 1,
                mean_l2: errs.iter().sum::<f64>() / errs.len() as f64,
                kappa: l.kappa(),
                nu: l.nu(schedule.dim),
            }
        })
        .collect();
    let monotone = levels.windows(2).all(|w| w[1].mean_l2 <= w[0].mean_l2);
    Ok(ConvergenceTable {
        rows,
        levels,
        monotone,
    })
}
