//! Initial conditions `u_0` and particle sampling from `u_0 / M_0`.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Result, SgipError};
use crate::grid::{compensated_sum, DensityField, GridSpec, ParticleEnsemble};
use crate::resampling::sample_in_bin;
use crate::rng::RngStream;

/// Rejection sampling gives up after this many proposals per particle.
pub const MAX_PROPOSALS_PER_PARTICLE: usize = 10_000;

/// Indicator-type or tabulated initial data.
#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    /// Indicator of `[a, b]` in 1D.
    Interval { a: f64, b: f64 },
    /// Indicator of a product of intervals, one per axis.
    Box(Vec<(f64, f64)>),
    /// Indicator of a closed ball.
    Ball { center: Vec<f64>, radius: f64 },
    /// Tabulated density on a grid.
    Custom(DensityField),
}

impl InitSpec {
    pub fn dimension(&self) -> Option<usize> {
        match self {
            InitSpec::Interval { .. } => Some(1),
            InitSpec::Box(b) => Some(b.len()),
            InitSpec::Ball { center, .. } => Some(center.len()),
            InitSpec::Custom(f) => Some(f.grid().dim()),
        }
    }

    /// Total mass `M_0`.
    pub fn mass(&self) -> f64 {
        match self {
            InitSpec::Interval { a, b } => b - a,
            InitSpec::Box(b) => b.iter().map(|(lo, hi)| hi - lo).product(),
            InitSpec::Ball { center, radius } => ball_volume(center.len(), *radius),
            InitSpec::Custom(f) => f.total_mass(),
        }
    }

    /// Checks dimension, support containment and `M_0 > 0`.
    pub fn validate(&self, dim: usize, half_width: f64) -> Result<()> {
        let err = |m: String| Err(SgipError::InitialCondition(m));
        if self.dimension() != Some(dim) {
            return Err(SgipError::DimensionMismatch {
                expected: dim,
                got: self.dimension().unwrap_or(0),
            });
        }
        let inside = |x: f64| x.is_finite() && (-half_width..=half_width).contains(&x);
        match self {
            InitSpec::Interval { a, b } => {
                if !(inside(*a) && inside(*b)) {
                    return err(format!("interval [{a}, {b}] leaves the domain"));
                }
            }
            InitSpec::Box(b) => {
                if b.iter().any(|&(lo, hi)| !(inside(lo) && inside(hi))) {
                    return err("box leaves the domain".into());
                }
                if b.iter().any(|&(lo, hi)| hi < lo) {
                    return err("box has an inverted side".into());
                }
            }
            InitSpec::Ball { center, radius } => {
                if !(radius.is_finite() && *radius >= 0.0)
                    || center.iter().any(|&c| !(inside(c - radius) && inside(c + radius)))
                {
                    return err(format!("ball of radius {radius} leaves the domain"));
                }
            }
            InitSpec::Custom(f) => {
                if f.grid().half_width() > half_width {
                    return err("tabulated density extends past the domain".into());
                }
            }
        }
        let mass = self.mass();
        if !(mass > 0.0 && mass.is_finite()) {
            return err(format!("initial mass must be positive, got {mass}"));
        }
        Ok(())
    }

    /// Average of `u_0` over the cell of `grid` with flat index `cell`.
    pub fn cell_average(&self, grid: &GridSpec, cell: usize) -> Result<f64> {
        let ks = grid.unravel(cell)?;
        let dx = grid.bin_size();
        let lower: Vec<f64> = ks[..grid.dim()].iter().map(|&k| grid.axis_lower(k)).collect();
        let overlap = |lo: f64, hi: f64, a: f64| ((hi.min(a + dx) - lo.max(a)).max(0.0)) / dx;
        Ok(match self {
            InitSpec::Interval { a, b } => overlap(*a, *b, lower[0]),
            InitSpec::Box(b) => b
                .iter()
                .zip(&lower)
                .map(|(&(lo, hi), &x)| overlap(lo, hi, x))
                .product(),
            InitSpec::Ball { center, radius } => {
                // midpoint rule on a 4^d sub-lattice
                const SUB: usize = 4;
                let d = grid.dim();
                let total = SUB.pow(d as u32);
                let mut hits = 0;
                for s in 0..total {
                    let mut rest = s;
                    let mut r2 = 0.0;
                    for a in 0..d {
                        let q = rest % SUB;
                        rest /= SUB;
                        let x = lower[a] + (q as f64 + 0.5) * dx / SUB as f64;
                        r2 += (x - center[a]).powi(2);
                    }
                    if r2 <= radius * radius {
                        hits += 1;
                    }
                }
                hits as f64 / total as f64
            }
            InitSpec::Custom(f) => {
                let centre: Vec<f64> = ks[..grid.dim()].iter().map(|&k| grid.axis_center(k)).collect();
                if f.grid().contains(&centre) {
                    f.values()[f.grid().locate(&centre)]
                } else {
                    0.0
                }
            }
        })
    }
}

pub fn ball_volume(dim: usize, radius: f64) -> f64 {
    match dim {
        1 => 2.0 * radius,
        2 => PI * radius * radius,
        3 => 4.0 / 3.0 * PI * radius.powi(3),
        _ => f64::NAN,
    }
}

/// Samples `n` particles i.i.d. from `u_0 / M_0`, each carrying `M_0 / n`.
pub fn init_particles(
    init: &InitSpec,
    dim: usize,
    half_width: f64,
    n: usize,
    rng: &RngStream,
) -> Result<ParticleEnsemble> {
    init.validate(dim, half_width)?;
    if n == 0 {
        return Err(SgipError::InvalidParameter("particle count must be at least 1".into()));
    }
    let mut gen = rng.generator();
    let mut pos = Vec::with_capacity(n * dim);
    match init {
        InitSpec::Interval { a, b } => {
            for _ in 0..n {
                pos.push(a + (b - a) * gen.random::<f64>());
            }
        }
        InitSpec::Box(sides) => {
            for _ in 0..n {
                for &(lo, hi) in sides {
                    pos.push(lo + (hi - lo) * gen.random::<f64>());
                }
            }
        }
        InitSpec::Ball { center, radius } => {
            let budget = n.saturating_mul(MAX_PROPOSALS_PER_PARTICLE);
            let mut proposals = 0usize;
            let mut p = vec![0.0; dim];
            while pos.len() < n * dim {
                if proposals >= budget {
                    return Err(SgipError::InitialCondition(format!(
                        "rejection sampler exhausted {budget} proposals"
                    )));
                }
                proposals += 1;
                let mut r2 = 0.0;
                for a in 0..dim {
                    p[a] = center[a] + radius * (2.0 * gen.random::<f64>() - 1.0);
                    r2 += (p[a] - center[a]).powi(2);
                }
                if r2 <= radius * radius {
                    pos.extend_from_slice(&p);
                }
            }
        }
        InitSpec::Custom(field) => {
            let grid = field.grid();
            let total = compensated_sum(field.values());
            let mut cdf = Vec::with_capacity(field.values().len());
            let mut acc = 0.0;
            for v in field.values() {
                acc += v / total;
                cdf.push(acc);
            }
            let last_positive = field.values().iter().rposition(|&v| v > 0.0).unwrap_or(0);
            for _ in 0..n {
                let u: f64 = gen.random::<f64>() * acc;
                let j = cdf.partition_point(|&c| c <= u).min(last_positive);
                sample_in_bin(grid, j, 1, &mut gen, &mut pos)?;
            }
        }
    }
    ParticleEnsemble::new(dim, pos, init.mass())
}
