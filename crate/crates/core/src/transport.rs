//! Particle advection-diffusion (Euler-Maruyama), reflecting walls and
//! histogram density estimation.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Result, SgipError};
use crate::flows::FlowField;
use crate::grid::{DensityField, GridSpec, ParticleEnsemble};
use crate::rng::RngStream;

/// Particles per work unit; also the unit of random-stream chunking.
pub const PARTICLE_CHUNK: usize = 4096;

/// Mirror-reflects one coordinate into `[-L, L]`.
///
/// Interior values are returned untouched. Outside values are folded with
/// period `4L`, which is the same as reflecting about the walls repeatedly.
#[inline]
pub fn reflect_coordinate(x: f64, half_width: f64) -> f64 {
    if x >= -half_width && x <= half_width {
        return x;
    }
    let width = 2.0 * half_width;
    let mut y = (x + half_width).rem_euclid(2.0 * width);
    if y > width {
        y = 2.0 * width - y;
    }
    (y - half_width).clamp(-half_width, half_width)
}

pub fn reflect_boundary(position: &mut [f64], half_width: f64) {
    for x in position.iter_mut() {
        *x = reflect_coordinate(*x, half_width);
    }
}

/// One Euler-Maruyama step `X + v(X, t) dt + sqrt(2 D dt) ξ` for every
/// particle, followed by wall reflection. Masses are untouched.
///
/// Particle `i` draws its `d` normals from chunk `i / PARTICLE_CHUNK` of
/// `rng`, so the result does not depend on the worker count.
pub fn advect_diffuse_step(
    ensemble: &mut ParticleEnsemble,
    flow: &FlowField,
    diffusion: f64,
    dt: f64,
    t: f64,
    half_width: f64,
    rng: &RngStream,
) -> Result<()> {
    let dim = ensemble.dim();
    flow.check_dimension(dim)?;
    if !(diffusion >= 0.0 && diffusion.is_finite()) {
        return Err(SgipError::InvalidParameter(format!("diffusion {diffusion}")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SgipError::InvalidParameter(format!("time step {dt}")));
    }
    if ensemble.is_empty() {
        return Err(SgipError::InvalidParameter("empty ensemble".into()));
    }
    let noise = (2.0 * diffusion * dt).sqrt();
    let drift = !flow.is_zero();

    let bad: Option<usize> = ensemble
        .positions_mut()
        .par_chunks_mut(PARTICLE_CHUNK * dim)
        .enumerate()
        .map(|(c, chunk)| {
            let mut gen = rng.chunk_generator(c as u64);
            let mut first_bad = None;
            for (k, p) in chunk.chunks_exact_mut(dim).enumerate() {
                let v = if drift {
                    flow.velocity_unchecked(p, t)
                } else {
                    [0.0; 3]
                };
                for a in 0..dim {
                    let mut x = p[a] + v[a] * dt;
                    if noise > 0.0 {
                        let xi: f64 = StandardNormal.sample(&mut gen);
                        x += noise * xi;
                    }
                    p[a] = x;
                }
                if p.iter().any(|x| !x.is_finite()) {
                    first_bad.get_or_insert(c * PARTICLE_CHUNK + k);
                    continue;
                }
                reflect_boundary(p, half_width);
            }
            first_bad
        })
        .reduce(|| None, |a, b| match (a, b) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, y) => x.or(y),
        });
    match bad {
        Some(index) => Err(SgipError::NonFiniteParticle { index }),
        None => Ok(()),
    }
}

/// Bin membership of every particle plus per-bin counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinAssignment {
    pub bins: Vec<usize>,
    pub counts: Vec<usize>,
}

pub fn assign_bins(ensemble: &ParticleEnsemble, grid: &GridSpec) -> Result<BinAssignment> {
    if ensemble.dim() != grid.dim() {
        return Err(SgipError::DimensionMismatch {
            expected: grid.dim(),
            got: ensemble.dim(),
        });
    }
    let dim = grid.dim();
    let mut bins = vec![0usize; ensemble.len()];
    bins.par_chunks_mut(PARTICLE_CHUNK)
        .zip(ensemble.positions().par_chunks(PARTICLE_CHUNK * dim))
        .for_each(|(out, pts)| {
            for (b, p) in out.iter_mut().zip(pts.chunks_exact(dim)) {
                *b = grid.locate(p);
            }
        });
    let mut counts = vec![0usize; grid.num_bins()];
    for &b in &bins {
        counts[b] += 1;
    }
    Ok(BinAssignment { bins, counts })
}

/// `u_j = m c_j / Δx^d`.
pub fn density_from_counts(
    counts: &[usize],
    particle_mass: f64,
    grid: &GridSpec,
    time: f64,
) -> DensityField {
    let scale = particle_mass / grid.bin_volume();
    let values = counts.iter().map(|&c| c as f64 * scale).collect();
    DensityField::from_parts(*grid, values, time)
}

/// Histogram estimate of the particle density.
pub fn estimate_density(
    ensemble: &ParticleEnsemble,
    grid: &GridSpec,
    time: f64,
) -> Result<DensityField> {
    let assignment = assign_bins(ensemble, grid)?;
    Ok(density_from_counts(
        &assignment.counts,
        ensemble.particle_mass(),
        grid,
        time,
    ))
}
