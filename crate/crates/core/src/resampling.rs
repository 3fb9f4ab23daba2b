//! Genetic resampling: reallocate the `N` particle slots over the bins in
//! proportion to the post-reaction bin mass.
//!
//! Per bin `j` with target count `n_j` and current count `c_j`:
//!
//! * `c_j > 0, n_j <= c_j`: a uniform size-`n_j` subset of the bin's particles survives;
//! * `c_j > 0, n_j > c_j`: `n_j` uniform picks with replacement;
//! * `c_j = 0`: `n_j` fresh positions uniform over the bin box.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Result, SgipError};
use crate::grid::{compensated_sum, DensityField, GridSpec, ParticleEnsemble, MAX_DIM};
use crate::transport::BinAssignment;

/// Multinomial allocation of particles to bins.
#[derive(Debug, Clone, PartialEq)]
pub struct ResamplePlan {
    pub probabilities: Vec<f64>,
    pub targets: Vec<usize>,
    pub current: Vec<usize>,
}

/// `p_j = u_j Δx^d / M`.
pub fn bin_probabilities(field: &DensityField) -> Result<Vec<f64>> {
    let total = compensated_sum(field.values());
    if !(total > 0.0) {
        return Err(SgipError::ZeroMass(total * field.grid().bin_volume()));
    }
    Ok(field.values().iter().map(|v| v / total).collect())
}

/// Draws `Multinomial(n, p)` by conditional binomials, one bin at a time.
pub fn multinomial_draw<R: Rng + ?Sized>(n: usize, p: &[f64], rng: &mut R) -> Vec<usize> {
    let mut counts = vec![0usize; p.len()];
    let Some(last) = p.iter().rposition(|&q| q > 0.0) else {
        return counts;
    };
    // suffix[j] = Σ_{k >= j} p_k, so the conditional probability needs no
    // running subtraction.
    let mut suffix = vec![0.0; last + 2];
    for j in (0..=last).rev() {
        suffix[j] = suffix[j + 1] + p[j].max(0.0);
    }
    let mut remaining = n as u64;
    for j in 0..last {
        if remaining == 0 {
            return counts;
        }
        let q = p[j].max(0.0);
        if q == 0.0 {
            continue;
        }
        let cond = (q / suffix[j]).min(1.0);
        let draw = Binomial::new(remaining, cond)
            .expect("conditional probability lies in [0, 1]")
            .sample(rng);
        counts[j] = draw as usize;
        remaining -= draw;
    }
    counts[last] = remaining as usize;
    counts
}

/// Draws the per-bin targets for `n` particles from `field`.
pub fn plan<R: Rng + ?Sized>(
    n: usize,
    field: &DensityField,
    current: &[usize],
    rng: &mut R,
) -> Result<ResamplePlan> {
    if current.len() != field.grid().num_bins() {
        return Err(SgipError::ResampleMismatch(format!(
            "{} bin counts for {} bins",
            current.len(),
            field.grid().num_bins()
        )));
    }
    let probabilities = bin_probabilities(field)?;
    let targets = multinomial_draw(n, &probabilities, rng);
    Ok(ResamplePlan {
        probabilities,
        targets,
        current: current.to_vec(),
    })
}

/// Resamples `ensemble` onto the post-reaction field. Returns the new
/// ensemble (grouped by bin, ascending) and the plan that produced it.
pub fn resample<R: Rng + ?Sized>(
    ensemble: &ParticleEnsemble,
    assignment: &BinAssignment,
    field_next: &DensityField,
    mass_next: f64,
    rng: &mut R,
) -> Result<(ParticleEnsemble, ResamplePlan)> {
    if !(mass_next > 0.0 && mass_next.is_finite()) {
        return Err(SgipError::ZeroMass(mass_next));
    }
    let grid = field_next.grid();
    let dim = grid.dim();
    if ensemble.dim() != dim || assignment.bins.len() != ensemble.len() {
        return Err(SgipError::ResampleMismatch(
            "ensemble and bin assignment disagree".into(),
        ));
    }
    let n = ensemble.len();
    let plan = plan(n, field_next, &assignment.counts, rng)?;

    // Counting sort of particle indices by bin.
    let mut offsets = Vec::with_capacity(grid.num_bins() + 1);
    offsets.push(0usize);
    for &c in &assignment.counts {
        offsets.push(offsets.last().copied().unwrap_or(0) + c);
    }
    if offsets[grid.num_bins()] != n {
        return Err(SgipError::ResampleMismatch(
            "bin counts do not add up to the particle count".into(),
        ));
    }
    let mut members = vec![0usize; n];
    let mut cursor = offsets.clone();
    for (i, &b) in assignment.bins.iter().enumerate() {
        members[cursor[b]] = i;
        cursor[b] += 1;
    }

    let mut out = Vec::with_capacity(n * dim);
    for (j, &target) in plan.targets.iter().enumerate() {
        if target == 0 {
            continue;
        }
        let pool = &mut members[offsets[j]..offsets[j + 1]];
        let available = pool.len();
        if available == 0 {
            sample_in_bin(grid, j, target, rng, &mut out)?;
        } else if target <= available {
            // Partial Fisher-Yates: the first `target` slots become a uniform subset.
            for k in 0..target {
                let pick = rng.random_range(k..available);
                pool.swap(k, pick);
                out.extend_from_slice(ensemble.position(pool[k]));
            }
        } else {
            for _ in 0..target {
                let pick = pool[rng.random_range(0..available)];
                out.extend_from_slice(ensemble.position(pick));
            }
        }
    }
    if out.len() != n * dim {
        return Err(SgipError::ResampleMismatch(format!(
            "produced {} particles, expected {n}",
            out.len() / dim
        )));
    }
    Ok((ParticleEnsemble::new(dim, out, mass_next)?, plan))
}

/// Uniform points in the box of bin `j`, lower faces included, upper faces
/// excluded (the last bin keeps its upper face, matching `bin_index`).
pub(crate) fn sample_in_bin<R: Rng + ?Sized>(
    grid: &GridSpec,
    j: usize,
    count: usize,
    rng: &mut R,
    out: &mut Vec<f64>,
) -> Result<()> {
    let ks = grid.unravel(j)?;
    let dx = grid.bin_size();
    let mut lower = [0.0; MAX_DIM];
    for a in 0..grid.dim() {
        lower[a] = grid.axis_lower(ks[a]);
    }
    for _ in 0..count {
        for a in 0..grid.dim() {
            let mut x = lower[a] + dx * rng.random::<f64>();
            // Rounding can push a point across a face; nudge it back.
            while grid.axis_index(x) > ks[a] {
                x = x.next_down();
            }
            while grid.axis_index(x) < ks[a] {
                x = x.next_up();
            }
            out.push(x);
        }
    }
    Ok(())
}
