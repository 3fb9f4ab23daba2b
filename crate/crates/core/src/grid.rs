//! Lattice, particle and density types shared by every stage.
//!
//! Flat bin indices are row-major with axis 0 slowest: in 3D the bin
//! `(k0, k1, k2)` lives at `(k0 * M + k1) * M + k2`. Indices are 0-based.

use crate::error::{Result, SgipError};

/// Largest supported dimension.
pub const MAX_DIM: usize = 3;

/// Uniform Cartesian bin lattice on `[-L, L]^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    dim: usize,
    half_width: f64,
    bins_per_dim: usize,
    bin_size: f64,
    num_bins: usize,
}

impl GridSpec {
    pub fn new(dim: usize, half_width: f64, bins_per_dim: usize) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(SgipError::InvalidGrid(format!(
                "dimension must be 1, 2 or 3, got {dim}"
            )));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(SgipError::InvalidGrid(format!(
                "half width must be positive and finite, got {half_width}"
            )));
        }
        if bins_per_dim < 2 || bins_per_dim > u32::MAX as usize {
            return Err(SgipError::InvalidGrid(format!(
                "bins per dimension must lie in [2, 2^32), got {bins_per_dim}"
            )));
        }
        let num_bins = bins_per_dim
            .checked_pow(dim as u32)
            .filter(|&n| n <= isize::MAX as usize / std::mem::size_of::<f64>())
            .ok_or_else(|| {
                SgipError::InvalidGrid(format!(
                    "{bins_per_dim}^{dim} bins do not fit in addressable memory"
                ))
            })?;
        Ok(Self {
            dim,
            half_width,
            bins_per_dim,
            bin_size: 2.0 * half_width / bins_per_dim as f64,
            num_bins,
        })
    }

    /// Grid whose bin width is `dx`; `2L / dx` must be a whole number.
    pub fn with_spacing(dim: usize, half_width: f64, dx: f64) -> Result<Self> {
        if !(dx.is_finite() && dx > 0.0) {
            return Err(SgipError::InvalidGrid(format!("spacing must be positive, got {dx}")));
        }
        let ratio = 2.0 * half_width / dx;
        let bins = ratio.round();
        if (ratio - bins).abs() > 1e-9 * ratio.max(1.0) || bins > usize::MAX as f64 {
            return Err(SgipError::InvalidGrid(format!(
                "spacing {dx} does not divide the domain width {}",
                2.0 * half_width
            )));
        }
        Self::new(dim, half_width, bins as usize)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn bins_per_dim(&self) -> usize {
        self.bins_per_dim
    }

    pub fn bin_size(&self) -> f64 {
        self.bin_size
    }

    /// `M^d`.
    pub fn num_bins(&self) -> usize {
        self.num_bins
    }

    /// `Δx^d`.
    pub fn bin_volume(&self) -> f64 {
        self.bin_size.powi(self.dim as i32)
    }

    /// Per-axis bin index of a finite coordinate, clamped to `[0, M-1]`.
    #[inline]
    pub fn axis_index(&self, x: f64) -> usize {
        let k = ((x + self.half_width) / self.bin_size).floor();
        if k <= 0.0 {
            0
        } else {
            (k as usize).min(self.bins_per_dim - 1)
        }
    }

    /// Flat bin index of a point with `dim` finite coordinates. No checks.
    #[inline]
    pub fn locate(&self, position: &[f64]) -> usize {
        position
            .iter()
            .fold(0, |acc, &x| acc * self.bins_per_dim + self.axis_index(x))
    }

    pub fn bin_index(&self, position: &[f64]) -> Result<usize> {
        if position.len() != self.dim {
            return Err(SgipError::DimensionMismatch {
                expected: self.dim,
                got: position.len(),
            });
        }
        if let Some((axis, &value)) = position.iter().enumerate().find(|(_, x)| !x.is_finite()) {
            return Err(SgipError::NonFiniteCoordinate { axis, value });
        }
        Ok(self.locate(position))
    }

    /// Splits a flat index into per-axis indices (axis 0 first).
    pub fn unravel(&self, index: usize) -> Result<[usize; MAX_DIM]> {
        if index >= self.num_bins {
            return Err(SgipError::BinOutOfRange {
                index,
                bins: self.num_bins,
            });
        }
        let mut out = [0; MAX_DIM];
        let mut rest = index;
        for axis in (0..self.dim).rev() {
            out[axis] = rest % self.bins_per_dim;
            rest /= self.bins_per_dim;
        }
        Ok(out)
    }

    /// Coordinate of the centre of bin `k` along any axis.
    #[inline]
    pub fn axis_center(&self, k: usize) -> f64 {
        -self.half_width + (k as f64 + 0.5) * self.bin_size
    }

    /// Coordinate of the lower face of bin `k` along any axis.
    #[inline]
    pub fn axis_lower(&self, k: usize) -> f64 {
        -self.half_width + k as f64 * self.bin_size
    }

    pub fn bin_center(&self, index: usize) -> Result<Vec<f64>> {
        let ks = self.unravel(index)?;
        Ok(ks[..self.dim].iter().map(|&k| self.axis_center(k)).collect())
    }

    pub fn contains(&self, position: &[f64]) -> bool {
        position
            .iter()
            .all(|&x| x >= -self.half_width && x <= self.half_width)
    }

    pub fn same_shape(&self, other: &GridSpec) -> bool {
        self.dim == other.dim
            && self.bins_per_dim == other.bins_per_dim
            && self.half_width == other.half_width
    }
}

/// `N` particles sharing a single mass.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    dim: usize,
    positions: Vec<f64>,
    particle_mass: f64,
    total_mass: f64,
}

impl ParticleEnsemble {
    /// Builds an ensemble from flat positions (`dim` coordinates per
    /// particle) with total mass spread evenly over the particles.
    pub fn new(dim: usize, positions: Vec<f64>, total_mass: f64) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(SgipError::InvalidParameter(format!("dimension {dim}")));
        }
        if positions.len() % dim != 0 {
            return Err(SgipError::InvalidParameter(format!(
                "{} coordinates do not split into {dim}-dimensional points",
                positions.len()
            )));
        }
        if !(total_mass.is_finite() && total_mass >= 0.0) {
            return Err(SgipError::InvalidParameter(format!(
                "total mass must be finite and non-negative, got {total_mass}"
            )));
        }
        let n = positions.len() / dim;
        let particle_mass = if n == 0 { 0.0 } else { total_mass / n as f64 };
        Ok(Self {
            dim,
            positions,
            particle_mass,
            total_mass,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn particle_mass(&self) -> f64 {
        self.particle_mass
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn positions_mut(&mut self) -> &mut [f64] {
        &mut self.positions
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.positions.chunks_exact(self.dim)
    }

    pub fn into_positions(self) -> Vec<f64> {
        self.positions
    }
}

/// Piecewise-constant density on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    grid: GridSpec,
    values: Vec<f64>,
    time: f64,
}

impl DensityField {
    pub fn new(grid: GridSpec, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.num_bins() {
            return Err(SgipError::GridMismatch(format!(
                "{} values for a grid of {} bins",
                values.len(),
                grid.num_bins()
            )));
        }
        if let Some(j) = values.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(SgipError::InvalidParameter(format!(
                "density value {} in bin {j} is negative or not finite",
                values[j]
            )));
        }
        if !(time.is_finite() && time >= 0.0) {
            return Err(SgipError::InvalidParameter(format!("time {time}")));
        }
        Ok(Self { grid, values, time })
    }

    pub fn zeros(grid: GridSpec, time: f64) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.num_bins()],
            time,
        }
    }

    /// Constructor for stages that already guarantee the invariants.
    pub(crate) fn from_parts(grid: GridSpec, values: Vec<f64>, time: f64) -> Self {
        debug_assert_eq!(values.len(), grid.num_bins());
        Self { grid, values, time }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `Σ_j u_j Δx^d`, summed in ascending bin order.
    pub fn total_mass(&self) -> f64 {
        field_total_mass(self)
    }
}

/// Neumaier-compensated sum in slice order.
pub fn compensated_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0_f64;
    let mut carry = 0.0_f64;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

pub fn field_total_mass(field: &DensityField) -> f64 {
    compensated_sum(&field.values) * field.grid.bin_volume()
}
