//! Fixtures shared by the benchmarks.

use sgip_core::rng::lane;
use sgip_core::{
    init_particles, DensityField, FdmConfig, FlowField, GridSpec, InitSpec, IntegratorScheme,
    ParticleEnsemble, ReactionModel, RngStream, SimConfig,
};

/// 1D FKPP on `[-60, 60]` with 150 bins, the usual front-propagation setup.
pub fn fkpp_1d(particles: usize) -> SimConfig {
    SimConfig {
        dim: 1,
        half_width: 60.0,
        bins_per_dim: 150,
        particles,
        dt: 0.5,
        final_time: 20.0,
        diffusion: 1.0,
        flow: FlowField::Zero,
        reaction: ReactionModel::Fkpp,
        scheme: IntegratorScheme::ClosedForm,
        u_max: None,
        init: InitSpec::Interval { a: 0.0, b: 1.0 },
        init_path: None,
        seed: 1,
        snapshot_every: 1,
        output: None,
        front: None,
    }
}

/// 2D FKPP in the cellular flow, started from the unit square.
pub fn cellular_2d(particles: usize, bins: usize) -> SimConfig {
    SimConfig {
        dim: 2,
        bins_per_dim: bins,
        flow: FlowField::Cellular,
        init: InitSpec::Box(vec![(0.0, 1.0), (0.0, 1.0)]),
        ..fkpp_1d(particles)
    }
}

pub fn ensemble(config: &SimConfig) -> ParticleEnsemble {
    init_particles(
        &config.init,
        config.dim,
        config.half_width,
        config.particles,
        &RngStream::new(config.seed, 0).with_lane(lane::INIT),
    )
    .expect("valid fixture")
}

/// Reference config matching `config` at spacing `dx`.
pub fn reference(config: &SimConfig, dx: f64, final_time: f64) -> FdmConfig {
    FdmConfig {
        final_time,
        ..FdmConfig::reference_for(config, dx)
    }
}

/// Front-like field: ones left of `x = 0`, zeros right of it.
pub fn step_field(grid: GridSpec) -> DensityField {
    let values = (0..grid.num_bins())
        .map(|j| {
            let x = grid.bin_center(j).expect("in range")[grid.dim() - 1];
            if x < 0.0 { 1.0 } else { 0.0 }
        })
        .collect();
    DensityField::new(grid, values, 0.0).expect("valid field")
}
