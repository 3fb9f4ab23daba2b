use sgip_core::io::read_snapshot;
use sgip_core::resampling::resample;
use sgip_core::rng::lane;
use sgip_core::transport::{advect_diffuse_step, assign_bins, density_from_counts};
use sgip_core::{
    fdm_run, integrate_reaction_field, run, simulate, simulate_with, FdmConfig, FlowField, InitSpec,
    IntegratorScheme, Producer, ReactionModel, RngStream, SimConfig, Simulation, StepOutcome,
};

fn base(dim: usize) -> SimConfig {
    SimConfig {
        dim,
        half_width: 10.0,
        bins_per_dim: 20,
        particles: 20_000,
        dt: 0.25,
        final_time: 2.0,
        diffusion: 1.0,
        flow: FlowField::Zero,
        reaction: ReactionModel::Fkpp,
        scheme: IntegratorScheme::ClosedForm,
        u_max: None,
        init: InitSpec::Box(vec![(0.0, 1.0); dim]),
        init_path: None,
        seed: 11,
        snapshot_every: 1,
        output: None,
        front: None,
    }
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

#[test]
fn step_is_transport_histogram_reaction_resample() {
    let mut cfg = base(2);
    cfg.flow = FlowField::Cellular;
    cfg.reaction = ReactionModel::Cubic;
    cfg.scheme = IntegratorScheme::crank_nicolson();
    let mut sim = Simulation::new(cfg.clone()).unwrap();
    sim.step().unwrap();
    let mut manual = sim.ensemble().clone();
    let StepOutcome::Advanced(report) = sim.step().unwrap() else {
        panic!("extinct")
    };

    let n = 1;
    advect_diffuse_step(
        &mut manual,
        &cfg.flow,
        cfg.diffusion,
        cfg.dt,
        n as f64 * cfg.dt,
        cfg.half_width,
        &RngStream::new(cfg.seed, n).with_lane(lane::TRANSPORT),
    )
    .unwrap();
    let grid = cfg.grid().unwrap();
    let a = assign_bins(&manual, &grid).unwrap();
    let u = density_from_counts(&a.counts, manual.particle_mass(), &grid, 0.5);
    let r = integrate_reaction_field(&u, &cfg.reaction, &cfg.scheme, cfg.dt, cfg.u_max).unwrap();
    assert_eq!(bits(r.field.values()), bits(report.field.values()));
    assert_eq!(r.total_mass, report.total_mass);
    assert_eq!(report.time, 0.5);

    let mut gen = RngStream::new(cfg.seed, n).with_lane(lane::RESAMPLE).generator();
    let (next, plan) = resample(&manual, &a, &r.field, r.total_mass, &mut gen).unwrap();
    assert_eq!(plan.targets, report.targets);
    assert_eq!(bits(next.positions()), bits(sim.ensemble().positions()));
}

#[test]
fn worker_count_does_not_change_results() {
    let mut cfg = base(3);
    cfg.flow = FlowField::abc_default();
    cfg.particles = 30_000;
    let go = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| simulate(&cfg).unwrap())
    };
    let (a, b) = (go(1), go(4));
    assert_eq!(bits(a.field.values()), bits(b.field.values()));
}

#[test]
fn run_snapshots_match_the_in_memory_fields() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base(1);
    cfg.snapshot_every = 3;
    let mut fields = Vec::new();
    simulate_with(&cfg, |f| {
        fields.push(f.clone());
        Ok(())
    })
    .unwrap();
    let art = run(&cfg, dir.path()).unwrap();
    // steps 0, 3, 6 and the final step 8
    assert_eq!(art.snapshots.len(), 4);
    for (path, step) in art.snapshots.iter().zip([0usize, 3, 6, 8]) {
        let snap = read_snapshot(path).unwrap();
        assert_eq!(snap.producer, Producer::Sgip);
        assert_eq!(snap.field, fields[step]);
    }
    let diag = std::fs::read_to_string(&art.diagnostics).unwrap();
    assert_eq!(diag.lines().count(), 2 + 9);
}

#[test]
fn particles_and_reference_agree_on_a_small_problem() {
    let cfg = SimConfig {
        particles: 200_000,
        half_width: 20.0,
        bins_per_dim: 40,
        final_time: 4.0,
        ..base(1)
    };
    let sgip = simulate(&cfg).unwrap().field;
    let dir = tempfile::tempdir().unwrap();
    let fdm = FdmConfig {
        output_bins: Some(40),
        ..FdmConfig::reference_for(&cfg, 0.05)
    };
    let art = fdm_run(&fdm, dir.path()).unwrap();
    let reference = read_snapshot(art.snapshots.last().unwrap()).unwrap().field;
    let err = sgip_core::relative_l2(&sgip, &reference).unwrap();
    assert!(err < 0.05, "relative L2 {err}");
}

#[test]
fn reflecting_walls_keep_every_particle_inside() {
    let mut cfg = base(2);
    cfg.half_width = 1.0;
    cfg.bins_per_dim = 4;
    cfg.flow = FlowField::CatsEye { delta: 2.0 };
    cfg.diffusion = 4.0;
    cfg.reaction = ReactionModel::Linear { lambda: 0.0 };
    cfg.init = InitSpec::Box(vec![(-1.0, 1.0); 2]);
    let mut sim = Simulation::new(cfg).unwrap();
    while !sim.is_finished() {
        sim.step().unwrap();
        assert!(sim.ensemble().positions().iter().all(|x| x.abs() <= 1.0));
        assert!((sim.ensemble().total_mass() / 4.0 - 1.0).abs() < 1e-12);
    }
}
