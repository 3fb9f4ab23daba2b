//! Explicit finite-difference reference solver for
//! `u_t = -div(v u) + D lap(u) + r(u)` on `[-L, L]^d` with zero-flux walls.
//!
//! Cell-centred grid, forward Euler in time, central Laplacian with mirror
//! ghost cells and a conservative first-order upwind advective flux (central
//! flux optional). Face velocities vanish on the walls.

use std::path::Path;

use rayon::prelude::*;

use crate::diagnostics::restrict;
use crate::driver::{RunArtifacts, RunStatus, RunWriter};
use crate::error::{Result, SgipError};
use crate::flows::{FlowField, SeparableTerm};
use crate::grid::{DensityField, GridSpec};
use crate::io::config::{Advection, FdmConfig};
use crate::io::snapshot::Producer;
use crate::reactions::{react, IntegratorScheme, ReactionModel};

/// Fraction of the explicit limit used for internal substeps. At the limit
/// itself the grid-scale mode has amplification -1 and any reaction with
/// `r' < 0` makes it grow.
const SAFETY: f64 = 0.9;

/// Terms per velocity component after padding; the built-in flows need at most two.
const TERMS: usize = 2;

/// Tabulated separable velocity of one component.
#[derive(Debug, Clone)]
struct Component {
    coef: [f64; TERMS],
    /// `centers[t][b][k]`: factor `t` along axis `b` at cell centre `k`.
    centers: [Vec<Vec<f64>>; TERMS],
    /// `faces[t][k]`: factor `t` along the component's own axis at face
    /// `k` (`k = 0..=M`), zeroed on the walls.
    faces: [Vec<f64>; TERMS],
}

#[derive(Debug, Clone)]
struct VelocityTables {
    components: Vec<Component>,
    /// `sum_t |coef_t|` per axis, an upper bound on `|v_a|`.
    bounds: Vec<f64>,
}

impl VelocityTables {
    fn new(flow: &FlowField, grid: &GridSpec) -> Result<Self> {
        let d = grid.dim();
        let m = grid.bins_per_dim();
        let terms = flow.separable_terms();
        let mut components = Vec::with_capacity(d);
        let mut bounds = Vec::with_capacity(d);
        for (a, list) in terms.iter().enumerate().take(d) {
            if list.len() > TERMS {
                return Err(SgipError::InvalidParameter(format!(
                    "flow component {a} has {} separable terms, at most {TERMS} supported",
                    list.len()
                )));
            }
            let zero = SeparableTerm {
                coef: 0.0,
                factors: [crate::flows::Factor::One; 3],
            };
            let mut comp = Component {
                coef: [0.0; TERMS],
                centers: Default::default(),
                faces: Default::default(),
            };
            for t in 0..TERMS {
                let term = list.get(t).copied().unwrap_or(zero);
                comp.coef[t] = term.coef;
                comp.centers[t] = (0..d)
                    .map(|b| (0..m).map(|k| term.factors[b].eval(grid.axis_center(k))).collect())
                    .collect();
                let mut faces: Vec<f64> = (0..=m)
                    .map(|k| term.factors[a].eval(-grid.half_width() + k as f64 * grid.bin_size()))
                    .collect();
                faces[0] = 0.0;
                faces[m] = 0.0;
                comp.faces[t] = faces;
            }
            bounds.push(list.iter().map(|t| t.coef.abs()).sum());
            components.push(comp);
        }
        Ok(VelocityTables { components, bounds })
    }

    fn is_zero(&self) -> bool {
        self.components.iter().all(|c| c.coef.iter().all(|&x| x == 0.0))
    }
}

/// Largest stable explicit step: `h (2 d D / dx^2 + sum_a |v_a|_max / dx) <= 1`.
pub fn stable_time_step(grid: &GridSpec, diffusion: f64, flow: &FlowField) -> Result<f64> {
    let tables = VelocityTables::new(flow, grid)?;
    Ok(stable_step_from(grid, diffusion, &tables))
}

fn stable_step_from(grid: &GridSpec, diffusion: f64, tables: &VelocityTables) -> f64 {
    let dx = grid.bin_size();
    let rate = 2.0 * grid.dim() as f64 * diffusion / (dx * dx) + tables.bounds.iter().sum::<f64>() / dx;
    if rate > 0.0 {
        1.0 / rate
    } else {
        f64::INFINITY
    }
}

/// Per-cell update after the transport increment `v = u + h * transport`.
trait Finish: Sync {
    fn apply(&self, u: f64, v: f64) -> f64;
}

struct Explicit<F: Fn(f64) -> f64 + Sync> {
    h: f64,
    rate: F,
}

impl<F: Fn(f64) -> f64 + Sync> Finish for Explicit<F> {
    #[inline(always)]
    fn apply(&self, u: f64, v: f64) -> f64 {
        v + self.h * (self.rate)(u)
    }
}

/// Operator splitting: transport, then the per-cell reaction solver.
struct Split<'a> {
    h: f64,
    model: &'a ReactionModel,
    scheme: &'a IntegratorScheme,
    u_max: Option<f64>,
}

impl Finish for Split<'_> {
    #[inline]
    fn apply(&self, _u: f64, v: f64) -> f64 {
        // Solver failures surface as NaN and are reported by cell index.
        react(self.model, self.scheme, v, self.h, self.u_max)
            .map(|s| s.value)
            .unwrap_or(f64::NAN)
    }
}

struct Sweep<'a> {
    grid: &'a GridSpec,
    tables: &'a VelocityTables,
    diffusion: f64,
    h: f64,
}

#[inline(always)]
fn flux<const CENTRAL: bool>(w: f64, left: f64, right: f64) -> f64 {
    if CENTRAL {
        0.5 * w * (left + right)
    } else {
        w.max(0.0) * left + w.min(0.0) * right
    }
}

/// Per-worker line buffers.
struct Lines {
    /// The current line with a mirror ghost at each end.
    ext: Vec<f64>,
    /// Face velocities along the line.
    w: Vec<f64>,
    /// Laplacian and flux divergence from the slowest axis in 3D.
    acc: Vec<f64>,
    div: Vec<f64>,
}

impl Lines {
    fn new(m: usize) -> Self {
        Lines {
            ext: vec![0.0; m + 2],
            w: vec![0.0; m + 1],
            acc: vec![0.0; m],
            div: vec![0.0; m],
        }
    }
}

/// Neighbouring line along a slower axis and its face velocity factors.
struct Across<'a> {
    dn: &'a [f64],
    up: &'a [f64],
    lo: [f64; TERMS],
    hi: [f64; TERMS],
    g0: &'a [f64],
    g1: &'a [f64],
}

impl Sweep<'_> {
    /// One forward-Euler step of size `h` from `u` into `out`.
    fn run<const ADVECT: bool, const CENTRAL: bool, R: Finish>(
        &self,
        u: &[f64],
        out: &mut [f64],
        finish: &R,
    ) -> Result<()> {
        let g = self.grid;
        let m = g.bins_per_dim();
        let last = g.dim() - 1;
        let t = self.tables;

        let bad = out
            .par_chunks_mut(m)
            .enumerate()
            .map_init(
                || Lines::new(m),
                |buf, (line, dst)| {
                    let mut k = [0usize; 3];
                    let mut rest = line;
                    for a in (0..last).rev() {
                        k[a] = rest % m;
                        rest /= m;
                    }
                    let start = line * m;
                    let uc = &u[start..start + m];
                    buf.ext[1..=m].copy_from_slice(uc);
                    buf.ext[0] = uc[0];
                    buf.ext[m + 1] = uc[m - 1];

                    if ADVECT {
                        let c = &t.components[last];
                        let mut s = [0.0; TERMS];
                        for q in 0..TERMS {
                            s[q] = c.coef[q];
                            for b in 0..last {
                                s[q] *= c.centers[q][b][k[b]];
                            }
                        }
                        for ((o, f0), f1) in buf.w.iter_mut().zip(&c.faces[0]).zip(&c.faces[1]) {
                            *o = s[0] * f0 + s[1] * f1;
                        }
                    }

                    let neighbour = |a: usize| -> Across<'_> {
                        let stride = m.pow((last - a) as u32);
                        let dn = if k[a] > 0 { &u[start - stride..start - stride + m] } else { uc };
                        let up = if k[a] + 1 < m { &u[start + stride..start + stride + m] } else { uc };
                        let c = &t.components[a];
                        let mut lo = [0.0; TERMS];
                        let mut hi = [0.0; TERMS];
                        if ADVECT {
                            for q in 0..TERMS {
                                let mut s = c.coef[q];
                                for b in (0..last).filter(|&b| b != a) {
                                    s *= c.centers[q][b][k[b]];
                                }
                                lo[q] = s * c.faces[q][k[a]];
                                hi[q] = s * c.faces[q][k[a] + 1];
                            }
                        }
                        Across {
                            dn,
                            up,
                            lo,
                            hi,
                            g0: &c.centers[0][last],
                            g1: &c.centers[1][last],
                        }
                    };

                    match last {
                        0 => self.line::<ADVECT, CENTRAL, false, false, R>(buf, None, dst, finish),
                        1 => self.line::<ADVECT, CENTRAL, true, false, R>(buf, Some(neighbour(0)), dst, finish),
                        _ => {
                            let first = neighbour(0);
                            buf.acc.fill(0.0);
                            buf.div.fill(0.0);
                            for ((((l, dv), &x), (&dn, &up)), (&a0, &a1)) in buf
                                .acc
                                .iter_mut()
                                .zip(buf.div.iter_mut())
                                .zip(uc)
                                .zip(first.dn.iter().zip(first.up))
                                .zip(first.g0.iter().zip(first.g1))
                            {
                                *l = dn + up - 2.0 * x;
                                if ADVECT {
                                    let wlo = first.lo[0] * a0 + first.lo[1] * a1;
                                    let whi = first.hi[0] * a0 + first.hi[1] * a1;
                                    *dv = flux::<CENTRAL>(whi, x, up) - flux::<CENTRAL>(wlo, dn, x);
                                }
                            }
                            self.line::<ADVECT, CENTRAL, true, true, R>(buf, Some(neighbour(1)), dst, finish)
                        }
                    }
                    .map(|j| start + j)
                },
            )
            .reduce(|| None, |a, b| match (a, b) {
                (Some(x), Some(y)) => Some(x.min(y)),
                (x, y) => x.or(y),
            });
        match bad {
            Some(cell) => Err(SgipError::NonFiniteCell { cell }),
            None => Ok(()),
        }
    }

    /// Fused update of one line. `SLOW` adds the neighbour lines of one
    /// slower axis, `EXTRA` the contributions already in `buf.acc`/`buf.div`.
    /// Returns the first non-finite cell of the line.
    #[inline(always)]
    fn line<const ADVECT: bool, const CENTRAL: bool, const SLOW: bool, const EXTRA: bool, R: Finish>(
        &self,
        buf: &Lines,
        nb: Option<Across<'_>>,
        dst: &mut [f64],
        finish: &R,
    ) -> Option<usize> {
        let m = dst.len();
        let dx = self.grid.bin_size();
        let dcoef = self.diffusion / (dx * dx);
        let inv_dx = 1.0 / dx;
        let h = self.h;
        let ext = &buf.ext[..m + 2];
        let w = &buf.w[..m + 1];
        let (acc, div) = (&buf.acc[..m], &buf.div[..m]);
        let zeros = [0.0; TERMS];
        let (dn, up, lo, hi, g0, g1) = match &nb {
            Some(n) => (&n.dn[..m], &n.up[..m], n.lo, n.hi, &n.g0[..m], &n.g1[..m]),
            None => (&ext[1..=m], &ext[1..=m], zeros, zeros, &ext[1..=m], &ext[1..=m]),
        };
        for j in 0..m {
            let (l, x, r) = (ext[j], ext[j + 1], ext[j + 2]);
            let mut lap = l + r - 2.0 * x;
            let mut dv = 0.0;
            if ADVECT {
                dv = flux::<CENTRAL>(w[j + 1], x, r) - flux::<CENTRAL>(w[j], l, x);
            }
            if SLOW {
                let (d, u) = (dn[j], up[j]);
                lap += d + u - 2.0 * x;
                if ADVECT {
                    let wlo = lo[0] * g0[j] + lo[1] * g1[j];
                    let whi = hi[0] * g0[j] + hi[1] * g1[j];
                    dv += flux::<CENTRAL>(whi, x, u) - flux::<CENTRAL>(wlo, d, x);
                }
            }
            if EXTRA {
                lap += acc[j];
                dv += div[j];
            }
            dst[j] = finish.apply(x, x + h * (dcoef * lap - inv_dx * dv));
        }
        // `v * 0.0` is NaN exactly when `v` is not finite; four independent
        // lanes keep the reduction vectorisable.
        let mut lanes = [0.0f64; 4];
        let mut chunks = dst.chunks_exact(4);
        for c in &mut chunks {
            for (p, &v) in lanes.iter_mut().zip(c) {
                *p += v * 0.0;
            }
        }
        let poison = lanes.iter().sum::<f64>() + chunks.remainder().iter().map(|v| v * 0.0).sum::<f64>();
        if poison == 0.0 {
            None
        } else {
            dst.iter().position(|v| !v.is_finite())
        }
    }
}

/// Marches a field in time with fixed internal substeps.
#[derive(Debug, Clone)]
pub struct FdmSolver {
    config: FdmConfig,
    grid: GridSpec,
    tables: VelocityTables,
    u: Vec<f64>,
    scratch: Vec<f64>,
    substeps: u64,
    step: u64,
}

impl FdmSolver {
    /// Builds the solver with the initial condition cell-averaged onto the
    /// grid. Each configured step `dt` is split into the fewest equal
    /// substeps no longer than 0.9 times [`stable_time_step`].
    pub fn new(config: FdmConfig) -> Result<Self> {
        config.validate()?;
        let grid = GridSpec::with_spacing(config.dim, config.half_width, config.dx)?;
        let u = (0..grid.num_bins())
            .into_par_iter()
            .map(|c| config.init.cell_average(&grid, c))
            .collect::<Result<Vec<f64>>>()?;
        Self::with_field(config, DensityField::new(grid, u, 0.0)?)
    }

    /// Starts from an explicit field on the config's grid.
    pub fn with_field(config: FdmConfig, field: DensityField) -> Result<Self> {
        let grid = GridSpec::with_spacing(config.dim, config.half_width, config.dx)?;
        if !grid.same_shape(field.grid()) {
            return Err(SgipError::GridMismatch("initial field does not match dx".into()));
        }
        let tables = VelocityTables::new(&config.flow, &grid)?;
        let h_max = stable_step_from(&grid, config.diffusion, &tables);
        let substeps = ((config.dt / (SAFETY * h_max)) * (1.0 - 1e-12)).ceil().max(1.0) as u64;
        let u = field.into_values();
        Ok(FdmSolver {
            scratch: vec![0.0; u.len()],
            u,
            config,
            grid,
            tables,
            substeps,
            step: 0,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn substeps(&self) -> u64 {
        self.substeps
    }

    pub fn step_index(&self) -> u64 {
        self.step
    }

    pub fn total_steps(&self) -> u64 {
        self.config.steps()
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.config.dt
    }

    pub fn field(&self) -> DensityField {
        DensityField::from_parts(self.grid, self.u.clone(), self.time())
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    /// Advances one configured step `dt`.
    pub fn step(&mut self) -> Result<()> {
        let h = self.config.dt / self.substeps as f64;
        for _ in 0..self.substeps {
            substep(&self.config, &self.grid, &self.tables, h, &self.u, &mut self.scratch)?;
            std::mem::swap(&mut self.u, &mut self.scratch);
        }
        self.step += 1;
        Ok(())
    }

    /// Advances to the configured final time.
    pub fn run_to_end(&mut self) -> Result<DensityField> {
        while self.step < self.total_steps() {
            self.step()?;
        }
        Ok(self.field())
    }
}

fn substep(
    config: &FdmConfig,
    grid: &GridSpec,
    tables: &VelocityTables,
    h: f64,
    u: &[f64],
    out: &mut [f64],
) -> Result<()> {
    let sweep = Sweep {
        grid,
        tables,
        diffusion: config.diffusion,
        h,
    };
    let advect = !tables.is_zero();
    let central = config.advection == Advection::Central;
    macro_rules! go {
        ($fin:expr) => {
            match (advect, central) {
                (false, _) => sweep.run::<false, false, _>(u, out, $fin),
                (true, false) => sweep.run::<true, false, _>(u, out, $fin),
                (true, true) => sweep.run::<true, true, _>(u, out, $fin),
            }
        };
    }
    match (&config.reaction_scheme, &config.reaction) {
        (None, ReactionModel::Fkpp) => go!(&Explicit { h, rate: |u: f64| u * (1.0 - u) }),
        (None, ReactionModel::Cubic) => go!(&Explicit { h, rate: |u: f64| u * u * (1.0 - u) }),
        (None, ReactionModel::Linear { lambda }) => {
            let l = *lambda;
            go!(&Explicit { h, rate: move |u: f64| l * u })
        }
        (None, model) => go!(&Explicit { h, rate: |u: f64| model.rate(u) }),
        (Some(scheme), model) => go!(&Split {
            h,
            model,
            scheme,
            u_max: config.u_max,
        }),
    }
}

/// One explicit step of size `config.dt` with no substepping. Fails if the
/// step violates the stability bound.
pub fn fdm_step(field: &DensityField, config: &FdmConfig) -> Result<DensityField> {
    let grid = *field.grid();
    let tables = VelocityTables::new(&config.flow, &grid)?;
    let h_max = stable_step_from(&grid, config.diffusion, &tables);
    if config.dt > h_max * (1.0 + 1e-12) {
        return Err(SgipError::Stability(format!(
            "dt = {} exceeds the explicit limit {h_max}",
            config.dt
        )));
    }
    let mut out = vec![0.0; field.values().len()];
    substep(config, &grid, &tables, config.dt, field.values(), &mut out)?;
    Ok(DensityField::from_parts(grid, out, field.time() + config.dt))
}

/// Runs to `T` and writes snapshots like the particle driver, restricted to
/// `output.M` bins per axis when set.
pub fn fdm_run(config: &FdmConfig, out_dir: &Path) -> Result<RunArtifacts> {
    let mut w = RunWriter::new(out_dir, Producer::Fdm, config.front)?;
    let text = config.to_text();
    let result = (|| -> Result<u64> {
        let mut solver = FdmSolver::new(config.clone())?;
        let target = match config.output_bins {
            Some(m) => GridSpec::new(config.dim, config.half_width, m)?,
            None => *solver.grid(),
        };
        let emit = |w: &mut RunWriter, s: &FdmSolver, snap: bool| -> Result<()> {
            let f = restrict(&s.field(), &target)?;
            w.record(s.step_index(), &f, s.field().total_mass())?;
            if snap {
                w.snapshot(s.step_index(), &f)?;
            }
            Ok(())
        };
        emit(&mut w, &solver, true)?;
        let total = solver.total_steps();
        while solver.step_index() < total {
            solver.step()?;
            let n = solver.step_index();
            emit(&mut w, &solver, n % config.snapshot_every == 0 || n == total)?;
        }
        Ok(total)
    })();
    match result {
        Ok(steps) => {
            w.finish("complete", &text, None)?;
            Ok(RunArtifacts {
                status: RunStatus::Complete,
                steps,
                snapshots: w.snapshots.clone(),
                diagnostics: w.diagnostics_path(),
                manifest: w.manifest_path(),
            })
        }
        Err(e) => {
            let _ = w.finish("error", &text, Some(&e));
            Err(e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::relative_l2;
    use crate::init::InitSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn config(dim: usize, l: f64, dx: f64, dt: f64, t: f64) -> FdmConfig {
        FdmConfig {
            dim,
            half_width: l,
            dx,
            dt,
            final_time: t,
            diffusion: 1.0,
            flow: FlowField::Zero,
            reaction: ReactionModel::Linear { lambda: 0.0 },
            reaction_scheme: None,
            advection: Advection::Upwind,
            u_max: None,
            init: InitSpec::Box(vec![(-0.5, 0.5); dim]),
            init_path: None,
            snapshot_every: 1,
            output: None,
            output_bins: None,
            seed: None,
            front: None,
        }
    }

    fn gaussian(grid: &GridSpec, var: f64) -> DensityField {
        let v = (0..grid.num_bins())
            .map(|j| {
                let x = grid.axis_center(j);
                (-x * x / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
            })
            .collect();
        DensityField::new(*grid, v, 0.0).unwrap()
    }

    #[test]
    fn heat_kernel_oracle() {
        let c = config(1, 10.0, 0.01, 0.01, 1.0);
        let grid = GridSpec::with_spacing(1, 10.0, 0.01).unwrap();
        let mut s = FdmSolver::with_field(c, gaussian(&grid, 0.5)).unwrap();
        let end = s.run_to_end().unwrap();
        let err = relative_l2(&end, &gaussian(&grid, 0.5 + 2.0)).unwrap();
        assert!(err <= 0.01, "relative error {err}");
    }

    #[test]
    fn random_fields_conserve_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for (dim, flow) in [
            (1, FlowField::Constant(vec![0.7])),
            (2, FlowField::Cellular),
            (2, FlowField::CatsEye { delta: 2.0 }),
            (3, FlowField::abc_default()),
        ] {
            let mut c = config(dim, 2.0, 0.25, 0.01, 0.1);
            c.flow = flow;
            let grid = GridSpec::with_spacing(dim, 2.0, 0.25).unwrap();
            let v = (0..grid.num_bins()).map(|_| rng.random::<f64>()).collect();
            let f = DensityField::new(grid, v, 0.0).unwrap();
            let m0 = f.total_mass();
            let mut s = FdmSolver::with_field(c, f).unwrap();
            let end = s.run_to_end().unwrap();
            assert!((end.total_mass() / m0 - 1.0).abs() < 1e-10, "dim {dim}");
            assert!(end.values().iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn saturated_fkpp_is_fixed() {
        // On [-pi, pi]^2 the cellular flow is tangential to the walls, and
        // its face-sampled discrete divergence vanishes.
        let pi = std::f64::consts::PI;
        let dx = 2.0 * pi / 32.0;
        let mut c = config(2, pi, dx, 0.01, 0.5);
        c.reaction = ReactionModel::Fkpp;
        c.flow = FlowField::Cellular;
        let grid = GridSpec::with_spacing(2, pi, dx).unwrap();
        let ones = DensityField::new(grid, vec![1.0; grid.num_bins()], 0.0).unwrap();
        let end = FdmSolver::with_field(c, ones).unwrap().run_to_end().unwrap();
        assert!(end.values().iter().all(|&v| (v - 1.0).abs() < 1e-13));
    }

    #[test]
    fn zero_stays_zero() {
        let mut c = config(1, 5.0, 0.1, 0.1, 1.0);
        c.reaction = ReactionModel::Fkpp;
        let grid = GridSpec::with_spacing(1, 5.0, 0.1).unwrap();
        let end = FdmSolver::with_field(c, DensityField::zeros(grid, 0.0)).unwrap().run_to_end().unwrap();
        assert!(end.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unstable_single_step_is_rejected() {
        let c = config(1, 5.0, 0.1, 0.1, 1.0);
        let grid = GridSpec::with_spacing(1, 5.0, 0.1).unwrap();
        let f = gaussian(&grid, 1.0);
        assert!(matches!(fdm_step(&f, &c), Err(SgipError::Stability(_))));
        let fine = config(1, 5.0, 0.1, 0.004, 1.0);
        let next = fdm_step(&f, &fine).unwrap();
        assert!((next.time() - 0.004).abs() < 1e-15);
        // the solver subdivides instead
        assert_eq!(FdmSolver::with_field(c, f).unwrap().substeps(), 23);
    }

    #[test]
    fn nan_is_reported_by_cell() {
        let c = config(1, 1.0, 0.1, 0.001, 0.001);
        let grid = GridSpec::with_spacing(1, 1.0, 0.1).unwrap();
        let mut v = vec![0.0; 20];
        v[7] = f64::INFINITY;
        let f = DensityField::from_parts(grid, v, 0.0);
        let err = fdm_step(&f, &c).unwrap_err();
        assert!(matches!(err, SgipError::NonFiniteCell { cell: 6 }), "{err}");
    }

    #[test]
    fn drift_moves_mass_downstream() {
        let mut c = config(1, 5.0, 0.05, 0.01, 1.0);
        c.diffusion = 0.0;
        c.flow = FlowField::Constant(vec![1.0]);
        let end = FdmSolver::new(c).unwrap().run_to_end().unwrap();
        let g = end.grid();
        let mean: f64 = end
            .values()
            .iter()
            .enumerate()
            .map(|(j, v)| v * g.axis_center(j))
            .sum::<f64>()
            * g.bin_size()
            / end.total_mass();
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn split_reaction_matches_explicit() {
        let mut c = config(1, 10.0, 0.1, 0.001, 2.0);
        c.reaction = ReactionModel::Fkpp;
        c.init = InitSpec::Interval { a: -1.0, b: 1.0 };
        let a = FdmSolver::new(c.clone()).unwrap().run_to_end().unwrap();
        c.reaction_scheme = Some(IntegratorScheme::ClosedForm);
        let b = FdmSolver::new(c).unwrap().run_to_end().unwrap();
        assert!(relative_l2(&a, &b).unwrap() < 1e-3);
    }

    #[test]
    fn run_writes_restricted_snapshots() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = config(1, 4.0, 0.1, 0.5, 1.0);
        c.output_bins = Some(8);
        let art = fdm_run(&c, dir.path()).unwrap();
        assert_eq!(art.snapshots.len(), 3);
        let snap = crate::io::snapshot::read_snapshot(&art.snapshots[2]).unwrap();
        assert_eq!(snap.producer, Producer::Fdm);
        assert_eq!(snap.field.grid().bins_per_dim(), 8);
        assert!((snap.field.total_mass() - 1.0).abs() < 1e-10);
        assert_eq!(snap.field.time(), 1.0);
    }

    #[test]
    fn worker_count_does_not_matter() {
        let mut c = config(2, 2.0, 0.1, 0.01, 0.05);
        c.flow = FlowField::Cellular;
        c.reaction = ReactionModel::Fkpp;
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| FdmSolver::new(c.clone()).unwrap().run_to_end().unwrap())
        };
        assert_eq!(run(1), run(3));
    }
}
