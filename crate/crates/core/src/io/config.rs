//! Flat `key=value` run configuration.
//!
//! Blank lines and `#` comments are ignored. Keys are unique and every key
//! must be known to the selected solver. Model parameters use dotted keys
//! (`flow.delta`, `reaction.E`, `scheme.tol`).
//!
//! ```text
//! dim=1
//! L=60
//! M=150
//! N=1000000
//! dt=0.5
//! T=20
//! D=1
//! flow=zero
//! reaction=fkpp
//! scheme=closed_form
//! init=interval:0,1
//! seed=1
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{ConfigError, Result, SgipError};
use crate::flows::FlowField;
use crate::init::InitSpec;
use crate::io::snapshot::read_snapshot;
use crate::reactions::{IntegratorScheme, ReactionModel, DEFAULT_MAX_ITER, DEFAULT_TOL};

/// Front extraction settings used for the diagnostics column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontSettings {
    pub threshold: f64,
    pub smooth: bool,
}

/// Particle solver configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dim: usize,
    pub half_width: f64,
    pub bins_per_dim: usize,
    pub particles: usize,
    pub dt: f64,
    pub final_time: f64,
    pub diffusion: f64,
    pub flow: FlowField,
    pub reaction: ReactionModel,
    pub scheme: IntegratorScheme,
    /// Upper clamp for implicit roots; defaults to the model's natural bound.
    pub u_max: Option<f64>,
    pub init: InitSpec,
    /// Source file of a `custom` initial condition.
    pub init_path: Option<PathBuf>,
    pub seed: u64,
    pub snapshot_every: u64,
    pub output: Option<PathBuf>,
    pub front: Option<FrontSettings>,
}

/// Advective flux discretization of the reference solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Advection {
    Upwind,
    Central,
}

/// Finite-difference reference configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct FdmConfig {
    pub dim: usize,
    pub half_width: f64,
    pub dx: f64,
    pub dt: f64,
    pub final_time: f64,
    pub diffusion: f64,
    pub flow: FlowField,
    pub reaction: ReactionModel,
    /// `None` is explicit evaluation of `r(u)`; otherwise a per-cell solver.
    pub reaction_scheme: Option<IntegratorScheme>,
    pub advection: Advection,
    pub u_max: Option<f64>,
    pub init: InitSpec,
    pub init_path: Option<PathBuf>,
    pub snapshot_every: u64,
    pub output: Option<PathBuf>,
    /// Bins per dimension of restricted output snapshots.
    pub output_bins: Option<usize>,
    /// Accepted for symmetry with particle configs; unused.
    pub seed: Option<u64>,
    pub front: Option<FrontSettings>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnyConfig {
    Sim(SimConfig),
    Fdm(FdmConfig),
}

const COMMON_KEYS: &[&str] = &[
    "dim", "L", "dt", "T", "D", "flow", "flow.c", "flow.delta", "flow.A", "flow.B", "flow.C",
    "reaction", "reaction.lambda", "reaction.E", "reaction.coeffs", "scheme", "scheme.tol",
    "scheme.max_iter", "u_max", "init", "seed", "snapshot_every", "output", "front.threshold",
    "front.smooth",
];
const SIM_KEYS: &[&str] = &["M", "N"];
const FDM_KEYS: &[&str] = &["dx", "advection", "output.M"];

/// Parsed `key -> (value, line)` table.
struct Entries {
    map: BTreeMap<String, (String, usize)>,
}

fn bad(key: &str, line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        line,
        message: message.into(),
    }
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        message: message.into(),
    }
}

impl Entries {
    fn parse(text: &str, allowed: &[&[&str]]) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (k, v) = body.split_once('=').ok_or(ConfigError::Malformed { line })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(ConfigError::Malformed { line });
            }
            if !allowed.iter().any(|set| set.contains(&k)) {
                return Err(ConfigError::UnknownKey {
                    key: k.to_string(),
                    line,
                });
            }
            if map.insert(k.to_string(), (v.to_string(), line)).is_some() {
                return Err(ConfigError::Duplicate {
                    key: k.to_string(),
                    line,
                });
            }
        }
        Ok(Entries { map })
    }

    fn has(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    fn raw(&self, key: &str) -> Option<(&str, usize)> {
        self.map.get(key).map(|(v, l)| (v.as_str(), *l))
    }

    fn req(&self, key: &str) -> Result<(&str, usize), ConfigError> {
        self.raw(key).ok_or_else(|| ConfigError::MissingKey {
            key: key.to_string(),
        })
    }

    fn f64_at(key: &str, v: &str, line: usize) -> Result<f64, ConfigError> {
        let x: f64 = v.parse().map_err(|_| bad(key, line, format!("`{v}` is not a number")))?;
        if !x.is_finite() {
            return Err(bad(key, line, "value must be finite"));
        }
        Ok(x)
    }

    fn f64(&self, key: &str) -> Result<f64, ConfigError> {
        let (v, l) = self.req(key)?;
        Self::f64_at(key, v, l)
    }

    fn opt_f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.raw(key).map(|(v, l)| Self::f64_at(key, v, l)).transpose()
    }

    /// Non-negative integer; exact float spellings such as `1e6` are accepted.
    fn count_at(key: &str, v: &str, line: usize) -> Result<u64, ConfigError> {
        if let Ok(n) = v.parse::<u64>() {
            return Ok(n);
        }
        match v.parse::<f64>() {
            Ok(x) if x >= 0.0 && x.fract() == 0.0 && x < 2f64.powi(63) => Ok(x as u64),
            _ => Err(bad(key, line, format!("`{v}` is not a non-negative integer"))),
        }
    }

    fn count(&self, key: &str) -> Result<u64, ConfigError> {
        let (v, l) = self.req(key)?;
        Self::count_at(key, v, l)
    }

    fn opt_count(&self, key: &str) -> Result<Option<u64>, ConfigError> {
        self.raw(key).map(|(v, l)| Self::count_at(key, v, l)).transpose()
    }

    fn list(&self, key: &str) -> Result<Vec<f64>, ConfigError> {
        let (v, l) = self.req(key)?;
        parse_list(key, v, l)
    }

    fn reject(&self, keys: &[&str], why: &str) -> Result<(), ConfigError> {
        match keys.iter().find(|k| self.has(k)) {
            Some(k) => Err(invalid(k, format!("not used by {why}"))),
            None => Ok(()),
        }
    }
}

fn parse_list(key: &str, v: &str, line: usize) -> Result<Vec<f64>, ConfigError> {
    v.split(',')
        .map(|s| Entries::f64_at(key, s.trim(), line))
        .collect()
}

struct Common {
    dim: usize,
    half_width: f64,
    dt: f64,
    final_time: f64,
    diffusion: f64,
    flow: FlowField,
    reaction: ReactionModel,
    scheme: Option<IntegratorScheme>,
    u_max: Option<f64>,
    init: InitSpec,
    init_path: Option<PathBuf>,
    seed: Option<u64>,
    snapshot_every: u64,
    output: Option<PathBuf>,
    front: Option<FrontSettings>,
}

fn parse_flow(e: &Entries) -> Result<FlowField, ConfigError> {
    let (name, line) = e.req("flow")?;
    let params = ["flow.c", "flow.delta", "flow.A", "flow.B", "flow.C"];
    let keep = |used: &[&str]| -> Vec<&str> {
        params.iter().copied().filter(|p| !used.contains(p)).collect()
    };
    let why = format!("flow {name}");
    Ok(match name {
        "zero" => {
            e.reject(&params, &why)?;
            FlowField::Zero
        }
        "constant" => {
            e.reject(&keep(&["flow.c"]), &why)?;
            FlowField::Constant(e.list("flow.c")?)
        }
        "shear" => {
            e.reject(&params, &why)?;
            FlowField::Shear
        }
        "cellular" => {
            e.reject(&params, &why)?;
            FlowField::Cellular
        }
        "cats_eye" => {
            e.reject(&keep(&["flow.delta"]), &why)?;
            FlowField::CatsEye {
                delta: e.opt_f64("flow.delta")?.unwrap_or(FlowField::CATS_EYE_DELTA),
            }
        }
        "abc" => {
            e.reject(&keep(&["flow.A", "flow.B", "flow.C"]), &why)?;
            let FlowField::Abc { a, b, c } = FlowField::abc_default() else {
                unreachable!()
            };
            FlowField::Abc {
                a: e.opt_f64("flow.A")?.unwrap_or(a),
                b: e.opt_f64("flow.B")?.unwrap_or(b),
                c: e.opt_f64("flow.C")?.unwrap_or(c),
            }
        }
        other => return Err(bad("flow", line, format!("unknown flow `{other}`"))),
    })
}

fn parse_reaction(e: &Entries) -> Result<ReactionModel, ConfigError> {
    let (name, line) = e.req("reaction")?;
    let params = ["reaction.lambda", "reaction.E", "reaction.coeffs"];
    let keep = |used: &str| -> Vec<&str> { params.iter().copied().filter(|p| *p != used).collect() };
    let why = format!("reaction {name}");
    let model = match name {
        "linear" => {
            e.reject(&keep("reaction.lambda"), &why)?;
            ReactionModel::Linear {
                lambda: e.f64("reaction.lambda")?,
            }
        }
        "fkpp" => {
            e.reject(&params, &why)?;
            ReactionModel::Fkpp
        }
        "cubic" => {
            e.reject(&params, &why)?;
            ReactionModel::Cubic
        }
        "arrhenius" => {
            e.reject(&keep("reaction.E"), &why)?;
            ReactionModel::Arrhenius {
                energy: e
                    .opt_f64("reaction.E")?
                    .unwrap_or(crate::reactions::ARRHENIUS_DEFAULT_ENERGY),
            }
        }
        "polynomial" => {
            e.reject(&keep("reaction.coeffs"), &why)?;
            ReactionModel::Polynomial(e.list("reaction.coeffs")?)
        }
        other => return Err(bad("reaction", line, format!("unknown reaction `{other}`"))),
    };
    model
        .validate()
        .map_err(|err| invalid("reaction", err.to_string()))?;
    Ok(model)
}

/// `None` means the explicit scheme (reference solver only).
fn parse_scheme(e: &Entries, allow_explicit: bool) -> Result<Option<IntegratorScheme>, ConfigError> {
    let (name, line) = e.req("scheme")?;
    let tol = e.opt_f64("scheme.tol")?.unwrap_or(DEFAULT_TOL);
    let max_iter = e.opt_count("scheme.max_iter")?.unwrap_or(DEFAULT_MAX_ITER as u64) as usize;
    let scheme = match name {
        "closed_form" => Some(IntegratorScheme::ClosedForm),
        "backward_euler" => Some(IntegratorScheme::BackwardEuler { tol, max_iter }),
        "crank_nicolson" => Some(IntegratorScheme::CrankNicolson { tol, max_iter }),
        "explicit" if allow_explicit => None,
        other => return Err(bad("scheme", line, format!("unknown scheme `{other}`"))),
    };
    if !matches!(scheme, Some(IntegratorScheme::BackwardEuler { .. } | IntegratorScheme::CrankNicolson { .. })) {
        e.reject(&["scheme.tol", "scheme.max_iter"], &format!("scheme {name}"))?;
    }
    if let Some(s) = &scheme {
        s.validate().map_err(|err| invalid("scheme", err.to_string()))?;
    }
    Ok(scheme)
}

fn parse_init(
    e: &Entries,
    dim: usize,
    base: &Path,
) -> Result<(InitSpec, Option<PathBuf>), SgipError> {
    let (v, line) = e.req("init")?;
    let (kind, args) = v
        .split_once(':')
        .ok_or_else(|| bad("init", line, "expected kind:arguments"))?;
    let nums = || parse_list("init", args, line);
    let spec = match kind.trim() {
        "interval" => match nums()?[..] {
            [a, b] => InitSpec::Interval { a, b },
            _ => return Err(bad("init", line, "interval takes a,b").into()),
        },
        "box" => {
            let n = nums()?;
            if n.len() != 2 * dim {
                return Err(bad("init", line, format!("box takes {} numbers", 2 * dim)).into());
            }
            InitSpec::Box(n.chunks_exact(2).map(|c| (c[0], c[1])).collect())
        }
        "ball" => {
            let mut n = nums()?;
            if n.len() != dim + 1 {
                return Err(bad("init", line, format!("ball takes {} numbers", dim + 1)).into());
            }
            let radius = n.pop().unwrap_or(0.0);
            InitSpec::Ball { center: n, radius }
        }
        "custom" => {
            let rel = PathBuf::from(args.trim());
            let path = if rel.is_absolute() { rel.clone() } else { base.join(&rel) };
            let snap = read_snapshot(&path)?;
            return Ok((InitSpec::Custom(snap.field.with_time(0.0)), Some(rel)));
        }
        other => return Err(bad("init", line, format!("unknown init kind `{other}`")).into()),
    };
    Ok((spec, None))
}

fn parse_common(e: &Entries, base: &Path, allow_explicit: bool) -> Result<Common, SgipError> {
    let dim = e.count("dim")? as usize;
    let half_width = e.f64("L")?;
    let dt = e.f64("dt")?;
    let final_time = e.f64("T")?;
    let diffusion = e.f64("D")?;
    let flow = parse_flow(e)?;
    let reaction = parse_reaction(e)?;
    let scheme = parse_scheme(e, allow_explicit)?;
    let u_max = match e.raw("u_max") {
        None => reaction.natural_bound(),
        Some(("none", _)) => None,
        Some((v, l)) => Some(Entries::f64_at("u_max", v, l)?),
    };
    let (init, init_path) = parse_init(e, dim, base)?;
    let seed = e.opt_count("seed")?;
    let snapshot_every = e.opt_count("snapshot_every")?.unwrap_or(1);
    let output = e.raw("output").map(|(v, _)| PathBuf::from(v));
    let front = match e.opt_f64("front.threshold")? {
        Some(threshold) => {
            let smooth = match e.raw("front.smooth") {
                None | Some(("false", _)) => false,
                Some(("true", _)) => true,
                Some((v, l)) => return Err(bad("front.smooth", l, format!("`{v}` is not a bool")).into()),
            };
            Some(FrontSettings { threshold, smooth })
        }
        None => {
            e.reject(&["front.smooth"], "a config without front.threshold")?;
            None
        }
    };
    Ok(Common {
        dim,
        half_width,
        dt,
        final_time,
        diffusion,
        flow,
        reaction,
        scheme,
        u_max,
        init,
        init_path,
        seed,
        snapshot_every,
        output,
        front,
    })
}

/// Number of whole steps in `[0, T]`, or an error naming the offending key.
pub fn step_count(dt: f64, final_time: f64) -> Result<u64, ConfigError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid("dt", format!("must be positive, got {dt}")));
    }
    if !(final_time >= 0.0 && final_time.is_finite()) {
        return Err(invalid("T", format!("must be non-negative, got {final_time}")));
    }
    let ratio = final_time / dt;
    let n = ratio.round();
    if (ratio - n).abs() > 1e-6 * n.max(1.0) {
        return Err(invalid("T", format!("T/dt = {ratio} is not a whole number of steps")));
    }
    Ok(n as u64)
}

fn validate_common(
    dim: usize,
    half_width: f64,
    dt: f64,
    final_time: f64,
    diffusion: f64,
    flow: &FlowField,
    init: &InitSpec,
    snapshot_every: u64,
    front: Option<FrontSettings>,
    u_max: Option<f64>,
) -> Result<(), SgipError> {
    if !(1..=crate::grid::MAX_DIM).contains(&dim) {
        return Err(invalid("dim", format!("must be 1, 2 or 3, got {dim}")).into());
    }
    if !(half_width > 0.0) {
        return Err(invalid("L", "must be positive").into());
    }
    step_count(dt, final_time)?;
    if !(diffusion >= 0.0) {
        return Err(invalid("D", "must be non-negative").into());
    }
    flow.check_dimension(dim)
        .map_err(|err| invalid("flow", err.to_string()))?;
    init.validate(dim, half_width)
        .map_err(|err| invalid("init", err.to_string()))?;
    if snapshot_every == 0 {
        return Err(invalid("snapshot_every", "must be at least 1").into());
    }
    if let Some(f) = front {
        if !(f.threshold > 0.0 && f.threshold < 1.0) {
            return Err(invalid("front.threshold", "must lie in (0, 1)").into());
        }
    }
    if let Some(u) = u_max {
        if !(u > 0.0) {
            return Err(invalid("u_max", "must be positive").into());
        }
    }
    Ok(())
}

impl SimConfig {
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let e = Entries::parse(text, &[COMMON_KEYS, SIM_KEYS])?;
        let c = parse_common(&e, base, false)?;
        let cfg = SimConfig {
            dim: c.dim,
            half_width: c.half_width,
            bins_per_dim: e.count("M")? as usize,
            particles: e.count("N")? as usize,
            dt: c.dt,
            final_time: c.final_time,
            diffusion: c.diffusion,
            flow: c.flow,
            reaction: c.reaction,
            scheme: c.scheme.unwrap_or(IntegratorScheme::ClosedForm),
            u_max: c.u_max,
            init: c.init,
            init_path: c.init_path,
            seed: c.seed.ok_or_else(|| ConfigError::MissingKey { key: "seed".into() })?,
            snapshot_every: c.snapshot_every,
            output: c.output,
            front: c.front,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| SgipError::io(path, e))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<()> {
        validate_common(
            self.dim,
            self.half_width,
            self.dt,
            self.final_time,
            self.diffusion,
            &self.flow,
            &self.init,
            self.snapshot_every,
            self.front,
            self.u_max,
        )?;
        if self.bins_per_dim < 2 {
            return Err(invalid("M", "must be at least 2").into());
        }
        crate::grid::GridSpec::new(self.dim, self.half_width, self.bins_per_dim)
            .map_err(|err| invalid("M", err.to_string()))?;
        if self.particles == 0 {
            return Err(invalid("N", "must be at least 1").into());
        }
        self.reaction
            .validate()
            .map_err(|err| invalid("reaction", err.to_string()))?;
        self.scheme
            .validate()
            .map_err(|err| invalid("scheme", err.to_string()))?;
        if self.scheme == IntegratorScheme::ClosedForm && !self.reaction.has_closed_form() {
            return Err(invalid(
                "scheme",
                format!("reaction {} has no closed form", self.reaction.name()),
            )
            .into());
        }
        Ok(())
    }

    pub fn steps(&self) -> u64 {
        step_count(self.dt, self.final_time).unwrap_or(0)
    }

    pub fn grid(&self) -> Result<crate::grid::GridSpec> {
        crate::grid::GridSpec::new(self.dim, self.half_width, self.bins_per_dim)
    }

    /// Serializes to the text format; [`SimConfig::parse`] reads it back.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "dim={}\nL={}\nM={}\nN={}", self.dim, self.half_width, self.bins_per_dim, self.particles);
        write_common(
            &mut s,
            self.dt,
            self.final_time,
            self.diffusion,
            &self.flow,
            &self.reaction,
            Some(&self.scheme),
            self.u_max,
            &self.init,
            self.init_path.as_deref(),
            Some(self.seed),
            self.snapshot_every,
            self.output.as_deref(),
            self.front,
        );
        s
    }
}

impl FdmConfig {
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let e = Entries::parse(text, &[COMMON_KEYS, FDM_KEYS])?;
        let c = parse_common(&e, base, true)?;
        let advection = match e.raw("advection") {
            None | Some(("upwind", _)) => Advection::Upwind,
            Some(("central", _)) => Advection::Central,
            Some((v, l)) => return Err(bad("advection", l, format!("unknown advection `{v}`")).into()),
        };
        let cfg = FdmConfig {
            dim: c.dim,
            half_width: c.half_width,
            dx: e.f64("dx")?,
            dt: c.dt,
            final_time: c.final_time,
            diffusion: c.diffusion,
            flow: c.flow,
            reaction: c.reaction,
            reaction_scheme: c.scheme,
            advection,
            u_max: c.u_max,
            init: c.init,
            init_path: c.init_path,
            snapshot_every: c.snapshot_every,
            output: c.output,
            output_bins: e.opt_count("output.M")?.map(|m| m as usize),
            seed: c.seed,
            front: c.front,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| SgipError::io(path, e))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Reference run for the same problem as a particle config: explicit
    /// reaction, upwind flux, spacing `dx`.
    pub fn reference_for(sim: &SimConfig, dx: f64) -> Self {
        FdmConfig {
            dim: sim.dim,
            half_width: sim.half_width,
            dx,
            dt: sim.dt,
            final_time: sim.final_time,
            diffusion: sim.diffusion,
            flow: sim.flow.clone(),
            reaction: sim.reaction.clone(),
            reaction_scheme: None,
            advection: Advection::Upwind,
            u_max: sim.u_max,
            init: sim.init.clone(),
            init_path: sim.init_path.clone(),
            snapshot_every: sim.snapshot_every,
            output: None,
            output_bins: None,
            seed: Some(sim.seed),
            front: sim.front,
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_common(
            self.dim,
            self.half_width,
            self.dt,
            self.final_time,
            self.diffusion,
            &self.flow,
            &self.init,
            self.snapshot_every,
            self.front,
            self.u_max,
        )?;
        let grid = crate::grid::GridSpec::with_spacing(self.dim, self.half_width, self.dx)
            .map_err(|err| invalid("dx", err.to_string()))?;
        if let Some(m) = self.output_bins {
            if m < 2 || grid.bins_per_dim() % m != 0 {
                return Err(invalid(
                    "output.M",
                    format!("must divide the {} reference cells per axis", grid.bins_per_dim()),
                )
                .into());
            }
        }
        self.reaction
            .validate()
            .map_err(|err| invalid("reaction", err.to_string()))?;
        if let Some(s) = &self.reaction_scheme {
            if *s == IntegratorScheme::ClosedForm && !self.reaction.has_closed_form() {
                return Err(invalid(
                    "scheme",
                    format!("reaction {} has no closed form", self.reaction.name()),
                )
                .into());
            }
        }
        Ok(())
    }

    pub fn steps(&self) -> u64 {
        step_count(self.dt, self.final_time).unwrap_or(0)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "dim={}\nL={}\ndx={}", self.dim, self.half_width, self.dx);
        if self.advection == Advection::Central {
            s.push_str("advection=central\n");
        }
        if let Some(m) = self.output_bins {
            let _ = writeln!(s, "output.M={m}");
        }
        write_common(
            &mut s,
            self.dt,
            self.final_time,
            self.diffusion,
            &self.flow,
            &self.reaction,
            self.reaction_scheme.as_ref(),
            self.u_max,
            &self.init,
            self.init_path.as_deref(),
            self.seed,
            self.snapshot_every,
            self.output.as_deref(),
            self.front,
        );
        s
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

#[allow(clippy::too_many_arguments)]
fn write_common(
    s: &mut String,
    dt: f64,
    final_time: f64,
    diffusion: f64,
    flow: &FlowField,
    reaction: &ReactionModel,
    scheme: Option<&IntegratorScheme>,
    u_max: Option<f64>,
    init: &InitSpec,
    init_path: Option<&Path>,
    seed: Option<u64>,
    snapshot_every: u64,
    output: Option<&Path>,
    front: Option<FrontSettings>,
) {
    let _ = writeln!(s, "dt={dt}\nT={final_time}\nD={diffusion}");
    match flow {
        FlowField::Zero => s.push_str("flow=zero\n"),
        FlowField::Constant(c) => {
            let _ = writeln!(s, "flow=constant\nflow.c={}", join(c));
        }
        FlowField::Shear => s.push_str("flow=shear\n"),
        FlowField::Cellular => s.push_str("flow=cellular\n"),
        FlowField::CatsEye { delta } => {
            let _ = writeln!(s, "flow=cats_eye\nflow.delta={delta}");
        }
        FlowField::Abc { a, b, c } => {
            let _ = writeln!(s, "flow=abc\nflow.A={a}\nflow.B={b}\nflow.C={c}");
        }
    }
    match reaction {
        ReactionModel::Linear { lambda } => {
            let _ = writeln!(s, "reaction=linear\nreaction.lambda={lambda}");
        }
        ReactionModel::Fkpp => s.push_str("reaction=fkpp\n"),
        ReactionModel::Cubic => s.push_str("reaction=cubic\n"),
        ReactionModel::Arrhenius { energy } => {
            let _ = writeln!(s, "reaction=arrhenius\nreaction.E={energy}");
        }
        ReactionModel::Polynomial(c) => {
            let _ = writeln!(s, "reaction=polynomial\nreaction.coeffs={}", join(c));
        }
    }
    match scheme {
        None => s.push_str("scheme=explicit\n"),
        Some(IntegratorScheme::ClosedForm) => s.push_str("scheme=closed_form\n"),
        Some(IntegratorScheme::BackwardEuler { tol, max_iter }) => {
            let _ = writeln!(s, "scheme=backward_euler\nscheme.tol={tol}\nscheme.max_iter={max_iter}");
        }
        Some(IntegratorScheme::CrankNicolson { tol, max_iter }) => {
            let _ = writeln!(s, "scheme=crank_nicolson\nscheme.tol={tol}\nscheme.max_iter={max_iter}");
        }
    }
    match u_max {
        Some(u) => {
            let _ = writeln!(s, "u_max={u}");
        }
        None => s.push_str("u_max=none\n"),
    }
    match init {
        InitSpec::Interval { a, b } => {
            let _ = writeln!(s, "init=interval:{a},{b}");
        }
        InitSpec::Box(sides) => {
            let flat: Vec<f64> = sides.iter().flat_map(|&(a, b)| [a, b]).collect();
            let _ = writeln!(s, "init=box:{}", join(&flat));
        }
        InitSpec::Ball { center, radius } => {
            let mut v = center.clone();
            v.push(*radius);
            let _ = writeln!(s, "init=ball:{}", join(&v));
        }
        InitSpec::Custom(_) => {
            let p = init_path.map(|p| p.display().to_string()).unwrap_or_default();
            let _ = writeln!(s, "init=custom:{p}");
        }
    }
    if let Some(seed) = seed {
        let _ = writeln!(s, "seed={seed}");
    }
    let _ = writeln!(s, "snapshot_every={snapshot_every}");
    if let Some(o) = output {
        let _ = writeln!(s, "output={}", o.display());
    }
    if let Some(f) = front {
        let _ = writeln!(s, "front.threshold={}\nfront.smooth={}", f.threshold, f.smooth);
    }
}

/// Reads either kind of config; a `dx` key selects the reference solver.
pub fn parse_config(path: &Path) -> Result<AnyConfig> {
    let text = fs::read_to_string(path).map_err(|e| SgipError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let is_fdm = text
        .lines()
        .any(|l| l.split('#').next().unwrap_or("").split('=').next().map(str::trim) == Some("dx"));
    if is_fdm {
        Ok(AnyConfig::Fdm(FdmConfig::parse(&text, base)?))
    } else {
        Ok(AnyConfig::Sim(SimConfig::parse(&text, base)?))
    }
}

/// Reads a refinement schedule: one `dt,dx,N` triple per line.
pub fn parse_schedule(text: &str) -> Result<Vec<(f64, f64, usize)>, ConfigError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() || body.starts_with("dt") {
            continue;
        }
        let parts: Vec<&str> = body.split(',').map(str::trim).collect();
        let [dt, dx, np] = parts[..] else {
            return Err(ConfigError::Malformed { line });
        };
        out.push((
            Entries::f64_at("dt", dt, line)?,
            Entries::f64_at("dx", dx, line)?,
            Entries::count_at("N", np, line)? as usize,
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FKPP_1D: &str = "\
# 1D FKPP
dim=1
L=60
M=150
N=1000000
dt=0.5
T=20
D=1
flow=zero
reaction=fkpp
scheme=closed_form
init=interval:0,1
seed=7
";

    fn sim(text: &str) -> Result<SimConfig> {
        SimConfig::parse(text, Path::new("."))
    }

    #[test]
    fn fkpp_config_parses() {
        let c = sim(FKPP_1D).unwrap();
        assert_eq!(c.dim, 1);
        assert_eq!(c.bins_per_dim, 150);
        assert_eq!(c.particles, 1_000_000);
        assert_eq!(c.steps(), 40);
        assert_eq!(c.reaction, ReactionModel::Fkpp);
        assert_eq!(c.init, InitSpec::Interval { a: 0.0, b: 1.0 });
        assert_eq!(c.u_max, Some(1.0));
        assert_eq!(c.snapshot_every, 1);
    }

    #[test]
    fn missing_key_is_named() {
        let text = FKPP_1D.replace("dt=0.5\n", "");
        let err = sim(&text).unwrap_err();
        assert!(matches!(&err, SgipError::Config(c) if c.key() == Some("dt")), "{err}");
    }

    #[test]
    fn arrhenius_energy() {
        let text = FKPP_1D
            .replace("reaction=fkpp", "reaction=arrhenius\nreaction.E=0.5")
            .replace("closed_form", "backward_euler");
        assert_eq!(sim(&text).unwrap().reaction, ReactionModel::Arrhenius { energy: 0.5 });
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = sim(&format!("{FKPP_1D}dtt=1\n")).unwrap_err();
        assert!(matches!(err, SgipError::Config(ConfigError::UnknownKey { line: 14, .. })));
        let err = sim(&FKPP_1D.replace("D=1", "D=abc")).unwrap_err();
        assert!(matches!(err, SgipError::Config(ConfigError::BadValue { line: 8, .. })));
        let err = sim(&format!("{FKPP_1D}D=2\n")).unwrap_err();
        assert!(matches!(err, SgipError::Config(ConfigError::Duplicate { .. })));
        let err = sim(&format!("{FKPP_1D}garbage\n")).unwrap_err();
        assert!(matches!(err, SgipError::Config(ConfigError::Malformed { line: 14 })));
    }

    #[test]
    fn invariants_are_checked() {
        for (from, to, key) in [
            ("T=20", "T=20.2", "T"),
            ("dt=0.5", "dt=0", "dt"),
            ("M=150", "M=1", "M"),
            ("N=1000000", "N=0", "N"),
            ("flow=zero", "flow=cellular", "flow"),
            ("init=interval:0,1", "init=interval:0,61", "init"),
            ("closed_form", "explicit", "scheme"),
            ("reaction=fkpp", "reaction=cubic", "scheme"),
        ] {
            let err = sim(&FKPP_1D.replace(from, to)).unwrap_err();
            match err {
                SgipError::Config(c) => assert_eq!(c.key(), Some(key), "{from} -> {to}"),
                other => panic!("{from} -> {to}: {other}"),
            }
        }
        // unused model parameters are typos
        assert!(sim(&format!("{FKPP_1D}flow.delta=2\n")).is_err());
    }

    #[test]
    fn zero_final_time_is_allowed() {
        assert_eq!(sim(&FKPP_1D.replace("T=20", "T=0")).unwrap().steps(), 0);
    }

    #[test]
    fn flows_and_inits() {
        let two_d = FKPP_1D
            .replace("dim=1", "dim=2")
            .replace("init=interval:0,1", "init=ball:0,0,1")
            .replace("flow=zero", "flow=cats_eye");
        let c = sim(&two_d).unwrap();
        assert_eq!(c.flow, FlowField::CatsEye { delta: 2.0 });
        assert_eq!(c.init, InitSpec::Ball { center: vec![0.0, 0.0], radius: 1.0 });
        let boxed = two_d.replace("init=ball:0,0,1", "init=box:0,1,-1,1");
        assert_eq!(sim(&boxed).unwrap().init, InitSpec::Box(vec![(0.0, 1.0), (-1.0, 1.0)]));
    }

    #[test]
    fn custom_init_reads_snapshot() {
        use crate::grid::{DensityField, GridSpec};
        use crate::io::snapshot::{write_snapshot, Producer};
        let dir = tempfile::tempdir().unwrap();
        let g = GridSpec::new(1, 60.0, 150).unwrap();
        let mut v = vec![0.0; 150];
        v[75] = 1.0;
        write_snapshot(&DensityField::new(g, v, 3.0).unwrap(), Producer::Fdm, &dir.path().join("u0.sgrd"))
            .unwrap();
        let text = FKPP_1D.replace("interval:0,1", "custom:u0.sgrd");
        let path = dir.path().join("run.cfg");
        fs::write(&path, &text).unwrap();
        let c = SimConfig::load(&path).unwrap();
        assert!((c.init.mass() - 0.8).abs() < 1e-15);
        let again = SimConfig::parse(&c.to_text(), dir.path()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn fdm_config() {
        let text = "dim=1\nL=60\ndx=0.01\ndt=0.01\nT=20\nD=1\nflow=zero\nreaction=fkpp\nscheme=explicit\ninit=interval:0,1\noutput.M=150\n";
        let c = FdmConfig::parse(text, Path::new(".")).unwrap();
        assert_eq!(c.reaction_scheme, None);
        assert_eq!(c.output_bins, Some(150));
        assert_eq!(c.steps(), 2000);
        assert_eq!(FdmConfig::parse(&c.to_text(), Path::new(".")).unwrap(), c);
        assert!(FdmConfig::parse(&text.replace("150", "7"), Path::new(".")).is_err());
        assert!(FdmConfig::parse(&text.replace("dx=0.01", "dx=0.007"), Path::new(".")).is_err());
        assert!(sim(&text.replace("dx=0.01\n", "")).is_err());
    }

    #[test]
    fn schedule_file() {
        let s = parse_schedule("# dt,dx,N\n0.5,0.8,2e4\n0.25, 0.2, 640000\n").unwrap();
        assert_eq!(s, vec![(0.5, 0.8, 20_000), (0.25, 0.2, 640_000)]);
        assert!(matches!(parse_schedule("1,2\n"), Err(ConfigError::Malformed { line: 1 })));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn flow_strategy() -> impl Strategy<Value = (usize, FlowField)> {
            prop_oneof![
                (1usize..=3).prop_map(|d| (d, FlowField::Zero)),
                Just((2, FlowField::Cellular)),
                Just((2, FlowField::Shear)),
                (0.0f64..5.0).prop_map(|delta| (2, FlowField::CatsEye { delta })),
                (-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0)
                    .prop_map(|(a, b, c)| (3, FlowField::Abc { a, b, c })),
                proptest::collection::vec(-3.0f64..3.0, 1..=3)
                    .prop_map(|c| (c.len(), FlowField::Constant(c))),
            ]
        }

        fn reaction_strategy() -> impl Strategy<Value = (ReactionModel, IntegratorScheme)> {
            prop_oneof![
                Just((ReactionModel::Fkpp, IntegratorScheme::ClosedForm)),
                Just((ReactionModel::Cubic, IntegratorScheme::backward_euler())),
                (0.01f64..2.0).prop_map(|e| (ReactionModel::Arrhenius { energy: e }, IntegratorScheme::crank_nicolson())),
                (-1.0f64..1.0).prop_map(|l| (ReactionModel::Linear { lambda: l }, IntegratorScheme::ClosedForm)),
                proptest::collection::vec(-1.0f64..1.0, 1..4)
                    .prop_map(|c| (ReactionModel::Polynomial(c), IntegratorScheme::backward_euler())),
            ]
        }

        proptest! {
            #[test]
            fn sim_config_round_trips(
                (dim, flow) in flow_strategy(),
                (reaction, scheme) in reaction_strategy(),
                l in 1.0f64..100.0,
                m in 2usize..300,
                n in 1usize..10_000_000,
                steps in 0u64..100,
                dt in 0.01f64..1.0,
                d in 0.0f64..3.0,
                seed in any::<u64>(),
                every in 1u64..10,
                radius in 0.01f64..0.5,
                front in proptest::option::of((0.01f64..0.99, any::<bool>())),
            ) {
                let cfg = SimConfig {
                    dim,
                    half_width: l,
                    bins_per_dim: m,
                    particles: n,
                    dt,
                    final_time: steps as f64 * dt,
                    diffusion: d,
                    flow,
                    u_max: reaction.natural_bound(),
                    reaction,
                    scheme,
                    init: InitSpec::Ball { center: vec![0.0; dim], radius },
                    init_path: None,
                    seed,
                    snapshot_every: every,
                    output: Some(PathBuf::from("out/dir")),
                    front: front.map(|(threshold, smooth)| FrontSettings { threshold, smooth }),
                };
                cfg.validate().unwrap();
                let back = SimConfig::parse(&cfg.to_text(), Path::new(".")).unwrap();
                prop_assert_eq!(back, cfg);
            }
        }
    }
}
