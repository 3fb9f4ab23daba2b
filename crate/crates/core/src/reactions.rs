//! Reaction kinetics `r(u)` and the per-bin integrators for `du/dt = r(u)`.

use rayon::prelude::*;

use crate::error::{ReactionError, Result, SgipError};
use crate::grid::DensityField;

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 50;

/// Activation energy used for the Arrhenius experiments.
pub const ARRHENIUS_DEFAULT_ENERGY: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub enum ReactionModel {
    /// `λ u`.
    Linear { lambda: f64 },
    /// `u (1 - u)`.
    Fkpp,
    /// `u² (1 - u)`.
    Cubic,
    /// `exp(-E/u) (1 - u)`, extended by 0 for `u <= 0`.
    Arrhenius { energy: f64 },
    /// `Σ_k a_k u^k`, coefficients in ascending order.
    Polynomial(Vec<f64>),
}

impl ReactionModel {
    pub fn validate(&self) -> Result<(), ReactionError> {
        match self {
            ReactionModel::Linear { lambda } if !lambda.is_finite() => Err(
                ReactionError::InvalidParameter(format!("linear rate {lambda} is not finite")),
            ),
            ReactionModel::Arrhenius { energy } if !(energy.is_finite() && *energy > 0.0) => {
                Err(ReactionError::InvalidParameter(format!(
                    "activation energy must be positive, got {energy}"
                )))
            }
            ReactionModel::Polynomial(c) if c.is_empty() || c.iter().any(|a| !a.is_finite()) => {
                Err(ReactionError::InvalidParameter(
                    "polynomial needs at least one finite coefficient".into(),
                ))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ReactionModel::Linear { .. } => "linear",
            ReactionModel::Fkpp => "fkpp",
            ReactionModel::Cubic => "cubic",
            ReactionModel::Arrhenius { .. } => "arrhenius",
            ReactionModel::Polynomial(_) => "polynomial",
        }
    }

    /// The invariant interval `[0, 1]` for the bistable/logistic kinetics.
    pub fn natural_bound(&self) -> Option<f64> {
        match self {
            ReactionModel::Fkpp | ReactionModel::Cubic | ReactionModel::Arrhenius { .. } => {
                Some(1.0)
            }
            _ => None,
        }
    }

    pub fn has_closed_form(&self) -> bool {
        matches!(self, ReactionModel::Fkpp | ReactionModel::Linear { .. })
    }

    #[inline]
    pub fn rate(&self, u: f64) -> f64 {
        match self {
            ReactionModel::Linear { lambda } => lambda * u,
            ReactionModel::Fkpp => u * (1.0 - u),
            ReactionModel::Cubic => u * u * (1.0 - u),
            ReactionModel::Arrhenius { energy } => {
                if u <= 0.0 {
                    0.0
                } else {
                    (-energy / u).exp() * (1.0 - u)
                }
            }
            ReactionModel::Polynomial(c) => c.iter().rev().fold(0.0, |acc, a| acc * u + a),
        }
    }

    #[inline]
    pub fn rate_derivative(&self, u: f64) -> f64 {
        match self {
            ReactionModel::Linear { lambda } => *lambda,
            ReactionModel::Fkpp => 1.0 - 2.0 * u,
            ReactionModel::Cubic => u * (2.0 - 3.0 * u),
            ReactionModel::Arrhenius { energy } => {
                if u <= 0.0 {
                    0.0
                } else {
                    let e = (-energy / u).exp();
                    e * (energy * (1.0 - u) / (u * u) - 1.0)
                }
            }
            ReactionModel::Polynomial(c) => c
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, a)| acc * u + k as f64 * a),
        }
    }
}

/// Time integrator applied independently in every bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntegratorScheme {
    ClosedForm,
    BackwardEuler { tol: f64, max_iter: usize },
    CrankNicolson { tol: f64, max_iter: usize },
}

impl IntegratorScheme {
    pub fn backward_euler() -> Self {
        IntegratorScheme::BackwardEuler {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }

    pub fn crank_nicolson() -> Self {
        IntegratorScheme::CrankNicolson {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }

    pub fn validate(&self) -> Result<(), ReactionError> {
        match *self {
            IntegratorScheme::ClosedForm => Ok(()),
            IntegratorScheme::BackwardEuler { tol, max_iter }
            | IntegratorScheme::CrankNicolson { tol, max_iter } => {
                if !(tol > 0.0 && tol.is_finite()) || max_iter == 0 {
                    Err(ReactionError::InvalidParameter(format!(
                        "tolerance {tol} and iteration cap {max_iter} must be positive"
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            IntegratorScheme::ClosedForm => "closed_form",
            IntegratorScheme::BackwardEuler { .. } => "backward_euler",
            IntegratorScheme::CrankNicolson { .. } => "crank_nicolson",
        }
    }
}

/// Result of one implicit per-bin solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImplicitSolution {
    pub value: f64,
    pub iterations: usize,
    /// The Newton root fell outside `[0, u_max]` and was clamped.
    pub clamped: bool,
}

pub fn react_closed_form(model: &ReactionModel, u_star: f64, dt: f64) -> Result<f64, ReactionError> {
    match model {
        ReactionModel::Fkpp => logistic(u_star, dt.exp_m1()),
        ReactionModel::Linear { lambda } => Ok(u_star * (lambda * dt).exp()),
        other => Err(ReactionError::NoClosedForm(other.name())),
    }
}

/// Logistic flow map written with `growth = e^{Δt} - 1`.
#[inline]
fn logistic(u_star: f64, growth: f64) -> Result<f64, ReactionError> {
    let denom = 1.0 + u_star * growth;
    if denom <= 0.0 {
        return Err(ReactionError::Denominator(denom));
    }
    Ok(u_star * (1.0 + growth) / denom)
}

pub fn react_backward_euler(
    model: &ReactionModel,
    u_star: f64,
    dt: f64,
    tol: f64,
    max_iter: usize,
    u_max: Option<f64>,
) -> Result<ImplicitSolution, ReactionError> {
    newton(model, u_star, u_star, dt, tol, max_iter, u_max)
}

pub fn react_crank_nicolson(
    model: &ReactionModel,
    u_star: f64,
    dt: f64,
    tol: f64,
    max_iter: usize,
    u_max: Option<f64>,
) -> Result<ImplicitSolution, ReactionError> {
    let half = 0.5 * dt;
    let explicit_part = u_star + half * model.rate(u_star);
    newton(model, u_star, explicit_part, half, tol, max_iter, u_max)
}

/// Solves `u - rhs - θ r(u) = 0` by Newton iteration started at `start`.
///
/// Convergence is declared once `|residual| <= tol * max(1, |u|)`.
fn newton(
    model: &ReactionModel,
    start: f64,
    rhs: f64,
    theta: f64,
    tol: f64,
    max_iter: usize,
    u_max: Option<f64>,
) -> Result<ImplicitSolution, ReactionError> {
    let mut u = start;
    let mut residual = u - rhs - theta * model.rate(u);
    let mut iterations = 0;
    while residual.abs() > tol * u.abs().max(1.0) {
        if iterations == max_iter {
            return Err(ReactionError::NoConvergence {
                iterations,
                last: u,
                residual,
            });
        }
        let slope = 1.0 - theta * model.rate_derivative(u);
        u -= residual / slope;
        if !u.is_finite() {
            return Err(ReactionError::NonFinite);
        }
        residual = u - rhs - theta * model.rate(u);
        iterations += 1;
    }
    let upper = u_max.unwrap_or(f64::INFINITY);
    let clamped_value = u.clamp(0.0, upper);
    Ok(ImplicitSolution {
        value: clamped_value,
        iterations,
        clamped: clamped_value != u,
    })
}

/// Single-bin update dispatching on the scheme.
pub fn react(
    model: &ReactionModel,
    scheme: &IntegratorScheme,
    u_star: f64,
    dt: f64,
    u_max: Option<f64>,
) -> Result<ImplicitSolution, ReactionError> {
    match *scheme {
        IntegratorScheme::ClosedForm => Ok(ImplicitSolution {
            value: react_closed_form(model, u_star, dt)?,
            iterations: 0,
            clamped: false,
        }),
        IntegratorScheme::BackwardEuler { tol, max_iter } => {
            react_backward_euler(model, u_star, dt, tol, max_iter, u_max)
        }
        IntegratorScheme::CrankNicolson { tol, max_iter } => {
            react_crank_nicolson(model, u_star, dt, tol, max_iter, u_max)
        }
    }
}

/// Post-reaction field with its mass.
#[derive(Debug, Clone)]
pub struct ReactionOutcome {
    pub field: DensityField,
    pub total_mass: f64,
    /// Number of bins whose implicit root was clamped into `[0, u_max]`.
    pub clamped_bins: usize,
}

const CHUNK: usize = 4096;

/// Integrates `du/dt = r(u)` over `dt` in every bin. The field time label is
/// left unchanged.
pub fn integrate_reaction_field(
    field: &DensityField,
    model: &ReactionModel,
    scheme: &IntegratorScheme,
    dt: f64,
    u_max: Option<f64>,
) -> Result<ReactionOutcome> {
    model.validate()?;
    scheme.validate()?;
    if !(dt >= 0.0 && dt.is_finite()) {
        return Err(SgipError::InvalidParameter(format!("time step {dt}")));
    }
    if *scheme == IntegratorScheme::ClosedForm && !model.has_closed_form() {
        return Err(ReactionError::NoClosedForm(model.name()).into());
    }

    let mut values = field.values().to_vec();
    // Closed forms are evaluated with the exponential hoisted out of the loop.
    let growth = match model {
        ReactionModel::Fkpp => dt.exp_m1(),
        ReactionModel::Linear { lambda } => (lambda * dt).exp(),
        _ => 0.0,
    };
    let chunk_results: Vec<Result<usize, (usize, ReactionError)>> = values
        .par_chunks_mut(CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            let mut clamped = 0;
            for (k, u) in chunk.iter_mut().enumerate() {
                let bin = c * CHUNK + k;
                match (scheme, model) {
                    (IntegratorScheme::ClosedForm, ReactionModel::Fkpp) => {
                        *u = logistic(*u, growth).map_err(|e| (bin, e))?;
                    }
                    (IntegratorScheme::ClosedForm, _) => *u *= growth,
                    _ => {
                        let s = react(model, scheme, *u, dt, u_max).map_err(|e| (bin, e))?;
                        clamped += s.clamped as usize;
                        *u = s.value;
                    }
                }
            }
            Ok(clamped)
        })
        .collect();

    let mut clamped_bins = 0;
    for r in chunk_results {
        match r {
            Ok(n) => clamped_bins += n,
            Err((bin, source)) => return Err(SgipError::ReactionBin { bin, source }),
        }
    }
    if let Some(bin) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(SgipError::ReactionBin {
            bin,
            source: ReactionError::NonFinite,
        });
    }
    let out = DensityField::from_parts(*field.grid(), values, field.time());
    Ok(ReactionOutcome {
        total_mass: out.total_mass(),
        field: out,
        clamped_bins,
    })
}
