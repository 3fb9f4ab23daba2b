//! Steady velocity fields used by the experiments.
//!
//! Velocities are returned as `[f64; 3]`; components past the run dimension
//! are zero.

use crate::error::{Result, SgipError};

pub type Velocity = [f64; 3];

/// One-dimensional factor of a separable velocity term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    One,
    Sin,
    Cos,
}

impl Factor {
    #[inline]
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Factor::One => 1.0,
            Factor::Sin => x.sin(),
            Factor::Cos => x.cos(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparableTerm {
    pub coef: f64,
    pub factors: [Factor; 3],
}

/// Closed-form velocity field `v(x, t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum FlowField {
    Zero,
    /// Uniform drift; the vector length fixes the dimension.
    Constant(Vec<f64>),
    /// `(sin y, 0)`.
    Shear,
    /// `(-sin x cos y, cos x sin y)`.
    Cellular,
    /// Cellular flow plus `delta * (cos x sin y, -sin x cos y)`.
    CatsEye { delta: f64 },
    /// `(A sin z + C cos y, B sin x + A cos z, C sin y + B cos x)`.
    Abc { a: f64, b: f64, c: f64 },
}

impl FlowField {
    pub const CATS_EYE_DELTA: f64 = 2.0;

    /// The ABC coefficients used in the 3D experiments: `A = 1`,
    /// `B = sqrt(2/3)`, `C = sqrt(1/3)`.
    pub fn abc_default() -> Self {
        FlowField::Abc {
            a: 1.0,
            b: (2.0_f64 / 3.0).sqrt(),
            c: (1.0_f64 / 3.0).sqrt(),
        }
    }

    /// Dimension the field is defined in, or `None` for any dimension.
    pub fn dimension(&self) -> Option<usize> {
        match self {
            FlowField::Zero => None,
            FlowField::Constant(c) => Some(c.len()),
            FlowField::Shear | FlowField::Cellular | FlowField::CatsEye { .. } => Some(2),
            FlowField::Abc { .. } => Some(3),
        }
    }

    pub fn check_dimension(&self, dim: usize) -> Result<()> {
        match self.dimension() {
            Some(expected) if expected != dim => Err(SgipError::DimensionMismatch {
                expected,
                got: dim,
            }),
            _ => Ok(()),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            FlowField::Zero => true,
            FlowField::Constant(c) => c.iter().all(|&v| v == 0.0),
            _ => false,
        }
    }

    /// Upper bound on `max_a |v_a|` over all of space.
    pub fn speed_bound(&self) -> f64 {
        match self {
            FlowField::Zero => 0.0,
            FlowField::Constant(c) => c.iter().fold(0.0, |m, v| m.max(v.abs())),
            FlowField::Shear | FlowField::Cellular => 1.0,
            FlowField::CatsEye { delta } => 1.0 + delta.abs(),
            FlowField::Abc { a, b, c } => a.abs() + b.abs() + c.abs(),
        }
    }

    pub fn velocity(&self, x: &[f64], t: f64) -> Result<Velocity> {
        let expected = self.dimension().unwrap_or(x.len());
        if x.len() != expected || x.is_empty() || x.len() > 3 {
            return Err(SgipError::DimensionMismatch {
                expected,
                got: x.len(),
            });
        }
        Ok(self.velocity_unchecked(x, t))
    }

    /// Evaluates without checking the point dimension.
    #[inline]
    pub fn velocity_unchecked(&self, x: &[f64], _t: f64) -> Velocity {
        match self {
            FlowField::Zero => [0.0; 3],
            FlowField::Constant(c) => {
                let mut v = [0.0; 3];
                v[..c.len()].copy_from_slice(c);
                v
            }
            FlowField::Shear => [x[1].sin(), 0.0, 0.0],
            FlowField::Cellular => {
                let (sx, cx) = x[0].sin_cos();
                let (sy, cy) = x[1].sin_cos();
                [-sx * cy, cx * sy, 0.0]
            }
            FlowField::CatsEye { delta } => {
                let (sx, cx) = x[0].sin_cos();
                let (sy, cy) = x[1].sin_cos();
                [-sx * cy + delta * cx * sy, cx * sy - delta * sx * cy, 0.0]
            }
            FlowField::Abc { a, b, c } => {
                let (sx, cx) = x[0].sin_cos();
                let (sy, cy) = x[1].sin_cos();
                let (sz, cz) = x[2].sin_cos();
                [a * sz + c * cy, b * sx + a * cz, c * sy + b * cx]
            }
        }
    }

    /// Each velocity component as a sum of products of one-dimensional
    /// factors, `v_a(x) = sum_k coef_k * prod_b f_kb(x_b)`.
    pub fn separable_terms(&self) -> [Vec<SeparableTerm>; 3] {
        use Factor::{Cos, One, Sin};
        let t = |coef: f64, f: [Factor; 3]| SeparableTerm { coef, factors: f };
        match self {
            FlowField::Zero => Default::default(),
            FlowField::Constant(c) => {
                let mut out: [Vec<SeparableTerm>; 3] = Default::default();
                for (a, &v) in c.iter().enumerate() {
                    if v != 0.0 {
                        out[a].push(t(v, [One; 3]));
                    }
                }
                out
            }
            FlowField::Shear => [vec![t(1.0, [One, Sin, One])], vec![], vec![]],
            FlowField::Cellular => [
                vec![t(-1.0, [Sin, Cos, One])],
                vec![t(1.0, [Cos, Sin, One])],
                vec![],
            ],
            FlowField::CatsEye { delta } => [
                vec![t(-1.0, [Sin, Cos, One]), t(*delta, [Cos, Sin, One])],
                vec![t(1.0, [Cos, Sin, One]), t(-delta, [Sin, Cos, One])],
                vec![],
            ],
            FlowField::Abc { a, b, c } => [
                vec![t(*a, [One, One, Sin]), t(*c, [One, Cos, One])],
                vec![t(*b, [Sin, One, One]), t(*a, [One, One, Cos])],
                vec![t(*c, [One, Sin, One]), t(*b, [Cos, One, One])],
            ],
        }
    }

    /// Central-difference divergence with step `h`.
    pub fn numerical_divergence(&self, x: &[f64], h: f64) -> Result<f64> {
        if !(h > 0.0) {
            return Err(SgipError::InvalidParameter(format!("step {h} must be positive")));
        }
        self.velocity(x, 0.0)?;
        let mut p = x.to_vec();
        let mut div = 0.0;
        for a in 0..x.len() {
            p[a] = x[a] + h;
            let plus = self.velocity_unchecked(&p, 0.0)[a];
            p[a] = x[a] - h;
            let minus = self.velocity_unchecked(&p, 0.0)[a];
            p[a] = x[a];
            div += (plus - minus) / (2.0 * h);
        }
        Ok(div)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pointwise_examples() {
        let v = FlowField::Shear.velocity(&[5.0, FRAC_PI_2], 0.0).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-15 && v[1] == 0.0);

        let v = FlowField::Cellular.velocity(&[0.0, 0.0], 0.0).unwrap();
        assert_eq!(&v[..2], &[0.0, 0.0]);

        let v = FlowField::abc_default().velocity(&[0.0, 0.0, 0.0], 0.0).unwrap();
        assert!((v[0] - (1.0_f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((v[1] - 1.0).abs() < 1e-15);
        assert!((v[2] - (2.0_f64 / 3.0).sqrt()).abs() < 1e-15);

        assert_eq!(FlowField::Zero.velocity(&[1.0, 2.0, 3.0], 0.0).unwrap(), [0.0; 3]);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        assert!(FlowField::Cellular.velocity(&[0.0], 0.0).is_err());
        assert!(FlowField::abc_default().velocity(&[0.0, 0.0], 0.0).is_err());
        assert!(FlowField::Constant(vec![1.0]).velocity(&[0.0, 0.0], 0.0).is_err());
        assert!(FlowField::Shear.check_dimension(3).is_err());
        assert!(FlowField::Zero.check_dimension(3).is_ok());
    }

    #[test]
    fn cats_eye_composition() {
        let x = [0.3, -1.1];
        let cell = FlowField::Cellular.velocity(&x, 0.0).unwrap();
        let eye = FlowField::CatsEye { delta: 2.0 }.velocity(&x, 0.0).unwrap();
        let pert = [x[0].cos() * x[1].sin(), -x[0].sin() * x[1].cos()];
        assert!((eye[0] - cell[0] - 2.0 * pert[0]).abs() < 1e-15);
        assert!((eye[1] - cell[1] - 2.0 * pert[1]).abs() < 1e-15);
    }

    #[test]
    fn divergence_free_flows() {
        let flows = [
            (FlowField::Shear, 2),
            (FlowField::Cellular, 2),
            (FlowField::CatsEye { delta: 2.0 }, 2),
            (FlowField::abc_default(), 3),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (flow, d) in &flows {
            for _ in 0..100 {
                let x: Vec<f64> = (0..*d).map(|_| rng.random_range(-60.0..60.0)).collect();
                let div = flow.numerical_divergence(&x, 1e-4).unwrap();
                assert!(div.abs() <= 1e-6, "{flow:?} at {x:?}: {div}");
            }
        }
        let c = FlowField::Constant(vec![1.0, -2.0]);
        assert_eq!(c.numerical_divergence(&[0.1, 0.2], 1e-4).unwrap(), 0.0);
    }

    #[test]
    fn speed_bounds_hold() {
        let flows = [
            (FlowField::Shear, 2),
            (FlowField::Cellular, 2),
            (FlowField::CatsEye { delta: 2.0 }, 2),
            (FlowField::abc_default(), 3),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (flow, d) in &flows {
            let bound = flow.speed_bound();
            for _ in 0..1000 {
                let x: Vec<f64> = (0..*d).map(|_| rng.random_range(-60.0..60.0)).collect();
                let v = flow.velocity(&x, 0.0).unwrap();
                assert!(v.iter().all(|c| c.abs() <= bound + 1e-12));
            }
        }
    }

    #[test]
    fn separable_form_matches_velocity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let flows = [
            (2, FlowField::Zero),
            (3, FlowField::Constant(vec![0.5, 0.0, -2.0])),
            (2, FlowField::Shear),
            (2, FlowField::Cellular),
            (2, FlowField::CatsEye { delta: 2.0 }),
            (3, FlowField::abc_default()),
        ];
        for (dim, flow) in flows {
            let terms = flow.separable_terms();
            for _ in 0..50 {
                let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-10.0..10.0)).collect();
                let v = flow.velocity(&x, 0.0).unwrap();
                for a in 0..3 {
                    let s: f64 = terms[a]
                        .iter()
                        .map(|t| t.coef * (0..dim).map(|b| t.factors[b].eval(x[b])).product::<f64>())
                        .sum();
                    assert!((s - v[a]).abs() < 1e-14, "{flow:?} axis {a}");
                }
            }
        }
    }
}
