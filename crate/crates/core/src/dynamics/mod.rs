//! Hamiltonian flows, explicit maps, and words in named generators.
//!
//! Sign convention: `ι_{X_F} ω = dF` with `ω = dp∧dq`, which gives
//! `ṗ = ∂F/∂q` and `q̇ = −∂F/∂p`. The harmonic oscillator
//! `F = (p² + q²)/2` therefore rotates clockwise in the `(p, q)` chart.

mod flow;
mod hamiltonian;
mod maps;
mod word;

use std::sync::Arc;

use crate::error::Result;
use crate::geometry::{Point, Vector};

pub use flow::{ActionRecord, FlowMap, IntegratorSettings, Scheme, Trajectory};
pub use hamiltonian::{HamiltonianSpec, VectorField, SUPPORT_TOL};
pub use maps::{Identity, InverseOf, Translation, TwistMap};
pub use word::{compose, power, GeneratorTable, GroupWord, Letter, WordMap};

/// Step of the central differences used for push-forwards.
pub const FD_STEP: f64 = 1e-5;

/// A numerically realized diffeomorphism of the chart.
pub trait Diffeo: Send + Sync {
    fn apply(&self, x: Point) -> Result<Point>;

    fn apply_inverse(&self, x: Point) -> Result<Point>;

    /// `(f(x), Df(x)·v)`. The default uses two central-difference
    /// evaluations and estimates `f(x)` by their mean.
    fn push_forward(&self, x: Point, v: Vector) -> Result<(Point, Vector)> {
        fd_push_forward(|y| self.apply(y), x, v)
    }

    fn push_forward_inverse(&self, x: Point, v: Vector) -> Result<(Point, Vector)> {
        fd_push_forward(|y| self.apply_inverse(y), x, v)
    }

    /// The generating flow, when the map is a single Hamiltonian flow.
    fn hamiltonian(&self) -> Option<&FlowMap> {
        None
    }
}

impl<D: Diffeo + ?Sized> Diffeo for Arc<D> {
    fn apply(&self, x: Point) -> Result<Point> {
        (**self).apply(x)
    }
    fn apply_inverse(&self, x: Point) -> Result<Point> {
        (**self).apply_inverse(x)
    }
    fn push_forward(&self, x: Point, v: Vector) -> Result<(Point, Vector)> {
        (**self).push_forward(x, v)
    }
    fn push_forward_inverse(&self, x: Point, v: Vector) -> Result<(Point, Vector)> {
        (**self).push_forward_inverse(x, v)
    }
    fn hamiltonian(&self) -> Option<&FlowMap> {
        (**self).hamiltonian()
    }
}

impl<D: Diffeo + ?Sized> Diffeo for &D {
    fn apply(&self, x: Point) -> Result<Point> {
        (**self).apply(x)
    }
    fn apply_inverse(&self, x: Point) -> Result<Point> {
        (**self).apply_inverse(x)
    }
    fn push_forward(&self, x: Point, v: Vector) -> Result<(Point, Vector)> {
        (**self).push_forward(x, v)
    }
    fn push_forward_inverse(&self, x: Point, v: Vector) -> Result<(Point, Vector)> {
        (**self).push_forward_inverse(x, v)
    }
    fn hamiltonian(&self) -> Option<&FlowMap> {
        (**self).hamiltonian()
    }
}

/// A path of diffeomorphisms `f_s`, `s ∈ [0, 1]`, from the identity to the map.
pub trait Isotopy: Diffeo {
    fn at(&self, s: f64, x: Point) -> Result<Point>;

    /// `∂f_s(x)/∂s`.
    fn velocity(&self, s: f64, x: Point) -> Result<Vector>;

    /// Samples of `s ↦ f_s(x)` from `s = 0` to `s = 1`, together with an
    /// upper bound on the chart distance (max norm) moved between
    /// consecutive samples.
    fn samples(&self, x: Point) -> Result<(Vec<Point>, f64)>;
}

pub fn fd_push_forward<F>(f: F, x: Point, v: Vector) -> Result<(Point, Vector)>
where
    F: Fn(Point) -> Result<Point>,
{
    let n = v.norm();
    if n == 0.0 {
        return Ok((f(x)?, v));
    }
    let u = v * (FD_STEP / n);
    let a = f(x + u)?;
    let b = f(x - u)?;
    Ok(((a + b) * 0.5, (a - b) * (n / (2.0 * FD_STEP))))
}

/// `Df(x)` as `[[∂f_p/∂p, ∂f_p/∂q], [∂f_q/∂p, ∂f_q/∂q]]`.
pub fn jacobian(f: &dyn Diffeo, x: Point) -> Result<[[f64; 2]; 2]> {
    let (_, cp) = f.push_forward(x, Point::new(1.0, 0.0))?;
    let (_, cq) = f.push_forward(x, Point::new(0.0, 1.0))?;
    Ok([[cp.p, cq.p], [cp.q, cq.q]])
}

/// `max |det Df − 1|` over the given points.
pub fn symplecticity_residual(f: &dyn Diffeo, points: &[Point]) -> Result<f64> {
    let mut worst = 0.0f64;
    for &x in points {
        let j = jacobian(f, x)?;
        worst = worst.max((j[0][0] * j[1][1] - j[0][1] * j[1][0] - 1.0).abs());
    }
    Ok(worst)
}
