use std::sync::Arc;

use super::{Diffeo, FlowMap, Isotopy};
use crate::error::{Error, Result};
use crate::exprlang::{Expr, Var};
use crate::geometry::{Point, Vector};

/// Upper bound on the motion between consecutive isotopy samples of the
/// explicit maps below.
const SAMPLE_STEP: f64 = 0.05;

fn sample_count(distance: f64) -> usize {
    16 + (distance / SAMPLE_STEP).ceil() as usize
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Identity;

impl Diffeo for Identity {
    fn apply(&self, x: Point) -> Result<Point> {
        Ok(x)
    }
    fn apply_inverse(&self, x: Point) -> Result<Point> {
        Ok(x)
    }
    fn push_forward(&self, x: Point, v: Vector) -> Result<(Point, Vector)> {
        Ok((x, v))
    }
    fn push_forward_inverse(&self, x: Point, v: Vector) -> Result<(Point, Vector)> {
        Ok((x, v))
    }
}

impl Isotopy for Identity {
    fn at(&self, _s: f64, x: Point) -> Result<Point> {
        Ok(x)
    }
    fn velocity(&self, _s: f64, _x: Point) -> Result<Vector> {
        Ok(Point::ORIGIN)
    }
    fn samples(&self, x: Point) -> Result<(Vec<Point>, f64)> {
        Ok((vec![x], 0.0))
    }
}

/// `x ↦ x + d`, with the straight-line isotopy `x + s·d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Translation {
    pub d: Vector,
}

impl Translation {
    pub fn new(dp: f64, dq: f64) -> Translation {
        Translation { d: Point::new(dp, dq) }
    }
}

impl Diffeo for Translation {
    fn apply(&self, x: Point) -> Result<Point> {
        Ok(x + self.d)
    }
    fn apply_inverse(&self, x: Point) -> Result<Point> {
        Ok(x - self.d)
    }
    fn push_forward(&self, x: Point, v: Vector) -> Result<(Point, Vector)> {
        Ok((x + self.d, v))
    }
    fn push_forward_inverse(&self, x: Point, v: Vector) -> Result<(Point, Vector)> {
        Ok((x - self.d, v))
    }
}

impl Isotopy for Translation {
    fn at(&self, s: f64, x: Point) -> Result<Point> {
        Ok(x + self.d * s)
    }
    fn velocity(&self, _s: f64, _x: Point) -> Result<Vector> {
        Ok(self.d)
    }
    fn samples(&self, x: Point) -> Result<(Vec<Point>, f64)> {
        let n = sample_count(self.d.max_abs());
        let pts = (0..=n).map(|k| x + self.d * (k as f64 / n as f64)).collect();
        Ok((pts, self.d.max_abs() / n as f64))
    }
}

/// The twist `(p, q) ↦ (p, q + t(p))`.
///
/// A clamped twist freezes the profile outside `[-1, 1]`: `t(p) = t(-1)`
/// for `p ≤ -1` and `t(p) = t(1)` for `p ≥ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwistMap {
    profile: Expr,
    slope: Expr,
    clamped: bool,
}

impl TwistMap {
    pub fn new(profile: Expr) -> Result<TwistMap> {
        if profile.depends_on(Var::Q) || profile.depends_on(Var::T) {
            return Err(Error::InvalidSettings(format!("twist profile `{profile}` may depend on p only")));
        }
        let slope = profile.derivative(Var::P)?;
        Ok(TwistMap { profile, slope, clamped: false })
    }

    pub fn clamped(profile: Expr) -> Result<TwistMap> {
        Ok(TwistMap { clamped: true, ..TwistMap::new(profile)? })
    }

    pub fn parse(src: &str, clamped: bool) -> Result<TwistMap> {
        let e = Expr::parse(src)?;
        if clamped {
            TwistMap::clamped(e)
        } else {
            TwistMap::new(e)
        }
    }

    pub fn profile_expr(&self) -> &Expr {
        &self.profile
    }

    pub fn is_clamped(&self) -> bool {
        self.clamped
    }

    fn eval(e: &Expr, p: f64) -> Result<f64> {
        e.eval(p, 0.0, 0.0).map_err(|s| Error::domain("twist", s, Point::new(p, 0.0), 0.0))
    }

    /// `t(p)`.
    pub fn profile(&self, p: f64) -> Result<f64> {
        let p = if self.clamped { p.clamp(-1.0, 1.0) } else { p };
        TwistMap::eval(&self.profile, p)
    }

    /// `t'(p)`; zero outside `[-1, 1]` when clamped, one-sided at `±1`.
    pub fn slope(&self, p: f64) -> Result<f64> {
        if self.clamped && !(-1.0..=1.0).contains(&p) {
            return Ok(0.0);
        }
        TwistMap::eval(&self.slope, p)
    }
}

impl Diffeo for TwistMap {
    fn apply(&self, x: Point) -> Result<Point> {
        Ok(Point::new(x.p, x.q + self.profile(x.p)?))
    }
    fn apply_inverse(&self, x: Point) -> Result<Point> {
        Ok(Point::new(x.p, x.q - self.profile(x.p)?))
    }
    fn push_forward(&self, x: Point, v: Vector) -> Result<(Point, Vector)> {
        Ok((self.apply(x)?, Point::new(v.p, v.q + self.slope(x.p)? * v.p)))
    }
    fn push_forward_inverse(&self, x: Point, v: Vector) -> Result<(Point, Vector)> {
        Ok((self.apply_inverse(x)?, Point::new(v.p, v.q - self.slope(x.p)? * v.p)))
    }
}

impl Isotopy for TwistMap {
    fn at(&self, s: f64, x: Point) -> Result<Point> {
        Ok(Point::new(x.p, x.q + s * self.profile(x.p)?))
    }
    fn velocity(&self, _s: f64, x: Point) -> Result<Vector> {
        Ok(Point::new(0.0, self.profile(x.p)?))
    }
    fn samples(&self, x: Point) -> Result<(Vec<Point>, f64)> {
        let t = self.profile(x.p)?;
        let n = sample_count(t.abs());
        let pts = (0..=n).map(|k| Point::new(x.p, x.q + t * (k as f64 / n as f64))).collect();
        Ok((pts, t.abs() / n as f64))
    }
}

/// `f⁻¹` for a shared `f`.
#[derive(Clone)]
pub struct InverseOf(pub Arc<dyn Diffeo>);

impl Diffeo for InverseOf {
    fn apply(&self, x: Point) -> Result<Point> {
        self.0.apply_inverse(x)
    }
    fn apply_inverse(&self, x: Point) -> Result<Point> {
        self.0.apply(x)
    }
    fn push_forward(&self, x: Point, v: Vector) -> Result<(Point, Vector)> {
        self.0.push_forward_inverse(x, v)
    }
    fn push_forward_inverse(&self, x: Point, v: Vector) -> Result<(Point, Vector)> {
        self.0.push_forward(x, v)
    }
}

impl Diffeo for Box<dyn Diffeo> {
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
