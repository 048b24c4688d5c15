//! Exact symplectic models: the plane and the cylinder `T*S¹`, both with
//! `ω = dp∧dq` in the chart `(p, q)`.
//!
//! Cylinder points are stored in lifted chart coordinates: `q` is a real
//! number and two points are the same point of the cylinder when their
//! `q` differ by a multiple of the circumference. Maps on the cylinder are
//! evaluated on lifted coordinates, which keeps finite differences and
//! line integrals free of wrap-around jumps.

mod forms;
mod primitive;
pub mod quadrature;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

pub use forms::{
    integrate_area, integrate_area_expr, integrate_oneform, integrate_segment,
    period_over_core_loop, ClosedForm, OneForm, PathPolyline,
};
pub use primitive::{Primitive, PrimitiveKind};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub p: f64,
    pub q: f64,
}

/// Tangent vectors share the representation of points.
pub type Vector = Point;

impl Point {
    pub const ORIGIN: Point = Point { p: 0.0, q: 0.0 };

    pub const fn new(p: f64, q: f64) -> Point {
        Point { p, q }
    }

    pub fn norm(self) -> f64 {
        self.p.hypot(self.q)
    }

    pub fn norm_squared(self) -> f64 {
        self.p * self.p + self.q * self.q
    }

    pub fn dot(self, other: Point) -> f64 {
        self.p * other.p + self.q * other.q
    }

    /// `ω(self, other)` for `ω = dp∧dq`.
    pub fn wedge(self, other: Point) -> f64 {
        self.p * other.q - self.q * other.p
    }

    pub fn max_abs(self) -> f64 {
        self.p.abs().max(self.q.abs())
    }

    pub fn is_finite(self) -> bool {
        self.p.is_finite() && self.q.is_finite()
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.p, self.q)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.p + o.p, self.q + o.q)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.p - o.p, self.q - o.q)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.p * k, self.q * k)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.p, -self.q)
    }
}

/// Axis-aligned rectangle `[p_min, p_max] × [q_min, q_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
}

impl Window {
    pub fn new(p_min: f64, p_max: f64, q_min: f64, q_max: f64) -> Result<Window> {
        let all_finite = [p_min, p_max, q_min, q_max].iter().all(|x| x.is_finite());
        if !all_finite {
            return Err(Error::InvalidWindow("bounds must be finite".into()));
        }
        if !(p_max > p_min && q_max > q_min) {
            return Err(Error::InvalidWindow(format!(
                "[{p_min}, {p_max}] x [{q_min}, {q_max}] has no area"
            )));
        }
        Ok(Window { p_min, p_max, q_min, q_max })
    }

    /// `[-r, r]²`.
    pub fn square(r: f64) -> Result<Window> {
        Window::new(-r, r, -r, r)
    }

    pub fn width(&self) -> f64 {
        self.p_max - self.p_min
    }

    pub fn height(&self) -> f64 {
        self.q_max - self.q_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point {
        Point::new(0.5 * (self.p_min + self.p_max), 0.5 * (self.q_min + self.q_max))
    }

    pub fn contains(&self, x: Point) -> bool {
        x.p >= self.p_min && x.p <= self.p_max && x.q >= self.q_min && x.q <= self.q_max
    }

    pub fn contains_window(&self, other: &Window) -> bool {
        other.p_min >= self.p_min
            && other.p_max <= self.p_max
            && other.q_min >= self.q_min
            && other.q_max <= self.q_max
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}] x [{}, {}]", self.p_min, self.p_max, self.q_min, self.q_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ManifoldKind {
    Plane,
    Cylinder { circumference: f64 },
}

/// A chart-level model together with the window of computational interest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifoldModel {
    pub kind: ManifoldKind,
    pub window: Window,
}

impl ManifoldModel {
    pub fn plane(window: Window) -> ManifoldModel {
        ManifoldModel { kind: ManifoldKind::Plane, window }
    }

    /// Cylinder of circumference `2π`.
    pub fn cylinder(window: Window) -> ManifoldModel {
        ManifoldModel {
            kind: ManifoldKind::Cylinder { circumference: std::f64::consts::TAU },
            window,
        }
    }

    pub fn cylinder_with(circumference: f64, window: Window) -> Result<ManifoldModel> {
        if !(circumference.is_finite() && circumference > 0.0) {
            return Err(Error::InvalidWindow(format!("circumference {circumference} must be positive")));
        }
        Ok(ManifoldModel { kind: ManifoldKind::Cylinder { circumference }, window })
    }

    pub fn circumference(&self) -> Option<f64> {
        match self.kind {
            ManifoldKind::Plane => None,
            ManifoldKind::Cylinder { circumference } => Some(circumference),
        }
    }

    pub fn is_cylinder(&self) -> bool {
        self.circumference().is_some()
    }

    /// Canonical representative with `q` in `[q_min, q_min + c)` on the cylinder.
    pub fn wrap(&self, x: Point) -> Point {
        match self.circumference() {
            None => x,
            Some(c) => {
                let q0 = self.window.q_min;
                Point::new(x.p, q0 + (x.q - q0).rem_euclid(c))
            }
        }
    }

    /// `to - from`, with the `q` component reduced to `[-c/2, c/2)` on the cylinder.
    pub fn displacement(&self, from: Point, to: Point) -> Vector {
        let d = to - from;
        match self.circumference() {
            None => d,
            Some(c) => Point::new(d.p, (d.q + 0.5 * c).rem_euclid(c) - 0.5 * c),
        }
    }

    /// Whether `x` lies in the window; on the cylinder only `p` is checked.
    pub fn in_window(&self, x: Point) -> bool {
        match self.kind {
            ManifoldKind::Plane => self.window.contains(x),
            ManifoldKind::Cylinder { .. } => x.p >= self.window.p_min && x.p <= self.window.p_max,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn windows_need_area() {
        assert!(Window::new(0.0, 1.0, 0.0, 1.0).is_ok());
        assert!(Window::new(1.0, 1.0, 0.0, 1.0).is_err());
        assert!(Window::new(0.0, 1.0, 2.0, 1.0).is_err());
        assert!(Window::new(0.0, f64::INFINITY, 0.0, 1.0).is_err());
    }

    #[test]
    fn cylinder_wrapping() {
        let m = ManifoldModel::cylinder(Window::new(-2.0, 2.0, 0.0, TAU).unwrap());
        let x = m.wrap(Point::new(0.5, 3.0 * TAU + 1.0));
        assert!((x.q - 1.0).abs() < 1e-12);
        assert!((m.wrap(Point::new(0.0, -0.5)).q - (TAU - 0.5)).abs() < 1e-12);
        let d = m.displacement(Point::new(0.0, 0.1), Point::new(0.0, TAU - 0.1));
        assert!((d.q + 0.2).abs() < 1e-12);
        let d = m.displacement(Point::new(0.0, 0.0), Point::new(1.0, 5.0 * PI));
        assert!((d.q + PI).abs() < 1e-12 && d.p == 1.0);
    }

    #[test]
    fn wedge_is_dp_dq() {
        assert_eq!(Point::new(1.0, 0.0).wedge(Point::new(0.0, 1.0)), 1.0);
        assert_eq!(Point::new(0.0, 1.0).wedge(Point::new(1.0, 0.0)), -1.0);
    }
}
