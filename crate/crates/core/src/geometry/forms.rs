use super::quadrature;
use super::{ManifoldModel, Point, Vector, Window};
use crate::error::{Error, Result};
use crate::exprlang::{Expr, Var};

/// A 1-form on the chart, `a_p dp + a_q dq`.
pub trait OneForm: Sync {
    fn components(&self, x: Point) -> Result<[f64; 2]>;

    #[inline]
    fn pair(&self, x: Point, v: Vector) -> Result<f64> {
        let [a, b] = self.components(x)?;
        Ok(a * v.p + b * v.q)
    }
}

impl<T: OneForm + ?Sized> OneForm for &T {
    fn components(&self, x: Point) -> Result<[f64; 2]> {
        (**self).components(x)
    }

    fn pair(&self, x: Point, v: Vector) -> Result<f64> {
        (**self).pair(x, v)
    }
}

/// A 1-form given by two time-independent expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedForm {
    a_p: Expr,
    a_q: Expr,
}

impl ClosedForm {
    /// Components are taken at face value; see [`ClosedForm::check_closed`].
    pub fn new(a_p: Expr, a_q: Expr) -> ClosedForm {
        ClosedForm { a_p, a_q }
    }

    /// `dg`.
    pub fn exact(g: &Expr) -> Result<ClosedForm> {
        let (gp, gq) = g.grad()?;
        Ok(ClosedForm { a_p: gp, a_q: gq })
    }

    /// `dq`, the generator of `H¹` of the cylinder.
    pub fn dq() -> ClosedForm {
        ClosedForm { a_p: Expr::constant(0.0), a_q: Expr::constant(1.0) }
    }

    pub fn a_p(&self) -> &Expr {
        &self.a_p
    }

    pub fn a_q(&self) -> &Expr {
        &self.a_q
    }

    /// Samples `∂a_q/∂p − ∂a_p/∂q` on an `n × n` lattice of the window.
    pub fn check_closed(&self, window: &Window, n: usize, tol: f64) -> Result<()> {
        let curl = self.a_q.derivative(Var::P)?.sub(&self.a_p.derivative(Var::Q)?);
        let n = n.max(2);
        for i in 0..n {
            for j in 0..n {
                let x = Point::new(
                    window.p_min + window.width() * i as f64 / (n - 1) as f64,
                    window.q_min + window.height() * j as f64 / (n - 1) as f64,
                );
                let r = curl.eval(x.p, x.q, 0.0).map_err(|s| Error::domain("closedness check", s, x, 0.0))?;
                if r.abs() > tol {
                    return Err(Error::NotClosed { residual: r, at: x });
                }
            }
        }
        Ok(())
    }
}

impl OneForm for ClosedForm {
    #[inline]
    fn components(&self, x: Point) -> Result<[f64; 2]> {
        let a = self.a_p.eval(x.p, x.q, 0.0).map_err(|s| Error::domain("closed form", s, x, 0.0))?;
        let b = self.a_q.eval(x.p, x.q, 0.0).map_err(|s| Error::domain("closed form", s, x, 0.0))?;
        Ok([a, b])
    }
}

/// An oriented polyline in chart coordinates.
///
/// On the cylinder the vertices are lifted: a segment between two stored
/// vertices is the straight segment in the `(p, q)` plane, so a loop around
/// the core is represented by vertices whose `q` differ by the circumference.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPolyline {
    vertices: Vec<Point>,
}

impl PathPolyline {
    pub fn new(vertices: Vec<Point>) -> Result<PathPolyline> {
        if vertices.len() < 2 {
            return Err(Error::InvalidGrid("a path needs at least two vertices".into()));
        }
        if let Some(bad) = vertices.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite vertex {bad}")));
        }
        if let Some(w) = vertices.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidGrid(format!("repeated consecutive vertex {}", w[0])));
        }
        Ok(PathPolyline { vertices })
    }

    pub fn segment(a: Point, b: Point) -> Result<PathPolyline> {
        PathPolyline::new(vec![a, b])
    }

    /// Cylinder path from wrapped vertices plus per-segment winding hints:
    /// segment `i` ends at `vertices[i + 1] + (0, c·(k_0 + … + k_i))`.
    pub fn with_winding(vertices: &[Point], windings: &[i64], circumference: f64) -> Result<PathPolyline> {
        if windings.len() + 1 != vertices.len() {
            return Err(Error::InvalidGrid(format!(
                "{} vertices need {} winding hints, got {}",
                vertices.len(),
                vertices.len().saturating_sub(1),
                windings.len()
            )));
        }
        let mut shift = 0i64;
        let mut lifted = Vec::with_capacity(vertices.len());
        lifted.push(vertices.first().copied().unwrap_or_default());
        for (v, k) in vertices[1..].iter().zip(windings) {
            shift += k;
            lifted.push(Point::new(v.p, v.q + circumference * shift as f64));
        }
        PathPolyline::new(lifted)
    }

    /// Closed polygon through `vertices`, returning to the first one.
    pub fn closed(mut vertices: Vec<Point>) -> Result<PathPolyline> {
        if let Some(&first) = vertices.first() {
            vertices.push(first);
        }
        PathPolyline::new(vertices)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn start(&self) -> Point {
        self.vertices[0]
    }

    pub fn end(&self) -> Point {
        self.vertices[self.vertices.len() - 1]
    }

    pub fn reversed(&self) -> PathPolyline {
        let mut v = self.vertices.clone();
        v.reverse();
        PathPolyline { vertices: v }
    }

    pub fn length(&self) -> f64 {
        self.vertices.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }
}

/// `∫ θ` over the straight segment `a → b` to tolerance `tol`.
pub fn integrate_segment(form: &dyn OneForm, a: Point, b: Point, tol: f64) -> Result<f64> {
    let d = b - a;
    quadrature::integrate("integrate_oneform", |s| form.pair(a + d * s, d), 0.0, 1.0, tol)
}

/// `∫_γ θ`, with the tolerance split evenly over the segments.
pub fn integrate_oneform(form: &dyn OneForm, path: &PathPolyline, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidSettings(format!("tolerance {tol} must be positive")));
    }
    let per = tol / (path.vertices.len() - 1) as f64;
    path.vertices
        .windows(2)
        .map(|w| integrate_segment(form, w[0], w[1], per))
        .sum()
}

/// `∬ g dp dq` over the window by nested adaptive quadrature.
pub fn integrate_area<G>(g: G, region: &Window, tol: f64) -> Result<f64>
where
    G: Fn(Point) -> Result<f64>,
{
    if !(tol > 0.0) {
        return Err(Error::InvalidSettings(format!("tolerance {tol} must be positive")));
    }
    // Inner results must be sharper than the outer target or their noise
    // drives the outer refinement.
    let inner = tol / (16.0 * region.width());
    quadrature::integrate(
        "integrate_area",
        |p| quadrature::integrate("integrate_area", |q| g(Point::new(p, q)), region.q_min, region.q_max, inner),
        region.p_min,
        region.p_max,
        tol,
    )
}

/// `∬ g(p, q, t) dp dq` at a fixed time.
pub fn integrate_area_expr(g: &Expr, region: &Window, t: f64, tol: f64) -> Result<f64> {
    integrate_area(
        |x| g.eval(x.p, x.q, t).map_err(|s| Error::domain("integrate_area", s, x, t)),
        region,
        tol,
    )
}

/// `∮ θ` over the core loop `{p = p0}` of the cylinder, traversed in the
/// direction of increasing `q`.
pub fn period_over_core_loop(model: &ManifoldModel, form: &dyn OneForm, p0: f64, tol: f64) -> Result<f64> {
    let c = model.circumference().ok_or(Error::WrongManifold {
        op: "period_over_core_loop",
        expected: "cylinder",
    })?;
    let q0 = model.window.q_min;
    let path = PathPolyline::segment(Point::new(p0, q0), Point::new(p0, q0 + c))?;
    integrate_oneform(form, &path, tol)
}
