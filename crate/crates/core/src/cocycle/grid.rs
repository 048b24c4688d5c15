use std::fmt::Write as _;

use rayon::prelude::*;

use crate::dynamics::Diffeo;
use crate::error::{Error, Result};
use crate::geometry::{Point, Window};

/// A rectangular lattice of `n_p × n_q` nodes spanning a window, corners included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub window: Window,
    pub n_p: usize,
    pub n_q: usize,
}

impl GridSpec {
    /// At least four nodes per axis.
    pub fn new(window: Window, n_p: usize, n_q: usize) -> Result<GridSpec> {
        if n_p < 4 || n_q < 4 {
            return Err(Error::InvalidGrid(format!("resolution {n_p}x{n_q} needs at least 4 nodes per axis")));
        }
        Ok(GridSpec { window, n_p, n_q })
    }

    pub fn square(window: Window, n: usize) -> Result<GridSpec> {
        GridSpec::new(window, n, n)
    }

    pub fn len(&self) -> usize {
        self.n_p * self.n_q
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dp(&self) -> f64 {
        self.window.width() / (self.n_p - 1) as f64
    }

    pub fn dq(&self) -> f64 {
        self.window.height() / (self.n_q - 1) as f64
    }

    #[inline]
    pub fn p(&self, i: usize) -> f64 {
        if i + 1 == self.n_p {
            self.window.p_max
        } else {
            self.window.p_min + i as f64 * self.dp()
        }
    }

    #[inline]
    pub fn q(&self, j: usize) -> f64 {
        if j + 1 == self.n_q {
            self.window.q_max
        } else {
            self.window.q_min + j as f64 * self.dq()
        }
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> Point {
        Point::new(self.p(i), self.q(j))
    }

    /// Row-major index: `p` varies slowest.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_q + j
    }

    /// The node closest to `x` (clamped to the window).
    pub fn nearest(&self, x: Point) -> (usize, usize) {
        let fi = ((x.p - self.window.p_min) / self.dp()).round();
        let fj = ((x.q - self.window.q_min) / self.dq()).round();
        (fi.clamp(0.0, (self.n_p - 1) as f64) as usize, fj.clamp(0.0, (self.n_q - 1) as f64) as usize)
    }

    pub fn nodes(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.n_p).flat_map(move |i| (0..self.n_q).map(move |j| self.node(i, j)))
    }
}

/// How the additive constant of a sampled function is fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalization {
    /// Zero at the given point.
    PinnedAtBasepoint(Point),
    /// Zero on the boundary collar.
    CompactSupport,
    /// Only defined up to an additive constant.
    ModuloConstants,
}

impl Normalization {
    pub fn name(&self) -> &'static str {
        match self {
            Normalization::PinnedAtBasepoint(_) => "pinned",
            Normalization::CompactSupport => "compact",
            Normalization::ModuloConstants => "modulo-constants",
        }
    }
}

/// A real function sampled on a [`GridSpec`], interpolated by piecewise
/// tensor-product Lagrange polynomials of degree five.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    spec: GridSpec,
    values: Vec<f64>,
    normalization: Normalization,
    /// Period in `q` for cylinder functions whose window spans one period.
    period_q: Option<f64>,
}

impl GridFunction {
    pub fn new(spec: GridSpec, values: Vec<f64>, normalization: Normalization) -> Result<GridFunction> {
        if values.len() != spec.len() {
            return Err(Error::InvalidGrid(format!("{} samples for a grid of {} nodes", values.len(), spec.len())));
        }
        Ok(GridFunction { spec, values, normalization, period_q: None })
    }

    /// Samples `f` at every node, in parallel.
    pub fn from_fn<F>(spec: GridSpec, normalization: Normalization, f: F) -> Result<GridFunction>
    where
        F: Fn(Point) -> Result<f64> + Sync,
    {
        let values = (0..spec.len())
            .into_par_iter()
            .map(|k| f(spec.node(k / spec.n_q, k % spec.n_q)))
            .collect::<Result<Vec<f64>>>()?;
        GridFunction::new(spec, values, normalization)
    }

    /// Marks the function as `c`-periodic in `q`; interpolation then wraps
    /// `q` into the window. Only meaningful when the window spans one period.
    pub fn with_period_q(mut self, c: Option<f64>) -> GridFunction {
        self.period_q = c.filter(|c| (self.spec.window.height() - c).abs() <= 1e-9 * c);
        self
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn with_normalization(mut self, n: Normalization) -> GridFunction {
        self.normalization = n;
        self
    }

    pub fn period_q(&self) -> Option<f64> {
        self.period_q
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.spec.index(i, j)]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `max − min` over the samples.
    pub fn oscillation(&self) -> f64 {
        self.max() - self.min()
    }

    fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::GridMismatch(format!(
                "{}x{} on {} vs {}x{} on {}",
                self.spec.n_p, self.spec.n_q, self.spec.window, other.spec.n_p, other.spec.n_q, other.spec.window
            )));
        }
        Ok(())
    }

    fn combine(&self, other: &GridFunction, op: impl Fn(f64, f64) -> f64) -> Result<GridFunction> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| op(*a, *b)).collect();
        Ok(GridFunction {
            spec: self.spec,
            values,
            normalization: Normalization::ModuloConstants,
            period_q: self.period_q.and(other.period_q),
        })
    }

    /// Difference, normalized modulo constants.
    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.combine(other, |a, b| a - b)
    }

    /// Sum, normalized modulo constants.
    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.combine(other, |a, b| a + b)
    }

    pub fn scale(&self, k: f64) -> GridFunction {
        GridFunction { values: self.values.iter().map(|v| v * k).collect(), ..self.clone() }
    }

    pub fn shift(&self, c: f64) -> GridFunction {
        GridFunction {
            values: self.values.iter().map(|v| v + c).collect(),
            normalization: Normalization::ModuloConstants,
            ..self.clone()
        }
    }

    /// Equality in `C(M)/ℝ`: the difference oscillates by less than `tol`.
    pub fn eq_mod_constants(&self, other: &GridFunction, tol: f64) -> Result<bool> {
        Ok(self.sub(other)?.oscillation() < tol)
    }

    /// Lagrange interpolation on a 6×6 stencil (smaller on coarser grids),
    /// shifted inwards near the edges.
    pub fn interpolate(&self, x: Point) -> Result<f64> {
        let w = self.spec.window;
        let mut q = x.q;
        if let Some(c) = self.period_q {
            q = w.q_min + (q - w.q_min).rem_euclid(c);
        }
        let slack = 1e-9 * (w.width() + w.height());
        if !(x.p >= w.p_min - slack && x.p <= w.p_max + slack && q >= w.q_min - slack && q <= w.q_max + slack) {
            return Err(Error::OutsideWindow { at: x });
        }
        let (i0, wp) = stencil((x.p - w.p_min) / self.spec.dp(), self.spec.n_p);
        let (j0, wq) = stencil((q - w.q_min) / self.spec.dq(), self.spec.n_q);
        let mut s = 0.0;
        for (a, wa) in wp.iter().enumerate() {
            if *wa == 0.0 {
                continue;
            }
            let row = self.spec.index(i0 + a, j0);
            let mut r = 0.0;
            for (b, wb) in wq.iter().enumerate() {
                if *wb != 0.0 {
                    r += wb * self.values[row + b];
                }
            }
            s += wa * r;
        }
        Ok(s)
    }

    /// `K∘g`, sampled at the nodes.
    pub fn compose(&self, g: &dyn Diffeo) -> Result<GridFunction> {
        let out = GridFunction::from_fn(self.spec, Normalization::ModuloConstants, |x| self.interpolate(g.apply(x)?))?;
        Ok(out.with_period_q(self.period_q))
    }

    /// CSV with header `p,q,value`, one node per line in row-major order.
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(64 * self.values.len() + 16);
        s.push_str("p,q,value\n");
        for i in 0..self.spec.n_p {
            for j in 0..self.spec.n_q {
                let x = self.spec.node(i, j);
                let _ = writeln!(s, "{:.16e},{:.16e},{:.16e}", x.p, x.q, self.at(i, j));
            }
        }
        s
    }
}

/// Points per axis of the interpolation stencil.
const STENCIL: usize = 6;

/// First stencil index and the Lagrange weights at fractional index `u`,
/// using up to [`STENCIL`] nodes, shifted inward near the edges.
fn stencil(u: f64, n: usize) -> (usize, [f64; STENCIL]) {
    let m = STENCIL.min(n);
    let cell = (u.floor().max(0.0) as usize).min(n - 2);
    let first = cell.saturating_sub(m / 2 - 1).min(n - m);
    let mut t = u - first as f64;
    if (t - t.round()).abs() < 1e-10 {
        // on a node up to rounding: return the sample itself
        t = t.round();
    }
    let mut w = [0.0; STENCIL];
    for (a, wa) in w.iter_mut().enumerate().take(m) {
        let mut l = 1.0;
        for b in 0..m {
            if b != a {
                l *= (t - b as f64) / (a as f64 - b as f64);
            }
        }
        *wa = l;
    }
    (first, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> GridSpec {
        GridSpec::square(Window::square(1.0).unwrap(), 21).unwrap()
    }

    #[test]
    fn nodes_hit_corners() {
        let s = spec();
        assert_eq!(s.node(0, 0), Point::new(-1.0, -1.0));
        assert_eq!(s.node(20, 20), Point::new(1.0, 1.0));
        assert_eq!(s.nearest(Point::new(0.02, -0.97)), (10, 0));
        assert!(GridSpec::square(Window::square(1.0).unwrap(), 3).is_err());
    }

    #[test]
    fn interpolation_reproduces_quintics() {
        let f = |x: Point| Ok(x.p.powi(5) - 2.0 * x.p * x.q.powi(4) + x.q.powi(3));
        let g = GridFunction::from_fn(spec(), Normalization::ModuloConstants, f).unwrap();
        for k in 0..40 {
            let x = Point::new(-1.0 + 0.05 * k as f64, 0.999 - 0.0499 * k as f64);
            assert!((g.interpolate(x).unwrap() - f(x).unwrap()).abs() < 1e-12, "{x}");
        }
        assert_eq!(g.interpolate(g.spec().node(3, 7)).unwrap(), g.at(3, 7));
        assert!(matches!(g.interpolate(Point::new(1.5, 0.0)), Err(Error::OutsideWindow { .. })));
        let coarse = GridFunction::from_fn(GridSpec::square(Window::square(1.0).unwrap(), 4).unwrap(), Normalization::ModuloConstants, |x| Ok(x.p * x.p * x.q)).unwrap();
        assert!((coarse.interpolate(Point::new(0.3, -0.2)).unwrap() + 0.018).abs() < 1e-14);
    }

    #[test]
    fn oscillation_and_quotient() {
        let a = GridFunction::from_fn(spec(), Normalization::ModuloConstants, |x| Ok(x.p)).unwrap();
        assert!((a.oscillation() - 2.0).abs() < 1e-15);
        let b = a.shift(3.0);
        assert!(a.eq_mod_constants(&b, 1e-12).unwrap());
        let other = GridFunction::from_fn(GridSpec::square(Window::square(1.0).unwrap(), 11).unwrap(), Normalization::ModuloConstants, |x| Ok(x.p)).unwrap();
        assert!(matches!(a.sub(&other), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn csv_layout() {
        let s = GridSpec::new(Window::new(0.0, 1.0, 0.0, 3.0).unwrap(), 4, 4).unwrap();
        let g = GridFunction::from_fn(s, Normalization::ModuloConstants, |x| Ok(x.q)).unwrap();
        let csv = g.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "p,q,value");
        assert_eq!(lines.len(), 17);
        assert_eq!(lines[2], "0.0000000000000000e0,1.0000000000000000e0,1.0000000000000000e0");
        assert!(!csv.contains('\r'));
    }
}
