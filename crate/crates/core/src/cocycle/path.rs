use rayon::prelude::*;

use super::grid::{GridFunction, GridSpec, Normalization};
use crate::dynamics::Diffeo;
use crate::error::{Error, Result};
use crate::geometry::quadrature::{self, GL3};
use crate::geometry::{integrate_oneform, period_over_core_loop, ManifoldModel, OneForm, PathPolyline, Point, Vector};

/// `θ = f*β − β` for a diffeomorphism `f` and a 1-form `β`.
///
/// Evaluating `θ(x)(v)` costs one push-forward, i.e. two evaluations of
/// `f` for maps without an analytic derivative.
pub struct PullbackDifference<'a> {
    pub f: &'a dyn Diffeo,
    pub form: &'a dyn OneForm,
}

impl OneForm for PullbackDifference<'_> {
    fn components(&self, x: Point) -> Result<[f64; 2]> {
        Ok([self.pair(x, Point::new(1.0, 0.0))?, self.pair(x, Point::new(0.0, 1.0))?])
    }

    #[inline]
    fn pair(&self, x: Point, v: Vector) -> Result<f64> {
        let (y, w) = self.f.push_forward(x, v)?;
        Ok(self.form.pair(y, w)? - self.form.pair(x, v)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSettings {
    /// Tolerance of the adaptive line integrals (basepoint leg, probes).
    pub tol: f64,
    /// Number of probe points for the exactness check; zero disables it.
    pub probes: usize,
}

impl Default for PathSettings {
    fn default() -> Self {
        PathSettings { tol: 1e-9, probes: 4 }
    }
}

/// Gauss–Legendre (3 points) integral of `θ` over the straight segment `a → b`.
fn gl3_segment(theta: &dyn OneForm, a: Point, b: Point) -> Result<f64> {
    let d = b - a;
    quadrature::fixed(&GL3, |s| theta.pair(a + d * s, d), 0.0, 1.0)
}

/// Primitive of `θ = f*β − β` on the grid, zero at `basepoint`.
///
/// Each node is reached by the path that first moves in `p` along the line
/// `q = q(basepoint)` and then in `q`. Both legs are assembled from
/// per-interval 3-point Gauss–Legendre sums; the basepoint is joined to its
/// nearest node by adaptive quadrature.
pub fn primitive_on_grid(
    f: &dyn Diffeo,
    form: &dyn OneForm,
    model: &ManifoldModel,
    basepoint: Point,
    grid: &GridSpec,
    settings: PathSettings,
) -> Result<GridFunction> {
    if !grid.window.contains(basepoint) {
        return Err(Error::OutsideWindow { at: basepoint });
    }
    let theta = PullbackDifference { f, form };
    if settings.probes > 0 {
        check_exactness(&theta, model, basepoint, grid, settings)?;
    }
    let (i0, j0) = grid.nearest(basepoint);
    let anchor = grid.node(i0, j0);
    let lead = if anchor == basepoint {
        0.0
    } else {
        let mid = Point::new(anchor.p, basepoint.q);
        let mut v = vec![basepoint];
        for x in [mid, anchor] {
            if v.last() != Some(&x) {
                v.push(x);
            }
        }
        integrate_oneform(&theta, &PathPolyline::new(v)?, settings.tol)?
    };

    // K along the column q = q_{j0}
    let steps: Vec<f64> = (0..grid.n_p - 1)
        .into_par_iter()
        .map(|i| gl3_segment(&theta, grid.node(i, j0), grid.node(i + 1, j0)))
        .collect::<Result<_>>()?;
    let mut column = vec![0.0; grid.n_p];
    column[i0] = lead;
    for i in i0 + 1..grid.n_p {
        column[i] = column[i - 1] + steps[i - 1];
    }
    for i in (0..i0).rev() {
        column[i] = column[i + 1] - steps[i];
    }

    let rows: Vec<Vec<f64>> = (0..grid.n_p)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let steps = (0..grid.n_q - 1)
                .map(|j| gl3_segment(&theta, grid.node(i, j), grid.node(i, j + 1)))
                .collect::<Result<Vec<f64>>>()?;
            let mut row = vec![0.0; grid.n_q];
            row[j0] = column[i];
            for j in j0 + 1..grid.n_q {
                row[j] = row[j - 1] + steps[j - 1];
            }
            for j in (0..j0).rev() {
                row[j] = row[j + 1] - steps[j];
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let values = rows.into_iter().flatten().collect();
    Ok(GridFunction::new(*grid, values, Normalization::PinnedAtBasepoint(basepoint))?.with_period_q(model.circumference()))
}

/// Rejects forms with periods: on the plane two different axis-aligned
/// paths to each probe must agree, on the cylinder the core loop through
/// each probe must have zero period.
fn check_exactness(
    theta: &dyn OneForm,
    model: &ManifoldModel,
    basepoint: Point,
    grid: &GridSpec,
    settings: PathSettings,
) -> Result<()> {
    let w = grid.window;
    let threshold = 100.0 * settings.tol;
    for k in 0..settings.probes {
        // probes on a fixed interior pattern
        let a = [0.27, 0.73, 0.61, 0.39, 0.17, 0.83][k % 6];
        let b = [0.31, 0.69, 0.23, 0.77, 0.55, 0.45][k % 6];
        let probe = Point::new(w.p_min + a * w.width(), w.q_min + b * w.height());
        let discrepancy = match model.circumference() {
            Some(_) => period_over_core_loop(model, theta, probe.p, settings.tol)?,
            None => {
                let p_first = [basepoint, Point::new(probe.p, basepoint.q), probe];
                let q_first = [basepoint, Point::new(basepoint.p, probe.q), probe];
                let open = |v: [Point; 3]| -> Result<f64> {
                    let mut pts: Vec<Point> = Vec::with_capacity(3);
                    for x in v {
                        if pts.last() != Some(&x) {
                            pts.push(x);
                        }
                    }
                    if pts.len() < 2 {
                        return Ok(0.0);
                    }
                    integrate_oneform(theta, &PathPolyline::new(pts)?, settings.tol)
                };
                open(p_first)? - open(q_first)?
            }
        };
        if discrepancy.abs() > threshold {
            return Err(Error::NonExactForm { discrepancy, at: probe });
        }
    }
    Ok(())
}
