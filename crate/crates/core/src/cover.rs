//! Lifts of cylinder maps to the universal cover, the plane with
//! coordinates `(p, q̃)` where `q̃` is not reduced modulo the circumference.

use std::sync::Arc;

use rayon::prelude::*;

use crate::cocycle::{cocycle_by_path, GridFunction, GridSpec, PathSettings};
use crate::dynamics::{Diffeo, FlowMap, Isotopy};
use crate::error::{Error, Result};
use crate::geometry::{ManifoldModel, Point, Primitive};

fn circumference(model: &ManifoldModel, op: &'static str) -> Result<f64> {
    model.circumference().ok_or(Error::WrongManifold { op, expected: "cylinder" })
}

/// Displacement `Ψ(f)(x̃) − x̃` of the lift at the base point of `x̃`:
/// the isotopy path of the projected point is unwrapped sample by sample.
fn lifted_displacement(f: &dyn Isotopy, model: &ManifoldModel, c: f64, x: Point) -> Result<Point> {
    let base = model.wrap(x);
    let (samples, max_step) = f.samples(base)?;
    if max_step >= 0.5 * c {
        return Err(Error::TrajectoryGap { jump: max_step, circumference: c });
    }
    let mut total = Point::ORIGIN;
    let mut prev = model.wrap(samples[0]);
    for &y in &samples[1..] {
        let y = model.wrap(y);
        total = total + model.displacement(prev, y);
        prev = y;
    }
    Ok(total)
}

/// `Ψ(f)(x̃)`: the endpoint of the lift, starting at `x̃`, of the isotopy
/// path `s ↦ f_s(π(x̃))`.
pub fn lift(f: &dyn Isotopy, model: &ManifoldModel, x: Point) -> Result<Point> {
    let c = circumference(model, "lift")?;
    Ok(x + lifted_displacement(f, model, c, x)?)
}

/// `Ψ(f)` as a map of the plane.
#[derive(Clone)]
pub struct LiftedMap {
    base: Arc<dyn Isotopy>,
    model: ManifoldModel,
    c: f64,
}

impl LiftedMap {
    pub fn new(base: Arc<dyn Isotopy>, model: ManifoldModel) -> Result<LiftedMap> {
        let c = circumference(&model, "LiftedMap::new")?;
        Ok(LiftedMap { base, model, c })
    }

    pub fn base(&self) -> &Arc<dyn Isotopy> {
        &self.base
    }

    pub fn model(&self) -> &ManifoldModel {
        &self.model
    }

    /// `max |Ψ(f)(x̃ + (0, c)) − Ψ(f)(x̃) − (0, c)|` over the points.
    pub fn deck_residual(&self, points: &[Point]) -> Result<f64> {
        let shift = Point::new(0.0, self.c);
        let mut worst = 0.0f64;
        for &x in points {
            let r = self.apply(x + shift)? - self.apply(x)? - shift;
            worst = worst.max(r.max_abs());
        }
        Ok(worst)
    }

    /// `max |π(Ψ(f)(x̃)) − f(π(x̃))|` over the points, measured on the cylinder.
    pub fn projection_residual(&self, points: &[Point]) -> Result<f64> {
        let mut worst = 0.0f64;
        for &x in points {
            let up = self.model.wrap(self.apply(x)?);
            let down = self.model.wrap(self.base.apply(self.model.wrap(x))?);
            worst = worst.max(self.model.displacement(down, up).max_abs());
        }
        Ok(worst)
    }
}

impl Diffeo for LiftedMap {
    fn apply(&self, x: Point) -> Result<Point> {
        Ok(x + lifted_displacement(self.base.as_ref(), &self.model, self.c, x)?)
    }

    /// Lifts `f⁻¹(π(ỹ))` near `ỹ` and corrects the sheet so that the forward
    /// lift lands on `ỹ`.
    fn apply_inverse(&self, y: Point) -> Result<Point> {
        let base_y = self.model.wrap(y);
        let z = self.base.apply_inverse(base_y)?;
        let image = self.apply(z)?;
        let sheets = ((image.q - base_y.q) / self.c).round();
        Ok(Point::new(z.p, z.q - sheets * self.c + (y.q - base_y.q)))
    }
}

/// `K_α(Ψ(f))` on a window of the cover; the window must span at least two
/// fundamental domains in `q̃`.
pub fn lifted_cocycle(
    f: Arc<dyn Isotopy>,
    alpha: &Primitive,
    model: &ManifoldModel,
    grid: &GridSpec,
    settings: PathSettings,
) -> Result<GridFunction> {
    let c = circumference(model, "lifted_cocycle")?;
    if grid.window.height() < 2.0 * c - 1e-12 {
        return Err(Error::InvalidGrid(format!(
            "lifted window {} must span at least two periods of length {c}",
            grid.window
        )));
    }
    let lifted = LiftedMap::new(f, *model)?;
    let cover = ManifoldModel::plane(grid.window);
    cocycle_by_path(&lifted, alpha, &cover, None, grid, settings)
}

/// Largest `|K(p, q̃ + c) − K(p, q̃)|` over nodes whose shifted partner is
/// also a node; the grid must place a whole number of steps in one period.
pub fn periodicity_residual(k: &GridFunction, c: f64) -> Result<f64> {
    let s = k.spec();
    let steps = c / s.dq();
    let m = steps.round() as usize;
    if (steps - m as f64).abs() > 1e-9 || m == 0 || m >= s.n_q {
        return Err(Error::InvalidGrid(format!("q spacing {} does not divide the period {c}", s.dq())));
    }
    let mut worst = 0.0f64;
    for i in 0..s.n_p {
        for j in 0..s.n_q - m {
            worst = worst.max((k.at(i, j + m) - k.at(i, j)).abs());
        }
    }
    Ok(worst)
}

/// The bound `2·C·L + 2·max|F|` on the oscillation of a lifted cocycle of
/// a Hamiltonian flow, where `C = sup ‖α‖` and `L` is the longest orbit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillationBound {
    pub oscillation: f64,
    pub sup_alpha: f64,
    pub max_length: f64,
    pub max_abs_f: f64,
    pub bound: f64,
}

impl OscillationBound {
    pub fn holds(&self) -> bool {
        self.oscillation <= self.bound
    }
}

/// Evaluates the bound on the nodes of the grid of `k`.
pub fn oscillation_bound(k: &GridFunction, flow: &FlowMap, alpha: &Primitive) -> Result<OscillationBound> {
    let spec = *k.spec();
    let cover = ManifoldModel::plane(spec.window);
    let sup_alpha = alpha.sup_norm(&cover, spec.n_p.max(spec.n_q))?;
    let records = spec
        .nodes()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|x| flow.action(x, alpha))
        .collect::<Result<Vec<_>>>()?;
    let max_length = records.iter().map(|r| r.length).fold(0.0, f64::max);
    let max_abs_f = records.iter().map(|r| r.max_abs_f).fold(0.0, f64::max);
    Ok(OscillationBound {
        oscillation: k.oscillation(),
        sup_alpha,
        max_length,
        max_abs_f,
        bound: 2.0 * sup_alpha * max_length + 2.0 * max_abs_f,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{HamiltonianSpec, Identity, IntegratorSettings, Translation, TwistMap};
    use crate::geometry::Window;
    use std::f64::consts::{PI, TAU};

    fn cyl() -> ManifoldModel {
        ManifoldModel::cylinder(Window::new(-2.0, 2.0, 0.0, TAU).unwrap())
    }

    #[test]
    fn identity_lift_is_identity() {
        let x = Point::new(0.3, 17.0);
        assert_eq!(lift(&Identity, &cyl(), x).unwrap(), x);
    }

    #[test]
    fn twist_lift_follows_the_family() {
        let tw = TwistMap::parse("2*pi*((p+1)/2)^2", true).unwrap();
        let y = lift(&tw, &cyl(), Point::new(0.0, 0.0)).unwrap();
        assert!((y - Point::new(0.0, PI / 2.0)).max_abs() < 1e-12, "{y}");
        // a full turn at p = 1 is kept, not reduced away
        let y = lift(&tw, &cyl(), Point::new(1.0, 0.5)).unwrap();
        assert!((y.q - 0.5 - TAU).abs() < 1e-12, "{y}");
    }

    #[test]
    fn deck_equivariance_and_projection() {
        let tw: Arc<dyn Isotopy> = Arc::new(TwistMap::parse("2*pi*((p+1)/2)^2", true).unwrap());
        let l = LiftedMap::new(tw, cyl()).unwrap();
        let pts: Vec<Point> = (0..20).map(|k| Point::new(-1.5 + 0.15 * k as f64, -7.0 + 1.3 * k as f64)).collect();
        assert!(l.deck_residual(&pts).unwrap() < 1e-12);
        assert!(l.projection_residual(&pts).unwrap() < 1e-12);
        for &x in &pts {
            let back = l.apply_inverse(l.apply(x).unwrap()).unwrap();
            assert!((back - x).max_abs() < 1e-12, "{x} -> {back}");
        }
    }

    #[test]
    fn coarse_samples_are_rejected() {
        struct Jumpy;
        impl Diffeo for Jumpy {
            fn apply(&self, x: Point) -> Result<Point> {
                Ok(x + Point::new(0.0, 4.0))
            }
            fn apply_inverse(&self, x: Point) -> Result<Point> {
                Ok(x - Point::new(0.0, 4.0))
            }
        }
        impl Isotopy for Jumpy {
            fn at(&self, s: f64, x: Point) -> Result<Point> {
                Ok(x + Point::new(0.0, 4.0 * s))
            }
            fn velocity(&self, _s: f64, _x: Point) -> Result<Point> {
                Ok(Point::new(0.0, 4.0))
            }
            fn samples(&self, x: Point) -> Result<(Vec<Point>, f64)> {
                Ok((vec![x, self.apply(x)?], 4.0))
            }
        }
        assert!(matches!(lift(&Jumpy, &cyl(), Point::ORIGIN), Err(Error::TrajectoryGap { .. })));
    }

    #[test]
    fn translation_lift_is_linear_in_q() {
        let w = Window::new(-1.0, 1.0, 0.0, 2.0 * TAU).unwrap();
        let grid = GridSpec::new(w, 9, 17).unwrap();
        let k = lifted_cocycle(Arc::new(Translation::new(0.3, 0.0)), &Primitive::p_dq(), &cyl(), &grid, PathSettings::default()).unwrap();
        let centre = grid.window.center();
        for (i, j) in [(0, 0), (4, 16), (8, 3)] {
            let x = grid.node(i, j);
            assert!((k.at(i, j) - 0.3 * (x.q - centre.q)).abs() < 1e-9);
        }
    }

    #[test]
    fn hamiltonian_lift_is_periodic_and_bounded() {
        let model = cyl();
        let spec = HamiltonianSpec::parse("F", "0.4*max(0, 1 - p^2)^4 * (1 + 0.5*sin(q))").unwrap();
        let flow = Arc::new(FlowMap::new(spec, IntegratorSettings::rk4(1e-2), model).unwrap());
        let w = Window::new(-1.5, 1.5, 0.0, 2.0 * TAU).unwrap();
        let grid = GridSpec::new(w, 25, 49).unwrap();
        let k = lifted_cocycle(flow.clone(), &Primitive::p_dq(), &model, &grid, PathSettings::default()).unwrap();
        let r = periodicity_residual(&k, TAU).unwrap();
        assert!(r < 1e-4, "{r}");
        let b = oscillation_bound(&k, &flow, &Primitive::p_dq()).unwrap();
        assert!(b.holds(), "{b:?}");
    }
}
