//! The cocycle `K_α(f)`, a function with `dK_α(f) = f*α − α`, computed
//! either by integrating that form along paths or from the action of the
//! orbits of a generating Hamiltonian.

mod grid;
mod normalize;
mod path;

use rayon::prelude::*;

use crate::dynamics::{Diffeo, FlowMap};
use crate::error::{Error, Result};
use crate::geometry::{period_over_core_loop, ClosedForm, ManifoldModel, OneForm, Point, Primitive};

pub use grid::{GridFunction, GridSpec, Normalization};
pub use normalize::{collar_nodes, normalize_compact, COLLAR_TOL};
pub use path::{primitive_on_grid, PathSettings, PullbackDifference};

/// `K_α(f)` by path integration of `f*α − α`, pinned to zero at the
/// basepoint (the window centre by default).
///
/// The form must be exact on the window; on the cylinder run
/// [`hamiltonian_test`] first. Non-exactness found by the probe check is
/// reported as [`Error::NonExactForm`].
pub fn cocycle_by_path(
    f: &dyn Diffeo,
    alpha: &Primitive,
    model: &ManifoldModel,
    basepoint: Option<Point>,
    grid: &GridSpec,
    settings: PathSettings,
) -> Result<GridFunction> {
    let x0 = basepoint.unwrap_or_else(|| grid.window.center());
    primitive_on_grid(f, alpha, model, x0, grid, settings)
}

/// The action `A(x) = ∫_{f_t(x)} α + ∫ F_t(f_t(x)) dt` at every node.
/// Differences `A(x) − A(y)` equal `K_α(f)(x) − K_α(f)(y)`, so the result
/// is normalized modulo constants.
pub fn cocycle_by_action(flow: &FlowMap, alpha: &Primitive, grid: &GridSpec) -> Result<GridFunction> {
    let k = GridFunction::from_fn(*grid, Normalization::ModuloConstants, |x| Ok(flow.action(x, alpha)?.action()))?;
    Ok(k.with_period_q(flow.model().circumference()))
}

/// `ι(a)(f)`: the primitive of `f*a − a` for a closed 1-form `a`, pinned
/// at the basepoint.
pub fn iota_cocycle(
    a: &ClosedForm,
    f: &dyn Diffeo,
    model: &ManifoldModel,
    basepoint: Option<Point>,
    grid: &GridSpec,
    settings: PathSettings,
) -> Result<GridFunction> {
    a.check_closed(&grid.window, 9, 1e-8)?;
    let x0 = basepoint.unwrap_or_else(|| grid.window.center());
    primitive_on_grid(f, a, model, x0, grid, settings)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianTest {
    pub in_ham_hat: bool,
    /// `∮ (f*α − α)` over the core loop; zero on the plane.
    pub period: f64,
}

/// Exactness of `f*α − α`: on the cylinder its period over the core loop
/// `{p = p0}` (the window centre by default) must vanish within `tol`.
pub fn hamiltonian_test(
    f: &dyn Diffeo,
    alpha: &dyn OneForm,
    model: &ManifoldModel,
    p0: Option<f64>,
    tol: f64,
) -> Result<HamiltonianTest> {
    if !model.is_cylinder() {
        return Ok(HamiltonianTest { in_ham_hat: true, period: 0.0 });
    }
    let p0 = p0.unwrap_or_else(|| model.window.center().p);
    let theta = PullbackDifference { f, form: alpha };
    let period = period_over_core_loop(model, &theta, p0, (0.01 * tol).min(1e-10))?;
    Ok(HamiltonianTest { in_ham_hat: period.abs() < tol, period })
}

/// Largest componentwise gap between sixth-order central differences of
/// `K` and `f*α − α` at interior nodes (every `stride`-th node per axis).
pub fn defining_equation_residual(k: &GridFunction, f: &dyn Diffeo, alpha: &dyn OneForm, stride: usize) -> Result<f64> {
    let s = *k.spec();
    if s.n_p < 7 || s.n_q < 7 {
        return Err(Error::InvalidGrid("finite differences need at least 7 nodes per axis".into()));
    }
    let stride = stride.max(1);
    let theta = PullbackDifference { f, form: alpha };
    let nodes: Vec<(usize, usize)> = (3..s.n_p - 3)
        .step_by(stride)
        .flat_map(|i| (3..s.n_q - 3).step_by(stride).map(move |j| (i, j)))
        .collect();
    let d6 = |g: &dyn Fn(isize) -> f64, h: f64| {
        (45.0 * (g(1) - g(-1)) - 9.0 * (g(2) - g(-2)) + (g(3) - g(-3))) / (60.0 * h)
    };
    let errs = nodes
        .par_iter()
        .map(|&(i, j)| -> Result<f64> {
            let dk_dp = d6(&|m| k.at(i.wrapping_add_signed(m), j), s.dp());
            let dk_dq = d6(&|m| k.at(i, j.wrapping_add_signed(m)), s.dq());
            let [tp, tq] = theta.components(s.node(i, j))?;
            Ok((dk_dp - tp).abs().max((dk_dq - tq).abs()))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(errs.into_iter().fold(0.0, f64::max))
}
