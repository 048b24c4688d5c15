//! Numbers extracted from the cocycle: the Calabi invariant, Polterovich
//! differences between fixed points, oscillation, the boundary jump of a
//! twist, fixed-point search and the flux diagnostic on the cylinder.

mod fixed;
mod flux;

use crate::cocycle::{GridFunction, Normalization, PullbackDifference};
use crate::dynamics::{Diffeo, HamiltonianSpec, TwistMap};
use crate::error::{Error, Result};
use crate::geometry::quadrature;
use crate::geometry::{integrate_area_expr, integrate_segment, ManifoldModel, OneForm, Point, Window};

pub use fixed::{find_fixed_points, FixedPoint, FixedPointReport};
pub use flux::{flux_compare, FluxReport, FluxSettings};

/// Largest `|f(x) − x|` accepted for a fixed point.
pub const FIXED_TOL: f64 = 1e-8;

/// Composite Simpson weights for `n ≥ 4` equispaced nodes; an even node
/// count closes with the 3/8 rule on the last three intervals.
fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; n];
    let simpson_end = if n % 2 == 1 { n - 1 } else { n - 4 };
    for k in (0..simpson_end).step_by(2) {
        w[k] += h / 3.0;
        w[k + 1] += 4.0 * h / 3.0;
        w[k + 2] += h / 3.0;
    }
    if n % 2 == 0 {
        let s = n - 4;
        for (k, c) in [1.0, 3.0, 3.0, 1.0].into_iter().enumerate() {
            w[s + k] += 3.0 * h / 8.0 * c;
        }
    }
    w
}

/// `∬ K dp dq` over the grid window for a compactly normalized `K`.
pub fn calabi(k: &GridFunction) -> Result<f64> {
    if k.normalization() != Normalization::CompactSupport {
        return Err(Error::WrongNormalization { op: "calabi", expected: "compact-support" });
    }
    let s = k.spec();
    let wp = simpson_weights(s.n_p, s.dp());
    let wq = simpson_weights(s.n_q, s.dq());
    let mut total = 0.0;
    for (i, a) in wp.iter().enumerate() {
        let row: f64 = wq.iter().enumerate().map(|(j, b)| b * k.at(i, j)).sum();
        total += a * row;
    }
    Ok(total)
}

/// `2 ∫₀^D ∬ F_t dp dq dt` over the window, by nested adaptive quadrature.
pub fn calabi_from_hamiltonian(spec: &HamiltonianSpec, window: &Window, tol: f64) -> Result<f64> {
    let d = spec.duration;
    let area_tol = tol / (4.0 * d);
    let integral = if spec.is_autonomous() {
        d * integrate_area_expr(&spec.f, window, 0.0, area_tol)?
    } else {
        quadrature::integrate("calabi_from_hamiltonian", |t| integrate_area_expr(&spec.f, window, t, area_tol), 0.0, d, tol / 4.0)?
    };
    Ok(2.0 * integral)
}

/// `|f(x) − x|`, measured on the model.
pub fn fixed_point_residual(f: &dyn Diffeo, model: &ManifoldModel, x: Point) -> Result<f64> {
    Ok(model.displacement(x, f.apply(x)?).norm())
}

fn require_fixed(f: &dyn Diffeo, model: &ManifoldModel, x: Point) -> Result<()> {
    let residual = fixed_point_residual(f, model, x)?;
    if residual < FIXED_TOL {
        Ok(())
    } else {
        Err(Error::NotFixedPoint { residual, at: x })
    }
}

/// `P_{x,y}(f) = K(x) − K(y)` for fixed points `x`, `y` of `f`.
pub fn polterovich(f: &dyn Diffeo, k: &GridFunction, model: &ManifoldModel, x: Point, y: Point) -> Result<f64> {
    require_fixed(f, model, x)?;
    require_fixed(f, model, y)?;
    Ok(k.interpolate(x)? - k.interpolate(y)?)
}

/// `P_{x,y}(f)` without a grid: `∫ (f*α − α)` along the segment from `y`
/// to `x`, which is valid whenever the form is exact on the window.
pub fn polterovich_along_segment(
    f: &dyn Diffeo,
    alpha: &dyn OneForm,
    model: &ManifoldModel,
    x: Point,
    y: Point,
    tol: f64,
) -> Result<f64> {
    require_fixed(f, model, x)?;
    require_fixed(f, model, y)?;
    integrate_segment(&PullbackDifference { f, form: alpha }, y, x, tol)
}

pub fn oscillation(k: &GridFunction) -> f64 {
    k.oscillation()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwistReport {
    /// `K(1, q) − K(−1, q)`, integrated along `p` at fixed `q`.
    pub boundary_difference: f64,
    /// `∫_{−1}^{1} t(p) dp`.
    pub profile_integral: f64,
    /// `[p·t(p)]_{−1}^{1} − ∫ t`, which is `2π − ∫ t` for a profile rising from 0 to 2π.
    pub expected: f64,
    /// Whether the boundary difference vanishes within the tolerance.
    pub compactly_supported: bool,
}

/// Jump of the cocycle of a twist across the band `−1 ≤ p ≤ 1`.
pub fn twist_check(tw: &TwistMap, alpha: &dyn OneForm, model: &ManifoldModel, tol: f64) -> Result<TwistReport> {
    if !model.is_cylinder() {
        return Err(Error::WrongManifold { op: "twist_check", expected: "cylinder" });
    }
    let q = model.window.q_min;
    let quad_tol = (1e-3 * tol).max(1e-14);
    let theta = PullbackDifference { f: tw, form: alpha };
    let boundary_difference = integrate_segment(&theta, Point::new(-1.0, q), Point::new(1.0, q), quad_tol)?;
    let profile_integral = quadrature::integrate("twist_check", |p| tw.profile(p), -1.0, 1.0, quad_tol)?;
    let expected = tw.profile(1.0)? + tw.profile(-1.0)? - profile_integral;
    Ok(TwistReport {
        boundary_difference,
        profile_integral,
        expected,
        compactly_supported: boundary_difference.abs() < tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::{cocycle_by_path, normalize_compact, GridSpec, PathSettings};
    use crate::dynamics::{FlowMap, Identity, IntegratorSettings};
    use crate::geometry::Primitive;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn simpson_is_exact_for_cubics() {
        for n in [5, 6, 9, 10] {
            let h = 1.0 / (n - 1) as f64;
            let w = simpson_weights(n, h);
            let s: f64 = w.iter().enumerate().map(|(k, w)| w * (k as f64 * h).powi(3)).sum();
            assert!((s - 0.25).abs() < 1e-14, "n = {n}: {s}");
        }
    }

    #[test]
    fn calabi_needs_compact_normalization() {
        let spec = GridSpec::square(Window::square(1.0).unwrap(), 9).unwrap();
        let k = GridFunction::from_fn(spec, Normalization::ModuloConstants, |_| Ok(0.0)).unwrap();
        assert!(matches!(calabi(&k), Err(Error::WrongNormalization { .. })));
        let k = k.with_normalization(Normalization::CompactSupport);
        assert_eq!(calabi(&k).unwrap(), 0.0);
    }

    #[test]
    fn calabi_oracle_collapses_time() {
        let w = Window::square(2.0).unwrap();
        let bump = "max(0, 1 - p^2 - q^2)^3";
        // ∬ (1 − r²)³ over the unit disc is π/4
        let f = HamiltonianSpec::parse("F", bump).unwrap();
        let c = calabi_from_hamiltonian(&f, &w, 1e-9).unwrap();
        assert!((c - PI / 2.0).abs() < 1e-8, "{c}");
        let g = HamiltonianSpec::parse("G", &format!("(1 - t) * {bump}")).unwrap();
        let c = calabi_from_hamiltonian(&g, &w, 1e-9).unwrap();
        assert!((c - PI / 4.0).abs() < 1e-8, "{c}");
    }

    #[test]
    fn polterovich_of_a_radial_bump() {
        let model = ManifoldModel::plane(Window::square(2.0).unwrap());
        let flow = FlowMap::new(HamiltonianSpec::parse("F", "max(0, 1 - (p^2 + q^2)/2.25)^4").unwrap(), IntegratorSettings::default(), model).unwrap();
        let (x, y) = (Point::ORIGIN, Point::new(1.8, 1.8));
        let a = Primitive::p_dq();
        let p = polterovich_along_segment(&flow, &a, &model, x, y, 1e-10).unwrap();
        assert!((p - 1.0).abs() < 1e-6, "{p}");
        let err = polterovich_along_segment(&flow, &a, &model, Point::new(0.5, 0.0), y, 1e-10);
        assert!(matches!(err, Err(Error::NotFixedPoint { .. })));
        assert_eq!(polterovich_along_segment(&Identity, &a, &model, x, y, 1e-10).unwrap(), 0.0);
    }

    #[test]
    fn twist_boundary_differences() {
        let cyl = ManifoldModel::cylinder(Window::new(-2.0, 2.0, 0.0, TAU).unwrap());
        let a = Primitive::p_dq();
        let r = twist_check(&TwistMap::parse("2*pi*((p+1)/2)^2", true).unwrap(), &a, &cyl, 1e-6).unwrap();
        assert!((r.boundary_difference - TAU / 3.0).abs() < 1e-9, "{r:?}");
        assert!((r.expected - TAU / 3.0).abs() < 1e-9);
        assert!(!r.compactly_supported);
        let tw = TwistMap::parse("pi*(1 + sin(pi*p/2))", true).unwrap();
        let r = twist_check(&tw, &a, &cyl, 1e-6).unwrap();
        assert!(r.boundary_difference.abs() < 1e-9 && r.compactly_supported, "{r:?}");
        let grid = GridSpec::new(cyl.window, 41, 9).unwrap();
        let k = cocycle_by_path(&tw, &a, &cyl, None, &grid, PathSettings::default()).unwrap();
        assert!(normalize_compact(&k, None, 1e-6).is_ok());
    }
}
