use std::sync::Arc;

use crate::cocycle::{GridSpec, PathSettings};
use crate::cover::lifted_cocycle;
use crate::dynamics::{Isotopy, FD_STEP};
use crate::error::{Error, Result};
use crate::geometry::quadrature::{fixed, gauss_legendre};
use crate::geometry::{ManifoldModel, Point, Primitive, Window};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxSettings {
    /// Fundamental domains spanned by the lifted window (at least 2).
    pub periods: usize,
    /// Grid nodes across `p` for the lifted cocycle.
    pub n_p: usize,
    /// Grid steps per period along `q̃`.
    pub steps_per_period: usize,
    /// Core loop used for the flux; the window centre by default.
    pub p0: Option<f64>,
    /// Slopes below this count as bounded.
    pub bound_tol: f64,
    pub path: PathSettings,
}

impl Default for FluxSettings {
    fn default() -> Self {
        FluxSettings { periods: 2, n_p: 21, steps_per_period: 24, p0: None, bound_tol: 1e-3, path: PathSettings::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxReport {
    /// Area swept by the core loop under the isotopy.
    pub flux_value: f64,
    /// Growth of the lifted cocycle per unit `q̃`.
    pub growth_rate: f64,
    pub bounded: bool,
    /// The lifted window the growth rate was measured on.
    pub window: Window,
    pub bound_tol: f64,
}

/// Gauss–Legendre nodes in `s`; the loop parameter uses the trapezoid rule,
/// which is spectrally accurate for periodic integrands.
const S_NODES: usize = 16;
const U_NODES: usize = 64;

/// `∫₀¹ ∮ ω(∂_s f_s(γ), ∂_u f_s(γ)) du ds` over the core loop `γ` at `p0`.
fn swept_area(f: &dyn Isotopy, c: f64, p0: f64, q0: f64) -> Result<f64> {
    let rule = gauss_legendre(S_NODES);
    let du = 1.0 / U_NODES as f64;
    fixed(
        &rule,
        |s| {
            let mut sum = 0.0;
            for k in 0..U_NODES {
                let x = Point::new(p0, q0 + c * k as f64 * du);
                let v = f.velocity(s, x)?;
                let h = Point::new(0.0, FD_STEP);
                let tangent = (f.at(s, x + h)? - f.at(s, x - h)?) * (c / (2.0 * FD_STEP));
                sum += v.wedge(tangent);
            }
            Ok(sum * du)
        },
        0.0,
        1.0,
    )
}

/// Flux of `f` through the core loop and the growth of `K_α(Ψ(f))` along
/// the cover; `bounded` compares the growth with `bound_tol` on the
/// window reported back.
///
/// The growth rate is the least-squares slope of the cocycle's means over
/// successive fundamental domains, which vanishes for periodic functions
/// and recovers `c` for `c·q̃ + const`.
pub fn flux_compare(f: Arc<dyn Isotopy>, model: &ManifoldModel, alpha: &Primitive, settings: FluxSettings) -> Result<FluxReport> {
    let c = model.circumference().ok_or(Error::WrongManifold { op: "flux_compare", expected: "cylinder" })?;
    if settings.periods < 2 || settings.steps_per_period < 2 {
        return Err(Error::InvalidSettings("flux_compare needs at least 2 periods and 2 steps per period".into()));
    }
    let w = model.window;
    let p0 = settings.p0.unwrap_or_else(|| w.center().p);
    let flux_value = swept_area(f.as_ref(), c, p0, w.q_min)?;

    let lifted = Window::new(w.p_min, w.p_max, w.q_min, w.q_min + settings.periods as f64 * c)?;
    let m = settings.steps_per_period;
    let grid = GridSpec::new(lifted, settings.n_p, settings.periods * m + 1)?;
    let k = lifted_cocycle(f, alpha, model, &grid, settings.path)?;
    let means: Vec<f64> = (0..settings.periods)
        .map(|period| {
            let mut s = 0.0;
            for i in 0..grid.n_p {
                for j in period * m..(period + 1) * m {
                    s += k.at(i, j);
                }
            }
            s / (grid.n_p * m) as f64
        })
        .collect();
    let n = means.len() as f64;
    let x_mean = (n - 1.0) / 2.0 * c;
    let y_mean = means.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (idx, y) in means.iter().enumerate() {
        let dx = idx as f64 * c - x_mean;
        sxy += dx * (y - y_mean);
        sxx += dx * dx;
    }
    let growth_rate = sxy / sxx;
    Ok(FluxReport {
        flux_value,
        growth_rate,
        bounded: growth_rate.abs() < settings.bound_tol,
        window: lifted,
        bound_tol: settings.bound_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{FlowMap, HamiltonianSpec, Identity, IntegratorSettings, Translation};
    use crate::Expr;
    use std::f64::consts::TAU;

    fn cyl() -> ManifoldModel {
        ManifoldModel::cylinder(Window::new(-1.5, 1.5, 0.0, TAU).unwrap())
    }

    #[test]
    fn translation_has_flux_and_grows() {
        let r = flux_compare(Arc::new(Translation::new(0.3, 0.0)), &cyl(), &Primitive::p_dq(), FluxSettings::default()).unwrap();
        assert!((r.flux_value - 0.6 * std::f64::consts::PI).abs() < 1e-9, "{r:?}");
        assert!((r.growth_rate - 0.3).abs() < 1e-6 && !r.bounded);
        // a primitive changed by d(sin q) gives the same slope
        let custom = Primitive::custom(Expr::parse("0").unwrap(), Expr::parse("p + cos(q)").unwrap());
        let s = flux_compare(Arc::new(Translation::new(0.3, 0.0)), &cyl(), &custom, FluxSettings::default()).unwrap();
        assert!((s.growth_rate - r.growth_rate).abs() < 1e-6);
    }

    #[test]
    fn identity_and_hamiltonian_flows_are_bounded() {
        let r = flux_compare(Arc::new(Identity), &cyl(), &Primitive::p_dq(), FluxSettings::default()).unwrap();
        assert!(r.flux_value == 0.0 && r.growth_rate.abs() < 1e-15 && r.bounded);
        let spec = HamiltonianSpec::parse("F", "0.5*max(0, 1 - p^2)^4 * (1 + 0.3*cos(q))").unwrap();
        let flow = FlowMap::new(spec, IntegratorSettings::rk4(1e-2), cyl()).unwrap();
        let r = flux_compare(Arc::new(flow), &cyl(), &Primitive::p_dq(), FluxSettings::default()).unwrap();
        assert!(r.flux_value.abs() < 1e-6 && r.bounded, "{r:?}");
    }
}
