use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use super::hamiltonian::{HamiltonianSpec, VectorField};
use super::{Diffeo, Isotopy};
use crate::error::{Error, Result};
use crate::geometry::{ManifoldModel, OneForm, PathPolyline, Point, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Rk4,
    ImplicitMidpoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorSettings {
    pub scheme: Scheme,
    pub h: f64,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        IntegratorSettings { scheme: Scheme::Rk4, h: 1e-3 }
    }
}

impl IntegratorSettings {
    pub fn rk4(h: f64) -> IntegratorSettings {
        IntegratorSettings { scheme: Scheme::Rk4, h }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h.is_finite() && self.h > 0.0 && self.h <= 0.5) {
            return Err(Error::InvalidSettings(format!("step h = {} must lie in (0, 0.5]", self.h)));
        }
        Ok(())
    }

    /// Number of equal steps covering `|dt|`, never exceeding `h` per step.
    fn steps(&self, dt: f64) -> usize {
        ((dt.abs() / self.h) * (1.0 - 1e-12)).ceil().max(1.0) as usize
    }
}

/// A sampled orbit `f_t(x)` in lifted chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<Point>,
    /// Whether some sample left the model window.
    pub escaped: bool,
}

impl Trajectory {
    pub fn end(&self) -> Point {
        *self.points.last().expect("trajectories are never empty")
    }

    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    /// `None` for stationary orbits, which have no segments.
    pub fn as_path(&self) -> Option<PathPolyline> {
        let mut v: Vec<Point> = Vec::with_capacity(self.points.len());
        for &x in &self.points {
            if v.last() != Some(&x) {
                v.push(x);
            }
        }
        PathPolyline::new(v).ok()
    }

    /// Number of turns around the cylinder between the first and last sample.
    pub fn winding(&self, circumference: f64) -> i64 {
        ((self.end().q - self.points[0].q) / circumference).round() as i64
    }
}

/// The terms of the action of an orbit, `∫_{f_t(x)} α + ∫ F_t(f_t(x)) dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionRecord {
    pub end: Point,
    pub alpha_integral: f64,
    pub hamiltonian_integral: f64,
    pub length: f64,
    pub max_abs_f: f64,
    pub escaped: bool,
}

impl ActionRecord {
    pub fn action(&self) -> f64 {
        self.alpha_integral + self.hamiltonian_integral
    }
}

/// The flow of a Hamiltonian, realized by a fixed-step integrator.
#[derive(Debug, Clone)]
pub struct FlowMap {
    spec: HamiltonianSpec,
    field: VectorField,
    settings: IntegratorSettings,
    model: ManifoldModel,
    escape_reported: Arc<AtomicBool>,
}

const MIDPOINT_TOL: f64 = 1e-14;
const MIDPOINT_ITERS: usize = 60;

impl FlowMap {
    /// Validates the settings and, when present, the support claim.
    pub fn new(spec: HamiltonianSpec, settings: IntegratorSettings, model: ManifoldModel) -> Result<FlowMap> {
        settings.validate()?;
        spec.check_support(&model)?;
        let field = VectorField::of(&spec)?;
        Ok(FlowMap { spec, field, settings, model, escape_reported: Arc::default() })
    }

    pub fn spec(&self) -> &HamiltonianSpec {
        &self.spec
    }

    pub fn field(&self) -> &VectorField {
        &self.field
    }

    pub fn settings(&self) -> IntegratorSettings {
        self.settings
    }

    pub fn model(&self) -> &ManifoldModel {
        &self.model
    }

    pub fn duration(&self) -> f64 {
        self.spec.duration
    }

    /// Points that no trajectory can move: outside the claimed support, or
    /// zeros of an autonomous field.
    fn is_stationary(&self, x: Point) -> Result<bool> {
        if let Some(claim) = self.spec.support_claim {
            let probe = match self.model.circumference() {
                Some(c) => Point::new(x.p, x.q + ((claim.q_min - x.q) / c).ceil() * c),
                None => x,
            };
            if !claim.contains(probe) {
                return Ok(true);
            }
        }
        if self.spec.is_autonomous() {
            let v = self.field.at(x, 0.0)?;
            return Ok(v.p == 0.0 && v.q == 0.0);
        }
        Ok(false)
    }

    #[inline]
    fn rk4_step(&self, x: Point, t: f64, h: f64) -> Result<Point> {
        let k1 = self.field.at(x, t)?;
        let k2 = self.field.at(x + k1 * (0.5 * h), t + 0.5 * h)?;
        let k3 = self.field.at(x + k2 * (0.5 * h), t + 0.5 * h)?;
        let k4 = self.field.at(x + k3 * h, t + h)?;
        Ok(x + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0))
    }

    /// Solves `y = x + h X((x + y)/2, t + h/2)` by fixed-point iteration.
    fn midpoint_step(&self, x: Point, t: f64, h: f64) -> Result<(Point, Vector)> {
        let tm = t + 0.5 * h;
        let mut v = self.field.at(x, tm)?;
        for _ in 0..MIDPOINT_ITERS {
            let next = self.field.at(x + v * (0.5 * h), tm)?;
            let change = (next - v).max_abs() * h.abs();
            v = next;
            if change <= MIDPOINT_TOL * (1.0 + x.max_abs()) {
                return Ok((x + v * h, v));
            }
        }
        Err(Error::IntegratorNonconvergence { t })
    }

    #[inline]
    fn step(&self, x: Point, t: f64, h: f64) -> Result<Point> {
        match self.settings.scheme {
            Scheme::Rk4 => self.rk4_step(x, t, h),
            Scheme::ImplicitMidpoint => Ok(self.midpoint_step(x, t, h)?.0),
        }
    }

    /// `x` carried from time `t0` to `t1` (either order).
    pub fn flow(&self, x: Point, t0: f64, t1: f64) -> Result<Point> {
        if t0 == t1 || self.field.is_zero() || self.is_stationary(x)? {
            return Ok(x);
        }
        let n = self.settings.steps(t1 - t0);
        let h = (t1 - t0) / n as f64;
        let mut y = x;
        for i in 0..n {
            y = self.step(y, t0 + i as f64 * h, h)?;
        }
        Ok(y)
    }

    /// Like [`FlowMap::flow`] but records every step.
    pub fn advect(&self, x: Point, t0: f64, t1: f64) -> Result<Trajectory> {
        if t0 == t1 || self.field.is_zero() || self.is_stationary(x)? {
            return Ok(Trajectory { times: vec![t0], points: vec![x], escaped: !self.model.in_window(x) });
        }
        let n = self.settings.steps(t1 - t0);
        let h = (t1 - t0) / n as f64;
        let mut times = Vec::with_capacity(n + 1);
        let mut points = Vec::with_capacity(n + 1);
        let mut y = x;
        let mut escaped = !self.model.in_window(x);
        times.push(t0);
        points.push(y);
        for i in 0..n {
            y = self.step(y, t0 + i as f64 * h, h)?;
            escaped |= !self.model.in_window(y);
            times.push(if i + 1 == n { t1 } else { t0 + (i + 1) as f64 * h });
            points.push(y);
        }
        if escaped && !self.escape_reported.swap(true, Ordering::Relaxed) {
            log::warn!(
                "advect: orbit of {x} under `{}` leaves the window {}; consider enlarging it (reported once per flow)",
                self.spec.name,
                self.model.window
            );
        }
        Ok(Trajectory { times, points, escaped })
    }

    /// Integrates the orbit of `x` over `[0, duration]` together with
    /// `∫ α(ẋ) dt`, `∫ F dt` and the orbit length, all on the step grid.
    pub fn action(&self, x: Point, alpha: &dyn OneForm) -> Result<ActionRecord> {
        let d = self.spec.duration;
        let f0 = self.spec.value(x, 0.0)?;
        if self.field.is_zero() || self.is_stationary(x)? {
            // F may still depend on t along the fixed orbit.
            let hf = if self.spec.is_autonomous() {
                f0 * d
            } else {
                crate::geometry::quadrature::integrate("action", |t| self.spec.value(x, t), 0.0, d, 1e-13)?
            };
            let max_abs_f = if self.spec.is_autonomous() { f0.abs() } else { self.max_abs_on_fixed(x)? };
            return Ok(ActionRecord {
                end: x,
                alpha_integral: 0.0,
                hamiltonian_integral: hf,
                length: 0.0,
                max_abs_f,
                escaped: !self.model.in_window(x),
            });
        }
        let n = self.settings.steps(d);
        let h = d / n as f64;
        let mut y = x;
        let (mut ia, mut ifn, mut len) = (0.0, 0.0, 0.0);
        let mut max_abs_f = f0.abs();
        let mut escaped = !self.model.in_window(x);
        let rates = |y: Point, t: f64| -> Result<(Vector, f64, f64, f64)> {
            let (v, f) = self.field.at_with_value(y, t)?;
            Ok((v, alpha.pair(y, v)?, f, v.norm()))
        };
        for i in 0..n {
            let t = i as f64 * h;
            match self.settings.scheme {
                Scheme::Rk4 => {
                    let (k1, a1, f1, l1) = rates(y, t)?;
                    let (k2, a2, f2, l2) = rates(y + k1 * (0.5 * h), t + 0.5 * h)?;
                    let (k3, a3, f3, l3) = rates(y + k2 * (0.5 * h), t + 0.5 * h)?;
                    let (k4, a4, f4, l4) = rates(y + k3 * h, t + h)?;
                    y = y + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
                    ia += (a1 + 2.0 * (a2 + a3) + a4) * (h / 6.0);
                    ifn += (f1 + 2.0 * (f2 + f3) + f4) * (h / 6.0);
                    len += (l1 + 2.0 * (l2 + l3) + l4) * (h / 6.0);
                    max_abs_f = max_abs_f.max(f2.abs()).max(f4.abs());
                }
                Scheme::ImplicitMidpoint => {
                    let (next, v) = self.midpoint_step(y, t, h)?;
                    let mid = (y + next) * 0.5;
                    ia += alpha.pair(mid, v)? * h;
                    let fm = self.spec.value(mid, t + 0.5 * h)?;
                    ifn += fm * h;
                    len += v.norm() * h;
                    max_abs_f = max_abs_f.max(fm.abs());
                    y = next;
                }
            }
            escaped |= !self.model.in_window(y);
        }
        Ok(ActionRecord { end: y, alpha_integral: ia, hamiltonian_integral: ifn, length: len, max_abs_f, escaped })
    }

    fn max_abs_on_fixed(&self, x: Point) -> Result<f64> {
        let n = 64;
        let mut m = 0.0f64;
        for k in 0..=n {
            m = m.max(self.spec.value(x, self.spec.duration * k as f64 / n as f64)?.abs());
        }
        Ok(m)
    }
}

impl Diffeo for FlowMap {
    fn apply(&self, x: Point) -> Result<Point> {
        self.flow(x, 0.0, self.spec.duration)
    }

    fn apply_inverse(&self, x: Point) -> Result<Point> {
        self.flow(x, self.spec.duration, 0.0)
    }

    fn hamiltonian(&self) -> Option<&FlowMap> {
        Some(self)
    }
}

impl Isotopy for FlowMap {
    fn at(&self, s: f64, x: Point) -> Result<Point> {
        self.flow(x, 0.0, s * self.spec.duration)
    }

    fn velocity(&self, s: f64, x: Point) -> Result<Vector> {
        let t = s * self.spec.duration;
        Ok(self.field.at(self.flow(x, 0.0, t)?, t)? * self.spec.duration)
    }

    fn samples(&self, x: Point) -> Result<(Vec<Point>, f64)> {
        let traj = self.advect(x, 0.0, self.spec.duration)?;
        let max_step = traj.points.windows(2).map(|w| (w[1] - w[0]).max_abs()).fold(0.0, f64::max);
        Ok((traj.points, max_step))
    }
}
