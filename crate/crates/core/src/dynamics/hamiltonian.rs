use crate::error::{Error, Result};
use crate::exprlang::{Expr, ExprSet, Var};
use crate::geometry::{ManifoldModel, Point, Vector, Window};

/// Largest `|F|` tolerated outside a claimed support.
pub const SUPPORT_TOL: f64 = 1e-12;

/// A time-dependent Hamiltonian `F(p, q, t)` on `[0, duration]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSpec {
    pub name: String,
    pub f: Expr,
    pub duration: f64,
    pub support_claim: Option<Window>,
}

impl HamiltonianSpec {
    pub fn new(name: impl Into<String>, f: Expr) -> HamiltonianSpec {
        HamiltonianSpec { name: name.into(), f, duration: 1.0, support_claim: None }
    }

    pub fn parse(name: impl Into<String>, src: &str) -> Result<HamiltonianSpec> {
        Ok(HamiltonianSpec::new(name, Expr::parse(src)?))
    }

    pub fn with_duration(mut self, duration: f64) -> Result<HamiltonianSpec> {
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::InvalidSettings(format!("duration {duration} must be positive")));
        }
        self.duration = duration;
        Ok(self)
    }

    pub fn with_support(mut self, claim: Window) -> HamiltonianSpec {
        self.support_claim = Some(claim);
        self
    }

    pub fn is_autonomous(&self) -> bool {
        !self.f.depends_on(Var::T)
    }

    #[inline]
    pub fn value(&self, x: Point, t: f64) -> Result<f64> {
        self.f.eval(x.p, x.q, t).map_err(|s| Error::domain("hamiltonian", s, x, t))
    }

    /// Samples the part of the model window outside the claimed support at
    /// several times and rejects the claim if `|F| ≥ 1e-12` anywhere.
    pub fn check_support(&self, model: &ManifoldModel) -> Result<()> {
        let Some(claim) = self.support_claim else { return Ok(()) };
        let w = model.window;
        let n = 41;
        let times = 5;
        let in_claim = |x: Point| {
            if claim.contains(x) {
                return true;
            }
            match model.circumference() {
                Some(c) => {
                    let k = ((claim.q_min - x.q) / c).ceil();
                    claim.contains(Point::new(x.p, x.q + k * c))
                }
                None => false,
            }
        };
        let probe = |x: Point| -> Result<()> {
            if in_claim(x) {
                return Ok(());
            }
            for k in 0..times {
                let t = self.duration * k as f64 / (times - 1) as f64;
                let v = self.value(x, t)?;
                if v.abs() >= SUPPORT_TOL {
                    return Err(Error::SupportViolation { value: v.abs(), at: x });
                }
            }
            Ok(())
        };
        for i in 0..n {
            for j in 0..n {
                probe(Point::new(
                    w.p_min + w.width() * i as f64 / (n - 1) as f64,
                    w.q_min + w.height() * j as f64 / (n - 1) as f64,
                ))?;
            }
        }
        // a thin collar just outside the claim
        let eps = 1e-3 * claim.width().min(claim.height());
        for k in 0..n {
            let s = k as f64 / (n - 1) as f64;
            let p = claim.p_min + s * claim.width();
            let q = claim.q_min + s * claim.height();
            for x in [
                Point::new(p, claim.q_min - eps),
                Point::new(p, claim.q_max + eps),
                Point::new(claim.p_min - eps, q),
                Point::new(claim.p_max + eps, q),
            ] {
                if model.in_window(x) {
                    probe(x)?;
                }
            }
        }
        Ok(())
    }
}

/// `X_F = (∂F/∂q, −∂F/∂p)`, so that `ι_X ω = dF` for `ω = dp∧dq`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    dfdp: Expr,
    dfdq: Expr,
    gradient: ExprSet,
    with_value: ExprSet,
}

impl VectorField {
    pub fn of(spec: &HamiltonianSpec) -> Result<VectorField> {
        let (dfdp, dfdq) = spec.f.grad()?;
        let gradient = ExprSet::new(&[&dfdq, &dfdp]);
        let with_value = ExprSet::new(&[&dfdq, &dfdp, &spec.f]);
        Ok(VectorField { dfdp, dfdq, gradient, with_value })
    }

    #[inline]
    pub fn at(&self, x: Point, t: f64) -> Result<Vector> {
        let mut g = [0.0; 2];
        self.gradient.eval_into(x.p, x.q, t, &mut g).map_err(|s| Error::domain("vector_field", s, x, t))?;
        Ok(Point::new(g[0], -g[1]))
    }

    /// `X_F(x, t)` together with `F(x, t)`.
    #[inline]
    pub fn at_with_value(&self, x: Point, t: f64) -> Result<(Vector, f64)> {
        let mut g = [0.0; 3];
        self.with_value.eval_into(x.p, x.q, t, &mut g).map_err(|s| Error::domain("vector_field", s, x, t))?;
        Ok((Point::new(g[0], -g[1]), g[2]))
    }

    /// The component expressions `(ṗ, q̇)`.
    pub fn components(&self) -> (Expr, Expr) {
        (self.dfdq.clone(), self.dfdp.neg())
    }

    pub fn is_zero(&self) -> bool {
        self.dfdp.is_zero() && self.dfdq.is_zero()
    }
}
