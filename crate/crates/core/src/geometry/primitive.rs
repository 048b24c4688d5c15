use std::fmt;

use super::forms::OneForm;
use super::{ManifoldModel, Point};
use crate::error::{Error, Result};
use crate::exprlang::{Expr, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrimitiveKind {
    /// `p dq`
    PDq,
    /// `-q dp`
    MinusQDp,
    /// `(p dq - q dp) / 2`
    Symmetric,
    Custom,
}

impl PrimitiveKind {
    pub fn name(self) -> &'static str {
        match self {
            PrimitiveKind::PDq => "p_dq",
            PrimitiveKind::MinusQDp => "minus_q_dp",
            PrimitiveKind::Symmetric => "symmetric",
            PrimitiveKind::Custom => "custom",
        }
    }

    pub fn from_name(name: &str) -> Option<PrimitiveKind> {
        Some(match name {
            "p_dq" => PrimitiveKind::PDq,
            "minus_q_dp" => PrimitiveKind::MinusQDp,
            "symmetric" => PrimitiveKind::Symmetric,
            "custom" => PrimitiveKind::Custom,
            _ => return None,
        })
    }
}

impl fmt::Display for PrimitiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A primitive `α = a_p dp + a_q dq` of `ω = dp∧dq`.
#[derive(Debug, Clone, PartialEq)]
pub struct Primitive {
    kind: PrimitiveKind,
    a_p: Expr,
    a_q: Expr,
}

const CHECK_TOL: f64 = 1e-8;
const CHECK_SAMPLES: usize = 9;

impl Primitive {
    pub fn p_dq() -> Primitive {
        Primitive::builtin(PrimitiveKind::PDq)
    }

    pub fn minus_q_dp() -> Primitive {
        Primitive::builtin(PrimitiveKind::MinusQDp)
    }

    pub fn symmetric() -> Primitive {
        Primitive::builtin(PrimitiveKind::Symmetric)
    }

    /// # Panics
    /// On `PrimitiveKind::Custom`, which has no fixed components.
    pub fn builtin(kind: PrimitiveKind) -> Primitive {
        let (a_p, a_q) = match kind {
            PrimitiveKind::PDq => ("0", "p"),
            PrimitiveKind::MinusQDp => ("-q", "0"),
            PrimitiveKind::Symmetric => ("-q/2", "p/2"),
            PrimitiveKind::Custom => panic!("custom primitives need explicit components"),
        };
        Primitive {
            kind,
            a_p: Expr::parse(a_p).expect("built-in component"),
            a_q: Expr::parse(a_q).expect("built-in component"),
        }
    }

    /// A user primitive; call [`Primitive::validate`] before use.
    pub fn custom(a_p: Expr, a_q: Expr) -> Primitive {
        Primitive { kind: PrimitiveKind::Custom, a_p, a_q }
    }

    pub fn kind(&self) -> PrimitiveKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn a_p(&self) -> &Expr {
        &self.a_p
    }

    pub fn a_q(&self) -> &Expr {
        &self.a_q
    }

    fn invalid(&self, reason: String) -> Error {
        Error::InvalidPrimitive { name: self.name().to_string(), reason }
    }

    /// Checks `dα = ω` on a sample lattice of the window and, on the
    /// cylinder, periodicity of both components in `q`.
    pub fn validate(&self, model: &ManifoldModel) -> Result<()> {
        if self.a_p.depends_on(Var::T) || self.a_q.depends_on(Var::T) {
            return Err(self.invalid("components must not depend on t".into()));
        }
        let d_aq_dp = self.a_q.derivative(Var::P)?;
        let d_ap_dq = self.a_p.derivative(Var::Q)?;
        let w = model.window;
        let n = CHECK_SAMPLES;
        for i in 0..n {
            for j in 0..n {
                let p = w.p_min + w.width() * i as f64 / (n - 1) as f64;
                let q = w.q_min + w.height() * j as f64 / (n - 1) as f64;
                let x = Point::new(p, q);
                let at = |e: &Expr| e.eval(p, q, 0.0).map_err(|s| Error::domain("primitive check", s, x, 0.0));
                let curl = at(&d_aq_dp)? - at(&d_ap_dq)?;
                if (curl - 1.0).abs() > CHECK_TOL {
                    return Err(self.invalid(format!("d(alpha) = {curl} dp^dq at {x}, expected 1")));
                }
                if let Some(c) = model.circumference() {
                    for e in [&self.a_p, &self.a_q] {
                        let shifted = e
                            .eval(p, q + c, 0.0)
                            .map_err(|s| Error::domain("primitive check", s, x, 0.0))?;
                        let gap = (at(e)? - shifted).abs();
                        if gap > CHECK_TOL * (1.0 + shifted.abs()) {
                            return Err(self.invalid(format!(
                                "component `{e}` is not periodic in q at {x} (gap {gap:e})"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// `sup |α|` over an `n × n` sample lattice of the window. This is only
    /// a window-local figure, not a bound on the whole model.
    pub fn sup_norm(&self, model: &ManifoldModel, n: usize) -> Result<f64> {
        let w = model.window;
        let n = n.max(2);
        let mut sup = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let x = Point::new(
                    w.p_min + w.width() * i as f64 / (n - 1) as f64,
                    w.q_min + w.height() * j as f64 / (n - 1) as f64,
                );
                let [a, b] = self.components(x)?;
                sup = sup.max(a.hypot(b));
            }
        }
        Ok(sup)
    }
}

impl OneForm for Primitive {
    #[inline]
    fn components(&self, x: Point) -> Result<[f64; 2]> {
        let a = self.a_p.eval(x.p, x.q, 0.0).map_err(|s| Error::domain("primitive", s, x, 0.0))?;
        let b = self.a_q.eval(x.p, x.q, 0.0).map_err(|s| Error::domain("primitive", s, x, 0.0))?;
        Ok([a, b])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Window;

    fn plane() -> ManifoldModel {
        ManifoldModel::plane(Window::square(2.0).unwrap())
    }

    #[test]
    fn builtins_are_primitives() {
        for kind in [PrimitiveKind::PDq, PrimitiveKind::MinusQDp, PrimitiveKind::Symmetric] {
            Primitive::builtin(kind).validate(&plane()).unwrap();
        }
    }

    #[test]
    fn cylinder_rejects_non_periodic() {
        let cyl = ManifoldModel::cylinder(Window::new(-2.0, 2.0, 0.0, 6.0).unwrap());
        Primitive::p_dq().validate(&cyl).unwrap();
        assert!(Primitive::minus_q_dp().validate(&cyl).is_err());
        let wavy = Primitive::custom(Expr::parse("sin(q)").unwrap(), Expr::parse("p + p*cos(q)").unwrap());
        wavy.validate(&cyl).unwrap();
    }

    #[test]
    fn wrong_curl_is_rejected() {
        let bad = Primitive::custom(Expr::parse("0").unwrap(), Expr::parse("2*p").unwrap());
        assert!(matches!(bad.validate(&plane()), Err(Error::InvalidPrimitive { .. })));
        let timed = Primitive::custom(Expr::parse("t").unwrap(), Expr::parse("p").unwrap());
        assert!(timed.validate(&plane()).is_err());
    }
}
