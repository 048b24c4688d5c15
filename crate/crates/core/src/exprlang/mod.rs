//! Scalar-field expressions in the variables `p`, `q` and `t`.
//!
//! Expressions are the only way to hand functions to the library:
//! Hamiltonians, twist profiles and primitive components are all parsed
//! from text. An [`Expr`] keeps its syntax tree next to a compiled postfix
//! program; [`Expr::eval`] runs the program, [`Expr::eval_tree`] walks the
//! tree and serves as a reference.
//!
//! Evaluation is total on its domain. Division by zero, square roots and
//! fractional powers of negative numbers, and non-finite results are
//! reported as [`EvalError`]s rather than propagated as NaN.

mod ast;
mod deriv;
mod fused;
mod parser;
mod program;

use std::fmt;
use std::str::FromStr;

pub use ast::{BinOp, Func, Node, Var};
pub use fused::ExprSet;
pub use program::Program;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: expected {}, found {found}", expected.join(" or "))]
    Syntax { offset: usize, expected: Vec<String>, found: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("`{name}` at byte {offset} takes {expected} argument(s), got {found}")]
    Arity { name: String, offset: usize, expected: usize, found: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::Arity { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("square root of a negative number")]
    NegativeSqrt,
    #[error("fractional power of a negative number")]
    NegativeBase,
    #[error("non-finite result")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiffError {
    #[error("cannot differentiate `{expr}`: exponent depends on the variable and the base is not a positive constant")]
    VariableExponent { expr: String },
}

/// A parsed expression together with its compiled form.
#[derive(Debug, Clone)]
pub struct Expr {
    node: Node,
    program: Program,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.node == other.node
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ParseError> {
        parser::parse_node(src).map(Expr::from_node)
    }

    pub fn from_node(node: Node) -> Expr {
        let program = Program::compile(&node);
        Expr { node, program }
    }

    pub fn constant(x: f64) -> Expr {
        Expr::from_node(Node::Num(x))
    }

    pub fn node(&self) -> &Node {
        &self.node
    }

    #[inline]
    pub fn eval(&self, p: f64, q: f64, t: f64) -> Result<f64, EvalError> {
        self.program.eval([p, q, t])
    }

    pub fn eval_tree(&self, p: f64, q: f64, t: f64) -> Result<f64, EvalError> {
        program::eval_tree(&self.node, [p, q, t])
    }

    pub fn depends_on(&self, v: Var) -> bool {
        self.node.depends_on(v)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.node, Node::Num(x) if x == 0.0)
    }

    pub fn derivative(&self, v: Var) -> Result<Expr, DiffError> {
        deriv::derivative(&self.node, v).map(Expr::from_node)
    }

    /// `(∂e/∂p, ∂e/∂q)`.
    pub fn grad(&self) -> Result<(Expr, Expr), DiffError> {
        Ok((self.derivative(Var::P)?, self.derivative(Var::Q)?))
    }

    pub fn neg(&self) -> Expr {
        Expr::from_node(deriv::neg(self.node.clone()))
    }

    pub fn sub(&self, other: &Expr) -> Expr {
        Expr::from_node(deriv::sub(self.node.clone(), other.node.clone()))
    }

    pub fn add(&self, other: &Expr) -> Expr {
        Expr::from_node(deriv::add(self.node.clone(), other.node.clone()))
    }

    pub fn scale(&self, k: f64) -> Expr {
        Expr::from_node(deriv::mul(Node::Num(k), self.node.clone()))
    }

    pub fn div(&self, other: &Expr) -> Expr {
        Expr::from_node(deriv::div(self.node.clone(), other.node.clone()))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.node.fmt(f)
    }
}

impl FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}

/// Shorthand for [`Expr::parse`].
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    Expr::parse(src)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ev(src: &str, p: f64, q: f64, t: f64) -> f64 {
        parse(src).unwrap().eval(p, q, t).unwrap()
    }

    #[test]
    fn examples_from_the_contract() {
        assert_eq!(ev("p", 0.25, 9.0, 1.0), 0.25);
        assert_eq!(ev("(p^2+q^2)/2", 1.0, 1.0, 0.0), 1.0);
        assert_eq!(ev("exp(-(p^2+q^2))", 0.0, 0.0, 0.0), 1.0);
        assert_eq!(ev("pi", 0.0, 0.0, 0.0), 3.141592653589793);
        assert_eq!(ev("sin(t)*p", 2.0, 0.0, 0.0), 0.0);
        assert_eq!(ev("p*q - t", 3.0, 4.0, 5.0), 7.0);
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("-p^2", 3.0, 0.0, 0.0), -9.0);
        assert_eq!(ev("2^3^2", 0.0, 0.0, 0.0), 512.0);
        assert_eq!(ev("p^-1", 4.0, 0.0, 0.0), 0.25);
        assert_eq!(ev("1 - 2 - 3", 0.0, 0.0, 0.0), -4.0);
        assert_eq!(ev("8 / 4 / 2", 0.0, 0.0, 0.0), 1.0);
        assert_eq!(ev("2 * -q", 0.0, 3.0, 0.0), -6.0);
        assert_eq!(ev("  min( p ,q )+max(p,q)", 1.0, 5.0, 0.0), 6.0);
        assert_eq!(ev("1.5e1 + .5", 0.0, 0.0, 0.0), 15.5);
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        let err = parse("p + * q").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { offset: 4, .. }), "{err:?}");
        let err = parse("(p + q").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { offset: 6, .. }), "{err:?}");
        let err = parse("p q").unwrap_err();
        assert_eq!(err.offset(), 2);
        let err = parse("p # q").unwrap_err();
        assert_eq!(err.offset(), 2);
        assert!(matches!(parse("sin p"), Err(ParseError::Syntax { offset: 4, .. })));
        assert!(matches!(parse("min(p)"), Err(ParseError::Arity { .. })));
        assert!(matches!(parse("1e999"), Err(ParseError::Syntax { .. })));
        assert!(parse("").is_err());
    }

    #[test]
    fn unknown_identifiers_are_rejected() {
        match parse("2*x + log(p)") {
            Err(ParseError::UnknownIdentifier { name, offset }) => {
                assert_eq!(name, "x");
                assert_eq!(offset, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
        // derivative helpers are not part of the user grammar
        assert!(matches!(parse("sign(p)"), Err(ParseError::UnknownIdentifier { .. })));
        assert!(matches!(parse("step(p)"), Err(ParseError::UnknownIdentifier { .. })));
    }

    #[test]
    fn domain_errors_are_not_nan() {
        let e = parse("1/p").unwrap();
        assert_eq!(e.eval(0.0, 0.0, 0.0), Err(EvalError::DivisionByZero));
        assert_eq!(e.eval_tree(0.0, 0.0, 0.0), Err(EvalError::DivisionByZero));
        let e = parse("sqrt(p)").unwrap();
        assert_eq!(e.eval(-1.0, 0.0, 0.0), Err(EvalError::NegativeSqrt));
        let e = parse("p^0.5").unwrap();
        assert_eq!(e.eval(-4.0, 0.0, 0.0), Err(EvalError::NegativeBase));
        assert_eq!(e.eval(4.0, 0.0, 0.0), Ok(2.0));
        let e = parse("p^-2").unwrap();
        assert_eq!(e.eval(0.0, 0.0, 0.0), Err(EvalError::DivisionByZero));
        let e = parse("exp(p)").unwrap();
        assert_eq!(e.eval(1000.0, 0.0, 0.0), Err(EvalError::NonFinite));
        // integral powers of negative numbers are fine
        assert_eq!(ev("p^3", -2.0, 0.0, 0.0), -8.0);
    }

    #[test]
    fn gradients() {
        let (gp, gq) = parse("(p^2+q^2)/2").unwrap().grad().unwrap();
        for &(p, q) in &[(1.0, 2.0), (-0.3, 0.7), (5.0, -4.0)] {
            assert_eq!(gp.eval(p, q, 0.0).unwrap(), p);
            assert_eq!(gq.eval(p, q, 0.0).unwrap(), q);
        }
        let (gp, gq) = parse("3.5").unwrap().grad().unwrap();
        assert!(gp.is_zero() && gq.is_zero());
        let (gp, gq) = parse("p*q").unwrap().grad().unwrap();
        assert_eq!(gp.eval(2.0, 3.0, 0.0).unwrap(), 3.0);
        assert_eq!(gq.eval(2.0, 3.0, 0.0).unwrap(), 2.0);
    }

    #[test]
    fn kink_conventions() {
        let d = parse("abs(p)").unwrap().derivative(Var::P).unwrap();
        assert_eq!(d.eval(0.0, 0.0, 0.0).unwrap(), 0.0);
        assert_eq!(d.eval(-2.0, 0.0, 0.0).unwrap(), -1.0);
        // ties pick the first argument
        let d = parse("max(p, 2*p)").unwrap().derivative(Var::P).unwrap();
        assert_eq!(d.eval(0.0, 0.0, 0.0).unwrap(), 1.0);
        assert_eq!(d.eval(1.0, 0.0, 0.0).unwrap(), 2.0);
        let d = parse("min(2*p, p)").unwrap().derivative(Var::P).unwrap();
        assert_eq!(d.eval(0.0, 0.0, 0.0).unwrap(), 2.0);
        assert_eq!(d.eval(1.0, 0.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn exponential_base_derivative() {
        let d = parse("2^p").unwrap().derivative(Var::P).unwrap();
        let x: f64 = 1.3;
        assert!((d.eval(x, 0.0, 0.0).unwrap() - 2f64.powf(x) * 2f64.ln()).abs() < 1e-14);
        assert!(matches!(
            parse("p^q").unwrap().derivative(Var::Q),
            Err(DiffError::VariableExponent { .. })
        ));
        // exponent constant with respect to p
        let d = parse("p^q").unwrap().derivative(Var::P).unwrap();
        assert!((d.eval(2.0, 3.0, 0.0).unwrap() - 12.0).abs() < 1e-12);
    }

    #[test]
    fn printing_round_trips() {
        for src in [
            "-p^2",
            "(-p)^2",
            "p - (q - t)",
            "p / (q / 2)",
            "2^3^2",
            "(2^3)^2",
            "-(p + q) * -t",
            "p^-q",
            "max(p, -q) - min(1e-7, t)",
            "pi * sqrt(abs(p)) + tanh(q) / exp(-t)",
        ] {
            let e = parse(src).unwrap();
            let back = parse(&e.to_string()).unwrap();
            for &(p, q, t) in &[(0.7, -1.3, 0.2), (2.0, 0.5, -1.0)] {
                assert_eq!(
                    e.eval(p, q, t).map(f64::to_bits),
                    back.eval(p, q, t).map(f64::to_bits),
                    "{src} printed as {e}"
                );
            }
        }
    }

    #[test]
    fn compiled_matches_tree() {
        let e = parse("max(0, 1 - (p^2 + q^2)/1.44)^5 * (1 - t) + sin(p*q)^3").unwrap();
        for i in 0..50 {
            let p = -2.0 + 0.08 * i as f64;
            let q = 1.5 - 0.06 * i as f64;
            assert_eq!(e.eval(p, q, 0.3).unwrap().to_bits(), e.eval_tree(p, q, 0.3).unwrap().to_bits());
        }
        assert_eq!(parse("2*pi").unwrap().eval(0.0, 0.0, 0.0).unwrap(), 2.0 * PI);
    }

    #[test]
    fn parsing_is_deterministic() {
        let src = "exp(-((p-0.5)^2 + q^2)) * cos(t)";
        assert_eq!(parse(src).unwrap(), parse(src).unwrap());
    }
}
