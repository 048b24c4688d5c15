//! Symbolic partial derivatives.
//!
//! Kinks use fixed one-sided conventions: `abs'(0) = 0`, and `min`/`max`
//! follow their first argument on ties. Only trivial identities
//! (`0*x`, `1*x`, `x+0`, `x^1`, constant folding) are simplified.

use super::ast::{BinOp, Func, Node, Var};
use super::DiffError;

fn num(x: f64) -> Node {
    Node::Num(x)
}

fn is_num(n: &Node, v: f64) -> bool {
    matches!(n, Node::Num(x) if *x == v)
}

fn fold(op: BinOp, a: f64, b: f64) -> Option<f64> {
    let r = match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div if b != 0.0 => a / b,
        _ => return None,
    };
    r.is_finite().then_some(r)
}

fn bin(op: BinOp, a: Node, b: Node) -> Node {
    if let (Some(x), Some(y)) = (a.as_num(), b.as_num()) {
        if let Some(r) = fold(op, x, y) {
            return num(r);
        }
    }
    Node::Binary(op, Box::new(a), Box::new(b))
}

pub(super) fn add(a: Node, b: Node) -> Node {
    if is_num(&a, 0.0) {
        b
    } else if is_num(&b, 0.0) {
        a
    } else {
        bin(BinOp::Add, a, b)
    }
}

pub(super) fn sub(a: Node, b: Node) -> Node {
    if is_num(&b, 0.0) {
        a
    } else if is_num(&a, 0.0) {
        neg(b)
    } else {
        bin(BinOp::Sub, a, b)
    }
}

pub(super) fn mul(a: Node, b: Node) -> Node {
    if is_num(&a, 0.0) || is_num(&b, 0.0) {
        num(0.0)
    } else if is_num(&a, 1.0) {
        b
    } else if is_num(&b, 1.0) {
        a
    } else {
        bin(BinOp::Mul, a, b)
    }
}

pub(super) fn div(a: Node, b: Node) -> Node {
    if is_num(&a, 0.0) {
        num(0.0)
    } else if is_num(&b, 1.0) {
        a
    } else {
        bin(BinOp::Div, a, b)
    }
}

pub(super) fn neg(a: Node) -> Node {
    match a {
        Node::Num(x) => num(-x),
        Node::Neg(inner) => *inner,
        other => Node::Neg(Box::new(other)),
    }
}

fn pow(a: Node, b: Node) -> Node {
    if is_num(&b, 1.0) {
        a
    } else if is_num(&b, 0.0) {
        num(1.0)
    } else {
        Node::Binary(BinOp::Pow, Box::new(a), Box::new(b))
    }
}

fn call(f: Func, args: Vec<Node>) -> Node {
    Node::Call(f, args)
}

pub(super) fn derivative(node: &Node, v: Var) -> Result<Node, DiffError> {
    if !node.depends_on(v) {
        return Ok(num(0.0));
    }
    Ok(match node {
        Node::Num(_) => num(0.0),
        Node::Var(w) => num(if *w == v { 1.0 } else { 0.0 }),
        Node::Neg(a) => neg(derivative(a, v)?),
        Node::Binary(op, a, b) => {
            let (a, b) = (a.as_ref(), b.as_ref());
            match op {
                BinOp::Add => add(derivative(a, v)?, derivative(b, v)?),
                BinOp::Sub => sub(derivative(a, v)?, derivative(b, v)?),
                BinOp::Mul => add(
                    mul(derivative(a, v)?, b.clone()),
                    mul(a.clone(), derivative(b, v)?),
                ),
                BinOp::Div => {
                    if b.depends_on(v) {
                        div(
                            sub(
                                mul(derivative(a, v)?, b.clone()),
                                mul(a.clone(), derivative(b, v)?),
                            ),
                            pow(b.clone(), num(2.0)),
                        )
                    } else {
                        div(derivative(a, v)?, b.clone())
                    }
                }
                BinOp::Pow => {
                    if !b.depends_on(v) {
                        // d(u^c) = c u^(c-1) u'
                        let lowered = match b.as_num() {
                            Some(c) => num(c - 1.0),
                            None => sub(b.clone(), num(1.0)),
                        };
                        mul(mul(b.clone(), pow(a.clone(), lowered)), derivative(a, v)?)
                    } else if let Some(base) = a.as_num().filter(|x| *x > 0.0) {
                        // d(c^w) = c^w ln(c) w'
                        mul(
                            mul(node.clone(), num(base.ln())),
                            derivative(b, v)?,
                        )
                    } else {
                        return Err(DiffError::VariableExponent { expr: node.to_string() });
                    }
                }
            }
        }
        Node::Call(func, args) => match func {
            Func::Sin => mul(call(Func::Cos, args.clone()), derivative(&args[0], v)?),
            Func::Cos => mul(neg(call(Func::Sin, args.clone())), derivative(&args[0], v)?),
            Func::Exp => mul(node.clone(), derivative(&args[0], v)?),
            Func::Sqrt => div(derivative(&args[0], v)?, mul(num(2.0), node.clone())),
            Func::Tanh => mul(
                sub(num(1.0), pow(node.clone(), num(2.0))),
                derivative(&args[0], v)?,
            ),
            Func::Abs => mul(call(Func::Sign, args.clone()), derivative(&args[0], v)?),
            Func::Min | Func::Max => {
                let (a, b) = (&args[0], &args[1]);
                // first argument wins when step(..) = 1, i.e. on ties as well
                let gap = match func {
                    Func::Max => sub(a.clone(), b.clone()),
                    _ => sub(b.clone(), a.clone()),
                };
                let first = call(Func::Step, vec![gap]);
                let second = sub(num(1.0), first.clone());
                add(
                    mul(first, derivative(a, v)?),
                    mul(second, derivative(b, v)?),
                )
            }
            Func::Sign | Func::Step => num(0.0),
        },
    })
}
