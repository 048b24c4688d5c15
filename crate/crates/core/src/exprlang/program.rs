//! Evaluation: a reference tree walker and a flat postfix program.
//!
//! Both share the same domain rules so they agree bit for bit.

use super::ast::{BinOp, Func, Node, Var};
use super::EvalError;

#[inline]
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[inline]
fn step(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        0.0
    }
}

#[inline]
pub(super) fn checked_div(a: f64, b: f64) -> Result<f64, EvalError> {
    if b == 0.0 {
        Err(EvalError::DivisionByZero)
    } else {
        Ok(a / b)
    }
}

#[inline]
fn checked_sqrt(a: f64) -> Result<f64, EvalError> {
    if a < 0.0 {
        Err(EvalError::NegativeSqrt)
    } else {
        Ok(a.sqrt())
    }
}

#[inline]
pub(super) fn integral_exponent(b: f64) -> Option<i32> {
    if b.fract() == 0.0 && b.abs() <= i32::MAX as f64 {
        Some(b as i32)
    } else {
        None
    }
}

#[inline]
pub(super) fn checked_powi(a: f64, n: i32) -> Result<f64, EvalError> {
    if a == 0.0 && n < 0 {
        Err(EvalError::DivisionByZero)
    } else {
        Ok(a.powi(n))
    }
}

#[inline]
pub(super) fn checked_pow(a: f64, b: f64) -> Result<f64, EvalError> {
    match integral_exponent(b) {
        Some(n) => checked_powi(a, n),
        None => {
            if a < 0.0 {
                Err(EvalError::NegativeBase)
            } else if a == 0.0 && b < 0.0 {
                Err(EvalError::DivisionByZero)
            } else {
                Ok(a.powf(b))
            }
        }
    }
}

#[inline]
pub(super) fn apply_func(func: Func, x: f64) -> Result<f64, EvalError> {
    Ok(match func {
        Func::Sin => x.sin(),
        Func::Cos => x.cos(),
        Func::Exp => x.exp(),
        Func::Sqrt => checked_sqrt(x)?,
        Func::Tanh => x.tanh(),
        Func::Abs => x.abs(),
        Func::Sign => sign(x),
        Func::Step => step(x),
        Func::Min | Func::Max => unreachable!("binary function"),
    })
}

#[inline]
pub(super) fn apply_func2(func: Func, a: f64, b: f64) -> f64 {
    // Ties go to the first argument.
    match func {
        Func::Min => {
            if a <= b {
                a
            } else {
                b
            }
        }
        Func::Max => {
            if a >= b {
                a
            } else {
                b
            }
        }
        _ => unreachable!("unary function"),
    }
}

pub(super) fn finish(x: f64) -> Result<f64, EvalError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(EvalError::NonFinite)
    }
}

pub(super) fn eval_tree(node: &Node, vars: [f64; 3]) -> Result<f64, EvalError> {
    fn go(node: &Node, vars: &[f64; 3]) -> Result<f64, EvalError> {
        Ok(match node {
            Node::Num(x) => *x,
            Node::Var(v) => vars[*v as usize],
            Node::Neg(a) => -go(a, vars)?,
            Node::Binary(op, a, b) => {
                let x = go(a, vars)?;
                // Constant integral exponents take the same `powi` path as the compiled form.
                let y = go(b, vars)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => checked_div(x, y)?,
                    BinOp::Pow => checked_pow(x, y)?,
                }
            }
            Node::Call(func, args) => match func {
                Func::Min | Func::Max => apply_func2(*func, go(&args[0], vars)?, go(&args[1], vars)?),
                _ => apply_func(*func, go(&args[0], vars)?)?,
            },
        })
    }
    finish(go(node, &vars)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Const(f64),
    Load(u8),
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    PowI(i32),
    Square,
    Unary(Func),
    Binary(Func),
}

/// Postfix form of a [`Node`], evaluated on a small fixed stack.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    ops: Vec<Op>,
    depth: usize,
}

const INLINE_STACK: usize = 32;

impl Program {
    pub fn compile(node: &Node) -> Program {
        let mut ops = Vec::with_capacity(node.size());
        emit(node, &mut ops);
        let mut depth = 0usize;
        let mut max_depth = 0usize;
        for op in &ops {
            match op {
                Op::Const(_) | Op::Load(_) => depth += 1,
                Op::Add | Op::Sub | Op::Mul | Op::Div | Op::Pow | Op::Binary(_) => depth -= 1,
                _ => {}
            }
            max_depth = max_depth.max(depth);
        }
        Program { ops, depth: max_depth }
    }

    #[inline]
    pub fn eval(&self, vars: [f64; 3]) -> Result<f64, EvalError> {
        if self.depth <= INLINE_STACK {
            let mut stack = [0.0f64; INLINE_STACK];
            self.run(&mut stack, &vars)
        } else {
            let mut stack = vec![0.0f64; self.depth];
            self.run(&mut stack, &vars)
        }
    }

    #[inline]
    fn run(&self, stack: &mut [f64], vars: &[f64; 3]) -> Result<f64, EvalError> {
        let mut sp = 0usize;
        for op in &self.ops {
            match *op {
                Op::Const(x) => {
                    stack[sp] = x;
                    sp += 1;
                }
                Op::Load(i) => {
                    stack[sp] = vars[i as usize];
                    sp += 1;
                }
                Op::Neg => stack[sp - 1] = -stack[sp - 1],
                Op::Square => stack[sp - 1] *= stack[sp - 1],
                Op::PowI(n) => stack[sp - 1] = checked_powi(stack[sp - 1], n)?,
                Op::Unary(f) => stack[sp - 1] = apply_func(f, stack[sp - 1])?,
                Op::Add | Op::Sub | Op::Mul | Op::Div | Op::Pow | Op::Binary(_) => {
                    sp -= 1;
                    let b = stack[sp];
                    let a = stack[sp - 1];
                    stack[sp - 1] = match *op {
                        Op::Add => a + b,
                        Op::Sub => a - b,
                        Op::Mul => a * b,
                        Op::Div => checked_div(a, b)?,
                        Op::Pow => checked_pow(a, b)?,
                        Op::Binary(f) => apply_func2(f, a, b),
                        _ => unreachable!(),
                    };
                }
            }
        }
        finish(stack[0])
    }
}

fn emit(node: &Node, ops: &mut Vec<Op>) {
    match node {
        Node::Num(x) => ops.push(Op::Const(*x)),
        Node::Var(v) => ops.push(Op::Load(match v {
            Var::P => 0,
            Var::Q => 1,
            Var::T => 2,
        })),
        Node::Neg(a) => {
            emit(a, ops);
            ops.push(Op::Neg);
        }
        Node::Binary(BinOp::Pow, a, b) => {
            emit(a, ops);
            match b.as_num().and_then(integral_exponent) {
                // x*x is exactly powi(x, 2).
                Some(2) => ops.push(Op::Square),
                Some(n) => ops.push(Op::PowI(n)),
                None => {
                    emit(b, ops);
                    ops.push(Op::Pow);
                }
            }
        }
        Node::Binary(op, a, b) => {
            emit(a, ops);
            emit(b, ops);
            ops.push(match op {
                BinOp::Add => Op::Add,
                BinOp::Sub => Op::Sub,
                BinOp::Mul => Op::Mul,
                BinOp::Div => Op::Div,
                BinOp::Pow => unreachable!(),
            });
        }
        Node::Call(func, args) => {
            for a in args {
                emit(a, ops);
            }
            ops.push(if args.len() == 2 { Op::Binary(*func) } else { Op::Unary(*func) });
        }
    }
}
