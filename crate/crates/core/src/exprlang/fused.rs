//! Several expressions compiled into one register program with shared
//! subexpressions, for hot loops that need all of them at the same point.

use std::collections::HashMap;

use super::ast::{BinOp, Func, Node, Var};
use super::program::{apply_func, apply_func2, checked_div, checked_pow, checked_powi, finish, integral_exponent};
use super::{EvalError, Expr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Key {
    Num(u64),
    Neg(u32),
    Bin(BinOp, u32, u32),
    PowI(u32, i32),
    Unary(Func, u32),
    Binary(Func, u32, u32),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Instr {
    Neg(u32),
    Add(u32, u32),
    Sub(u32, u32),
    Mul(u32, u32),
    Div(u32, u32),
    Pow(u32, u32),
    Square(u32),
    PowI(u32, i32),
    Unary(Func, u32),
    Binary(Func, u32, u32),
}

/// Registers `0..3` hold `p, q, t`, followed by constants, followed by one
/// register per instruction.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprSet {
    constants: Vec<f64>,
    instrs: Vec<Instr>,
    outputs: Vec<u32>,
}

struct Builder {
    keys: HashMap<Key, u32>,
    constants: Vec<f64>,
    pending: Vec<(Key, Instr)>,
}

impl Builder {
    fn intern(&mut self, key: Key, make: impl FnOnce() -> Option<Instr>) -> u32 {
        if let Some(&r) = self.keys.get(&key) {
            return r;
        }
        let r = match make() {
            None => {
                if let Key::Num(bits) = key {
                    self.constants.push(f64::from_bits(bits));
                }
                // provisional, renumbered once all registers are known
                (self.constants.len() - 1) as u32 | CONST_TAG
            }
            Some(instr) => {
                self.pending.push((key, instr));
                (self.pending.len() - 1) as u32 | INSTR_TAG
            }
        };
        self.keys.insert(key, r);
        r
    }

    fn visit(&mut self, node: &Node) -> u32 {
        match node {
            Node::Num(x) => self.intern(Key::Num(x.to_bits()), || None),
            Node::Var(v) => match v {
                Var::P => 0,
                Var::Q => 1,
                Var::T => 2,
            },
            Node::Neg(a) => {
                let a = self.visit(a);
                self.intern(Key::Neg(a), || Some(Instr::Neg(a)))
            }
            Node::Binary(BinOp::Pow, a, b) if b.as_num().and_then(integral_exponent).is_some() => {
                let n = b.as_num().and_then(integral_exponent).unwrap();
                let a = self.visit(a);
                self.intern(Key::PowI(a, n), || Some(if n == 2 { Instr::Square(a) } else { Instr::PowI(a, n) }))
            }
            Node::Binary(op, a, b) => {
                let (a, b) = (self.visit(a), self.visit(b));
                let op = *op;
                self.intern(Key::Bin(op, a, b), || {
                    Some(match op {
                        BinOp::Add => Instr::Add(a, b),
                        BinOp::Sub => Instr::Sub(a, b),
                        BinOp::Mul => Instr::Mul(a, b),
                        BinOp::Div => Instr::Div(a, b),
                        BinOp::Pow => Instr::Pow(a, b),
                    })
                })
            }
            Node::Call(f, args) if args.len() == 2 => {
                let (a, b) = (self.visit(&args[0]), self.visit(&args[1]));
                let f = *f;
                self.intern(Key::Binary(f, a, b), || Some(Instr::Binary(f, a, b)))
            }
            Node::Call(f, args) => {
                let a = self.visit(&args[0]);
                let f = *f;
                self.intern(Key::Unary(f, a), || Some(Instr::Unary(f, a)))
            }
        }
    }
}

const CONST_TAG: u32 = 1 << 30;
const INSTR_TAG: u32 = 1 << 31;

impl ExprSet {
    pub fn new(exprs: &[&Expr]) -> ExprSet {
        let mut b = Builder { keys: HashMap::new(), constants: Vec::new(), pending: Vec::new() };
        let outputs: Vec<u32> = exprs.iter().map(|e| b.visit(e.node())).collect();
        let base = 3 + b.constants.len() as u32;
        let fix = |r: u32| -> u32 {
            if r & INSTR_TAG != 0 {
                base + (r & !INSTR_TAG)
            } else if r & CONST_TAG != 0 {
                3 + (r & !CONST_TAG)
            } else {
                r
            }
        };
        let instrs = b
            .pending
            .iter()
            .map(|(_, i)| match *i {
                Instr::Neg(a) => Instr::Neg(fix(a)),
                Instr::Add(a, c) => Instr::Add(fix(a), fix(c)),
                Instr::Sub(a, c) => Instr::Sub(fix(a), fix(c)),
                Instr::Mul(a, c) => Instr::Mul(fix(a), fix(c)),
                Instr::Div(a, c) => Instr::Div(fix(a), fix(c)),
                Instr::Pow(a, c) => Instr::Pow(fix(a), fix(c)),
                Instr::Square(a) => Instr::Square(fix(a)),
                Instr::PowI(a, n) => Instr::PowI(fix(a), n),
                Instr::Unary(f, a) => Instr::Unary(f, fix(a)),
                Instr::Binary(f, a, c) => Instr::Binary(f, fix(a), fix(c)),
            })
            .collect();
        let outputs = outputs.into_iter().map(fix).collect();
        ExprSet { constants: b.constants, instrs, outputs }
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    /// Evaluates every expression at `(p, q, t)` into `out`, which must have
    /// room for [`ExprSet::len`] values. Results agree bit for bit with
    /// evaluating each expression on its own.
    #[inline]
    pub fn eval_into(&self, p: f64, q: f64, t: f64, out: &mut [f64]) -> Result<(), EvalError> {
        const INLINE: usize = 128;
        let n = 3 + self.constants.len() + self.instrs.len();
        if n <= INLINE {
            let mut regs = [0.0f64; INLINE];
            self.run(&mut regs[..n], p, q, t, out)
        } else {
            let mut regs = vec![0.0f64; n];
            self.run(&mut regs, p, q, t, out)
        }
    }

    #[inline]
    fn run(&self, regs: &mut [f64], p: f64, q: f64, t: f64, out: &mut [f64]) -> Result<(), EvalError> {
        regs[0] = p;
        regs[1] = q;
        regs[2] = t;
        let base = 3 + self.constants.len();
        regs[3..base].copy_from_slice(&self.constants);
        for (k, instr) in self.instrs.iter().enumerate() {
            let r = |i: u32| regs[i as usize];
            let v = match *instr {
                Instr::Neg(a) => -r(a),
                Instr::Add(a, b) => r(a) + r(b),
                Instr::Sub(a, b) => r(a) - r(b),
                Instr::Mul(a, b) => r(a) * r(b),
                Instr::Div(a, b) => checked_div(r(a), r(b))?,
                Instr::Pow(a, b) => checked_pow(r(a), r(b))?,
                Instr::Square(a) => r(a) * r(a),
                Instr::PowI(a, n) => checked_powi(r(a), n)?,
                Instr::Unary(f, a) => apply_func(f, r(a))?,
                Instr::Binary(f, a, b) => apply_func2(f, r(a), r(b)),
            };
            regs[base + k] = v;
        }
        for (o, &r) in out.iter_mut().zip(&self.outputs) {
            *o = finish(regs[r as usize])?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_individual_evaluation() {
        let srcs = ["max(0, 1 - (p^2+q^2)/1.69)^5", "sin(p*q) + t", "p", "2.5", "sqrt(p^2+1) * -q^3 / (1 + t^2)"];
        let exprs: Vec<Expr> = srcs.iter().map(|s| Expr::parse(s).unwrap()).collect();
        let mut all: Vec<&Expr> = exprs.iter().collect();
        let grads: Vec<Expr> = exprs.iter().flat_map(|e| {
            let (a, b) = e.grad().unwrap();
            [a, b]
        }).collect();
        all.extend(grads.iter());
        let set = ExprSet::new(&all);
        let mut out = vec![0.0; all.len()];
        for i in 0..50 {
            let (p, q, t) = (-1.3 + 0.05 * i as f64, 0.9 - 0.037 * i as f64, 0.02 * i as f64);
            set.eval_into(p, q, t, &mut out).unwrap();
            for (e, v) in all.iter().zip(&out) {
                assert_eq!(e.eval(p, q, t).unwrap().to_bits(), v.to_bits(), "{e}");
            }
        }
    }

    #[test]
    fn domain_errors_propagate() {
        let e = Expr::parse("1/p").unwrap();
        let set = ExprSet::new(&[&e]);
        let mut out = [0.0];
        assert_eq!(set.eval_into(0.0, 1.0, 0.0, &mut out), Err(EvalError::DivisionByZero));
    }
}
