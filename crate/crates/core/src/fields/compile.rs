//! Flat stack programs compiled from expression trees.
//!
//! Parameters and named constants are substituted at compile time and
//! constant subtrees are folded, so evaluation only touches `t` and `x`.

use std::collections::BTreeMap;

use super::expr::{BinOp, Expr, Func, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DomainErrorKind {
    DivisionByZero,
    NegativeSqrt,
    NonPositiveLog,
    NegativeBasePower,
}

impl std::fmt::Display for DomainErrorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            DomainErrorKind::DivisionByZero => "division by zero",
            DomainErrorKind::NegativeSqrt => "square root of a negative number",
            DomainErrorKind::NonPositiveLog => "logarithm of a non-positive number",
            DomainErrorKind::NegativeBasePower => "even root of a negative number",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Instr {
    Const(f64),
    Time,
    State(usize),
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    PowI(i32),
    Call(Func),
}

const INLINE_STACK: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct Program {
    code: Vec<Instr>,
    depth: usize,
}

#[inline]
fn apply_func(f: Func, a: f64) -> Result<f64, DomainErrorKind> {
    Ok(match f {
        Func::Sin => a.sin(),
        Func::Cos => a.cos(),
        Func::Exp => a.exp(),
        Func::Ln => {
            if a <= 0.0 {
                return Err(DomainErrorKind::NonPositiveLog);
            }
            a.ln()
        }
        Func::Tanh => a.tanh(),
        Func::Atan => a.atan(),
        Func::Sqrt => {
            if a < 0.0 {
                return Err(DomainErrorKind::NegativeSqrt);
            }
            a.sqrt()
        }
        Func::Abs => a.abs(),
    })
}

#[inline]
fn apply_bin(op: BinOp, a: f64, b: f64) -> Result<f64, DomainErrorKind> {
    Ok(match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div => {
            if b == 0.0 {
                return Err(DomainErrorKind::DivisionByZero);
            }
            a / b
        }
        BinOp::Pow => pow(a, b)?,
    })
}

#[inline]
fn pow(a: f64, b: f64) -> Result<f64, DomainErrorKind> {
    if a < 0.0 && b.fract() != 0.0 {
        return Err(DomainErrorKind::NegativeBasePower);
    }
    if a == 0.0 && b < 0.0 {
        return Err(DomainErrorKind::DivisionByZero);
    }
    Ok(a.powf(b))
}

#[inline]
fn powi(a: f64, n: i32) -> Result<f64, DomainErrorKind> {
    if a == 0.0 && n < 0 {
        return Err(DomainErrorKind::DivisionByZero);
    }
    Ok(a.powi(n))
}

enum Folded {
    Value(f64),
    Code,
}

impl Program {
    pub fn compile(expr: &Expr, params: &BTreeMap<String, f64>) -> Program {
        let mut code = Vec::new();
        emit(expr, params, &mut code);
        let mut depth = 0usize;
        let mut max_depth = 0usize;
        for ins in &code {
            match ins {
                Instr::Const(_) | Instr::Time | Instr::State(_) => depth += 1,
                Instr::Add | Instr::Sub | Instr::Mul | Instr::Div | Instr::Pow => depth -= 1,
                Instr::Neg | Instr::PowI(_) | Instr::Call(_) => {}
            }
            max_depth = max_depth.max(depth);
        }
        Program {
            code,
            depth: max_depth,
        }
    }

    pub fn len(&self) -> usize {
        self.code.len()
    }

    pub fn is_empty(&self) -> bool {
        self.code.is_empty()
    }

    /// Evaluates at `(t, x)`.
    #[inline]
    pub fn eval(&self, t: f64, x: &[f64]) -> Result<f64, DomainErrorKind> {
        if let [Instr::Const(v)] = self.code.as_slice() {
            return Ok(*v);
        }
        if self.depth <= INLINE_STACK {
            let mut stack = [0.0f64; INLINE_STACK];
            self.run(t, x, &mut stack)
        } else {
            let mut stack = vec![0.0f64; self.depth];
            self.run(t, x, &mut stack)
        }
    }

    #[inline]
    fn run(&self, t: f64, x: &[f64], stack: &mut [f64]) -> Result<f64, DomainErrorKind> {
        let mut sp = 0usize;
        for ins in &self.code {
            match *ins {
                Instr::Const(v) => {
                    stack[sp] = v;
                    sp += 1;
                }
                Instr::Time => {
                    stack[sp] = t;
                    sp += 1;
                }
                Instr::State(i) => {
                    stack[sp] = x[i];
                    sp += 1;
                }
                Instr::Neg => stack[sp - 1] = -stack[sp - 1],
                Instr::Add => {
                    sp -= 1;
                    stack[sp - 1] += stack[sp];
                }
                Instr::Sub => {
                    sp -= 1;
                    stack[sp - 1] -= stack[sp];
                }
                Instr::Mul => {
                    sp -= 1;
                    stack[sp - 1] *= stack[sp];
                }
                Instr::Div => {
                    sp -= 1;
                    let b = stack[sp];
                    if b == 0.0 {
                        return Err(DomainErrorKind::DivisionByZero);
                    }
                    stack[sp - 1] /= b;
                }
                Instr::Pow => {
                    sp -= 1;
                    stack[sp - 1] = pow(stack[sp - 1], stack[sp])?;
                }
                Instr::PowI(n) => stack[sp - 1] = powi(stack[sp - 1], n)?,
                Instr::Call(f) => stack[sp - 1] = apply_func(f, stack[sp - 1])?,
            }
        }
        Ok(stack[0])
    }
}

fn emit(e: &Expr, params: &BTreeMap<String, f64>, code: &mut Vec<Instr>) {
    match fold(e, params) {
        Folded::Value(v) => code.push(Instr::Const(v)),
        Folded::Code => match e {
            Expr::Num(v) => code.push(Instr::Const(*v)),
            Expr::Var(Var::Time) => code.push(Instr::Time),
            Expr::Var(Var::State(i)) => code.push(Instr::State(*i)),
            Expr::Var(Var::Param(_)) | Expr::Var(Var::Const(_)) => {
                unreachable!("parameters and constants always fold")
            }
            Expr::Neg(a) => {
                emit(a, params, code);
                code.push(Instr::Neg);
            }
            Expr::Call(f, a) => {
                emit(a, params, code);
                code.push(Instr::Call(*f));
            }
            Expr::Bin(op, a, b) => {
                emit(a, params, code);
                if *op == BinOp::Pow {
                    if let Folded::Value(v) = fold(b, params) {
                        if v.fract() == 0.0 && v.abs() <= 64.0 {
                            code.push(Instr::PowI(v as i32));
                            return;
                        }
                    }
                }
                emit(b, params, code);
                code.push(match op {
                    BinOp::Add => Instr::Add,
                    BinOp::Sub => Instr::Sub,
                    BinOp::Mul => Instr::Mul,
                    BinOp::Div => Instr::Div,
                    BinOp::Pow => Instr::Pow,
                });
            }
        },
    }
}

// Constant subtrees fold to a value; anything touching t or x, or raising a
// domain error at compile time, is left for runtime.
fn fold(e: &Expr, params: &BTreeMap<String, f64>) -> Folded {
    let v = match e {
        Expr::Num(v) => Some(*v),
        Expr::Var(Var::Param(name)) => params.get(name).copied(),
        Expr::Var(Var::Const(c)) => Some(c.value()),
        Expr::Var(_) => None,
        Expr::Neg(a) => match fold(a, params) {
            Folded::Value(v) => Some(-v),
            Folded::Code => None,
        },
        Expr::Call(f, a) => match fold(a, params) {
            Folded::Value(v) => apply_func(*f, v).ok(),
            Folded::Code => None,
        },
        Expr::Bin(op, a, b) => match (fold(a, params), fold(b, params)) {
            (Folded::Value(x), Folded::Value(y)) => apply_bin(*op, x, y).ok(),
            _ => None,
        },
    };
    match v {
        Some(v) if v.is_finite() => Folded::Value(v),
        _ => Folded::Code,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::parse::parse_components;

    fn prog(src: &str, dim: usize) -> Program {
        let mut params = BTreeMap::new();
        params.insert("c".to_string(), 2.0);
        let e = parse_components(src, dim, &params).unwrap();
        Program::compile(&e[0], &params)
    }

    #[test]
    fn folds_constant_subtrees() {
        let p = prog("c * pi + 1", 1);
        assert_eq!(p.len(), 1);
        assert_eq!(p.eval(0.0, &[0.0]).unwrap(), 2.0 * std::f64::consts::PI + 1.0);
    }

    #[test]
    fn integer_powers_use_powi() {
        let p = prog("x1^3 - x1^(0-2)", 1);
        assert!((p.eval(0.0, &[2.0]).unwrap() - (8.0 - 0.25)).abs() < 1e-15);
        assert_eq!(p.eval(0.0, &[0.0]), Err(DomainErrorKind::DivisionByZero));
    }

    #[test]
    fn domain_errors() {
        assert_eq!(prog("1/x1", 1).eval(0.0, &[0.0]), Err(DomainErrorKind::DivisionByZero));
        assert_eq!(prog("sqrt(x1)", 1).eval(0.0, &[-1.0]), Err(DomainErrorKind::NegativeSqrt));
        assert_eq!(prog("x1^0.5", 1).eval(0.0, &[-1.0]), Err(DomainErrorKind::NegativeBasePower));
        assert_eq!(prog("ln(x1)", 1).eval(0.0, &[0.0]), Err(DomainErrorKind::NonPositiveLog));
    }

    #[test]
    fn compile_time_domain_error_is_deferred() {
        let p = prog("x1 + 1/0", 1);
        assert_eq!(p.eval(0.0, &[1.0]), Err(DomainErrorKind::DivisionByZero));
    }
}
