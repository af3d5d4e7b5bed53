//! Symbolic partial derivatives with respect to state variables.

use super::expr::{BinOp, Expr, Func, Var};

fn is_num(e: &Expr, v: f64) -> bool {
    matches!(e, Expr::Num(x) if *x == v)
}

// Smart constructors that drop the trivial 0 and 1 factors produced by the
// chain rule. Nothing beyond that is simplified.
fn add(a: Expr, b: Expr) -> Expr {
    if is_num(&a, 0.0) {
        b
    } else if is_num(&b, 0.0) {
        a
    } else {
        Expr::bin(BinOp::Add, a, b)
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    if is_num(&b, 0.0) {
        a
    } else if is_num(&a, 0.0) {
        Expr::neg(b)
    } else {
        Expr::bin(BinOp::Sub, a, b)
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    if is_num(&a, 0.0) || is_num(&b, 0.0) {
        Expr::Num(0.0)
    } else if is_num(&a, 1.0) {
        b
    } else if is_num(&b, 1.0) {
        a
    } else {
        Expr::bin(BinOp::Mul, a, b)
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    if is_num(&a, 0.0) {
        Expr::Num(0.0)
    } else if is_num(&b, 1.0) {
        a
    } else {
        Expr::bin(BinOp::Div, a, b)
    }
}

fn neg(a: Expr) -> Expr {
    if is_num(&a, 0.0) {
        a
    } else {
        Expr::neg(a)
    }
}

/// d/dx_i of `e`, with `i` zero-based.
pub fn derivative(e: &Expr, i: usize) -> Expr {
    if !e.depends_on_state(i) {
        return Expr::Num(0.0);
    }
    match e {
        Expr::Num(_) => Expr::Num(0.0),
        Expr::Var(Var::State(j)) if *j == i => Expr::Num(1.0),
        Expr::Var(_) => Expr::Num(0.0),
        Expr::Neg(a) => neg(derivative(a, i)),
        Expr::Bin(op, a, b) => {
            let da = derivative(a, i);
            let db = derivative(b, i);
            let (a, b) = (a.as_ref().clone(), b.as_ref().clone());
            match op {
                BinOp::Add => add(da, db),
                BinOp::Sub => sub(da, db),
                BinOp::Mul => add(mul(da, b), mul(a, db)),
                BinOp::Div => div(
                    sub(mul(da, b.clone()), mul(a, db)),
                    Expr::bin(BinOp::Pow, b, Expr::Num(2.0)),
                ),
                BinOp::Pow => {
                    if !b.depends_on_state(i) {
                        // a^b with b independent of x_i: b * a^(b-1) * a'
                        let exp_minus_one = match b {
                            Expr::Num(v) => Expr::Num(v - 1.0),
                            ref other => Expr::bin(BinOp::Sub, other.clone(), Expr::Num(1.0)),
                        };
                        let power = if is_num(&exp_minus_one, 1.0) {
                            a
                        } else if is_num(&exp_minus_one, 0.0) {
                            Expr::Num(1.0)
                        } else {
                            Expr::bin(BinOp::Pow, a, exp_minus_one)
                        };
                        mul(mul(b, power), da)
                    } else {
                        // a^b * (b' ln a + b a'/a)
                        let pow = Expr::bin(BinOp::Pow, a.clone(), b.clone());
                        let term1 = mul(db, Expr::call(Func::Ln, a.clone()));
                        let term2 = div(mul(b, da), a);
                        mul(pow, add(term1, term2))
                    }
                }
            }
        }
        Expr::Call(f, a) => {
            let da = derivative(a, i);
            let a = a.as_ref().clone();
            let outer = match f {
                Func::Sin => Expr::call(Func::Cos, a),
                Func::Cos => neg(Expr::call(Func::Sin, a)),
                Func::Exp => Expr::call(Func::Exp, a),
                Func::Ln => div(Expr::Num(1.0), a),
                Func::Tanh => sub(
                    Expr::Num(1.0),
                    Expr::bin(BinOp::Pow, Expr::call(Func::Tanh, a), Expr::Num(2.0)),
                ),
                Func::Atan => div(
                    Expr::Num(1.0),
                    add(Expr::Num(1.0), Expr::bin(BinOp::Pow, a, Expr::Num(2.0))),
                ),
                Func::Sqrt => div(
                    Expr::Num(1.0),
                    mul(Expr::Num(2.0), Expr::call(Func::Sqrt, a)),
                ),
                Func::Abs => div(a.clone(), Expr::call(Func::Abs, a)),
            };
            mul(outer, da)
        }
    }
}

/// Row-major symbolic Jacobian of the component expressions.
pub fn jacobian(components: &[Expr]) -> Vec<Expr> {
    let n = components.len();
    let mut out = Vec::with_capacity(n * n);
    for c in components {
        for j in 0..n {
            out.push(derivative(c, j));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::parse::parse_components;
    use std::collections::BTreeMap;

    #[test]
    fn derivative_of_independent_subtree_is_zero() {
        let e = &parse_components("sin(t)*abs(t-1) + x2; 0", 2, &BTreeMap::new()).unwrap()[0];
        assert_eq!(derivative(e, 0), Expr::Num(0.0));
        assert_eq!(derivative(e, 1), Expr::Num(1.0));
    }

    #[test]
    fn polynomial_derivative_structure() {
        let e = &parse_components("3*x1^2", 1, &BTreeMap::new()).unwrap()[0];
        // 3 * (2 * x1) after the trivial-factor rules
        assert_eq!(
            derivative(e, 0),
            Expr::bin(
                BinOp::Mul,
                Expr::Num(3.0),
                Expr::bin(BinOp::Mul, Expr::Num(2.0), Expr::state(0))
            )
        );
    }
}
