use num_rational::Rational64;

use super::ast::{Expr, Func};

/// Symbolic d/dx, simplified.
pub fn derivative(e: &Expr) -> Expr {
    raw(e).simplify()
}

fn raw(e: &Expr) -> Expr {
    match e {
        Expr::Const(_) => Expr::Const(0.0),
        Expr::X => Expr::Const(1.0),
        Expr::Sum(terms) => Expr::Sum(terms.iter().map(raw).collect()),
        Expr::Product(factors) => {
            let mut terms = Vec::with_capacity(factors.len());
            for i in 0..factors.len() {
                let d = raw(&factors[i]);
                if d.is_zero() {
                    continue;
                }
                let mut f = factors.clone();
                f[i] = d;
                terms.push(Expr::Product(f));
            }
            Expr::Sum(terms)
        }
        Expr::Pow(base, r) => Expr::Product(vec![
            Expr::Const(*r.numer() as f64 / *r.denom() as f64),
            Expr::Pow(base.clone(), r - Rational64::from_integer(1)),
            raw(base),
        ]),
        Expr::Neg(u) => Expr::Neg(Box::new(raw(u))),
        Expr::Call(f, u) => {
            let du = raw(u);
            let u = u.clone();
            match f {
                Func::Exp => Expr::Product(vec![Expr::Call(Func::Exp, u), du]),
                Func::Log => Expr::Product(vec![du, Expr::Pow(u, Rational64::from_integer(-1))]),
                Func::Sin => Expr::Product(vec![Expr::Call(Func::Cos, u), du]),
                Func::Cos => Expr::Neg(Box::new(Expr::Product(vec![Expr::Call(Func::Sin, u), du]))),
                Func::Sqrt => Expr::Product(vec![
                    Expr::Const(0.5),
                    du,
                    Expr::Pow(Box::new(Expr::Call(Func::Sqrt, u)), Rational64::from_integer(-1)),
                ]),
                Func::Tanh => Expr::Product(vec![
                    du,
                    Expr::Sum(vec![
                        Expr::Const(1.0),
                        Expr::Neg(Box::new(Expr::Pow(
                            Box::new(Expr::Call(Func::Tanh, u)),
                            Rational64::from_integer(2),
                        ))),
                    ]),
                ]),
            }
        }
    }
}
