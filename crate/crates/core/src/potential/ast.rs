use std::fmt;

use num_rational::Rational64;

use crate::error::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
    Tanh,
}

impl Func {
    pub const ALL: [Func; 6] = [Func::Exp, Func::Log, Func::Sin, Func::Cos, Func::Sqrt, Func::Tanh];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Tanh => "tanh",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    fn apply(self, arg: f64) -> Result<f64, EvalError> {
        let domain = || EvalError::Domain { func: self.name(), arg };
        match self {
            Func::Exp => Ok(arg.exp()),
            Func::Log if arg > 0.0 => Ok(arg.ln()),
            Func::Log => Err(domain()),
            Func::Sin => Ok(arg.sin()),
            Func::Cos => Ok(arg.cos()),
            Func::Sqrt if arg >= 0.0 => Ok(arg.sqrt()),
            Func::Sqrt => Err(domain()),
            Func::Tanh => Ok(arg.tanh()),
        }
    }
}

/// Expression tree in the single variable `x`.
///
/// Subtraction and division do not have nodes of their own: the parser
/// lowers `a - b` to `a + (-b)` and `a / b` to `a * b^-1`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    X,
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Pow(Box<Expr>, Rational64),
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
}

/// `(b + db)^r - b^r`, given both powers.
fn pow_increment(b: f64, db: f64, v: f64, shifted: f64, r: Rational64) -> f64 {
    let (p, q) = (*r.numer(), *r.denom());
    let c = b + db;
    if q == 1 && (1..=64).contains(&p.abs()) {
        // c^k - b^k = (c - b)·Σ c^i b^(k-1-i)
        let k = p.unsigned_abs() as i32;
        let mut sum = 0.0;
        for i in 0..k {
            sum += c.powi(i) * b.powi(k - 1 - i);
        }
        let up = db * sum;
        return if p > 0 { up } else { -up * v * shifted };
    }
    if b > 0.0 && c > 0.0 {
        return v * ((p as f64 / q as f64) * (db / b).ln_1p()).exp_m1();
    }
    shifted - v
}

/// `base^r` on the reals. Odd denominators admit negative bases.
pub(crate) fn rational_pow(base: f64, r: Rational64) -> Option<f64> {
    let (p, q) = (*r.numer(), *r.denom());
    if q == 1 {
        if base == 0.0 && p < 0 {
            return None;
        }
        return Some(match i32::try_from(p) {
            Ok(p) => base.powi(p),
            Err(_) => base.powf(p as f64),
        });
    }
    let exponent = p as f64 / q as f64;
    if base > 0.0 {
        Some(base.powf(exponent))
    } else if base == 0.0 {
        (p > 0).then_some(0.0)
    } else if q % 2 == 1 {
        let m = (-base).powf(exponent);
        Some(if p % 2 == 0 { m } else { -m })
    } else {
        None
    }
}

impl Expr {
    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 0.0)
    }

    pub fn contains_x(&self) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::X => true,
            Expr::Sum(v) | Expr::Product(v) => v.iter().any(Expr::contains_x),
            Expr::Pow(b, _) => b.contains_x(),
            Expr::Neg(u) | Expr::Call(_, u) => u.contains_x(),
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        1 + match self {
            Expr::Const(_) | Expr::X => 0,
            Expr::Sum(v) | Expr::Product(v) => v.iter().map(Expr::size).sum(),
            Expr::Pow(b, _) => b.size(),
            Expr::Neg(u) | Expr::Call(_, u) => u.size(),
        }
    }

    /// Value at `x` together with `f(x + dx) - f(x)`, the latter computed
    /// without the cancellation of a plain difference.
    pub fn eval_increment(&self, x: f64, dx: f64) -> Result<(f64, f64), EvalError> {
        let (v, d) = match self {
            Expr::Const(c) => (*c, 0.0),
            Expr::X => (x, dx),
            Expr::Sum(terms) => {
                let (mut v, mut d) = (0.0, 0.0);
                for t in terms {
                    let (tv, td) = t.eval_increment(x, dx)?;
                    v += tv;
                    d += td;
                }
                (v, d)
            }
            Expr::Product(factors) => {
                let (mut v, mut d) = (1.0, 0.0);
                for f in factors {
                    let (fv, fd) = f.eval_increment(x, dx)?;
                    d = d * fv + v * fd + d * fd;
                    v *= fv;
                }
                (v, d)
            }
            Expr::Pow(base, r) => {
                let (b, db) = base.eval_increment(x, dx)?;
                let domain = || EvalError::Domain { func: "pow", arg: b };
                let v = rational_pow(b, *r).ok_or_else(domain)?;
                let shifted = rational_pow(b + db, *r).ok_or(EvalError::Domain { func: "pow", arg: b + db })?;
                (v, pow_increment(b, db, v, shifted, *r))
            }
            Expr::Neg(u) => {
                let (v, d) = u.eval_increment(x, dx)?;
                (-v, -d)
            }
            Expr::Call(f, u) => {
                let (a, da) = u.eval_increment(x, dx)?;
                let v = f.apply(a)?;
                let shifted = f.apply(a + da)?;
                let d = match f {
                    Func::Exp => v * da.exp_m1(),
                    Func::Log => (da / a).ln_1p(),
                    Func::Sin => 2.0 * (a + 0.5 * da).cos() * (0.5 * da).sin(),
                    Func::Cos => -2.0 * (a + 0.5 * da).sin() * (0.5 * da).sin(),
                    Func::Sqrt if v + shifted > 0.0 => da / (v + shifted),
                    Func::Sqrt => 0.0,
                    Func::Tanh => da.tanh() * (1.0 - v * shifted),
                };
                (v, d)
            }
        };
        if v.is_finite() && d.is_finite() {
            Ok((v, d))
        } else {
            Err(EvalError::NonFinite { x })
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Const(c) => *c,
            Expr::X => x,
            Expr::Sum(terms) => {
                let mut acc = 0.0;
                for t in terms {
                    acc += t.eval(x)?;
                }
                acc
            }
            Expr::Product(factors) => {
                let mut acc = 1.0;
                for f in factors {
                    acc *= f.eval(x)?;
                }
                acc
            }
            Expr::Pow(base, r) => {
                let b = base.eval(x)?;
                rational_pow(b, *r).ok_or(EvalError::Domain { func: "pow", arg: b })?
            }
            Expr::Neg(u) => -u.eval(x)?,
            Expr::Call(f, u) => f.apply(u.eval(x)?)?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite { x })
        }
    }

    /// Constant folding, flattening and 0/1 identities.
    pub fn simplify(self) -> Expr {
        match self {
            Expr::Const(_) | Expr::X => self,
            Expr::Sum(terms) => simplify_sum(terms),
            Expr::Product(factors) => simplify_product(factors),
            Expr::Pow(base, r) => simplify_pow(base.simplify(), r),
            Expr::Neg(u) => negate(u.simplify()),
            Expr::Call(f, u) => {
                let arg = u.simplify();
                if let Expr::Const(c) = arg {
                    if let Ok(v) = f.apply(c) {
                        if v.is_finite() {
                            return Expr::Const(v);
                        }
                    }
                }
                Expr::Call(f, Box::new(arg))
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Sum(_) => 1,
            Expr::Product(_) => 2,
            Expr::Neg(_) => 3,
            Expr::Const(c) if *c < 0.0 => 3,
            Expr::Pow(..) => 4,
            Expr::Const(_) | Expr::X | Expr::Call(..) => 5,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, parent: u8) -> fmt::Result {
        let wrap = self.precedence() < parent;
        if wrap {
            f.write_str("(")?;
        }
        match self {
            Expr::Const(c) => write!(f, "{c:?}")?,
            Expr::X => f.write_str("x")?,
            Expr::Sum(terms) => {
                for (i, t) in terms.iter().enumerate() {
                    match (i, t) {
                        (0, _) => t.fmt_prec(f, 1)?,
                        (_, Expr::Neg(inner)) => {
                            f.write_str(" - ")?;
                            inner.fmt_prec(f, 2)?;
                        }
                        (_, Expr::Const(c)) if *c < 0.0 => write!(f, " - {:?}", -c)?,
                        _ => {
                            f.write_str(" + ")?;
                            t.fmt_prec(f, 2)?;
                        }
                    }
                }
            }
            Expr::Product(factors) => {
                for (i, t) in factors.iter().enumerate() {
                    if i > 0 {
                        f.write_str("*")?;
                    }
                    t.fmt_prec(f, 4)?;
                }
            }
            Expr::Neg(u) => {
                f.write_str("-")?;
                u.fmt_prec(f, 4)?;
            }
            Expr::Pow(base, r) => {
                base.fmt_prec(f, 5)?;
                if r.is_integer() && *r.numer() >= 0 {
                    write!(f, "^{}", r.numer())?;
                } else if r.is_integer() {
                    write!(f, "^({})", r.numer())?;
                } else {
                    write!(f, "^({}/{})", r.numer(), r.denom())?;
                }
            }
            Expr::Call(func, u) => {
                write!(f, "{}(", func.name())?;
                u.fmt_prec(f, 0)?;
                f.write_str(")")?;
            }
        }
        if wrap {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

fn simplify_sum(terms: Vec<Expr>) -> Expr {
    let mut out = Vec::with_capacity(terms.len());
    let mut constant = 0.0;
    fn push(e: Expr, out: &mut Vec<Expr>, constant: &mut f64) {
        match e {
            Expr::Const(c) => *constant += c,
            Expr::Sum(inner) => {
                for i in inner {
                    push(i, out, constant);
                }
            }
            other => out.push(other),
        }
    }
    for t in terms {
        push(t.simplify(), &mut out, &mut constant);
    }
    if constant != 0.0 {
        out.push(Expr::Const(constant));
    }
    match out.len() {
        0 => Expr::Const(0.0),
        1 => out.pop().unwrap(),
        _ => Expr::Sum(out),
    }
}

fn simplify_product(factors: Vec<Expr>) -> Expr {
    let mut out = Vec::with_capacity(factors.len());
    let mut constant = 1.0;
    fn push(e: Expr, out: &mut Vec<Expr>, constant: &mut f64) {
        match e {
            Expr::Const(c) => *constant *= c,
            Expr::Neg(inner) => {
                *constant = -*constant;
                push(*inner, out, constant);
            }
            Expr::Product(inner) => {
                for i in inner {
                    push(i, out, constant);
                }
            }
            other => out.push(other),
        }
    }
    for t in factors {
        push(t.simplify(), &mut out, &mut constant);
    }
    if constant == 0.0 {
        return Expr::Const(0.0);
    }
    let body = match out.len() {
        0 => return Expr::Const(constant),
        1 => out.pop().unwrap(),
        _ => Expr::Product(out),
    };
    if constant == 1.0 {
        body
    } else if constant == -1.0 {
        Expr::Neg(Box::new(body))
    } else {
        match body {
            Expr::Product(mut v) => {
                v.insert(0, Expr::Const(constant));
                Expr::Product(v)
            }
            other => Expr::Product(vec![Expr::Const(constant), other]),
        }
    }
}

fn simplify_pow(base: Expr, r: Rational64) -> Expr {
    if *r.numer() == 0 {
        return Expr::Const(1.0);
    }
    if r == Rational64::from_integer(1) {
        return base;
    }
    match base {
        Expr::Const(c) => match rational_pow(c, r) {
            Some(v) if v.is_finite() => Expr::Const(v),
            _ => Expr::Pow(Box::new(Expr::Const(c)), r),
        },
        Expr::Pow(inner, s) if s.is_integer() && r.is_integer() => match s.numer().checked_mul(*r.numer()) {
            Some(p) => simplify_pow(*inner, Rational64::from_integer(p)),
            None => Expr::Pow(Box::new(Expr::Pow(inner, s)), r),
        },
        Expr::Neg(inner) if r.is_integer() => {
            let p = simplify_pow(*inner, r);
            if r.numer() % 2 == 0 {
                p
            } else {
                negate(p)
            }
        }
        other => Expr::Pow(Box::new(other), r),
    }
}

fn negate(e: Expr) -> Expr {
    match e {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Neg(inner) => *inner,
        Expr::Product(mut v) => {
            if let Some(Expr::Const(c)) = v.first_mut() {
                *c = -*c;
                if *c == 1.0 {
                    v.remove(0);
                    return if v.len() == 1 { v.pop().unwrap() } else { Expr::Product(v) };
                }
                Expr::Product(v)
            } else {
                Expr::Neg(Box::new(Expr::Product(v)))
            }
        }
        other => Expr::Neg(Box::new(other)),
    }
}
