//! Randomised property checks shared by the `properties` and `acceptance`
//! test targets. Each check runs its own proptest runner and reports the
//! first counterexample as a string.

#![allow(dead_code)]

use std::f64::consts::PI;

use bsquant::{
    enumerate_levels, gram_determinant, parse_expr, quad_well, Expr, Func, Order, Potential, QuadRule, Well,
};
use num_rational::Rational64;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

pub const CASES: u32 = 128;

pub fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() })
}

fn outcome<T: std::fmt::Debug>(r: Result<(), proptest::test_runner::TestError<T>>) -> Result<(), String> {
    r.map_err(|e| e.to_string())
}

pub fn expr_strategy() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        Just(Expr::X),
        (-40i32..=40).prop_map(|k| Expr::Const(k as f64 / 8.0)),
        (-1.0e3f64..1.0e3).prop_map(Expr::Const),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::Sum),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::Product),
            (inner.clone(), prop_oneof![Just((2, 1)), Just((3, 1)), Just((-1, 1)), Just((1, 3)), Just((3, 2))])
                .prop_map(|(e, (p, q))| Expr::Pow(Box::new(e), Rational64::new(p, q))),
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (prop::sample::select(Func::ALL.to_vec()), inner).prop_map(|(f, e)| Expr::Call(f, Box::new(e))),
        ]
    })
}

fn same_value(a: Result<f64, bsquant::EvalError>, b: Result<f64, bsquant::EvalError>) -> bool {
    match (a, b) {
        (Ok(a), Ok(b)) => a == b || (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0),
        (Err(_), Err(_)) => true,
        _ => false,
    }
}

/// print → parse gives a tree that evaluates identically at 32 points.
pub fn parser_round_trip(cases: u32) -> Result<(), String> {
    let strat = (expr_strategy(), prop::collection::vec(-3.0f64..3.0, 32));
    outcome(runner(cases).run(&strat, |(e, xs)| {
        let text = e.to_string();
        let back = parse_expr(&text).map_err(|err| TestCaseError::fail(format!("{text}: {err}")))?;
        for &x in &xs {
            prop_assert!(same_value(e.eval(x), back.eval(x)), "{} at x = {}", text, x);
        }
        Ok(())
    }))
}

/// Polynomials print and re-parse to bit-identical values.
pub fn polynomial_round_trip_exact(cases: u32) -> Result<(), String> {
    let strat = (prop::collection::vec(-8i32..8, 1..8), prop::collection::vec(-2.0f64..2.0, 32));
    outcome(runner(cases).run(&strat, |(coeffs, xs)| {
        let terms: Vec<Expr> = coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                Expr::Product(vec![
                    Expr::Const(c as f64 / 4.0),
                    Expr::Pow(Box::new(Expr::X), Rational64::from(k as i64)),
                ])
            })
            .collect();
        let e = Expr::Sum(terms);
        let back = parse_expr(&e.to_string()).unwrap();
        for &x in &xs {
            prop_assert_eq!(e.eval(x).unwrap(), back.eval(x).unwrap());
        }
        Ok(())
    }))
}

fn polynomial_source(coeffs: &[f64]) -> String {
    coeffs.iter().enumerate().map(|(k, c)| format!("({c:?})*x^{k}")).collect::<Vec<_>>().join(" + ")
}

/// Symbolic `d_k` agrees with a central difference of `d_{k-1}`, k = 1..4.
pub fn derivative_consistency(cases: u32) -> Result<(), String> {
    let strat = (prop::collection::vec(-2.0f64..2.0, 1..=7), prop::collection::vec(-2.0f64..2.0, 16));
    outcome(runner(cases).run(&strat, |(coeffs, xs)| {
        let p = Potential::parse(&polynomial_source(&coeffs)).unwrap();
        for &x in &xs {
            for k in 1..=4 {
                let step = f64::EPSILON.cbrt() * x.abs().max(1.0);
                let fd =
                    (p.derivative(k - 1, x + step).unwrap() - p.derivative(k - 1, x - step).unwrap()) / (2.0 * step);
                let exact = p.derivative(k, x).unwrap();
                prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1.0), "d{} at {}: {} vs {}", k, x, exact, fd);
            }
        }
        Ok(())
    }))
}

/// Same check on potentials built from the transcendental functions.
pub fn derivative_consistency_transcendental(cases: u32) -> Result<(), String> {
    let strat = (0.2f64..2.0, -1.5f64..1.5, prop::collection::vec(-1.5f64..1.5, 16));
    outcome(runner(cases).run(&strat, |(a, b, xs)| {
        let src = format!("exp(-{a:?}*x)*sin(x) + tanh({b:?}*x)^2 + sqrt(1 + x^2)*cos(x) + log(2 + x^2)");
        let p = Potential::parse(&src).unwrap();
        for &x in &xs {
            for k in 1..=4 {
                let step = f64::EPSILON.cbrt();
                let fd =
                    (p.derivative(k - 1, x + step).unwrap() - p.derivative(k - 1, x - step).unwrap()) / (2.0 * step);
                let exact = p.derivative(k, x).unwrap();
                prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1.0), "{} d{} at {}", src, k, x);
            }
        }
        Ok(())
    }))
}

/// `parse(a + b)` equals `parse(a) + parse(b)` pointwise.
pub fn linearity(cases: u32) -> Result<(), String> {
    let strat = (expr_strategy(), expr_strategy(), prop::collection::vec(-3.0f64..3.0, 16));
    outcome(runner(cases).run(&strat, |(a, b, xs)| {
        let (sa, sb) = (a.to_string(), b.to_string());
        let sum = parse_expr(&format!("({sa}) + ({sb})")).unwrap();
        let (pa, pb) = (parse_expr(&sa).unwrap(), parse_expr(&sb).unwrap());
        for &x in &xs {
            let separate = match (pa.eval(x), pb.eval(x)) {
                (Ok(u), Ok(v)) if (u + v).is_finite() => Ok(u + v),
                (Ok(_), Ok(_)) => continue,
                (Err(e), _) | (_, Err(e)) => Err(e),
            };
            let joint = sum.eval(x);
            match (&separate, &joint) {
                (Ok(s), Ok(j)) => {
                    let scale = pa.eval(x).unwrap().abs() + pb.eval(x).unwrap().abs();
                    prop_assert!((s - j).abs() <= 1e-12 * scale.max(1.0), "{} + {} at {}", sa, sb, x);
                }
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "{} + {} at {}: {:?} vs {:?}", sa, sb, x, separate, joint),
            }
        }
        Ok(())
    }))
}

/// `∫_a^b P((x - m)/w) / sqrt((x - a)(b - x)) dx` for odd-degree `P`
/// matches its Chebyshev-moment value.
pub fn quadrature_beta_exactness(cases: u32) -> Result<(), String> {
    let strat = (1usize..=8, prop::collection::vec(-3.0f64..3.0, 16), -5.0f64..5.0, 0.01f64..10.0);
    outcome(runner(cases).run(&strat, |(k, coeffs, a, width)| {
        let degree = 2 * k - 1;
        let c = &coeffs[..=degree.min(coeffs.len() - 1)];
        let b = a + width;
        let (m, w) = (0.5 * (a + b), 0.5 * width);
        // ∫_{-1}^{1} t^j / sqrt(1 - t²) dt = π (j-1)!!/j!! for even j.
        let moment = |j: usize| -> f64 {
            if j % 2 == 1 {
                return 0.0;
            }
            (1..=j / 2).fold(PI, |acc, i| acc * (2 * i - 1) as f64 / (2 * i) as f64)
        };
        let exact: f64 = c.iter().enumerate().map(|(j, cj)| cj * moment(j)).sum();
        let scale: f64 = c.iter().enumerate().map(|(j, cj)| cj.abs() * moment(j)).sum::<f64>().max(1.0);
        let got = quad_well(
            &QuadRule::default(),
            |pt| {
                let t = (pt.x - m) / w;
                let poly = c.iter().rev().fold(0.0, |acc, cj| acc * t + cj);
                Ok(poly / (pt.from_left * pt.from_right).sqrt())
            },
            a,
            b,
        )
        .unwrap()
        .value;
        prop_assert!((got - exact).abs() <= 1e-12 * scale, "got {} expected {}", got, exact);
        Ok(())
    }))
}

fn family(a: f64) -> Potential {
    Potential::parse(&format!("x^2 + {a:?}*x^4")).unwrap()
}

/// `D(E; h) ∈ [-1, 0]`.
pub fn gram_range(cases: u32) -> Result<(), String> {
    let strat = (0.0f64..1.0, 0.01f64..3.0, 0.01f64..0.3);
    outcome(runner(cases).run(&strat, |(a, e, h)| {
        let p = family(a);
        let well = Well::new(&p).unwrap();
        let d = gram_determinant(&well, e, h).unwrap();
        prop_assert!((-1.0..=0.0).contains(&d.value), "D = {}", d.value);
        Ok(())
    }))
}

/// Levels come back with consecutive quantum numbers, strictly increasing
/// energies and residuals within the contract.
pub fn level_monotonicity(cases: u32) -> Result<(), String> {
    let strat = (0.0f64..1.0, 0.05f64..0.3, prop_oneof![Just(Order::First), Just(Order::Second)]);
    outcome(runner(cases).run(&strat, |(a, h, order)| {
        let p = family(a);
        let well = Well::new(&p).unwrap();
        let levels = enumerate_levels(&well, (0.0, 2.0), h, order).unwrap();
        prop_assert!(!levels.is_empty());
        prop_assert_eq!(levels[0].n, 0);
        for pair in levels.windows(2) {
            prop_assert_eq!(pair[1].n, pair[0].n + 1);
            prop_assert!(pair[1].energy > pair[0].energy);
        }
        for l in &levels {
            let bound = 1e-12 * (2.0 * PI * l.n as f64 * h).max(1.0);
            prop_assert!(l.residual <= bound, "{:?}", l);
        }
        Ok(())
    }))
}

/// `ξ² + V = E` inside the well and the walls move outwards with `E`.
pub fn geometry_invariants(cases: u32) -> Result<(), String> {
    let strat = (0.0f64..1.0, 0.05f64..3.0, 0.0f64..1.0, prop::collection::vec(0.001f64..0.999, 8));
    outcome(runner(cases).run(&strat, |(a, e, de, fracs)| {
        let p = family(a);
        let well = Well::new(&p).unwrap();
        let g = well.geometry(e).unwrap();
        let g2 = well.geometry(e + 0.01 + de).unwrap();
        prop_assert!(g2.x_left < g.x_left && g2.x_right > g.x_right);
        prop_assert!(g.residual_left <= 1e-12 * e.max(1.0) && g.residual_right <= 1e-12 * e.max(1.0));
        for f in fracs {
            let x = g.x_left + f * g.width();
            let frame = bsquant::curve_frame(&p, &g, x).unwrap();
            let v = p.value(x).unwrap();
            prop_assert!((frame.xi * frame.xi + v - e).abs() <= 1e-12 * e.max(1.0));
            prop_assert!(v < e);
        }
        Ok(())
    }))
}

pub type Check = (&'static str, fn(u32) -> Result<(), String>);

pub const ALL: [Check; 9] = [
    ("parser round-trip", parser_round_trip),
    ("polynomial round-trip is exact", polynomial_round_trip_exact),
    ("derivative vs finite difference (polynomials)", derivative_consistency),
    ("derivative vs finite difference (transcendental)", derivative_consistency_transcendental),
    ("linearity of parsing", linearity),
    ("quadrature Beta exactness", quadrature_beta_exactness),
    ("D(E;h) in [-1, 0]", gram_range),
    ("BS level monotonicity", level_monotonicity),
    ("well geometry invariants", geometry_invariants),
];
