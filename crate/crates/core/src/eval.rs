//! Numeric evaluation of expressions, generic over the scalar type so the
//! same walker serves IEEE double evaluation and the extended-precision
//! oracle.

use crate::dd::Dd;
use crate::expr::{Expr, FuncKind, Rational};
use num::ToPrimitive;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound symbol `{0}`")]
    UnboundSymbol(String),
    #[error("singular point")]
    SingularPoint,
    #[error("phi-atom present; instantiate a branch first")]
    PhiPresent,
    #[error("negative radicand")]
    NegativeRadicand,
}

/// Scalar types the evaluator can work in.
pub trait Scalar: Copy {
    fn from_rational(r: &Rational) -> Self;
    fn add(self, rhs: Self) -> Self;
    fn mul(self, rhs: Self) -> Self;
    fn powi(self, k: i64) -> Self;
    fn apply(self, kind: FuncKind) -> Result<Self, EvalError>;
    fn is_zero(self) -> bool;
    fn is_bad(self) -> bool;
}

impl Scalar for f64 {
    fn from_rational(r: &Rational) -> f64 {
        // Exact for all coefficients that fit; falls back to a quotient of
        // rounded parts for astronomically large ones.
        r.to_f64().unwrap_or(f64::NAN)
    }
    fn add(self, rhs: f64) -> f64 {
        self + rhs
    }
    fn mul(self, rhs: f64) -> f64 {
        self * rhs
    }
    fn powi(self, k: i64) -> f64 {
        self.powi(k as i32)
    }
    fn apply(self, kind: FuncKind) -> Result<f64, EvalError> {
        Ok(match kind {
            FuncKind::Tanh => self.tanh(),
            FuncKind::Coth => {
                let s = self.sinh();
                if s == 0.0 {
                    return Err(EvalError::SingularPoint);
                }
                self.cosh() / s
            }
            FuncKind::Tan => {
                let c = self.cos();
                if c == 0.0 {
                    return Err(EvalError::SingularPoint);
                }
                self.sin() / c
            }
            FuncKind::Cot => {
                let s = self.sin();
                if s == 0.0 {
                    return Err(EvalError::SingularPoint);
                }
                self.cos() / s
            }
            FuncKind::Cosh => self.cosh(),
            FuncKind::Sinh => self.sinh(),
            FuncKind::Cos => self.cos(),
            FuncKind::Sin => self.sin(),
            FuncKind::Sqrt => {
                if self < 0.0 {
                    return Err(EvalError::NegativeRadicand);
                }
                self.sqrt()
            }
        })
    }
    fn is_zero(self) -> bool {
        self == 0.0
    }
    fn is_bad(self) -> bool {
        !self.is_finite()
    }
}

impl Scalar for Dd {
    fn from_rational(r: &Rational) -> Dd {
        let num = r.numer().to_f64().unwrap_or(f64::NAN);
        let den = r.denom().to_f64().unwrap_or(f64::NAN);
        // Small integers convert exactly; the dd division restores the
        // quotient to full precision.
        Dd::from_f64(num) / Dd::from_f64(den)
    }
    fn add(self, rhs: Dd) -> Dd {
        self + rhs
    }
    fn mul(self, rhs: Dd) -> Dd {
        self * rhs
    }
    fn powi(self, k: i64) -> Dd {
        Dd::powi(self, k)
    }
    fn apply(self, kind: FuncKind) -> Result<Dd, EvalError> {
        let out = match kind {
            FuncKind::Tanh => self.tanh(),
            FuncKind::Coth => {
                if self.to_f64() == 0.0 {
                    return Err(EvalError::SingularPoint);
                }
                self.coth()
            }
            FuncKind::Tan => self.tan(),
            FuncKind::Cot => {
                let (s, c) = self.sin_cos();
                if s.to_f64() == 0.0 {
                    return Err(EvalError::SingularPoint);
                }
                c / s
            }
            FuncKind::Cosh => self.cosh(),
            FuncKind::Sinh => self.sinh(),
            FuncKind::Cos => self.cos(),
            FuncKind::Sin => self.sin(),
            FuncKind::Sqrt => {
                if self.to_f64() < 0.0 {
                    return Err(EvalError::NegativeRadicand);
                }
                self.sqrt()
            }
        };
        Ok(out)
    }
    fn is_zero(self) -> bool {
        self.to_f64() == 0.0
    }
    fn is_bad(self) -> bool {
        !self.is_finite()
    }
}

/// Evaluate `e` with every symbol and variable bound. phi-atoms are rejected;
/// instantiate a branch first. Poles and non-finite intermediates surface as
/// `SingularPoint`.
pub fn eval<S: Scalar>(e: &Expr, bindings: &BTreeMap<String, S>) -> Result<S, EvalError> {
    let v = eval_inner(e, bindings)?;
    if v.is_bad() {
        return Err(EvalError::SingularPoint);
    }
    Ok(v)
}

fn eval_inner<S: Scalar>(e: &Expr, bindings: &BTreeMap<String, S>) -> Result<S, EvalError> {
    match e {
        Expr::Rational(r) => Ok(S::from_rational(r)),
        Expr::Symbol(name) | Expr::Var(name) => bindings
            .get(name)
            .copied()
            .ok_or_else(|| EvalError::UnboundSymbol(name.clone())),
        Expr::Phi(_) => Err(EvalError::PhiPresent),
        Expr::Func(kind, a) => eval_inner(a, bindings)?.apply(*kind),
        Expr::Pow(b, k) => {
            let base = eval_inner(b, bindings)?;
            if *k < 0 && base.is_zero() {
                return Err(EvalError::SingularPoint);
            }
            Ok(base.powi(*k))
        }
        Expr::Product(fs) => {
            let mut acc = S::from_rational(&Rational::from_integer(1.into()));
            for f in fs {
                acc = acc.mul(eval_inner(f, bindings)?);
            }
            Ok(acc)
        }
        Expr::Sum(ts) => {
            let mut acc = S::from_rational(&Rational::from_integer(0.into()));
            for t in ts {
                acc = acc.add(eval_inner(t, bindings)?);
            }
            Ok(acc)
        }
    }
}

/// IEEE double evaluation, the user-facing entry point.
pub fn eval_numeric(e: &Expr, bindings: &BTreeMap<String, f64>) -> Result<f64, EvalError> {
    eval(e, bindings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplify::{add, div, func, mul, pow};

    fn binds(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn tanh_zero() {
        let e = func(FuncKind::Tanh, Expr::var("x"));
        assert_eq!(eval_numeric(&e, &binds(&[("x", 0.0)])).unwrap(), 0.0);
    }

    #[test]
    fn figure_peak_value() {
        // 1/(4*cosh(2*(t + 2x + 1))) at (x, t) = (-0.5, 0) is 0.25.
        let arg = mul(vec![
            Expr::int(2),
            add(vec![
                Expr::var("t"),
                mul(vec![Expr::int(2), Expr::var("x")]),
                Expr::int(1),
            ]),
        ]);
        let e = div(
            Expr::ratio(1, 4),
            func(FuncKind::Cosh, arg),
        )
        .unwrap();
        let v = eval_numeric(&e, &binds(&[("x", -0.5), ("t", 0.0)])).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
    }

    #[test]
    fn solution_value_matches_independent_calculation() {
        // The tanh-collapsed closed form at (x, t) = (1, 1) with the figure
        // coefficients equals 1/(4 cosh 8), computed independently here.
        let arg = mul(vec![
            Expr::int(2),
            add(vec![
                Expr::var("t"),
                mul(vec![Expr::int(2), Expr::var("x")]),
                Expr::int(1),
            ]),
        ]);
        let e = div(Expr::ratio(1, 4), func(FuncKind::Cosh, arg)).unwrap();
        let v = eval_numeric(&e, &binds(&[("x", 1.0), ("t", 1.0)])).unwrap();
        let independent = 0.25 / 8f64.cosh();
        assert!((v - independent).abs() <= 1e-15 * (1.0 + independent.abs()));
    }

    #[test]
    fn unbound_symbol_is_named() {
        let e = Expr::sym("w24");
        match eval_numeric(&e, &BTreeMap::new()) {
            Err(EvalError::UnboundSymbol(name)) => assert_eq!(name, "w24"),
            other => panic!("expected unbound symbol, got {other:?}"),
        }
    }

    #[test]
    fn poles_are_singular() {
        let e = func(FuncKind::Cot, Expr::var("x"));
        assert_eq!(
            eval_numeric(&e, &binds(&[("x", 0.0)])),
            Err(EvalError::SingularPoint)
        );
        let inv = pow(Expr::var("x"), -1).unwrap();
        assert_eq!(
            eval_numeric(&inv, &binds(&[("x", 0.0)])),
            Err(EvalError::SingularPoint)
        );
    }

    #[test]
    fn phi_rejected() {
        let e = Expr::phi(1);
        assert_eq!(
            eval_numeric(&e, &BTreeMap::new()),
            Err(EvalError::PhiPresent)
        );
    }
}
