//! Differentiation of phi-polynomial expressions under the auxiliary-equation
//! closure rule: for a registered atom with affine argument `xi_i`,
//! `d(phi_i)/dv = c * (b + phi_i^2)` where `c` is the coefficient of `v` in
//! `xi_i`. Everything stays polynomial (or rational) in the atoms.

use crate::expr::{Expr, ExprError};
use crate::network::RiccatiContext;
use crate::simplify::{add, mul, pow};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RiccatiError {
    #[error("unregistered phi-atom phi{0}")]
    UnregisteredAtom(u32),
    #[error("symbolic derivative of `{0}` is not supported")]
    FunctionDerivative(String),
    #[error("atom phi{0} has a non-affine argument")]
    NonAffineArgument(u32),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Partial derivative with respect to an independent variable.
pub fn diff(e: &Expr, var: &str, ctx: &RiccatiContext) -> Result<Expr, RiccatiError> {
    match e {
        Expr::Rational(_) | Expr::Symbol(_) => Ok(Expr::zero()),
        Expr::Var(name) => Ok(if name == var { Expr::one() } else { Expr::zero() }),
        Expr::Phi(i) => {
            if ctx.argument(*i).is_none() {
                return Err(RiccatiError::UnregisteredAtom(*i));
            }
            let coeff = ctx
                .coefficient(*i, var)
                .ok_or(RiccatiError::NonAffineArgument(*i))?;
            if coeff.is_zero() {
                return Ok(Expr::zero());
            }
            let rule = add(vec![ctx.b_expr(), pow(Expr::phi(*i), 2)?]);
            Ok(mul(vec![coeff, rule]))
        }
        Expr::Func(kind, arg) => {
            // No symbolic derivatives of instantiated functions; constants
            // (var-free, atom-free arguments) still differentiate to zero.
            if arg.vars().is_empty() && arg.phi_atoms().is_empty() {
                Ok(Expr::zero())
            } else {
                Err(RiccatiError::FunctionDerivative(kind.name().to_string()))
            }
        }
        Expr::Pow(base, k) => {
            let db = diff(base, var, ctx)?;
            if db.is_zero() {
                return Ok(Expr::zero());
            }
            let reduced = pow((**base).clone(), k - 1)?;
            Ok(mul(vec![Expr::int(*k), reduced, db]))
        }
        Expr::Product(fs) => {
            let mut terms = Vec::new();
            for (i, f) in fs.iter().enumerate() {
                let df = diff(f, var, ctx)?;
                if df.is_zero() {
                    continue;
                }
                let mut rest: Vec<Expr> = Vec::with_capacity(fs.len());
                rest.extend(fs.iter().take(i).cloned());
                rest.extend(fs.iter().skip(i + 1).cloned());
                rest.push(df);
                terms.push(mul(rest));
            }
            Ok(add(terms))
        }
        Expr::Sum(ts) => {
            let parts: Result<Vec<Expr>, RiccatiError> =
                ts.iter().map(|t| diff(t, var, ctx)).collect();
            Ok(add(parts?))
        }
    }
}

/// Iterated partial derivatives, one variable order at a time. The closure
/// rule makes mixed partials commute, so the application order is
/// immaterial.
pub fn diff_multi(
    e: &Expr,
    orders: &BTreeMap<String, u32>,
    ctx: &RiccatiContext,
) -> Result<Expr, RiccatiError> {
    let mut acc = e.clone();
    for (var, &n) in orders {
        for _ in 0..n {
            acc = diff(&acc, var, ctx)?;
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplify::sub;

    fn ctx_two_atoms() -> RiccatiContext {
        let mut ctx = RiccatiContext::new("b");
        for i in [1u32, 2] {
            let arg = add(vec![
                mul(vec![Expr::var("t"), Expr::sym(format!("wt{i}"))]),
                mul(vec![Expr::var("x"), Expr::sym(format!("wx{i}"))]),
                Expr::sym(format!("b{i}")),
            ]);
            ctx.register(i, arg);
        }
        ctx
    }

    #[test]
    fn phi_chain_rule() {
        let ctx = ctx_two_atoms();
        let d = diff(&Expr::phi(1), "x", &ctx).unwrap();
        let expected = mul(vec![
            Expr::sym("wx1"),
            add(vec![Expr::sym("b"), pow(Expr::phi(1), 2).unwrap()]),
        ]);
        assert_eq!(d, expected);
    }

    #[test]
    fn constants_vanish() {
        let ctx = ctx_two_atoms();
        assert!(diff(&Expr::int(7), "t", &ctx).unwrap().is_zero());
        assert!(diff(&Expr::sym("w24"), "t", &ctx).unwrap().is_zero());
    }

    #[test]
    fn second_derivative_of_atom() {
        // d^2/dx^2 phi2 = 2*wx2^2*(b*phi2 + phi2^3)
        let ctx = ctx_two_atoms();
        let d1 = diff(&Expr::phi(2), "x", &ctx).unwrap();
        let d2 = diff(&d1, "x", &ctx).unwrap();
        let expected = mul(vec![
            Expr::int(2),
            pow(Expr::sym("wx2"), 2).unwrap(),
            add(vec![
                mul(vec![Expr::sym("b"), Expr::phi(2)]),
                pow(Expr::phi(2), 3).unwrap(),
            ]),
        ]);
        assert_eq!(d2, expected);
    }

    #[test]
    fn diff_multi_second_time_derivative_of_phi_squared() {
        // orders {t:2} on phi2^2 = 6*wt2^2*phi2^4 + 8*b*wt2^2*phi2^2 + 2*b^2*wt2^2
        let ctx = ctx_two_atoms();
        let orders: BTreeMap<String, u32> = [("t".to_string(), 2)].into_iter().collect();
        let got = diff_multi(&pow(Expr::phi(2), 2).unwrap(), &orders, &ctx).unwrap();
        let wt2sq = pow(Expr::sym("wt2"), 2).unwrap();
        let expected = add(vec![
            mul(vec![Expr::int(6), wt2sq.clone(), pow(Expr::phi(2), 4).unwrap()]),
            mul(vec![
                Expr::int(8),
                Expr::sym("b"),
                wt2sq.clone(),
                pow(Expr::phi(2), 2).unwrap(),
            ]),
            mul(vec![Expr::int(2), pow(Expr::sym("b"), 2).unwrap(), wt2sq]),
        ]);
        assert_eq!(got, expected);
    }

    #[test]
    fn empty_orders_is_identity() {
        let ctx = ctx_two_atoms();
        let e = add(vec![Expr::phi(1), Expr::sym("w24")]);
        assert_eq!(diff_multi(&e, &BTreeMap::new(), &ctx).unwrap(), e);
    }

    #[test]
    fn fourth_derivative_leading_coefficient() {
        // The n-th x-derivative of phi has leading term n! * wx^n * phi^(n+1).
        let ctx = ctx_two_atoms();
        let orders: BTreeMap<String, u32> = [("x".to_string(), 4)].into_iter().collect();
        let got = diff_multi(&Expr::phi(2), &orders, &ctx).unwrap();
        assert_eq!(got.phi_total_degree(), Some(5));
        // Extract the phi2^5 coefficient by subtracting the expected leading
        // term and checking the degree drops.
        let leading = mul(vec![
            Expr::int(24),
            pow(Expr::sym("wx2"), 4).unwrap(),
            pow(Expr::phi(2), 5).unwrap(),
        ]);
        let rest = sub(got, leading);
        assert!(rest.phi_total_degree().unwrap() < 5);
    }

    #[test]
    fn mixed_partials_commute() {
        let ctx = ctx_two_atoms();
        let e = mul(vec![
            pow(Expr::phi(1), 2).unwrap(),
            Expr::phi(2),
            Expr::sym("w3u"),
        ]);
        let xt = diff(&diff(&e, "x", &ctx).unwrap(), "t", &ctx).unwrap();
        let tx = diff(&diff(&e, "t", &ctx).unwrap(), "x", &ctx).unwrap();
        assert_eq!(xt, tx);
    }

    #[test]
    fn unregistered_atom_rejected() {
        let ctx = ctx_two_atoms();
        let err = diff(&Expr::phi(9), "x", &ctx).unwrap_err();
        assert_eq!(err, RiccatiError::UnregisteredAtom(9));
    }

    #[test]
    fn quotient_structures_differentiate() {
        // d/dx 1/(w24*phi2 + b4) = -w24*wx2*(b + phi2^2)/(w24*phi2 + b4)^2
        let ctx = ctx_two_atoms();
        let denom = add(vec![
            mul(vec![Expr::sym("w24"), Expr::phi(2)]),
            Expr::sym("b4"),
        ]);
        let e = pow(denom.clone(), -1).unwrap();
        let got = diff(&e, "x", &ctx).unwrap();
        let expected = mul(vec![
            Expr::int(-1),
            Expr::sym("w24"),
            Expr::sym("wx2"),
            add(vec![Expr::sym("b"), pow(Expr::phi(2), 2).unwrap()]),
            pow(denom, -2).unwrap(),
        ]);
        assert_eq!(got, expected);
    }
}
