//! Symbol assignments and simultaneous substitution.

use crate::expr::{Expr, ExprError};
use crate::simplify::{add, func, mul, pow, simplify};
use std::collections::BTreeMap;

/// One target -> replacement assignment. Targets are atomic nodes (symbols,
/// variables, or phi-atoms); replacements are canonical expressions that never
/// mention their own target.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Binding {
    pub target: Expr,
    pub replacement: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BindingError {
    #[error("binding target must be a symbol, variable, or phi-atom, got `{0}`")]
    NonAtomicTarget(String),
    #[error("binding for `{0}` refers to itself")]
    SelfReference(String),
    #[error("duplicate binding target `{0}`")]
    DuplicateTarget(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// A validated set of simultaneous bindings with pairwise distinct targets.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BindingSet {
    map: BTreeMap<Expr, Expr>,
}

impl BindingSet {
    pub fn new(bindings: impl IntoIterator<Item = Binding>) -> Result<BindingSet, BindingError> {
        let mut map = BTreeMap::new();
        for b in bindings {
            match &b.target {
                Expr::Symbol(_) | Expr::Var(_) | Expr::Phi(_) => {}
                other => return Err(BindingError::NonAtomicTarget(other.to_string())),
            }
            let replacement = simplify(&b.replacement)?;
            if replacement.contains(&b.target) {
                return Err(BindingError::SelfReference(b.target.to_string()));
            }
            if map.insert(b.target.clone(), replacement).is_some() {
                return Err(BindingError::DuplicateTarget(b.target.to_string()));
            }
        }
        Ok(BindingSet { map })
    }

    pub fn empty() -> BindingSet {
        BindingSet::default()
    }

    pub fn get(&self, target: &Expr) -> Option<&Expr> {
        self.map.get(target)
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Expr, &Expr)> {
        self.map.iter()
    }

    /// Targets as owned bindings, in canonical target order.
    pub fn bindings(&self) -> Vec<Binding> {
        self.map
            .iter()
            .map(|(t, r)| Binding {
                target: t.clone(),
                replacement: r.clone(),
            })
            .collect()
    }
}

/// Simultaneous substitution followed by canonicalization. Substituting the
/// empty set is the identity (up to canonical form).
pub fn substitute(e: &Expr, bindings: &BindingSet) -> Result<Expr, ExprError> {
    match e {
        Expr::Symbol(_) | Expr::Var(_) | Expr::Phi(_) => {
            Ok(bindings.get(e).cloned().unwrap_or_else(|| e.clone()))
        }
        Expr::Rational(_) => Ok(e.clone()),
        Expr::Func(k, a) => Ok(func(*k, substitute(a, bindings)?)),
        Expr::Pow(b, k) => pow(substitute(b, bindings)?, *k),
        Expr::Product(fs) => {
            let parts: Result<Vec<Expr>, ExprError> =
                fs.iter().map(|f| substitute(f, bindings)).collect();
            Ok(mul(parts?))
        }
        Expr::Sum(ts) => {
            let parts: Result<Vec<Expr>, ExprError> =
                ts.iter().map(|t| substitute(t, bindings)).collect();
            Ok(add(parts?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplify::{div, neg, sub};

    fn bind(target: Expr, replacement: Expr) -> Binding {
        Binding {
            target,
            replacement,
        }
    }

    #[test]
    fn empty_substitution_is_identity() {
        let e = add(vec![Expr::var("x"), Expr::int(1)]);
        assert_eq!(substitute(&e, &BindingSet::empty()).unwrap(), e);
    }

    #[test]
    fn substitute_var() {
        // x -> 0 in x + 1 gives 1
        let e = add(vec![Expr::var("x"), Expr::int(1)]);
        let bs = BindingSet::new(vec![bind(Expr::var("x"), Expr::int(0))]).unwrap();
        assert_eq!(substitute(&e, &bs).unwrap(), Expr::one());
    }

    #[test]
    fn self_reference_rejected() {
        let err = BindingSet::new(vec![bind(
            Expr::sym("a"),
            add(vec![Expr::sym("a"), Expr::int(1)]),
        )]);
        assert!(matches!(err, Err(BindingError::SelfReference(_))));
    }

    #[test]
    fn duplicate_target_rejected() {
        let err = BindingSet::new(vec![
            bind(Expr::sym("a"), Expr::int(1)),
            bind(Expr::sym("a"), Expr::int(2)),
        ]);
        assert!(matches!(err, Err(BindingError::DuplicateTarget(_))));
    }

    #[test]
    fn alpha_expression_under_figure_bindings() {
        // alpha = -(32 b^3 w24^2 wt2^2 + gamma w4u^2) / (32 b^3 w24^2 wx2^2)
        // under {b -> -1, w24 -> 2, wt2 -> 1, wx2 -> 2, w4u -> 1} evaluates to
        // (gamma - 128)/512.
        let num = add(vec![
            mul(vec![
                Expr::int(32),
                pow(Expr::sym("b"), 3).unwrap(),
                pow(Expr::sym("w24"), 2).unwrap(),
                pow(Expr::sym("wt2"), 2).unwrap(),
            ]),
            mul(vec![Expr::sym("gamma"), pow(Expr::sym("w4u"), 2).unwrap()]),
        ]);
        let den = mul(vec![
            Expr::int(32),
            pow(Expr::sym("b"), 3).unwrap(),
            pow(Expr::sym("w24"), 2).unwrap(),
            pow(Expr::sym("wx2"), 2).unwrap(),
        ]);
        let alpha = neg(div(num, den).unwrap());
        let bs = BindingSet::new(vec![
            bind(Expr::sym("b"), Expr::int(-1)),
            bind(Expr::sym("w24"), Expr::int(2)),
            bind(Expr::sym("wt2"), Expr::int(1)),
            bind(Expr::sym("wx2"), Expr::int(2)),
            bind(Expr::sym("w4u"), Expr::int(1)),
        ])
        .unwrap();
        let got = substitute(&alpha, &bs).unwrap();
        let expected = div(
            sub(Expr::sym("gamma"), Expr::int(128)),
            Expr::int(512),
        )
        .unwrap();
        assert_eq!(got, expected);
    }

    #[test]
    fn substitution_hits_zero_denominator() {
        let e = pow(Expr::var("x"), -1).unwrap();
        let bs = BindingSet::new(vec![bind(Expr::var("x"), Expr::int(0))]).unwrap();
        assert_eq!(substitute(&e, &bs), Err(ExprError::ZeroDenominator));
    }
}
