//! Substituting the trial function into the PDE, clearing denominators, and
//! collecting the residual into a nonlinear algebraic system over the
//! network's weights and biases.

use crate::bindings::{Binding, BindingSet};
use crate::expr::{factor_iter, split_coeff, Expr, ExprError, Rational};
use crate::network::TrialFunction;
use crate::parse::PdeSpec;
use crate::riccati::{diff_multi, RiccatiError};
use crate::simplify::{add, mul, pow};
use num::{Integer, One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SystemError {
    #[error("PDE variable `{0}` is not a network input")]
    VariableMismatch(String),
    #[error("PDE parameter `{0}` collides with a network symbol")]
    SymbolCollision(String),
    #[error("residual is not polynomial in phi-atoms: {0}")]
    NonPolynomial(String),
    #[error(transparent)]
    Riccati(#[from] RiccatiError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Collected polynomial system: one equation per phi/variable monomial of
/// the cleared residual, plus the non-vanishing assumptions introduced by
/// clearing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlgebraicSystem {
    /// Deduplicated, content-normalized equations (each implicitly `= 0`).
    pub equations: Vec<Expr>,
    /// Expressions asserted nonzero: cleared denominator bases, recorded
    /// with their clearing power.
    pub assumptions: Vec<Expr>,
    /// Exact provenance: monomial -> its coefficient in the numerator.
    pub monomial_index: BTreeMap<Expr, Expr>,
    /// Symbols the solver must never set to zero (the PDE's parameters).
    pub protected: BTreeSet<String>,
}

impl AlgebraicSystem {
    /// All symbols occurring in the equations.
    pub fn symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for eq in &self.equations {
            out.extend(eq.symbols());
        }
        out
    }

    pub fn with_protected(mut self, names: impl IntoIterator<Item = String>) -> Self {
        self.protected.extend(names);
        self
    }

    /// Base expression of an assumption entry (strips the clearing power).
    pub fn assumption_base(entry: &Expr) -> &Expr {
        match entry {
            Expr::Pow(b, _) => b,
            other => other,
        }
    }
}

impl fmt::Display for AlgebraicSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for eq in &self.equations {
            writeln!(f, "{eq} = 0")?;
        }
        for a in &self.assumptions {
            writeln!(f, "nonzero: {a}")?;
        }
        Ok(())
    }
}

/// Substitute the trial function into the PDE: each derivative occurrence is
/// replaced by the phi-closure derivative of the trial (squaring first for
/// derivative-of-power atoms) and the bare unknown by the trial itself.
pub fn residual(pde: &PdeSpec, tf: &TrialFunction) -> Result<Expr, SystemError> {
    for v in &pde.vars {
        if !tf.spec.inputs.contains(v) {
            return Err(SystemError::VariableMismatch(v.clone()));
        }
    }
    let trial_symbols = crate::network::free_symbols(tf);
    if let Some(p) = pde.params.iter().find(|p| trial_symbols.contains(*p)) {
        return Err(SystemError::SymbolCollision(p.clone()));
    }

    let mut bindings = vec![Binding {
        target: Expr::sym(pde.unknown.clone()),
        replacement: tf.expr.clone(),
    }];
    for (name, atom) in &pde.derivs {
        let powered = pow(tf.expr.clone(), atom.power as i64)?;
        let derived = diff_multi(&powered, &atom.orders, &tf.ctx)?;
        bindings.push(Binding {
            target: Expr::sym(name.clone()),
            replacement: derived,
        });
    }
    let set = BindingSet::new(bindings).expect("distinct atomic targets");
    Ok(crate::bindings::substitute(&pde.lhs, &set)?)
}

/// Multiply out every negative-power factor. Returns the polynomial
/// numerator and the list of cleared bases, each raised to its clearing
/// power; the quotient of numerator by the product of the returned entries
/// equals the input wherever all bases are nonzero.
pub fn clear_denominators(e: &Expr) -> Result<(Expr, Vec<Expr>), ExprError> {
    let mut needed: BTreeMap<Expr, i64> = BTreeMap::new();
    for term in e.terms() {
        for (base, k) in factor_iter(term) {
            if k < 0 {
                let need = needed.entry(base.clone()).or_insert(0);
                *need = (*need).max(-k);
            }
        }
    }
    if needed.is_empty() {
        return Ok((e.clone(), Vec::new()));
    }
    let mut cleared_terms = Vec::new();
    for term in e.terms() {
        let mut factors = vec![term.clone()];
        for (base, &m) in &needed {
            // Push the unexpanded power node; `mul` merges it against the
            // term's own negative power of the same base before any
            // expansion, so the cancellation is exact.
            let p = if m == 1 {
                base.clone()
            } else {
                Expr::Pow(Box::new(base.clone()), m)
            };
            factors.push(p);
        }
        cleared_terms.push(mul(factors));
    }
    let numerator = add(cleared_terms);
    let assumptions = needed
        .into_iter()
        .map(|(base, m)| {
            if m == 1 {
                base
            } else {
                Expr::Pow(Box::new(base), m)
            }
        })
        .collect();
    Ok((numerator, assumptions))
}

/// Group a polynomial numerator by its phi-atom (and independent-variable)
/// monomials and equate each coefficient to zero.
pub fn collect(numerator: &Expr) -> Result<AlgebraicSystem, SystemError> {
    let mut index: BTreeMap<Expr, Vec<Expr>> = BTreeMap::new();
    for term in numerator.terms() {
        if term.is_zero() {
            continue;
        }
        let (coeff_rat, mono_full) = split_coeff(term);
        let mut mono_factors: Vec<Expr> = Vec::new();
        let mut coeff_factors: Vec<Expr> = vec![Expr::Rational(coeff_rat)];
        for (base, k) in factor_iter(&mono_full) {
            let is_basis = matches!(base, Expr::Phi(_) | Expr::Var(_));
            if is_basis {
                if k < 0 {
                    return Err(SystemError::NonPolynomial(base.to_string()));
                }
                mono_factors.push(pow(base.clone(), k)?);
            } else {
                if !base.phi_atoms().is_empty() || !base.vars().is_empty() {
                    return Err(SystemError::NonPolynomial(base.to_string()));
                }
                coeff_factors.push(pow(base.clone(), k)?);
            }
        }
        let mono = mul(mono_factors);
        index.entry(mono).or_default().push(mul(coeff_factors));
    }

    let mut monomial_index: BTreeMap<Expr, Expr> = BTreeMap::new();
    let mut eqs: BTreeSet<Expr> = BTreeSet::new();
    for (mono, coeffs) in index {
        let coefficient = add(coeffs);
        if coefficient.is_zero() {
            continue;
        }
        eqs.insert(normalize_equation(&coefficient));
        monomial_index.insert(mono, coefficient);
    }
    Ok(AlgebraicSystem {
        equations: eqs.into_iter().collect(),
        assumptions: Vec::new(),
        monomial_index,
        protected: BTreeSet::new(),
    })
}

/// Full pipeline step: residual, clear, collect, carrying assumptions and
/// protecting the PDE's parameters.
pub fn build_system(pde: &PdeSpec, tf: &TrialFunction) -> Result<AlgebraicSystem, SystemError> {
    let r = residual(pde, tf)?;
    let (numerator, assumptions) = clear_denominators(&r)?;
    let mut sys = collect(&numerator)?;
    sys.assumptions = assumptions;
    sys.protected = pde.params.clone();
    Ok(sys)
}

/// Divide an equation by its rational content and normalize the sign so the
/// canonically-first term has positive coefficient.
pub fn normalize_equation(eq: &Expr) -> Expr {
    let terms = eq.terms();
    if terms.is_empty() {
        return eq.clone();
    }
    let mut num_gcd = num::BigInt::zero();
    let mut den_lcm = num::BigInt::one();
    for t in terms {
        let (c, _) = split_coeff(t);
        num_gcd = num_gcd.gcd(&c.numer().abs());
        den_lcm = den_lcm.lcm(c.denom());
    }
    if num_gcd.is_zero() {
        return eq.clone();
    }
    let mut scale = Rational::new(den_lcm, num_gcd);
    let (first_coeff, _) = split_coeff(&terms[0]);
    if first_coeff.is_negative() {
        scale = -scale;
    }
    mul(vec![Expr::Rational(scale), eq.clone()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_trial, ActivationKind, NetworkSpec, RiccatiContext};
    use crate::parse::{parse_expr, parse_pde};
    use crate::simplify::sub;

    fn example1_pde() -> PdeSpec {
        parse_pde("params alpha,beta,gamma; u(x,t); u_tt + alpha*u_xx + beta*u + gamma*u^3 = 0")
            .unwrap()
    }

    fn example1_trial() -> TrialFunction {
        let spec = NetworkSpec::new(
            vec!["x".into(), "t".into()],
            vec![
                vec![ActivationKind::PhiPower(1), ActivationKind::PhiPower(2)],
                vec![ActivationKind::ArgPower(1), ActivationKind::ArgPower(-1)],
            ],
            "b",
        )
        .unwrap();
        build_trial(&spec).unwrap()
    }

    #[test]
    fn constant_trial_annihilates_transport() {
        let pde = parse_pde("u(x,t); u_t = 0").unwrap();
        let tf = TrialFunction {
            expr: Expr::sym("b5"),
            ctx: RiccatiContext::new("b"),
            spec: NetworkSpec::new(
                vec!["x".into(), "t".into()],
                vec![vec![ActivationKind::ArgPower(1)]],
                "b",
            )
            .unwrap(),
        };
        assert!(residual(&pde, &tf).unwrap().is_zero());
    }

    #[test]
    fn variable_mismatch_detected() {
        let pde = parse_pde("u(x,y,t); u_t = 0").unwrap();
        let tf = example1_trial();
        assert!(matches!(
            residual(&pde, &tf),
            Err(SystemError::VariableMismatch(v)) if v == "y"
        ));
    }

    #[test]
    fn parameter_collision_detected() {
        let pde = parse_pde("params b; u(x,t); u_t + b*u = 0").unwrap();
        let tf = example1_trial();
        assert!(matches!(
            residual(&pde, &tf),
            Err(SystemError::SymbolCollision(p)) if p == "b"
        ));
    }

    #[test]
    fn example1_cleared_degree_is_at_most_twelve() {
        let pde = example1_pde();
        let tf = example1_trial();
        let r = residual(&pde, &tf).unwrap();
        let (numerator, assumptions) = clear_denominators(&r).unwrap();
        assert_eq!(numerator.phi_total_degree().unwrap(), 12);
        // The inverse-activation denominator is cleared at the third power.
        assert_eq!(assumptions.len(), 1);
        match &assumptions[0] {
            Expr::Pow(base, 3) => {
                let expected = parse_expr("w14*phi1 + w24*phi2^2 + b4").unwrap();
                assert_eq!(**base, expected);
            }
            other => panic!("unexpected assumption {other}"),
        }
    }

    #[test]
    fn clearing_single_denominator() {
        // a/(w14*phi1 + b4) + c -> (a + c*(w14*phi1 + b4), [w14*phi1 + b4])
        let denom = parse_expr("w14*phi1 + b4").unwrap();
        let e = add(vec![
            mul(vec![Expr::sym("a"), pow(denom.clone(), -1).unwrap()]),
            Expr::sym("c"),
        ]);
        let (numerator, assumptions) = clear_denominators(&e).unwrap();
        let expected = add(vec![
            Expr::sym("a"),
            mul(vec![Expr::sym("c"), denom.clone()]),
        ]);
        assert_eq!(numerator, expected);
        assert_eq!(assumptions, vec![denom]);
    }

    #[test]
    fn clearing_polynomial_is_identity() {
        let e = parse_expr("p*phi1 + r").unwrap();
        let (numerator, assumptions) = clear_denominators(&e).unwrap();
        assert_eq!(numerator, e);
        assert!(assumptions.is_empty());
    }

    #[test]
    fn collect_simple_system() {
        // (p - q)*phi1 + r -> equations {p - q, r}
        let e = parse_expr("(p - q)*phi1 + r").unwrap();
        let sys = collect(&e).unwrap();
        assert_eq!(sys.equations.len(), 2);
        let expected: BTreeSet<Expr> = [parse_expr("p - q").unwrap(), parse_expr("r").unwrap()]
            .into_iter()
            .collect();
        let got: BTreeSet<Expr> = sys.equations.iter().cloned().collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn reassembly_identity() {
        let pde = example1_pde();
        let tf = example1_trial();
        let r = residual(&pde, &tf).unwrap();
        let (numerator, _) = clear_denominators(&r).unwrap();
        let sys = collect(&numerator).unwrap();
        let rebuilt = add(
            sys.monomial_index
                .iter()
                .map(|(mono, coeff)| mul(vec![mono.clone(), coeff.clone()])),
        );
        assert!(sub(rebuilt, numerator).is_zero());
    }

    #[test]
    fn equations_contain_no_phi_or_vars() {
        let pde = example1_pde();
        let tf = example1_trial();
        let sys = build_system(&pde, &tf).unwrap();
        assert!(!sys.equations.is_empty());
        for eq in &sys.equations {
            assert!(eq.phi_atoms().is_empty());
            assert!(eq.vars().is_empty());
            assert!(!eq.is_zero());
        }
        assert_eq!(sys.protected.len(), 3);
    }
}
