//! Exact symbolic expression trees over arbitrary-precision rationals,
//! parameter symbols, independent variables, and phi-atoms.
//!
//! Every expression handed between modules is in *canonical form*: sums and
//! products are flattened, sorted, and like-term-merged; products of sums are
//! distributed; positive integer powers of sums are expanded; numeric factors
//! are folded exactly. Structural equality of canonical forms is the engine's
//! notion of equality. Negative integer powers of sums are kept as opaque
//! factors, so canonical forms are expanded Laurent normal forms over
//! sum-denominators.

use num::BigRational;
use std::collections::BTreeSet;
use std::fmt;

pub type Rational = BigRational;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum FuncKind {
    Tanh,
    Coth,
    Tan,
    Cot,
    Cosh,
    Sinh,
    Cos,
    Sin,
    Sqrt,
}

impl FuncKind {
    pub fn name(self) -> &'static str {
        match self {
            FuncKind::Tanh => "tanh",
            FuncKind::Coth => "coth",
            FuncKind::Tan => "tan",
            FuncKind::Cot => "cot",
            FuncKind::Cosh => "cosh",
            FuncKind::Sinh => "sinh",
            FuncKind::Cos => "cos",
            FuncKind::Sin => "sin",
            FuncKind::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<FuncKind> {
        Some(match name {
            "tanh" => FuncKind::Tanh,
            "coth" => FuncKind::Coth,
            "tan" => FuncKind::Tan,
            "cot" => FuncKind::Cot,
            "cosh" => FuncKind::Cosh,
            "sinh" => FuncKind::Sinh,
            "cos" => FuncKind::Cos,
            "sin" => FuncKind::Sin,
            "sqrt" => FuncKind::Sqrt,
            _ => return None,
        })
    }
}

/// Symbolic expression node. The variant order defines the canonical sort
/// order used inside sums and products; do not reorder.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Expr {
    /// Exact rational constant.
    Rational(Rational),
    /// Parameter symbol (weights, biases, equation constants).
    Symbol(String),
    /// Independent variable.
    Var(String),
    /// phi-atom: the auxiliary-equation solution applied to a registered
    /// affine argument, treated as an algebraic indeterminate.
    Phi(u32),
    /// Elementary function application.
    Func(FuncKind, Box<Expr>),
    /// Integer power, exponent never 0 or 1 in canonical form.
    Pow(Box<Expr>, i64),
    /// Flattened product; first factor may be the rational coefficient.
    Product(Vec<Expr>),
    /// Flattened sum of non-sum terms.
    Sum(Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExprError {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("integer exponent overflow")]
    ExponentOverflow,
    #[error("sum power {0} too large to expand")]
    PowerTooLarge(i64),
}

impl Expr {
    pub fn int(n: i64) -> Expr {
        Expr::Rational(Rational::from_integer(n.into()))
    }

    pub fn ratio(num: i64, den: i64) -> Expr {
        Expr::Rational(Rational::new(num.into(), den.into()))
    }

    pub fn sym(name: impl Into<String>) -> Expr {
        Expr::Symbol(name.into())
    }

    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn phi(index: u32) -> Expr {
        Expr::Phi(index)
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Rational(r) if r == &Rational::from_integer(0.into()))
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expr::Rational(r) if r == &Rational::from_integer(1.into()))
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            Expr::Rational(r) => Some(r),
            _ => None,
        }
    }

    /// Terms of a canonical expression viewed as a sum.
    pub fn terms(&self) -> &[Expr] {
        match self {
            Expr::Sum(ts) => ts,
            other => std::slice::from_ref(other),
        }
    }

    /// Names of all `Symbol` nodes in the tree.
    pub fn symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |e| {
            if let Expr::Symbol(s) = e {
                out.insert(s.clone());
            }
        });
        out
    }

    /// Names of all `Var` nodes in the tree.
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |e| {
            if let Expr::Var(v) = e {
                out.insert(v.clone());
            }
        });
        out
    }

    /// Indices of all phi-atoms in the tree.
    pub fn phi_atoms(&self) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        self.walk(&mut |e| {
            if let Expr::Phi(i) = e {
                out.insert(*i);
            }
        });
        out
    }

    pub fn contains(&self, needle: &Expr) -> bool {
        let mut found = false;
        self.walk(&mut |e| {
            if e == needle {
                found = true;
            }
        });
        found
    }

    /// Number of nodes in the tree; a cheap complexity measure.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_| n += 1);
        n
    }

    fn walk(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Func(_, a) => a.walk(f),
            Expr::Pow(b, _) => b.walk(f),
            Expr::Product(es) | Expr::Sum(es) => {
                for e in es {
                    e.walk(f);
                }
            }
            _ => {}
        }
    }

    /// Total degree in phi-atoms: max over terms of the sum of phi exponents.
    /// `None` when no phi-atom occurs.
    pub fn phi_total_degree(&self) -> Option<i64> {
        let mut best: Option<i64> = None;
        for term in self.terms() {
            let mut deg = 0i64;
            let mut has = false;
            for (base, k) in factor_iter(term) {
                match base {
                    Expr::Phi(_) => {
                        deg += k;
                        has = true;
                    }
                    _ => {
                        if !base.phi_atoms().is_empty() {
                            // phi buried inside a denominator or function
                            // argument does not contribute a полynomial degree.
                            has = true;
                        }
                    }
                }
            }
            if has {
                best = Some(best.map_or(deg, |b| b.max(deg)));
            }
        }
        best
    }
}

/// Iterate a canonical term's factors as `(base, exponent)` pairs, skipping
/// the rational coefficient.
pub fn factor_iter(term: &Expr) -> Vec<(&Expr, i64)> {
    fn push<'a>(out: &mut Vec<(&'a Expr, i64)>, f: &'a Expr) {
        match f {
            Expr::Rational(_) => {}
            Expr::Pow(b, k) => out.push((b.as_ref(), *k)),
            other => out.push((other, 1)),
        }
    }
    let mut out = Vec::new();
    match term {
        Expr::Product(fs) => {
            for f in fs {
                push(&mut out, f);
            }
        }
        other => push(&mut out, other),
    }
    out
}

/// Split a canonical non-sum term into its rational coefficient and the
/// remaining monomial (1 when the term is purely rational).
pub fn split_coeff(term: &Expr) -> (Rational, Expr) {
    match term {
        Expr::Rational(r) => (r.clone(), Expr::one()),
        Expr::Product(fs) => {
            if let Some(Expr::Rational(r)) = fs.first() {
                let rest: Vec<Expr> = fs[1..].to_vec();
                let mono = if rest.len() == 1 {
                    rest.into_iter().next().unwrap()
                } else {
                    Expr::Product(rest)
                };
                (r.clone(), mono)
            } else {
                (Rational::from_integer(1.into()), term.clone())
            }
        }
        _ => (Rational::from_integer(1.into()), term.clone()),
    }
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", render(self))
    }
}

/// Render in the canonical text syntax accepted by the parser.
pub fn render(e: &Expr) -> String {
    match e {
        Expr::Sum(ts) => {
            let mut out = String::new();
            for (i, t) in ts.iter().enumerate() {
                let (neg, body) = render_signed_term(t);
                if i == 0 {
                    if neg {
                        out.push('-');
                    }
                    out.push_str(&body);
                } else {
                    out.push_str(if neg { " - " } else { " + " });
                    out.push_str(&body);
                }
            }
            out
        }
        _ => {
            let (neg, body) = render_signed_term(e);
            if neg {
                format!("-{body}")
            } else {
                body
            }
        }
    }
}

/// Render a non-sum term as (is_negative, magnitude_text).
fn render_signed_term(t: &Expr) -> (bool, String) {
    match t {
        Expr::Rational(r) => {
            let neg = r < &Rational::from_integer(0.into());
            let a = if neg { -r.clone() } else { r.clone() };
            if a.is_integer() {
                (neg, a.numer().to_string())
            } else {
                (neg, format!("{}/{}", a.numer(), a.denom()))
            }
        }
        Expr::Symbol(s) => (false, s.clone()),
        Expr::Var(v) => (false, v.clone()),
        Expr::Phi(i) => (false, format!("phi{i}")),
        Expr::Func(k, a) => (false, format!("{}({})", k.name(), render(a))),
        Expr::Pow(b, k) => {
            if *k < 0 {
                (false, format!("1/{}", render_pow(b, -k)))
            } else {
                (false, render_pow(b, *k))
            }
        }
        Expr::Product(fs) => render_product(fs),
        Expr::Sum(_) => (false, format!("({})", render(t))),
    }
}

fn render_pow(base: &Expr, k: i64) -> String {
    let b = match base {
        Expr::Symbol(_) | Expr::Var(_) | Expr::Phi(_) | Expr::Func(..) => render(base),
        _ => format!("({})", render(base)),
    };
    if k == 1 {
        b
    } else {
        format!("{b}^{k}")
    }
}

fn render_product(fs: &[Expr]) -> (bool, String) {
    let one = Rational::from_integer(1.into());
    let mut coeff = one.clone();
    let mut num: Vec<String> = Vec::new();
    let mut den: Vec<String> = Vec::new();
    for f in fs {
        match f {
            Expr::Rational(r) => coeff = r.clone(),
            Expr::Pow(b, k) if *k < 0 => den.push(render_pow(b, -k)),
            Expr::Pow(b, k) => num.push(render_pow(b, *k)),
            other => num.push(render_pow(other, 1)),
        }
    }
    let neg = coeff < Rational::from_integer(0.into());
    let coeff = if neg { -coeff } else { coeff };
    if coeff.numer() != &1.into() || (num.is_empty() && den.is_empty()) {
        num.insert(0, coeff.numer().to_string());
    }
    if coeff.denom() != &1.into() {
        den.insert(0, coeff.denom().to_string());
    }
    let num_str = if num.is_empty() {
        "1".to_string()
    } else {
        num.join("*")
    };
    if den.is_empty() {
        (neg, num_str)
    } else if den.len() == 1 {
        (neg, format!("{num_str}/{}", den[0]))
    } else {
        (neg, format!("{num_str}/({})", den.join("*")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplify::{add, mul, pow};

    #[test]
    fn rendering_matches_paper_style() {
        // w4u / (2*b*w24)
        let e = mul(vec![
            Expr::ratio(1, 2),
            Expr::sym("w4u"),
            pow(Expr::sym("b"), -1).unwrap(),
            pow(Expr::sym("w24"), -1).unwrap(),
        ]);
        assert_eq!(render(&e), "w4u/(2*b*w24)");

        let e = add(vec![
            mul(vec![Expr::int(2), Expr::var("x")]),
            Expr::int(3),
        ]);
        assert_eq!(render(&e), "3 + 2*x");

        let e = pow(Expr::var("x"), -1).unwrap();
        assert_eq!(render(&e), "1/x");
    }
}
