//! Canonical-form constructors and the public `simplify` entry point.
//!
//! The constructors (`add`, `mul`, `pow`, `func`) assume canonical inputs and
//! produce canonical outputs: flattened, sorted, like terms merged, products
//! distributed over sums, positive integer powers of sums expanded, rational
//! arithmetic folded exactly. `simplify` rebuilds an arbitrary tree through
//! them bottom-up.

use crate::expr::{split_coeff, Expr, ExprError, FuncKind, Rational};
use num::traits::Pow as _;
use num::{Signed, Zero};
use std::collections::BTreeMap;

fn rat_zero() -> Rational {
    Rational::from_integer(0.into())
}

fn rat_one() -> Rational {
    Rational::from_integer(1.into())
}

/// Canonical sum of canonical expressions.
pub fn add(terms: impl IntoIterator<Item = Expr>) -> Expr {
    let mut monos: BTreeMap<Expr, Rational> = BTreeMap::new();
    let mut constant = rat_zero();
    let mut stack: Vec<Expr> = terms.into_iter().collect();
    stack.reverse();
    while let Some(t) = stack.pop() {
        match t {
            Expr::Sum(ts) => {
                for s in ts.into_iter().rev() {
                    stack.push(s);
                }
            }
            Expr::Rational(r) => constant += r,
            other => {
                let (c, mono) = split_coeff(&other);
                *monos.entry(mono).or_insert_with(rat_zero) += c;
            }
        }
    }
    let mut out: Vec<Expr> = Vec::with_capacity(monos.len() + 1);
    if !constant.is_zero() {
        out.push(Expr::Rational(constant));
    }
    for (mono, c) in monos {
        if c.is_zero() {
            continue;
        }
        out.push(scale(c, mono));
    }
    out.sort();
    match out.len() {
        0 => Expr::zero(),
        1 => out.into_iter().next().unwrap(),
        _ => Expr::Sum(out),
    }
}

/// Multiply a monomial (non-sum, coefficient-free) by a rational coefficient.
fn scale(c: Rational, mono: Expr) -> Expr {
    if mono.is_one() {
        return Expr::Rational(c);
    }
    if c == rat_one() {
        return mono;
    }
    match mono {
        Expr::Product(fs) => {
            let mut v = Vec::with_capacity(fs.len() + 1);
            v.push(Expr::Rational(c));
            v.extend(fs);
            Expr::Product(v)
        }
        other => Expr::Product(vec![Expr::Rational(c), other]),
    }
}

/// Canonical product of canonical expressions. Equal bases (including sum
/// bases and their inverses) merge exponents first; surviving sums with
/// positive exponent are then expanded by distribution.
pub fn mul(factors: impl IntoIterator<Item = Expr>) -> Expr {
    // Flatten nested products.
    let mut flat: Vec<Expr> = Vec::new();
    let mut stack: Vec<Expr> = factors.into_iter().collect();
    stack.reverse();
    while let Some(f) = stack.pop() {
        match f {
            Expr::Product(fs) => {
                for g in fs.into_iter().rev() {
                    stack.push(g);
                }
            }
            other => flat.push(other),
        }
    }
    // Merge exponents across all factors so that S * S^-1 cancels before any
    // distribution could hide it.
    let mut coeff = rat_one();
    let mut bases: BTreeMap<Expr, i64> = BTreeMap::new();
    for f in flat {
        match f {
            Expr::Rational(r) => coeff *= r,
            Expr::Pow(b, k) => *bases.entry(*b).or_insert(0) += k,
            other => *bases.entry(other).or_insert(0) += 1,
        }
    }
    if coeff.is_zero() {
        return Expr::zero();
    }
    let mut rebuilt: Vec<Expr> = Vec::with_capacity(bases.len());
    let mut has_sum = false;
    let mut needs_reflatten = false;
    for (b, k) in bases {
        if k == 0 {
            continue;
        }
        // pow on a canonical non-rational base cannot hit a zero denominator.
        let p = pow(b, k).expect("non-rational base");
        match &p {
            Expr::Sum(_) => has_sum = true,
            Expr::Product(_) | Expr::Rational(_) => needs_reflatten = true,
            _ => {}
        }
        rebuilt.push(p);
    }
    if has_sum {
        rebuilt.push(Expr::Rational(coeff));
        return distribute(rebuilt);
    }
    if needs_reflatten {
        // A rebuild produced a compound factor (sqrt reduction, folded
        // rational); run the pipeline once more on the flattened parts.
        rebuilt.push(Expr::Rational(coeff));
        return mul(rebuilt);
    }
    assemble(coeff, rebuilt)
}

/// Assemble a coefficient and sorted simple factors into the final node.
fn assemble(coeff: Rational, mut factors: Vec<Expr>) -> Expr {
    factors.sort();
    if factors.is_empty() {
        return Expr::Rational(coeff);
    }
    if coeff == rat_one() {
        if factors.len() == 1 {
            return factors.into_iter().next().unwrap();
        }
        return Expr::Product(factors);
    }
    let mut out = Vec::with_capacity(factors.len() + 1);
    out.push(Expr::Rational(coeff));
    out.extend(factors);
    Expr::Product(out)
}

/// Expand a product whose factor list may contain sums.
fn distribute(factors: Vec<Expr>) -> Expr {
    let mut combos: Vec<Vec<Expr>> = vec![Vec::new()];
    for f in factors {
        match f {
            Expr::Sum(ts) => {
                let mut next = Vec::with_capacity(combos.len() * ts.len());
                for c in &combos {
                    for t in &ts {
                        let mut c2 = c.clone();
                        c2.push(t.clone());
                        next.push(c2);
                    }
                }
                combos = next;
            }
            other => {
                for c in &mut combos {
                    c.push(other.clone());
                }
            }
        }
    }
    add(combos.into_iter().map(mul))
}

/// Largest sum power expanded in place; beyond this the expansion would be
/// astronomically large and almost certainly a bug in the caller.
const MAX_SUM_POWER: i64 = 32;

/// Canonical integer power.
pub fn pow(base: Expr, k: i64) -> Result<Expr, ExprError> {
    if k == 0 {
        return Ok(Expr::one());
    }
    if k == 1 {
        return Ok(base);
    }
    match base {
        Expr::Rational(r) => {
            if r.is_zero() && k < 0 {
                return Err(ExprError::ZeroDenominator);
            }
            let ki: i32 = k.try_into().map_err(|_| ExprError::ExponentOverflow)?;
            Ok(Expr::Rational(r.pow(ki)))
        }
        Expr::Pow(b, k2) => {
            let kk = k2.checked_mul(k).ok_or(ExprError::ExponentOverflow)?;
            pow(*b, kk)
        }
        Expr::Product(fs) => {
            let parts: Result<Vec<Expr>, ExprError> =
                fs.into_iter().map(|f| pow(f, k)).collect();
            Ok(mul(parts?))
        }
        Expr::Sum(ts) => {
            if k < 0 {
                Ok(Expr::Pow(Box::new(Expr::Sum(ts)), k))
            } else {
                if k > MAX_SUM_POWER {
                    return Err(ExprError::PowerTooLarge(k));
                }
                // Expand by repeated distribution; going through `mul` here
                // would merge the bases straight back into this call.
                let base = Expr::Sum(ts);
                let mut acc = base.clone();
                for _ in 1..k {
                    acc = distribute(vec![acc, base.clone()]);
                }
                Ok(acc)
            }
        }
        Expr::Func(FuncKind::Sqrt, inner) => {
            // sqrt(e)^k: even k folds to e^(k/2); odd k leaves one sqrt.
            // Sound here because sqrt only enters under a recorded sign
            // condition on its radicand, and formal verification treats
            // sqrt(e) as an indeterminate with defining relation sqrt(e)^2=e.
            if k % 2 == 0 {
                pow(*inner, k / 2)
            } else {
                let m = (k - 1) / 2;
                let rest = pow((*inner).clone(), m)?;
                Ok(mul(vec![rest, Expr::Func(FuncKind::Sqrt, inner)]))
            }
        }
        other => Ok(Expr::Pow(Box::new(other), k)),
    }
}

/// Canonical function application.
pub fn func(kind: FuncKind, arg: Expr) -> Expr {
    if kind == FuncKind::Sqrt {
        if let Expr::Rational(r) = &arg {
            if !r.is_negative() {
                if let Some(root) = rational_sqrt(r) {
                    return Expr::Rational(root);
                }
            }
        }
    }
    Expr::Func(kind, Box::new(arg))
}

/// Exact square root of a non-negative rational, if it is a perfect square.
pub fn rational_sqrt(r: &Rational) -> Option<Rational> {
    let ns = r.numer().sqrt();
    let ds = r.denom().sqrt();
    if &(&ns * &ns) == r.numer() && &(&ds * &ds) == r.denom() {
        Some(Rational::new(ns, ds))
    } else {
        None
    }
}

/// Exact square root of a canonical expression when it is a perfect square:
/// a square rational times a monomial with even exponents. Returns the
/// principal-root representative; callers that need both signs branch on it.
pub fn perfect_sqrt(e: &Expr) -> Option<Expr> {
    match e {
        Expr::Rational(r) => {
            if r.is_negative() {
                None
            } else {
                rational_sqrt(r).map(Expr::Rational)
            }
        }
        _ => {
            let (c, mono) = split_coeff(e);
            if c.is_negative() {
                return None;
            }
            let root_c = rational_sqrt(&c)?;
            let factors = crate::expr::factor_iter(&mono);
            if factors.is_empty() && !mono.is_one() {
                return None;
            }
            let mut parts: Vec<Expr> = vec![Expr::Rational(root_c)];
            for (b, k) in factors {
                if k % 2 != 0 {
                    return None;
                }
                parts.push(pow(b.clone(), k / 2).ok()?);
            }
            Some(mul(parts))
        }
    }
}

/// Rebuild an arbitrary expression tree into canonical form.
pub fn simplify(e: &Expr) -> Result<Expr, ExprError> {
    Ok(match e {
        Expr::Rational(_) | Expr::Symbol(_) | Expr::Var(_) | Expr::Phi(_) => e.clone(),
        Expr::Func(k, a) => func(*k, simplify(a)?),
        Expr::Pow(b, k) => pow(simplify(b)?, *k)?,
        Expr::Product(fs) => {
            let parts: Result<Vec<Expr>, ExprError> = fs.iter().map(simplify).collect();
            mul(parts?)
        }
        Expr::Sum(ts) => {
            let parts: Result<Vec<Expr>, ExprError> = ts.iter().map(simplify).collect();
            add(parts?)
        }
    })
}

/// Convenience: a - b in canonical form.
pub fn sub(a: Expr, b: Expr) -> Expr {
    add(vec![a, neg(b)])
}

/// Convenience: -a in canonical form.
pub fn neg(a: Expr) -> Expr {
    mul(vec![Expr::int(-1), a])
}

/// Divide two canonical expressions; errors when `b` is the literal zero.
pub fn div(a: Expr, b: Expr) -> Result<Expr, ExprError> {
    Ok(mul(vec![a, pow(b, -1)?]))
}

/// Express a canonical expression as `coefficient * v + rest` where neither
/// part mentions `v`. Returns `None` when `e` is not affine in `v`.
pub fn as_affine_in(e: &Expr, v: &Expr) -> Option<(Expr, Expr)> {
    let mut linear: Vec<Expr> = Vec::new();
    let mut rest: Vec<Expr> = Vec::new();
    for term in e.terms() {
        let mut deg = 0i64;
        for (base, k) in crate::expr::factor_iter(term) {
            if base == v {
                deg += k;
            } else if base.contains(v) {
                return None;
            }
        }
        match deg {
            0 => rest.push(term.clone()),
            1 => linear.push(div(term.clone(), v.clone()).ok()?),
            _ => return None,
        }
    }
    Some((add(linear), add(rest)))
}

/// Coefficients `(a, b, c)` of `a*s^2 + b*s + c` in the symbol `s`, or `None`
/// when `e` has s-degree above two or `s` occurs inside a non-monomial
/// position (a function argument or a sum-denominator).
pub fn as_quadratic_in(e: &Expr, s: &Expr) -> Option<(Expr, Expr, Expr)> {
    let mut by_deg: [Vec<Expr>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for term in e.terms() {
        let mut deg = 0i64;
        for (base, k) in crate::expr::factor_iter(term) {
            if base == s {
                deg += k;
            } else if base.contains(s) {
                return None;
            }
        }
        if !(0..=2).contains(&deg) {
            return None;
        }
        let reduced = div(term.clone(), pow(s.clone(), deg).ok()?).ok()?;
        by_deg[deg as usize].push(reduced);
    }
    let [c, b, a] = by_deg;
    Some((add(a), add(b), add(c)))
}
