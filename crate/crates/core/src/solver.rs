//! Search for parameter assignments annihilating an algebraic system.
//!
//! Strategy: enumerate bounded subsets of network symbols set to zero, then
//! triangularize each branch by factor splits, linear eliminations, and
//! symbolic quadratics, verifying every emitted family against the original
//! system. The search is deterministic: all state lives in ordered
//! containers, subsets are enumerated in canonical order, and the budget is
//! a node count rather than wall time.

use crate::bindings::{substitute, Binding, BindingSet};
use crate::expr::{factor_iter, Expr};
use crate::network::TrialFunction;
use crate::simplify::{add, as_quadratic_in, div, mul, neg, perfect_sqrt, pow, sub};
use crate::system::{clear_denominators, normalize_equation, AlgebraicSystem};
use num::Zero;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Bounds on the solver's case analysis.
#[derive(Clone, Debug)]
pub struct SearchBudget {
    /// Largest subset of symbols zeroed up front.
    pub max_zeros: usize,
    /// Maximum case-split depth inside one branch.
    pub max_depth: usize,
    /// Total number of search states expanded before giving up.
    pub max_nodes: usize,
    /// Largest replacement expression (in tree nodes) a triangularization
    /// step may introduce; larger eliminations abandon the branch.
    pub max_replacement_size: usize,
    /// Largest equation (in terms) tolerated after a substitution.
    pub max_equation_terms: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_zeros: 4,
            max_depth: 6,
            max_nodes: 400_000,
            max_replacement_size: 400,
            max_equation_terms: 800,
        }
    }
}

/// A verified parameter assignment: solved symbols (in terms of the free
/// ones), the free symbols, and the nonzero side conditions it relies on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolutionFamily {
    pub assignment: Vec<Binding>,
    pub free: BTreeSet<String>,
    pub conditions: Vec<Expr>,
    /// True when the instantiated trial function is constant in every
    /// independent variable.
    pub degenerate: bool,
}

impl SolutionFamily {
    pub fn binding_set(&self) -> BindingSet {
        BindingSet::new(self.assignment.iter().cloned()).expect("validated assignment")
    }

    /// Symbols this family pins to literal zero.
    pub fn zeroed(&self) -> BTreeSet<String> {
        self.assignment
            .iter()
            .filter(|b| b.replacement.is_zero())
            .filter_map(|b| match &b.target {
                Expr::Symbol(s) => Some(s.clone()),
                _ => None,
            })
            .collect()
    }

    /// Render in brace-list style: one `symbol = expression` line per solved
    /// symbol, then free symbols and nonzero conditions.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for b in &self.assignment {
            out.push_str(&format!("{} = {}\n", b.target, b.replacement));
        }
        if !self.free.is_empty() {
            let frees: Vec<&str> = self.free.iter().map(|s| s.as_str()).collect();
            out.push_str(&format!("free: {}\n", frees.join(", ")));
        }
        for c in &self.conditions {
            out.push_str(&format!("nonzero: {c}\n"));
        }
        if self.degenerate {
            out.push_str("degenerate: true\n");
        }
        out
    }
}

impl fmt::Display for SolutionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

/// Per-equation verification outcome.
#[derive(Clone, Debug)]
pub struct VerificationReport {
    /// (original equation, substituted-and-simplified value)
    pub residuals: Vec<(Expr, Expr)>,
    /// Assumptions or conditions the assignment annihilates.
    pub violated: Vec<Expr>,
    pub pass: bool,
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (eq, res) in &self.residuals {
            let status = if res.is_zero() { "ok " } else { "FAIL" };
            writeln!(f, "[{status}] {eq} -> {res}")?;
        }
        for v in &self.violated {
            writeln!(f, "[FAIL] annihilated assumption: {v}")?;
        }
        writeln!(f, "verdict: {}", if self.pass { "PASS" } else { "FAIL" })
    }
}

/// Substitute a family into every equation and assumption of the system.
/// Passes iff every equation becomes literal zero and no assumption or
/// condition becomes identically zero.
pub fn verify_assignment(sys: &AlgebraicSystem, fam: &SolutionFamily) -> VerificationReport {
    let bs = fam.binding_set();
    let mut residuals = Vec::new();
    let mut pass = true;
    for eq in &sys.equations {
        let res = match substitute(eq, &bs) {
            Ok(r) => r,
            Err(e) => {
                pass = false;
                residuals.push((eq.clone(), Expr::sym(format!("<error: {e}>"))));
                continue;
            }
        };
        if !res.is_zero() {
            pass = false;
        }
        residuals.push((eq.clone(), res));
    }
    let mut violated = Vec::new();
    for entry in sys.assumptions.iter().chain(fam.conditions.iter()) {
        let base = AlgebraicSystem::assumption_base(entry);
        match substitute(base, &bs) {
            Ok(r) if r.is_zero() => violated.push(entry.clone()),
            Ok(_) => {}
            Err(_) => violated.push(entry.clone()),
        }
    }
    if !violated.is_empty() {
        pass = false;
    }
    VerificationReport {
        residuals,
        violated,
        pass,
    }
}

/// Solver output; `complete` is false when any budget bound was hit or a
/// branch was abandoned with unsolved equations.
#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub families: Vec<SolutionFamily>,
    pub complete: bool,
}

// ---------------------------------------------------------------------------
// Search state
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
struct State {
    bindings: BTreeMap<String, Expr>,
    equations: Vec<Expr>,
    /// Nonzero constraints, factored into irreducible-ish parts.
    conditions: BTreeSet<Expr>,
    depth: usize,
}

impl State {
    fn key(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        for (t, r) in &self.bindings {
            let _ = write!(s, "{t}={r};");
        }
        s.push('|');
        for eq in &self.equations {
            let _ = write!(s, "{eq};");
        }
        s.push('|');
        for c in &self.conditions {
            let _ = write!(s, "{c};");
        }
        s
    }
}

/// Split a polynomial into its monomial content symbols and the residual
/// core polynomial: `e = rational * prod(sym_i^k) * core`.
fn monomial_content(e: &Expr) -> (Vec<Expr>, Expr) {
    let terms = e.terms();
    if terms.is_empty() {
        return (Vec::new(), e.clone());
    }
    // Exponent of each base common to all terms.
    let mut common: BTreeMap<Expr, i64> = BTreeMap::new();
    for (base, k) in factor_iter(&terms[0]) {
        common.insert(base.clone(), k);
    }
    for t in &terms[1..] {
        let mut present: BTreeMap<&Expr, i64> = BTreeMap::new();
        for (base, k) in factor_iter(t) {
            present.insert(base, k);
        }
        common.retain(|base, k| match present.get(base) {
            Some(&k2) => {
                *k = (*k).min(k2);
                *k > 0
            }
            None => false,
        });
    }
    if common.is_empty() {
        return (Vec::new(), e.clone());
    }
    let mut inv = Vec::new();
    let mut factors = Vec::new();
    for (base, k) in &common {
        factors.push(base.clone());
        inv.push(pow(base.clone(), -k).expect("nonzero power"));
    }
    inv.push(e.clone());
    let core = normalize_equation(&mul(inv));
    (factors, core)
}

/// Coefficients of `e` as a polynomial in the symbol `s`, ascending degree.
/// `None` when `s` occurs non-polynomially or above `max_degree`.
fn poly_coeffs(e: &Expr, s: &Expr, max_degree: i64) -> Option<Vec<Expr>> {
    let mut by_deg: BTreeMap<i64, Vec<Expr>> = BTreeMap::new();
    let mut top = 0i64;
    for term in e.terms() {
        let mut deg = 0i64;
        for (base, k) in factor_iter(term) {
            if base == s {
                if k < 0 {
                    return None;
                }
                deg += k;
            } else if base.contains(s) {
                return None;
            }
        }
        if deg > max_degree {
            return None;
        }
        top = top.max(deg);
        let reduced = div(term.clone(), pow(s.clone(), deg).ok()?).ok()?;
        by_deg.entry(deg).or_default().push(reduced);
    }
    let mut out = vec![Expr::zero(); (top + 1) as usize];
    for (deg, parts) in by_deg {
        out[deg as usize] = add(parts);
    }
    while out.len() > 1 && out.last().map_or(false, |c| c.is_zero()) {
        out.pop();
    }
    Some(out)
}

fn poly_to_expr(coeffs: &[Expr], s: &Expr) -> Expr {
    add(coeffs.iter().enumerate().map(|(i, c)| {
        mul(vec![c.clone(), pow(s.clone(), i as i64).expect("non-negative power")])
    }))
}

/// Pseudo-remainder of `a` by `b` with respect to `s`. The result is an
/// element of the ideal generated by `a` and `b`, with strictly smaller
/// degree in `s` than `b`. Returns `None` when either input is not a small
/// polynomial in `s` or the intermediate expressions blow past `max_terms`.
fn pseudo_remainder(a: &Expr, b: &Expr, s: &Expr, max_terms: usize) -> Option<Expr> {
    const MAX_PREM_DEGREE: i64 = 8;
    let pa = poly_coeffs(a, s, MAX_PREM_DEGREE)?;
    let pb = poly_coeffs(b, s, MAX_PREM_DEGREE)?;
    let db = pb.len() - 1;
    if db == 0 {
        return None;
    }
    let lb = pb[db].clone();
    let mut r = pa;
    let mut guard = 0;
    while r.len() - 1 >= db && !(r.len() == 1 && r[0].is_zero()) {
        guard += 1;
        if guard > 2 * MAX_PREM_DEGREE {
            return None;
        }
        let dr = r.len() - 1;
        let lr = r[dr].clone();
        // r <- lb*r - lr*s^(dr-db)*b, cancelling the leading term exactly.
        let shift = dr - db;
        let mut next = vec![Expr::zero(); dr.max(db + shift) + 1];
        for (i, c) in r.iter().enumerate() {
            next[i] = mul(vec![lb.clone(), c.clone()]);
        }
        for (i, c) in pb.iter().enumerate() {
            let scaled = mul(vec![Expr::int(-1), lr.clone(), c.clone()]);
            next[i + shift] = add(vec![next[i + shift].clone(), scaled]);
        }
        while next.len() > 1 && next.last().map_or(false, |c| c.is_zero()) {
            next.pop();
        }
        if next.iter().map(|c| c.terms().len()).sum::<usize>() > max_terms {
            return None;
        }
        if next.len() - 1 >= dr && !(next.len() == 1 && next[0].is_zero()) {
            // Degree failed to drop; bail out.
            return None;
        }
        r = next;
    }
    Some(poly_to_expr(&r, s))
}

/// Nonzero-condition normal form: factor out monomial symbol parts so each
/// condition is either a bare symbol or an irreducible-ish core polynomial.
fn condition_parts(e: &Expr) -> Vec<Expr> {
    if e.as_rational().is_some() {
        return Vec::new();
    }
    let (mut parts, core) = monomial_content(e);
    if core.as_rational().is_none() {
        parts.push(core);
    }
    parts
}

struct Search<'a> {
    sys: &'a AlgebraicSystem,
    budget: &'a SearchBudget,
    zeroable: Vec<String>,
    protected: &'a BTreeSet<String>,
    visited: BTreeSet<String>,
    emitted: BTreeMap<String, SolutionFamily>,
    nodes: usize,
    complete: bool,
}

impl<'a> Search<'a> {
    /// Apply one binding, substituting into equations, prior bindings, and
    /// conditions. Returns `None` when the branch dies (a contradiction, an
    /// annihilated condition, or an annihilated system assumption).
    fn bind(&mut self, state: &State, sym: &str, replacement: Expr) -> Option<State> {
        if replacement.size() > self.budget.max_replacement_size {
            self.complete = false;
            return None;
        }
        self.bind_inner(state, sym, replacement)
    }

    fn bind_inner(&mut self, state: &State, sym: &str, replacement: Expr) -> Option<State> {
        let target = Expr::sym(sym);
        debug_assert!(!state.bindings.contains_key(sym));
        let set = BindingSet::new(vec![Binding {
            target: target.clone(),
            replacement: replacement.clone(),
        }])
        .ok()?;

        let mut next = State {
            bindings: BTreeMap::new(),
            equations: Vec::new(),
            conditions: BTreeSet::new(),
            depth: state.depth,
        };
        // Keep earlier replacements expressed in free symbols only.
        for (t, r) in &state.bindings {
            let r2 = if r.contains(&target) {
                substitute(r, &set).ok()?
            } else {
                r.clone()
            };
            next.bindings.insert(t.clone(), r2);
        }
        next.bindings.insert(sym.to_string(), replacement);

        let mut eqs: BTreeSet<Expr> = BTreeSet::new();
        for eq in &state.equations {
            if !eq.contains(&target) {
                eqs.insert(eq.clone());
                continue;
            }
            let s = substitute(eq, &set).ok()?;
            // Clearing may be needed when the replacement is a quotient.
            let (numer, cleared) = clear_denominators(&s).ok()?;
            for c in cleared {
                for part in condition_parts(AlgebraicSystem::assumption_base(&c)) {
                    next.conditions.insert(part);
                }
            }
            if numer.is_zero() {
                continue;
            }
            if numer.as_rational().is_some() {
                return None; // nonzero constant: contradiction
            }
            if numer.terms().len() > self.budget.max_equation_terms {
                self.complete = false;
                return None;
            }
            eqs.insert(normalize_equation(&numer));
        }
        next.equations = eqs.into_iter().collect();

        for cond in &state.conditions {
            if !cond.contains(&target) {
                next.conditions.insert(cond.clone());
                continue;
            }
            let s = substitute(cond, &set).ok()?;
            if s.is_zero() {
                return None;
            }
            for part in condition_parts(&s) {
                next.conditions.insert(part);
            }
        }
        // System assumptions must stay nontrivial under the accumulated
        // bindings.
        let all = BindingSet::new(
            next.bindings
                .iter()
                .map(|(t, r)| Binding {
                    target: Expr::sym(t.clone()),
                    replacement: r.clone(),
                })
                .collect::<Vec<_>>(),
        )
        .ok()?;
        for entry in &self.sys.assumptions {
            let base = AlgebraicSystem::assumption_base(entry);
            let s = substitute(base, &all).ok()?;
            if s.is_zero() {
                return None;
            }
        }
        Some(next)
    }

    fn emit(&mut self, state: &State) {
        let assignment: Vec<Binding> = state
            .bindings
            .iter()
            .map(|(t, r)| Binding {
                target: Expr::sym(t.clone()),
                replacement: r.clone(),
            })
            .collect();
        let bound: BTreeSet<String> = state.bindings.keys().cloned().collect();
        let free: BTreeSet<String> = self
            .sys
            .symbols()
            .difference(&bound)
            .cloned()
            .collect();
        let fam = SolutionFamily {
            assignment,
            free,
            conditions: state.conditions.iter().cloned().collect(),
            degenerate: false,
        };
        let report = verify_assignment(self.sys, &fam);
        if !report.pass {
            // A candidate that fails re-verification indicates an unsound
            // move; drop it rather than emit an invalid family.
            debug_assert!(false, "solver emitted non-verifying candidate:\n{report}");
            return;
        }
        let key = fam.render();
        self.emitted.entry(key).or_insert(fam);
    }

    /// Count of equations mentioning each symbol, for the elimination order.
    fn occurrence_order(&self, state: &State) -> Vec<String> {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for eq in &state.equations {
            for s in eq.symbols() {
                *counts.entry(s).or_insert(0) += 1;
            }
        }
        let mut syms: Vec<(usize, String)> =
            counts.into_iter().map(|(s, c)| (c, s)).collect();
        // Most occurrences first; ties in canonical symbol order.
        syms.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        syms.into_iter().map(|(_, s)| s).collect()
    }

    fn explore(&mut self, state: State) {
        if self.nodes >= self.budget.max_nodes {
            self.complete = false;
            return;
        }
        self.nodes += 1;
        let _trace_start = std::time::Instant::now();
        let _trace_id = self.nodes;

        // Depth-free triangularization: repeatedly eliminate symbols that
        // occur linearly. Leading coefficients are recorded as nonzero
        // conditions; the vanishing-coefficient cases are reached instead
        // through zero subsets and monomial splits.
        let mut state = state;
        'reduce: loop {
            let order = self.occurrence_order(&state);
            // Pass 1: linear with nonzero rational coefficient (no side
            // condition needed).
            for sym in &order {
                let target = Expr::sym(sym.clone());
                for eq in &state.equations {
                    let Some((a2, a1, a0)) = as_quadratic_in(eq, &target) else {
                        continue;
                    };
                    if a2.is_zero() && !a1.is_zero() && a1.as_rational().is_some() {
                        let replacement = neg(div(a0, a1).expect("nonzero rational"));
                        if self.protected.contains(sym) && replacement.is_zero() {
                            continue;
                        }
                        match self.bind(&state, sym, replacement) {
                            Some(next) => {
                                state = next;
                                continue 'reduce;
                            }
                            None => return,
                        }
                    }
                }
            }
            break;
        }

        let key = state.key();
        if std::env::var("AENNM_SOLVE_TRACE").is_ok() {
            let terms: usize = state.equations.iter().map(|e| e.terms().len()).sum();
            eprintln!(
                "[node {}] depth={} bound={} eqs={} terms={} reduce_time={:?}",
                _trace_id, state.depth, state.bindings.len(), state.equations.len(), terms,
                _trace_start.elapsed()
            );
        }
        if !self.visited.insert(key) {
            return;
        }

        if state.equations.is_empty() {
            self.emit(&state);
            return;
        }
        if state.depth >= self.budget.max_depth {
            self.complete = false;
            return;
        }

        // Split move 1: an equation with nontrivial monomial content. One
        // child per zeroable content symbol, plus the all-nonzero core
        // branch.
        for eq in &state.equations.clone() {
            let (content, core) = monomial_content(eq);
            if content.is_empty() {
                continue;
            }
            let mut children: Vec<State> = Vec::new();
            let mut splittable = Vec::new();
            for factor in &content {
                let name = match factor {
                    Expr::Symbol(s) => s.clone(),
                    _ => continue,
                };
                if self.protected.contains(&name) || state.conditions.contains(factor) {
                    continue;
                }
                splittable.push(name);
            }
            // Core branch: all content factors nonzero, equation reduces.
            let core_is_contradiction = core.as_rational().map_or(false, |r| !r.is_zero());
            if !core_is_contradiction {
                // Factoring out nonzeros is not a case split; no depth cost.
                let mut next = state.clone();
                for factor in &content {
                    for part in condition_parts(factor) {
                        next.conditions.insert(part);
                    }
                }
                next.equations.retain(|e| e != eq);
                if core.as_rational().is_none() {
                    next.equations.push(normalize_equation(&core));
                    next.equations.sort();
                    next.equations.dedup();
                }
                children.push(next);
            } else if splittable.is_empty() {
                // Monomial of protected/conditioned symbols equal to zero:
                // dead branch.
                return;
            }
            for name in splittable {
                let mut next_depth = state.clone();
                next_depth.depth += 1;
                if let Some(child) = self.bind(&next_depth, &name, Expr::zero()) {
                    children.push(child);
                }
            }
            for child in children {
                self.explore(child);
            }
            return;
        }

        // Move 2: linear elimination with a symbolic leading coefficient,
        // recorded as a nonzero condition. Runs only when no monomial split
        // applies, so the vanishing-coefficient cases are reached through
        // zero subsets and splits instead of a side branch. Skips equations
        // the symbol divides outright (a0 = 0): those are split territory.
        // Among all candidates the smallest replacement expression wins,
        // which keeps the triangularization close to the hand-derived form.
        {
            let mut best: Option<(usize, String, Expr, Expr)> = None;
            for sym in self.occurrence_order(&state) {
                let target = Expr::sym(sym.clone());
                for eq in &state.equations {
                    let Some((a2, a1, a0)) = as_quadratic_in(eq, &target) else {
                        continue;
                    };
                    if !a2.is_zero() || a1.is_zero() || a0.is_zero() {
                        continue;
                    }
                    let Ok(replacement) = div(neg(a0), a1.clone()) else {
                        continue;
                    };
                    if self.protected.contains(&sym) && replacement.is_zero() {
                        continue;
                    }
                    let size = replacement.size();
                    if size > self.budget.max_replacement_size {
                        continue;
                    }
                    if best.as_ref().map_or(true, |(s, _, _, _)| size < *s) {
                        best = Some((size, sym.clone(), a1.clone(), replacement));
                    }
                }
            }
            if let Some((_, sym, a1, replacement)) = best {
                let mut with_cond = state.clone();
                for part in condition_parts(&a1) {
                    with_cond.conditions.insert(part);
                }
                if let Some(next) = self.bind(&with_cond, &sym, replacement) {
                    self.explore(next);
                }
                return;
            }
        }

        // Move 3: pseudo-remainder reduction. For each symbol shared by two
        // equations at degree >= 1, the smallest pair's pseudo-remainder is
        // a new ideal element of lower degree; adding these often unlocks a
        // linear or quadratic elimination the pair alone cannot provide.
        if state.equations.len() < 48 {
            let mut fresh: Vec<Expr> = Vec::new();
            for sym in self.occurrence_order(&state) {
                let target = Expr::sym(sym.clone());
                let mut candidates: Vec<(usize, usize, &Expr)> = Vec::new();
                for eq in &state.equations {
                    if let Some(coeffs) = poly_coeffs(eq, &target, 8) {
                        if coeffs.len() >= 2 {
                            candidates.push((coeffs.len() - 1, eq.terms().len(), eq));
                        }
                    }
                }
                if candidates.len() < 2 {
                    continue;
                }
                candidates.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.cmp(&y.1)));
                let divisor = candidates[0].2.clone();
                let dividend = candidates[1].2.clone();
                let Some(r) = pseudo_remainder(
                    &dividend,
                    &divisor,
                    &target,
                    self.budget.max_equation_terms,
                ) else {
                    continue;
                };
                if r.is_zero() {
                    continue;
                }
                if r.as_rational().is_some() {
                    // Nonzero constant in the ideal: contradiction.
                    return;
                }
                let r = normalize_equation(&r);
                if !state.equations.contains(&r) && !fresh.contains(&r) {
                    fresh.push(r);
                }
            }
            if !fresh.is_empty() {
                let mut next = state.clone();
                next.equations.extend(fresh);
                next.equations.sort();
                next.equations.dedup();
                self.explore(next);
                return;
            }
        }

        // Move 4: symbolic quadratic, both roots. The discriminant
        // root is exact when it is a perfect square; otherwise it stays a
        // sqrt atom.
        for sym in self.occurrence_order(&state) {
            let target = Expr::sym(sym.clone());
            for eq in &state.equations.clone() {
                let Some((a2, a1, a0)) = as_quadratic_in(eq, &target) else {
                    continue;
                };
                if a2.is_zero() {
                    continue;
                }
                let disc = sub(
                    mul(vec![a1.clone(), a1.clone()]),
                    mul(vec![Expr::int(4), a2.clone(), a0.clone()]),
                );
                let root = match perfect_sqrt(&disc) {
                    Some(r) => r,
                    None => {
                        if disc.is_zero() {
                            Expr::zero()
                        } else {
                            crate::simplify::func(crate::expr::FuncKind::Sqrt, disc.clone())
                        }
                    }
                };
                let two_a = mul(vec![Expr::int(2), a2.clone()]);
                let mut numers: Vec<Expr> = vec![
                    add(vec![neg(a1.clone()), root.clone()]),
                    sub(neg(a1.clone()), root.clone()),
                ];
                numers.dedup();
                let mut children = Vec::new();
                for numer in numers {
                    let mut next = state.clone();
                    next.depth += 1;
                    for part in condition_parts(&a2) {
                        next.conditions.insert(part);
                    }
                    let replacement = match div(numer, two_a.clone()) {
                        Ok(r) => r,
                        Err(_) => continue,
                    };
                    if self.protected.contains(&sym) && replacement.is_zero() {
                        continue;
                    }
                    if let Some(child) = self.bind(&next, &sym, replacement) {
                        children.push(child);
                    }
                }
                for child in children {
                    self.explore(child);
                }
                return;
            }
        }

        // No move applies: abandon the branch.
        self.complete = false;
    }
}

/// Enumerate zero subsets and triangularize each branch. Every returned
/// family re-verifies against `sys`; the list is deterministic for a given
/// budget.
pub fn solve(sys: &AlgebraicSystem, budget: &SearchBudget) -> SolveOutcome {
    let symbols = sys.symbols();
    let zeroable: Vec<String> = symbols
        .iter()
        .filter(|s| !sys.protected.contains(*s))
        .cloned()
        .collect();

    let mut search = Search {
        sys,
        budget,
        zeroable: zeroable.clone(),
        protected: &sys.protected,
        visited: BTreeSet::new(),
        emitted: BTreeMap::new(),
        nodes: 0,
        complete: true,
    };

    let base = State {
        bindings: BTreeMap::new(),
        equations: sys
            .equations
            .iter()
            .map(normalize_equation)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect(),
        conditions: BTreeSet::new(),
        depth: 0,
    };

    let n = search.zeroable.len();
    let max_zeros = budget.max_zeros.min(n);
    for size in 0..=max_zeros {
        // Enumerate size-`size` subsets in lexicographic index order.
        let mut indices: Vec<usize> = (0..size).collect();
        loop {
            if search.nodes >= budget.max_nodes {
                search.complete = false;
                break;
            }
            // Build the start state for this subset.
            let mut state = Some(base.clone());
            for &i in &indices {
                let name = zeroable[i].clone();
                state = state.and_then(|s| search.bind(&s, &name, Expr::zero()));
            }
            if let Some(mut s) = state {
                s.depth = 0;
                search.explore(s);
            }
            // Next combination.
            if size == 0 {
                break;
            }
            let mut i = size;
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                if indices[i] != i + n - size {
                    indices[i] += 1;
                    for j in i + 1..size {
                        indices[j] = indices[j - 1] + 1;
                    }
                    break;
                }
                if i == 0 {
                    indices.clear();
                    break;
                }
            }
            if indices.is_empty() {
                break;
            }
        }
        if search.nodes >= budget.max_nodes {
            break;
        }
    }

    let nodes_used = search.nodes;
    let visited_count = search.visited.len();
    let search_complete = search.complete;
    let families: Vec<SolutionFamily> = search.emitted.into_values().collect();
    let families = prune_instances(families);
    if std::env::var("AENNM_SOLVE_DEBUG").is_ok() {
        eprintln!("[solve] nodes={} visited={} complete={}", nodes_used, visited_count, search_complete);
    }
    SolveOutcome {
        families,
        complete: search_complete,
    }
}

/// Whether `special` is an instance of `general`: every binding of the
/// general family holds identically under the special family's assignment,
/// and none of the general family's conditions vanish there.
fn is_instance_of(special: &SolutionFamily, general: &SolutionFamily) -> bool {
    let bs = special.binding_set();
    for b in &general.assignment {
        let lhs = match substitute(&b.target, &bs) {
            Ok(v) => v,
            Err(_) => return false,
        };
        let rhs = match substitute(&b.replacement, &bs) {
            Ok(v) => v,
            Err(_) => return false,
        };
        if lhs != rhs {
            return false;
        }
    }
    for c in &general.conditions {
        match substitute(c, &bs) {
            Ok(v) if v.is_zero() => return false,
            Ok(_) => {}
            Err(_) => return false,
        }
    }
    true
}

/// Drop families that are specializations of strictly smaller families.
fn prune_instances(families: Vec<SolutionFamily>) -> Vec<SolutionFamily> {
    let mut keep = vec![true; families.len()];
    for (i, f) in families.iter().enumerate() {
        for (j, g) in families.iter().enumerate() {
            if i == j || !keep[j] {
                continue;
            }
            if g.assignment.len() < f.assignment.len() && is_instance_of(f, g) {
                keep[i] = false;
                break;
            }
        }
    }
    families
        .into_iter()
        .zip(keep)
        .filter_map(|(f, k)| k.then_some(f))
        .collect()
}

/// Mark a family degenerate when the trial function it induces is constant
/// in every independent variable.
pub fn mark_degeneracy(fam: &mut SolutionFamily, tf: &TrialFunction) {
    fam.degenerate = family_is_degenerate(fam, tf);
}

fn family_is_degenerate(fam: &SolutionFamily, tf: &TrialFunction) -> bool {
    let bs = fam.binding_set();
    let reduced = match substitute(&tf.expr, &bs) {
        Ok(r) => r,
        Err(_) => return true,
    };
    if !reduced.vars().is_empty() {
        return false;
    }
    for id in reduced.phi_atoms() {
        if let Some(arg) = tf.ctx.argument(id) {
            match substitute(arg, &bs) {
                Ok(a) => {
                    // The atom contributes wave content iff its argument
                    // still moves with some variable.
                    let moving = a
                        .terms()
                        .iter()
                        .any(|t| !t.vars().is_empty() && !t.is_zero());
                    if moving {
                        return false;
                    }
                }
                Err(_) => return true,
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_expr;
    use crate::system::collect;

    fn system_of(exprs: &[&str]) -> AlgebraicSystem {
        let eqs: Vec<Expr> = exprs.iter().map(|s| parse_expr(s).unwrap()).collect();
        AlgebraicSystem {
            equations: eqs.iter().map(normalize_equation).collect(),
            assumptions: Vec::new(),
            monomial_index: BTreeMap::new(),
            protected: BTreeSet::new(),
        }
    }

    #[test]
    fn empty_system_verifies_empty_family() {
        let sys = system_of(&[]);
        let fam = SolutionFamily {
            assignment: vec![],
            free: BTreeSet::new(),
            conditions: vec![],
            degenerate: false,
        };
        assert!(verify_assignment(&sys, &fam).pass);
    }

    #[test]
    fn factor_split_finds_both_zeros() {
        let sys = system_of(&["w13*w3u"]);
        let out = solve(&sys, &SearchBudget::default());
        assert!(out.complete);
        let zero_sets: BTreeSet<BTreeSet<String>> =
            out.families.iter().map(|f| f.zeroed()).collect();
        let expected: BTreeSet<BTreeSet<String>> = [
            ["w13".to_string()].into_iter().collect(),
            ["w3u".to_string()].into_iter().collect(),
        ]
        .into_iter()
        .collect();
        assert_eq!(zero_sets, expected);
        // Families that zero only one factor leave the other free.
        for fam in &out.families {
            assert_eq!(fam.assignment.len(), 1);
        }
    }

    #[test]
    fn inconsistent_system_yields_nothing() {
        let sys = system_of(&["1"]);
        let out = solve(&sys, &SearchBudget::default());
        assert!(out.families.is_empty());
    }

    #[test]
    fn linear_elimination() {
        // {a + 2*c, b - c} solves a and b in terms of c.
        let sys = system_of(&["a + 2*c", "b - c"]);
        let out = solve(&sys, &SearchBudget::default());
        // Two symbols eliminated in terms of the remaining free one.
        assert!(out
            .families
            .iter()
            .any(|f| f.assignment.len() == 2 && f.free.len() == 1));
        for fam in &out.families {
            assert!(verify_assignment(&sys, fam).pass);
        }
    }

    #[test]
    fn quadratic_with_perfect_square_discriminant() {
        // b4^2 - b^2*w24^2 = 0 -> b4 = ±b*w24.
        let sys = system_of(&["b4^2 - b^2*w24^2"]);
        let out = solve(&sys, &SearchBudget::default());
        for fam in &out.families {
            assert!(verify_assignment(&sys, fam).pass);
        }
        // Both square roots appear, in whichever parameterization the
        // elimination order picked (b4 = ±b*w24 or b = ±b4/w24).
        let reps: BTreeSet<(Expr, Expr)> = out
            .families
            .iter()
            .flat_map(|f| f.assignment.iter())
            .map(|b| (b.target.clone(), b.replacement.clone()))
            .collect();
        let b4_form = reps.contains(&(Expr::sym("b4"), parse_expr("b*w24").unwrap()))
            && reps.contains(&(Expr::sym("b4"), parse_expr("-b*w24").unwrap()));
        let b_form = reps.contains(&(Expr::sym("b"), parse_expr("b4/w24").unwrap()))
            && reps.contains(&(Expr::sym("b"), parse_expr("-b4/w24").unwrap()));
        assert!(b4_form || b_form, "families: {reps:?}");
    }

    #[test]
    fn protected_symbols_never_zeroed() {
        let mut sys = system_of(&["gamma*w4u"]);
        sys.protected.insert("gamma".to_string());
        let out = solve(&sys, &SearchBudget::default());
        for fam in &out.families {
            assert!(!fam.zeroed().contains("gamma"));
        }
        assert!(out.families.iter().any(|f| f.zeroed().contains("w4u")));
    }

    #[test]
    fn verification_catches_perturbation() {
        let sys = system_of(&["a - 2*c"]);
        let good = SolutionFamily {
            assignment: vec![Binding {
                target: Expr::sym("a"),
                replacement: parse_expr("2*c").unwrap(),
            }],
            free: ["c".to_string()].into_iter().collect(),
            conditions: vec![],
            degenerate: false,
        };
        assert!(verify_assignment(&sys, &good).pass);
        let bad = SolutionFamily {
            assignment: vec![Binding {
                target: Expr::sym("a"),
                replacement: parse_expr("-2*c").unwrap(),
            }],
            ..good
        };
        let report = verify_assignment(&sys, &bad);
        assert!(!report.pass);
        assert!(report.residuals.iter().any(|(_, r)| !r.is_zero()));
    }

    #[test]
    fn determinism() {
        let sys = system_of(&["w13*w3u", "a*w13 + c", "b4^2 - 4"]);
        let a = solve(&sys, &SearchBudget::default());
        let b = solve(&sys, &SearchBudget::default());
        let ra: Vec<String> = a.families.iter().map(|f| f.render()).collect();
        let rb: Vec<String> = b.families.iter().map(|f| f.render()).collect();
        assert_eq!(ra, rb);
    }

    #[test]
    fn collected_system_solves() {
        // Collect (p - q)*phi1 + r and solve: p = q, r = 0.
        let numerator = parse_expr("(p - q)*phi1 + r").unwrap();
        let sys = collect(&numerator).unwrap();
        let out = solve(&sys, &SearchBudget::default());
        assert!(out.families.iter().any(|f| {
            verify_assignment(&sys, f).pass && f.assignment.len() == 2
        }));
    }
}
