use aennm_core::bindings::{Binding, BindingSet, substitute};
use aennm_core::parse::{parse_expr, parse_network, parse_pde};
use aennm_core::system::{build_system, clear_denominators, normalize_equation};
use aennm_core::network::build_trial;
use aennm_core::simplify::as_quadratic_in;
use aennm_core::Expr;
use aennm_core::solver::{solve, SearchBudget};
use aennm_core::system::AlgebraicSystem;
use std::collections::{BTreeMap, BTreeSet};

fn main() {
    let pde = parse_pde("params alpha,beta,gamma; u(x,t); u_tt + alpha*u_xx + beta*u + gamma*u^3 = 0").unwrap();
    let net = parse_network("inputs [x,t]\nlayer1 [phi, phi^2]\nlayer2 [arg, arg^-1]").unwrap();
    let tf = build_trial(&net).unwrap();
    let sys = build_system(&pde, &tf).unwrap();
    let zeros = BindingSet::new(["w3u", "w14", "w13"].iter().map(|s| Binding {
        target: Expr::sym(*s), replacement: Expr::int(0),
    }).collect::<Vec<_>>()).unwrap();
    let mut eqs: Vec<Expr> = Vec::new();
    for eq in &sys.equations {
        let s = substitute(eq, &zeros).unwrap();
        if s.is_zero() { continue; }
        let (n, _) = clear_denominators(&s).unwrap();
        let n = normalize_equation(&n);
        if !eqs.contains(&n) { eqs.push(n); }
    }
    eqs.sort();
    let sub = AlgebraicSystem {
        equations: eqs.clone(),
        assumptions: vec![],
        monomial_index: BTreeMap::new(),
        protected: ["alpha", "beta", "gamma"].iter().map(|s| s.to_string()).collect::<BTreeSet<_>>(),
    };
    let out = solve(&sub, &SearchBudget { max_zeros: 0, ..Default::default() });
    println!("subsystem solve: {} families complete={}", out.families.len(), out.complete);
    for f in &out.families {
        println!("---\n{}", f.render());
    }
    println!("{} equations after zeros {{w3u,w14,w13}}:", eqs.len());
    for eq in &eqs {
        println!("  {eq}");
        for sym in eq.symbols() {
            let t = Expr::sym(sym.clone());
            let quad = as_quadratic_in(eq, &t).is_some();
            print!("    {sym}: quad={quad}");
        }
        println!();
    }
}
