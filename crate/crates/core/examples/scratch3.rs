use aennm_core::bindings::{Binding, BindingSet, substitute};
use aennm_core::parse::{parse_expr, parse_network, parse_pde};
use aennm_core::system::{build_system, clear_denominators, normalize_equation};
use aennm_core::network::build_trial;
use aennm_core::simplify::{as_quadratic_in, div, neg};
use aennm_core::Expr;

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
    // Eliminate alpha using the last (smallest) equation, then beta.
    for target_name in ["alpha", "beta"] {
        let target = Expr::sym(target_name);
        let mut best: Option<(usize, Expr)> = None;
        for (i, eq) in eqs.iter().enumerate() {
            if let Some((a2, a1, _)) = as_quadratic_in(eq, &target) {
                if a2.is_zero() && !a1.is_zero() {
                    if best.as_ref().map_or(true, |(j, _)| eqs[*j].terms().len() > eq.terms().len()) {
                        best = Some((i, eq.clone()));
                    }
                }
            }
        }
        let (_, eq) = best.unwrap();
        let (_, a1, a0) = as_quadratic_in(&eq, &target).unwrap();
        let rep = neg(div(a0, a1).unwrap());
        println!("{} = {}", target_name, rep);
        let bs = BindingSet::new(vec![Binding { target, replacement: rep }]).unwrap();
        let mut next = Vec::new();
        for e in &eqs {
            let s = substitute(e, &bs).unwrap();
            if s.is_zero() { continue; }
            let (n, _) = clear_denominators(&s).unwrap();
            let n = normalize_equation(&n);
            if !next.contains(&n) { next.push(n); }
        }
        eqs = next;
        eqs.sort();
    }
    println!("\nremaining {} equations:", eqs.len());
    for eq in &eqs {
        println!("  [{} terms] {eq}", eq.terms().len());
        for sym in eq.symbols() {
            let t = Expr::sym(sym.clone());
            let q = as_quadratic_in(eq, &t).is_some();
            print!("  {sym}(quad={q})");
        }
        println!();
    }
}
