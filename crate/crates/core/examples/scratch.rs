use aennm_core::bindings::Binding;
use aennm_core::parse::{parse_expr, parse_network, parse_pde};
use aennm_core::solver::{solve, verify_assignment, SearchBudget, SolutionFamily};
use aennm_core::system::build_system;
use aennm_core::network::build_trial;
use aennm_core::Expr;
use std::collections::BTreeSet;
use std::time::Instant;

fn family(pairs: &[(&str, &str)], frees: &[&str]) -> SolutionFamily {
    SolutionFamily {
        assignment: pairs
            .iter()
            .map(|(t, r)| Binding {
                target: Expr::sym(*t),
                replacement: parse_expr(r).unwrap(),
            })
            .collect(),
        free: frees.iter().map(|s| s.to_string()).collect(),
        conditions: vec![],
        degenerate: false,
    }
}

fn main() {
    let pde = parse_pde("params alpha,beta,gamma; u(x,t); u_tt + alpha*u_xx + beta*u + gamma*u^3 = 0").unwrap();
    let net = parse_network("inputs [x,t]\nlayer1 [phi, phi^2]\nlayer2 [arg, arg^-1]").unwrap();
    let t0 = Instant::now();
    let tf = build_trial(&net).unwrap();
    let sys = build_system(&pde, &tf).unwrap();
    println!("system built in {:?}: {} equations, {} assumptions", t0.elapsed(), sys.equations.len(), sys.assumptions.len());
    for eq in &sys.equations {
        let s = eq.to_string();
        println!("  {}", if s.len() > 140 { &s[..140] } else { &s });
    }

    // Family (3.3)
    let fam = family(&[
        ("alpha", "-(32*b^3*w24^2*wt2^2 + gamma*w4u^2)/(32*b^3*w24^2*wx2^2)"),
        ("beta", "-gamma*w4u^2/(8*b^2*w24^2)"),
        ("b4", "-b*w24"),
        ("b5", "w4u/(2*b*w24)"),
        ("w13", "0"),
        ("w14", "0"),
        ("w3u", "0"),
    ], &["b", "b3", "w23", "w24", "w4u", "wt1", "wt2", "wx1", "wx2", "gamma"]);
    let t1 = Instant::now();
    let report = verify_assignment(&sys, &fam);
    println!("family (3.3) verification: pass={} in {:?}", report.pass, t1.elapsed());
    if !report.pass {
        for (eq, r) in &report.residuals {
            if !r.is_zero() {
                println!("NONZERO: {} -> {}", eq, r);
            }
        }
    }

    let budget = SearchBudget { max_zeros: 0, ..SearchBudget::default() };
    let t2 = Instant::now();
    let out = solve(&sys, &budget);
    println!("solve(zeros=0): {} families, complete={}, in {:?}", out.families.len(), out.complete, t2.elapsed());
    for f in &out.families {
        println!("--- family zeros={:?} bound={} free={}", f.zeroed(), f.assignment.len(), f.free.len());
        println!("{}", f.render());
    }
}
