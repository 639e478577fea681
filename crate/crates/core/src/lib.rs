//! Symbolic engine for deriving exact closed-form solutions of nonlinear
//! PDEs from network-shaped trial functions built on the Riccati auxiliary
//! equation.
//!
//! The pipeline: parse a PDE and a network description, compose the network
//! into a symbolic trial function whose first-layer activations are
//! Riccati-equation solutions, differentiate under the closure rule
//! `phi' = b + phi^2`, collect the cleared residual into a nonlinear
//! algebraic system over the network's weights and biases, solve that system
//! by case splitting and triangularization, then instantiate each solution
//! family under the five closed-form activation branches and verify the
//! result both symbolically and with an independent finite-difference
//! oracle.

pub mod bindings;
pub mod dd;
pub mod eval;
pub mod expr;
pub mod network;
pub mod parse;
pub mod riccati;
pub mod simplify;
pub mod solver;
pub mod system;

pub use bindings::{substitute, Binding, BindingError, BindingSet};
pub use dd::Dd;
pub use eval::{eval_numeric, EvalError};
pub use expr::{render, Expr, ExprError, FuncKind, Rational};
pub use network::{build_trial, free_symbols, ActivationKind, NetworkSpec, RiccatiContext, TrialFunction};
pub use parse::{parse_expr, parse_network, parse_pde, DerivAtom, ParseError, PdeSpec};
pub use riccati::{diff, diff_multi, RiccatiError};
pub use simplify::simplify;
pub use solver::{mark_degeneracy, solve, verify_assignment, SearchBudget, SolutionFamily, SolveOutcome, VerificationReport};
pub use system::{build_system, clear_denominators, collect, residual, AlgebraicSystem, SystemError};
