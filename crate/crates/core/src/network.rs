//! Network architecture descriptions and feedforward composition into
//! symbolic trial functions.
//!
//! A network is a stack of fully connected hidden layers over the independent
//! variables. First-layer neurons may use powers of the auxiliary-equation
//! solution `phi` as their activation; every other neuron raises its affine
//! input to an integer power. Composing the network symbolically yields a
//! trial function polynomial (or rational) in phi-atoms whose coefficients
//! are the weight and bias symbols.

use crate::expr::{Expr, ExprError};
use crate::simplify::{add, as_affine_in, mul, pow};
use std::collections::BTreeSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActivationKind {
    /// `phi^k` of the neuron's affine input, k >= 1. First hidden layer only.
    PhiPower(u32),
    /// `(xi)^k` of the neuron's affine input, k != 0.
    ArgPower(i64),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NetworkError {
    #[error("network needs at least one hidden layer")]
    NoHiddenLayers,
    #[error("hidden layer {0} is empty")]
    EmptyLayer(usize),
    #[error("phi activation outside the first hidden layer (neuron {0})")]
    PhiOutsideFirstLayer(usize),
    #[error("generated symbol name `{0}` collides; rename inputs")]
    SymbolCollision(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Architecture plus the deterministic symbol names for every weight and
/// bias. Neurons are numbered globally across hidden layers starting at 1,
/// matching the conventional `w13`/`b4` style names.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkSpec {
    pub inputs: Vec<String>,
    pub hidden_layers: Vec<Vec<ActivationKind>>,
    /// Symbol name of the shared Riccati constant (default `b`).
    pub riccati_symbol: String,
    /// `input_weights[i][v]`: weight from input var `v` to first-layer
    /// neuron `i` (0-based within the layer).
    input_weights: Vec<Vec<String>>,
    /// `hidden_weights[l][j][i]`: weight from neuron `i` of layer `l` to
    /// neuron `j` of layer `l+1` (0-based layer index of the source).
    hidden_weights: Vec<Vec<Vec<String>>>,
    /// Weight from each last-layer neuron to the output.
    output_weights: Vec<String>,
    /// Bias per hidden neuron, in global neuron order.
    biases: Vec<String>,
    pub output_bias: String,
}

impl NetworkSpec {
    pub fn new(
        inputs: Vec<String>,
        hidden_layers: Vec<Vec<ActivationKind>>,
        riccati_symbol: impl Into<String>,
    ) -> Result<NetworkSpec, NetworkError> {
        if hidden_layers.is_empty() {
            return Err(NetworkError::NoHiddenLayers);
        }
        for (l, layer) in hidden_layers.iter().enumerate() {
            if layer.is_empty() {
                return Err(NetworkError::EmptyLayer(l + 1));
            }
        }
        let riccati_symbol = riccati_symbol.into();
        let widths: Vec<usize> = hidden_layers.iter().map(|l| l.len()).collect();
        // Global neuron numbers: layer 0 neurons are 1..=w0, etc.
        let layer_start: Vec<usize> = widths
            .iter()
            .scan(1usize, |acc, w| {
                let s = *acc;
                *acc += w;
                Some(s)
            })
            .collect();
        let total: usize = widths.iter().sum();

        let mut seen: BTreeSet<String> = BTreeSet::new();
        seen.insert(riccati_symbol.clone());
        let mut claim = |name: String| -> Result<String, NetworkError> {
            if !seen.insert(name.clone()) {
                return Err(NetworkError::SymbolCollision(name));
            }
            Ok(name)
        };

        let mut input_weights = Vec::new();
        for i in 0..widths[0] {
            let n = layer_start[0] + i;
            let mut per_var = Vec::new();
            for v in &inputs {
                per_var.push(claim(format!("w{v}{n}"))?);
            }
            input_weights.push(per_var);
        }
        let mut hidden_weights = Vec::new();
        for l in 1..widths.len() {
            let mut layer = Vec::new();
            for j in 0..widths[l] {
                let to = layer_start[l] + j;
                let mut per_src = Vec::new();
                for i in 0..widths[l - 1] {
                    let from = layer_start[l - 1] + i;
                    per_src.push(claim(format!("w{from}{to}"))?);
                }
                layer.push(per_src);
            }
            hidden_weights.push(layer);
        }
        let last = widths.len() - 1;
        let mut output_weights = Vec::new();
        for i in 0..widths[last] {
            let from = layer_start[last] + i;
            output_weights.push(claim(format!("w{from}u"))?);
        }
        let mut biases = Vec::new();
        for n in 1..=total {
            biases.push(claim(format!("b{n}"))?);
        }
        let output_bias = claim(format!("b{}", total + 1))?;

        Ok(NetworkSpec {
            inputs,
            hidden_layers,
            riccati_symbol,
            input_weights,
            hidden_weights,
            output_weights,
            biases,
            output_bias,
        })
    }

    pub fn input_weight(&self, neuron: usize, var: usize) -> &str {
        &self.input_weights[neuron][var]
    }

    pub fn bias(&self, global_neuron: usize) -> &str {
        &self.biases[global_neuron - 1]
    }

    /// Every symbol name the spec can generate, including the Riccati
    /// constant.
    pub fn symbol_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        out.insert(self.riccati_symbol.clone());
        for per_var in &self.input_weights {
            out.extend(per_var.iter().cloned());
        }
        for layer in &self.hidden_weights {
            for per_src in layer {
                out.extend(per_src.iter().cloned());
            }
        }
        out.extend(self.output_weights.iter().cloned());
        out.extend(self.biases.iter().cloned());
        out.insert(self.output_bias.clone());
        out
    }
}

/// Registry of phi-atoms: the shared Riccati constant and each atom's affine
/// argument in the independent variables.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct RiccatiContext {
    pub b: String,
    atoms: Vec<(u32, Expr)>,
}

impl RiccatiContext {
    pub fn new(b: impl Into<String>) -> RiccatiContext {
        RiccatiContext {
            b: b.into(),
            atoms: Vec::new(),
        }
    }

    pub fn register(&mut self, id: u32, arg: Expr) {
        debug_assert!(self.argument(id).is_none());
        self.atoms.push((id, arg));
    }

    pub fn argument(&self, id: u32) -> Option<&Expr> {
        self.atoms.iter().find(|(i, _)| *i == id).map(|(_, a)| a)
    }

    pub fn atoms(&self) -> &[(u32, Expr)] {
        &self.atoms
    }

    pub fn b_expr(&self) -> Expr {
        Expr::sym(self.b.clone())
    }

    /// Coefficient of `var` in atom `id`'s affine argument.
    pub fn coefficient(&self, id: u32, var: &str) -> Option<Expr> {
        let arg = self.argument(id)?;
        let (a, _) = as_affine_in(arg, &Expr::var(var))?;
        Some(a)
    }
}

/// The network's symbolic output together with its atom registry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrialFunction {
    pub expr: Expr,
    pub ctx: RiccatiContext,
    pub spec: NetworkSpec,
}

/// Feedforward-compose a network spec into a symbolic trial function.
pub fn build_trial(spec: &NetworkSpec) -> Result<TrialFunction, NetworkError> {
    let mut ctx = RiccatiContext::new(spec.riccati_symbol.clone());
    let mut prev_outputs: Vec<Expr> = Vec::new();

    for (l, layer) in spec.hidden_layers.iter().enumerate() {
        let mut outputs = Vec::with_capacity(layer.len());
        for (j, act) in layer.iter().enumerate() {
            let global = 1 + spec
                .hidden_layers
                .iter()
                .take(l)
                .map(|x| x.len())
                .sum::<usize>()
                + j;
            let affine = if l == 0 {
                let mut terms: Vec<Expr> = spec
                    .inputs
                    .iter()
                    .enumerate()
                    .map(|(v, name)| {
                        mul(vec![
                            Expr::var(name.clone()),
                            Expr::sym(spec.input_weights[j][v].clone()),
                        ])
                    })
                    .collect();
                terms.push(Expr::sym(spec.bias(global)));
                add(terms)
            } else {
                let mut terms: Vec<Expr> = prev_outputs
                    .iter()
                    .enumerate()
                    .map(|(i, out)| {
                        mul(vec![
                            out.clone(),
                            Expr::sym(spec.hidden_weights[l - 1][j][i].clone()),
                        ])
                    })
                    .collect();
                terms.push(Expr::sym(spec.bias(global)));
                add(terms)
            };
            let out = match act {
                ActivationKind::PhiPower(k) => {
                    if l != 0 {
                        return Err(NetworkError::PhiOutsideFirstLayer(global));
                    }
                    let id = global as u32;
                    ctx.register(id, affine);
                    pow(Expr::phi(id), *k as i64)?
                }
                ActivationKind::ArgPower(k) => pow(affine, *k)?,
            };
            outputs.push(out);
        }
        prev_outputs = outputs;
    }

    let mut terms: Vec<Expr> = prev_outputs
        .into_iter()
        .enumerate()
        .map(|(i, out)| mul(vec![out, Expr::sym(spec.output_weights[i].clone())]))
        .collect();
    terms.push(Expr::sym(spec.output_bias.clone()));
    let expr = add(terms);

    Ok(TrialFunction {
        expr,
        ctx,
        spec: spec.clone(),
    })
}

/// The weight/bias symbols occurring in the trial (including those inside
/// atom arguments) plus the Riccati constant when any atom is registered.
pub fn free_symbols(tf: &TrialFunction) -> BTreeSet<String> {
    let mut out = tf.expr.symbols();
    for (_, arg) in tf.ctx.atoms() {
        out.extend(arg.symbols());
    }
    if !tf.ctx.atoms().is_empty() {
        out.insert(tf.ctx.b.clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example1_spec() -> NetworkSpec {
        NetworkSpec::new(
            vec!["x".into(), "t".into()],
            vec![
                vec![ActivationKind::PhiPower(1), ActivationKind::PhiPower(2)],
                vec![ActivationKind::ArgPower(1), ActivationKind::ArgPower(-1)],
            ],
            "b",
        )
        .unwrap()
    }

    fn example3_spec() -> NetworkSpec {
        NetworkSpec::new(
            vec!["x".into(), "y".into(), "t".into()],
            vec![
                vec![ActivationKind::PhiPower(1), ActivationKind::PhiPower(1)],
                vec![ActivationKind::ArgPower(2), ActivationKind::ArgPower(-2)],
            ],
            "b",
        )
        .unwrap()
    }

    #[test]
    fn example1_trial_matches_expected_structure() {
        let tf = build_trial(&example1_spec()).unwrap();
        // u = w3u*(w13*phi1 + w23*phi2^2 + b3)
        //   + w4u/(w14*phi1 + w24*phi2^2 + b4) + b5
        let inner = |wa: &str, wb: &str, bias: &str| {
            add(vec![
                mul(vec![Expr::sym(wa), Expr::phi(1)]),
                mul(vec![Expr::sym(wb), pow(Expr::phi(2), 2).unwrap()]),
                Expr::sym(bias),
            ])
        };
        let expected = add(vec![
            mul(vec![Expr::sym("w3u"), inner("w13", "w23", "b3")]),
            mul(vec![
                Expr::sym("w4u"),
                pow(inner("w14", "w24", "b4"), -1).unwrap(),
            ]),
            Expr::sym("b5"),
        ]);
        assert_eq!(tf.expr, expected);
        // Atom arguments.
        let xi1 = add(vec![
            mul(vec![Expr::var("t"), Expr::sym("wt1")]),
            mul(vec![Expr::var("x"), Expr::sym("wx1")]),
            Expr::sym("b1"),
        ]);
        assert_eq!(tf.ctx.argument(1), Some(&xi1));
        assert_eq!(tf.ctx.atoms().len(), 2);
    }

    #[test]
    fn example1_free_symbols() {
        let tf = build_trial(&example1_spec()).unwrap();
        let expected: BTreeSet<String> = [
            "w13", "w23", "w14", "w24", "w3u", "w4u", "wt1", "wx1", "wt2", "wx2", "b", "b1",
            "b2", "b3", "b4", "b5",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        assert_eq!(free_symbols(&tf), expected);
    }

    #[test]
    fn example3_symbol_count() {
        // All 17 weight/bias symbols of the three-input trial occur, plus the
        // Riccati constant: 18 total.
        let tf = build_trial(&example3_spec()).unwrap();
        let frees = free_symbols(&tf);
        assert_eq!(frees.len(), 18);
        assert!(frees.contains("wy1"));
        assert!(frees.contains("wy2"));
    }

    #[test]
    fn affine_collapse_has_no_atoms() {
        let spec = NetworkSpec::new(
            vec!["x".into(), "t".into()],
            vec![
                vec![ActivationKind::ArgPower(1), ActivationKind::ArgPower(1)],
                vec![ActivationKind::ArgPower(1), ActivationKind::ArgPower(1)],
            ],
            "b",
        )
        .unwrap();
        let tf = build_trial(&spec).unwrap();
        assert!(tf.ctx.atoms().is_empty());
        assert!(tf.expr.phi_atoms().is_empty());
        // Affine in x and t: degree 1 in each var.
        let frees = free_symbols(&tf);
        assert!(!frees.contains("b"));
        assert_eq!(tf.expr.vars().len(), 2);
    }

    #[test]
    fn phi_outside_first_layer_rejected() {
        let spec = NetworkSpec::new(
            vec!["x".into(), "t".into()],
            vec![
                vec![ActivationKind::ArgPower(1)],
                vec![ActivationKind::PhiPower(1)],
            ],
            "b",
        )
        .unwrap();
        assert!(matches!(
            build_trial(&spec),
            Err(NetworkError::PhiOutsideFirstLayer(2))
        ));
    }

    #[test]
    fn build_is_deterministic() {
        let a = build_trial(&example1_spec()).unwrap();
        let b = build_trial(&example1_spec()).unwrap();
        assert_eq!(a.expr, b.expr);
        assert_eq!(a.ctx, b.ctx);
    }
}
