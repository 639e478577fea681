//! Text formats: expressions, PDE definitions, and network architectures.
//!
//! Expression grammar (precedence climbing, `^` > unary `-` > `*`/`/` >
//! `+`/`-`); exponents are integer literals. Greek letters and Unicode
//! subscript digits are transliterated during lexing, so `α` and `alpha` or
//! `φ₁` and `phi1` are interchangeable.
//!
//! PDE grammar: `[params a,b,..;] u(x,t[,y]); <equation>` where the equation
//! may use `=`; derivatives are written with subscripts (`u_tt`, `u_xxy`) and
//! derivatives of powers as `(u^2)_xx`.
//!
//! Network grammar is line-oriented (newlines or `;`):
//! `inputs [x,t]`, `layer1 [phi, phi^2]`, `layer2 [arg, arg^-1]`, optional
//! `output [linear]` and `riccati <name>`.

use crate::expr::{Expr, FuncKind, Rational};
use crate::network::{ActivationKind, NetworkError, NetworkSpec};
use crate::simplify::{add, func, mul, neg, pow, sub};
use num::BigInt;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub message: String,
    /// Byte offset into the input.
    pub offset: usize,
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} at line {}, column {} (offset {})",
            self.message, self.line, self.col, self.offset
        )
    }
}

impl std::error::Error for ParseError {}

fn err_at(input: &str, offset: usize, message: impl Into<String>) -> ParseError {
    let mut line = 1;
    let mut col = 1;
    for (i, c) in input.char_indices() {
        if i >= offset {
            break;
        }
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    ParseError {
        message: message.into(),
        offset,
        line,
        col,
    }
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Number(Rational),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Equals,
}

#[derive(Debug, Clone)]
struct Lexed {
    toks: Vec<(Tok, usize)>,
    end: usize,
}

fn transliterate(c: char) -> Option<&'static str> {
    Some(match c {
        'α' => "alpha",
        'β' => "beta",
        'γ' => "gamma",
        'δ' => "delta",
        'λ' => "lambda",
        'μ' => "mu",
        'ξ' => "xi",
        'τ' => "tau",
        'φ' | 'ϕ' => "phi",
        'ω' => "omega",
        '₀' => "0",
        '₁' => "1",
        '₂' => "2",
        '₃' => "3",
        '₄' => "4",
        '₅' => "5",
        '₆' => "6",
        '₇' => "7",
        '₈' => "8",
        '₉' => "9",
        _ => return None,
    })
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || transliterate(c).is_some()
}

fn is_ident_start(c: char) -> bool {
    is_ident_char(c) && !c.is_ascii_digit()
}

fn lex(input: &str) -> Result<Lexed, ParseError> {
    let mut toks = Vec::new();
    let mut chars = input.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                chars.next();
            }
            '#' => {
                // Comment to end of line.
                while let Some(&(_, c)) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '+' => {
                toks.push((Tok::Plus, i));
                chars.next();
            }
            '-' | '−' => {
                toks.push((Tok::Minus, i));
                chars.next();
            }
            '*' | '·' => {
                toks.push((Tok::Star, i));
                chars.next();
            }
            '/' => {
                toks.push((Tok::Slash, i));
                chars.next();
            }
            '^' => {
                toks.push((Tok::Caret, i));
                chars.next();
            }
            '(' => {
                toks.push((Tok::LParen, i));
                chars.next();
            }
            ')' => {
                toks.push((Tok::RParen, i));
                chars.next();
            }
            '[' => {
                toks.push((Tok::LBracket, i));
                chars.next();
            }
            ']' => {
                toks.push((Tok::RBracket, i));
                chars.next();
            }
            ',' => {
                toks.push((Tok::Comma, i));
                chars.next();
            }
            ';' => {
                toks.push((Tok::Semi, i));
                chars.next();
            }
            '=' => {
                toks.push((Tok::Equals, i));
                chars.next();
            }
            c if c.is_ascii_digit() => {
                let mut digits = String::new();
                let mut frac = String::new();
                let mut in_frac = false;
                while let Some(&(_, c)) = chars.peek() {
                    if c.is_ascii_digit() {
                        if in_frac {
                            frac.push(c);
                        } else {
                            digits.push(c);
                        }
                        chars.next();
                    } else if c == '.' && !in_frac {
                        in_frac = true;
                        chars.next();
                    } else {
                        break;
                    }
                }
                let mut numer: BigInt = digits.parse().unwrap();
                let mut denom = BigInt::from(1);
                for d in frac.chars() {
                    numer = numer * 10 + d.to_digit(10).unwrap();
                    denom *= 10;
                }
                toks.push((Tok::Number(Rational::new(numer, denom)), i));
            }
            c if is_ident_start(c) => {
                let mut name = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if is_ident_char(c) {
                        match transliterate(c) {
                            Some(t) => name.push_str(t),
                            None => name.push(c),
                        }
                        chars.next();
                    } else {
                        break;
                    }
                }
                toks.push((Tok::Ident(name), i));
            }
            other => {
                return Err(err_at(input, i, format!("unexpected character `{other}`")));
            }
        }
    }
    Ok(Lexed {
        toks,
        end: input.len(),
    })
}

// ---------------------------------------------------------------------------
// Expression parser
// ---------------------------------------------------------------------------

/// What an identifier means in the current parsing context.
trait SymbolResolver {
    fn resolve(&mut self, name: &str, input: &str, offset: usize) -> Result<Expr, ParseError>;
    /// Handle `(expr)_xx` style derivative postfix; the default rejects it.
    fn derivative_of(
        &mut self,
        _inner: Expr,
        _subscript: &str,
        input: &str,
        offset: usize,
    ) -> Result<Expr, ParseError> {
        Err(err_at(input, offset, "derivative subscript not allowed here"))
    }
}

/// Default context: `x`, `y`, `t` are variables, `phiN` is a phi-atom, and
/// everything else is a parameter symbol.
struct DefaultResolver;

fn phi_index(name: &str) -> Option<u32> {
    let rest = name.strip_prefix("phi")?;
    if rest.is_empty() {
        return None;
    }
    rest.parse().ok()
}

impl SymbolResolver for DefaultResolver {
    fn resolve(&mut self, name: &str, _input: &str, _offset: usize) -> Result<Expr, ParseError> {
        if let Some(i) = phi_index(name) {
            return Ok(Expr::phi(i));
        }
        match name {
            "x" | "y" | "t" => Ok(Expr::var(name)),
            _ => Ok(Expr::sym(name)),
        }
    }
}

struct ExprParser<'a, R: SymbolResolver> {
    input: &'a str,
    toks: &'a [(Tok, usize)],
    pos: usize,
    end: usize,
    resolver: &'a mut R,
}

impl<'a, R: SymbolResolver> ExprParser<'a, R> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(_, o)| *o).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<&Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: &Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(err_at(self.input, self.offset(), format!("expected {what}")))
        }
    }

    fn parse_expr(&mut self) -> Result<Expr, ParseError> {
        let mut terms = vec![self.parse_term()?];
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    terms.push(self.parse_term()?);
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    terms.push(neg(self.parse_term()?));
                }
                _ => break,
            }
        }
        Ok(add(terms))
    }

    fn parse_term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.parse_unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    let rhs = self.parse_unary()?;
                    acc = mul(vec![acc, rhs]);
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    let at = self.offset();
                    let rhs = self.parse_unary()?;
                    let inv = pow(rhs, -1)
                        .map_err(|e| err_at(self.input, at, e.to_string()))?;
                    acc = mul(vec![acc, inv]);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn parse_unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            return Ok(neg(self.parse_unary()?));
        }
        self.parse_postfix()
    }

    fn parse_postfix(&mut self) -> Result<Expr, ParseError> {
        let mut base = self.parse_primary()?;
        while self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            let at = self.offset();
            let negative = if self.peek() == Some(&Tok::Minus) {
                self.pos += 1;
                true
            } else {
                false
            };
            let k = match self.bump() {
                Some(Tok::Number(r)) if r.is_integer() => {
                    let k: i64 = r
                        .numer()
                        .try_into()
                        .map_err(|_| err_at(self.input, at, "exponent out of range"))?;
                    if negative {
                        -k
                    } else {
                        k
                    }
                }
                _ => return Err(err_at(self.input, at, "expected integer exponent")),
            };
            base = pow(base, k).map_err(|e| err_at(self.input, at, e.to_string()))?;
        }
        Ok(base)
    }

    fn parse_primary(&mut self) -> Result<Expr, ParseError> {
        let at = self.offset();
        match self.bump().cloned() {
            Some(Tok::Number(r)) => Ok(Expr::Rational(r)),
            Some(Tok::LParen) => {
                let inner = self.parse_expr()?;
                self.expect(&Tok::RParen, "`)`")?;
                // Derivative postfix `(u^2)_xx`: an identifier starting with
                // `_` immediately after the closing paren.
                if let Some(Tok::Ident(name)) = self.peek() {
                    if let Some(sub) = name.strip_prefix('_') {
                        let sub = sub.to_string();
                        let sub_at = self.offset();
                        self.pos += 1;
                        return self.resolver.derivative_of(inner, &sub, self.input, sub_at);
                    }
                }
                Ok(inner)
            }
            Some(Tok::Ident(name)) => {
                if self.peek() == Some(&Tok::LParen) {
                    let kind = FuncKind::from_name(&name)
                        .ok_or_else(|| err_at(self.input, at, format!("unknown function `{name}`")))?;
                    self.pos += 1;
                    let arg = self.parse_expr()?;
                    self.expect(&Tok::RParen, "`)`")?;
                    Ok(func(kind, arg))
                } else {
                    self.resolver.resolve(&name, self.input, at)
                }
            }
            _ => Err(err_at(self.input, at, "expected expression")),
        }
    }
}

fn parse_expr_with<R: SymbolResolver>(
    input: &str,
    lexed: &Lexed,
    start: usize,
    resolver: &mut R,
) -> Result<(Expr, usize), ParseError> {
    let mut p = ExprParser {
        input,
        toks: &lexed.toks,
        pos: start,
        end: lexed.end,
        resolver,
    };
    let e = p.parse_expr()?;
    Ok((e, p.pos))
}

/// Parse a standalone expression. `x`, `y`, `t` are variables; `phiN` names
/// phi-atoms; all other identifiers are symbols.
pub fn parse_expr(input: &str) -> Result<Expr, ParseError> {
    let lexed = lex(input)?;
    let mut resolver = DefaultResolver;
    let (e, pos) = parse_expr_with(input, &lexed, 0, &mut resolver)?;
    if pos != lexed.toks.len() {
        return Err(err_at(input, lexed.toks[pos].1, "unexpected trailing input"));
    }
    Ok(e)
}

// ---------------------------------------------------------------------------
// PDE parser
// ---------------------------------------------------------------------------

/// A derivative occurrence: `orders`-fold partial derivatives of the
/// unknown raised to `power` (power > 1 encodes terms like `(u^2)_xx`).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct DerivAtom {
    pub power: u32,
    pub orders: BTreeMap<String, u32>,
}

impl DerivAtom {
    /// Canonical symbol name: `u_tt`, `u_xxy`, `(u^2)_xx`.
    pub fn symbol_name(&self, unknown: &str, vars: &[String]) -> String {
        let mut sub = String::new();
        for v in vars {
            if let Some(&k) = self.orders.get(v) {
                for _ in 0..k {
                    sub.push_str(v);
                }
            }
        }
        if self.power == 1 {
            format!("{unknown}_{sub}")
        } else {
            format!("({unknown}^{})_{sub}", self.power)
        }
    }
}

/// A parsed PDE: declared parameters, unknown, variables, and the residual
/// left-hand side with derivative occurrences recorded in `derivs`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PdeSpec {
    pub unknown: String,
    pub vars: Vec<String>,
    pub params: BTreeSet<String>,
    pub lhs: Expr,
    /// Map from the opaque symbol name used in `lhs` to its derivative atom.
    pub derivs: BTreeMap<String, DerivAtom>,
}

impl fmt::Display for PdeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.params.is_empty() {
            let names: Vec<&str> = self.params.iter().map(|s| s.as_str()).collect();
            write!(f, "params {}; ", names.join(","))?;
        }
        write!(
            f,
            "{}({}); {} = 0",
            self.unknown,
            self.vars.join(","),
            self.lhs
        )
    }
}

struct PdeResolver<'s> {
    unknown: String,
    vars: Vec<String>,
    params: BTreeSet<String>,
    derivs: &'s mut BTreeMap<String, DerivAtom>,
}

impl<'s> PdeResolver<'s> {
    fn subscript_orders(
        &self,
        sub: &str,
        input: &str,
        offset: usize,
    ) -> Result<BTreeMap<String, u32>, ParseError> {
        let mut orders: BTreeMap<String, u32> = BTreeMap::new();
        let mut rest = sub;
        'outer: while !rest.is_empty() {
            // Longest-match against declared variable names.
            let mut vars: Vec<&String> = self.vars.iter().collect();
            vars.sort_by_key(|v| std::cmp::Reverse(v.len()));
            for v in vars {
                if let Some(r) = rest.strip_prefix(v.as_str()) {
                    *orders.entry(v.clone()).or_insert(0) += 1;
                    rest = r;
                    continue 'outer;
                }
            }
            return Err(err_at(
                input,
                offset,
                format!("subscript `{sub}` mentions an undeclared variable"),
            ));
        }
        if orders.is_empty() {
            return Err(err_at(input, offset, "empty derivative subscript"));
        }
        Ok(orders)
    }

    fn deriv_expr(&mut self, atom: DerivAtom) -> Expr {
        let name = atom.symbol_name(&self.unknown, &self.vars);
        self.derivs.insert(name.clone(), atom);
        Expr::sym(name)
    }
}

impl<'s> SymbolResolver for PdeResolver<'s> {
    fn resolve(&mut self, name: &str, input: &str, offset: usize) -> Result<Expr, ParseError> {
        if name == self.unknown {
            return Ok(Expr::sym(name));
        }
        if self.vars.iter().any(|v| v == name) {
            return Ok(Expr::var(name));
        }
        if self.params.contains(name) {
            return Ok(Expr::sym(name));
        }
        if let Some((base, sub)) = name.split_once('_') {
            if base == self.unknown {
                let orders = self.subscript_orders(sub, input, offset)?;
                return Ok(self.deriv_expr(DerivAtom { power: 1, orders }));
            }
            if self.params.contains(base) {
                return Err(err_at(
                    input,
                    offset,
                    format!("derivative of a parameter `{base}`"),
                ));
            }
        }
        Err(err_at(input, offset, format!("undeclared symbol `{name}`")))
    }

    fn derivative_of(
        &mut self,
        inner: Expr,
        subscript: &str,
        input: &str,
        offset: usize,
    ) -> Result<Expr, ParseError> {
        let power = match &inner {
            Expr::Symbol(s) if s == &self.unknown => 1,
            Expr::Pow(b, k) if **b == Expr::sym(self.unknown.clone()) && *k > 1 => *k as u32,
            _ => {
                return Err(err_at(
                    input,
                    offset,
                    "derivative subscript applies only to the unknown or its power",
                ))
            }
        };
        let orders = self.subscript_orders(subscript, input, offset)?;
        Ok(self.deriv_expr(DerivAtom { power, orders }))
    }
}

/// Parse a PDE definition:
/// `params alpha,beta; u(x,t); u_tt + alpha*u_xx = 0`.
pub fn parse_pde(input: &str) -> Result<PdeSpec, ParseError> {
    let lexed = lex(input)?;
    let toks = &lexed.toks;
    let mut pos = 0usize;
    let off = |p: usize| toks.get(p).map(|(_, o)| *o).unwrap_or(lexed.end);

    // Optional params declaration.
    let mut params: BTreeSet<String> = BTreeSet::new();
    if let Some((Tok::Ident(kw), _)) = toks.get(pos) {
        if kw == "params" {
            pos += 1;
            loop {
                match toks.get(pos) {
                    Some((Tok::Ident(name), o)) => {
                        if !params.insert(name.clone()) {
                            return Err(err_at(input, *o, format!("duplicate parameter `{name}`")));
                        }
                        pos += 1;
                    }
                    _ => return Err(err_at(input, off(pos), "expected parameter name")),
                }
                match toks.get(pos) {
                    Some((Tok::Comma, _)) => pos += 1,
                    Some((Tok::Semi, _)) => {
                        pos += 1;
                        break;
                    }
                    _ => return Err(err_at(input, off(pos), "expected `,` or `;`")),
                }
            }
        }
    }

    // Unknown declaration: u(x,t);
    let unknown = match toks.get(pos) {
        Some((Tok::Ident(name), _)) => {
            let n = name.clone();
            pos += 1;
            n
        }
        _ => return Err(err_at(input, off(pos), "expected unknown function name")),
    };
    if toks.get(pos).map(|(t, _)| t) != Some(&Tok::LParen) {
        return Err(err_at(input, off(pos), "expected `(` after unknown name"));
    }
    pos += 1;
    let mut vars: Vec<String> = Vec::new();
    loop {
        match toks.get(pos) {
            Some((Tok::Ident(name), o)) => {
                if vars.iter().any(|v| v == name) {
                    return Err(err_at(input, *o, format!("duplicate variable `{name}`")));
                }
                vars.push(name.clone());
                pos += 1;
            }
            _ => return Err(err_at(input, off(pos), "expected variable name")),
        }
        match toks.get(pos) {
            Some((Tok::Comma, _)) => pos += 1,
            Some((Tok::RParen, _)) => {
                pos += 1;
                break;
            }
            _ => return Err(err_at(input, off(pos), "expected `,` or `)`")),
        }
    }
    if toks.get(pos).map(|(t, _)| t) != Some(&Tok::Semi) {
        return Err(err_at(input, off(pos), "expected `;` after unknown declaration"));
    }
    pos += 1;

    // Declaration sanity.
    if params.contains(&unknown) || vars.iter().any(|v| v == &unknown) {
        return Err(err_at(
            input,
            0,
            format!("unknown `{unknown}` clashes with a parameter or variable"),
        ));
    }
    if let Some(v) = vars.iter().find(|v| params.contains(*v)) {
        return Err(err_at(input, 0, format!("`{v}` is both parameter and variable")));
    }

    // Equation.
    let mut derivs = BTreeMap::new();
    let mut resolver = PdeResolver {
        unknown: unknown.clone(),
        vars: vars.clone(),
        params: params.clone(),
        derivs: &mut derivs,
    };
    let (left, mut pos) = parse_expr_with(input, &lexed, pos, &mut resolver)?;
    let mut lhs = left;
    if toks.get(pos).map(|(t, _)| t) == Some(&Tok::Equals) {
        pos += 1;
        let (right, p) = parse_expr_with(input, &lexed, pos, &mut resolver)?;
        pos = p;
        lhs = sub(lhs, right);
    }
    if pos != toks.len() {
        return Err(err_at(input, toks[pos].1, "unexpected trailing input"));
    }
    Ok(PdeSpec {
        unknown,
        vars,
        params,
        lhs,
        derivs,
    })
}

// ---------------------------------------------------------------------------
// Network parser
// ---------------------------------------------------------------------------

#[derive(Debug, thiserror::Error)]
pub enum NetworkParseError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

fn parse_activation(word: &str, input: &str, offset: usize) -> Result<ActivationKind, ParseError> {
    let (base, power) = match word.split_once('^') {
        Some((b, p)) => (b, Some(p)),
        None => (word, None),
    };
    match base {
        "phi" => {
            let k: i64 = match power {
                None => 1,
                Some(p) => p
                    .parse()
                    .map_err(|_| err_at(input, offset, format!("bad exponent in `{word}`")))?,
            };
            if k < 1 {
                return Err(err_at(
                    input,
                    offset,
                    format!("phi power must be a positive integer in `{word}`"),
                ));
            }
            Ok(ActivationKind::PhiPower(k as u32))
        }
        "arg" => {
            let k: i64 = match power {
                None => 1,
                Some(p) => p
                    .parse()
                    .map_err(|_| err_at(input, offset, format!("bad exponent in `{word}`")))?,
            };
            if k == 0 {
                return Err(err_at(input, offset, format!("arg power must be nonzero in `{word}`")));
            }
            Ok(ActivationKind::ArgPower(k))
        }
        other => Err(err_at(input, offset, format!("unknown activation `{other}`"))),
    }
}

/// Parse a network architecture description.
pub fn parse_network(input: &str) -> Result<NetworkSpec, NetworkParseError> {
    let mut inputs: Option<Vec<String>> = None;
    let mut layers: BTreeMap<usize, Vec<ActivationKind>> = BTreeMap::new();
    let mut riccati: Option<String> = None;

    let mut offset = 0usize;
    for raw_line in input.split(['\n', ';']) {
        let line_offset = offset;
        offset += raw_line.len() + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (keyword, rest) = match line.split_once(char::is_whitespace) {
            Some((k, r)) => (k, r.trim()),
            None => (line, ""),
        };
        let body_offset = line_offset + raw_line.find(keyword).unwrap_or(0);
        let bracket_items = |rest: &str| -> Result<Vec<String>, ParseError> {
            let inner = rest
                .strip_prefix('[')
                .and_then(|r| r.strip_suffix(']'))
                .ok_or_else(|| err_at(input, body_offset, format!("expected `[..]` after `{keyword}`")))?;
            Ok(inner
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect())
        };
        match keyword {
            "inputs" => {
                if inputs.is_some() {
                    return Err(err_at(input, body_offset, "duplicate `inputs` line").into());
                }
                let items = bracket_items(rest)?;
                if items.is_empty() {
                    return Err(err_at(input, body_offset, "network needs at least one input").into());
                }
                inputs = Some(items);
            }
            "output" => {
                let items = bracket_items(rest)?;
                for item in items {
                    if item != "linear" {
                        return Err(
                            err_at(input, body_offset, format!("unknown output kind `{item}`")).into()
                        );
                    }
                }
            }
            "riccati" => {
                if rest.is_empty() {
                    return Err(err_at(input, body_offset, "expected symbol name after `riccati`").into());
                }
                riccati = Some(rest.to_string());
            }
            kw if kw.starts_with("layer") => {
                let n: usize = kw[5..]
                    .parse()
                    .map_err(|_| err_at(input, body_offset, format!("bad layer number in `{kw}`")))?;
                if n == 0 {
                    return Err(err_at(input, body_offset, "layers are numbered from 1").into());
                }
                let items = bracket_items(rest)?;
                let mut acts = Vec::new();
                for item in items {
                    acts.push(parse_activation(&item, input, body_offset)?);
                }
                if acts.is_empty() {
                    return Err(err_at(input, body_offset, format!("layer {n} is empty")).into());
                }
                if layers.insert(n, acts).is_some() {
                    return Err(err_at(input, body_offset, format!("duplicate layer {n}")).into());
                }
            }
            other => {
                return Err(err_at(input, body_offset, format!("unknown directive `{other}`")).into());
            }
        }
    }

    let inputs = inputs.ok_or_else(|| err_at(input, 0, "missing `inputs` line"))?;
    if layers.is_empty() {
        return Err(NetworkError::NoHiddenLayers.into());
    }
    // Layer numbering must be 1..=n with no gaps.
    let max = *layers.keys().max().unwrap();
    if layers.len() != max {
        return Err(err_at(input, 0, "layer numbers must be contiguous from 1").into());
    }
    let hidden: Vec<Vec<ActivationKind>> = (1..=max).map(|i| layers[&i].clone()).collect();
    let spec = NetworkSpec::new(inputs, hidden, riccati.unwrap_or_else(|| "b".to_string()))?;
    Ok(spec)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::render;
    use crate::simplify::div;

    #[test]
    fn expr_basics() {
        let e = parse_expr("2*x + 3").unwrap();
        let expected = add(vec![mul(vec![Expr::int(2), Expr::var("x")]), Expr::int(3)]);
        assert_eq!(e, expected);

        let e = parse_expr("x^-1").unwrap();
        assert_eq!(e, pow(Expr::var("x"), -1).unwrap());

        let e = parse_expr("w4u/(2*b*w24)").unwrap();
        let expected = div(
            Expr::sym("w4u"),
            mul(vec![Expr::int(2), Expr::sym("b"), Expr::sym("w24")]),
        )
        .unwrap();
        assert_eq!(e, expected);
    }

    #[test]
    fn greek_and_subscripts_transliterate() {
        assert_eq!(parse_expr("α + alpha").unwrap(), mul(vec![Expr::int(2), Expr::sym("alpha")]));
        assert_eq!(parse_expr("φ₁^2").unwrap(), pow(Expr::phi(1), 2).unwrap());
    }

    #[test]
    fn decimals_become_exact_rationals() {
        assert_eq!(parse_expr("0.5").unwrap(), Expr::ratio(1, 2));
        assert_eq!(parse_expr("-0.25*x").unwrap(), mul(vec![Expr::ratio(-1, 4), Expr::var("x")]));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_expr("2*x + ").unwrap_err();
        assert_eq!(err.offset, 6);
        let err = parse_expr("2*(x + 1").unwrap_err();
        assert!(err.offset <= 8);
        let err = parse_expr("relu(x)").unwrap_err();
        assert!(err.message.contains("unknown function"));
        assert_eq!(err.offset, 0);
    }

    #[test]
    fn roundtrip_through_render() {
        for text in [
            "2*x + 3",
            "w4u/(2*b*w24)",
            "x^-1",
            "tanh(2*x + 1)^2",
            "sqrt(-b)*tanh(sqrt(-b)*(t*wt2 + x*wx2 + b2))",
            "-6*wx2^2/(t*wt2 + x*wx2 + y*wy2 + b2)^2",
        ] {
            let e = parse_expr(text).unwrap();
            let again = parse_expr(&render(&e)).unwrap();
            assert_eq!(e, again, "round trip failed for `{text}`");
        }
    }

    #[test]
    fn pde_example_forms() {
        let pde = parse_pde("params a,b,g; u(x,t); u_tt + a*u_xx + b*u + g*u^3 = 0").unwrap();
        assert_eq!(pde.unknown, "u");
        assert_eq!(pde.vars, vec!["x".to_string(), "t".to_string()]);
        assert_eq!(pde.params.len(), 3);
        assert!(pde.derivs.contains_key("u_tt"));
        assert!(pde.derivs.contains_key("u_xx"));
        let u_tt = &pde.derivs["u_tt"];
        assert_eq!(u_tt.power, 1);
        assert_eq!(u_tt.orders.get("t"), Some(&2));

        let pde = parse_pde("u(x,t); u_t = 0").unwrap();
        assert_eq!(pde.lhs, Expr::sym("u_t"));

        let pde =
            parse_pde("params p,q,r,s; u(x,t); u_t + p*u*u_x + q*u^2*u_x + r*u_xx - s*u_xxx = 0")
                .unwrap();
        assert_eq!(pde.derivs.len(), 4);
        assert_eq!(pde.derivs["u_xxx"].orders.get("x"), Some(&3));
    }

    #[test]
    fn pde_derivative_of_power() {
        let pde = parse_pde("u(x,y,t); u_tt - u_xx - u_yy - (u^2)_xx - u_xxxx = 0").unwrap();
        let key = "(u^2)_xx";
        assert!(pde.derivs.contains_key(key), "keys: {:?}", pde.derivs.keys());
        assert_eq!(pde.derivs[key].power, 2);
        assert_eq!(pde.derivs[key].orders.get("x"), Some(&2));
        assert_eq!(pde.derivs["u_xxxx"].orders.get("x"), Some(&4));
    }

    #[test]
    fn pde_roundtrips_through_display() {
        let text = "params alpha,beta,gamma; u(x,t); u_tt + alpha*u_xx + beta*u + gamma*u^3 = 0";
        let pde = parse_pde(text).unwrap();
        let again = parse_pde(&pde.to_string()).unwrap();
        assert_eq!(pde, again);

        let text = "u(x,y,t); u_tt - u_xx - u_yy - (u^2)_xx - u_xxxx = 0";
        let pde = parse_pde(text).unwrap();
        let again = parse_pde(&pde.to_string()).unwrap();
        assert_eq!(pde, again);
    }

    #[test]
    fn pde_errors() {
        let err = parse_pde("u(x,t); u_t + z = 0").unwrap_err();
        assert!(err.message.contains("undeclared symbol"));
        let err = parse_pde("params a; u(x,t); a_x = 0").unwrap_err();
        assert!(err.message.contains("derivative of a parameter"));
        let err = parse_pde("params u; u(x,t); u_t = 0").unwrap_err();
        assert!(err.message.contains("clashes"));
        let err = parse_pde("u(x,t); u_z = 0").unwrap_err();
        assert!(err.message.contains("undeclared variable"));
    }

    #[test]
    fn network_example_specs() {
        let net = parse_network("inputs [x,t]; layer1 [phi, phi^2]; layer2 [arg, arg^-1]").unwrap();
        assert_eq!(net.inputs, vec!["x".to_string(), "t".to_string()]);
        assert_eq!(net.hidden_layers.len(), 2);
        assert_eq!(net.hidden_layers[0][1], ActivationKind::PhiPower(2));
        assert_eq!(net.hidden_layers[1][1], ActivationKind::ArgPower(-1));

        let net = parse_network("inputs [x,y,t]\nlayer1 [phi, phi]\nlayer2 [arg^2, arg^-2]").unwrap();
        assert_eq!(net.inputs.len(), 3);
        assert_eq!(net.hidden_layers[1][0], ActivationKind::ArgPower(2));
    }

    #[test]
    fn network_errors() {
        let err = parse_network("inputs [x,t]; layer1 [relu]").unwrap_err();
        assert!(err.to_string().contains("unknown activation"));
        let err = parse_network("inputs [x,t]").unwrap_err();
        assert!(err.to_string().contains("hidden layer"));
        let err = parse_network("inputs [x,t]; layer1 [phi]; layer3 [arg]").unwrap_err();
        assert!(err.to_string().contains("contiguous"));
        let err = parse_network("inputs [x,t]; layer1 [arg^0]").unwrap_err();
        assert!(err.to_string().contains("nonzero"));
    }
}
