//! Linear differential operator systems
//! `A_j μ = Σ_{α∈I_j} Σ_k ∂^α(a^α_{jk} μ_k)`, `j = 1..n`, and their textual
//! form.
//!
//! The DSL looks like
//!
//! ```text
//! # divergence in the plane
//! dims 2;
//! D[1,0] u1 + D[0,1] u2 = 0;
//! (x1^2 + 1) * D[0,2] u1 - 1/2 * D[0,0] u2 = 0;
//! ```
//!
//! `dims` and `components` declarations are optional; without them the
//! dimension comes from the derivative multi-indices and the component count
//! from the largest `u` index.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::multi_index::MultiIndex;
use crate::poly::{DimensionMismatch, Polynomial};

/// One equation: for each derivative order `α ∈ I_j`, the coefficient vector
/// `(a^α_{j1}, …, a^α_{jm})`.
pub type Equation = BTreeMap<MultiIndex, Vec<Polynomial>>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperatorSystem {
    dim: usize,
    components: usize,
    equations: Vec<Equation>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OperatorError {
    #[error("operator must have positive dimension and at least one component")]
    Degenerate,
    #[error("operator has no equations")]
    NoEquations,
    #[error("equation {equation}: multi-index {index} has length {got}, expected {expected}")]
    IndexDimension { equation: usize, index: MultiIndex, expected: usize, got: usize },
    #[error("equation {equation}: coefficient vector at {index} has {got} entries, expected {expected}")]
    CoefficientLength { equation: usize, index: MultiIndex, expected: usize, got: usize },
    #[error("equation {equation}: coefficient polynomial in dimension {got}, expected {expected}")]
    PolynomialDimension { equation: usize, expected: usize, got: usize },
    #[error("equation {equation} has no nonzero term")]
    EmptyEquation { equation: usize },
}

impl OperatorSystem {
    /// Builds and validates an operator. Terms whose coefficient vector is
    /// identically zero are dropped. Equation numbers in errors are 1-based.
    pub fn new(dim: usize, components: usize, equations: Vec<Equation>) -> Result<Self, OperatorError> {
        if dim == 0 || components == 0 {
            return Err(OperatorError::Degenerate);
        }
        if equations.is_empty() {
            return Err(OperatorError::NoEquations);
        }
        let mut cleaned = Vec::with_capacity(equations.len());
        for (j, eq) in equations.into_iter().enumerate() {
            let equation = j + 1;
            let mut kept = Equation::new();
            for (alpha, coeffs) in eq {
                if alpha.dim() != dim {
                    return Err(OperatorError::IndexDimension {
                        equation,
                        expected: dim,
                        got: alpha.dim(),
                        index: alpha,
                    });
                }
                if coeffs.len() != components {
                    return Err(OperatorError::CoefficientLength {
                        equation,
                        expected: components,
                        got: coeffs.len(),
                        index: alpha,
                    });
                }
                if let Some(p) = coeffs.iter().find(|p| p.dim() != dim) {
                    return Err(OperatorError::PolynomialDimension { equation, expected: dim, got: p.dim() });
                }
                if coeffs.iter().any(|p| !p.is_zero()) {
                    kept.insert(alpha, coeffs);
                }
            }
            if kept.is_empty() {
                return Err(OperatorError::EmptyEquation { equation });
            }
            cleaned.push(kept);
        }
        Ok(OperatorSystem { dim, components, equations: cleaned })
    }

    /// Constant-coefficient operator from integer coefficient rows. Handy in
    /// tests and examples.
    pub fn with_constant_coefficients(
        dim: usize,
        components: usize,
        equations: &[Vec<(MultiIndex, Vec<i64>)>],
    ) -> Result<Self, OperatorError> {
        let eqs = equations
            .iter()
            .map(|terms| {
                let mut eq = Equation::new();
                for (alpha, coeffs) in terms {
                    let polys = coeffs
                        .iter()
                        .map(|&c| Polynomial::constant(dim, BigRational::from_integer(c.into())))
                        .collect();
                    eq.insert(alpha.clone(), polys);
                }
                eq
            })
            .collect();
        OperatorSystem::new(dim, components, eqs)
    }

    /// Spatial dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of measure components `m`.
    pub fn components(&self) -> usize {
        self.components
    }

    /// Number of equations `n`.
    pub fn equation_count(&self) -> usize {
        self.equations.len()
    }

    pub fn equations(&self) -> &[Equation] {
        &self.equations
    }

    pub fn equation(&self, j: usize) -> &Equation {
        &self.equations[j]
    }

    /// `I_j` for 0-based `j`.
    pub fn index_set(&self, j: usize) -> impl Iterator<Item = &MultiIndex> {
        self.equations[j].keys()
    }

    pub fn max_order(&self) -> u32 {
        self.equations
            .iter()
            .flat_map(|eq| eq.keys().map(MultiIndex::order))
            .max()
            .unwrap_or(0)
    }

    /// Appends the equations of `other`. Both systems must share `d` and `m`.
    pub fn extended_with(&self, other: &OperatorSystem) -> Result<OperatorSystem, OperatorError> {
        if other.dim != self.dim || other.components != self.components {
            return Err(OperatorError::Degenerate);
        }
        let mut eqs = self.equations.clone();
        eqs.extend(other.equations.iter().cloned());
        OperatorSystem::new(self.dim, self.components, eqs)
    }

    /// Multiplies every coefficient of equation `j` by `s`.
    pub fn with_scaled_equation(&self, j: usize, s: &BigRational) -> Result<OperatorSystem, OperatorError> {
        let mut eqs = self.equations.clone();
        for coeffs in eqs[j].values_mut() {
            for p in coeffs.iter_mut() {
                *p = p.scale(s);
            }
        }
        OperatorSystem::new(self.dim, self.components, eqs)
    }
}

/// Evaluates a coefficient polynomial at `x`.
pub fn evaluate_coefficient(c: &Polynomial, x: &[f64]) -> Result<f64, DimensionMismatch> {
    c.evaluate(x)
}

/// Canonical DSL text. `parse_operator(&serialize_operator(op)) == op`.
pub fn serialize_operator(op: &OperatorSystem) -> String {
    op.to_string()
}

impl fmt::Display for OperatorSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "dims {};", self.dim)?;
        writeln!(f, "components {};", self.components)?;
        for eq in &self.equations {
            let mut first = true;
            for (alpha, coeffs) in eq {
                for (k, p) in coeffs.iter().enumerate() {
                    if p.is_zero() {
                        continue;
                    }
                    if !first {
                        write!(f, " + ")?;
                    }
                    first = false;
                    if !p.is_one() {
                        write!(f, "({p}) * ")?;
                    }
                    let idx: Vec<String> = alpha.exponents().iter().map(u32::to_string).collect();
                    write!(f, "D[{}] u{}", idx.join(","), k + 1)?;
                }
            }
            writeln!(f, " = 0;")?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Parser

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Position {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("{pos}: syntax error: {message}")]
    Syntax { pos: Position, message: String },
    #[error("{pos}: multi-index or variable needs dimension {got}, operator has dimension {expected}")]
    DimensionMismatch { pos: Position, expected: usize, got: usize },
    #[error("{pos}: negative exponent")]
    NegativeExponent { pos: Position },
    #[error("{pos}: component u{index} is not declared (components 1..={declared})")]
    UndeclaredComponent { pos: Position, index: usize, declared: usize },
    #[error("invalid operator: {0}")]
    Invalid(#[from] OperatorError),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Decimal(BigRational),
    Sym(char),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(i) => write!(f, "`{i}`"),
            Tok::Decimal(r) => write!(f, "`{r}`"),
            Tok::Sym(c) => write!(f, "`{c}`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, Position)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let pos = Position { line, col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
        } else if c.is_whitespace() {
            i += 1;
            col += 1;
        } else if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphabetic() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push((Tok::Ident(chars[start..i].iter().collect()), pos));
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let int_part: String = chars[start..i].iter().collect();
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                i += 1;
                let fstart = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let frac: String = chars[fstart..i].iter().collect();
                let numer: BigInt = format!("{int_part}{frac}").parse().expect("digits");
                let denom = num_traits::pow(BigInt::from(10), frac.len());
                out.push((Tok::Decimal(BigRational::new(numer, denom)), pos));
            } else {
                out.push((Tok::Int(int_part.parse().expect("digits")), pos));
            }
            col += i - start;
        } else if "[](),+-*/^=;".contains(c) {
            out.push((Tok::Sym(c), pos));
            i += 1;
            col += 1;
        } else {
            return Err(ParseError::Syntax { pos, message: format!("unexpected character `{c}`") });
        }
    }
    out.push((Tok::Eof, Position { line, col }));
    Ok(out)
}

/// Polynomial before the ambient dimension is known: exponent vectors are
/// indexed by variable and may be shorter than `d`.
#[derive(Debug, Clone, Default)]
struct RawPoly {
    terms: BTreeMap<Vec<u32>, BigRational>,
    pos: Option<Position>,
}

impl RawPoly {
    fn constant(c: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Vec::new(), c);
        RawPoly { terms, pos: None }
    }

    fn variable(var: usize, exp: u32, pos: Position) -> Self {
        let mut e = vec![0; var + 1];
        e[var] = exp;
        let mut terms = BTreeMap::new();
        terms.insert(trim(e), BigRational::one());
        RawPoly { terms, pos: Some(pos) }
    }

    fn add(mut self, other: RawPoly, sign: i32) -> RawPoly {
        for (m, c) in other.terms {
            let c = if sign < 0 { -c } else { c };
            *self.terms.entry(m).or_insert_with(BigRational::zero) += c;
        }
        self.terms.retain(|_, c| !c.is_zero());
        self.pos = self.pos.or(other.pos);
        self
    }

    fn mul(&self, other: &RawPoly) -> RawPoly {
        let mut terms: BTreeMap<Vec<u32>, BigRational> = BTreeMap::new();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let len = a.len().max(b.len());
                let m: Vec<u32> = (0..len)
                    .map(|k| a.get(k).copied().unwrap_or(0) + b.get(k).copied().unwrap_or(0))
                    .collect();
                *terms.entry(trim(m)).or_insert_with(BigRational::zero) += ca * cb;
            }
        }
        terms.retain(|_, c| !c.is_zero());
        RawPoly { terms, pos: self.pos.or(other.pos) }
    }

    fn num_vars(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    fn into_polynomial(self, dim: usize) -> Polynomial {
        Polynomial::from_terms(
            dim,
            self.terms.into_iter().map(|(mut m, c)| {
                m.resize(dim, 0);
                (MultiIndex::new(m), c)
            }),
        )
    }
}

fn trim(mut v: Vec<u32>) -> Vec<u32> {
    while v.last() == Some(&0) {
        v.pop();
    }
    v
}

struct RawTerm {
    coeff: RawPoly,
    alpha: Vec<u32>,
    alpha_pos: Position,
    component: usize,
}

struct Parser {
    toks: Vec<(Tok, Position)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Position {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, Position) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn is_sym(&self, c: char) -> bool {
        matches!(self.peek(), Tok::Sym(s) if *s == c)
    }

    fn is_ident(&self, name: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == name)
    }

    fn syntax<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax { pos: self.pos(), message: message.into() })
    }

    fn expect_sym(&mut self, c: char) -> Result<(), ParseError> {
        if self.is_sym(c) {
            self.bump();
            Ok(())
        } else {
            self.syntax(format!("expected `{c}`, found {}", self.peek()))
        }
    }

    fn expect_ident(&mut self, name: &str) -> Result<(), ParseError> {
        if self.is_ident(name) {
            self.bump();
            Ok(())
        } else {
            self.syntax(format!("expected `{name}`, found {}", self.peek()))
        }
    }

    /// Non-negative integer; a leading `-` is reported as a negative exponent.
    fn natural(&mut self) -> Result<u32, ParseError> {
        match self.peek().clone() {
            Tok::Int(i) => {
                let pos = self.pos();
                self.bump();
                u32::try_from(&i).map_err(|_| ParseError::Syntax { pos, message: format!("integer {i} too large") })
            }
            Tok::Sym('-') => Err(ParseError::NegativeExponent { pos: self.pos() }),
            other => self.syntax(format!("expected a non-negative integer, found {other}")),
        }
    }

    fn optional_semicolon(&mut self) {
        if self.is_sym(';') {
            self.bump();
        }
    }

    fn system(&mut self) -> Result<OperatorSystem, ParseError> {
        let mut dims: Option<(usize, Position)> = None;
        let mut comps: Option<(usize, Position)> = None;
        loop {
            if self.is_ident("dims") {
                self.bump();
                let pos = self.pos();
                dims = Some((self.natural()? as usize, pos));
                self.optional_semicolon();
            } else if self.is_ident("components") {
                self.bump();
                let pos = self.pos();
                comps = Some((self.natural()? as usize, pos));
                self.optional_semicolon();
            } else {
                break;
            }
        }
        let mut raw_equations = Vec::new();
        while *self.peek() != Tok::Eof {
            raw_equations.push(self.equation()?);
        }
        if raw_equations.is_empty() {
            return self.syntax("expected at least one equation");
        }

        let dim = match dims {
            Some((0, pos)) => return Err(ParseError::Syntax { pos, message: "dimension must be positive".into() }),
            Some((d, _)) => d,
            None => raw_equations[0][0].alpha.len(),
        };
        for term in raw_equations.iter().flatten() {
            if term.alpha.len() != dim {
                return Err(ParseError::DimensionMismatch { pos: term.alpha_pos, expected: dim, got: term.alpha.len() });
            }
            let vars = term.coeff.num_vars();
            if vars > dim {
                return Err(ParseError::DimensionMismatch {
                    pos: term.coeff.pos.unwrap_or(term.alpha_pos),
                    expected: dim,
                    got: vars,
                });
            }
        }
        let max_component = raw_equations.iter().flatten().map(|t| t.component).max().unwrap_or(0);
        let components = match comps {
            Some((0, pos)) => return Err(ParseError::Syntax { pos, message: "component count must be positive".into() }),
            Some((m, _)) => m,
            None => max_component,
        };
        for term in raw_equations.iter().flatten() {
            if term.component > components {
                return Err(ParseError::UndeclaredComponent {
                    pos: term.alpha_pos,
                    index: term.component,
                    declared: components,
                });
            }
        }

        let equations = raw_equations
            .into_iter()
            .map(|terms| {
                let mut eq = Equation::new();
                for t in terms {
                    let coeffs = eq
                        .entry(MultiIndex::new(t.alpha))
                        .or_insert_with(|| vec![Polynomial::zero(dim); components]);
                    let k = t.component - 1;
                    coeffs[k] = coeffs[k].add(&t.coeff.into_polynomial(dim));
                }
                eq
            })
            .collect();
        Ok(OperatorSystem::new(dim, components, equations)?)
    }

    fn equation(&mut self) -> Result<Vec<RawTerm>, ParseError> {
        let mut terms = Vec::new();
        let mut sign = 1;
        if self.is_sym('-') {
            self.bump();
            sign = -1;
        } else if self.is_sym('+') {
            self.bump();
        }
        loop {
            let mut t = self.term()?;
            if sign < 0 {
                t.coeff = RawPoly::default().add(t.coeff, -1);
            }
            terms.push(t);
            if self.is_sym('+') {
                self.bump();
                sign = 1;
            } else if self.is_sym('-') {
                self.bump();
                sign = -1;
            } else {
                break;
            }
        }
        self.expect_sym('=')?;
        match self.peek() {
            Tok::Int(i) if i.is_zero() => {
                self.bump();
            }
            other => return self.syntax(format!("right-hand side must be `0`, found {other}")),
        }
        self.optional_semicolon();
        Ok(terms)
    }

    fn term(&mut self) -> Result<RawTerm, ParseError> {
        let mut coeff = RawPoly::constant(BigRational::one());
        while !self.is_ident("D") {
            let f = self.factor()?;
            coeff = coeff.mul(&f);
            self.expect_sym('*')?;
        }
        self.bump();
        let alpha_pos = self.pos();
        self.expect_sym('[')?;
        let mut alpha = vec![self.natural()?];
        while self.is_sym(',') {
            self.bump();
            alpha.push(self.natural()?);
        }
        self.expect_sym(']')?;
        self.expect_ident("u")?;
        let cpos = self.pos();
        let component = self.natural()? as usize;
        if component == 0 {
            return Err(ParseError::UndeclaredComponent { pos: cpos, index: 0, declared: 0 });
        }
        Ok(RawTerm { coeff, alpha, alpha_pos, component })
    }

    fn poly(&mut self) -> Result<RawPoly, ParseError> {
        let mut sign = 1;
        if self.is_sym('-') {
            self.bump();
            sign = -1;
        } else if self.is_sym('+') {
            self.bump();
        }
        let mut acc = RawPoly::default();
        loop {
            let mut mono = self.factor()?;
            while self.is_sym('*') {
                self.bump();
                mono = mono.mul(&self.factor()?);
            }
            acc = acc.add(mono, sign);
            if self.is_sym('+') {
                sign = 1;
            } else if self.is_sym('-') {
                sign = -1;
            } else {
                return Ok(acc);
            }
            self.bump();
        }
    }

    fn factor(&mut self) -> Result<RawPoly, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Sym('(') => {
                self.bump();
                let mut p = self.poly()?;
                self.expect_sym(')')?;
                p.pos = p.pos.or(Some(pos));
                Ok(p)
            }
            Tok::Sym('-') => {
                self.bump();
                let f = self.factor()?;
                Ok(RawPoly::default().add(f, -1))
            }
            Tok::Int(n) => {
                self.bump();
                if self.is_sym('/') {
                    self.bump();
                    match self.peek().clone() {
                        Tok::Int(d) if !d.is_zero() => {
                            self.bump();
                            Ok(RawPoly::constant(BigRational::new(n, d)))
                        }
                        other => self.syntax(format!("expected a nonzero denominator, found {other}")),
                    }
                } else {
                    Ok(RawPoly::constant(BigRational::from_integer(n)))
                }
            }
            Tok::Decimal(r) => {
                self.bump();
                Ok(RawPoly::constant(r))
            }
            Tok::Ident(name) if name == "x" => {
                self.bump();
                let var = self.natural()? as usize;
                if var == 0 {
                    return Err(ParseError::Syntax { pos, message: "variables are numbered from x1".into() });
                }
                let exp = if self.is_sym('^') {
                    self.bump();
                    self.natural()?
                } else {
                    1
                };
                Ok(RawPoly::variable(var - 1, exp, pos))
            }
            other => self.syntax(format!("expected a coefficient or `D[...]`, found {other}")),
        }
    }
}

/// Parses the operator DSL.
pub fn parse_operator(source: &str) -> Result<OperatorSystem, ParseError> {
    let toks = lex(source)?;
    Parser { toks, at: 0 }.system()
}

impl std::str::FromStr for OperatorSystem {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_operator(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn worked_example_parses() {
        let op = parse_operator("D[1,0] u1 + D[0,1] u1 + D[0,2] u1 = 0").unwrap();
        assert_eq!((op.dim(), op.components(), op.equation_count()), (2, 1, 1));
        let idx: Vec<_> = op.index_set(0).cloned().collect();
        assert_eq!(idx, vec![MultiIndex::from([0, 1]), MultiIndex::from([0, 2]), MultiIndex::from([1, 0])]);
    }

    #[test]
    fn two_components_share_a_multi_index() {
        let op = parse_operator("D[1,0] u1 + D[1,0] u2 = 0").unwrap();
        assert_eq!((op.dim(), op.components(), op.equation_count()), (2, 2, 1));
        let coeffs = &op.equation(0)[&MultiIndex::from([1, 0])];
        assert!(coeffs.iter().all(Polynomial::is_one));
    }

    #[test]
    fn polynomial_coefficient() {
        let op = parse_operator("(x1^2+1) * D[2,0,0] u3 = 0").unwrap();
        assert_eq!((op.dim(), op.components()), (3, 3));
        let coeffs = &op.equation(0)[&MultiIndex::from([2, 0, 0])];
        assert!(coeffs[0].is_zero() && coeffs[1].is_zero());
        let expected = Polynomial::from_terms(3, [(MultiIndex::from([2, 0, 0]), q(1, 1)), (MultiIndex::zero(3), q(1, 1))]);
        assert_eq!(coeffs[2], expected);
    }

    #[test]
    fn declarations_override_inference() {
        let op = parse_operator("dims 3; components 4;\nx3 * D[1,0,0] u1 = 0;").unwrap();
        assert_eq!((op.dim(), op.components()), (3, 4));
    }

    #[test]
    fn comments_subtraction_and_decimals() {
        let src = "# comment\n- D[1,0] u1 - 0.5 * D[0,1] u1 + 2/3*x1*x2 * D[0,0] u1 = 0; # trailing\n";
        let op = parse_operator(src).unwrap();
        let eq = op.equation(0);
        assert_eq!(eq[&MultiIndex::from([1, 0])][0], Polynomial::constant(2, q(-1, 1)));
        assert_eq!(eq[&MultiIndex::from([0, 1])][0], Polynomial::constant(2, q(-1, 2)));
        assert_eq!(
            eq[&MultiIndex::from([0, 0])][0],
            Polynomial::from_terms(2, [(MultiIndex::from([1, 1]), q(2, 3))])
        );
    }

    #[test]
    fn errors_carry_positions() {
        match parse_operator("D[1,0] u1 + D[1] u1 = 0") {
            Err(ParseError::DimensionMismatch { pos, expected: 2, got: 1 }) => assert_eq!(pos, Position { line: 1, col: 14 }),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_operator("D[-1,0] u1 = 0"), Err(ParseError::NegativeExponent { .. })));
        assert!(matches!(parse_operator("x1^-2 * D[1,0] u1 = 0"), Err(ParseError::NegativeExponent { .. })));
        assert!(matches!(
            parse_operator("components 1; D[1,0] u2 = 0"),
            Err(ParseError::UndeclaredComponent { index: 2, declared: 1, .. })
        ));
        assert!(matches!(parse_operator("D[1,0] u0 = 0"), Err(ParseError::UndeclaredComponent { index: 0, .. })));
        match parse_operator("D[1,0] u1 = 1") {
            Err(ParseError::Syntax { pos, .. }) => assert_eq!(pos.col, 13),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_operator("x3 * D[1,0] u1 = 0"), Err(ParseError::DimensionMismatch { got: 3, .. })));
        assert!(matches!(parse_operator("D[1,0] u1 $ = 0"), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse_operator(""), Err(ParseError::Syntax { .. })));
    }

    #[test]
    fn cancelled_equation_is_rejected() {
        let err = parse_operator("D[1,0] u1 - D[1,0] u1 = 0").unwrap_err();
        assert_eq!(err, ParseError::Invalid(OperatorError::EmptyEquation { equation: 1 }));
    }

    #[test]
    fn round_trips() {
        for src in [
            "D[1,0] u1 + D[0,1] u1 + D[0,2] u1 = 0",
            "D[1,0] u1 + D[0,1] u2 = 0",
            "(1/3*x1^2*x2 - 7/5) * D[2,0] u1 + (x2) * D[0,0] u2 = 0; 3 * D[0,1] u2 = 0",
        ] {
            let op = parse_operator(src).unwrap();
            let text = serialize_operator(&op);
            assert_eq!(parse_operator(&text).unwrap(), op, "{text}");
        }
    }

    #[test]
    fn evaluate_coefficient_checks_dimension() {
        let op = parse_operator("(x1*x2) * D[1,0] u1 = 0").unwrap();
        let c = &op.equation(0)[&MultiIndex::from([1, 0])][0];
        assert_eq!(evaluate_coefficient(c, &[3.0, -1.0]).unwrap(), -3.0);
        assert!(evaluate_coefficient(c, &[3.0]).is_err());
    }
}
