//! Principal parts, principal symbols and homogeneity weights.
//!
//! The principal part of equation `j` keeps the derivative orders of `I_j`
//! that are maximal for the componentwise order. Its symbol
//!
//! ```text
//! A_j(x, ξ) = Σ_{α∈I'_j} Σ_k a^α_{jk}(x) (2πiξ)^α
//! ```
//!
//! is 1-homogeneous under `ξ_k ↦ λ^{β_k} ξ_k` exactly when `⟨α, β⟩ = 1` for
//! every `α ∈ I'_j`. [`solve_weights`] finds such a `β` in exact arithmetic.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::frame::AnisotropicFrame;
use crate::multi_index::MultiIndex;
use crate::operator::{Equation, OperatorSystem};
use crate::poly::{format_rational, DimensionMismatch};
use crate::rational::{self, LpOutcome, Q};

/// The non-dominated terms of every equation.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalPart {
    dim: usize,
    components: usize,
    equations: Vec<Equation>,
}

impl PrincipalPart {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn equation_count(&self) -> usize {
        self.equations.len()
    }

    pub fn equations(&self) -> &[Equation] {
        &self.equations
    }

    /// `I'_j` for 0-based `j`.
    pub fn dominating_set(&self, j: usize) -> Vec<MultiIndex> {
        self.equations[j].keys().cloned().collect()
    }

    /// Coefficient vectors `a^α_{j·}(x)` for every `α ∈ I'_j`.
    pub fn coefficients_at(&self, j: usize, x: &[f64]) -> Result<Vec<(MultiIndex, Vec<f64>)>, DimensionMismatch> {
        self.equations[j]
            .iter()
            .map(|(alpha, coeffs)| {
                let vals = coeffs.iter().map(|p| p.evaluate(x)).collect::<Result<Vec<_>, _>>()?;
                Ok((alpha.clone(), vals))
            })
            .collect()
    }
}

/// `I'_j` = maximal elements of `I_j` under the componentwise order.
pub fn principal_part(op: &OperatorSystem) -> PrincipalPart {
    let equations = op
        .equations()
        .iter()
        .map(|eq| {
            eq.iter()
                .filter(|(alpha, _)| !eq.keys().any(|other| alpha.is_dominated_by(other)))
                .map(|(a, c)| (a.clone(), c.clone()))
                .collect()
        })
        .collect();
    PrincipalPart { dim: op.dim(), components: op.components(), equations }
}

/// Row `j` holds `β^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneityWeights {
    rows: Vec<Vec<BigRational>>,
}

impl HomogeneityWeights {
    pub fn rows(&self) -> &[Vec<BigRational>] {
        &self.rows
    }

    pub fn row(&self, j: usize) -> &[BigRational] {
        &self.rows[j]
    }

    pub fn frame(&self, j: usize) -> AnisotropicFrame {
        AnisotropicFrame::new(self.rows[j].clone()).expect("solved weights are positive")
    }

    pub fn frames(&self) -> Vec<AnisotropicFrame> {
        (0..self.rows.len()).map(|j| self.frame(j)).collect()
    }

    pub fn to_strings(&self) -> Vec<Vec<String>> {
        self.rows.iter().map(|r| r.iter().map(format_rational).collect()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WeightError {
    #[error("equation {equation}: no β solves ⟨α, β⟩ = 1 on the principal multi-indices:\n{system}")]
    Infeasible { equation: usize, system: String },
    #[error("equation {equation}: ⟨α, β⟩ = 1 is solvable but has no strictly positive solution:\n{system}")]
    NoPositiveSolution { equation: usize, system: String },
}

impl WeightError {
    pub fn equation(&self) -> usize {
        match self {
            WeightError::Infeasible { equation, .. } | WeightError::NoPositiveSolution { equation, .. } => *equation,
        }
    }
}

fn describe_system(alphas: &[MultiIndex]) -> String {
    alphas
        .iter()
        .map(|a| {
            let terms: Vec<String> = a
                .exponents()
                .iter()
                .enumerate()
                .filter(|(_, &e)| e != 0)
                .map(|(k, &e)| if e == 1 { format!("b{}", k + 1) } else { format!("{e}*b{}", k + 1) })
                .collect();
            let lhs = if terms.is_empty() { "0".to_string() } else { terms.join(" + ") };
            format!("  {lhs} = 1")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Why a weight row could not be found.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightRowError {
    Infeasible,
    NoPositiveSolution,
}

/// Solves `⟨α, β⟩ = 1` for every `α` in `alphas`, `β ∈ ℚ^dim`, `β > 0`.
///
/// A unique solution is returned as is. When the solution set is an affine
/// subspace the minimum-norm element is used if strictly positive; otherwise
/// an exact LP maximizing `min_k β_k` (capped at 1) supplies a positive
/// vertex.
pub fn solve_weight_row(alphas: &[MultiIndex], dim: usize) -> Result<Vec<Q>, WeightRowError> {
    let a: Vec<Vec<Q>> = alphas
        .iter()
        .map(|al| al.exponents().iter().map(|&e| Q::from_integer(e.into())).collect())
        .collect();
    let b = vec![Q::one(); a.len()];
    let sol = rational::solve_affine(&a, &b, dim).ok_or(WeightRowError::Infeasible)?;
    let candidate = rational::min_norm(&sol);
    let beta = if candidate.iter().all(Signed::is_positive) {
        candidate
    } else if sol.null.is_empty() {
        return Err(WeightRowError::NoPositiveSolution);
    } else {
        positive_vertex(&a, dim).ok_or(WeightRowError::NoPositiveSolution)?
    };
    debug_assert!(alphas.iter().all(|al| al.weighted_degree(&beta).is_one()));
    Ok(beta)
}

/// [`solve_weight_row`] for every equation of the principal part. Equation
/// numbers in errors are 1-based.
pub fn solve_weights(pp: &PrincipalPart) -> Result<HomogeneityWeights, WeightError> {
    let mut rows = Vec::with_capacity(pp.equation_count());
    for (j, eq) in pp.equations().iter().enumerate() {
        let alphas: Vec<MultiIndex> = eq.keys().cloned().collect();
        match solve_weight_row(&alphas, pp.dim()) {
            Ok(beta) => rows.push(beta),
            Err(WeightRowError::Infeasible) => {
                return Err(WeightError::Infeasible { equation: j + 1, system: describe_system(&alphas) })
            }
            Err(WeightRowError::NoPositiveSolution) => {
                return Err(WeightError::NoPositiveSolution { equation: j + 1, system: describe_system(&alphas) })
            }
        }
    }
    Ok(HomogeneityWeights { rows })
}

/// Maximize `t` over `A β = 1, β_k - t - s_k = 0, t + s' = 1`, all variables
/// non-negative. A positive optimum gives a strictly positive `β`.
fn positive_vertex(a: &[Vec<Q>], d: usize) -> Option<Vec<Q>> {
    // Variable layout: β (d) | t | s (d) | s'.
    let nvars = 2 * d + 2;
    let t_col = d;
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for r in a {
        let mut row = vec![Q::zero(); nvars];
        row[..d].clone_from_slice(r);
        rows.push(row);
        rhs.push(Q::one());
    }
    for k in 0..d {
        let mut row = vec![Q::zero(); nvars];
        row[k] = Q::one();
        row[t_col] = -Q::one();
        row[d + 1 + k] = -Q::one();
        rows.push(row);
        rhs.push(Q::zero());
    }
    let mut cap = vec![Q::zero(); nvars];
    cap[t_col] = Q::one();
    cap[nvars - 1] = Q::one();
    rows.push(cap);
    rhs.push(Q::one());

    let mut c = vec![Q::zero(); nvars];
    c[t_col] = Q::one();
    match rational::maximize(&c, &rows, &rhs) {
        LpOutcome::Optimal { x, value } if value.is_positive() => Some(x[..d].to_vec()),
        _ => None,
    }
}

/// `A(x, ξ)` as an `n × m` complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolValue(pub DMatrix<Complex64>);

impl SymbolValue {
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn entry(&self, j: usize, k: usize) -> Complex64 {
        self.0[(j, k)]
    }

    /// Row `j` applied to a real vector `f`.
    pub fn apply_row(&self, j: usize, f: &[f64]) -> Complex64 {
        f.iter().enumerate().map(|(k, &fk)| self.0[(j, k)] * fk).sum()
    }
}

/// `(2πiξ)^α = (2πi)^{|α|} ξ^α`.
pub fn fourier_monomial(alpha: &MultiIndex, xi: &[f64]) -> Complex64 {
    let order = alpha.order();
    let i_pow = match order % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    };
    i_pow * (2.0 * PI).powi(order as i32) * alpha.monomial(xi)
}

/// Symbol row `j` only; used by per-equation routines.
pub fn symbol_row(pp: &PrincipalPart, j: usize, x: &[f64], xi: &[f64]) -> Result<Vec<Complex64>, DimensionMismatch> {
    if xi.len() != pp.dim() {
        return Err(DimensionMismatch { expected: pp.dim(), got: xi.len() });
    }
    let mut row = vec![Complex64::new(0.0, 0.0); pp.components()];
    for (alpha, coeffs) in &pp.equations[j] {
        let mono = fourier_monomial(alpha, xi);
        for (k, p) in coeffs.iter().enumerate() {
            if !p.is_zero() {
                row[k] += mono * p.evaluate(x)?;
            }
        }
    }
    Ok(row)
}

pub fn evaluate_symbol(pp: &PrincipalPart, x: &[f64], xi: &[f64]) -> Result<SymbolValue, DimensionMismatch> {
    let n = pp.equation_count();
    let m = pp.components();
    let mut mat = DMatrix::from_element(n, m, Complex64::new(0.0, 0.0));
    for j in 0..n {
        for (k, v) in symbol_row(pp, j, x, xi)?.into_iter().enumerate() {
            mat[(j, k)] = v;
        }
    }
    Ok(SymbolValue(mat))
}

/// A sample where the homogeneity identity was checked.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomogeneityWitness {
    pub equation: usize,
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    pub lambda: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomogeneityReport {
    pub trials: usize,
    pub max_relative_error: f64,
    pub worst: Option<HomogeneityWitness>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HomogeneityError {
    #[error("homogeneity violated in equation {} (relative error {:e})", .0.equation, .0.relative_error)]
    Violated(Box<HomogeneityWitness>),
    #[error("weights have {got} rows, principal part has {expected} equations")]
    Shape { expected: usize, got: usize },
}

pub const HOMOGENEITY_TOLERANCE: f64 = 1e-12;

/// Checks `A_j(x, δ_λ ξ) = λ A_j(x, ξ)` on random `(x, ξ, λ)`.
///
/// The error of entry `(j, k)` is measured relative to
/// `λ Σ_α |a^α_{jk}(x)| |2πξ|^α`, the magnitude of the summed terms, so
/// cancellation inside an entry does not inflate it.
pub fn check_homogeneity(
    pp: &PrincipalPart,
    weights: &HomogeneityWeights,
    trials: usize,
    seed: u64,
) -> Result<HomogeneityReport, HomogeneityError> {
    if weights.rows().len() != pp.equation_count() {
        return Err(HomogeneityError::Shape { expected: pp.equation_count(), got: weights.rows().len() });
    }
    let frames = weights.frames();
    let d = pp.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = HomogeneityReport { trials, max_relative_error: 0.0, worst: None };
    for _ in 0..trials {
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let xi: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let lambda: f64 = rng.random_range(-3.0f64..3.0).exp();
        for (j, frame) in frames.iter().enumerate() {
            let err = homogeneity_error(pp, j, frame, &x, &xi, lambda);
            if err > report.max_relative_error || report.worst.is_none() {
                report.max_relative_error = report.max_relative_error.max(err);
                report.worst = Some(HomogeneityWitness { equation: j + 1, x: x.clone(), xi: xi.clone(), lambda, relative_error: err });
            }
        }
    }
    match report.worst.as_ref() {
        Some(w) if w.relative_error >= HOMOGENEITY_TOLERANCE => Err(HomogeneityError::Violated(Box::new(w.clone()))),
        _ => Ok(report),
    }
}

fn homogeneity_error(pp: &PrincipalPart, j: usize, frame: &AnisotropicFrame, x: &[f64], xi: &[f64], lambda: f64) -> f64 {
    let scaled = frame.dilate(lambda, xi);
    let lhs = symbol_row(pp, j, x, &scaled).expect("dimension checked");
    let rhs = symbol_row(pp, j, x, xi).expect("dimension checked");
    let mut scale = vec![0.0; pp.components()];
    for (alpha, coeffs) in &pp.equations[j] {
        let mag = fourier_monomial(alpha, xi).norm();
        for (k, p) in coeffs.iter().enumerate() {
            scale[k] += p.evaluate(x).expect("dimension checked").abs() * mag;
        }
    }
    lhs.iter()
        .zip(&rhs)
        .zip(&scale)
        .map(|((l, r), s)| {
            let diff = (l - r * lambda).norm();
            if *s > 0.0 {
                diff / (lambda * s)
            } else {
                diff
            }
        })
        .fold(0.0, f64::max)
}

/// Per-equation `I_j`, `I'_j`, `β^j` and manifold, for reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquationSummary {
    pub equation: usize,
    pub index_set: Vec<MultiIndex>,
    pub dominating_set: Vec<MultiIndex>,
    pub weights: Option<Vec<String>>,
    pub manifold: Option<String>,
}

pub fn summarize(op: &OperatorSystem, pp: &PrincipalPart, weights: Option<&HomogeneityWeights>) -> Vec<EquationSummary> {
    (0..op.equation_count())
        .map(|j| EquationSummary {
            equation: j + 1,
            index_set: op.index_set(j).cloned().collect(),
            dominating_set: pp.dominating_set(j),
            weights: weights.map(|w| w.row(j).iter().map(format_rational).collect()),
            manifold: weights.map(|w| w.frame(j).describe_manifold()),
        })
        .collect()
}

/// `I_j ∖ I'_j`.
pub fn lower_order_terms(op: &OperatorSystem, pp: &PrincipalPart, j: usize) -> Vec<MultiIndex> {
    op.equation(j).keys().filter(|a| !pp.equations[j].contains_key(*a)).cloned().collect()
}
