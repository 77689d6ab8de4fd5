//! Kernel cones of the principal symbol.
//!
//! The intersection cone at `x` is the set of real `f` with
//! `A_j(x, ξ) f = 0` for every `ξ ∈ P_j` and every equation `j`. Since every
//! `α ∈ I'_j` has weighted degree one, the symbol row is a combination of
//! distinct monomials `ξ^α`, and it vanishes on `P_j` only if each monomial
//! coefficient `Σ_k a^α_{jk}(x) f_k` vanishes. [`intersection_cone_exact`]
//! uses that reduction with rational arithmetic; [`intersection_cone_sampled`]
//! evaluates the symbol on manifold samples and takes a numerical nullspace.
//! The two are independent routes to the same subspace.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::frame::AnisotropicFrame;
use crate::rational;
use crate::symbol::{evaluate_symbol, symbol_row, PrincipalPart};

/// Default relative singular-value threshold.
pub const DEFAULT_CONE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConeMethod {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquationContribution {
    /// Rank of the rows contributed by this equation alone.
    pub rank: usize,
    /// Dimension of this equation's own kernel cone.
    pub kernel_dimension: usize,
}

/// A subspace of `ℝ^m` with an orthonormal basis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeResult {
    pub dimension: usize,
    pub basis: Vec<Vec<f64>>,
    pub method: ConeMethod,
    /// Per basis vector, the largest residual of the defining rows.
    pub residuals: Vec<f64>,
    pub per_equation: BTreeMap<usize, EquationContribution>,
    /// Set when the sampled system had fewer rows than unknowns, so the
    /// dimension may be overestimated.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub undersampled: bool,
}

impl ConeResult {
    pub fn basis_matrix(&self, m: usize) -> DMatrix<f64> {
        DMatrix::from_fn(m, self.dimension, |i, k| self.basis[k][i])
    }

    pub fn contains(&self, f: &[f64], tol: f64) -> bool {
        let v = DVector::from_column_slice(f);
        let b = self.basis_matrix(f.len());
        let proj = &b * (b.transpose() * &v);
        (v - proj).norm() <= tol * f.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConeError {
    #[error("point has {got} coordinates, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("direction has {got} components, expected {expected}")]
    ComponentMismatch { expected: usize, got: usize },
    #[error("point coordinates must be finite")]
    NonFinite,
    #[error("need one frame per equation ({expected}), got {got}")]
    FrameCount { expected: usize, got: usize },
    #[error("direction must be a unit vector (norm {norm})")]
    NotUnit { norm: f64 },
    #[error("direction must be nonzero")]
    ZeroDirection,
}

fn check_point(pp: &PrincipalPart, x: &[f64]) -> Result<(), ConeError> {
    if x.len() != pp.dim() {
        return Err(ConeError::DimensionMismatch { expected: pp.dim(), got: x.len() });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(ConeError::NonFinite);
    }
    Ok(())
}

fn check_frames(pp: &PrincipalPart, frames: &[AnisotropicFrame]) -> Result<(), ConeError> {
    if frames.len() != pp.equation_count() {
        return Err(ConeError::FrameCount { expected: pp.equation_count(), got: frames.len() });
    }
    if let Some(f) = frames.iter().find(|f| f.dim() != pp.dim()) {
        return Err(ConeError::DimensionMismatch { expected: pp.dim(), got: f.dim() });
    }
    Ok(())
}

/// Orthonormal basis for the span of `cols` (each of length `m`), with the
/// first significant entry of each vector made positive.
fn orthonormalize(cols: &[Vec<f64>], m: usize) -> Vec<Vec<f64>> {
    if cols.is_empty() {
        return Vec::new();
    }
    let a = DMatrix::from_fn(m, cols.len(), |i, k| cols[k][i]);
    let q = a.qr().q();
    (0..cols.len()).map(|k| canonical_sign(q.column(k).iter().copied().collect())).collect()
}

fn canonical_sign(mut v: Vec<f64>) -> Vec<f64> {
    if let Some(first) = v.iter().copied().find(|x| x.abs() > 1e-12) {
        if first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
    v
}

/// Nullspace of the stacked coefficient matrix `M` with rows
/// `(a^α_{jk}(x))_k`, `α ∈ I'_j`, computed in exact arithmetic (`x` is
/// converted to rationals without rounding).
pub fn intersection_cone_exact(pp: &PrincipalPart, x: &[f64]) -> Result<ConeResult, ConeError> {
    check_point(pp, x)?;
    let m = pp.components();
    let xq: Vec<BigRational> = x.iter().map(|&v| BigRational::from_float(v).expect("finite")).collect();
    let mut all_rows: Vec<Vec<BigRational>> = Vec::new();
    let mut per_equation = BTreeMap::new();
    for (j, eq) in pp.equations().iter().enumerate() {
        let rows: Vec<Vec<BigRational>> = eq
            .values()
            .map(|coeffs| coeffs.iter().map(|p| p.evaluate_exact(&xq).expect("dimension checked")).collect())
            .collect();
        let rank = rational::rank(&rows);
        per_equation.insert(j + 1, EquationContribution { rank, kernel_dimension: m - rank });
        all_rows.extend(rows);
    }
    let null = rational::nullspace(&all_rows, m);
    let cols: Vec<Vec<f64>> = null
        .iter()
        .map(|v| v.iter().map(|q| q.to_f64().expect("finite")).collect())
        .collect();
    let basis = orthonormalize(&cols, m);
    let float_rows: Vec<Vec<f64>> = all_rows
        .iter()
        .map(|r| r.iter().map(|q| if q.is_zero() { 0.0 } else { q.to_f64().unwrap_or(f64::NAN) }).collect())
        .collect();
    let residuals = basis
        .iter()
        .map(|b| {
            float_rows
                .iter()
                .map(|r| r.iter().zip(b).map(|(a, v)| a * v).sum::<f64>().abs())
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(ConeResult { dimension: basis.len(), basis, method: ConeMethod::Exact, residuals, per_equation, undersampled: false })
}

/// Stacks `Re` and `Im` of `A_j(x, ξ_i)` for `n_samples` points of each
/// `P_j` into a real matrix with `m` columns.
fn sampled_rows(
    pp: &PrincipalPart,
    frames: &[AnisotropicFrame],
    x: &[f64],
    n_samples: usize,
    seed: u64,
) -> Vec<(usize, Vec<f64>)> {
    let mut rows = Vec::new();
    for (j, frame) in frames.iter().enumerate() {
        for xi in frame.sample_manifold(n_samples, seed.wrapping_add(j as u64)) {
            let row = symbol_row(pp, j, x, &xi).expect("dimension checked");
            rows.push((j, row.iter().map(|c| c.re).collect()));
            rows.push((j, row.iter().map(|c| c.im).collect()));
        }
    }
    rows
}

/// Right singular vectors of `a` whose singular values are at most
/// `tol · σ_max`, plus the numerical rank. Short matrices are padded with
/// zero rows so the full right basis is available.
fn numerical_nullspace(a: &DMatrix<f64>, tol: f64) -> (Vec<Vec<f64>>, usize) {
    let m = a.ncols();
    let padded = if a.nrows() < m {
        let mut p = DMatrix::zeros(m, m);
        p.view_mut((0, 0), (a.nrows(), m)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let sigma = &svd.singular_values;
    let smax = sigma.iter().copied().fold(0.0, f64::max);
    let mut null = Vec::new();
    let mut rank = 0;
    for (i, &s) in sigma.iter().enumerate() {
        if smax > 0.0 && s > tol * smax {
            rank += 1;
        } else {
            null.push(v_t.row(i).iter().copied().collect());
        }
    }
    (null, rank)
}

/// Numerical nullspace of the sampled symbol, threshold `tol · σ_max`.
pub fn intersection_cone_sampled(
    pp: &PrincipalPart,
    frames: &[AnisotropicFrame],
    x: &[f64],
    n_samples: usize,
    seed: u64,
    tol: f64,
) -> Result<ConeResult, ConeError> {
    check_point(pp, x)?;
    check_frames(pp, frames)?;
    let m = pp.components();
    let rows = sampled_rows(pp, frames, x, n_samples, seed);
    let to_matrix = |rows: &[&Vec<f64>]| DMatrix::from_fn(rows.len(), m, |i, k| rows[i][k]);

    let mut per_equation = BTreeMap::new();
    for j in 0..pp.equation_count() {
        let own: Vec<&Vec<f64>> = rows.iter().filter(|(e, _)| *e == j).map(|(_, r)| r).collect();
        let (_, rank) = numerical_nullspace(&to_matrix(&own), tol);
        per_equation.insert(j + 1, EquationContribution { rank, kernel_dimension: m - rank });
    }
    let all: Vec<&Vec<f64>> = rows.iter().map(|(_, r)| r).collect();
    let stacked = to_matrix(&all);
    let (null, _) = numerical_nullspace(&stacked, tol);
    let basis = orthonormalize(&null, m);
    let residuals = basis
        .iter()
        .map(|b| (&stacked * DVector::from_column_slice(b)).amax())
        .collect();
    Ok(ConeResult {
        dimension: basis.len(),
        basis,
        method: ConeMethod::Sampled,
        residuals,
        per_equation,
        undersampled: n_samples < m,
    })
}

/// Principal angles between two subspaces given by orthonormal bases,
/// ascending. Uses `atan2(sin, cos)` so that tiny angles keep full relative
/// accuracy. `None` when the dimensions differ.
pub fn principal_angles(u: &ConeResult, v: &ConeResult) -> Option<Vec<f64>> {
    if u.dimension != v.dimension {
        return None;
    }
    let k = u.dimension;
    if k == 0 {
        return Some(Vec::new());
    }
    let m = u.basis[0].len();
    let ub = u.basis_matrix(m);
    let vb = v.basis_matrix(m);
    let cross = ub.transpose() * &vb;
    let mut cos: Vec<f64> = cross.singular_values().iter().map(|s| s.min(1.0)).collect();
    cos.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    let residual = &vb - &ub * &cross;
    let mut sin: Vec<f64> = residual.singular_values().iter().map(|s| s.min(1.0)).collect();
    sin.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    Some(cos.iter().zip(&sin).map(|(c, s)| s.atan2(*c)).collect())
}

/// Largest principal angle, `None` when dimensions differ.
pub fn max_principal_angle(u: &ConeResult, v: &ConeResult) -> Option<f64> {
    principal_angles(u, v).map(|a| a.into_iter().fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Membership {
    pub member: bool,
    /// Minimizing frequency on the manifold.
    pub witness: Vec<f64>,
    /// `‖A(x, witness) f‖ / ‖f‖`.
    pub min_residual: f64,
}

fn restricted_residual(pp: &PrincipalPart, x: &[f64], xi: &[f64], f: &[f64], fnorm: f64) -> f64 {
    let a = evaluate_symbol(pp, x, xi).expect("dimension checked");
    (0..pp.equation_count())
        .map(|j| a.apply_row(j, f).norm_sqr())
        .sum::<f64>()
        .sqrt()
        / fnorm
}

/// Whether `f` lies in the union cone `∪_{ξ∈P} Ker A(x, ξ)`: the smallest
/// singular value of `A(x, ξ)` restricted to `span{f}` is minimized over
/// `n_samples` points of `P`, then polished by a compass search on the
/// direction sphere.
pub fn union_wave_cone_membership(
    pp: &PrincipalPart,
    frame: &AnisotropicFrame,
    x: &[f64],
    f: &[f64],
    n_samples: usize,
    seed: u64,
    tol: f64,
) -> Result<Membership, ConeError> {
    check_point(pp, x)?;
    if f.len() != pp.components() {
        return Err(ConeError::ComponentMismatch { expected: pp.components(), got: f.len() });
    }
    let fnorm = f.iter().map(|v| v * v).sum::<f64>().sqrt();
    if fnorm == 0.0 {
        return Err(ConeError::ZeroDirection);
    }
    let eval = |u: &[f64]| -> Option<(f64, Vec<f64>)> {
        let xi = frame.project(u).ok()?;
        Some((restricted_residual(pp, x, &xi, f, fnorm), xi))
    };
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    for xi in frame.sample_manifold(n_samples.max(1), seed) {
        let r = restricted_residual(pp, x, &xi, f, fnorm);
        if best.as_ref().is_none_or(|(br, _, _)| r < *br) {
            best = Some((r, xi.clone(), xi));
        }
    }
    let (mut r_best, mut u, mut xi_best) = best.expect("at least one sample");
    let mut step = 0.25;
    let mut rounds = 0;
    while step > 1e-16 && r_best > 0.0 && rounds < 20_000 {
        rounds += 1;
        let mut improved = false;
        for k in 0..u.len() {
            for sign in [1.0, -1.0] {
                let mut trial = u.clone();
                trial[k] += sign * step;
                if let Some((r, xi)) = eval(&trial) {
                    if r < r_best {
                        r_best = r;
                        u = xi.clone();
                        xi_best = xi;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok(Membership { member: r_best < tol, witness: xi_best, min_residual: r_best })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointwiseReport {
    pub pass: bool,
    /// `max_j max_i |A_j(x, ξ_i) f|` over the samples of each `P_j`.
    pub max_residual: f64,
    pub per_equation: Vec<f64>,
    pub samples: usize,
    pub tolerance: f64,
}

/// Checks `A_j(x, ξ) f = 0` on `n_samples` points of every `P_j`.
pub fn check_theorem_pointwise(
    pp: &PrincipalPart,
    frames: &[AnisotropicFrame],
    x: &[f64],
    f: &[f64],
    n_samples: usize,
    seed: u64,
    tol: f64,
) -> Result<PointwiseReport, ConeError> {
    check_point(pp, x)?;
    check_frames(pp, frames)?;
    if f.len() != pp.components() {
        return Err(ConeError::ComponentMismatch { expected: pp.components(), got: f.len() });
    }
    let norm = f.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(ConeError::NotUnit { norm });
    }
    let per_equation: Vec<f64> = frames
        .iter()
        .enumerate()
        .map(|(j, frame)| {
            frame
                .sample_manifold(n_samples, seed.wrapping_add(j as u64))
                .iter()
                .map(|xi| {
                    let row = symbol_row(pp, j, x, xi).expect("dimension checked");
                    row.iter().zip(f).map(|(a, fk)| a * fk).sum::<num_complex::Complex64>().norm()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let max_residual = per_equation.iter().copied().fold(0.0, f64::max);
    Ok(PointwiseReport { pass: max_residual < tol, max_residual, per_equation, samples: n_samples, tolerance: tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::parse_operator;
    use crate::symbol::{principal_part, solve_weights};
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn setup(src: &str) -> (PrincipalPart, Vec<AnisotropicFrame>) {
        let pp = principal_part(&parse_operator(src).unwrap());
        let frames = solve_weights(&pp).unwrap().frames();
        (pp, frames)
    }

    #[test]
    fn transport_forces_zero() {
        let (pp, frames) = setup("D[1,0,0] u1 + 2 * D[0,1,0] u1 - 1/3 * D[0,0,1] u1 = 0");
        let exact = intersection_cone_exact(&pp, &[0.0; 3]).unwrap();
        assert_eq!(exact.dimension, 0);
        let sampled = intersection_cone_sampled(&pp, &frames, &[0.0; 3], 64, 1, DEFAULT_CONE_TOL).unwrap();
        assert_eq!(sampled.dimension, 0);
    }

    #[test]
    fn summed_components_leave_the_difference() {
        let (pp, frames) = setup("D[1,0] u1 + D[1,0] u2 = 0");
        let exact = intersection_cone_exact(&pp, &[0.3, 0.1]).unwrap();
        assert_eq!(exact.dimension, 1);
        assert!((exact.basis[0][0] - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((exact.basis[0][1] + FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(exact.per_equation[&1], EquationContribution { rank: 1, kernel_dimension: 1 });
        let sampled = intersection_cone_sampled(&pp, &frames, &[0.3, 0.1], 64, 1, DEFAULT_CONE_TOL).unwrap();
        assert!(max_principal_angle(&exact, &sampled).unwrap() < 1e-8);
    }

    #[test]
    fn zero_column_is_always_in_the_cone() {
        let (pp, frames) = setup("components 3; D[1,0] u1 + D[0,1] u2 = 0; D[0,1] u1 - D[1,0] u2 = 0");
        let exact = intersection_cone_exact(&pp, &[0.0, 0.0]).unwrap();
        assert_eq!(exact.dimension, 1);
        assert!(exact.contains(&[0.0, 0.0, 1.0], 1e-12));
        let sampled = intersection_cone_sampled(&pp, &frames, &[0.0, 0.0], 64, 5, DEFAULT_CONE_TOL).unwrap();
        assert!(max_principal_angle(&exact, &sampled).unwrap() < 1e-8);
    }

    #[test]
    fn divergence_has_trivial_intersection_cone() {
        let (pp, frames) = setup("D[1,0] u1 + D[0,1] u2 = 0");
        let sampled = intersection_cone_sampled(&pp, &frames, &[0.0, 0.0], 64, 2, DEFAULT_CONE_TOL).unwrap();
        assert_eq!(sampled.dimension, 0);
        assert_eq!(intersection_cone_exact(&pp, &[0.0, 0.0]).unwrap().dimension, 0);
    }

    #[test]
    fn undersampling_is_flagged() {
        let (pp, frames) = setup("components 3; D[1,0] u1 + D[0,1] u2 + D[1,0] u3 = 0");
        let sampled = intersection_cone_sampled(&pp, &frames, &[0.0, 0.0], 1, 0, DEFAULT_CONE_TOL).unwrap();
        assert!(sampled.undersampled);
        // One sample gives two real rows for three unknowns: at least one
        // spurious direction survives.
        assert!(sampled.dimension > intersection_cone_exact(&pp, &[0.0, 0.0]).unwrap().dimension);
    }

    #[test]
    fn x_dependent_coefficients() {
        // (x1) u1 + u2 under ∂1: at x1 = 2 the kernel is (1,-2)/√5.
        let (pp, frames) = setup("(x1) * D[1,0] u1 + D[1,0] u2 = 0; D[0,1] u3 = 0");
        let exact = intersection_cone_exact(&pp, &[2.0, 0.0]).unwrap();
        assert_eq!(exact.dimension, 1);
        let s5 = 5f64.sqrt();
        assert!((exact.basis[0][0] - 1.0 / s5).abs() < 1e-15 && (exact.basis[0][1] + 2.0 / s5).abs() < 1e-15);
        let sampled = intersection_cone_sampled(&pp, &frames, &[2.0, 0.0], 64, 0, DEFAULT_CONE_TOL).unwrap();
        assert!(max_principal_angle(&exact, &sampled).unwrap() < 1e-8);
    }

    #[test]
    fn principal_angles_of_known_planes() {
        let mk = |basis: Vec<Vec<f64>>| ConeResult {
            dimension: basis.len(),
            residuals: vec![0.0; basis.len()],
            basis,
            method: ConeMethod::Exact,
            per_equation: BTreeMap::new(),
            undersampled: false,
        };
        let t = 1e-9f64;
        let a = mk(vec![vec![1.0, 0.0, 0.0]]);
        let b = mk(vec![vec![t.cos(), t.sin(), 0.0]]);
        let ang = principal_angles(&a, &b).unwrap();
        assert!((ang[0] - t).abs() < 1e-20);
        let c = mk(vec![vec![0.0, 0.0, 1.0]]);
        assert!((principal_angles(&a, &c).unwrap()[0] - PI / 2.0).abs() < 1e-15);
        assert!(principal_angles(&a, &mk(vec![])).is_none());
    }

    #[test]
    fn divergence_union_membership() {
        let (pp, frames) = setup("D[1,0] u1 + D[0,1] u2 = 0");
        let m = union_wave_cone_membership(&pp, &frames[0], &[0.0, 0.0], &[1.0, 0.0], 64, 0, 1e-8).unwrap();
        assert!(m.member, "{m:?}");
        assert!(m.witness[0].abs() < 1e-8 && (m.witness[1].abs() - 1.0).abs() < 1e-8, "{m:?}");
    }

    #[test]
    fn transport_union_membership() {
        let (pp, frames) = setup("D[1,0,0] u1 = 0");
        let m = union_wave_cone_membership(&pp, &frames[0], &[0.0; 3], &[1.0], 64, 0, 1e-8).unwrap();
        assert!(m.member);
        assert!(m.witness[0].abs() < 1e-8);
        assert!(matches!(
            union_wave_cone_membership(&pp, &frames[0], &[0.0; 3], &[0.0], 4, 0, 1e-8),
            Err(ConeError::ZeroDirection)
        ));
    }

    #[test]
    fn non_member_of_union_cone() {
        // The symbol of ∂1 u1 + ∂2 u2 and ∂2 u1 - ∂1 u2 (Cauchy–Riemann) is
        // injective for every ξ ≠ 0.
        let (pp, _) = setup("D[1,0] u1 + D[0,1] u2 = 0; D[0,1] u1 - D[1,0] u2 = 0");
        let iso = AnisotropicFrame::isotropic(2);
        let m = union_wave_cone_membership(&pp, &iso, &[0.0, 0.0], &[1.0, 0.5], 64, 0, 1e-8).unwrap();
        assert!(!m.member && m.min_residual > 1.0);
    }

    #[test]
    fn pointwise_theorem_check() {
        let (pp, frames) = setup("D[1,0] u1 + D[1,0] u2 = 0");
        let f = [FRAC_1_SQRT_2, -FRAC_1_SQRT_2];
        let r = check_theorem_pointwise(&pp, &frames, &[0.7, -0.2], &f, 64, 0, 1e-10).unwrap();
        assert!(r.pass && r.max_residual < 1e-15);
        assert!(matches!(
            check_theorem_pointwise(&pp, &frames, &[0.0, 0.0], &[0.0, 0.0], 4, 0, 1e-10),
            Err(ConeError::NotUnit { .. })
        ));
    }

    #[test]
    fn pointwise_transport_residual_is_the_largest_symbol_value() {
        let (pp, frames) = setup("2 * D[1,0] u1 - D[0,1] u1 = 0");
        let r = check_theorem_pointwise(&pp, &frames, &[0.0, 0.0], &[1.0], 32, 4, 1e-10).unwrap();
        let expected = frames[0]
            .sample_manifold(32, 4)
            .iter()
            .map(|xi| 2.0 * PI * (2.0 * xi[0] - xi[1]).abs())
            .fold(0.0, f64::max);
        assert!(!r.pass);
        assert!((r.max_residual - expected).abs() < 1e-12 * expected);
    }
}
