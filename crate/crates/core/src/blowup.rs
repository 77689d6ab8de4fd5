//! The blow-up procedure: mollify at the anisotropic scale `ε^{β}`, recentre
//! at `z`, rescale, and normalize by `|μ_s|(E_ε)`.
//!
//! For equation `j` and a test function `φ`, the rescaled pairing is
//!
//! ```text
//! Σ_{α∈I_j} (−1)^{|α|} ε^{1−⟨α,β⟩} Σ_l ∫∫ Π_k ρ((z_k−y_k)/ε^{β_k} + w_k) a^α_{jl}(y) dμ_l(y) ∂^α φ(w) dw
//! ```
//!
//! Principal indices have `⟨α,β⟩ = 1`; every other index is dominated by a
//! principal one, so its factor `ε^{1−⟨α,β⟩}` tends to zero. Those terms
//! form the remainder `R_ε`.
//!
//! Atoms are summed exactly in `y`. A density cell is integrated exactly in
//! `y` through the mollifier's CDF, with the coefficient frozen at the cell
//! midpoint.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::bump::{profile, profile_cdf, BumpDerivatives, Mollifier};
use crate::cone::{check_theorem_pointwise, ConeError, PointwiseReport};
use crate::fourier::{
    mollifier_power_spectrum, multiplier_test_function, sample_mollifier, DirectionSymbol, FourierError,
    GridTestFunction, MultiplierSpec, UniformGrid,
};
use crate::frame::AnisotropicFrame;
use crate::measure::{check_afree, lebesgue_decompose, radon_nikodym, AfreeOptions, AfreeReport, DiscreteMeasure, MeasureError};
use crate::multi_index::MultiIndex;
use crate::operator::OperatorSystem;
use crate::singularity::{check_uniform_singularity, CertificateError, ScaleFunctions, SetStrategy, SingularityCertificate};
use crate::symbol::{fourier_monomial, principal_part, solve_weights, PrincipalPart, WeightError};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// A one-dimensional factor of a separable kernel in `w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel1d {
    /// `w ↦ ρ(c + w)`.
    Shifted(f64),
    /// `w ↦ s ∫_a^b ρ(u + w) du`.
    Cell { a: f64, b: f64, s: f64 },
}

impl Kernel1d {
    pub fn eval(&self, w: f64) -> f64 {
        match *self {
            Kernel1d::Shifted(c) => profile(c + w),
            Kernel1d::Cell { a, b, s } => s * (profile_cdf(b + w) - profile_cdf(a + w)),
        }
    }

    /// Closed interval outside which the kernel vanishes.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Kernel1d::Shifted(c) => (-1.0 - c, 1.0 - c),
            Kernel1d::Cell { a, b, .. } => (-1.0 - b, 1.0 - a),
        }
    }
}

/// A test function that can be paired with separable kernels.
pub trait TestFunction: Sync {
    fn dim(&self) -> usize;
    /// `∫ Π_k K_k(w_k) ∂^α φ(w) dw`.
    fn pairing(&self, kernel: &[Kernel1d], alpha: &MultiIndex) -> Complex64;
    fn label(&self) -> String;
}

/// `φ(w) = Π_k b((w_k − t_k)/s)`, paired by 1-D midpoint quadrature on the
/// overlap of the supports.
#[derive(Debug, Clone)]
pub struct BumpTestFunction {
    pub center: Vec<f64>,
    pub scale: f64,
    der: BumpDerivatives,
    nodes: usize,
}

impl BumpTestFunction {
    pub fn new(center: Vec<f64>, scale: f64, max_order: usize) -> Self {
        BumpTestFunction { center, scale, der: BumpDerivatives::new(max_order), nodes: 4000 }
    }

    fn factor(&self, k: usize, kernel: Kernel1d, n: usize) -> f64 {
        let (t, s) = (self.center[k], self.scale);
        let (klo, khi) = kernel.support();
        let (lo, hi) = (klo.max(t - s), khi.min(t + s));
        if lo >= hi {
            return 0.0;
        }
        let h = (hi - lo) / self.nodes as f64;
        let sn = s.powi(n as i32);
        (0..self.nodes)
            .map(|i| {
                let w = lo + (i as f64 + 0.5) * h;
                kernel.eval(w) * self.der.eval(n, (w - t) / s) / sn
            })
            .sum::<f64>()
            * h
    }
}

impl TestFunction for BumpTestFunction {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn pairing(&self, kernel: &[Kernel1d], alpha: &MultiIndex) -> Complex64 {
        let mut v = 1.0;
        for (k, (&kk, &n)) in kernel.iter().zip(alpha.exponents()).enumerate() {
            v *= self.factor(k, kk, n as usize);
            if v == 0.0 {
                break;
            }
        }
        Complex64::new(v, 0.0)
    }

    fn label(&self) -> String {
        format!("bump(center={:?}, scale={})", self.center, self.scale)
    }
}

impl TestFunction for GridTestFunction {
    fn dim(&self) -> usize {
        self.grid.dim()
    }

    /// Midpoint sum over the grid nodes; kernel mass outside the window is
    /// not seen.
    fn pairing(&self, kernel: &[Kernel1d], alpha: &MultiIndex) -> Complex64 {
        let g = &self.grid;
        let mut weights: Vec<Vec<(usize, f64)>> = Vec::with_capacity(g.dim());
        for (k, kk) in kernel.iter().enumerate() {
            let (lo, hi) = kk.support();
            let first = (((lo - g.origin[k]) / g.h).floor().max(0.0)) as usize;
            let last = (((hi - g.origin[k]) / g.h).ceil().max(0.0) as usize).min(g.n[k].saturating_sub(1));
            let w: Vec<(usize, f64)> = (first..=last)
                .filter(|&i| i < g.n[k])
                .map(|i| (i, kk.eval(g.origin[k] + i as f64 * g.h)))
                .filter(|(_, v)| *v != 0.0)
                .collect();
            if w.is_empty() {
                return ZERO;
            }
            weights.push(w);
        }
        let d = self.derivative(alpha);
        let mut strides = vec![1; g.dim()];
        for k in (0..g.dim().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * g.n[k + 1];
        }
        fn rec(
            k: usize,
            base: usize,
            prod: f64,
            weights: &[Vec<(usize, f64)>],
            strides: &[usize],
            d: &[Complex64],
        ) -> Complex64 {
            if k == weights.len() {
                return d[base] * prod;
            }
            weights[k].iter().map(|&(i, w)| rec(k + 1, base + i * strides[k], prod * w, weights, strides, d)).sum()
        }
        rec(0, 0, 1.0, &weights, &strides, &d) * g.cell_volume()
    }

    fn label(&self) -> String {
        format!("grid{:?}", self.grid.n)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BlowupError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("need one frame per equation ({expected}), got {got}")]
    FrameCount { expected: usize, got: usize },
    #[error("epsilon must be positive")]
    NonPositiveEpsilon,
    #[error("uniform singularity certificate failed at {point:?}: {reason}")]
    CertificateFailed { point: Vec<f64>, reason: String, certificate: Option<Box<SingularityCertificate>> },
    #[error("the measure is not A-free (residual {})", report.max_residual)]
    NotAFree { report: Box<AfreeReport> },
    #[error(transparent)]
    Weights(#[from] WeightError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Certificate(#[from] CertificateError),
    #[error(transparent)]
    Fourier(#[from] FourierError),
    #[error(transparent)]
    Cone(#[from] ConeError),
    #[error("direction must be a unit vector (norm {0})")]
    NotUnit(f64),
}

/// `μ ⋆ ρ_ε` at the nodes of `grid`, one vector of `m` components per node.
#[derive(Debug, Clone, PartialEq)]
pub struct MollifiedField {
    pub grid: UniformGrid,
    pub values: Vec<Vec<f64>>,
}

impl MollifiedField {
    /// Node sum `Σ values · h^d`, per component.
    pub fn mass(&self) -> Vec<f64> {
        let m = self.values.first().map_or(0, Vec::len);
        let vol = self.grid.cell_volume();
        (0..m).map(|l| self.values.iter().map(|v| v[l]).sum::<f64>() * vol).collect()
    }
}

pub fn mollify(mu: &DiscreteMeasure, eps: f64, frame: &AnisotropicFrame, grid: &UniformGrid) -> Result<MollifiedField, BlowupError> {
    if eps <= 0.0 {
        return Err(BlowupError::NonPositiveEpsilon);
    }
    if frame.dim() != mu.d || grid.dim() != mu.d {
        return Err(BlowupError::Dimension(format!("measure d = {}, frame {}, grid {}", mu.d, frame.dim(), grid.dim())));
    }
    let beta = frame.beta();
    let scales: Vec<f64> = beta.iter().map(|b| eps.powf(*b)).collect();
    let values = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.node(i);
            let mut v = vec![0.0; mu.m];
            for a in &mu.atoms {
                let diff: Vec<f64> = x.iter().zip(&a.x).map(|(p, q)| p - q).collect();
                let k = Mollifier.scaled(&diff, eps, beta);
                if k != 0.0 {
                    v.iter_mut().zip(&a.w).for_each(|(vl, wl)| *vl += k * wl);
                }
            }
            if let Some(g) = &mu.density {
                for c in 0..g.cell_count() {
                    let lo = g.cell_lower(c);
                    // ∫_cell ρ_ε(x − y) dy, one CDF difference per axis.
                    let k: f64 = (0..mu.d)
                        .map(|k| {
                            let s = scales[k];
                            profile_cdf((x[k] - lo[k]) / s) - profile_cdf((x[k] - lo[k] - g.h) / s)
                        })
                        .product();
                    if k != 0.0 {
                        v.iter_mut().zip(&g.values[c]).for_each(|(vl, hl)| *vl += k * hl);
                    }
                }
            }
            v
        })
        .collect();
    Ok(MollifiedField { grid: grid.clone(), values })
}

/// Principal pairing and remainder `R_ε` of one equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlowupValue {
    pub principal: Complex64,
    pub remainder: Complex64,
}

fn check_shapes(op: &OperatorSystem, pp: &PrincipalPart, frames: &[AnisotropicFrame], mu: &DiscreteMeasure, z: &[f64]) -> Result<(), BlowupError> {
    if frames.len() != pp.equation_count() {
        return Err(BlowupError::FrameCount { expected: pp.equation_count(), got: frames.len() });
    }
    if mu.d != op.dim() || mu.m != op.components() || z.len() != op.dim() || frames.iter().any(|f| f.dim() != op.dim()) {
        return Err(BlowupError::Dimension(format!(
            "operator acts on ({}, {}); measure is ({}, {}); point has {} coordinates",
            op.dim(),
            op.components(),
            mu.d,
            mu.m,
            z.len()
        )));
    }
    Ok(())
}

/// The rescaled pairing of equation `j` at scale `ε`, split into principal
/// part and remainder.
#[allow(clippy::too_many_arguments)]
fn equation_functional(
    op: &OperatorSystem,
    pp: &PrincipalPart,
    frame: &AnisotropicFrame,
    j: usize,
    mu: &DiscreteMeasure,
    z: &[f64],
    phi: &dyn TestFunction,
    eps: f64,
) -> BlowupValue {
    let beta = frame.beta();
    let scales: Vec<f64> = beta.iter().map(|b| eps.powf(*b)).collect();
    let principal = &pp.equations()[j];
    let mut out = BlowupValue { principal: ZERO, remainder: ZERO };
    for (alpha, coeffs) in op.equation(j) {
        let is_principal = principal.contains_key(alpha);
        let factor = if is_principal { 1.0 } else { eps.powf(1.0 - alpha.weighted_degree_f64(beta)) };
        let sign = if alpha.order() % 2 == 0 { 1.0 } else { -1.0 };
        let weight = |y: &[f64], w: &[f64]| -> f64 {
            coeffs
                .iter()
                .zip(w)
                .map(|(p, wl)| if *wl == 0.0 || p.is_zero() { 0.0 } else { p.evaluate(y).expect("dimension checked") * wl })
                .sum()
        };
        let atom_terms: Vec<Complex64> = mu
            .atoms
            .par_iter()
            .map(|a| {
                let aw = weight(&a.x, &a.w);
                if aw == 0.0 {
                    return ZERO;
                }
                let kernel: Vec<Kernel1d> =
                    (0..z.len()).map(|k| Kernel1d::Shifted((z[k] - a.x[k]) / scales[k])).collect();
                phi.pairing(&kernel, alpha) * aw
            })
            .collect();
        let mut total: Complex64 = atom_terms.iter().sum();
        if let Some(g) = &mu.density {
            let cell_terms: Vec<Complex64> = (0..g.cell_count())
                .into_par_iter()
                .map(|c| {
                    let av = weight(&g.cell_midpoint(c), &g.values[c]);
                    if av == 0.0 {
                        return ZERO;
                    }
                    let lo = g.cell_lower(c);
                    let kernel: Vec<Kernel1d> = (0..z.len())
                        .map(|k| Kernel1d::Cell {
                            a: (z[k] - lo[k] - g.h) / scales[k],
                            b: (z[k] - lo[k]) / scales[k],
                            s: scales[k],
                        })
                        .collect();
                    phi.pairing(&kernel, alpha) * av
                })
                .collect();
            total += cell_terms.iter().sum::<Complex64>();
        }
        let term = total * (sign * factor);
        if is_principal {
            out.principal += term;
        } else {
            out.remainder += term;
        }
    }
    out
}

/// The rescaled pairing for every equation at scale `ε`, with the same test
/// function throughout.
pub fn blowup_functional(
    op: &OperatorSystem,
    pp: &PrincipalPart,
    frames: &[AnisotropicFrame],
    mu: &DiscreteMeasure,
    z: &[f64],
    phi: &dyn TestFunction,
    eps: f64,
) -> Result<Vec<BlowupValue>, BlowupError> {
    check_shapes(op, pp, frames, mu, z)?;
    if eps <= 0.0 {
        return Err(BlowupError::NonPositiveEpsilon);
    }
    if phi.dim() != op.dim() {
        return Err(BlowupError::Dimension(format!("test function has dimension {}", phi.dim())));
    }
    Ok((0..pp.equation_count()).map(|j| equation_functional(op, pp, &frames[j], j, mu, z, phi, eps)).collect())
}

/// Limit estimate from a sequence at dyadically decreasing `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extrapolation {
    pub limit: Complex64,
    /// Empirical order `−log₂ |Δ₂/Δ₁|` of the last two increments.
    pub order: Option<f64>,
}

/// Aitken–Richardson on the last three values: with increment ratio
/// `r = Δ₂/Δ₁`, the limit is `v₃ + Δ₂ r/(1 − r)`. Sequences that are
/// already constant, or whose increments do not shrink, return the last
/// value.
pub fn richardson(values: &[Complex64]) -> Extrapolation {
    let n = values.len();
    let Some(&last) = values.last() else {
        return Extrapolation { limit: ZERO, order: None };
    };
    if n < 3 {
        return Extrapolation { limit: last, order: None };
    }
    let d1 = values[n - 2] - values[n - 3];
    let d2 = last - values[n - 2];
    if d2 == ZERO || d1 == ZERO {
        return Extrapolation { limit: last, order: None };
    }
    let r = d2 / d1;
    let order = Some(-r.norm().log2());
    if r.norm() < 1.0 {
        Extrapolation { limit: last + d2 * r / (Complex64::new(1.0, 0.0) - r), order }
    } else {
        Extrapolation { limit: last, order }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupReport {
    pub z: Vec<f64>,
    /// One-based equation index.
    pub equation: usize,
    pub test_function: String,
    pub epsilons: Vec<f64>,
    pub inner_masses: Vec<f64>,
    /// Principal pairing divided by `|μ_s|(E_ε)`.
    pub values: Vec<Complex64>,
    /// Raw remainders `R_ε`.
    pub remainders: Vec<Complex64>,
    pub extrapolated_limit: Complex64,
    pub order: Option<f64>,
    pub target_value: Complex64,
    /// `Σ |(−1)^{|α|} f_l a^α_{jl}(z) ∫𝛒 ∂^αφ|`, the size of the terms that
    /// cancel in the target.
    pub target_scale: f64,
    pub gap: f64,
    /// `max_i |values_i − values_last|`.
    pub spread: f64,
}

/// `Σ_{α∈I'_j} (−1)^{|α|} Σ_l f_l a^α_{jl}(z) ∫ 𝛒 ∂^α φ` and the sum of
/// the moduli of its terms.
pub fn target_value(pp: &PrincipalPart, j: usize, z: &[f64], f: &[f64], phi: &dyn TestFunction) -> (Complex64, f64) {
    let kernel = vec![Kernel1d::Shifted(0.0); z.len()];
    let mut value = ZERO;
    let mut scale = 0.0;
    for (alpha, coeffs) in &pp.equations()[j] {
        let fa: f64 = coeffs
            .iter()
            .zip(f)
            .map(|(p, fl)| if *fl == 0.0 || p.is_zero() { 0.0 } else { p.evaluate(z).expect("dimension") * fl })
            .sum();
        if fa == 0.0 {
            continue;
        }
        let sign = if alpha.order() % 2 == 0 { 1.0 } else { -1.0 };
        let term = phi.pairing(&kernel, alpha) * (sign * fa);
        value += term;
        scale += term.norm();
    }
    (value, scale)
}

/// Normalized blow-up sequence of equation `j` at `z` over the certificate's
/// `ε` schedule, with `|μ_s|(E_ε)` taken from the certificate.
#[allow(clippy::too_many_arguments)]
pub fn normalized_limit(
    op: &OperatorSystem,
    pp: &PrincipalPart,
    frames: &[AnisotropicFrame],
    mu: &DiscreteMeasure,
    z: &[f64],
    j: usize,
    phi: &dyn TestFunction,
    cert: &SingularityCertificate,
) -> Result<BlowupReport, BlowupError> {
    check_shapes(op, pp, frames, mu, z)?;
    let failed = |reason: &str| BlowupError::CertificateFailed {
        point: z.to_vec(),
        reason: reason.to_string(),
        certificate: Some(Box::new(cert.clone())),
    };
    if !cert.verdict {
        return Err(failed("certificate verdict is fail"));
    }
    if cert.point.len() != z.len() || cert.point.iter().zip(z).any(|(a, b)| (a - b).abs() > 1e-12) {
        return Err(failed("certificate was issued for a different point"));
    }
    let (_, singular) = lebesgue_decompose(mu);
    let rn = radon_nikodym(&singular).map_err(|_| failed("no singular mass"))?;
    let reach = cert.alphas.last().copied().unwrap_or(0.0);
    let f = rn.at(z, reach).ok_or_else(|| failed("no singular atom within α(ε) of the point"))?.to_vec();

    let values: Vec<BlowupValue> = cert
        .epsilons
        .iter()
        .map(|&eps| equation_functional(op, pp, &frames[j], j, mu, z, phi, eps))
        .collect();
    let normalized: Vec<Complex64> =
        values.iter().zip(&cert.inner_masses).map(|(v, &mass)| v.principal / mass).collect();
    let ex = richardson(&normalized);
    let (target, target_scale) = target_value(pp, j, z, &f, phi);
    let last = *normalized.last().expect("certificates have at least one epsilon");
    let spread = normalized.iter().map(|v| (v - last).norm()).fold(0.0, f64::max);
    Ok(BlowupReport {
        z: z.to_vec(),
        equation: j + 1,
        test_function: phi.label(),
        epsilons: cert.epsilons.clone(),
        inner_masses: cert.inner_masses.clone(),
        values: normalized,
        remainders: values.iter().map(|v| v.remainder).collect(),
        extrapolated_limit: ex.limit,
        order: ex.order,
        target_value: target,
        target_scale,
        gap: (ex.limit - target).norm(),
        spread,
    })
}

impl BlowupReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epsilon,inner_mass,value_re,value_im,remainder_re,remainder_im\n");
        for i in 0..self.epsilons.len() {
            s.push_str(&format!(
                "{:e},{:e},{:e},{:e},{:e},{:e}\n",
                self.epsilons[i],
                self.inner_masses[i],
                self.values[i].re,
                self.values[i].im,
                self.remainders[i].re,
                self.remainders[i].im
            ));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlancherelReport {
    pub equation: usize,
    pub psi: String,
    /// `Σ_α (−1)^{|α|} Σ_l f_l a^α_{jl}(z) Σ_w 𝛒 ∂^αφ h^d`.
    pub space_side: Complex64,
    /// `Σ_ξ (A_j(z, ξ) f) m(ξ) |𝛒̂(ξ)|² / L^d`.
    pub frequency_side: Complex64,
    /// The frequency side with `(−1)^{|α|}(2πiξ)^α` in place of
    /// `(2πiξ)^α`, kept for comparison.
    pub unconjugated_frequency_side: Complex64,
    /// `Σ_ξ |A_j(z, ξ) f| |m(ξ)| |𝛒̂(ξ)|² / L^d`.
    pub magnitude: f64,
    pub difference: f64,
    pub relative: f64,
}

/// Space side against frequency side of the multiplier pairing for
/// equation `j` at `z`.
pub fn plancherel_identity_check(
    pp: &PrincipalPart,
    j: usize,
    z: &[f64],
    f: &[f64],
    spec: &MultiplierSpec,
    grid: &UniformGrid,
) -> Result<PlancherelReport, BlowupError> {
    let norm = f.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(BlowupError::NotUnit(norm));
    }
    if z.len() != pp.dim() || f.len() != pp.components() || grid.dim() != pp.dim() {
        return Err(BlowupError::Dimension("point, direction and grid must match the operator".into()));
    }
    let phi = multiplier_test_function(spec, grid)?;
    let (space, _) = target_value(pp, j, z, f, &phi);

    let coeffs: Vec<(MultiIndex, f64)> = pp.equations()[j]
        .iter()
        .map(|(alpha, c)| {
            let fa = c.iter().zip(f).map(|(p, fl)| p.evaluate(z).expect("dimension") * fl).sum();
            (alpha.clone(), fa)
        })
        .collect();
    let power = mollifier_power_spectrum(grid);
    let volume: f64 = (0..grid.dim()).map(|k| grid.period(k)).product();
    let mut freq = ZERO;
    let mut unconj = ZERO;
    let mut magnitude = 0.0;
    for i in (0..grid.len()).filter(|&i| !grid.is_excluded(i)) {
        let xi = grid.frequency(i);
        let m = spec.symbol(&xi);
        if m == 0.0 {
            continue;
        }
        let mut s = ZERO;
        let mut u = ZERO;
        for (alpha, fa) in &coeffs {
            let mono = fourier_monomial(alpha, &xi) * *fa;
            s += mono;
            u += if alpha.order() % 2 == 0 { mono } else { -mono };
        }
        let w = m * power[i] / volume;
        freq += s * w;
        unconj += u * w;
        magnitude += s.norm() * w.abs();
    }
    let difference = (space - freq).norm();
    let relative = if difference == 0.0 { 0.0 } else { difference / magnitude.max(space.norm()).max(freq.norm()) };
    Ok(PlancherelReport {
        equation: j + 1,
        psi: spec.psi.label(),
        space_side: space,
        frequency_side: freq,
        unconjugated_frequency_side: unconj,
        magnitude,
        difference,
        relative,
    })
}

/// Settings for [`verify_theorem`].
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub afree: AfreeOptions,
    pub scales: ScaleFunctions,
    pub strategy: SetStrategy,
    pub epsilons: Vec<f64>,
    pub certificate_tol: f64,
    pub cone_samples: usize,
    pub pointwise_tol: f64,
    pub seed: u64,
    pub grid_resolution: usize,
    pub padding: f64,
    /// Relative tolerance for the blow-up gap, the vanishing of the limit
    /// and the Plancherel identity.
    pub blowup_tol: f64,
    /// Defaults to [`DirectionSymbol::default_family`].
    pub psi_family: Option<Vec<DirectionSymbol>>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            afree: AfreeOptions::default(),
            scales: ScaleFunctions::Power { p: 2.0, q: 0.5 },
            strategy: SetStrategy::CarrierBall,
            epsilons: crate::singularity::dyadic_epsilons(1, 6),
            certificate_tol: crate::singularity::DEFAULT_CERTIFICATE_TOL,
            cone_samples: 64,
            pointwise_tol: 1e-10,
            seed: 0,
            grid_resolution: 128,
            padding: 4.0,
            blowup_tol: 1e-8,
            psi_family: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupClause {
    pub psi: String,
    pub report: BlowupReport,
    /// `|limit − target| ≤ tol · scale`.
    pub converges: bool,
    /// `|target| ≤ tol · scale`.
    pub vanishes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlancherelClause {
    pub report: PlancherelReport,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointVerdict {
    pub z: Vec<f64>,
    pub f: Vec<f64>,
    pub pointwise: PointwiseReport,
    pub blowups: Vec<BlowupClause>,
    pub plancherel: Vec<PlancherelClause>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictTable {
    pub afree: AfreeReport,
    pub certificates: Vec<SingularityCertificate>,
    pub points: Vec<PointVerdict>,
    pub pass: bool,
}

/// Certificates for every point, failing on the first that does not pass.
pub fn certify_points(mu: &DiscreteMeasure, points: &[Vec<f64>], config: &VerifyConfig) -> Result<Vec<SingularityCertificate>, BlowupError> {
    let mut certificates = Vec::with_capacity(points.len());
    for z in points {
        let cert = check_uniform_singularity(mu, z, &config.scales, config.strategy, &config.epsilons, config.certificate_tol)?;
        if !cert.verdict {
            let reason = format!("{:?}", cert.failure.clone().expect("failing certificates carry a reason"));
            return Err(BlowupError::CertificateFailed { point: z.clone(), reason, certificate: Some(Box::new(cert)) });
        }
        certificates.push(cert);
    }
    Ok(certificates)
}

/// Checks A-freeness, certifies every point, then evaluates the pointwise
/// kernel clause, the blow-up limit for each `ψ` and each equation, and the
/// Plancherel identity.
pub fn verify_theorem(op: &OperatorSystem, mu: &DiscreteMeasure, points: &[Vec<f64>], config: &VerifyConfig) -> Result<VerdictTable, BlowupError> {
    let pp = principal_part(op);
    let frames = solve_weights(&pp)?.frames();
    let afree = check_afree(op, mu, &config.afree)?;
    if !afree.pass {
        return Err(BlowupError::NotAFree { report: Box::new(afree) });
    }
    let certificates = certify_points(mu, points, config)?;
    let (_, singular) = lebesgue_decompose(mu);
    let family = config.psi_family.clone().unwrap_or_else(|| DirectionSymbol::default_family(op.dim()));
    let grid = UniformGrid::centered(op.dim(), config.grid_resolution, config.padding);
    // One multiplier test function per (equation, ψ); they do not depend on z.
    let mut test_functions = Vec::new();
    for (j, frame) in frames.iter().enumerate() {
        for psi in &family {
            let spec = MultiplierSpec::new(psi.clone(), frame.clone());
            test_functions.push((j, spec.clone(), multiplier_test_function(&spec, &grid)?));
        }
    }

    let mut verdicts = Vec::with_capacity(points.len());
    if !points.is_empty() {
        let rn = radon_nikodym(&singular)?;
        for (z, cert) in points.iter().zip(&certificates) {
            let reach = cert.alphas.last().copied().unwrap_or(0.0);
            let f = rn
                .at(z, reach)
                .ok_or_else(|| BlowupError::CertificateFailed {
                    point: z.clone(),
                    reason: "no singular atom within α(ε) of the point".into(),
                    certificate: Some(Box::new(cert.clone())),
                })?
                .to_vec();
            let pointwise = check_theorem_pointwise(&pp, &frames, z, &f, config.cone_samples, config.seed, config.pointwise_tol)?;
            let mut blowups = Vec::new();
            let mut plancherel = Vec::new();
            for (j, spec, phi) in &test_functions {
                let report = normalized_limit(op, &pp, &frames, mu, z, *j, phi, cert)?;
                let scale = report.target_scale.max(f64::MIN_POSITIVE);
                let converges = report.gap <= config.blowup_tol * scale;
                let vanishes = report.target_value.norm() <= config.blowup_tol * scale;
                blowups.push(BlowupClause { psi: spec.psi.label(), report, converges, vanishes });
                let p = plancherel_identity_check(&pp, *j, z, &f, spec, &grid)?;
                plancherel.push(PlancherelClause { pass: p.relative <= config.blowup_tol, report: p });
            }
            let pass = pointwise.pass
                && blowups.iter().all(|b| b.converges && b.vanishes)
                && plancherel.iter().all(|p| p.pass);
            verdicts.push(PointVerdict { z: z.clone(), f, pointwise, blowups, plancherel, pass });
        }
    }
    let pass = verdicts.iter().all(|v| v.pass);
    Ok(VerdictTable { afree, certificates, points: verdicts, pass })
}

/// The mollifier sampled on `grid`, as a real grid function.
pub fn mollifier_on(grid: &UniformGrid) -> Vec<f64> {
    sample_mollifier(grid)
}
