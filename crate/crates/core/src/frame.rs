//! Anisotropic geometry attached to one row of homogeneity weights `β`:
//! the quasi-norm `ρ(ξ) = Σ_k |ξ_k|^{1/β_k}`, its unit level set
//! `P = {ρ = 1}`, the radial projection `π(ξ)_k = ξ_k / ρ(ξ)^{β_k}` and the
//! dilation `δ_λ(ξ)_k = λ^{β_k} ξ_k`.
//!
//! `ρ` is 1-homogeneous for `δ_λ`, and `π` is constant along dilation
//! orbits, so every nonzero frequency factors uniquely as `δ_{ρ(ξ)}(π(ξ))`.

use std::fmt;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::poly::format_rational;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FrameError {
    #[error("the zero frequency has no projection onto the homogeneity manifold")]
    ZeroFrequency,
    #[error("frequency has {got} coordinates, frame has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("homogeneity weights must be strictly positive")]
    NonPositiveWeight,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnisotropicFrame {
    weights: Vec<BigRational>,
    beta: Vec<f64>,
    inv_beta: Vec<f64>,
}

impl AnisotropicFrame {
    pub fn new(weights: Vec<BigRational>) -> Result<Self, FrameError> {
        use num_traits::Signed;
        if weights.is_empty() || weights.iter().any(|b| !b.is_positive()) {
            return Err(FrameError::NonPositiveWeight);
        }
        let beta: Vec<f64> = weights.iter().map(|b| b.to_f64().expect("finite weight")).collect();
        let inv_beta = weights.iter().map(|b| b.recip().to_f64().expect("finite weight")).collect();
        Ok(AnisotropicFrame { weights, beta, inv_beta })
    }

    /// Frame with all weights equal to one (`ρ` is the ℓ¹ norm).
    pub fn isotropic(dim: usize) -> Self {
        AnisotropicFrame::new(vec![BigRational::from_integer(1.into()); dim]).expect("positive weights")
    }

    pub fn dim(&self) -> usize {
        self.beta.len()
    }

    pub fn weights(&self) -> &[BigRational] {
        &self.weights
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// `Σ_k β_k`, the exponent of the anisotropic Jacobian `ε^{Σβ}`.
    pub fn homogeneous_dimension(&self) -> f64 {
        self.beta.iter().sum()
    }

    /// `ρ(ξ) = Σ_k |ξ_k|^{1/β_k}`. Zero iff `ξ = 0`.
    pub fn quasi_norm(&self, xi: &[f64]) -> f64 {
        debug_assert_eq!(xi.len(), self.dim());
        xi.iter()
            .zip(&self.inv_beta)
            .map(|(x, &e)| if *x == 0.0 { 0.0 } else { x.abs().powf(e) })
            .sum()
    }

    /// `Σ_k |ξ_k|^{β_k}`, the denominator as printed in the general-case
    /// multiplier. Only used for side-by-side comparison: it is not
    /// homogeneous under [`AnisotropicFrame::dilate`] unless all `β_k = 1`.
    pub fn literal_denominator(&self, xi: &[f64]) -> f64 {
        xi.iter()
            .zip(&self.beta)
            .map(|(x, &e)| if *x == 0.0 { 0.0 } else { x.abs().powf(e) })
            .sum()
    }

    /// `δ_λ(ξ) = (λ^{β_1} ξ_1, …, λ^{β_d} ξ_d)`.
    pub fn dilate(&self, lambda: f64, xi: &[f64]) -> Vec<f64> {
        xi.iter().zip(&self.beta).map(|(x, &b)| lambda.powf(b) * x).collect()
    }

    /// `π(ξ)`; the result satisfies `ρ(π(ξ)) = 1` up to rounding.
    pub fn project(&self, xi: &[f64]) -> Result<Vec<f64>, FrameError> {
        if xi.len() != self.dim() {
            return Err(FrameError::DimensionMismatch { expected: self.dim(), got: xi.len() });
        }
        let r = self.quasi_norm(xi);
        if r == 0.0 {
            return Err(FrameError::ZeroFrequency);
        }
        Ok(xi.iter().zip(&self.beta).map(|(x, &b)| x / r.powf(b)).collect())
    }

    /// `n` points of `P`: Gaussian directions on the Euclidean sphere pushed
    /// through `π`. Deterministic in `seed`.
    pub fn sample_manifold(&self, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let g: Vec<f64> = (0..self.dim()).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm < 1e-300 {
                continue;
            }
            let dir: Vec<f64> = g.iter().map(|v| v / norm).collect();
            out.push(self.project(&dir).expect("nonzero direction"));
        }
        out
    }

    /// Human-readable equation of `P`.
    pub fn describe_manifold(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for AnisotropicFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .weights
            .iter()
            .enumerate()
            .map(|(k, b)| format!("|xi{}|^{}", k + 1, format_rational(&b.recip())))
            .collect();
        write!(f, "{} = 1", parts.join(" + "))
    }
}

/// Serializable summary of a frame.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct FrameSummary {
    pub weights: Vec<String>,
    pub manifold: String,
}

impl From<&AnisotropicFrame> for FrameSummary {
    fn from(f: &AnisotropicFrame) -> Self {
        FrameSummary { weights: f.weights.iter().map(format_rational).collect(), manifold: f.describe_manifold() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use proptest::prelude::*;

    fn worked_example_frame() -> AnisotropicFrame {
        AnisotropicFrame::new(vec![q(1, 1), q(1, 2)]).unwrap()
    }

    #[test]
    fn quasi_norm_values() {
        let f = worked_example_frame();
        assert_eq!(f.quasi_norm(&[1.0, 0.0]), 1.0);
        assert_eq!(f.quasi_norm(&[0.0, 1.0]), 1.0);
        assert_eq!(f.quasi_norm(&[1.0, 1.0]), 2.0);
        assert_eq!(f.quasi_norm(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn projection_examples() {
        let iso = AnisotropicFrame::isotropic(2);
        assert_eq!(iso.project(&[2.0, 2.0]).unwrap(), vec![0.5, 0.5]);
        let f = worked_example_frame();
        assert_eq!(f.project(&[4.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        let on_p = [0.36, 0.8];
        assert!((f.quasi_norm(&on_p) - 1.0).abs() < 1e-15);
        let p = f.project(&on_p).unwrap();
        assert!((p[0] - on_p[0]).abs() < 1e-15 && (p[1] - on_p[1]).abs() < 1e-15);
        assert_eq!(f.project(&[0.0, 0.0]), Err(FrameError::ZeroFrequency));
    }

    #[test]
    fn manifold_description() {
        assert_eq!(worked_example_frame().describe_manifold(), "|xi1|^1 + |xi2|^2 = 1");
    }

    #[test]
    fn rejects_non_positive_weights() {
        assert_eq!(AnisotropicFrame::new(vec![q(1, 1), q(0, 1)]), Err(FrameError::NonPositiveWeight));
    }

    #[test]
    fn samples_lie_on_manifold_and_are_deterministic() {
        let f = worked_example_frame();
        let a = f.sample_manifold(1, 9);
        assert_eq!(a.len(), 1);
        assert!((f.quasi_norm(&a[0]) - 1.0).abs() < 1e-12);

        let s = f.sample_manifold(10_000, 0);
        assert_eq!(s, f.sample_manifold(10_000, 0));
        assert!(s.iter().all(|p| (f.quasi_norm(p) - 1.0).abs() < 1e-12));
        let mut sorted = s.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sorted.dedup();
        assert_eq!(sorted.len(), s.len(), "samples must be distinct");
    }

    #[test]
    fn samples_cover_the_l1_sphere() {
        let iso = AnisotropicFrame::isotropic(2);
        let gap = |n: usize| {
            // Parametrize the ℓ¹ circle by arclength-like angle and take the
            // largest gap between consecutive samples.
            let mut t: Vec<f64> = iso.sample_manifold(n, 3).iter().map(|p| p[1].atan2(p[0])).collect();
            t.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut g = t[0] + 2.0 * std::f64::consts::PI - t[t.len() - 1];
            for w in t.windows(2) {
                g = g.max(w[1] - w[0]);
            }
            g
        };
        let (coarse, fine) = (gap(100), gap(10_000));
        assert!(fine < coarse && fine < 0.01, "coarse {coarse}, fine {fine}");
    }

    fn weights() -> impl Strategy<Value = AnisotropicFrame> {
        prop::collection::vec((1i64..4, 1i64..4), 1..4)
            .prop_map(|v| AnisotropicFrame::new(v.into_iter().map(|(n, d)| q(n, d)).collect()).unwrap())
    }

    proptest! {
        #[test]
        fn projection_is_idempotent_and_dilation_invariant(
            (f, xi) in weights().prop_flat_map(|f| {
                let d = f.dim();
                (Just(f), prop::collection::vec(-5.0f64..5.0, d))
            }),
            lambda in 0.05f64..20.0,
        ) {
            prop_assume!(xi.iter().any(|v| v.abs() > 1e-3));
            let p = f.project(&xi).unwrap();
            prop_assert!((f.quasi_norm(&p) - 1.0).abs() < 1e-12);
            let pp = f.project(&p).unwrap();
            let pd = f.project(&f.dilate(lambda, &xi)).unwrap();
            for k in 0..f.dim() {
                prop_assert!((pp[k] - p[k]).abs() < 1e-12);
                prop_assert!((pd[k] - p[k]).abs() < 1e-12);
            }
            let r = f.quasi_norm(&xi);
            let rd = f.quasi_norm(&f.dilate(lambda, &xi));
            prop_assert!((rd - lambda * r).abs() <= 1e-12 * lambda * r);
        }
    }
}
