//! Multi-indices over `ℕ^d`, used both for derivative orders and for
//! monomials in the coefficient polynomials.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

/// An exponent vector `α = (α_1, …, α_d)`.
///
/// Ordering is lexicographic (derived), which gives a stable iteration order
/// in maps; the componentwise partial order is exposed separately through
/// [`MultiIndex::partial_le`] and [`MultiIndex::is_dominated_by`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    /// `e_k` in dimension `dim`.
    pub fn unit(dim: usize, k: usize) -> Self {
        let mut e = vec![0; dim];
        e[k] = 1;
        MultiIndex(e)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    /// Total order `|α| = Σ α_k`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    /// Componentwise `self ≤ other`. Panics on dimension mismatch.
    pub fn partial_le(&self, other: &MultiIndex) -> bool {
        assert_eq!(self.dim(), other.dim(), "multi-index dimension mismatch");
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// Componentwise partial order as an `Option<Ordering>`.
    pub fn partial_cmp_componentwise(&self, other: &MultiIndex) -> Option<Ordering> {
        match (self.partial_le(other), other.partial_le(self)) {
            (true, true) => Some(Ordering::Equal),
            (true, false) => Some(Ordering::Less),
            (false, true) => Some(Ordering::Greater),
            (false, false) => None,
        }
    }

    /// `self ≤ other` componentwise with `self ≠ other`.
    pub fn is_dominated_by(&self, other: &MultiIndex) -> bool {
        self != other && self.partial_le(other)
    }

    /// Weighted degree `⟨α, β⟩` in exact arithmetic.
    pub fn weighted_degree(&self, weights: &[BigRational]) -> BigRational {
        assert_eq!(self.dim(), weights.len(), "weight vector dimension mismatch");
        self.0
            .iter()
            .zip(weights)
            .filter(|(&a, _)| a != 0)
            .fold(BigRational::zero(), |acc, (&a, b)| acc + b * BigRational::from_integer(a.into()))
    }

    /// Weighted degree in floating point.
    pub fn weighted_degree_f64(&self, weights: &[f64]) -> f64 {
        self.0.iter().zip(weights).map(|(&a, b)| a as f64 * b).sum()
    }

    /// `x^α = Π x_k^{α_k}`.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .filter(|(&a, _)| a != 0)
            .map(|(&a, &xk)| xk.powi(a as i32))
            .product()
    }
}

impl Add for &MultiIndex {
    type Output = MultiIndex;

    fn add(self, rhs: &MultiIndex) -> MultiIndex {
        assert_eq!(self.dim(), rhs.dim(), "multi-index dimension mismatch");
        MultiIndex(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

impl<const N: usize> From<[u32; N]> for MultiIndex {
    fn from(v: [u32; N]) -> Self {
        MultiIndex(v.to_vec())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn domination() {
        let a = MultiIndex::from([0, 1]);
        let b = MultiIndex::from([0, 2]);
        let c = MultiIndex::from([1, 0]);
        assert!(a.is_dominated_by(&b));
        assert!(!b.is_dominated_by(&a));
        assert!(!a.is_dominated_by(&a));
        assert!(!c.is_dominated_by(&b) && !b.is_dominated_by(&c));
        assert_eq!(c.partial_cmp_componentwise(&b), None);
    }

    #[test]
    fn weighted_degree_exact() {
        let half = BigRational::new(1.into(), 2.into());
        let one = BigRational::from_integer(1.into());
        let beta = vec![one.clone(), half];
        assert_eq!(MultiIndex::from([1, 0]).weighted_degree(&beta), one);
        assert_eq!(MultiIndex::from([0, 2]).weighted_degree(&beta), one);
        assert_eq!(MultiIndex::from([0, 1]).weighted_degree_f64(&[1.0, 0.5]), 0.5);
    }

    fn triple(d: usize) -> impl Strategy<Value = (MultiIndex, MultiIndex, MultiIndex)> {
        let mi = move || prop::collection::vec(0u32..4, d).prop_map(MultiIndex::new);
        (mi(), mi(), mi())
    }

    proptest! {
        #[test]
        fn order_is_additive((a, b, _) in (1usize..5).prop_flat_map(triple)) {
            prop_assert_eq!((&a + &b).order(), a.order() + b.order());
        }

        #[test]
        fn componentwise_order_axioms((a, b, c) in (1usize..5).prop_flat_map(triple)) {
            prop_assert!(a.partial_le(&a));
            if a.partial_le(&b) && b.partial_le(&a) {
                prop_assert_eq!(&a, &b);
            }
            if a.partial_le(&b) && b.partial_le(&c) {
                prop_assert!(a.partial_le(&c));
            }
        }
    }
}
