//! Polynomial coefficients `x ↦ a(x)` with exact rational coefficients.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::multi_index::MultiIndex;

/// Sparse polynomial in `x_1, …, x_d`. Zero terms are never stored, so
/// structural equality is polynomial equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Polynomial {
    dim: usize,
    terms: BTreeMap<MultiIndex, BigRational>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("point has {got} coordinates, expected {expected}")]
pub struct DimensionMismatch {
    pub expected: usize,
    pub got: usize,
}

impl Polynomial {
    pub fn zero(dim: usize) -> Self {
        Polynomial { dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: BigRational) -> Self {
        let mut p = Polynomial::zero(dim);
        p.add_term(MultiIndex::zero(dim), c);
        p
    }

    pub fn one(dim: usize) -> Self {
        Polynomial::constant(dim, BigRational::one())
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (MultiIndex, BigRational)>) -> Self {
        let mut p = Polynomial::zero(dim);
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    /// Adds `c·x^m`, merging with an existing term. Panics if `m` has the
    /// wrong length.
    pub fn add_term(&mut self, m: MultiIndex, c: BigRational) {
        assert_eq!(m.dim(), self.dim, "monomial dimension mismatch");
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m).or_insert_with(BigRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, s: &BigRational) -> Polynomial {
        Polynomial::from_terms(self.dim, self.terms.iter().map(|(m, c)| (m.clone(), c * s)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1
            && self
                .terms
                .iter()
                .next()
                .is_some_and(|(m, c)| m.is_zero() && c.is_one())
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &BigRational)> {
        self.terms.iter()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(MultiIndex::order).max().unwrap_or(0)
    }

    /// Monomial-sum evaluation at a real point.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64, DimensionMismatch> {
        self.check_dim(x.len())?;
        Ok(self
            .terms
            .iter()
            .map(|(m, c)| c.to_f64().unwrap_or(f64::NAN) * m.monomial(x))
            .sum())
    }

    /// Exact evaluation at a rational point.
    pub fn evaluate_exact(&self, x: &[BigRational]) -> Result<BigRational, DimensionMismatch> {
        self.check_dim(x.len())?;
        let mut acc = BigRational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (&e, xk) in m.exponents().iter().zip(x) {
                if e > 0 {
                    t *= num_traits::pow(xk.clone(), e as usize);
                }
            }
            acc += t;
        }
        Ok(acc)
    }

    fn check_dim(&self, got: usize) -> Result<(), DimensionMismatch> {
        if got == self.dim {
            Ok(())
        } else {
            Err(DimensionMismatch { expected: self.dim, got })
        }
    }
}

/// Formats a rational as `p` or `p/q`.
pub fn format_rational(r: &BigRational) -> String {
    if r.denom() == &BigInt::one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for Polynomial {
    /// Writes the DSL form, e.g. `x1^2 + 1/2*x1*x2 - 3`. Highest-degree
    /// monomials first.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut ordered: Vec<_> = self.terms.iter().collect();
        ordered.sort_by(|(a, _), (b, _)| b.order().cmp(&a.order()).then_with(|| b.cmp(a)));
        for (i, (m, c)) in ordered.into_iter().enumerate() {
            let magnitude = c.abs();
            if i == 0 {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mut factors = Vec::new();
            if !magnitude.is_one() || m.is_zero() {
                factors.push(format_rational(&magnitude));
            }
            for (k, &e) in m.exponents().iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(format!("x{}", k + 1)),
                    _ => factors.push(format!("x{}^{}", k + 1, e)),
                }
            }
            write!(f, "{}", factors.join("*"))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn evaluate_constant_and_monomials() {
        let one = Polynomial::one(2);
        assert_eq!(one.evaluate(&[3.0, -7.0]).unwrap(), 1.0);

        let p = Polynomial::from_terms(2, [(MultiIndex::from([2, 0]), q(1, 1)), (MultiIndex::zero(2), q(1, 1))]);
        assert_eq!(p.evaluate(&[2.0, 0.0]).unwrap(), 5.0);

        let xy = Polynomial::from_terms(2, [(MultiIndex::from([1, 1]), q(1, 1))]);
        assert_eq!(xy.evaluate(&[3.0, -1.0]).unwrap(), -3.0);
    }

    #[test]
    fn dimension_mismatch() {
        let p = Polynomial::one(2);
        assert_eq!(p.evaluate(&[1.0]), Err(DimensionMismatch { expected: 2, got: 1 }));
    }

    #[test]
    fn cancellation_removes_terms() {
        let mut p = Polynomial::one(1);
        p.add_term(MultiIndex::zero(1), q(-1, 1));
        assert!(p.is_zero());
    }

    #[test]
    fn exact_evaluation_matches() {
        let p = Polynomial::from_terms(2, [(MultiIndex::from([1, 2]), q(1, 3)), (MultiIndex::zero(2), q(-2, 1))]);
        let x = [q(3, 1), q(1, 2)];
        assert_eq!(p.evaluate_exact(&x).unwrap(), q(-7, 4));
    }

    #[test]
    fn display() {
        let p = Polynomial::from_terms(
            2,
            [
                (MultiIndex::from([2, 0]), q(1, 1)),
                (MultiIndex::from([1, 1]), q(1, 2)),
                (MultiIndex::zero(2), q(-3, 1)),
            ],
        );
        assert_eq!(p.to_string(), "x1^2 + 1/2*x1*x2 - 3");
        assert_eq!(Polynomial::constant(1, q(-2, 3)).to_string(), "-2/3");
    }
}
