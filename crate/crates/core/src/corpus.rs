//! Seeded random operators with solvable homogeneity weights, for
//! cross-checks that need more than a handful of hand-written systems.
//!
//! Each equation gets a hidden weight vector `β = (1/n_1, …, 1/n_d)`; its
//! principal indices are drawn from `{α : ⟨α,β⟩ = 1}` (automatically an
//! antichain) and lower-order indices lie strictly below one of them.

use num_rational::BigRational;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::multi_index::MultiIndex;
use crate::operator::{Equation, OperatorSystem};
use crate::poly::Polynomial;

/// Shape limits for [`random_operator`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorpusShape {
    pub max_dim: usize,
    pub max_components: usize,
    pub max_equations: usize,
    pub max_terms: usize,
    /// Largest `n_k` in `β_k = 1/n_k`.
    pub max_weight_denominator: u32,
    /// Allow affine coefficients in `x`.
    pub variable_coefficients: bool,
}

impl Default for CorpusShape {
    fn default() -> Self {
        CorpusShape {
            max_dim: 3,
            max_components: 3,
            max_equations: 2,
            max_terms: 5,
            max_weight_denominator: 2,
            variable_coefficients: true,
        }
    }
}

fn principal_candidates(denoms: &[u32]) -> Vec<MultiIndex> {
    // ⟨α,β⟩ = 1 with β_k = 1/n_k ⇔ Σ α_k L/n_k = L, L = lcm(n).
    let lcm = denoms.iter().fold(1u32, |a, &b| a * b / gcd(a, b));
    let units: Vec<u32> = denoms.iter().map(|n| lcm / n).collect();
    let mut out = Vec::new();
    let mut cur = vec![0u32; denoms.len()];
    fn rec(k: usize, left: u32, units: &[u32], denoms: &[u32], cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if k == units.len() {
            if left == 0 {
                out.push(MultiIndex::new(cur.clone()));
            }
            return;
        }
        for a in 0..=denoms[k] {
            if a * units[k] > left {
                break;
            }
            cur[k] = a;
            rec(k + 1, left - a * units[k], units, denoms, cur, out);
        }
        cur[k] = 0;
    }
    rec(0, lcm, &units, denoms, &mut cur, &mut out);
    out
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn small_rational(rng: &mut ChaCha8Rng) -> BigRational {
    let mut n: i64 = rng.random_range(-3..=3);
    if n == 0 {
        n = 1;
    }
    BigRational::new(n.into(), rng.random_range(1i64..=2).into())
}

fn coefficient(rng: &mut ChaCha8Rng, d: usize, variable: bool) -> Polynomial {
    if rng.random_bool(0.3) {
        return Polynomial::zero(d);
    }
    let mut p = Polynomial::constant(d, small_rational(rng));
    if variable && rng.random_bool(0.25) {
        p.add_term(MultiIndex::unit(d, rng.random_range(0..d)), small_rational(rng));
    }
    p
}

fn coefficient_vector(rng: &mut ChaCha8Rng, d: usize, m: usize, variable: bool) -> Vec<Polynomial> {
    let mut v: Vec<Polynomial> = (0..m).map(|_| coefficient(rng, d, variable)).collect();
    if v.iter().all(Polynomial::is_zero) {
        let k = rng.random_range(0..m);
        v[k] = Polynomial::constant(d, small_rational(rng));
    }
    v
}

/// A random operator whose principal part admits homogeneity weights.
pub fn random_operator(rng: &mut ChaCha8Rng, shape: &CorpusShape) -> OperatorSystem {
    let d = rng.random_range(1..=shape.max_dim);
    let m = rng.random_range(1..=shape.max_components);
    let n = rng.random_range(1..=shape.max_equations);
    random_operator_sized(rng, d, m, n, shape)
}

/// As [`random_operator`] with `d`, `m` and `n` fixed.
pub fn random_operator_sized(rng: &mut ChaCha8Rng, d: usize, m: usize, n: usize, shape: &CorpusShape) -> OperatorSystem {
    let equations: Vec<Equation> = (0..n)
        .map(|_| {
            let denoms: Vec<u32> = (0..d).map(|_| rng.random_range(1..=shape.max_weight_denominator)).collect();
            let mut candidates = principal_candidates(&denoms);
            candidates.shuffle(rng);
            let count = rng.random_range(1..=candidates.len().min(shape.max_terms).min(3));
            let principal: Vec<MultiIndex> = candidates.into_iter().take(count).collect();
            let mut eq = Equation::new();
            for alpha in &principal {
                eq.insert(alpha.clone(), coefficient_vector(rng, d, m, shape.variable_coefficients));
            }
            let lower = rng.random_range(0..=shape.max_terms - eq.len());
            for _ in 0..lower {
                let top = principal.choose(rng).expect("at least one principal index");
                let below: Vec<u32> = top.exponents().iter().map(|&a| rng.random_range(0..=a)).collect();
                let below = MultiIndex::new(below);
                if &below != top && !eq.contains_key(&below) {
                    eq.insert(below, coefficient_vector(rng, d, m, shape.variable_coefficients));
                }
            }
            eq
        })
        .collect();
    OperatorSystem::new(d, m, equations).expect("generated operators are well formed")
}

/// `count` operators from one seed.
pub fn random_corpus(count: usize, seed: u64, shape: &CorpusShape) -> Vec<OperatorSystem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_operator(&mut rng, shape)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::{principal_part, solve_weights};

    #[test]
    fn candidates_have_unit_weighted_degree() {
        let c = principal_candidates(&[1, 2]);
        assert_eq!(c, vec![MultiIndex::from([0, 2]), MultiIndex::from([1, 0])]);
        for alpha in principal_candidates(&[2, 2, 1]) {
            assert!((alpha.weighted_degree_f64(&[0.5, 0.5, 1.0]) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn corpus_is_solvable_and_reproducible() {
        let shape = CorpusShape::default();
        let a = random_corpus(40, 7, &shape);
        assert_eq!(a, random_corpus(40, 7, &shape));
        for op in &a {
            assert!(op.dim() <= 3 && op.components() <= 3 && op.equation_count() <= 2);
            assert!(op.equations().iter().all(|e| e.len() <= 5));
            let pp = principal_part(op);
            assert!(solve_weights(&pp).is_ok(), "{op}");
        }
        assert!(a.iter().any(|op| op.max_order() >= 2));
    }
}
