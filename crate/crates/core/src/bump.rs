//! The smooth bump `b(t) = exp(−1/(1−t²))` on `(−1, 1)`: exact derivatives,
//! sup-norm tables, and the normalized mollifier built from it.
//!
//! Derivatives use `b^{(n)} = Q_n(t, u) b` with `u = 1/(1−t²)`. Since
//! `b' = −2tu² b` and `u' = 2tu²`,
//! `Q_{n+1} = ∂_t Q_n + 2tu² ∂_u Q_n − 2tu² Q_n`.

use std::collections::BTreeMap;
use std::sync::OnceLock;

/// Beyond this `u` the factor `e^{−u}` underflows every polynomial prefactor.
const U_CUTOFF: f64 = 700.0;

pub fn bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        return 0.0;
    }
    let u = 1.0 / (1.0 - t * t);
    if u > U_CUTOFF {
        0.0
    } else {
        (-u).exp()
    }
}

/// Polynomial in `(t, u)`, keyed by exponents.
type Poly2 = BTreeMap<(u32, u32), f64>;

fn next(q: &Poly2) -> Poly2 {
    let mut out = Poly2::new();
    let mut add = |k: (u32, u32), v: f64| *out.entry(k).or_insert(0.0) += v;
    for (&(i, j), &c) in q {
        if i > 0 {
            add((i - 1, j), c * i as f64);
        }
        if j > 0 {
            add((i + 1, j + 1), 2.0 * c * j as f64);
        }
        add((i + 1, j + 2), -2.0 * c);
    }
    out.retain(|_, v| *v != 0.0);
    out
}

/// Derivatives of [`bump`] up to a fixed order.
#[derive(Debug, Clone)]
pub struct BumpDerivatives {
    q: Vec<Vec<(i32, i32, f64)>>,
}

impl BumpDerivatives {
    pub fn new(max_order: usize) -> Self {
        let mut polys = vec![Poly2::from([((0, 0), 1.0)])];
        for n in 0..max_order {
            polys.push(next(&polys[n]));
        }
        let q = polys
            .into_iter()
            .map(|p| p.into_iter().map(|((i, j), c)| (i as i32, j as i32, c)).collect())
            .collect();
        BumpDerivatives { q }
    }

    pub fn max_order(&self) -> usize {
        self.q.len() - 1
    }

    /// `b^{(n)}(t)`.
    pub fn eval(&self, n: usize, t: f64) -> f64 {
        if t.abs() >= 1.0 {
            return 0.0;
        }
        let u = 1.0 / (1.0 - t * t);
        if u > U_CUTOFF {
            return 0.0;
        }
        // Combine exponents in log space: u^j e^{-u} can be far larger than
        // either factor's reciprocal is representable.
        let lu = u.ln();
        self.q[n]
            .iter()
            .map(|&(i, j, c)| c * t.powi(i) * (j as f64 * lu - u).exp())
            .sum()
    }

    /// `sup_t |b^{(n)}(t)|` for `n = 0..=max_order`, by dense sampling
    /// followed by golden-section refinement around the best sample.
    pub fn sup_table(&self) -> Vec<f64> {
        const SAMPLES: usize = 20_000;
        (0..=self.max_order())
            .map(|n| {
                let f = |t: f64| self.eval(n, t).abs();
                let h = 2.0 / SAMPLES as f64;
                let (mut best_t, mut best) = (0.0, f(0.0));
                for i in 0..SAMPLES {
                    let t = -1.0 + (i as f64 + 0.5) * h;
                    let v = f(t);
                    if v > best {
                        best = v;
                        best_t = t;
                    }
                }
                let (mut a, mut b) = ((best_t - h).max(-1.0), (best_t + h).min(1.0));
                let g = 0.5 * (5f64.sqrt() - 1.0);
                for _ in 0..60 {
                    let (c, d) = (b - g * (b - a), a + g * (b - a));
                    if f(c) > f(d) {
                        b = d;
                    } else {
                        a = c;
                    }
                }
                best.max(f(0.5 * (a + b)))
            })
            .collect()
    }
}

/// `∫_{−1}^{1} exp(−1/(1−t²)) dt`.
pub fn bump_integral() -> f64 {
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(|| {
        // The integrand is flat to all orders at ±1, so the midpoint rule
        // converges faster than any power of the step.
        let n = 200_000;
        let h = 2.0 / n as f64;
        (0..n).map(|i| bump(-1.0 + (i as f64 + 0.5) * h)).sum::<f64>() * h
    })
}

/// The unit-mass profile `ρ(t) = b(t) / ∫b`.
pub fn profile(t: f64) -> f64 {
    bump(t) / bump_integral()
}

struct CdfTable {
    step: f64,
    values: Vec<f64>,
}

fn cdf_table() -> &'static CdfTable {
    static T: OnceLock<CdfTable> = OnceLock::new();
    T.get_or_init(|| {
        const M: usize = 4096;
        // 5-point Gauss–Legendre per interval.
        const X: [f64; 5] = [0.0, -0.538_469_310_105_683, 0.538_469_310_105_683, -0.906_179_845_938_664, 0.906_179_845_938_664];
        const W: [f64; 5] = [0.568_888_888_888_889, 0.478_628_670_499_366, 0.478_628_670_499_366, 0.236_926_885_056_189, 0.236_926_885_056_189];
        let step = 2.0 / M as f64;
        let mut values = Vec::with_capacity(M + 1);
        let mut acc = 0.0;
        values.push(0.0);
        for i in 0..M {
            let mid = -1.0 + (i as f64 + 0.5) * step;
            let piece: f64 = X.iter().zip(&W).map(|(x, w)| w * profile(mid + 0.5 * step * x)).sum();
            acc += 0.5 * step * piece;
            values.push(acc);
        }
        // Remove the residual quadrature drift so the CDF ends at one.
        let total = acc;
        values.iter_mut().for_each(|v| *v /= total);
        CdfTable { step, values }
    })
}

/// `∫_{−∞}^{t} ρ`, by cubic Hermite interpolation on a fine table (the
/// derivative at each node is the profile itself).
pub fn profile_cdf(t: f64) -> f64 {
    if t <= -1.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let tab = cdf_table();
    let s = (t + 1.0) / tab.step;
    let i = (s.floor() as usize).min(tab.values.len() - 2);
    let r = s - i as f64;
    let (t0, t1) = (-1.0 + i as f64 * tab.step, -1.0 + (i + 1) as f64 * tab.step);
    let (y0, y1) = (tab.values[i], tab.values[i + 1]);
    let (m0, m1) = (profile(t0) * tab.step, profile(t1) * tab.step);
    let (r2, r3) = (r * r, r * r * r);
    (2.0 * r3 - 3.0 * r2 + 1.0) * y0 + (r3 - 2.0 * r2 + r) * m0 + (-2.0 * r3 + 3.0 * r2) * y1 + (r3 - r2) * m1
}

/// The tensor mollifier `𝛒(w) = Π_k ρ(w_k)` and its anisotropic rescaling.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Mollifier;

impl Mollifier {
    pub fn eval(&self, w: &[f64]) -> f64 {
        w.iter().map(|&t| profile(t)).product()
    }

    /// `ρ_{ε}(x) = ε^{−Σβ_k} Π_k ρ(x_k / ε^{β_k})`.
    pub fn scaled(&self, x: &[f64], eps: f64, beta: &[f64]) -> f64 {
        x.iter()
            .zip(beta)
            .map(|(&xk, &b)| {
                let s = eps.powf(b);
                profile(xk / s) / s
            })
            .product()
    }
}
