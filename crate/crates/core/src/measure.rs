//! Vector-valued Radon measures as finitely many atoms plus an optional
//! piecewise-constant density, and the distributional check `Aμ = 0`.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bump::BumpDerivatives;
use crate::multi_index::MultiIndex;
use crate::operator::OperatorSystem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

/// Cell `i` (row-major over `shape`, last axis fastest) is the cube with
/// lower corner `origin + i·h`; `values[i]` is the density there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub origin: Vec<f64>,
    pub h: f64,
    pub shape: Vec<usize>,
    pub values: Vec<Vec<f64>>,
}

impl DensityGrid {
    pub fn cell_count(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.shape.len() as i32)
    }

    pub fn cell_index(&self, flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.shape.len()];
        let mut r = flat;
        for k in (0..self.shape.len()).rev() {
            idx[k] = r % self.shape[k];
            r /= self.shape[k];
        }
        idx
    }

    pub fn cell_lower(&self, flat: usize) -> Vec<f64> {
        self.cell_index(flat).iter().zip(&self.origin).map(|(&i, o)| o + i as f64 * self.h).collect()
    }

    pub fn cell_midpoint(&self, flat: usize) -> Vec<f64> {
        self.cell_lower(flat).iter().map(|v| v + 0.5 * self.h).collect()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MeasureError {
    #[error("invalid measure: {0}")]
    Invalid(String),
    #[error("measure JSON: {0}")]
    Json(String),
    #[error("the singular part is zero")]
    ZeroSingularPart,
    #[error("measure mass at {location:?} lies outside the test window")]
    MeasureOutsideWindow { location: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    pub d: usize,
    pub m: usize,
    #[serde(default)]
    pub atoms: Vec<Atom>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensityGrid>,
}

fn finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

impl DiscreteMeasure {
    pub fn new(d: usize, m: usize, atoms: Vec<Atom>, density: Option<DensityGrid>) -> Result<Self, MeasureError> {
        let mu = DiscreteMeasure { d, m, atoms, density };
        mu.validate()?;
        Ok(mu)
    }

    pub fn zero(d: usize, m: usize) -> Self {
        DiscreteMeasure { d, m, atoms: Vec::new(), density: None }
    }

    pub fn atomic(d: usize, m: usize, atoms: Vec<(Vec<f64>, Vec<f64>)>) -> Result<Self, MeasureError> {
        Self::new(d, m, atoms.into_iter().map(|(x, w)| Atom { x, w }).collect(), None)
    }

    pub fn from_json(s: &str) -> Result<Self, MeasureError> {
        let mu: DiscreteMeasure = serde_json::from_str(s).map_err(|e| MeasureError::Json(e.to_string()))?;
        mu.validate()?;
        Ok(mu)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("measure serializes")
    }

    fn validate(&self) -> Result<(), MeasureError> {
        let bad = |s: String| Err(MeasureError::Invalid(s));
        if self.d == 0 || self.m == 0 {
            return bad("d and m must be positive".into());
        }
        let mut seen = HashSet::new();
        for (i, a) in self.atoms.iter().enumerate() {
            if a.x.len() != self.d || a.w.len() != self.m {
                return bad(format!("atom {i} has shape ({}, {}), expected ({}, {})", a.x.len(), a.w.len(), self.d, self.m));
            }
            if !finite(&a.x) || !finite(&a.w) {
                return bad(format!("atom {i} is not finite"));
            }
            let key: Vec<u64> = a.x.iter().map(|v| (v + 0.0).to_bits()).collect();
            if !seen.insert(key) {
                return bad(format!("atom {i} repeats location {:?}", a.x));
            }
        }
        if let Some(g) = &self.density {
            if !(g.h > 0.0 && g.h.is_finite()) {
                return bad("grid spacing must be positive".into());
            }
            if g.origin.len() != self.d || g.shape.len() != self.d || g.shape.contains(&0) {
                return bad("grid origin/shape must have d nonzero entries".into());
            }
            if !finite(&g.origin) {
                return bad("grid origin is not finite".into());
            }
            if g.values.len() != g.cell_count() {
                return bad(format!("grid has {} cells but {} values", g.cell_count(), g.values.len()));
            }
            if g.values.iter().any(|v| v.len() != self.m || !finite(v)) {
                return bad(format!("grid values must be finite vectors of length {}", self.m));
            }
        }
        Ok(())
    }

    /// Locations carrying mass: atoms and density cell midpoints.
    fn mass_points(&self) -> impl Iterator<Item = (Vec<f64>, bool)> + '_ {
        let atoms = self.atoms.iter().filter(|a| norm(&a.w) > 0.0).map(|a| (a.x.clone(), true));
        let cells = self.density.iter().flat_map(|g| {
            (0..g.cell_count()).filter(|&i| norm(&g.values[i]) > 0.0).map(move |i| (g.cell_midpoint(i), false))
        });
        atoms.chain(cells)
    }

    /// Smallest box containing every atom and every nonzero density cell.
    pub fn support_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let mut lo = vec![f64::INFINITY; self.d];
        let mut hi = vec![f64::NEG_INFINITY; self.d];
        let mut any = false;
        for a in self.atoms.iter().filter(|a| norm(&a.w) > 0.0) {
            any = true;
            for k in 0..self.d {
                lo[k] = lo[k].min(a.x[k]);
                hi[k] = hi[k].max(a.x[k]);
            }
        }
        if let Some(g) = &self.density {
            for i in (0..g.cell_count()).filter(|&i| norm(&g.values[i]) > 0.0) {
                any = true;
                let c = g.cell_lower(i);
                for k in 0..self.d {
                    lo[k] = lo[k].min(c[k]);
                    hi[k] = hi[k].max(c[k] + g.h);
                }
            }
        }
        any.then_some((lo, hi))
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    All,
    /// Closed ball `|y − center| ≤ radius`.
    Ball { center: Vec<f64>, radius: f64 },
    /// Half-open box `lo ≤ y < hi`; splits space without overlap.
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl Region {
    pub fn contains(&self, y: &[f64]) -> bool {
        match self {
            Region::All => true,
            Region::Ball { center, radius } => dist(center, y) <= *radius,
            Region::Box { lo, hi } => y.iter().zip(lo.iter().zip(hi)).all(|(v, (l, h))| l <= v && v < h),
        }
    }
}

/// `|μ|(region)`: atom norms plus the midpoint rule on density cells (a cell
/// counts when its midpoint lies in the region).
pub fn total_variation(mu: &DiscreteMeasure, region: &Region) -> f64 {
    let atoms: f64 = mu.atoms.iter().filter(|a| region.contains(&a.x)).map(|a| norm(&a.w)).sum();
    let cells = mu.density.as_ref().map_or(0.0, |g| {
        let vol = g.cell_volume();
        (0..g.cell_count())
            .filter(|&i| region.contains(&g.cell_midpoint(i)))
            .map(|i| norm(&g.values[i]) * vol)
            .sum()
    });
    atoms + cells
}

/// `(absolutely continuous part, singular part)`: the density and the
/// atoms, respectively.
pub fn lebesgue_decompose(mu: &DiscreteMeasure) -> (DiscreteMeasure, DiscreteMeasure) {
    let ac = DiscreteMeasure { d: mu.d, m: mu.m, atoms: Vec::new(), density: mu.density.clone() };
    let singular = DiscreteMeasure { d: mu.d, m: mu.m, atoms: mu.atoms.clone(), density: None };
    (ac, singular)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionAt {
    pub x: Vec<f64>,
    pub f: Vec<f64>,
}

/// `f = dμ_s/d|μ_s|` on the carrier of the singular part.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadonNikodymField {
    pub directions: Vec<DirectionAt>,
}

impl RadonNikodymField {
    /// Direction at the carrier point nearest to `x`, if within `tol`.
    pub fn at(&self, x: &[f64], tol: f64) -> Option<&[f64]> {
        self.directions
            .iter()
            .map(|p| (dist(&p.x, x), p))
            .filter(|(r, _)| *r <= tol)
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, p)| p.f.as_slice())
    }
}

/// Normalizes each atom's weight; atoms of zero weight carry no
/// `|μ_s|`-mass and are skipped.
pub fn radon_nikodym(singular: &DiscreteMeasure) -> Result<RadonNikodymField, MeasureError> {
    let directions: Vec<DirectionAt> = singular
        .atoms
        .iter()
        .filter_map(|a| {
            let n = norm(&a.w);
            (n > 0.0).then(|| DirectionAt { x: a.x.clone(), f: a.w.iter().map(|v| v / n).collect() })
        })
        .collect();
    if directions.is_empty() {
        return Err(MeasureError::ZeroSingularPart);
    }
    Ok(RadonNikodymField { directions })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AfreeOptions {
    /// Test window; defaults to the support box with a margin.
    pub window: Option<Window>,
    /// Translations per axis at the finest scale.
    pub resolution: usize,
    /// Number of dyadic scales.
    pub scales: usize,
    pub tol: f64,
}

impl Default for AfreeOptions {
    fn default() -> Self {
        AfreeOptions { window: None, resolution: 17, scales: 3, tol: 1e-10 }
    }
}

/// One tensor test function `φ(y) = Π_k b((y_k − c_k)/s)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestBump {
    pub center: Vec<f64>,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AfreeReport {
    /// `max |⟨Aμ, φ⟩| / ‖φ‖_{C^K}` over the family and the equations.
    pub max_residual: f64,
    pub per_equation: Vec<f64>,
    pub worst: Option<TestBump>,
    pub test_functions: usize,
    pub window: Window,
    pub tolerance: f64,
    pub pass: bool,
}

fn default_window(mu: &DiscreteMeasure) -> Window {
    match mu.support_box() {
        None => Window { lo: vec![-1.0; mu.d], hi: vec![1.0; mu.d] },
        Some((lo, hi)) => {
            let extent = lo.iter().zip(&hi).map(|(l, h)| h - l).fold(0.0, f64::max);
            let margin = (0.25 * extent).max(1.0);
            Window { lo: lo.iter().map(|v| v - margin).collect(), hi: hi.iter().map(|v| v + margin).collect() }
        }
    }
}

/// Translations are spaced half a scale apart, so every point of the window
/// sits off-center in some bump at every level.
fn test_family(window: &Window, resolution: usize, scales: usize) -> Vec<TestBump> {
    let side = window.lo.iter().zip(&window.hi).map(|(l, h)| h - l).fold(0.0, f64::max);
    let finest = side / (resolution.max(3) - 1) as f64;
    let mut out = Vec::new();
    for level in 0..scales {
        let spacing = finest * 2f64.powi((scales - 1 - level) as i32);
        let scale = 2.0 * spacing;
        let axes: Vec<Vec<f64>> = window
            .lo
            .iter()
            .zip(&window.hi)
            .map(|(&l, &h)| {
                let n = ((h - l) / spacing + 1e-9).floor() as usize;
                (0..=n).map(|i| l + i as f64 * spacing).collect()
            })
            .collect();
        let total: usize = axes.iter().map(Vec::len).product();
        for flat in 0..total {
            let mut r = flat;
            let mut center = vec![0.0; axes.len()];
            for k in (0..axes.len()).rev() {
                center[k] = axes[k][r % axes[k].len()];
                r /= axes[k].len();
            }
            out.push(TestBump { center, scale });
        }
    }
    out
}

/// Every multi-index of length `d` and order at most `k`.
pub(crate) fn indices_up_to(d: usize, k: u32) -> Vec<MultiIndex> {
    fn rec(d: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if cur.len() == d {
            out.push(MultiIndex::new(cur.clone()));
            return;
        }
        for e in 0..=left {
            cur.push(e);
            rec(d, left - e, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(d, k, &mut Vec::new(), &mut out);
    out
}

/// `Σ_α (−1)^{|α|} ∫ Σ_l a^α_{jl}(y) ∂^α φ(y) dμ_l(y)` for every `j`, i.e.
/// `Aμ = Σ_α ∂^α(a^α μ)` tested against `φ`.
fn weak_pairing(op: &OperatorSystem, mu: &DiscreteMeasure, bump: &TestBump, der: &BumpDerivatives) -> Vec<f64> {
    let s = bump.scale;
    let eval_at = |y: &[f64], w: &[f64], out: &mut [f64]| {
        let t: Vec<f64> = y.iter().zip(&bump.center).map(|(yk, ck)| (yk - ck) / s).collect();
        if t.iter().any(|v| v.abs() >= 1.0) {
            return;
        }
        for (j, eq) in op.equations().iter().enumerate() {
            for (alpha, coeffs) in eq {
                let deriv: f64 = alpha
                    .exponents()
                    .iter()
                    .zip(&t)
                    .map(|(&n, &tk)| der.eval(n as usize, tk) / s.powi(n as i32))
                    .product();
                if deriv == 0.0 {
                    continue;
                }
                let sign = if alpha.order() % 2 == 0 { 1.0 } else { -1.0 };
                let aw: f64 = coeffs
                    .iter()
                    .zip(w)
                    .map(|(p, wl)| if *wl == 0.0 || p.is_zero() { 0.0 } else { p.evaluate(y).expect("dimension") * wl })
                    .sum();
                out[j] += sign * aw * deriv;
            }
        }
    };
    let mut out = vec![0.0; op.equation_count()];
    for a in &mu.atoms {
        eval_at(&a.x, &a.w, &mut out);
    }
    if let Some(g) = &mu.density {
        let vol = g.cell_volume();
        for i in 0..g.cell_count() {
            let w: Vec<f64> = g.values[i].iter().map(|v| v * vol).collect();
            eval_at(&g.cell_midpoint(i), &w, &mut out);
        }
    }
    out
}

/// Tests `Aμ = 0` weakly against dyadic tensor bumps covering the window.
pub fn check_afree(op: &OperatorSystem, mu: &DiscreteMeasure, opts: &AfreeOptions) -> Result<AfreeReport, MeasureError> {
    if mu.d != op.dim() || mu.m != op.components() {
        return Err(MeasureError::Invalid(format!(
            "measure is ({}, {}) but the operator acts on ({}, {})",
            mu.d,
            mu.m,
            op.dim(),
            op.components()
        )));
    }
    let window = match &opts.window {
        Some(w) => {
            if w.lo.len() != mu.d || w.hi.len() != mu.d || w.lo.iter().zip(&w.hi).any(|(l, h)| l >= h) {
                return Err(MeasureError::Invalid("window must be a nonempty box of dimension d".into()));
            }
            let inside = Region::Box { lo: w.lo.clone(), hi: w.hi.clone() };
            let closed = |y: &[f64]| y.iter().zip(w.lo.iter().zip(&w.hi)).all(|(v, (l, h))| l <= v && v <= h);
            if let Some((location, _)) = mu.mass_points().find(|(y, _)| !(inside.contains(y) || closed(y))) {
                return Err(MeasureError::MeasureOutsideWindow { location });
            }
            w.clone()
        }
        None => default_window(mu),
    };
    let k = op.max_order();
    let der = BumpDerivatives::new(k as usize);
    let sup = der.sup_table();
    let all_alpha = indices_up_to(mu.d, k);
    let family = test_family(&window, opts.resolution, opts.scales);
    let results: Vec<Vec<f64>> = family
        .par_iter()
        .map(|b| {
            let ck = all_alpha
                .iter()
                .map(|a| a.exponents().iter().map(|&n| sup[n as usize] / b.scale.powi(n as i32)).product::<f64>())
                .fold(0.0, f64::max);
            weak_pairing(op, mu, b, &der).into_iter().map(|v| v.abs() / ck).collect()
        })
        .collect();
    let mut per_equation = vec![0.0; op.equation_count()];
    let mut worst = None;
    let mut max_residual = 0.0;
    for (b, r) in family.iter().zip(&results) {
        for (j, &v) in r.iter().enumerate() {
            per_equation[j] = f64::max(per_equation[j], v);
            if v > max_residual {
                max_residual = v;
                worst = Some(b.clone());
            }
        }
    }
    Ok(AfreeReport {
        max_residual,
        per_equation,
        worst,
        test_functions: family.len(),
        window,
        tolerance: opts.tol,
        pass: max_residual < opts.tol,
    })
}
