//! Periodic grids, n-dimensional FFTs and the Fourier multiplier test
//! functions `φ = conj(T_m 𝛒)`.
//!
//! Transforms follow `û(ξ) = ∫ e^{−2πi x·ξ} u(x) dx`, approximated on a grid
//! of spacing `h` and period `L = n·h` by `h^d · DFT`, at frequencies
//! `ξ = k/L`. The zero frequency and the Nyquist planes are excluded from
//! every multiplier, which keeps conjugate symmetry exact on the grid.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::bump::Mollifier;
use crate::frame::AnisotropicFrame;
use crate::multi_index::MultiIndex;
use crate::symbol::fourier_monomial;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FourierError {
    #[error("grid resolution {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("grid window must contain [-1, 1] with period at least {min_period}, got origin {origin} and period {period}")]
    WindowTooSmall { origin: f64, period: f64, min_period: f64 },
    #[error("frame dimension {frame} does not match grid dimension {grid}")]
    DimensionMismatch { frame: usize, grid: usize },
}

/// Nodes `origin_k + i_k·h`, `0 ≤ i_k < n_k`, row-major (last axis fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub origin: Vec<f64>,
    pub h: f64,
    pub n: Vec<usize>,
}

impl UniformGrid {
    /// `n` nodes per axis on `[−padding, padding)`, so the window is
    /// `padding` times the width of `supp 𝛒 = [−1, 1]^d`.
    pub fn centered(d: usize, n: usize, padding: f64) -> Self {
        let period = 2.0 * padding;
        UniformGrid { origin: vec![-padding; d], h: period / n as f64, n: vec![n; d] }
    }

    pub fn dim(&self) -> usize {
        self.n.len()
    }

    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim() as i32)
    }

    pub fn period(&self, k: usize) -> f64 {
        self.n[k] as f64 * self.h
    }

    pub fn index(&self, flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        let mut r = flat;
        for k in (0..self.dim()).rev() {
            idx[k] = r % self.n[k];
            r /= self.n[k];
        }
        idx
    }

    pub fn node(&self, flat: usize) -> Vec<f64> {
        self.index(flat).iter().zip(&self.origin).map(|(&i, o)| o + i as f64 * self.h).collect()
    }

    pub fn axis(&self, k: usize) -> Vec<f64> {
        (0..self.n[k]).map(|i| self.origin[k] + i as f64 * self.h).collect()
    }

    /// Frequency of DFT bin `flat`, with signed wave numbers.
    pub fn frequency(&self, flat: usize) -> Vec<f64> {
        self.index(flat)
            .iter()
            .enumerate()
            .map(|(k, &i)| {
                let n = self.n[k] as i64;
                let s = if (i as i64) < (n + 1) / 2 { i as i64 } else { i as i64 - n };
                s as f64 / self.period(k)
            })
            .collect()
    }

    /// Whether the bin is the zero frequency or lies on a Nyquist plane.
    pub fn is_excluded(&self, flat: usize) -> bool {
        let idx = self.index(flat);
        idx.iter().all(|&i| i == 0) || idx.iter().zip(&self.n).any(|(&i, &n)| n % 2 == 0 && i == n / 2)
    }

    pub fn validate_for_mollifier(&self, min_padding: f64) -> Result<(), FourierError> {
        for k in 0..self.dim() {
            if !self.n[k].is_power_of_two() {
                return Err(FourierError::NotPowerOfTwo(self.n[k]));
            }
            let period = self.period(k);
            let min_period = 2.0 * min_padding;
            if self.origin[k] > -1.0 || self.origin[k] + period < 1.0 || period < min_period - 1e-12 {
                return Err(FourierError::WindowTooSmall { origin: self.origin[k], period, min_period });
            }
        }
        Ok(())
    }
}

/// Unnormalized in-place DFT along every axis of a row-major array.
pub fn fft_nd(data: &mut [Complex64], shape: &[usize], inverse: bool) {
    let mut planner = FftPlanner::new();
    let total: usize = shape.iter().product();
    assert_eq!(data.len(), total);
    let mut stride = 1;
    for k in (0..shape.len()).rev() {
        let n = shape[k];
        let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let block = stride * n;
        for outer in (0..total).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (i, v) in line.iter_mut().enumerate() {
                    *v = data[base + i * stride];
                }
                fft.process(&mut line);
                for (i, v) in line.iter().enumerate() {
                    data[base + i * stride] = *v;
                }
            }
        }
        stride *= n;
    }
}

fn forward(grid: &UniformGrid, values: &[Complex64]) -> Vec<Complex64> {
    let mut data = values.to_vec();
    fft_nd(&mut data, &grid.n, false);
    data
}

fn inverse(grid: &UniformGrid, spectrum: &[Complex64]) -> Vec<Complex64> {
    let mut data = spectrum.to_vec();
    fft_nd(&mut data, &grid.n, true);
    let scale = 1.0 / grid.len() as f64;
    data.iter_mut().for_each(|v| *v *= scale);
    data
}

/// The tensor mollifier sampled at the grid nodes.
pub fn sample_mollifier(grid: &UniformGrid) -> Vec<f64> {
    (0..grid.len()).map(|i| Mollifier.eval(&grid.node(i))).collect()
}

/// `|𝛒̂(ξ)|²` at every bin, with `𝛒̂ ≈ h^d · DFT(𝛒)`.
pub fn mollifier_power_spectrum(grid: &UniformGrid) -> Vec<f64> {
    let vals: Vec<Complex64> = sample_mollifier(grid).into_iter().map(|v| Complex64::new(v, 0.0)).collect();
    let vol = grid.cell_volume();
    forward(grid, &vals).into_iter().map(|c| (c * vol).norm_sqr()).collect()
}

/// A function `ψ` on the homogeneity manifold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DirectionSymbol {
    Zero,
    /// `ξ ↦ ξ_r` (zero-based `r`).
    Coordinate { r: usize },
    /// `ξ ↦ ξ_r ξ_s`.
    Product { r: usize, s: usize },
    /// Nearest-neighbour interpolation of user samples on `P`.
    Samples { points: Vec<Vec<f64>>, values: Vec<f64> },
}

impl DirectionSymbol {
    pub fn eval(&self, p: &[f64]) -> f64 {
        match self {
            DirectionSymbol::Zero => 0.0,
            DirectionSymbol::Coordinate { r } => p[*r],
            DirectionSymbol::Product { r, s } => p[*r] * p[*s],
            DirectionSymbol::Samples { points, values } => points
                .iter()
                .zip(values)
                .map(|(q, v)| (q.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), *v))
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .map_or(0.0, |(_, v)| v),
        }
    }

    pub fn label(&self) -> String {
        match self {
            DirectionSymbol::Zero => "0".into(),
            DirectionSymbol::Coordinate { r } => format!("xi{}", r + 1),
            DirectionSymbol::Product { r, s } => format!("xi{}*xi{}", r + 1, s + 1),
            DirectionSymbol::Samples { points, .. } => format!("samples[{}]", points.len()),
        }
    }

    /// The coordinates `ξ_r` and the products `ξ_r ξ_s`, `r ≤ s`. On `P`
    /// every coordinate has modulus at most one, so all members are bounded
    /// by one there.
    pub fn default_family(d: usize) -> Vec<DirectionSymbol> {
        let mut out: Vec<DirectionSymbol> = (0..d).map(|r| DirectionSymbol::Coordinate { r }).collect();
        for r in 0..d {
            for s in r..d {
                out.push(DirectionSymbol::Product { r, s });
            }
        }
        out
    }
}

/// `m(ξ) = ψ(π(ξ)) / ρ(ξ)` with `m(0) = 0`. With `literal_denominator` the
/// denominator is `Σ_k |ξ_k|^{β_k}` instead of the quasi-norm.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierSpec {
    pub psi: DirectionSymbol,
    pub frame: AnisotropicFrame,
    pub literal_denominator: bool,
}

impl MultiplierSpec {
    pub fn new(psi: DirectionSymbol, frame: AnisotropicFrame) -> Self {
        MultiplierSpec { psi, frame, literal_denominator: false }
    }

    pub fn symbol(&self, xi: &[f64]) -> f64 {
        let Ok(p) = self.frame.project(xi) else {
            return 0.0;
        };
        let denom =
            if self.literal_denominator { self.frame.literal_denominator(xi) } else { self.frame.quasi_norm(xi) };
        self.psi.eval(&p) / denom
    }
}

/// A complex grid function with cached spectral derivatives.
#[derive(Debug)]
pub struct GridTestFunction {
    pub grid: UniformGrid,
    pub values: Vec<Complex64>,
    spectrum: Vec<Complex64>,
    derivatives: Mutex<HashMap<MultiIndex, Arc<Vec<Complex64>>>>,
}

impl Clone for GridTestFunction {
    fn clone(&self) -> Self {
        GridTestFunction::from_values(self.grid.clone(), self.values.clone())
    }
}

impl GridTestFunction {
    pub fn from_values(grid: UniformGrid, values: Vec<Complex64>) -> Self {
        let spectrum = forward(&grid, &values);
        GridTestFunction { grid, values, spectrum, derivatives: Mutex::new(HashMap::new()) }
    }

    /// `∂^α φ` at the nodes, by multiplying the spectrum by `(2πiξ)^α`
    /// (zero on the excluded bins when `α ≠ 0`).
    pub fn derivative(&self, alpha: &MultiIndex) -> Arc<Vec<Complex64>> {
        if alpha.is_zero() {
            return Arc::new(self.values.clone());
        }
        if let Some(v) = self.derivatives.lock().expect("cache lock").get(alpha) {
            return Arc::clone(v);
        }
        let spec: Vec<Complex64> = (0..self.grid.len())
            .map(|i| {
                if self.grid.is_excluded(i) {
                    Complex64::new(0.0, 0.0)
                } else {
                    self.spectrum[i] * fourier_monomial(alpha, &self.grid.frequency(i))
                }
            })
            .collect();
        let d = Arc::new(inverse(&self.grid, &spec));
        self.derivatives.lock().expect("cache lock").insert(alpha.clone(), Arc::clone(&d));
        d
    }

    pub fn max_imaginary(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }
}

/// `φ = conj(IDFT(m · DFT(𝛒)))`, with the excluded bins set to zero.
pub fn multiplier_test_function(spec: &MultiplierSpec, grid: &UniformGrid) -> Result<GridTestFunction, FourierError> {
    if spec.frame.dim() != grid.dim() {
        return Err(FourierError::DimensionMismatch { frame: spec.frame.dim(), grid: grid.dim() });
    }
    grid.validate_for_mollifier(4.0)?;
    let rho: Vec<Complex64> = sample_mollifier(grid).into_iter().map(|v| Complex64::new(v, 0.0)).collect();
    let mut spectrum = forward(grid, &rho);
    for (i, s) in spectrum.iter_mut().enumerate() {
        *s *= if grid.is_excluded(i) { 0.0 } else { spec.symbol(&grid.frequency(i)) };
    }
    let values = inverse(grid, &spectrum).into_iter().map(|v| v.conj()).collect();
    Ok(GridTestFunction::from_values(grid.clone(), values))
}
