//! Frequency grids, band-limited signals and the Fourier pairing
//! `f̂(ξ) = ∫ e^{-ixξ} f(x) dx`, `f(x) = (2π)^{-1} ∫ e^{ixξ} f̂(ξ) dξ`.
//!
//! Every integral is a midpoint Riemann sum with a fixed summation order, so
//! results do not depend on the rayon thread count.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Relative edge magnitude above which a transform is flagged as aliased.
pub const ALIASING_EDGE_RATIO: f64 = 1e-8;

/// Uniform midpoint grid on `[xi_min, xi_max]`.
///
/// Node `j` sits at `xi_min + (j + 1/2) Δξ`, so an even grid symmetric about
/// the origin never samples `ξ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub xi_min: f64,
    pub xi_max: f64,
    pub n: usize,
}

impl FrequencyGrid {
    pub fn new(xi_min: f64, xi_max: f64, n: usize) -> Result<Self> {
        if !(xi_min.is_finite() && xi_max.is_finite()) || xi_min >= xi_max {
            return Err(LabError::validation(format!(
                "frequency grid needs xi_min < xi_max, got [{xi_min}, {xi_max}]"
            )));
        }
        if n < 2 {
            return Err(LabError::validation("frequency grid needs n >= 2"));
        }
        Ok(FrequencyGrid { xi_min, xi_max, n })
    }

    /// Symmetric grid `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, n: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n)
    }

    #[inline]
    pub fn delta(&self) -> f64 {
        (self.xi_max - self.xi_min) / self.n as f64
    }

    #[inline]
    pub fn node(&self, j: usize) -> f64 {
        self.xi_min + (j as f64 + 0.5) * self.delta()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |j| self.node(j))
    }

    /// Largest `|ξ|` over the nodes.
    pub fn max_abs_node(&self) -> f64 {
        self.node(0).abs().max(self.node(self.n - 1).abs())
    }

    fn validate(&self) -> Result<()> {
        Self::new(self.xi_min, self.xi_max, self.n).map(|_| ())
    }
}

/// Samples of `f̂` on a [`FrequencyGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySignal {
    grid: FrequencyGrid,
    values: Vec<C64>,
    aliasing: bool,
}

impl FrequencySignal {
    pub fn new(grid: FrequencyGrid, values: Vec<C64>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.n {
            return Err(LabError::validation(format!(
                "signal has {} values for a grid of {} nodes",
                values.len(),
                grid.n
            )));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(LabError::validation("signal values must be finite"));
        }
        Ok(FrequencySignal {
            grid,
            values,
            aliasing: false,
        })
    }

    /// Sample a closure at the grid nodes.
    pub fn from_fn(grid: FrequencyGrid, f: impl Fn(f64) -> C64 + Sync) -> Result<Self> {
        let values = (0..grid.n).into_par_iter().map(|j| f(grid.node(j))).collect();
        Self::new(grid, values)
    }

    pub fn zeros(grid: FrequencyGrid) -> Result<Self> {
        Self::new(grid, vec![C64::new(0.0, 0.0); grid.n])
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// True when the forward transform left non-negligible mass at the grid edge.
    pub fn aliasing(&self) -> bool {
        self.aliasing
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    pub fn scaled(&self, c: C64) -> Self {
        FrequencySignal {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
            aliasing: self.aliasing,
        }
    }

    pub(crate) fn with_values(&self, values: Vec<C64>) -> Self {
        FrequencySignal {
            grid: self.grid,
            values,
            aliasing: self.aliasing,
        }
    }

    /// Node-level energy `Σ |f̂_j|²` (no quadrature weight).
    pub fn node_energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let file = SignalFile::from(self);
        std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: SignalFile = serde_json::from_str(&text)?;
        file.try_into()
    }
}

/// On-disk form: `{"grid": {"xi_min","xi_max","n"}, "values": [[re, im], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignalFile {
    pub grid: FrequencyGrid,
    pub values: Vec<[f64; 2]>,
}

impl From<&FrequencySignal> for SignalFile {
    fn from(s: &FrequencySignal) -> Self {
        SignalFile {
            grid: s.grid,
            values: s.values.iter().map(|v| [v.re, v.im]).collect(),
        }
    }
}

impl TryFrom<SignalFile> for FrequencySignal {
    type Error = LabError;

    fn try_from(f: SignalFile) -> Result<Self> {
        let values = f.values.iter().map(|p| C64::new(p[0], p[1])).collect();
        FrequencySignal::new(f.grid, values)
    }
}

/// Samples of `f` on a uniform spatial grid.
#[derive(Debug, Clone)]
pub struct SpatialSamples {
    pub x: Vec<f64>,
    pub values: Vec<C64>,
}

impl SpatialSamples {
    pub fn from_fn(x_min: f64, x_max: f64, n: usize, f: impl Fn(f64) -> C64) -> Self {
        let dx = (x_max - x_min) / (n - 1) as f64;
        let x: Vec<f64> = (0..n).map(|k| x_min + k as f64 * dx).collect();
        let values = x.iter().map(|&xk| f(xk)).collect();
        SpatialSamples { x, values }
    }

    /// Common spacing, or an error when the grid is not uniform.
    pub fn spacing(&self) -> Result<f64> {
        if self.x.len() < 2 || self.x.len() != self.values.len() {
            return Err(LabError::validation(
                "spatial samples need at least two aligned points",
            ));
        }
        let n = self.x.len();
        let dx = (self.x[n - 1] - self.x[0]) / (n - 1) as f64;
        if !(dx > 0.0) {
            return Err(LabError::validation("spatial grid must be increasing"));
        }
        for w in self.x.windows(2) {
            if ((w[1] - w[0]) - dx).abs() > 1e-9 * dx {
                return Err(LabError::validation("spatial grid is not uniform"));
            }
        }
        Ok(dx)
    }

    /// Discrete `L²(dx)` norm.
    pub fn l2_norm(&self) -> Result<f64> {
        let dx = self.spacing()?;
        Ok((self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * dx).sqrt())
    }
}

/// `f̂(ξ_j) ≈ Σ_k e^{-i x_k ξ_j} f(x_k) Δx`.
///
/// The result carries an aliasing flag when `|f̂|` at either grid edge exceeds
/// [`ALIASING_EDGE_RATIO`] times its maximum.
pub fn forward_transform(f: &SpatialSamples, target: FrequencyGrid) -> Result<FrequencySignal> {
    target.validate()?;
    let dx = f.spacing()?;
    let values: Vec<C64> = (0..target.n)
        .into_par_iter()
        .map(|j| {
            let xi = target.node(j);
            let mut acc = C64::new(0.0, 0.0);
            for (&xk, &fk) in f.x.iter().zip(&f.values) {
                acc += fk * C64::cis(-xk * xi);
            }
            acc * dx
        })
        .collect();
    let mut sig = FrequencySignal::new(target, values)?;
    let peak = sig.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let edge = sig.values[0].norm().max(sig.values[target.n - 1].norm());
    sig.aliasing = peak > 0.0 && edge > ALIASING_EDGE_RATIO * peak;
    Ok(sig)
}

/// `f(x) ≈ (2π)^{-1} Σ_j e^{i x ξ_j} f̂(ξ_j) Δξ` at arbitrary points.
pub fn inverse_transform(sig: &FrequencySignal, xs: &[f64]) -> Vec<C64> {
    let g = sig.grid;
    let w = g.delta() / (2.0 * PI);
    xs.par_iter()
        .map(|&x| {
            let mut acc = C64::new(0.0, 0.0);
            for (j, &v) in sig.values.iter().enumerate() {
                acc += v * C64::cis(x * g.node(j));
            }
            acc * w
        })
        .collect()
}

/// Regularity exponent of an `H^s` norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevParams {
    pub s: f64,
}

impl SobolevParams {
    pub fn new(s: f64) -> Result<Self> {
        if !s.is_finite() {
            return Err(LabError::validation("sobolev exponent must be finite"));
        }
        Ok(SobolevParams { s })
    }
}

/// `‖f‖_{H^s} = ((2π)^{-1} Σ_j (1+ξ_j²)^s |f̂(ξ_j)|² Δξ)^{1/2}`.
pub fn sobolev_norm(sig: &FrequencySignal, p: SobolevParams) -> f64 {
    let g = sig.grid;
    let sum: f64 = sig
        .values
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let xi = g.node(j);
            (1.0 + xi * xi).powf(p.s) * v.norm_sqr()
        })
        .sum();
    (sum * g.delta() / (2.0 * PI)).sqrt()
}

/// The standard mollifier `exp(1 - 1/(1-u²))` on `|u| < 1`, normalized to 1 at 0.
#[inline]
pub fn mollifier(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - u * u)).exp()
    }
}

/// Smooth compactly supported profiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BumpProfile {
    /// Even bump supported in `[-delta, delta]` with value 1 at the origin.
    Origin { delta: f64 },
    /// Even bump supported in `1/2 < |ξ| < 2`, peaking at `|ξ| = 5/4`.
    Annular,
}

impl Default for BumpProfile {
    fn default() -> Self {
        BumpProfile::Origin { delta: 0.1 }
    }
}

const QUAD_NODES: usize = 1 << 16;

impl BumpProfile {
    pub fn origin(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(LabError::validation("bump support radius must be positive"));
        }
        Ok(BumpProfile::Origin { delta })
    }

    #[inline]
    pub fn eval(&self, xi: f64) -> f64 {
        match *self {
            BumpProfile::Origin { delta } => mollifier(xi / delta),
            BumpProfile::Annular => mollifier((xi.abs() - 1.25) / 0.75),
        }
    }

    /// Closed support as a list of intervals.
    pub fn support(&self) -> Vec<(f64, f64)> {
        match *self {
            BumpProfile::Origin { delta } => vec![(-delta, delta)],
            BumpProfile::Annular => vec![(-2.0, -0.5), (0.5, 2.0)],
        }
    }

    fn quadrature(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.support()
            .into_iter()
            .map(|(a, b)| {
                let h = (b - a) / QUAD_NODES as f64;
                (0..QUAD_NODES)
                    .map(|k| f(self.eval(a + (k as f64 + 0.5) * h)))
                    .sum::<f64>()
                    * h
            })
            .sum()
    }

    /// `∫ψ`.
    pub fn integral(&self) -> f64 {
        self.quadrature(|v| v)
    }

    /// `‖ψ‖²_{L²}`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.quadrature(|v| v * v)
    }

    /// `∫|ψ'|` by finite differences at quadrature resolution.
    pub fn total_variation(&self) -> f64 {
        self.support()
            .into_iter()
            .map(|(a, b)| {
                let h = (b - a) / QUAD_NODES as f64;
                let mut prev = self.eval(a);
                let mut tv = 0.0;
                for k in 1..=QUAD_NODES {
                    let cur = self.eval(a + k as f64 * h);
                    tv += (cur - prev).abs();
                    prev = cur;
                }
                tv
            })
            .sum()
    }
}

/// Free function form of [`BumpProfile::eval`].
pub fn bump_eval(b: &BumpProfile, xi: f64) -> f64 {
    b.eval(xi)
}
