//! Curve-restricted maximal functions `sup_t |S_t f(γ(x,t))|` over atom lists,
//! the maximal-estimate ratio, power-law regression over λ sweeps, and the
//! discrete fractional-integration inequality for α-dimensional measures.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::curves::CurveFamily;
use crate::dispersion::{check_resolution, DispersionSymbol, Evolution, MAX_PHASE_STEP};
use crate::error::{LabError, Result};
use crate::measures::{build_power_measure, integrate_l2_mu, FrostmanMeasure};
use crate::spectral::{sobolev_norm, BumpProfile, FrequencyGrid, FrequencySignal, SobolevParams};

pub const GOLDEN_ITERATIONS: usize = 20;

/// Relative change of the L²(dμ) norm accepted as converged under time-step halving.
pub const CONVERGENCE_TOL: f64 = 1e-3;

const TIME_CHUNK: usize = 64;
const LAGRANGE_TAPS: usize = 12;

fn default_true() -> bool {
    true
}

/// Geometrically spaced times `t_lo · (t_hi/t_lo)^{k/(n−1)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricSubgrid {
    pub t_lo: f64,
    pub t_hi: f64,
    pub n: usize,
}

/// Uniform times on `[t_min, t_max]` plus an optional geometric subgrid.
///
/// Each refinement level halves both step sizes; the node set of level `k` is
/// contained in that of level `k + 1` bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub n_t: usize,
    #[serde(default)]
    pub refinement_level: u32,
    #[serde(default)]
    pub geometric: Option<GeometricSubgrid>,
    /// Golden-section polish around each discrete argmax.
    #[serde(default = "default_true")]
    pub polish: bool,
}

impl TimeGrid {
    pub fn new(t_min: f64, t_max: f64, n_t: usize) -> Result<Self> {
        let tg = TimeGrid {
            t_min,
            t_max,
            n_t,
            refinement_level: 0,
            geometric: None,
            polish: true,
        };
        tg.validate()?;
        Ok(tg)
    }

    /// `[0, 1]` with 2048 uniform nodes and 256 geometric nodes in
    /// `[10⁻⁴λ⁻¹, λ⁻¹]`, where the counterexample features live.
    pub fn counterexample_default(lambda: f64) -> Result<Self> {
        TimeGrid::new(0.0, 1.0, 2048)?.with_geometric(1e-4 / lambda, 1.0 / lambda, 256)
    }

    pub fn with_geometric(mut self, t_lo: f64, t_hi: f64, n: usize) -> Result<Self> {
        self.geometric = Some(GeometricSubgrid { t_lo, t_hi, n });
        self.validate()?;
        Ok(self)
    }

    pub fn with_polish(mut self, polish: bool) -> Self {
        self.polish = polish;
        self
    }

    pub fn refined(&self) -> Self {
        TimeGrid {
            refinement_level: self.refinement_level + 1,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(-1.0..=1.0).contains(&self.t_min) || !(-1.0..=1.0).contains(&self.t_max) {
            return Err(LabError::validation("time grid must lie in [-1, 1]"));
        }
        if !(self.t_min < self.t_max) || self.n_t < 2 {
            return Err(LabError::validation("time grid needs t_min < t_max and n_t >= 2"));
        }
        if self.refinement_level > 20 {
            return Err(LabError::validation("refinement level above 20"));
        }
        if let Some(g) = self.geometric {
            if !(g.t_lo > 0.0 && g.t_lo < g.t_hi && g.n >= 2)
                || g.t_lo < self.t_min
                || g.t_hi > self.t_max
            {
                return Err(LabError::validation(
                    "geometric subgrid needs 0 < t_lo < t_hi inside [t_min, t_max] and n >= 2",
                ));
            }
        }
        Ok(())
    }

    /// Uniform step at the current level.
    pub fn step(&self) -> f64 {
        (self.t_max - self.t_min) / self.uniform_intervals() as f64
    }

    fn uniform_intervals(&self) -> usize {
        (self.n_t - 1) << self.refinement_level
    }

    /// Sorted, de-duplicated node list.
    pub fn nodes(&self) -> Vec<f64> {
        let m = self.uniform_intervals();
        let h = (self.t_max - self.t_min) / m as f64;
        let mut out: Vec<f64> = (0..=m).map(|k| self.t_min + k as f64 * h).collect();
        if let Some(g) = self.geometric {
            let d = (g.n - 1) << self.refinement_level;
            let ratio = g.t_hi / g.t_lo;
            out.extend((0..=d).map(|k| g.t_lo * ratio.powf(k as f64 / d as f64)));
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}

/// How the field is evaluated along each time slice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldMethod {
    /// Fixed-order Horner sum at every atom.
    #[default]
    Direct,
    /// One zero-padded FFT per slice on an `oversample`× refined spatial grid,
    /// then 12-point Lagrange interpolation at the atoms. Suited to wide bands.
    Sampled { oversample: usize },
}

/// Per-atom supremum and its location in time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximalProfile {
    pub measure: String,
    pub x: Vec<f64>,
    pub weight: Vec<f64>,
    pub sup_values: Vec<f64>,
    pub argmax_t: Vec<f64>,
}

impl MaximalProfile {
    /// `‖sup_t |S_t f(γ(·,t))|‖_{L²(dμ)}`.
    pub fn l2_mu(&self) -> f64 {
        self.sup_values
            .iter()
            .zip(&self.weight)
            .map(|(v, w)| w * v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "weight", "sup_value", "argmax_t"])?;
        for i in 0..self.x.len() {
            w.write_record(&[
                self.x[i].to_string(),
                self.weight[i].to_string(),
                self.sup_values[i].to_string(),
                self.argmax_t[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// FFT sampling of one time slice on a uniform spatial grid.
struct SliceSampler {
    evo: Evolution,
    fft: Arc<dyn Fft<f64>>,
    n_fft: usize,
    h: f64,
    half_band: f64,
}

impl SliceSampler {
    fn new(evo: Evolution, oversample: usize) -> Result<Self> {
        if oversample < 2 {
            return Err(LabError::validation("sampled evaluation needs oversample >= 2"));
        }
        let n_fft = smooth_length(evo.len() * oversample);
        let fft = FftPlanner::new().plan_fft_inverse(n_fft);
        let h = 2.0 * PI / (n_fft as f64 * evo.spacing());
        let half_band = 0.5 * (evo.len() - 1) as f64 * evo.spacing();
        Ok(SliceSampler {
            evo,
            fft,
            n_fft,
            h,
            half_band,
        })
    }

    /// `|S_t f(y)|` for every `y` in `ys`.
    fn moduli(&self, t: f64, ys: &[f64]) -> Vec<f64> {
        if ys.is_empty() {
            return vec![];
        }
        let (lo_y, hi_y) = ys
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| (a.min(y), b.max(y)));
        let pad = LAGRANGE_TAPS as f64;
        let y0 = lo_y - pad * self.h;
        let count = (((hi_y - y0) / self.h).ceil() as usize + LAGRANGE_TAPS + 1).min(self.n_fft);
        let mut buf = self.evo.shifted_coefficients(t, y0);
        buf.resize(self.n_fft, C64::new(0.0, 0.0));
        self.fft.process(&mut buf);
        // recentre the band so the interpolated function is slowly varying
        let samples: Vec<C64> = (0..count)
            .map(|k| buf[k] * C64::cis(-(y0 + k as f64 * self.h) * self.half_band))
            .collect();
        ys.iter()
            .map(|&y| lagrange(&samples, (y - y0) / self.h).norm())
            .collect()
    }
}

/// Smallest `2^a 3^b 5^c >= n`.
fn smooth_length(n: usize) -> usize {
    let mut best = n.next_power_of_two();
    let mut p5 = 1;
    while p5 < best {
        let mut p3 = p5;
        while p3 < best {
            let mut p2 = p3;
            while p2 < n {
                p2 *= 2;
            }
            best = best.min(p2);
            p3 *= 3;
        }
        p5 *= 5;
    }
    best
}

/// Interpolate uniformly spaced samples at fractional index `s`.
fn lagrange(samples: &[C64], s: f64) -> C64 {
    let half = LAGRANGE_TAPS / 2;
    let k0 = (s.floor() as isize - half as isize + 1).clamp(0, (samples.len() - LAGRANGE_TAPS) as isize)
        as usize;
    let p = s - k0 as f64;
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..LAGRANGE_TAPS {
        let mut w = 1.0;
        for j in 0..LAGRANGE_TAPS {
            if j != k {
                w *= (p - j as f64) / (k as f64 - j as f64);
            }
        }
        acc += samples[k0 + k] * w;
    }
    acc
}

fn golden_max(a: f64, b: f64, f: impl Fn(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (a, b);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..GOLDEN_ITERATIONS {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

/// Direct-summation maximal function; see [`maximal_function_with`].
pub fn maximal_function(
    sig: &FrequencySignal,
    c: &CurveFamily,
    sym: &DispersionSymbol,
    tg: &TimeGrid,
    mu: &FrostmanMeasure,
) -> Result<MaximalProfile> {
    maximal_function_with(sig, c, sym, tg, mu, FieldMethod::Direct)
}

/// Per atom `x_i`, the sup over time nodes of `|S_t f(γ(x_i,t))|`, then a
/// golden-section polish on the bracket around the discrete argmax. The
/// polished value never replaces a larger grid value.
pub fn maximal_function_with(
    sig: &FrequencySignal,
    c: &CurveFamily,
    sym: &DispersionSymbol,
    tg: &TimeGrid,
    mu: &FrostmanMeasure,
    method: FieldMethod,
) -> Result<MaximalProfile> {
    tg.validate()?;
    if sig.aliasing() {
        return Err(LabError::validation(
            "signal is flagged as aliased; widen its frequency grid",
        ));
    }
    let xs = mu.positions();
    let nodes = tg.nodes();
    let t_abs = nodes.iter().fold(0.0f64, |a, t| a.max(t.abs()));
    let y_max = nodes
        .iter()
        .flat_map(|&t| xs.iter().map(move |&x| (x, t)))
        .fold(0.0f64, |a, (x, t)| a.max(c.position(x, t).abs()));
    check_resolution(sig.grid(), sym, y_max, t_abs)?;

    let evo = Evolution::new(sig, sym);
    let sampler = match method {
        FieldMethod::Direct => None,
        FieldMethod::Sampled { oversample } => Some(SliceSampler::new(evo.clone(), oversample)?),
    };
    let row = |t: f64| -> Vec<f64> {
        let ys: Vec<f64> = xs.iter().map(|&x| c.position(x, t)).collect();
        match &sampler {
            None => {
                let slice = evo.slice(t);
                ys.iter().map(|&y| slice.at(y).norm()).collect()
            }
            Some(s) => s.moduli(t, &ys),
        }
    };

    let n = xs.len();
    let mut sup = vec![f64::NEG_INFINITY; n];
    let mut arg = vec![0usize; n];
    for (ci, chunk) in nodes.chunks(TIME_CHUNK).enumerate() {
        let rows: Vec<Vec<f64>> = chunk.par_iter().map(|&t| row(t)).collect();
        for (r, vals) in rows.iter().enumerate() {
            for i in 0..n {
                if vals[i] > sup[i] {
                    sup[i] = vals[i];
                    arg[i] = ci * TIME_CHUNK + r;
                }
            }
        }
    }

    let mut argmax_t: Vec<f64> = arg.iter().map(|&k| nodes[k]).collect();
    if tg.polish && nodes.len() >= 2 {
        let polished: Vec<(f64, f64)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let k = arg[i];
                let a = nodes[k.saturating_sub(1)];
                let b = nodes[(k + 1).min(nodes.len() - 1)];
                let x = xs[i];
                golden_max(a, b, |t| {
                    let y = c.position(x, t);
                    if y.abs() > y_max {
                        check_resolution(sig.grid(), sym, y.abs(), t_abs)?;
                    }
                    Ok(evo.eval(t, y).norm())
                })
            })
            .collect::<Result<_>>()?;
        for (i, (t, v)) in polished.into_iter().enumerate() {
            if v > sup[i] {
                sup[i] = v;
                argmax_t[i] = t;
            }
        }
    }

    Ok(MaximalProfile {
        measure: mu.label().to_string(),
        x: xs.to_vec(),
        weight: mu.weights().to_vec(),
        sup_values: sup,
        argmax_t,
    })
}

/// A maximal profile certified by time-step halving.
#[derive(Debug, Clone)]
pub struct ConvergedMaximal {
    pub profile: MaximalProfile,
    pub norm: f64,
    pub grid: TimeGrid,
    /// L²(dμ) norm at each level tried.
    pub history: Vec<f64>,
    pub converged: bool,
}

/// Halve the time step until the L²(dμ) norm changes by less than
/// [`CONVERGENCE_TOL`] relative, or `max_extra_levels` halvings were spent.
pub fn maximal_norm_converged(
    sig: &FrequencySignal,
    c: &CurveFamily,
    sym: &DispersionSymbol,
    tg: &TimeGrid,
    mu: &FrostmanMeasure,
    method: FieldMethod,
    max_extra_levels: u32,
) -> Result<ConvergedMaximal> {
    let mut grid = *tg;
    let mut profile = maximal_function_with(sig, c, sym, &grid, mu, method)?;
    let mut history = vec![profile.l2_mu()];
    for _ in 0..max_extra_levels {
        let next_grid = grid.refined();
        let next = maximal_function_with(sig, c, sym, &next_grid, mu, method)?;
        let prev = *history.last().unwrap();
        let norm = next.l2_mu();
        history.push(norm);
        grid = next_grid;
        profile = next;
        if (norm - prev).abs() <= CONVERGENCE_TOL * norm.abs().max(f64::MIN_POSITIVE) {
            let norm = profile.l2_mu();
            return Ok(ConvergedMaximal {
                profile,
                norm,
                grid,
                history,
                converged: true,
            });
        }
    }
    let norm = profile.l2_mu();
    Ok(ConvergedMaximal {
        profile,
        norm,
        grid,
        history,
        converged: max_extra_levels == 0,
    })
}

/// `‖sup_t |S_t f(γ(·,t))|‖_{L²(dμ)} / ‖f‖_{H^s}`.
pub fn maximal_ratio(
    sig: &FrequencySignal,
    c: &CurveFamily,
    sym: &DispersionSymbol,
    tg: &TimeGrid,
    mu: &FrostmanMeasure,
    s: SobolevParams,
) -> Result<f64> {
    maximal_ratio_with(sig, c, sym, tg, mu, s, FieldMethod::Direct)
}

pub fn maximal_ratio_with(
    sig: &FrequencySignal,
    c: &CurveFamily,
    sym: &DispersionSymbol,
    tg: &TimeGrid,
    mu: &FrostmanMeasure,
    s: SobolevParams,
    method: FieldMethod,
) -> Result<f64> {
    if sig.is_zero() {
        return Err(LabError::validation(
            "maximal ratio is undefined for a zero signal",
        ));
    }
    let num = maximal_function_with(sig, c, sym, tg, mu, method)?.l2_mu();
    let den = sobolev_norm(sig, s);
    let r = num / den;
    if !r.is_finite() {
        return Err(LabError::validation("maximal ratio is not finite"));
    }
    Ok(r)
}

/// Least-squares line through `(log λ, log value)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub lambdas: Vec<f64>,
    pub values: Vec<f64>,
    pub log_values: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
}

impl ScalingFit {
    /// Rows `lambda,value,log_lambda,log_value`, then a `slope,intercept,max_residual` footer.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
        w.write_record(["lambda", "value", "log_lambda", "log_value"])?;
        for i in 0..self.lambdas.len() {
            w.write_record(&[
                self.lambdas[i].to_string(),
                self.values[i].to_string(),
                self.lambdas[i].ln().to_string(),
                self.log_values[i].to_string(),
            ])?;
        }
        w.write_record(["slope", "intercept", "max_residual"])?;
        w.write_record(&[
            self.slope.to_string(),
            self.intercept.to_string(),
            self.max_residual.to_string(),
        ])?;
        w.flush()?;
        Ok(())
    }
}

pub fn scaling_regression(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 4 {
        return Err(LabError::validation("scaling regression needs >= 4 points"));
    }
    if points.windows(2).any(|p| !(p[1].0 > p[0].0)) || points[0].0 <= 0.0 {
        return Err(LabError::validation("lambdas must be positive and strictly increasing"));
    }
    if points.iter().any(|&(_, v)| !(v > 0.0 && v.is_finite())) {
        return Err(LabError::validation("scaling values must be positive and finite"));
    }
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).abs())
        .fold(0.0, f64::max);
    Ok(ScalingFit {
        lambdas: points.iter().map(|p| p.0).collect(),
        values: points.iter().map(|p| p.1).collect(),
        log_values: ly,
        slope,
        intercept,
        max_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HlsResult {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[inline]
fn riesz(d: f64, rho: f64) -> f64 {
    (-rho * d.ln()).exp()
}

/// `Σ_{i≠i'} g_i h_{i'} |x_i − x_{i'}|^{−ρ} w_i w_{i'}` against
/// `‖g‖_{L²(dμ)} ‖h‖_{L²(dμ)}`, with `g, h` the time-integrated marginals.
pub fn hls_check(g: &[f64], h: &[f64], rho: f64, mu: &FrostmanMeasure) -> Result<HlsResult> {
    if !(rho > 0.0 && rho < mu.alpha()) {
        return Err(LabError::validation(format!(
            "hls check needs 0 < rho < alpha = {}, got rho = {rho}",
            mu.alpha()
        )));
    }
    if g.len() != mu.len() || h.len() != mu.len() {
        return Err(LabError::validation("g and h must be aligned with the atoms"));
    }
    if g.iter().chain(h).any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(LabError::validation("g and h must be nonnegative and finite"));
    }
    let xs = mu.positions();
    let ws = mu.weights();
    let rows: Vec<f64> = (0..xs.len())
        .into_par_iter()
        .map(|i| {
            if g[i] == 0.0 {
                return 0.0;
            }
            let mut acc = 0.0;
            for j in 0..xs.len() {
                if j != i && h[j] != 0.0 {
                    acc += h[j] * ws[j] * riesz((xs[i] - xs[j]).abs(), rho);
                }
            }
            g[i] * ws[i] * acc
        })
        .collect();
    let lhs: f64 = rows.iter().sum();
    let rhs = integrate_l2_mu(g, mu)? * integrate_l2_mu(h, mu)?;
    let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
    Ok(HlsResult { lhs, rhs, ratio })
}

/// Sup of the [`hls_check`] ratio over all nonnegative `g, h`: the Perron
/// eigenvalue of `A_{ii'} = √(w_i w_{i'}) |x_i − x_{i'}|^{−ρ}`, `i ≠ i'`, by
/// power iteration. No `ρ < α` precondition, so divergence can be observed.
pub fn hls_sup_ratio(rho: f64, mu: &FrostmanMeasure) -> Result<f64> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(LabError::validation("rho must be positive"));
    }
    let xs = mu.positions();
    let sw: Vec<f64> = mu.weights().iter().map(|w| w.sqrt()).collect();
    let n = xs.len();
    if n < 2 {
        return Err(LabError::validation("need at least two atoms"));
    }
    let apply = |v: &[f64]| -> Vec<f64> {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut acc = 0.0;
                for j in 0..n {
                    if j != i {
                        acc += sw[j] * v[j] * riesz((xs[i] - xs[j]).abs(), rho);
                    }
                }
                sw[i] * acc
            })
            .collect()
    };
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let mut v: Vec<f64> = sw.clone();
    let nv = norm(&v);
    v.iter_mut().for_each(|a| *a /= nv);
    let mut est = 0.0;
    for _ in 0..2000 {
        let u = apply(&v);
        let rq: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
        let nu = norm(&u);
        v = u.into_iter().map(|a| a / nu).collect();
        if (rq - est).abs() <= 1e-10 * rq {
            return Ok(rq);
        }
        est = rq;
    }
    Ok(est)
}

/// Frequency grid on `[−2λ, 2λ]` fine enough for the resolution rule at
/// `|y| ≤ y_abs_max`, `|t| ≤ t_abs_max`.
pub fn band_grid(
    lambda: f64,
    sym: &DispersionSymbol,
    y_abs_max: f64,
    t_abs_max: f64,
) -> Result<FrequencyGrid> {
    if !(lambda >= 1.0) {
        return Err(LabError::validation("band frequency lambda must be >= 1"));
    }
    let speed = sym.d1(2.0 * lambda).abs().max(sym.d1(-2.0 * lambda).abs());
    let reach = y_abs_max + t_abs_max * speed;
    let n = ((4.0 * lambda * reach / MAX_PHASE_STEP).ceil() as usize + 1).max(64);
    FrequencyGrid::symmetric(2.0 * lambda, n)
}

/// Time after which every frequency in `λ/2 ≤ |ξ| ≤ 2λ` has travelled twice
/// `reach`; beyond it the band field at distance `≤ reach` from the data
/// support is a non-stationary oscillatory integral.
pub fn band_time_cutoff(lambda: f64, sym: &DispersionSymbol, reach: f64) -> f64 {
    let slowest = (0..=1000)
        .map(|k| lambda * (0.5 + 1.5 * k as f64 / 1000.0))
        .map(|xi| sym.d1(xi).abs().min(sym.d1(-xi).abs()))
        .fold(f64::INFINITY, f64::min);
    (2.0 * reach / slowest).min(1.0)
}

/// `f̂(ξ) = ψ(ξ/λ) Σ_k c_k e^{−i x_k ξ}` with `x_k` uniform in `I` and random
/// amplitudes and phases: wave packets at frequency `~λ` centred in `I`.
pub fn random_band_signal(
    lambda: f64,
    grid: FrequencyGrid,
    sources: usize,
    seed: u64,
) -> Result<FrequencySignal> {
    if sources == 0 {
        return Err(LabError::validation("band data needs at least one source"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let packets: Vec<(f64, C64)> = (0..sources)
        .map(|_| {
            let x: f64 = rng.gen_range(-1.0..=1.0);
            let a: f64 = rng.gen_range(0.5..1.5);
            let p: f64 = rng.gen_range(0.0..2.0 * PI);
            (x, C64::from_polar(a, p))
        })
        .collect();
    let psi = BumpProfile::Annular;
    FrequencySignal::from_fn(grid, |xi| {
        let b = psi.eval(xi / lambda);
        if b == 0.0 {
            return C64::new(0.0, 0.0);
        }
        packets
            .iter()
            .map(|(x, c)| c * C64::cis(-x * xi))
            .sum::<C64>()
            * b
    })
}

/// Random band-limited data at frequency `~λ` measured against the power
/// curve and power measure, sampled in time up to [`band_time_cutoff`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BandExperiment {
    pub m: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub s: f64,
    pub sources: usize,
    /// Spatial reach defining the time cutoff.
    pub reach: f64,
    /// Time nodes per `(2λ)⁻²` of elapsed time.
    pub time_factor: f64,
    pub oversample: usize,
    /// Measure atoms per unit of λ, at least 256 in total.
    pub atoms_per_lambda: f64,
    pub seed: u64,
}

impl Default for BandExperiment {
    fn default() -> Self {
        BandExperiment {
            m: 2.0,
            kappa: 0.5,
            alpha: 0.5,
            s: 0.0,
            sources: 8,
            reach: 4.0,
            time_factor: 1.0,
            oversample: 4,
            atoms_per_lambda: 4.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandPoint {
    pub lambda: f64,
    pub maximal_norm: f64,
    pub sobolev_norm: f64,
    pub ratio: f64,
    pub time_cutoff: f64,
    pub time_nodes: usize,
    pub frequency_nodes: usize,
    pub atoms: usize,
}

/// One λ of the band-limited maximal estimate.
pub fn band_ratio(exp: &BandExperiment, lambda: f64) -> Result<BandPoint> {
    let sym = DispersionSymbol::power(exp.m)?;
    let curve = CurveFamily::power(exp.kappa)?;
    if !(exp.time_factor > 0.0 && exp.reach > 0.0 && exp.atoms_per_lambda > 0.0) {
        return Err(LabError::validation("band experiment factors must be positive"));
    }
    let t_cut = band_time_cutoff(lambda, &sym, exp.reach);
    let y_max = 1.0 + t_cut.powf(exp.kappa);
    let grid = band_grid(lambda, &sym, y_max, t_cut)?;
    let sig = random_band_signal(lambda, grid, exp.sources, exp.seed)?;
    let n_t = (t_cut * (2.0 * lambda).powi(2) * exp.time_factor).ceil() as usize + 2;
    let tg = TimeGrid::new(0.0, t_cut, n_t)?;
    let atoms = ((exp.atoms_per_lambda * lambda).ceil() as usize).max(256);
    let mu = build_power_measure(exp.alpha, atoms)?;
    let method = FieldMethod::Sampled {
        oversample: exp.oversample,
    };
    let maximal_norm = maximal_function_with(&sig, &curve, &sym, &tg, &mu, method)?.l2_mu();
    let sobolev = sobolev_norm(&sig, SobolevParams::new(exp.s)?);
    Ok(BandPoint {
        lambda,
        maximal_norm,
        sobolev_norm: sobolev,
        ratio: maximal_norm / sobolev,
        time_cutoff: t_cut,
        time_nodes: n_t,
        frequency_nodes: grid.n,
        atoms,
    })
}

/// [`band_ratio`] over a sweep, with the fitted growth of the ratio.
pub fn band_sweep(exp: &BandExperiment, lambdas: &[f64]) -> Result<(Vec<BandPoint>, ScalingFit)> {
    let pts = lambdas
        .iter()
        .map(|&l| band_ratio(exp, l))
        .collect::<Result<Vec<_>>>()?;
    let fit = scaling_regression(&pts.iter().map(|p| (p.lambda, p.ratio)).collect::<Vec<_>>())?;
    Ok((pts, fit))
}
