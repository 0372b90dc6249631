//! The two counterexample families that make the Sobolev threshold sharp, the
//! graph `t(x)` they are evaluated along, and closed-form threshold algebra.
//!
//! `f̂₁(ξ) = ψ₀(λ^{−1/m}ξ)` concentrates near the origin in space for times
//! `t < λ⁻¹/100`; `f̂₂(ξ) = λ⁻¹ψ₀(λ⁻¹ξ + λ)` is a wave packet at frequency
//! `−λ²` that stays coherent along `t = t(x)`. The pass constants `c₀` are
//! engineering choices: half of the `cos(1/2)`-weighted mass of `ψ₀`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curves::{CurveFamily, CurveKind};
use crate::dispersion::{check_resolution, DispersionSymbol, Evolution};
use crate::error::{LabError, Result};
use crate::kernel::{check_ranges, s_star};
use crate::maximal::{maximal_function, scaling_regression, ScalingFit, TimeGrid};
use crate::measures::FrostmanMeasure;
use crate::spectral::{sobolev_norm, BumpProfile, FrequencyGrid, FrequencySignal, SobolevParams};

/// Frequency nodes for either family; both bumps are resolved many times over.
pub const DEFAULT_NODES: usize = 1024;
pub const MAX_NODES: usize = 1 << 22;
/// The shrinking `x`-windows are always split into at least this many cells.
pub const MIN_WINDOW_ATOMS: usize = 64;
/// Samples of `supp ψ₀` used by the phase checks.
const PHASE_SAMPLES: usize = 257;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    F1,
    F2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleSpec {
    pub family: Family,
    pub lambda: f64,
    pub m: f64,
    pub kappa: f64,
    #[serde(default)]
    pub psi0: BumpProfile,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
}

fn default_nodes() -> usize {
    DEFAULT_NODES
}

impl CounterexampleSpec {
    pub fn new(family: Family, lambda: f64, m: f64, kappa: f64) -> Result<Self> {
        let spec = CounterexampleSpec {
            family,
            lambda,
            m,
            kappa,
            psi0: BumpProfile::default(),
            nodes: DEFAULT_NODES,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 2.0 && self.lambda.is_finite()) {
            return Err(LabError::validation("counterexample lambda must be >= 2"));
        }
        check_ranges(self.m, 1.0, self.kappa)?;
        if !matches!(self.psi0, BumpProfile::Origin { .. }) {
            return Err(LabError::validation("psi0 must be an origin bump"));
        }
        if self.nodes < 16 {
            return Err(LabError::validation("counterexample grids need >= 16 nodes"));
        }
        if self.nodes > MAX_NODES {
            return Err(LabError::resolution(format!(
                "{} frequency nodes exceed the budget of {MAX_NODES}",
                self.nodes
            )));
        }
        Ok(())
    }

    pub fn delta(&self) -> f64 {
        match self.psi0 {
            BumpProfile::Origin { delta } => delta,
            BumpProfile::Annular => f64::NAN,
        }
    }

    pub fn symbol(&self) -> Result<DispersionSymbol> {
        DispersionSymbol::power(self.m)
    }

    /// The power curve `x − sign(t)|t|^κ` the construction is tuned to.
    pub fn curve(&self) -> Result<CurveFamily> {
        CurveFamily::power(self.kappa)
    }

    pub fn make(&self) -> Result<FrequencySignal> {
        match self.family {
            Family::F1 => make_f1(self),
            Family::F2 => make_f2(self),
        }
    }

    fn expect(&self, family: Family) -> Result<()> {
        self.validate()?;
        if self.family != family {
            return Err(LabError::validation(format!(
                "spec is for {:?}, not {family:?}",
                self.family
            )));
        }
        Ok(())
    }
}

/// `ψ₀(λ^{−1/m}ξ)` on `[−2δλ^{1/m}, 2δλ^{1/m}]`.
pub fn make_f1(spec: &CounterexampleSpec) -> Result<FrequencySignal> {
    spec.expect(Family::F1)?;
    let scale = spec.lambda.powf(1.0 / spec.m);
    let grid = FrequencyGrid::symmetric(2.0 * spec.delta() * scale, spec.nodes)?;
    let psi0 = spec.psi0;
    FrequencySignal::from_fn(grid, move |xi| C64::new(psi0.eval(xi / scale), 0.0))
}

/// `λ⁻¹ψ₀(λ⁻¹ξ + λ)` on `[−λ² − 2δλ, −λ² + 2δλ]`.
pub fn make_f2(spec: &CounterexampleSpec) -> Result<FrequencySignal> {
    spec.expect(Family::F2)?;
    let l = spec.lambda;
    let d = spec.delta();
    let grid = FrequencyGrid::new(-l * l - 2.0 * d * l, -l * l + 2.0 * d * l, spec.nodes)?;
    let psi0 = spec.psi0;
    FrequencySignal::from_fn(grid, move |xi| C64::new(psi0.eval(xi / l + l) / l, 0.0))
}

/// `τ(t) = t^κ + mλ^{2m−2}t`.
fn tau(t: f64, kappa: f64, m: f64, lambda: f64) -> f64 {
    t.powf(kappa) + m * lambda.powf(2.0 * m - 2.0) * t
}

/// The root of `τ(t) = x` for `x ∈ (0, 1/100)`, by bisection.
pub fn solve_t_of_x(x: f64, kappa: f64, m: f64, lambda: f64) -> Result<f64> {
    check_ranges(m, 1.0, kappa)?;
    if !(x > 0.0 && x < 0.01) {
        return Err(LabError::validation(format!("x = {x} outside (0, 1/100)")));
    }
    if !(lambda >= 1.0 && lambda.is_finite()) {
        return Err(LabError::validation("lambda must be >= 1"));
    }
    let slope = m * lambda.powf(2.0 * m - 2.0);
    if kappa == 1.0 {
        return Ok(x / (1.0 + slope));
    }
    let tol = 1e-12 * x;
    let (mut lo, mut hi) = (0.0f64, 1.0f64.min(x.powf(1.0 / kappa) + x / slope));
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let r = tau(mid, kappa, m, lambda) - x;
        if r.abs() <= tol * 1e-3 {
            return Ok(mid);
        }
        if r > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    if (tau(t, kappa, m, lambda) - x).abs() > tol {
        return Err(LabError::resolution(format!("t(x) bisection stalled at x = {x}")));
    }
    Ok(t)
}

/// `max{1/4, (1−α)/2, (1−mακ)/2}`.
pub fn threshold(m: f64, kappa: f64, alpha: f64) -> Result<f64> {
    check_ranges(m, alpha, kappa)?;
    Ok(0.25f64.max((1.0 - alpha) / 2.0).max((1.0 - m * alpha * kappa) / 2.0))
}

/// Capacitary-dimension bound `max{1−2s, (1−2s)/(mκ)}`, raw and clamped to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimBound {
    pub raw: f64,
    pub clamped: f64,
}

pub fn dim_bound(s: f64, m: f64, kappa: f64) -> Result<DimBound> {
    check_ranges(m, 1.0, kappa)?;
    if !(s > 0.25 && s.is_finite()) {
        return Err(LabError::validation(format!(
            "dimension bound needs s > 1/4, got {s}"
        )));
    }
    let raw = (1.0 - 2.0 * s).max((1.0 - 2.0 * s) / (m * kappa));
    Ok(DimBound {
        raw,
        clamped: raw.clamp(0.0, 1.0),
    })
}

/// `1/m − min{α/m, ακ}/2`, the growth exponent of the `f₁` maximal norm.
pub fn predicted_f1_exponent(m: f64, kappa: f64, alpha: f64) -> Result<f64> {
    check_ranges(m, alpha, kappa)?;
    Ok(1.0 / m - (alpha / m).min(alpha * kappa) / 2.0)
}

/// `threshold − (1/2 − s_*)`, zero up to rounding.
pub fn threshold_identity_gap(m: f64, kappa: f64, alpha: f64) -> Result<f64> {
    Ok(threshold(m, kappa, alpha)? - (0.5 - s_star(m, alpha, kappa)?))
}

/// `c₀ = ½·cos(½)·∫ψ₀ / 2π`: half the guaranteed modulus once the phase stays
/// within `[−1/2, 1/2]`.
pub fn lower_bound_constant(psi0: &BumpProfile) -> f64 {
    0.5 * 0.5f64.cos() * psi0.integral() / (2.0 * PI)
}

fn require_power_curve(spec: &CounterexampleSpec, curve: &CurveFamily) -> Result<()> {
    if !matches!(curve.kind, CurveKind::Power) || curve.kappa != spec.kappa {
        return Err(LabError::validation(format!(
            "the construction needs the power curve with kappa = {}",
            spec.kappa
        )));
    }
    Ok(())
}

fn eta_samples(delta: f64) -> impl Iterator<Item = f64> {
    (0..PHASE_SAMPLES).map(move |k| -delta + 2.0 * delta * k as f64 / (PHASE_SAMPLES - 1) as f64)
}

/// `x`-window `(0, (λ^{−1/m} + λ^{−κ})/100)` and `t`-window `(0, λ⁻¹/100)`.
pub fn f1_windows(spec: &CounterexampleSpec) -> (f64, f64) {
    let l = spec.lambda;
    ((l.powf(-1.0 / spec.m) + l.powf(-spec.kappa)) / 100.0, 1.0 / (100.0 * l))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F1LowerBound {
    /// Minimum of `λ^{−1/m}|S_t f₁(γ(x,t))|` over the rectangle.
    pub min_normalized: f64,
    pub c0: f64,
    /// Largest `|φ₁(η,x,t)|` over the sampled rectangle and `η ∈ supp ψ₀`.
    pub max_phase: f64,
    pub x_window: f64,
    pub t_window: f64,
    pub points: usize,
    pub pass: bool,
}

/// Samples the rectangle on a 32×32 midpoint grid plus every atom of `mu`
/// that falls in the `x`-window.
pub fn verify_lower_bound_f1(
    spec: &CounterexampleSpec,
    curve: &CurveFamily,
    mu: &FrostmanMeasure,
) -> Result<F1LowerBound> {
    spec.expect(Family::F1)?;
    require_power_curve(spec, curve)?;
    let sig = make_f1(spec)?;
    let sym = spec.symbol()?;
    let (xw, tw) = f1_windows(spec);
    let mut xs: Vec<f64> = (0..32).map(|k| (k as f64 + 0.5) * xw / 32.0).collect();
    let atoms = mu.positions();
    xs.extend(atoms[mu.indices_in(0.0, xw)].iter().filter(|&&x| x > 0.0 && x < xw));
    let ts: Vec<f64> = (0..32).map(|k| (k as f64 + 0.5) * tw / 32.0).collect();
    check_resolution(sig.grid(), &sym, xw + 1.0, tw)?;
    let evo = Evolution::new(&sig, &sym);
    let l = spec.lambda;
    let norm = l.powf(-1.0 / spec.m);
    let scale = l.powf(1.0 / spec.m);
    let delta = spec.delta();
    let (min_normalized, max_phase) = ts
        .par_iter()
        .map(|&t| {
            let slice = evo.slice(t);
            let mut lo = f64::INFINITY;
            let mut ph = 0.0f64;
            for &x in &xs {
                let y = curve.position(x, t);
                lo = lo.min(norm * slice.at(y).norm());
                for eta in eta_samples(delta) {
                    ph = ph.max((scale * y * eta + l * t * eta.abs().powf(spec.m)).abs());
                }
            }
            (lo, ph)
        })
        .reduce(|| (f64::INFINITY, 0.0), |a, b| (a.0.min(b.0), a.1.max(b.1)));
    let c0 = lower_bound_constant(&spec.psi0);
    Ok(F1LowerBound {
        min_normalized,
        c0,
        max_phase,
        x_window: xw,
        t_window: tw,
        points: xs.len() * ts.len(),
        pass: min_normalized >= c0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSample {
    pub x: f64,
    pub t: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F2LowerBound {
    /// Minimum over atoms of `|S_{t(x)} f₂(γ(x, t(x)))|`.
    pub min_along_graph: f64,
    /// `L²(dμ)` norm over `(0, 1/100)` along the same graph.
    pub graph_norm: f64,
    pub c0: f64,
    /// Largest `|φ₂(η,x,t(x)) − λ^{2m}t(x)|`.
    pub max_phase_remainder: f64,
    pub max_t: f64,
    /// `λ^{2−2m}/(100m)`, which every `t(x)` stays below.
    pub t_cap: f64,
    pub samples: Vec<GraphSample>,
    pub pass: bool,
}

/// Evaluate `f₂` along `t = t(x)` at the atoms of `mu` in `(0, 1/100)`.
pub fn verify_lower_bound_f2(
    spec: &CounterexampleSpec,
    curve: &CurveFamily,
    mu: &FrostmanMeasure,
) -> Result<F2LowerBound> {
    spec.expect(Family::F2)?;
    require_power_curve(spec, curve)?;
    let range = mu.indices_in(0.0, 0.01);
    let atoms: Vec<(f64, f64)> = mu.positions()[range.clone()]
        .iter()
        .zip(&mu.weights()[range])
        .filter(|(&x, _)| x > 0.0 && x < 0.01)
        .map(|(&x, &w)| (x, w))
        .collect();
    if atoms.is_empty() {
        return Err(LabError::validation("measure has no atoms in (0, 1/100)"));
    }
    let sig = make_f2(spec)?;
    let sym = spec.symbol()?;
    let (l, m) = (spec.lambda, spec.m);
    let ts: Vec<f64> = atoms
        .iter()
        .map(|&(x, _)| solve_t_of_x(x, spec.kappa, m, l))
        .collect::<Result<_>>()?;
    let max_t = ts.iter().cloned().fold(0.0, f64::max);
    check_resolution(sig.grid(), &sym, 0.01 + max_t.powf(spec.kappa), max_t)?;
    let evo = Evolution::new(&sig, &sym);
    let delta = spec.delta();
    let l2m = l.powf(2.0 * m);
    let rows: Vec<(GraphSample, f64)> = atoms
        .par_iter()
        .zip(&ts)
        .map(|(&(x, _), &t)| {
            let y = curve.position(x, t);
            let value = evo.eval(t, y).norm();
            // λ^m t|λ+η|^m − λ^{2m}t = λ^{2m}t((1+η/λ)^m − 1), kept free of cancellation
            let rem = eta_samples(delta)
                .map(|eta| (-y * l * eta + l2m * t * (m * (eta / l).ln_1p()).exp_m1()).abs())
                .fold(0.0, f64::max);
            (GraphSample { x, t, value }, rem)
        })
        .collect();
    let min_along_graph = rows.iter().map(|r| r.0.value).fold(f64::INFINITY, f64::min);
    let graph_norm = rows
        .iter()
        .zip(&atoms)
        .map(|(r, &(_, w))| w * r.0.value * r.0.value)
        .sum::<f64>()
        .sqrt();
    let max_phase_remainder = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let c0 = lower_bound_constant(&spec.psi0);
    Ok(F2LowerBound {
        min_along_graph,
        graph_norm,
        c0,
        max_phase_remainder,
        max_t,
        t_cap: l.powf(2.0 - 2.0 * m) / (100.0 * m),
        samples: rows.into_iter().map(|r| r.0).collect(),
        pass: min_along_graph >= c0,
    })
}

/// The power measure `|x|^{α−1}dx` restricted to `(0, b)`, split into `cells` cells.
pub fn window_measure(alpha: f64, b: f64, cells: usize) -> Result<FrostmanMeasure> {
    if cells < MIN_WINDOW_ATOMS {
        return Err(LabError::validation(format!(
            "window measures need >= {MIN_WINDOW_ATOMS} cells"
        )));
    }
    let edges: Vec<f64> = (0..=cells).map(|k| b * k as f64 / cells as f64).collect();
    FrostmanMeasure::power_on_edges(alpha, &edges, format!("power(alpha={alpha}) on (0,{b})x{cells}"))
}

/// `‖sup_{0<t<λ⁻¹/100} |S_t f₁(γ(·,t))|‖` in `L²(dμ)` over the `x`-window.
pub fn f1_window_norm(
    spec: &CounterexampleSpec,
    alpha: f64,
    cells: usize,
    time_nodes: usize,
) -> Result<f64> {
    spec.expect(Family::F1)?;
    let (xw, tw) = f1_windows(spec);
    let mu = window_measure(alpha, xw, cells)?;
    let tg = TimeGrid::new(0.0, tw, time_nodes)?;
    let sig = make_f1(spec)?;
    Ok(maximal_function(&sig, &spec.curve()?, &spec.symbol()?, &tg, &mu)?.l2_mu())
}

/// `‖sup_t |S_t f₁(γ(·,t))|‖_{L²(I,dμ)}` with the default counterexample time
/// grid and the window refined inside a global power measure. Bounded below
/// by [`f1_window_norm`].
pub fn f1_full_norm(spec: &CounterexampleSpec, alpha: f64, atoms: usize) -> Result<f64> {
    spec.expect(Family::F1)?;
    let (xw, _) = f1_windows(spec);
    let mu = crate::measures::build_power_measure_refined(alpha, atoms, (0.0, xw), MIN_WINDOW_ATOMS)?;
    let tg = TimeGrid::counterexample_default(spec.lambda)?;
    let sig = make_f1(spec)?;
    Ok(maximal_function(&sig, &spec.curve()?, &spec.symbol()?, &tg, &mu)?.l2_mu())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F1Sweep {
    pub m: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub s: f64,
    pub lambdas: Vec<f64>,
    pub norm_fit: ScalingFit,
    pub sobolev_fit: ScalingFit,
    pub ratio_fit: ScalingFit,
    pub predicted_norm_slope: f64,
    pub predicted_sobolev_slope: f64,
}

/// Window norms and `H^s` norms of `f₁` over a λ sweep, with fitted slopes.
pub fn f1_sweep(
    m: f64,
    kappa: f64,
    alpha: f64,
    s: f64,
    lambdas: &[f64],
    cells: usize,
    time_nodes: usize,
) -> Result<F1Sweep> {
    let sp = SobolevParams::new(s)?;
    let rows: Vec<(f64, f64)> = lambdas
        .par_iter()
        .map(|&l| {
            let spec = CounterexampleSpec::new(Family::F1, l, m, kappa)?;
            let norm = f1_window_norm(&spec, alpha, cells, time_nodes)?;
            Ok((norm, sobolev_norm(&make_f1(&spec)?, sp)))
        })
        .collect::<Result<_>>()?;
    let pts = |f: &dyn Fn(&(f64, f64)) -> f64| -> Vec<(f64, f64)> {
        lambdas.iter().zip(&rows).map(|(&l, r)| (l, f(r))).collect()
    };
    Ok(F1Sweep {
        m,
        kappa,
        alpha,
        s,
        lambdas: lambdas.to_vec(),
        norm_fit: scaling_regression(&pts(&|r| r.0))?,
        sobolev_fit: scaling_regression(&pts(&|r| r.1))?,
        ratio_fit: scaling_regression(&pts(&|r| r.0 / r.1))?,
        predicted_norm_slope: predicted_f1_exponent(m, kappa, alpha)?,
        predicted_sobolev_slope: s / m + 1.0 / (2.0 * m),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F2Sweep {
    pub m: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub s: f64,
    pub lambdas: Vec<f64>,
    pub min_along_graph: Vec<f64>,
    /// Largest over smallest `min_along_graph` across the sweep.
    pub min_variation: f64,
    pub graph_norm_fit: ScalingFit,
    pub sobolev_fit: ScalingFit,
    pub ratio_fit: ScalingFit,
    pub predicted_sobolev_slope: f64,
    pub all_pass: bool,
}

/// Graph values and `H^s` norms of `f₂` over a λ sweep.
pub fn f2_sweep(
    m: f64,
    kappa: f64,
    alpha: f64,
    s: f64,
    lambdas: &[f64],
    cells: usize,
) -> Result<F2Sweep> {
    let sp = SobolevParams::new(s)?;
    let mu = window_measure(alpha, 0.01, cells)?;
    let curve = CurveFamily::power(kappa)?;
    let rows: Vec<(F2LowerBound, f64)> = lambdas
        .par_iter()
        .map(|&l| {
            let spec = CounterexampleSpec::new(Family::F2, l, m, kappa)?;
            let lb = verify_lower_bound_f2(&spec, &curve, &mu)?;
            Ok((lb, sobolev_norm(&make_f2(&spec)?, sp)))
        })
        .collect::<Result<_>>()?;
    let mins: Vec<f64> = rows.iter().map(|r| r.0.min_along_graph).collect();
    let hi = mins.iter().cloned().fold(0.0, f64::max);
    let lo = mins.iter().cloned().fold(f64::INFINITY, f64::min);
    let pts = |f: &dyn Fn(&(F2LowerBound, f64)) -> f64| -> Vec<(f64, f64)> {
        lambdas.iter().zip(&rows).map(|(&l, r)| (l, f(r))).collect()
    };
    Ok(F2Sweep {
        m,
        kappa,
        alpha,
        s,
        lambdas: lambdas.to_vec(),
        min_variation: hi / lo,
        graph_norm_fit: scaling_regression(&pts(&|r| r.0.graph_norm))?,
        sobolev_fit: scaling_regression(&pts(&|r| r.1))?,
        ratio_fit: scaling_regression(&pts(&|r| r.0.graph_norm / r.1))?,
        predicted_sobolev_slope: 2.0 * s - 0.5,
        all_pass: rows.iter().all(|r| r.0.pass),
        min_along_graph: mins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::build_power_measure_refined;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn threshold_examples() {
        assert_eq!(threshold(2.0, 1.0, 1.0).unwrap(), 0.25);
        assert!((threshold(2.0, 0.1, 1.0).unwrap() - 0.4).abs() < 1e-15);
        for (m, k) in [(1.5, 0.2), (3.0, 0.9), (2.0, 0.25)] {
            let want = 0.25f64.max((1.0 - m * k) / 2.0);
            assert!((threshold(m, k, 1.0).unwrap() - want).abs() < 1e-15);
        }
        assert!(threshold(1.0, 0.5, 0.5).is_err());
    }

    #[test]
    fn threshold_is_half_minus_s_star() {
        for i in 0..10 {
            for j in 0..10 {
                for k in 0..10 {
                    let m = 1.05 + 0.4 * i as f64;
                    let kappa = 0.05 + 0.095 * j as f64;
                    let alpha = 0.05 + 0.095 * k as f64;
                    assert!(threshold_identity_gap(m, kappa, alpha).unwrap().abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn dim_bound_examples() {
        assert_eq!(dim_bound(0.5, 2.0, 1.0).unwrap().clamped, 0.0);
        assert!((dim_bound(0.3, 2.0, 1.0).unwrap().clamped - 0.4).abs() < 1e-12);
        let b = dim_bound(0.3, 2.0, 0.1).unwrap();
        assert!((b.raw - 2.0).abs() < 1e-12);
        assert_eq!(b.clamped, 1.0);
        assert!(dim_bound(0.25, 2.0, 1.0).is_err());
    }

    #[test]
    fn predicted_exponent_examples() {
        assert!((predicted_f1_exponent(2.0, 1.0, 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((predicted_f1_exponent(2.0, 0.1, 1.0).unwrap() - 0.45).abs() < 1e-15);
        let a = predicted_f1_exponent(2.0, 0.5 - 1e-12, 0.7).unwrap();
        let b = predicted_f1_exponent(2.0, 0.5 + 1e-12, 0.7).unwrap();
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn t_of_x_contract() {
        assert!(solve_t_of_x(0.0, 0.5, 2.0, 8.0).is_err());
        assert!(solve_t_of_x(0.02, 0.5, 2.0, 8.0).is_err());
        let t = solve_t_of_x(0.005, 1.0, 2.0, 8.0).unwrap();
        assert_eq!(t, 0.005 / (1.0 + 2.0 * 64.0));
        assert!(solve_t_of_x(1e-14, 0.5, 2.0, 8.0).unwrap() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for &(kappa, m, l) in &[(0.5, 2.0, 8.0), (0.2, 1.5, 64.0), (0.9, 3.0, 4.0)] {
            let mut xs: Vec<f64> = (0..1000).map(|_| rng.gen_range(1e-9..0.01)).collect();
            xs.sort_by(f64::total_cmp);
            let tol = 1e-12 * f64::powf(l, 2.0 * m - 2.0).max(1.0);
            let mut prev = 0.0;
            for &x in &xs {
                let t = solve_t_of_x(x, kappa, m, l).unwrap();
                assert!((tau(t, kappa, m, l) - x).abs() <= tol);
                assert!(t >= prev);
                prev = t;
                assert!(t < f64::powf(l, 2.0 - 2.0 * m) / (100.0 * m));
            }
        }
    }

    #[test]
    fn supports_are_exact() {
        let s1 = CounterexampleSpec::new(Family::F1, 64.0, 2.0, 0.5).unwrap();
        let f1 = make_f1(&s1).unwrap();
        let r1 = 0.1 * 8.0;
        for (xi, v) in f1.grid().nodes().zip(f1.values()) {
            if xi.abs() >= r1 {
                assert_eq!(v.norm(), 0.0);
            }
        }
        let s2 = CounterexampleSpec::new(Family::F2, 16.0, 1.5, 0.5).unwrap();
        let f2 = make_f2(&s2).unwrap();
        for (xi, v) in f2.grid().nodes().zip(f2.values()) {
            if (xi + 256.0).abs() >= 1.6 {
                assert_eq!(v.norm(), 0.0);
            }
        }
        assert!(!f1.aliasing() && !f2.aliasing());
        assert!(make_f2(&s1).is_err());
    }

    #[test]
    fn l2_norms_match_dilation_identities() {
        let psi0 = BumpProfile::default();
        let l2 = psi0.l2_norm_sq().sqrt();
        let h0 = SobolevParams::new(0.0).unwrap();
        for m in [1.5, 2.0, 3.0] {
            let a = sobolev_norm(&make_f1(&CounterexampleSpec::new(Family::F1, 32.0, m, 1.0).unwrap()).unwrap(), h0);
            let b = sobolev_norm(&make_f1(&CounterexampleSpec::new(Family::F1, 64.0, m, 1.0).unwrap()).unwrap(), h0);
            assert!(((b / a) / 2f64.powf(1.0 / (2.0 * m)) - 1.0).abs() < 0.01);
        }
        for l in [8.0, 32.0, 128.0] {
            let f2 = make_f2(&CounterexampleSpec::new(Family::F2, l, 2.0, 0.5).unwrap()).unwrap();
            let want = l.powf(-0.5) * (2.0 * PI).powf(-0.5) * l2;
            assert!((sobolev_norm(&f2, h0) / want - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn sobolev_slopes_at_large_frequency() {
        // f₁ only reaches |ξ| ≫ 1 once δλ^{1/m} ≫ 1
        let lambdas: Vec<f64> = (40..=48).step_by(2).map(|k| 2f64.powi(k)).collect();
        for s in [0.25, 0.5] {
            let pts: Vec<(f64, f64)> = lambdas
                .iter()
                .map(|&l| {
                    let spec = CounterexampleSpec::new(Family::F1, l, 2.0, 1.0).unwrap();
                    (l, sobolev_norm(&make_f1(&spec).unwrap(), SobolevParams::new(s).unwrap()))
                })
                .collect();
            let fit = scaling_regression(&pts).unwrap();
            assert!((fit.slope - (s / 2.0 + 0.25)).abs() < 0.02, "{s}: {}", fit.slope);
        }
        let lambdas: Vec<f64> = (3..=7).map(|k| 2f64.powi(k)).collect();
        for s in [0.0, 0.25, 0.5] {
            let pts: Vec<(f64, f64)> = lambdas
                .iter()
                .map(|&l| {
                    let spec = CounterexampleSpec::new(Family::F2, l, 2.0, 1.0).unwrap();
                    (l, sobolev_norm(&make_f2(&spec).unwrap(), SobolevParams::new(s).unwrap()))
                })
                .collect();
            let fit = scaling_regression(&pts).unwrap();
            assert!((fit.slope - (2.0 * s - 0.5)).abs() < 0.02, "{s}: {}", fit.slope);
        }
    }

    #[test]
    fn f1_lower_bound_holds_on_window() {
        let mut mins = vec![];
        for k in [4, 5, 6, 7, 8, 9, 10] {
            let l = 2f64.powi(k);
            let spec = CounterexampleSpec::new(Family::F1, l, 2.0, 0.5).unwrap();
            let (xw, _) = f1_windows(&spec);
            let mu = build_power_measure_refined(0.5, 256, (0.0, xw), 64).unwrap();
            let r = verify_lower_bound_f1(&spec, &spec.curve().unwrap(), &mu).unwrap();
            assert!(r.pass, "{r:?}");
            assert!(r.max_phase <= 0.5);
            mins.push(r.min_normalized);
        }
        for w in mins.windows(2) {
            assert!((w[1] / w[0] - 1.0).abs() < 0.05);
        }
        let spec = CounterexampleSpec::new(Family::F1, 16.0, 2.0, 0.5).unwrap();
        let mu = build_power_measure_refined(0.5, 256, (0.0, 0.01), 64).unwrap();
        assert!(verify_lower_bound_f1(&spec, &CurveFamily::power(1.0).unwrap(), &mu).is_err());
    }

    #[test]
    fn f2_lower_bound_along_graph() {
        let mu = window_measure(0.5, 0.01, 64).unwrap();
        let mut mins = vec![];
        for l in [32.0, 512.0] {
            let spec = CounterexampleSpec::new(Family::F2, l, 2.0, 0.5).unwrap();
            let r = verify_lower_bound_f2(&spec, &spec.curve().unwrap(), &mu).unwrap();
            assert!(r.pass, "{r:?}");
            assert!(r.max_phase_remainder <= 0.5);
            assert!(r.max_t < r.t_cap);
            mins.push(r.min_along_graph);
        }
        assert!(mins[0] / mins[1] < 2.0 && mins[1] / mins[0] < 2.0);
    }

    #[test]
    fn f1_ratio_trend_flips_at_threshold() {
        // above 2^14 the H^s weight of f₁ is in its power-law regime
        let lambdas: Vec<f64> = (14..=20).map(|k| 2f64.powi(k)).collect();
        let (m, kappa, alpha) = (2.0, 0.2, 1.0);
        let th = threshold(m, kappa, alpha).unwrap();
        let below = f1_sweep(m, kappa, alpha, 0.0, &lambdas, 64, 32).unwrap();
        assert!(below.ratio_fit.slope > 0.05, "{}", below.ratio_fit.slope);
        let above = f1_sweep(m, kappa, alpha, th + 0.05, &lambdas, 64, 32).unwrap();
        assert!(above.ratio_fit.slope <= 0.0, "{}", above.ratio_fit.slope);
    }
}
