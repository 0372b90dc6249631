//! Self-contained verification suites with JSON reports, shared by the
//! `verify` subcommand and the acceptance harness.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dispersion::{evaluate_field, propagate_grid, DispersionSymbol, SpaceTimePoint};
use crate::error::Result;
use crate::kernel::{vdc_oracle, CertifiedPhase};
use crate::maximal::{band_grid, hls_check, hls_sup_ratio, random_band_signal};
use crate::measures::{
    build_cantor_measure, build_graded_power_measure, build_power_measure, frostman_constant,
};
use crate::sharpness::{threshold, threshold_identity_gap};
use crate::spectral::{sobolev_norm, BumpProfile, FrequencyGrid, FrequencySignal, SobolevParams};

pub const UNITARITY_TOL: f64 = 1e-10;
pub const GAUSSIAN_TOL: f64 = 1e-6;
const HLS_CELLS_PER_SHELL: usize = 8;
const HLS_SHELLS: [u32; 8] = [4, 12, 20, 28, 36, 44, 52, 60];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Unitarity,
    Gaussian,
    Frostman,
    Threshold,
    Vdc,
    Hls,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub pass: bool,
    pub details: Value,
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<SuiteReport> {
    let (pass, details) = match suite {
        Suite::Unitarity => unitarity(seed)?,
        Suite::Gaussian => gaussian()?,
        Suite::Frostman => frostman()?,
        Suite::Threshold => threshold_algebra()?,
        Suite::Vdc => vdc()?,
        Suite::Hls => hls()?,
    };
    Ok(SuiteReport {
        suite,
        pass,
        details,
    })
}

/// Norm preservation of the propagator and the group law
/// `S_t S_{t₀} = S_{t+t₀}` on random band data.
fn unitarity(seed: u64) -> Result<(bool, Value)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h0 = SobolevParams::new(0.0)?;
    let mut rows = vec![];
    let mut worst_norm = 0.0f64;
    let mut worst_group = 0.0f64;
    for m in [1.2, 1.5, 2.0, 3.0] {
        let sym = DispersionSymbol::power(m)?;
        let lambda = 8.0;
        let grid = band_grid(lambda, &sym, 1.0, 1.0)?;
        let sig = random_band_signal(lambda, grid, 6, rng.gen())?;
        let base = sobolev_norm(&sig, h0);
        let mut dn = 0.0f64;
        let mut dg = 0.0f64;
        for _ in 0..8 {
            let t: f64 = rng.gen_range(-1.0..1.0);
            dn = dn.max((sobolev_norm(&propagate_grid(&sig, t, &sym), h0) - base).abs() / base);
            let t0: f64 = rng.gen_range(-0.5..0.5);
            let t1: f64 = rng.gen_range(-0.5..0.5);
            let x: f64 = rng.gen_range(-1.0..1.0);
            let moved = propagate_grid(&sig, t0, &sym);
            let a = evaluate_field(&moved, SpaceTimePoint::new(x, t1), &sym)?;
            let b = evaluate_field(&sig, SpaceTimePoint::new(x, t0 + t1), &sym)?;
            dg = dg.max((a - b).norm() / base);
        }
        worst_norm = worst_norm.max(dn);
        worst_group = worst_group.max(dg);
        rows.push(json!({"m": m, "max_norm_deviation": dn, "max_group_law_deviation": dg}));
    }
    Ok((
        worst_norm < UNITARITY_TOL && worst_group < UNITARITY_TOL,
        json!({
            "max_norm_deviation": worst_norm,
            "max_group_law_deviation": worst_group,
            "tolerance": UNITARITY_TOL,
            "symbols": rows,
        }),
    ))
}

/// `f̂(ξ) = √(2π)e^{−ξ²/2}`, so `f(x) = e^{−x²/2}`.
pub fn gaussian_signal(half_width: f64, nodes: usize) -> Result<FrequencySignal> {
    FrequencySignal::from_fn(FrequencyGrid::symmetric(half_width, nodes)?, |xi| {
        C64::new((2.0 * PI).sqrt() * (-xi * xi / 2.0).exp(), 0.0)
    })
}

/// `|S_t f(x)| = (1+4t²)^{−1/4} e^{−x²/(2(1+4t²))}` for the Gaussian under `|ξ|²`.
pub fn gaussian_modulus(x: f64, t: f64) -> f64 {
    let q = 1.0 + 4.0 * t * t;
    q.powf(-0.25) * (-x * x / (2.0 * q)).exp()
}

fn gaussian() -> Result<(bool, Value)> {
    let sym = DispersionSymbol::power(2.0)?;
    let sig = gaussian_signal(12.0, 4096)?;
    let mut worst = 0.0f64;
    for t in [0.1, 0.5] {
        for k in 0..=160 {
            let x = -4.0 + 8.0 * k as f64 / 160.0;
            let got = evaluate_field(&sig, SpaceTimePoint::new(x, t), &sym)?.norm();
            let want = gaussian_modulus(x, t);
            worst = worst.max((got - want).abs() / want);
        }
    }
    Ok((
        worst <= GAUSSIAN_TOL,
        json!({"max_relative_error": worst, "tolerance": GAUSSIAN_TOL}),
    ))
}

fn frostman() -> Result<(bool, Value)> {
    let mut rows = vec![];
    let mut pass = true;
    for alpha in [0.3, 0.5, 1.0] {
        let mu = build_power_measure(alpha, 4096)?;
        let c = frostman_constant(&mu, 2048)?;
        let rel = (c - 2.0 / alpha).abs() / (2.0 / alpha);
        pass &= rel <= 0.05;
        rows.push(json!({"alpha": alpha, "frostman_c": c, "target": 2.0 / alpha, "relative_error": rel}));
    }
    let cantor = build_cantor_measure(1.0 / 3.0, 12)?;
    let cc = frostman_constant(&cantor, 2048)?;
    let cantor_alpha = 2f64.ln() / 3f64.ln();
    let alpha_ok = (cantor.alpha() - cantor_alpha).abs() < 1e-12;
    pass &= alpha_ok && cc.is_finite() && cc <= 4.0;
    Ok((
        pass,
        json!({
            "power": rows,
            "cantor": {"alpha": cantor.alpha(), "frostman_c": cc, "depth": 12},
        }),
    ))
}

fn threshold_algebra() -> Result<(bool, Value)> {
    let mut worst = 0.0f64;
    for i in 0..10 {
        for j in 0..10 {
            for k in 0..10 {
                let m = 1.05 + 0.3 * i as f64;
                let kappa = 0.1 * (j + 1) as f64;
                let alpha = 0.1 * (k + 1) as f64;
                worst = worst.max(threshold_identity_gap(m, kappa, alpha)?.abs());
            }
        }
    }
    let classical = threshold(2.0, 1.0, 1.0)?;
    Ok((
        worst <= 1e-12 && classical == 0.25,
        json!({"max_identity_gap": worst, "grid_points": 1000, "threshold_2_1_1": classical}),
    ))
}

/// The canonical phases `ξ` and `ξ²/2` against a bump at the origin, and the
/// phase `10⁻³ξ` falsely certified as `|φ'| ≥ 1`, which must fail.
pub fn vdc_cases() -> Result<Value> {
    let psi = BumpProfile::origin(1.0)?;
    let sweep: Vec<f64> = (8..=40).map(|j| 2f64.powf(j as f64 / 4.0)).collect();
    let linear = vdc_oracle(
        &CertifiedPhase {
            phase: &|x| x,
            kth_derivative: &|_| 1.0,
            first_derivative: &|_| 1.0,
        },
        &psi,
        1,
        &sweep,
    )?;
    let quadratic = vdc_oracle(
        &CertifiedPhase {
            phase: &|x| x * x / 2.0,
            kth_derivative: &|_| 1.0,
            first_derivative: &|x| x,
        },
        &psi,
        2,
        &sweep,
    )?;
    let dishonest = vdc_oracle(
        &CertifiedPhase {
            phase: &|x| 1e-3 * x,
            kth_derivative: &|_| 1.0,
            first_derivative: &|_| 1e-3,
        },
        &psi,
        1,
        &sweep,
    )?;
    Ok(json!({
        "linear_k1": {"sup_normalized": linear.sup_normalized, "trend_slope": linear.trend_slope, "pass": linear.pass},
        "quadratic_k2": {"sup_normalized": quadratic.sup_normalized, "trend_slope": quadratic.trend_slope, "pass": quadratic.pass},
        "negative_control": {"sup_normalized": dishonest.sup_normalized, "trend_slope": dishonest.trend_slope, "pass": dishonest.pass},
        "lambda_min": sweep[0],
        "lambda_max": sweep[sweep.len() - 1],
    }))
}

fn vdc() -> Result<(bool, Value)> {
    let v = vdc_cases()?;
    let pass = v["linear_k1"]["pass"] == json!(true)
        && v["quadratic_k2"]["pass"] == json!(true)
        && v["negative_control"]["pass"] == json!(false);
    Ok((pass, v))
}

/// Boundedness for `ρ = α − 0.1`: constant densities on the power measure
/// under 4× atom refinement, and the sup over all densities on a graded mesh.
/// Divergence for `ρ = α + 0.1`: the sup ratio as the graded mesh resolves
/// ever finer scales near the origin, where `μ(B(0,r)) ~ r^α`.
fn hls() -> Result<(bool, Value)> {
    let alpha = 0.5;
    let (below, above) = (alpha - 0.1, alpha + 0.1);
    let mut ratios = vec![];
    for atoms in [256, 1024, 4096] {
        let mu = build_power_measure(alpha, atoms)?;
        let ones = vec![1.0; mu.len()];
        ratios.push(hls_check(&ones, &ones, below, &mu)?.ratio);
    }
    let growth = ratios.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
    let mut sup_below = vec![];
    let mut sup_above = vec![];
    for shells in HLS_SHELLS {
        let mu = build_graded_power_measure(alpha, HLS_CELLS_PER_SHELL, shells)?;
        sup_below.push(hls_sup_ratio(below, &mu)?);
        sup_above.push(hls_sup_ratio(above, &mu)?);
    }
    let last = HLS_SHELLS.len() - 1;
    let bounded_growth = sup_below[last] / sup_below[0];
    let divergent_growth = sup_above[last] / sup_above[0];
    Ok((
        growth < 2.0 && bounded_growth < 2.0 && divergent_growth > 10.0,
        json!({
            "alpha": alpha,
            "rho_below": below,
            "rho_above": above,
            "refinement_ratios": ratios,
            "max_growth_per_refinement": growth,
            "graded_shells": HLS_SHELLS,
            "sup_ratio_below": sup_below,
            "sup_ratio_above": sup_above,
            "bounded_growth": bounded_growth,
            "divergent_growth": divergent_growth,
        }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_suites_pass() {
        for s in [Suite::Unitarity, Suite::Gaussian, Suite::Threshold, Suite::Vdc, Suite::Hls] {
            let r = run_suite(s, 0).unwrap();
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn gaussian_modulus_at_time_zero() {
        assert_eq!(gaussian_modulus(0.0, 0.0), 1.0);
        assert!((gaussian_modulus(1.0, 0.0) - (-0.5f64).exp()).abs() < 1e-15);
    }
}
