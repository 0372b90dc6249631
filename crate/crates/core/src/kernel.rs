//! The oscillatory kernel `K_λ(w,w') = λ∫e^{iφ(λξ,w,w')}ψ(ξ)² dξ` of the
//! band-limited maximal estimate, its phase, the pair regions `V₁/V₂/V₃`,
//! decay-envelope fits, and a van der Corput oracle.
//!
//! Region conventions: `V₁` is closed (`|x−x'| ≤ 2λ^{−2s_*/α}`); `V₂` takes the
//! strict Hölder comparison `|x−x'|/C₂ > 2C₁|t−t'|^κ`, so ties go to `V₃`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curves::CurveFamily;
use crate::dispersion::{DispersionSymbol, SpaceTimePoint};
use crate::error::{LabError, Result};
use crate::maximal::scaling_regression;
use crate::spectral::BumpProfile;

/// Quadrature nodes per period of the fastest oscillation.
pub const NODES_PER_PERIOD: f64 = 8.0;
pub const MIN_KERNEL_NODES: usize = 2048;
pub const MAX_KERNEL_NODES: usize = 1 << 22;

/// Bins whose largest `|K_λ|` sits below this fraction of the trivial bound are
/// treated as round-off and left out of envelope fits.
pub const ENVELOPE_FLOOR: f64 = 1e-9;

/// `min{1/4, α/2, mακ/2}`.
pub fn s_star(m: f64, alpha: f64, kappa: f64) -> Result<f64> {
    check_ranges(m, alpha, kappa)?;
    Ok(0.25f64.min(alpha / 2.0).min(m * alpha * kappa / 2.0))
}

pub(crate) fn check_ranges(m: f64, alpha: f64, kappa: f64) -> Result<()> {
    if !(m > 1.0 && m.is_finite()) {
        return Err(LabError::validation(format!("m must exceed 1, got {m}")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(LabError::validation(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(LabError::validation(format!("kappa must lie in (0, 1], got {kappa}")));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct KernelParams {
    pub lambda: f64,
    pub sym: DispersionSymbol,
    pub curve: CurveFamily,
    pub psi: BumpProfile,
    pub alpha: f64,
    pub s_star: f64,
}

impl KernelParams {
    pub fn new(lambda: f64, sym: DispersionSymbol, curve: CurveFamily, alpha: f64) -> Result<Self> {
        if !(lambda >= 1.0 && lambda.is_finite()) {
            return Err(LabError::validation("kernel frequency lambda must be >= 1"));
        }
        let s = s_star(sym.order(), alpha, curve.kappa)?;
        Ok(KernelParams {
            lambda,
            sym,
            curve,
            psi: BumpProfile::Annular,
            alpha,
            s_star: s,
        })
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(lambda, self.sym.clone(), self.curve.clone(), self.alpha)
    }

    /// `2λ^{−2s_*/α}`.
    pub fn v1_radius(&self) -> f64 {
        2.0 * self.lambda.powf(-2.0 * self.s_star / self.alpha)
    }

    /// `λ‖ψ‖²_{L²}`, the modulus bound at zero phase.
    pub fn trivial_bound(&self) -> f64 {
        self.lambda * self.psi.l2_norm_sq()
    }

    fn max_speed(&self) -> f64 {
        let top = 2.0 * self.lambda;
        match &self.sym {
            DispersionSymbol::Power { m } => m * top.powf(m - 1.0),
            sym => (0..=4096)
                .map(|k| top * k as f64 / 4096.0)
                .map(|xi| sym.d1(xi).abs().max(sym.d1(-xi).abs()))
                .fold(0.0, f64::max),
        }
    }
}

/// `(γ(x,t) − γ(x',t'))ξ + (t−t')Φ(ξ)`.
pub fn phase_eval(xi: f64, w: SpaceTimePoint, wp: SpaceTimePoint, kp: &KernelParams) -> f64 {
    let dg = kp.curve.position(w.x, w.t) - kp.curve.position(wp.x, wp.t);
    dg * xi + (w.t - wp.t) * kp.sym.phase(xi)
}

/// Midpoint quadrature of `λ∫e^{iφ(λξ,w,w')}ψ(ξ)² dξ` over `supp ψ`.
pub fn kernel_eval(w: SpaceTimePoint, wp: SpaceTimePoint, kp: &KernelParams) -> Result<C64> {
    let lambda = kp.lambda;
    let dg = kp.curve.position(w.x, w.t) - kp.curve.position(wp.x, wp.t);
    let dt = w.t - wp.t;
    // |d/dξ φ(λξ)| ≤ λ|Δγ| + λ|Δt| max|Φ'| on |ξ| ≤ 2
    let slope = lambda * dg.abs() + lambda * dt.abs() * kp.max_speed();
    let mut total = C64::new(0.0, 0.0);
    for (a, b) in kp.psi.support() {
        let variation = slope * (b - a);
        let n = ((NODES_PER_PERIOD * variation / (2.0 * PI)).ceil() as usize).max(MIN_KERNEL_NODES);
        if n > MAX_KERNEL_NODES {
            return Err(LabError::resolution(format!(
                "kernel phase variation {variation:.3e} needs {n} nodes, above the cap {MAX_KERNEL_NODES}"
            )));
        }
        let h = (b - a) / n as f64;
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..n {
            let xi = a + (j as f64 + 0.5) * h;
            let p = kp.psi.eval(xi);
            if p != 0.0 {
                let z = lambda * xi;
                acc += C64::cis(dg * z + dt * kp.sym.phase(z)) * (p * p);
            }
        }
        total += acc * h;
    }
    Ok(total * lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    V1,
    V2,
    V3,
}

/// Which piece of `supp ψ` carries the `V₂` analysis at the band centre `ξ = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubSplit {
    /// `|x−x'|/C₂ > 4mλ^{m−1}|t−t'|`: first-derivative regime.
    U1Dominant,
    /// Second-derivative regime.
    U2Dominant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairClassification {
    pub region: Region,
    pub sub_split: Option<SubSplit>,
}

pub fn classify_pair(w: SpaceTimePoint, wp: SpaceTimePoint, kp: &KernelParams) -> PairClassification {
    let dx = (w.x - wp.x).abs();
    let dt = (w.t - wp.t).abs();
    let c = &kp.curve;
    if dx <= kp.v1_radius() {
        return PairClassification {
            region: Region::V1,
            sub_split: None,
        };
    }
    if dx / c.c2 > 2.0 * c.c1 * dt.powf(c.kappa) {
        let m = kp.sym.order();
        let u1 = dx / c.c2 > 4.0 * m * kp.lambda.powf(m - 1.0) * dt;
        PairClassification {
            region: Region::V2,
            sub_split: Some(if u1 { SubSplit::U1Dominant } else { SubSplit::U2Dominant }),
        }
    } else {
        PairClassification {
            region: Region::V3,
            sub_split: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeChainReport {
    /// Nodes of `supp ψ` inside `U₁`.
    pub nodes_checked: usize,
    /// Smallest `|d/dξ φ(λξ)| / (λ|x−x'| / 4C₂)` over those nodes.
    pub min_ratio: f64,
    pub pass: bool,
}

/// On a `V₂` pair, check `|d/dξ φ(λξ,w,w')| > λ|x−x'|/(4C₂)` at every
/// quadrature node of `U₁ = {ξ ∈ supp ψ : |x−x'|/C₂ > 4mλ^{m−1}|t−t'||ξ|^{m−1}}`.
pub fn phase_derivative_check(
    w: SpaceTimePoint,
    wp: SpaceTimePoint,
    kp: &KernelParams,
    nodes: usize,
) -> Result<DerivativeChainReport> {
    if classify_pair(w, wp, kp).region != Region::V2 {
        return Err(LabError::validation("derivative chain applies to V2 pairs only"));
    }
    let c = &kp.curve;
    let m = kp.sym.order();
    let lambda = kp.lambda;
    let dx = (w.x - wp.x).abs();
    let dt = w.t - wp.t;
    let dg = c.position(w.x, w.t) - c.position(wp.x, wp.t);
    let bound = lambda * dx / (4.0 * c.c2);
    let mut checked = 0;
    let mut min_ratio = f64::INFINITY;
    for (a, b) in kp.psi.support() {
        let h = (b - a) / nodes as f64;
        for j in 0..nodes {
            let xi = a + (j as f64 + 0.5) * h;
            if dx / c.c2 > 4.0 * m * lambda.powf(m - 1.0) * dt.abs() * xi.abs().powf(m - 1.0) {
                let d = lambda * dg + lambda * dt * kp.sym.d1(lambda * xi);
                min_ratio = min_ratio.min(d.abs() / bound);
                checked += 1;
            }
        }
    }
    Ok(DerivativeChainReport {
        nodes_checked: checked,
        min_ratio,
        pass: checked == 0 || min_ratio > 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSample {
    pub w: SpaceTimePoint,
    pub wp: SpaceTimePoint,
    pub dx: f64,
    pub dt: f64,
    pub abs_k: f64,
}

/// Seeded pairs in `region`, half drawn geometrically and half planted on a
/// stationary point of the phase so the per-bin suprema are actually reached.
///
/// Geometric draws take `|x−x'|` log-uniform above the `V₁` radius, `|t−t'|`
/// log-uniform over the region's admissible range, and straddle `t = 0` half
/// the time. Planted draws pick `ξ_s` in the band and solve
/// `γ(x,t) − γ(x',t') = −(t−t')Φ'(ξ_s)` for `x'`.
pub fn sample_pairs(
    kp: &KernelParams,
    region: Region,
    count: usize,
    seed: u64,
) -> Result<Vec<(SpaceTimePoint, SpaceTimePoint)>> {
    if region == Region::V1 {
        return Err(LabError::validation("envelope sampling targets V2 or V3"));
    }
    let thr = kp.v1_radius();
    if thr >= 2.0 {
        return Err(LabError::validation(format!(
            "region {region:?} is empty at lambda = {}: V1 radius {thr} covers I",
            kp.lambda
        )));
    }
    let c = &kp.curve;
    let holder_dt = |dx: f64| -> f64 {
        if c.c1 == 0.0 {
            f64::INFINITY
        } else {
            (dx / (2.0 * c.c1 * c.c2)).powf(1.0 / c.kappa)
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let log_uniform = |rng: &mut ChaCha8Rng, a: f64, b: f64| -> f64 {
        (rng.gen_range(a.ln()..b.ln())).exp()
    };
    let place_times = |rng: &mut ChaCha8Rng, dt: f64| -> (f64, f64) {
        let t = if rng.gen_bool(0.5) {
            rng.gen_range(-1.0..=(1.0 - dt))
        } else {
            -rng.gen_range(0.0..=1.0) * dt
        };
        if rng.gen_bool(0.5) {
            (t, t + dt)
        } else {
            (t + dt, t)
        }
    };
    let mut out = Vec::with_capacity(count);
    let max_attempts = 500 * count.max(1);
    for attempt in 0..max_attempts {
        if out.len() == count {
            break;
        }
        let planted = attempt % 2 == 1;
        let pair = if !planted {
            let dx = log_uniform(&mut rng, thr, 2.0);
            let cap = holder_dt(dx);
            let (lo, hi) = match region {
                Region::V2 => ((cap.min(2.0) * 1e-8).max(1e-12), cap.min(2.0)),
                _ => (cap, 2.0),
            };
            if !(lo < hi) {
                continue;
            }
            let dt = log_uniform(&mut rng, lo, hi);
            let (t, tp) = place_times(&mut rng, dt);
            let x = rng.gen_range(-1.0..=(1.0 - dx));
            (SpaceTimePoint::new(x, t), SpaceTimePoint::new(x + dx, tp))
        } else {
            let dt = log_uniform(&mut rng, 1e-10, 2.0);
            let (t, tp) = place_times(&mut rng, dt);
            let xi_s = kp.lambda * rng.gen_range(0.6..1.9) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let dg = -(t - tp) * kp.sym.d1(xi_s);
            let x: f64 = rng.gen_range(-1.0..=1.0);
            let Some(xp) = c.invert_x(c.position(x, t) - dg, tp) else {
                continue;
            };
            (SpaceTimePoint::new(x, t), SpaceTimePoint::new(xp, tp))
        };
        if classify_pair(pair.0, pair.1, kp).region == region {
            out.push(pair);
        }
    }
    if out.len() < count {
        return Err(LabError::validation(format!(
            "only {} of {count} pairs found in {region:?} at lambda = {}",
            out.len(),
            kp.lambda
        )));
    }
    Ok(out)
}

/// `|K_λ|` on each pair, in parallel.
pub fn evaluate_pairs(
    kp: &KernelParams,
    pairs: &[(SpaceTimePoint, SpaceTimePoint)],
) -> Result<Vec<KernelSample>> {
    pairs
        .par_iter()
        .map(|&(w, wp)| {
            Ok(KernelSample {
                w,
                wp,
                dx: (w.x - wp.x).abs(),
                dt: (w.t - wp.t).abs(),
                abs_k: kernel_eval(w, wp, kp)?.norm(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeBin {
    pub bin: i32,
    pub dx: f64,
    pub abs_k: f64,
    pub in_fit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeFit {
    pub region: Region,
    pub lambda: f64,
    pub decay_exponent: f64,
    pub theory_exponent: f64,
    /// `max_bins |K| / bound(|x−x'|)` with the displayed bound for the region.
    pub envelope_constant: f64,
    pub bins: Vec<EnvelopeBin>,
    pub pairs: usize,
    /// Largest `|K_λ| / (λ‖ψ‖²)` seen; the trivial estimate says `≤ 1`.
    pub max_trivial_ratio: f64,
    pub trivial_bound_holds: bool,
}

/// `−min{1/2, α}` on `V₂`, `−1/(2κ)` on `V₃`.
pub fn theory_exponent(kp: &KernelParams, region: Region) -> f64 {
    match region {
        Region::V2 => -(0.5f64.min(kp.alpha)),
        _ => -0.5 / kp.curve.kappa,
    }
}

/// The region's kernel bound at separation `dx`, constants dropped.
pub fn theory_bound(kp: &KernelParams, region: Region, dx: f64) -> f64 {
    let lambda = kp.lambda;
    match region {
        Region::V2 => {
            let p = 0.5f64.min(kp.alpha);
            lambda.powf(1.0 - p) * dx.powf(-p)
        }
        _ => lambda * (lambda.powf(kp.sym.order()) * dx.powf(1.0 / kp.curve.kappa)).powf(-0.5),
    }
}

/// Dyadic bins in `|x−x'|` from the `V₁` radius, per-bin max of `|K_λ|`, and a
/// log-log line through the per-bin maxima.
pub fn envelope_from_samples(
    kp: &KernelParams,
    region: Region,
    samples: &[KernelSample],
) -> Result<EnvelopeFit> {
    let thr = kp.v1_radius();
    let trivial = kp.trivial_bound();
    let mut bins: Vec<EnvelopeBin> = vec![];
    for s in samples {
        let b = (s.dx / thr).log2().floor() as i32;
        match bins.iter_mut().find(|e| e.bin == b) {
            Some(e) if s.abs_k > e.abs_k => {
                e.abs_k = s.abs_k;
                e.dx = s.dx;
            }
            Some(_) => {}
            None => bins.push(EnvelopeBin {
                bin: b,
                dx: s.dx,
                abs_k: s.abs_k,
                in_fit: false,
            }),
        }
    }
    bins.sort_by_key(|e| e.bin);
    for e in bins.iter_mut() {
        e.in_fit = e.abs_k > ENVELOPE_FLOOR * trivial;
    }
    let fit_points: Vec<(f64, f64)> = bins
        .iter()
        .filter(|e| e.in_fit)
        .map(|e| (e.dx, e.abs_k))
        .collect();
    if fit_points.len() < 4 {
        return Err(LabError::validation(format!(
            "{region:?} envelope has {} resolvable bins at lambda = {}; need 4",
            fit_points.len(),
            kp.lambda
        )));
    }
    let fit = scaling_regression(&fit_points)?;
    let envelope_constant = bins
        .iter()
        .filter(|e| e.in_fit)
        .map(|e| e.abs_k / theory_bound(kp, region, e.dx))
        .fold(0.0, f64::max);
    let max_trivial_ratio = samples.iter().map(|s| s.abs_k / trivial).fold(0.0, f64::max);
    Ok(EnvelopeFit {
        region,
        lambda: kp.lambda,
        decay_exponent: fit.slope,
        theory_exponent: theory_exponent(kp, region),
        envelope_constant,
        bins,
        pairs: samples.len(),
        max_trivial_ratio,
        trivial_bound_holds: max_trivial_ratio <= 1.0 + 1e-10,
    })
}

/// Sample, evaluate, bin and fit. Needs at least 10³ pairs.
pub fn kernel_envelope_fit(
    kp: &KernelParams,
    region: Region,
    pair_samples: usize,
    seed: u64,
) -> Result<(EnvelopeFit, Vec<KernelSample>)> {
    if pair_samples < 1000 {
        return Err(LabError::validation("envelope fit needs >= 1000 pairs"));
    }
    let pairs = sample_pairs(kp, region, pair_samples, seed)?;
    let samples = evaluate_pairs(kp, &pairs)?;
    Ok((envelope_from_samples(kp, region, &samples)?, samples))
}

/// Refit on a fixed pair set, e.g. the pairs of a fit at another λ. Every
/// pair must lie in `region` at `kp.lambda`.
pub fn envelope_for_pairs(
    kp: &KernelParams,
    region: Region,
    pairs: &[(SpaceTimePoint, SpaceTimePoint)],
) -> Result<EnvelopeFit> {
    if let Some((w, wp)) = pairs.iter().find(|(w, wp)| classify_pair(*w, *wp, kp).region != region) {
        return Err(LabError::validation(format!(
            "pair ({w:?}, {wp:?}) leaves {region:?} at lambda = {}",
            kp.lambda
        )));
    }
    envelope_from_samples(kp, region, &evaluate_pairs(kp, pairs)?)
}

/// A shifted power curve whose `V₃` region carries stationary points of the
/// phase across the whole range of `|x−x'|`: amplitude `4λ^κ`. On the plain
/// power curve `V₃` pairs are almost all non-stationary at moderate λ and the
/// kernel sits at round-off there.
pub fn stationary_v3_curve(lambda: f64, kappa: f64) -> Result<CurveFamily> {
    CurveFamily::shifted_power(kappa, 4.0 * lambda.powf(kappa))
}

/// Rows `dx,dt,abs_K,region,bin,envelope`.
pub fn write_kernel_csv<W: Write>(
    out: W,
    kp: &KernelParams,
    fit: &EnvelopeFit,
    samples: &[KernelSample],
) -> Result<()> {
    let thr = kp.v1_radius();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["dx", "dt", "abs_K", "region", "bin", "envelope"])?;
    for s in samples {
        let b = (s.dx / thr).log2().floor() as i32;
        let env = fit
            .bins
            .iter()
            .any(|e| e.bin == b && e.dx == s.dx && e.abs_k == s.abs_k);
        w.write_record(&[
            s.dx.to_string(),
            s.dt.to_string(),
            s.abs_k.to_string(),
            format!("{:?}", fit.region),
            b.to_string(),
            env.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

type RealFn<'a> = &'a (dyn Fn(f64) -> f64 + Sync);

/// A phase with a claimed lower bound `|φ^{(k)}| ≥ 1` on `supp ψ`, supplied as
/// the function believed to be `φ^{(k)}`.
pub struct CertifiedPhase<'a> {
    pub phase: RealFn<'a>,
    pub kth_derivative: RealFn<'a>,
    /// `φ'`, used for the monotonicity hypothesis when `k = 1`.
    pub first_derivative: RealFn<'a>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VdcResult {
    pub lambdas: Vec<f64>,
    /// `λ^{1/k} |∫e^{iλφ}ψ|` at each λ.
    pub normalized: Vec<f64>,
    pub sup_normalized: f64,
    /// Slope of the per-octave maxima of the normalized values.
    pub trend_slope: f64,
    pub pass: bool,
}

/// Maximum allowed growth exponent of `λ^{1/k} I(λ)`.
pub const VDC_TREND_TOL: f64 = 0.05;

/// `I(λ) = |∫e^{iλφ}ψ|` by midpoint quadrature over `supp ψ`, normalized by
/// `λ^{1/k}`; passes when the per-octave maxima show no growth.
pub fn vdc_oracle(
    phase: &CertifiedPhase<'_>,
    psi: &BumpProfile,
    k: u32,
    lambda_sweep: &[f64],
) -> Result<VdcResult> {
    if !(k == 1 || k == 2) {
        return Err(LabError::validation("van der Corput oracle supports k = 1 or 2"));
    }
    if lambda_sweep.iter().any(|l| !(*l > 0.0)) {
        return Err(LabError::validation("lambdas must be positive"));
    }
    let support = psi.support();
    let probe = 4096;
    let mut variation = 0.0f64;
    for &(a, b) in &support {
        let h = (b - a) / probe as f64;
        let mut prev_d1: Option<f64> = None;
        let mut direction = 0.0f64;
        for j in 0..=probe {
            let xi = a + j as f64 * h;
            let dk = (phase.kth_derivative)(xi);
            if !(dk.abs() >= 1.0) {
                return Err(LabError::validation(format!(
                    "certified |phi^({k})| = {dk} < 1 at xi = {xi}"
                )));
            }
            let d1 = (phase.first_derivative)(xi);
            variation = variation.max(d1.abs());
            if k == 1 {
                if let Some(p) = prev_d1 {
                    let step = d1 - p;
                    if step * direction < 0.0 {
                        return Err(LabError::validation(
                            "k = 1 needs a monotone phase derivative on the support",
                        ));
                    }
                    if step != 0.0 {
                        direction = step.signum();
                    }
                }
                prev_d1 = Some(d1);
            }
        }
    }
    let span: f64 = support.iter().map(|(a, b)| b - a).sum();
    let normalized: Vec<f64> = lambda_sweep
        .par_iter()
        .map(|&lambda| {
            let n = ((NODES_PER_PERIOD * lambda * variation * span / (2.0 * PI)).ceil() as usize)
                .max(1 << 14);
            let mut total = C64::new(0.0, 0.0);
            for &(a, b) in &support {
                let h = (b - a) / n as f64;
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..n {
                    let xi = a + (j as f64 + 0.5) * h;
                    acc += C64::cis(lambda * (phase.phase)(xi)) * psi.eval(xi);
                }
                total += acc * h;
            }
            lambda.powf(1.0 / k as f64) * total.norm()
        })
        .collect();
    // per-octave maxima sidestep isolated zeros of the oscillatory integral
    let mut blocks: Vec<(i64, f64, f64)> = vec![];
    for (&l, &v) in lambda_sweep.iter().zip(&normalized) {
        let o = l.log2().floor() as i64;
        match blocks.iter_mut().find(|b| b.0 == o) {
            Some(b) if v > b.2 => {
                b.1 = l;
                b.2 = v;
            }
            Some(_) => {}
            None => blocks.push((o, l, v)),
        }
    }
    blocks.sort_by_key(|b| b.0);
    let points: Vec<(f64, f64)> = blocks.iter().map(|b| (b.1, b.2)).collect();
    let trend_slope = scaling_regression(&points)?.slope;
    let sup_normalized = normalized.iter().cloned().fold(0.0, f64::max);
    Ok(VdcResult {
        lambdas: lambda_sweep.to_vec(),
        normalized,
        sup_normalized,
        trend_slope,
        pass: trend_slope <= VDC_TREND_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(lambda: f64, m: f64, kappa: f64, alpha: f64) -> KernelParams {
        KernelParams::new(
            lambda,
            DispersionSymbol::power(m).unwrap(),
            CurveFamily::power(kappa).unwrap(),
            alpha,
        )
        .unwrap()
    }

    fn p(x: f64, t: f64) -> SpaceTimePoint {
        SpaceTimePoint::new(x, t)
    }

    #[test]
    fn s_star_values() {
        assert_eq!(s_star(2.0, 1.0, 1.0).unwrap(), 0.25);
        assert!((s_star(2.0, 1.0, 0.1).unwrap() - 0.1).abs() < 1e-15);
        assert!((s_star(1.2, 0.5, 0.5).unwrap() - 0.15).abs() < 1e-15);
        assert!(s_star(1.0, 0.5, 0.5).is_err());
        assert!(s_star(2.0, 0.0, 0.5).is_err());
        assert!(s_star(2.0, 0.5, 1.5).is_err());
    }

    #[test]
    fn phase_examples() {
        let kp = KernelParams::new(
            4.0,
            DispersionSymbol::power(2.0).unwrap(),
            CurveFamily::vertical(),
            1.0,
        )
        .unwrap();
        let (w, wp) = (p(0.3, 0.2), p(-0.4, 0.7));
        assert_eq!(phase_eval(1.7, w, w, &kp), 0.0);
        assert!((phase_eval(1.0, w, wp, &kp) - (0.7 + -0.5)).abs() < 1e-15);
        assert!((phase_eval(2.3, w, wp, &kp) + phase_eval(2.3, wp, w, &kp)).abs() < 1e-15);
    }

    #[test]
    fn kernel_at_coincident_points_and_symmetry() {
        let kp = params(64.0, 2.0, 0.5, 1.0);
        let w = p(0.1, 0.3);
        let k = kernel_eval(w, w, &kp).unwrap();
        assert!((k.re - kp.trivial_bound()).abs() < 1e-9 * kp.trivial_bound());
        assert!(k.im.abs() < 1e-9);
        let wp = p(-0.5, -0.2);
        let a = kernel_eval(w, wp, &kp).unwrap();
        let b = kernel_eval(wp, w, &kp).unwrap();
        assert!((a - b.conj()).norm() < 1e-10);
        assert!(a.norm() <= kp.trivial_bound() * (1.0 + 1e-10));
    }

    #[test]
    fn classification_examples() {
        let kp = params(256.0, 2.0, 1.0, 1.0);
        let r = kp.v1_radius();
        assert_eq!(classify_pair(p(0.2, 0.1), p(0.2, 0.1), &kp).region, Region::V1);
        assert_eq!(classify_pair(p(-0.9, 0.3), p(0.9, 0.3), &kp).region, Region::V2);
        assert_eq!(classify_pair(p(0.0, -0.5), p(3.0 * r, 0.5), &kp).region, Region::V3);
        // the V1 radius itself is closed
        assert_eq!(classify_pair(p(0.0, 0.0), p(r, 0.0), &kp).region, Region::V1);
        let c = classify_pair(p(-0.9, 0.3), p(0.9, 0.3), &kp);
        assert_eq!(c.sub_split, Some(SubSplit::U1Dominant));
    }

    #[test]
    fn regions_partition_random_pairs() {
        let kp = params(64.0, 1.5, 0.4, 0.7);
        let r = kp.v1_radius();
        let c = &kp.curve;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100_000 {
            let w = p(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let wp = p(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let dx = (w.x - wp.x).abs();
            let dt = (w.t - wp.t).abs();
            let in1 = dx <= r;
            let in2 = dx > r && dx / c.c2 > 2.0 * c.c1 * dt.powf(c.kappa);
            let in3 = dx > r && dx / c.c2 <= 2.0 * c.c1 * dt.powf(c.kappa);
            assert_eq!(in1 as u8 + in2 as u8 + in3 as u8, 1);
            let expect = if in1 { Region::V1 } else if in2 { Region::V2 } else { Region::V3 };
            assert_eq!(classify_pair(w, wp, &kp).region, expect);
        }
    }

    #[test]
    fn derivative_chain_on_v2_pairs() {
        for (kappa, alpha) in [(1.0, 1.0), (0.5, 0.5)] {
            let kp = params(128.0, 2.0, kappa, alpha);
            let pairs = sample_pairs(&kp, Region::V2, 300, 1).unwrap();
            let mut checked = 0;
            for (w, wp) in pairs {
                let r = phase_derivative_check(w, wp, &kp, 512).unwrap();
                assert!(r.pass, "{r:?}");
                checked += r.nodes_checked;
            }
            assert!(checked > 0);
        }
    }

    #[test]
    fn sampled_pairs_land_in_region() {
        let kp = params(64.0, 2.0, 0.5, 1.0);
        for region in [Region::V2, Region::V3] {
            for (w, wp) in sample_pairs(&kp, region, 200, 9).unwrap() {
                assert_eq!(classify_pair(w, wp, &kp).region, region);
            }
        }
        assert!(sample_pairs(&kp, Region::V1, 10, 0).is_err());
    }

    #[test]
    fn refit_on_fixed_pairs() {
        let kp = params(32.0, 2.0, 1.0, 0.5);
        let (fit, samples) = kernel_envelope_fit(&kp, Region::V2, 1000, 3).unwrap();
        let pairs: Vec<_> = samples.iter().map(|s| (s.w, s.wp)).collect();
        let same = envelope_for_pairs(&kp, Region::V2, &pairs).unwrap();
        assert_eq!(same, fit);
        let doubled = envelope_for_pairs(&kp.with_lambda(64.0).unwrap(), Region::V2, &pairs).unwrap();
        assert!(doubled.trivial_bound_holds);
        let v1 = vec![(p(0.0, 0.0), p(0.0, 0.0))];
        assert!(envelope_for_pairs(&kp, Region::V2, &v1).is_err());
    }

    #[test]
    fn kernel_matches_fine_quadrature() {
        let kp = params(32.0, 1.5, 0.5, 1.0);
        let (w, wp) = (p(0.2, 0.01), p(-0.3, 0.04));
        let a = kernel_eval(w, wp, &kp).unwrap();
        // independent sum on a much finer grid
        let n = 400_000;
        let mut b = C64::new(0.0, 0.0);
        for (lo, hi) in kp.psi.support() {
            let h = (hi - lo) / n as f64;
            for j in 0..n {
                let xi = lo + (j as f64 + 0.5) * h;
                let q = kp.psi.eval(xi);
                b += C64::cis(phase_eval(kp.lambda * xi, w, wp, &kp)) * q * q * h;
            }
        }
        b *= kp.lambda;
        assert!((a - b).norm() < 1e-8 * kp.trivial_bound());
    }

    #[test]
    fn vdc_canonical_phases_and_controls() {
        let psi = BumpProfile::origin(1.0).unwrap();
        // starts past the pre-asymptotic rise of the stationary-phase integral
        let sweep: Vec<f64> = (8..=40).map(|j| 2f64.powf(j as f64 / 4.0)).collect();
        let lin = CertifiedPhase {
            phase: &|x| x,
            kth_derivative: &|_| 1.0,
            first_derivative: &|_| 1.0,
        };
        assert!(vdc_oracle(&lin, &psi, 1, &sweep).unwrap().pass);
        let quad = CertifiedPhase {
            phase: &|x| x * x / 2.0,
            kth_derivative: &|_| 1.0,
            first_derivative: &|x| x,
        };
        assert!(vdc_oracle(&quad, &psi, 2, &sweep).unwrap().pass);
        let cheat = CertifiedPhase {
            phase: &|x| 1e-3 * x,
            kth_derivative: &|_| 1.0,
            first_derivative: &|_| 1e-3,
        };
        let r = vdc_oracle(&cheat, &psi, 1, &sweep).unwrap();
        assert!(!r.pass && r.trend_slope > 0.5);
        let flat = CertifiedPhase {
            phase: &|_| 0.0,
            kth_derivative: &|_| 0.0,
            first_derivative: &|_| 0.0,
        };
        assert!(vdc_oracle(&flat, &psi, 1, &sweep).is_err());
        assert!(vdc_oracle(&lin, &psi, 3, &sweep).is_err());
    }
}
