//! Command-line harness: JSON configs with flag overrides, one manifest per
//! run, plot-ready CSV. Every output embeds the resolved config and
//! `schema_version`; a manifest passed back through `--config` re-runs the
//! same experiment.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::curves::{CurveFamily, CurveSpec};
use crate::dispersion::{check_resolution, propagate_grid, DispersionSymbol, SymbolSpec};
use crate::error::{LabError, Result};
use crate::kernel::{kernel_envelope_fit, s_star, write_kernel_csv, KernelParams, Region};
use crate::maximal::{
    band_grid, band_sweep, maximal_norm_converged, random_band_signal, BandExperiment, FieldMethod,
    ScalingFit, TimeGrid,
};
use crate::measures::{FrostmanMeasure, MeasureSpec};
use crate::sharpness::{
    dim_bound, f1_sweep, f1_windows, f2_sweep, predicted_f1_exponent, threshold, verify_lower_bound_f1,
    verify_lower_bound_f2, window_measure, CounterexampleSpec, Family, MIN_WINDOW_ATOMS,
};
use crate::spectral::{sobolev_norm, FrequencyGrid, FrequencySignal, SobolevParams};
use crate::suites::{gaussian_signal, run_suite, Suite};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "curvelab", version, about = "Fractional Schrödinger maximal-function laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON config or a previous manifest; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "curvelab-out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate S_t f on a spatial grid.
    Propagate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        m: Option<f64>,
        /// Comma-separated times.
        #[arg(long, value_delimiter = ',')]
        t: Option<Vec<f64>>,
        #[arg(long)]
        x_min: Option<f64>,
        #[arg(long)]
        x_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Maximal function along a curve and its L²(dμ) / H^s ratio.
    Maximal {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        m: Option<f64>,
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        n_t: Option<usize>,
        #[arg(long)]
        converge_levels: Option<u32>,
    },
    /// Power-law fit of a norm over a λ sweep.
    Scaling {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        family: Option<ScalingFamily>,
        #[arg(long)]
        m: Option<f64>,
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        s: Option<f64>,
        /// `a..b` for the dyadic values from a to b, or a comma list.
        #[arg(long)]
        lambda: Option<String>,
    },
    /// Decay envelope of the oscillatory kernel on one pair region.
    Kernel {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        m: Option<f64>,
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        /// Use the shifted power curve `x − a·sign(t)|t|^κ` with this `a`.
        #[arg(long)]
        amplitude: Option<f64>,
        #[arg(long, value_enum)]
        region: Option<RegionArg>,
        #[arg(long)]
        pairs: Option<usize>,
    },
    /// Counterexample lower bounds and threshold algebra.
    Sharpness {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        family: Option<FamilyArg>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        m: Option<f64>,
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        s: Option<f64>,
    },
    /// Built-in verification suites.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        suite: Option<Suite>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ScalingFamily {
    F1,
    F2,
    Band,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RegionArg {
    V2,
    V3,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FamilyArg {
    F1,
    F2,
}

/// Initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignalSpec {
    /// `f̂(ξ) = √(2π)e^{−ξ²/2}`.
    Gaussian { half_width: f64, nodes: usize },
    Zero { half_width: f64, nodes: usize },
    /// Wave packets at frequency `~λ`, sized for `|x| ≤ reach`, `|t| ≤ 1`.
    RandomBand { lambda: f64, sources: usize, reach: f64 },
    Counterexample(CounterexampleSpec),
    /// A signal file written by [`FrequencySignal::write_json`].
    File { path: PathBuf },
}

impl SignalSpec {
    pub fn build(&self, sym: &DispersionSymbol, seed: u64) -> Result<FrequencySignal> {
        match self {
            SignalSpec::Gaussian { half_width, nodes } => gaussian_signal(*half_width, *nodes),
            SignalSpec::Zero { half_width, nodes } => {
                FrequencySignal::zeros(FrequencyGrid::symmetric(*half_width, *nodes)?)
            }
            SignalSpec::RandomBand {
                lambda,
                sources,
                reach,
            } => random_band_signal(*lambda, band_grid(*lambda, sym, *reach, 1.0)?, *sources, seed),
            SignalSpec::Counterexample(spec) => spec.make(),
            SignalSpec::File { path } => FrequencySignal::read_json(path),
        }
    }
}

fn default_symbol() -> SymbolSpec {
    SymbolSpec::Power { m: 2.0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagateConfig {
    pub symbol: SymbolSpec,
    pub signal: SignalSpec,
    pub times: Vec<f64>,
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
    pub seed: u64,
}

impl Default for PropagateConfig {
    fn default() -> Self {
        PropagateConfig {
            symbol: default_symbol(),
            signal: SignalSpec::Gaussian {
                half_width: 12.0,
                nodes: 4096,
            },
            times: vec![0.0, 0.1, 0.5],
            x_min: -4.0,
            x_max: 4.0,
            points: 201,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaximalConfig {
    pub symbol: SymbolSpec,
    pub curve: CurveSpec,
    pub measure: MeasureSpec,
    pub signal: SignalSpec,
    pub time_grid: TimeGrid,
    pub method: FieldMethod,
    pub s: f64,
    /// Extra time-step halvings spent certifying convergence.
    pub converge_levels: u32,
    pub seed: u64,
}

impl Default for MaximalConfig {
    fn default() -> Self {
        MaximalConfig {
            symbol: default_symbol(),
            curve: CurveSpec::Power { kappa: 0.5 },
            measure: MeasureSpec::Power {
                alpha: 0.5,
                atoms: 512,
            },
            signal: SignalSpec::RandomBand {
                lambda: 16.0,
                sources: 8,
                reach: 2.0,
            },
            time_grid: TimeGrid {
                t_min: 0.0,
                t_max: 1.0,
                n_t: 1025,
                refinement_level: 0,
                geometric: None,
                polish: true,
            },
            method: FieldMethod::Direct,
            s: 0.0,
            converge_levels: 0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingConfig {
    pub family: ScalingFamily,
    pub m: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub s: f64,
    pub lambdas: Vec<f64>,
    /// Cells of the `x`-window measure (f1, f2).
    pub cells: usize,
    /// Time nodes across the f1 time window.
    pub time_nodes: usize,
    /// Settings of the band family; its `m, kappa, alpha, s, seed` follow the fields above.
    pub band: BandExperiment,
    pub seed: u64,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig {
            family: ScalingFamily::F1,
            m: 2.0,
            kappa: 0.5,
            alpha: 1.0,
            s: 0.0,
            lambdas: dyadic(16.0, 1024.0),
            cells: 128,
            time_nodes: 64,
            band: BandExperiment::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    pub lambda: f64,
    pub symbol: SymbolSpec,
    pub curve: CurveSpec,
    pub alpha: f64,
    pub region: Region,
    pub pairs: usize,
    pub seed: u64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            lambda: 256.0,
            symbol: default_symbol(),
            curve: CurveSpec::Power { kappa: 1.0 },
            alpha: 1.0,
            region: Region::V2,
            pairs: 2000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SharpnessConfig {
    pub counterexample: CounterexampleSpec,
    pub alpha: f64,
    /// Sobolev exponent for the dimension bound; omitted when `≤ 1/4`.
    pub s: f64,
    pub cells: usize,
    pub seed: u64,
}

impl Default for SharpnessConfig {
    fn default() -> Self {
        SharpnessConfig {
            counterexample: CounterexampleSpec {
                family: Family::F1,
                lambda: 64.0,
                m: 2.0,
                kappa: 0.5,
                psi0: Default::default(),
                nodes: crate::sharpness::DEFAULT_NODES,
            },
            alpha: 0.5,
            s: 0.3,
            cells: MIN_WINDOW_ATOMS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub suite: Suite,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            suite: Suite::Unitarity,
            seed: 0,
        }
    }
}

/// Dyadic values `a, 2a, …` up to `b`.
pub fn dyadic(a: f64, b: f64) -> Vec<f64> {
    let mut out = vec![];
    let mut l = a;
    while l <= b * (1.0 + 1e-12) {
        out.push(l);
        l *= 2.0;
    }
    out
}

/// `a..b` (dyadic) or `a,b,c`.
pub fn parse_lambdas(s: &str) -> Result<Vec<f64>> {
    let num = |v: &str| -> Result<f64> {
        v.trim()
            .parse::<f64>()
            .map_err(|_| LabError::validation(format!("bad lambda value '{v}'")))
    };
    let out = match s.split_once("..") {
        Some((a, b)) => {
            let (a, b) = (num(a)?, num(b)?);
            if !(a > 0.0 && a <= b) {
                return Err(LabError::validation(format!("bad lambda range '{s}'")));
            }
            dyadic(a, b)
        }
        None => s.split(',').map(num).collect::<Result<_>>()?,
    };
    Ok(out)
}

/// Read a config, unwrapping it from a manifest if needed.
fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let mut v: Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    if let Some(ver) = v.get("schema_version") {
        if ver != &json!(SCHEMA_VERSION) {
            return Err(LabError::validation(format!("unsupported schema_version {ver}")));
        }
        v = v
            .get("config")
            .cloned()
            .ok_or_else(|| LabError::validation("manifest lacks a config"))?;
    }
    Ok(serde_json::from_value(v)?)
}

fn set_curve_kappa(c: &mut CurveSpec, kappa: f64) {
    *c = match *c {
        CurveSpec::ShiftedPower { amplitude, .. } => CurveSpec::ShiftedPower { kappa, amplitude },
        _ => CurveSpec::Power { kappa },
    };
}

fn set_measure_alpha(mu: &mut MeasureSpec, alpha: f64) -> Result<()> {
    match mu {
        MeasureSpec::Power { alpha: a, .. } | MeasureSpec::Graded { alpha: a, .. } => {
            *a = alpha;
            Ok(())
        }
        MeasureSpec::Cantor { .. } => Err(LabError::validation(
            "--alpha cannot override a Cantor measure; its dimension follows the ratio",
        )),
    }
}

/// Writes manifests and CSVs under one output directory.
struct Output<'a> {
    dir: &'a Path,
    command: &'static str,
    config: Value,
}

impl Output<'_> {
    fn manifest(&self, name: &str, results: Value) -> Result<()> {
        let doc = json!({
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "config": self.config,
            "results": results,
        });
        fs::write(self.dir.join(name), serde_json::to_string_pretty(&doc)? + "\n")?;
        Ok(())
    }

    /// CSV body preceded by a `#` line carrying the schema version and config.
    fn csv(&self, name: &str, body: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = format!(
            "# schema_version={SCHEMA_VERSION} command={} config={}\n",
            self.command,
            serde_json::to_string(&self.config)?
        )
        .into_bytes();
        body(&mut buf)?;
        fs::write(self.dir.join(name), buf)?;
        Ok(())
    }
}

/// Parse `args` (program name first), run, and return the process exit code:
/// 0 success, 1 failed verification suite, 2 validation error or bad usage,
/// 3 resolution error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("curvelab: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Propagate {
            common,
            m,
            t,
            x_min,
            x_max,
            points,
        } => {
            let mut cfg: PropagateConfig = load_config(common.config.as_deref())?;
            if let Some(m) = m {
                cfg.symbol = SymbolSpec::Power { m };
            }
            if let Some(t) = t {
                cfg.times = t;
            }
            cfg.x_min = x_min.unwrap_or(cfg.x_min);
            cfg.x_max = x_max.unwrap_or(cfg.x_max);
            cfg.points = points.unwrap_or(cfg.points);
            cfg.seed = common.seed.unwrap_or(cfg.seed);
            run_propagate(&cfg, &common.out)
        }
        Command::Maximal {
            common,
            m,
            kappa,
            alpha,
            s,
            n_t,
            converge_levels,
        } => {
            let mut cfg: MaximalConfig = load_config(common.config.as_deref())?;
            if let Some(m) = m {
                cfg.symbol = SymbolSpec::Power { m };
            }
            if let Some(k) = kappa {
                set_curve_kappa(&mut cfg.curve, k);
            }
            if let Some(a) = alpha {
                set_measure_alpha(&mut cfg.measure, a)?;
            }
            cfg.s = s.unwrap_or(cfg.s);
            cfg.time_grid.n_t = n_t.unwrap_or(cfg.time_grid.n_t);
            cfg.converge_levels = converge_levels.unwrap_or(cfg.converge_levels);
            cfg.seed = common.seed.unwrap_or(cfg.seed);
            run_maximal(&cfg, &common.out)
        }
        Command::Scaling {
            common,
            family,
            m,
            kappa,
            alpha,
            s,
            lambda,
        } => {
            let mut cfg: ScalingConfig = load_config(common.config.as_deref())?;
            cfg.family = family.unwrap_or(cfg.family);
            cfg.m = m.unwrap_or(cfg.m);
            cfg.kappa = kappa.unwrap_or(cfg.kappa);
            cfg.alpha = alpha.unwrap_or(cfg.alpha);
            cfg.s = s.unwrap_or(cfg.s);
            if let Some(l) = lambda {
                cfg.lambdas = parse_lambdas(&l)?;
            }
            cfg.seed = common.seed.unwrap_or(cfg.seed);
            run_scaling(&cfg, &common.out)
        }
        Command::Kernel {
            common,
            lambda,
            m,
            kappa,
            alpha,
            amplitude,
            region,
            pairs,
        } => {
            let mut cfg: KernelConfig = load_config(common.config.as_deref())?;
            cfg.lambda = lambda.unwrap_or(cfg.lambda);
            if let Some(m) = m {
                cfg.symbol = SymbolSpec::Power { m };
            }
            if let Some(k) = kappa {
                set_curve_kappa(&mut cfg.curve, k);
            }
            if let Some(amplitude) = amplitude {
                let kappa = match cfg.curve {
                    CurveSpec::Vertical => 1.0,
                    CurveSpec::Power { kappa } | CurveSpec::ShiftedPower { kappa, .. } => kappa,
                };
                cfg.curve = CurveSpec::ShiftedPower { kappa, amplitude };
            }
            cfg.alpha = alpha.unwrap_or(cfg.alpha);
            if let Some(r) = region {
                cfg.region = match r {
                    RegionArg::V2 => Region::V2,
                    RegionArg::V3 => Region::V3,
                };
            }
            cfg.pairs = pairs.unwrap_or(cfg.pairs);
            cfg.seed = common.seed.unwrap_or(cfg.seed);
            run_kernel(&cfg, &common.out)
        }
        Command::Sharpness {
            common,
            family,
            lambda,
            m,
            kappa,
            alpha,
            s,
        } => {
            let mut cfg: SharpnessConfig = load_config(common.config.as_deref())?;
            let ce = &mut cfg.counterexample;
            if let Some(f) = family {
                ce.family = match f {
                    FamilyArg::F1 => Family::F1,
                    FamilyArg::F2 => Family::F2,
                };
            }
            ce.lambda = lambda.unwrap_or(ce.lambda);
            ce.m = m.unwrap_or(ce.m);
            ce.kappa = kappa.unwrap_or(ce.kappa);
            cfg.alpha = alpha.unwrap_or(cfg.alpha);
            cfg.s = s.unwrap_or(cfg.s);
            cfg.seed = common.seed.unwrap_or(cfg.seed);
            run_sharpness(&cfg, &common.out)
        }
        Command::Verify { common, suite } => {
            let mut cfg: VerifyConfig = load_config(common.config.as_deref())?;
            cfg.suite = suite.unwrap_or(cfg.suite);
            cfg.seed = common.seed.unwrap_or(cfg.seed);
            run_verify(&cfg, &common.out)
        }
    }
}

fn prepare<'a, C: Serialize>(dir: &'a Path, command: &'static str, cfg: &C) -> Result<Output<'a>> {
    fs::create_dir_all(dir)?;
    Ok(Output {
        dir,
        command,
        config: serde_json::to_value(cfg)?,
    })
}

pub fn run_propagate(cfg: &PropagateConfig, dir: &Path) -> Result<i32> {
    let sym = DispersionSymbol::from_spec(&cfg.symbol)?;
    let sig = cfg.signal.build(&sym, cfg.seed)?;
    if sig.aliasing() {
        return Err(LabError::validation("signal is flagged as aliased; widen its frequency grid"));
    }
    if cfg.points < 2 || !(cfg.x_min < cfg.x_max) || cfg.times.is_empty() {
        return Err(LabError::validation("need x_min < x_max, >= 2 points and >= 1 time"));
    }
    let xs: Vec<f64> = (0..cfg.points)
        .map(|k| cfg.x_min + (cfg.x_max - cfg.x_min) * k as f64 / (cfg.points - 1) as f64)
        .collect();
    let x_abs = cfg.x_min.abs().max(cfg.x_max.abs());
    let h0 = SobolevParams::new(0.0)?;
    let base = sobolev_norm(&sig, h0);
    let mut rows: Vec<(f64, f64, C64)> = vec![];
    let mut norms = vec![];
    for &t in &cfg.times {
        check_resolution(sig.grid(), &sym, x_abs, t.abs())?;
        let slice = crate::dispersion::FieldSlice::new(&sig, t, &sym);
        rows.extend(xs.iter().map(|&x| (t, x, slice.at(x))));
        norms.push(json!({"t": t, "l2_norm": sobolev_norm(&propagate_grid(&sig, t, &sym), h0)}));
    }
    let out = prepare(dir, "propagate", cfg)?;
    out.csv("propagate.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["t", "x", "re", "im", "abs"])?;
        for (t, x, v) in &rows {
            w.write_record(&[t.to_string(), x.to_string(), v.re.to_string(), v.im.to_string(), v.norm().to_string()])?;
        }
        w.flush()?;
        Ok(())
    })?;
    out.manifest(
        "propagate.json",
        json!({"initial_l2_norm": base, "norms": norms, "csv": "propagate.csv"}),
    )?;
    Ok(0)
}

pub fn run_maximal(cfg: &MaximalConfig, dir: &Path) -> Result<i32> {
    let sym = DispersionSymbol::from_spec(&cfg.symbol)?;
    let curve = CurveFamily::from_spec(&cfg.curve)?;
    let mu = FrostmanMeasure::from_spec(&cfg.measure)?;
    let sp = SobolevParams::new(cfg.s)?;
    cfg.time_grid.validate()?;
    let sig = cfg.signal.build(&sym, cfg.seed)?;
    if sig.is_zero() {
        return Err(LabError::validation("maximal ratio is undefined for a zero signal"));
    }
    let conv = maximal_norm_converged(&sig, &curve, &sym, &cfg.time_grid, &mu, cfg.method, cfg.converge_levels)?;
    let hs = sobolev_norm(&sig, sp);
    let out = prepare(dir, "maximal", cfg)?;
    out.csv("maximal.csv", |buf| conv.profile.write_csv(buf))?;
    out.manifest(
        "maximal.json",
        json!({
            "maximal_norm": conv.norm,
            "sobolev_norm": hs,
            "ratio": conv.norm / hs,
            "converged": conv.converged,
            "norm_history": conv.history,
            "final_refinement_level": conv.grid.refinement_level,
            "frostman_c": mu.frostman_c(),
            "atoms": mu.len(),
            "csv": "maximal.csv",
        }),
    )?;
    Ok(0)
}

fn fit_json(fit: &ScalingFit, predicted: Option<f64>) -> Value {
    json!({
        "slope": fit.slope,
        "predicted_slope": predicted,
        "intercept": fit.intercept,
        "max_residual": fit.max_residual,
    })
}

pub fn run_scaling(cfg: &ScalingConfig, dir: &Path) -> Result<i32> {
    let (rows, fits): (Vec<[f64; 4]>, Vec<(&str, ScalingFit, Option<f64>)>) = match cfg.family {
        ScalingFamily::F1 => {
            let r = f1_sweep(cfg.m, cfg.kappa, cfg.alpha, cfg.s, &cfg.lambdas, cfg.cells, cfg.time_nodes)?;
            let rows = (0..r.lambdas.len())
                .map(|i| [r.lambdas[i], r.norm_fit.values[i], r.sobolev_fit.values[i], r.ratio_fit.values[i]])
                .collect();
            (
                rows,
                vec![
                    ("maximal_norm", r.norm_fit, Some(r.predicted_norm_slope)),
                    ("sobolev_norm", r.sobolev_fit, Some(r.predicted_sobolev_slope)),
                    ("ratio", r.ratio_fit, Some(r.predicted_norm_slope - r.predicted_sobolev_slope)),
                ],
            )
        }
        ScalingFamily::F2 => {
            let r = f2_sweep(cfg.m, cfg.kappa, cfg.alpha, cfg.s, &cfg.lambdas, cfg.cells)?;
            let rows = (0..r.lambdas.len())
                .map(|i| {
                    [r.lambdas[i], r.graph_norm_fit.values[i], r.sobolev_fit.values[i], r.ratio_fit.values[i]]
                })
                .collect();
            (
                rows,
                vec![
                    ("graph_norm", r.graph_norm_fit, Some(0.0)),
                    ("sobolev_norm", r.sobolev_fit, Some(r.predicted_sobolev_slope)),
                    ("ratio", r.ratio_fit, Some(-r.predicted_sobolev_slope)),
                ],
            )
        }
        ScalingFamily::Band => {
            let exp = BandExperiment {
                m: cfg.m,
                kappa: cfg.kappa,
                alpha: cfg.alpha,
                s: cfg.s,
                seed: cfg.seed,
                ..cfg.band
            };
            let (pts, fit) = band_sweep(&exp, &cfg.lambdas)?;
            let rows = pts
                .iter()
                .map(|p| [p.lambda, p.maximal_norm, p.sobolev_norm, p.ratio])
                .collect();
            let bound = 0.5 - s_star(cfg.m, cfg.alpha, cfg.kappa)? - cfg.s;
            (rows, vec![("ratio", fit, Some(bound))])
        }
    };
    let out = prepare(dir, "scaling", cfg)?;
    out.csv("scaling.csv", |buf| {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(buf);
        w.write_record(["lambda", "norm", "sobolev_norm", "ratio"])?;
        for r in &rows {
            w.write_record(r.iter().map(|v| v.to_string()))?;
        }
        w.write_record(["fit", "slope", "predicted_slope", "intercept", "max_residual"])?;
        for (name, fit, pred) in &fits {
            w.write_record(&[
                name.to_string(),
                fit.slope.to_string(),
                pred.map(|p| p.to_string()).unwrap_or_default(),
                fit.intercept.to_string(),
                fit.max_residual.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    })?;
    let extra = match cfg.family {
        ScalingFamily::F1 => json!({"predicted_f1_exponent": predicted_f1_exponent(cfg.m, cfg.kappa, cfg.alpha)?}),
        ScalingFamily::F2 => json!({}),
        ScalingFamily::Band => json!({"growth_bound": 0.5 - s_star(cfg.m, cfg.alpha, cfg.kappa)?}),
    };
    let fits_json: serde_json::Map<String, Value> = fits
        .iter()
        .map(|(n, f, p)| (n.to_string(), fit_json(f, *p)))
        .collect();
    out.manifest("scaling.json", json!({"fits": fits_json, "details": extra, "csv": "scaling.csv"}))?;
    Ok(0)
}

pub fn run_kernel(cfg: &KernelConfig, dir: &Path) -> Result<i32> {
    let kp = KernelParams::new(
        cfg.lambda,
        DispersionSymbol::from_spec(&cfg.symbol)?,
        CurveFamily::from_spec(&cfg.curve)?,
        cfg.alpha,
    )?;
    let (fit, samples) = kernel_envelope_fit(&kp, cfg.region, cfg.pairs, cfg.seed)?;
    let out = prepare(dir, "kernel", cfg)?;
    let name = format!("kernel_{}.csv", format!("{:?}", cfg.region).to_lowercase());
    out.csv(&name, |buf| write_kernel_csv(buf, &kp, &fit, &samples))?;
    out.manifest(
        "kernel.json",
        json!({
            "s_star": kp.s_star,
            "v1_radius": kp.v1_radius(),
            "decay_exponent": fit.decay_exponent,
            "theory_exponent": fit.theory_exponent,
            "envelope_constant": fit.envelope_constant,
            "max_trivial_ratio": fit.max_trivial_ratio,
            "trivial_bound_holds": fit.trivial_bound_holds,
            "bins": fit.bins,
            "csv": name,
        }),
    )?;
    Ok(0)
}

pub fn run_sharpness(cfg: &SharpnessConfig, dir: &Path) -> Result<i32> {
    let ce = &cfg.counterexample;
    ce.validate()?;
    let curve = ce.curve()?;
    let m = ce.m;
    let algebra = json!({
        "threshold": threshold(m, ce.kappa, cfg.alpha)?,
        "s_star": s_star(m, cfg.alpha, ce.kappa)?,
        "predicted_f1_exponent": predicted_f1_exponent(m, ce.kappa, cfg.alpha)?,
        "dim_bound": if cfg.s > 0.25 { Some(dim_bound(cfg.s, m, ce.kappa)?) } else { None },
    });
    let out = prepare(dir, "sharpness", cfg)?;
    let bound = match ce.family {
        Family::F1 => {
            let (xw, _) = f1_windows(ce);
            let mu = window_measure(cfg.alpha, xw, cfg.cells)?;
            serde_json::to_value(verify_lower_bound_f1(ce, &curve, &mu)?)?
        }
        Family::F2 => {
            let mu = window_measure(cfg.alpha, 0.01, cfg.cells)?;
            let r = verify_lower_bound_f2(ce, &curve, &mu)?;
            out.csv("sharpness_graph.csv", |buf| {
                let mut w = csv::Writer::from_writer(buf);
                w.write_record(["x", "t", "abs_value"])?;
                for s in &r.samples {
                    w.write_record(&[s.x.to_string(), s.t.to_string(), s.value.to_string()])?;
                }
                w.flush()?;
                Ok(())
            })?;
            serde_json::to_value(&r)?
        }
    };
    out.manifest(
        "sharpness.json",
        json!({
            "algebra": algebra,
            "lower_bound": bound,
            "c0_note": "pass constant c0 is an engineering choice, not a derived constant",
        }),
    )?;
    Ok(0)
}

pub fn run_verify(cfg: &VerifyConfig, dir: &Path) -> Result<i32> {
    let report = run_suite(cfg.suite, cfg.seed)?;
    let out = prepare(dir, "verify", cfg)?;
    let name = format!("verify_{}.json", serde_json::to_value(cfg.suite)?.as_str().unwrap_or("suite"));
    out.manifest(&name, serde_json::to_value(&report)?)?;
    Ok(if report.pass { 0 } else { 1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_parsing() {
        assert_eq!(parse_lambdas("16..128").unwrap(), vec![16.0, 32.0, 64.0, 128.0]);
        assert_eq!(parse_lambdas("3, 5").unwrap(), vec![3.0, 5.0]);
        assert!(parse_lambdas("8..4").is_err());
        assert!(parse_lambdas("x").is_err());
    }

    #[test]
    fn configs_round_trip_through_json() {
        let cfg = MaximalConfig::default();
        let v = serde_json::to_value(&cfg).unwrap();
        assert_eq!(serde_json::from_value::<MaximalConfig>(v).unwrap(), cfg);
        let bad = json!({"symbol": {"kind": "power", "m": 2.0}, "bogus": 1});
        assert!(serde_json::from_value::<MaximalConfig>(bad).is_err());
        let sc = SharpnessConfig::default();
        let v = serde_json::to_value(&sc).unwrap();
        assert_eq!(serde_json::from_value::<SharpnessConfig>(v).unwrap(), sc);
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        assert_eq!(run(["curvelab", "verify", "--bogus"]), 2);
        assert_eq!(run(["curvelab", "frobnicate"]), 2);
    }
}
