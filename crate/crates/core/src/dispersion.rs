//! Dispersion symbols and the evolution `S_t f(x) = (2π)^{-1} ∫ e^{i(xξ + tΦ(ξ))} f̂(ξ) dξ`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::spectral::{FrequencyGrid, FrequencySignal};

/// Largest phase advance per frequency node accepted by off-grid evaluation.
pub const MAX_PHASE_STEP: f64 = PI / 4.0;

/// Margin by which both symbol ratios must stay above zero to pass.
pub const SYMBOL_MARGIN: f64 = 1e-6;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A general phase `Φ` with caller-supplied derivatives.
#[derive(Clone)]
pub struct GeneralSymbol {
    pub label: String,
    /// Reference order `m` used in `|ξ|^{2-m}|Φ''(ξ)| ≥ C₃`.
    pub order: f64,
    pub phi: RealFn,
    pub d1: RealFn,
    pub d2: Option<RealFn>,
}

impl fmt::Debug for GeneralSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneralSymbol")
            .field("label", &self.label)
            .field("order", &self.order)
            .field("has_d2", &self.d2.is_some())
            .finish()
    }
}

#[derive(Debug, Clone)]
pub enum DispersionSymbol {
    /// `Φ(ξ) = |ξ|^m`, `m > 1`.
    Power { m: f64 },
    General(GeneralSymbol),
}

impl DispersionSymbol {
    pub fn power(m: f64) -> Result<Self> {
        if !(m > 1.0 && m.is_finite()) {
            return Err(LabError::validation(format!(
                "power symbol needs m > 1, got {m}"
            )));
        }
        Ok(DispersionSymbol::Power { m })
    }

    pub fn general(
        label: impl Into<String>,
        order: f64,
        phi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2: Option<RealFn>,
    ) -> Self {
        DispersionSymbol::General(GeneralSymbol {
            label: label.into(),
            order,
            phi: Arc::new(phi),
            d1: Arc::new(d1),
            d2,
        })
    }

    /// Reference order `m`.
    pub fn order(&self) -> f64 {
        match self {
            DispersionSymbol::Power { m } => *m,
            DispersionSymbol::General(g) => g.order,
        }
    }

    #[inline]
    pub fn phase(&self, xi: f64) -> f64 {
        match self {
            DispersionSymbol::Power { m } => xi.abs().powf(*m),
            DispersionSymbol::General(g) => (g.phi)(xi),
        }
    }

    #[inline]
    pub fn d1(&self, xi: f64) -> f64 {
        match self {
            DispersionSymbol::Power { m } => m * xi.signum() * xi.abs().powf(m - 1.0),
            DispersionSymbol::General(g) => (g.d1)(xi),
        }
    }

    pub fn d2(&self, xi: f64) -> Option<f64> {
        match self {
            DispersionSymbol::Power { m } => Some(m * (m - 1.0) * xi.abs().powf(m - 2.0)),
            DispersionSymbol::General(g) => g.d2.as_ref().map(|f| f(xi)),
        }
    }

    /// `max_j |Φ'(ξ_j)|` over a grid.
    pub fn max_group_speed(&self, grid: &FrequencyGrid) -> f64 {
        match self {
            DispersionSymbol::Power { m } => m * grid.max_abs_node().powf(m - 1.0),
            DispersionSymbol::General(_) => grid.nodes().map(|xi| self.d1(xi).abs()).fold(0.0, f64::max),
        }
    }

    pub fn from_spec(spec: &SymbolSpec) -> Result<Self> {
        match spec {
            SymbolSpec::Power { m } => Self::power(*m),
            SymbolSpec::Table(t) => t.to_symbol(),
        }
    }
}

/// Config form: `{"kind":"power","m":2.0}` or `{"kind":"table", ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SymbolSpec {
    Power { m: f64 },
    Table(TableSpec),
}

/// Tabulated `Φ`, `Φ'` and `Φ''` on increasing nodes.
///
/// `Φ` is interpolated by cubic Hermite from `(Φ, Φ')`, `Φ''` linearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSpec {
    pub m: f64,
    pub xi: Vec<f64>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    #[serde(default)]
    pub d2phi: Option<Vec<f64>>,
}

impl TableSpec {
    fn to_symbol(&self) -> Result<DispersionSymbol> {
        let n = self.xi.len();
        if n < 2 || self.phi.len() != n || self.dphi.len() != n {
            return Err(LabError::validation("symbol table arrays must align (>= 2 rows)"));
        }
        if self.xi.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LabError::validation("symbol table nodes must increase"));
        }
        let d2 = match &self.d2phi {
            Some(v) if v.len() == n => v.clone(),
            Some(_) => return Err(LabError::validation("d2phi length mismatch")),
            None => {
                return Err(LabError::validation(
                    "symbol table lacks second-derivative data",
                ))
            }
        };
        let table = Arc::new(HermiteTable {
            xi: self.xi.clone(),
            phi: self.phi.clone(),
            dphi: self.dphi.clone(),
            d2phi: d2,
        });
        let (t0, t1, t2) = (table.clone(), table.clone(), table);
        Ok(DispersionSymbol::General(GeneralSymbol {
            label: "table".into(),
            order: self.m,
            phi: Arc::new(move |x| t0.value(x)),
            d1: Arc::new(move |x| t1.derivative(x)),
            d2: Some(Arc::new(move |x| t2.second(x))),
        }))
    }
}

struct HermiteTable {
    xi: Vec<f64>,
    phi: Vec<f64>,
    dphi: Vec<f64>,
    d2phi: Vec<f64>,
}

impl HermiteTable {
    /// Interval index and local coordinate, clamped to the table range.
    fn locate(&self, x: f64) -> (usize, f64, f64) {
        let n = self.xi.len();
        let k = self.xi.partition_point(|&v| v <= x).clamp(1, n - 1) - 1;
        let h = self.xi[k + 1] - self.xi[k];
        ((k), ((x - self.xi[k]) / h).clamp(0.0, 1.0), h)
    }

    fn value(&self, x: f64) -> f64 {
        let (k, s, h) = self.locate(x);
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.phi[k] + h10 * h * self.dphi[k] + h01 * self.phi[k + 1] + h11 * h * self.dphi[k + 1]
    }

    fn derivative(&self, x: f64) -> f64 {
        let (k, s, h) = self.locate(x);
        let s2 = s * s;
        let d00 = 6.0 * s2 - 6.0 * s;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = -6.0 * s2 + 6.0 * s;
        let d11 = 3.0 * s2 - 2.0 * s;
        (d00 * self.phi[k] + d01 * self.phi[k + 1]) / h + d10 * self.dphi[k] + d11 * self.dphi[k + 1]
    }

    fn second(&self, x: f64) -> f64 {
        let (k, s, _) = self.locate(x);
        (1.0 - s) * self.d2phi[k] + s * self.d2phi[k + 1]
    }
}

/// Empirical infima of the two convexity ratios over `|ξ| ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymbolReport {
    pub pass: bool,
    /// `inf |ξ|^{2-m}|Φ''(ξ)|`.
    pub c3_est: f64,
    /// `inf |ξ||Φ''(ξ)| / |Φ'(ξ)|`.
    pub c4_est: f64,
    pub samples_used: usize,
}

pub fn validate_symbol(sym: &DispersionSymbol, xi_samples: &[f64]) -> Result<SymbolReport> {
    let m = sym.order();
    let mut c3 = f64::INFINITY;
    let mut c4 = f64::INFINITY;
    let mut used = 0;
    for &xi in xi_samples.iter().filter(|xi| xi.abs() >= 1.0) {
        let d2 = sym
            .d2(xi)
            .ok_or_else(|| LabError::validation("symbol lacks second-derivative data"))?;
        let a = xi.abs();
        c3 = c3.min(a.powf(2.0 - m) * d2.abs());
        let d1 = sym.d1(xi).abs();
        if d1 > 0.0 {
            c4 = c4.min(a * d2.abs() / d1);
        }
        used += 1;
    }
    if used == 0 {
        return Err(LabError::validation("no samples with |xi| >= 1"));
    }
    Ok(SymbolReport {
        pass: c3 >= SYMBOL_MARGIN && c4 >= SYMBOL_MARGIN,
        c3_est: c3,
        c4_est: c4,
        samples_used: used,
    })
}

/// A point `w = (x, t)` of space-time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimePoint {
    pub x: f64,
    pub t: f64,
}

impl SpaceTimePoint {
    pub fn new(x: f64, t: f64) -> Self {
        SpaceTimePoint { x, t }
    }
}

/// Multiply each node by `e^{itΦ(ξ_j)}`.
pub fn propagate_grid(sig: &FrequencySignal, t: f64, sym: &DispersionSymbol) -> FrequencySignal {
    let g = *sig.grid();
    let values = sig
        .values()
        .iter()
        .enumerate()
        .map(|(j, v)| v * C64::cis(t * sym.phase(g.node(j))))
        .collect();
    sig.with_values(values)
}

/// Reject evaluations whose phase advance per node exceeds [`MAX_PHASE_STEP`].
///
/// The advance is bounded by `(|x| + |t|·max|Φ'|)·Δξ`.
pub fn check_resolution(
    grid: &FrequencyGrid,
    sym: &DispersionSymbol,
    x_abs_max: f64,
    t_abs_max: f64,
) -> Result<()> {
    let step = (x_abs_max + t_abs_max * sym.max_group_speed(grid)) * grid.delta();
    if step > MAX_PHASE_STEP || !step.is_finite() {
        return Err(LabError::resolution(format!(
            "phase advance per node {step:.4} exceeds {MAX_PHASE_STEP:.4} \
             (|x| <= {x_abs_max}, |t| <= {t_abs_max}, dxi = {:.3e})",
            grid.delta()
        )));
    }
    Ok(())
}

/// A datum with its phase table `Φ(ξ_j)` cached, for evaluation at many times.
#[derive(Debug, Clone)]
pub struct Evolution {
    xi0: f64,
    dxi: f64,
    base: Vec<C64>,
    phi: Vec<f64>,
}

impl Evolution {
    pub fn new(sig: &FrequencySignal, sym: &DispersionSymbol) -> Self {
        let g = *sig.grid();
        let w = g.delta() / (2.0 * PI);
        Evolution {
            xi0: g.node(0),
            dxi: g.delta(),
            base: sig.values().iter().map(|v| v * w).collect(),
            phi: g.nodes().map(|xi| sym.phase(xi)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    pub fn first_node(&self) -> f64 {
        self.xi0
    }

    pub fn spacing(&self) -> f64 {
        self.dxi
    }

    /// `c_j = f̂_j e^{itΦ(ξ_j)} Δξ / 2π`.
    pub fn coefficients(&self, t: f64) -> Vec<C64> {
        self.base
            .iter()
            .zip(&self.phi)
            .map(|(b, p)| b * C64::cis(t * p))
            .collect()
    }

    /// `c_j e^{i y_0 j Δξ}`: coefficients with the origin moved to `y_0`.
    pub fn shifted_coefficients(&self, t: f64, y0: f64) -> Vec<C64> {
        self.base
            .iter()
            .zip(&self.phi)
            .enumerate()
            .map(|(j, (b, p))| b * C64::cis(t * p + y0 * j as f64 * self.dxi))
            .collect()
    }

    pub fn slice(&self, t: f64) -> FieldSlice {
        FieldSlice {
            t,
            xi0: self.xi0,
            dxi: self.dxi,
            coeffs: self.coefficients(t),
        }
    }

    /// One-off evaluation without building a slice.
    pub fn eval(&self, t: f64, y: f64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (j, (b, p)) in self.base.iter().zip(&self.phi).enumerate() {
            acc += b * C64::cis(t * p + y * j as f64 * self.dxi);
        }
        acc * C64::cis(y * self.xi0)
    }
}

/// The evolved datum at one fixed time, ready for repeated off-grid evaluation.
///
/// Holds `c_j = f̂_j e^{itΦ(ξ_j)} Δξ / 2π`; evaluation at `y` is the fixed-order
/// Horner sum `e^{iyξ_0} Σ_j c_j (e^{iyΔξ})^j`.
#[derive(Debug, Clone)]
pub struct FieldSlice {
    t: f64,
    xi0: f64,
    dxi: f64,
    coeffs: Vec<C64>,
}

impl FieldSlice {
    pub fn new(sig: &FrequencySignal, t: f64, sym: &DispersionSymbol) -> Self {
        Evolution::new(sig, sym).slice(t)
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    #[inline]
    pub fn at(&self, y: f64) -> C64 {
        let z = C64::cis(y * self.dxi);
        let mut acc = C64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc * C64::cis(y * self.xi0)
    }
}

/// `S_t f(x)` at one space-time point.
pub fn evaluate_field(
    sig: &FrequencySignal,
    p: SpaceTimePoint,
    sym: &DispersionSymbol,
) -> Result<C64> {
    if sig.aliasing() {
        return Err(LabError::validation(
            "signal is flagged as aliased; widen its frequency grid",
        ));
    }
    check_resolution(sig.grid(), sym, p.x.abs(), p.t.abs())?;
    Ok(FieldSlice::new(sig, p.t, sym).at(p.x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{sobolev_norm, SobolevParams};

    fn gaussian_hat(n: usize) -> FrequencySignal {
        let grid = FrequencyGrid::symmetric(12.0, n).unwrap();
        FrequencySignal::from_fn(grid, |xi| {
            C64::new((2.0 * PI).sqrt() * (-xi * xi / 2.0).exp(), 0.0)
        })
        .unwrap()
    }

    #[test]
    fn power_symbol_constants() {
        let samples: Vec<f64> = (0..400).map(|k| -20.0 + 0.1 * k as f64).collect();
        let r = validate_symbol(&DispersionSymbol::power(2.0).unwrap(), &samples).unwrap();
        assert!(r.pass);
        assert!((r.c3_est - 2.0).abs() < 1e-10);
        let r = validate_symbol(&DispersionSymbol::power(1.5).unwrap(), &samples).unwrap();
        assert!((r.c3_est - 0.75).abs() < 1e-10);
        assert!((r.c4_est - 0.5).abs() < 1e-10);
    }

    #[test]
    fn linear_phase_fails_and_missing_d2_rejected() {
        let samples = [1.0, 2.0, -3.0];
        let lin = DispersionSymbol::general("linear", 2.0, |x| x, |_| 1.0, Some(Arc::new(|_| 0.0)));
        let r = validate_symbol(&lin, &samples).unwrap();
        assert!(!r.pass);
        assert_eq!(r.c3_est, 0.0);
        let bare = DispersionSymbol::general("bare", 2.0, |x| x * x, |x| 2.0 * x, None);
        assert!(validate_symbol(&bare, &samples).is_err());
        assert!(validate_symbol(&DispersionSymbol::power(2.0).unwrap(), &[0.5]).is_err());
        assert!(DispersionSymbol::power(1.0).is_err());
    }

    #[test]
    fn table_symbol_reproduces_power() {
        let m = 1.7;
        let xi: Vec<f64> = (0..=400).map(|k| 1.0 + 0.05 * k as f64).collect();
        let spec = SymbolSpec::Table(TableSpec {
            m,
            phi: xi.iter().map(|x: &f64| x.powf(m)).collect(),
            dphi: xi.iter().map(|x| m * x.powf(m - 1.0)).collect(),
            d2phi: Some(xi.iter().map(|x| m * (m - 1.0) * x.powf(m - 2.0)).collect()),
            xi: xi.clone(),
        });
        let sym = DispersionSymbol::from_spec(&spec).unwrap();
        for x in [1.01, 3.333, 7.77] {
            assert!((sym.phase(x) - x.powf(m)).abs() < 1e-6);
        }
        let r = validate_symbol(&sym, &xi).unwrap();
        assert!(r.pass && (r.c3_est - m * (m - 1.0)).abs() < 1e-9);

        let json = r#"{"kind":"table","m":2.0,"xi":[1,2],"phi":[1,4],"dphi":[2,4]}"#;
        let spec: SymbolSpec = serde_json::from_str(json).unwrap();
        assert!(DispersionSymbol::from_spec(&spec).is_err());
        let spec: SymbolSpec = serde_json::from_str(r#"{"kind":"power","m":2.0}"#).unwrap();
        assert_eq!(spec, SymbolSpec::Power { m: 2.0 });
    }

    #[test]
    fn propagation_is_unitary_and_additive() {
        let sig = gaussian_hat(256);
        let sym = DispersionSymbol::power(1.5).unwrap();
        assert_eq!(propagate_grid(&sig, 0.0, &sym), sig);
        let a = propagate_grid(&propagate_grid(&sig, 0.3, &sym), -0.7, &sym);
        let b = propagate_grid(&sig, -0.4, &sym);
        for (u, v) in a.values().iter().zip(b.values()) {
            assert!((u - v).norm() < 1e-12);
        }
        let n0 = sobolev_norm(&sig, SobolevParams { s: 0.0 });
        let n1 = sobolev_norm(&a, SobolevParams { s: 0.0 });
        assert!((n0 - n1).abs() < 1e-12 * n0);
    }

    #[test]
    fn identity_at_time_zero() {
        let sig = gaussian_hat(1024);
        let sym = DispersionSymbol::power(2.0).unwrap();
        for x in [-3.0, -0.5, 0.0, 1.25, 4.0] {
            let v = evaluate_field(&sig, SpaceTimePoint::new(x, 0.0), &sym).unwrap();
            assert!((v.re - (-x * x / 2.0f64).exp()).abs() < 1e-6);
        }
        let zero = FrequencySignal::zeros(*sig.grid()).unwrap();
        assert_eq!(
            evaluate_field(&zero, SpaceTimePoint::new(0.3, 0.2), &sym).unwrap(),
            C64::new(0.0, 0.0)
        );
    }

    #[test]
    fn coarse_grid_is_a_resolution_error() {
        let grid = FrequencyGrid::symmetric(12.0, 16).unwrap();
        let sig = FrequencySignal::from_fn(grid, |_| C64::new(1.0, 0.0)).unwrap();
        let sym = DispersionSymbol::power(2.0).unwrap();
        let err = evaluate_field(&sig, SpaceTimePoint::new(1.0, 0.0), &sym).unwrap_err();
        assert!(matches!(err, LabError::Resolution(_)));
    }
}
