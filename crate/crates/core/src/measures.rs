//! α-dimensional measures on `I = [-1, 1]` as weighted atom lists.
//!
//! Power measures `|x|^{α−1} dx` get exact cell masses from the antiderivative
//! `sign(x)|x|^α / α`, so refining the atom grid never changes the total mass.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Default sample count for the certification performed at construction.
pub const CERTIFICATION_SAMPLES: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct FrostmanMeasure {
    alpha: f64,
    xs: Vec<f64>,
    ws: Vec<f64>,
    prefix: Vec<f64>,
    frostman_c: f64,
    spacing: f64,
    label: String,
}

#[inline]
fn power_antiderivative(x: f64, alpha: f64) -> f64 {
    x.signum() * x.abs().powf(alpha) / alpha
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(LabError::validation(format!(
            "measure dimension alpha must lie in (0, 1], got {alpha}"
        )));
    }
    Ok(())
}

fn uniform_edges(a: f64, b: f64, cells: usize) -> Vec<f64> {
    let h = (b - a) / cells as f64;
    (0..=cells).map(|k| if k == cells { b } else { a + k as f64 * h }).collect()
}

impl FrostmanMeasure {
    fn from_atoms(alpha: f64, atoms: Vec<(f64, f64)>, label: String) -> Result<Self> {
        if atoms.is_empty() {
            return Err(LabError::validation("measure needs at least one atom"));
        }
        let mut atoms = atoms;
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        if atoms.iter().any(|&(x, w)| !(-1.0..=1.0).contains(&x) || !(w > 0.0 && w.is_finite())) {
            return Err(LabError::validation("atoms must lie in I with positive finite mass"));
        }
        let (xs, ws): (Vec<f64>, Vec<f64>) = atoms.into_iter().unzip();
        let mut prefix = Vec::with_capacity(ws.len() + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for &w in &ws {
            acc += w;
            prefix.push(acc);
        }
        let spacing = xs
            .windows(2)
            .map(|p| p[1] - p[0])
            .fold(f64::INFINITY, f64::min);
        let spacing = if spacing.is_finite() { spacing } else { 2.0 };
        let mut mu = FrostmanMeasure {
            alpha,
            xs,
            ws,
            prefix,
            frostman_c: f64::NAN,
            spacing,
            label,
        };
        mu.frostman_c = frostman_constant(&mu, CERTIFICATION_SAMPLES)?;
        Ok(mu)
    }

    /// `|x|^{α−1} dx` on the cells delimited by `edges`, one atom per cell midpoint.
    pub fn power_on_edges(alpha: f64, edges: &[f64], label: impl Into<String>) -> Result<Self> {
        check_alpha(alpha)?;
        if edges.len() < 2 || edges.windows(2).any(|e| e[1] <= e[0]) {
            return Err(LabError::validation("cell edges must be strictly increasing"));
        }
        let atoms = edges
            .windows(2)
            .map(|e| {
                let w = power_antiderivative(e[1], alpha) - power_antiderivative(e[0], alpha);
                (0.5 * (e[0] + e[1]), w)
            })
            .collect();
        Self::from_atoms(alpha, atoms, label.into())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn positions(&self) -> &[f64] {
        &self.xs
    }

    pub fn weights(&self) -> &[f64] {
        &self.ws
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn frostman_c(&self) -> f64 {
        self.frostman_c
    }

    pub fn total_mass(&self) -> f64 {
        self.prefix[self.xs.len()]
    }

    /// Smallest gap between neighbouring atoms.
    pub fn atom_spacing(&self) -> f64 {
        self.spacing
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Indices of atoms with `a < x_i < b`.
    pub fn indices_in(&self, a: f64, b: f64) -> std::ops::Range<usize> {
        let lo = self.xs.partition_point(|&x| x <= a);
        let hi = self.xs.partition_point(|&x| x < b);
        lo..hi.max(lo)
    }

    pub fn from_spec(spec: &MeasureSpec) -> Result<Self> {
        match *spec {
            MeasureSpec::Power { alpha, atoms } => build_power_measure(alpha, atoms),
            MeasureSpec::Cantor { ratio, depth } => build_cantor_measure(ratio, depth),
            MeasureSpec::Graded {
                alpha,
                cells_per_shell,
                shells,
            } => build_graded_power_measure(alpha, cells_per_shell, shells),
        }
    }
}

/// Config form: `{"kind":"power","alpha":0.5,"atoms":4096}` or
/// `{"kind":"cantor","ratio":0.3333,"depth":12}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureSpec {
    Power { alpha: f64, atoms: usize },
    Cantor { ratio: f64, depth: u32 },
    Graded { alpha: f64, cells_per_shell: usize, shells: u32 },
}

/// `|x|^{α−1} dx` on a uniform grid of `atom_count` cells; total mass `2/α`.
pub fn build_power_measure(alpha: f64, atom_count: usize) -> Result<FrostmanMeasure> {
    check_alpha(alpha)?;
    if atom_count < 100 {
        return Err(LabError::validation("power measure needs >= 100 atoms"));
    }
    FrostmanMeasure::power_on_edges(
        alpha,
        &uniform_edges(-1.0, 1.0, atom_count),
        format!("power(alpha={alpha}, atoms={atom_count})"),
    )
}

/// Lebesgue measure on `I`.
pub fn build_lebesgue_measure(atom_count: usize) -> Result<FrostmanMeasure> {
    build_power_measure(1.0, atom_count)
}

/// Power measure on a uniform grid, with the window `[a, b]` re-gridded into
/// `window_atoms` cells so shrinking windows stay resolved.
pub fn build_power_measure_refined(
    alpha: f64,
    atom_count: usize,
    window: (f64, f64),
    window_atoms: usize,
) -> Result<FrostmanMeasure> {
    check_alpha(alpha)?;
    let (a, b) = window;
    if !(-1.0 <= a && a < b && b <= 1.0) || window_atoms < 1 || atom_count < 100 {
        return Err(LabError::validation("invalid refinement window"));
    }
    let mut edges: Vec<f64> = uniform_edges(-1.0, 1.0, atom_count)
        .into_iter()
        .filter(|&e| e < a || e > b)
        .collect();
    edges.extend(uniform_edges(a, b, window_atoms));
    edges.sort_by(f64::total_cmp);
    // drop slivers left where a coarse edge sits next to the window boundary
    let min_gap = 1e-6 * (b - a) / window_atoms as f64;
    let mut cleaned: Vec<f64> = Vec::with_capacity(edges.len());
    for e in edges {
        match cleaned.last() {
            Some(&last) if e - last <= min_gap => {
                if e == a || e == b {
                    *cleaned.last_mut().unwrap() = e;
                }
            }
            _ => cleaned.push(e),
        }
    }
    FrostmanMeasure::power_on_edges(
        alpha,
        &cleaned,
        format!("power(alpha={alpha}, atoms={atom_count}, window=[{a},{b}]x{window_atoms})"),
    )
}

/// Power measure on a mesh graded towards the origin: each dyadic shell
/// `2^{-k-1} ≤ |x| ≤ 2^{-k}`, `k < shells`, is split into `cells_per_shell`
/// cells and the core `|x| ≤ 2^{-shells}` into two.
pub fn build_graded_power_measure(
    alpha: f64,
    cells_per_shell: usize,
    shells: u32,
) -> Result<FrostmanMeasure> {
    check_alpha(alpha)?;
    if cells_per_shell < 1 || shells < 1 || shells > 60 {
        return Err(LabError::validation("graded mesh needs 1..=60 shells"));
    }
    let mut pos = vec![0.0];
    for k in (0..shells).rev() {
        let (lo, hi) = (0.5f64.powi(k as i32 + 1), 0.5f64.powi(k as i32));
        let shell = uniform_edges(lo, hi, cells_per_shell);
        let start = if pos.len() == 1 { 0 } else { 1 };
        pos.extend_from_slice(&shell[start..]);
    }
    let mut edges: Vec<f64> = pos.iter().rev().skip(0).map(|&p| -p).collect();
    edges.pop();
    edges.extend_from_slice(&pos);
    FrostmanMeasure::power_on_edges(
        alpha,
        &edges,
        format!("graded_power(alpha={alpha}, cells_per_shell={cells_per_shell}, shells={shells})"),
    )
}

/// Self-similar Cantor measure with contraction `ratio`, mapped from `[0,1]`
/// onto `I`: `2^depth` equal atoms at the generation-`depth` interval midpoints.
pub fn build_cantor_measure(ratio: f64, depth: u32) -> Result<FrostmanMeasure> {
    if !(ratio > 0.0 && ratio < 0.5) {
        return Err(LabError::validation("cantor ratio must lie in (0, 1/2)"));
    }
    if depth > 30 {
        return Err(LabError::validation("cantor depth must be <= 30"));
    }
    let mut starts = vec![0.0f64];
    let mut len = 1.0f64;
    for _ in 0..depth {
        let child = len * ratio;
        starts = starts
            .iter()
            .flat_map(|&s| [s, s + len - child])
            .collect();
        len = child;
    }
    let w = 0.5f64.powi(depth as i32);
    let atoms = starts
        .iter()
        .map(|&s| (2.0 * (s + 0.5 * len) - 1.0, w))
        .collect();
    let alpha = 2f64.ln() / (1.0 / ratio).ln();
    FrostmanMeasure::from_atoms(alpha, atoms, format!("cantor(ratio={ratio}, depth={depth})"))
}

/// `μ(B(x, r))` for the closed ball.
pub fn ball_mass(mu: &FrostmanMeasure, x: f64, r: f64) -> f64 {
    let lo = mu.xs.partition_point(|&v| v < x - r);
    let hi = mu.xs.partition_point(|&v| v <= x + r);
    if hi <= lo {
        0.0
    } else {
        mu.prefix[hi] - mu.prefix[lo]
    }
}

/// Dyadic radii `2, 1, 1/2, ...` down to four atom spacings.
pub fn certification_radii(mu: &FrostmanMeasure) -> Vec<f64> {
    let floor = 4.0 * mu.spacing;
    let mut r = 2.0;
    let mut out = vec![];
    while r >= floor && out.len() < 200 {
        out.push(r);
        r *= 0.5;
    }
    if out.is_empty() {
        out.push(2.0);
    }
    out
}

/// Certification centers: `sample_count` uniform points of `I` plus the origin.
pub fn certification_centers(sample_count: usize) -> Vec<f64> {
    let mut xs: Vec<f64> = (0..sample_count)
        .map(|k| -1.0 + 2.0 * k as f64 / (sample_count - 1) as f64)
        .collect();
    xs.push(0.0);
    xs
}

/// `max μ(B(x,r)) / r^α` over the certification grid.
pub fn frostman_constant(mu: &FrostmanMeasure, sample_count: usize) -> Result<f64> {
    if sample_count < 1000 {
        return Err(LabError::validation("frostman certification needs >= 1000 samples"));
    }
    let radii = certification_radii(mu);
    let mut c = 0.0f64;
    for x in certification_centers(sample_count) {
        for &r in &radii {
            c = c.max(ball_mass(mu, x, r) / r.powf(mu.alpha));
        }
    }
    Ok(c)
}

/// `(Σ w_i v_i²)^{1/2}`.
pub fn integrate_l2_mu(values: &[f64], mu: &FrostmanMeasure) -> Result<f64> {
    if values.len() != mu.len() {
        return Err(LabError::validation(format!(
            "{} values for {} atoms",
            values.len(),
            mu.len()
        )));
    }
    Ok(values
        .iter()
        .zip(&mu.ws)
        .map(|(v, w)| w * v * v)
        .sum::<f64>()
        .sqrt())
}
