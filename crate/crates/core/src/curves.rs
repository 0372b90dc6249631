//! Curves `γ(x, t)` of the class `Γ(κ)`: `γ(x,0) = x`, Hölder of order `κ` in
//! `t` with constant `C₁`, bilipschitz in `x` with constant `C₂`.
//!
//! For `κ < 1` the power family is extended to negative times oddly,
//! `γ(x,t) = x − sign(t)|t|^κ`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

type CurveFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum CurveKind {
    Vertical,
    Power,
    /// `x − a·sign(t)|t|^κ`.
    ShiftedPower { amplitude: f64 },
    User(CurveFn),
}

impl fmt::Debug for CurveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CurveKind::Vertical => write!(f, "Vertical"),
            CurveKind::Power => write!(f, "Power"),
            CurveKind::ShiftedPower { amplitude } => write!(f, "ShiftedPower({amplitude})"),
            CurveKind::User(_) => write!(f, "User"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CurveFamily {
    pub kind: CurveKind,
    pub kappa: f64,
    pub c1: f64,
    pub c2: f64,
}

#[inline]
fn odd_power(t: f64, kappa: f64) -> f64 {
    t.signum() * t.abs().powf(kappa)
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(LabError::validation(format!(
            "curve exponent kappa must lie in (0, 1], got {kappa}"
        )));
    }
    Ok(())
}

impl CurveFamily {
    pub fn vertical() -> Self {
        CurveFamily {
            kind: CurveKind::Vertical,
            kappa: 1.0,
            c1: 0.0,
            c2: 1.0,
        }
    }

    /// `γ(x,t) = x − sign(t)|t|^κ`; the odd extension has `C₁ = 2^{1−κ}`.
    pub fn power(kappa: f64) -> Result<Self> {
        check_kappa(kappa)?;
        Ok(CurveFamily {
            kind: CurveKind::Power,
            kappa,
            c1: 2f64.powf(1.0 - kappa),
            c2: 1.0,
        })
    }

    pub fn shifted_power(kappa: f64, amplitude: f64) -> Result<Self> {
        check_kappa(kappa)?;
        if !amplitude.is_finite() {
            return Err(LabError::validation("curve amplitude must be finite"));
        }
        Ok(CurveFamily {
            kind: CurveKind::ShiftedPower { amplitude },
            kappa,
            c1: amplitude.abs() * 2f64.powf(1.0 - kappa),
            c2: 1.0,
        })
    }

    /// A user curve; constants are taken from [`verify_curve_class`].
    pub fn user(
        kappa: f64,
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        sample_count: usize,
        seed: u64,
    ) -> Result<Self> {
        check_kappa(kappa)?;
        let mut c = CurveFamily {
            kind: CurveKind::User(Arc::new(f)),
            kappa,
            c1: f64::NAN,
            c2: f64::NAN,
        };
        let cert = verify_curve_class(&c, sample_count, seed)?;
        if !cert.pass {
            return Err(LabError::validation("user curve failed certification"));
        }
        c.c1 = cert.c1_est;
        c.c2 = cert.c2_est;
        Ok(c)
    }

    /// Position without the domain check.
    #[inline]
    pub fn position(&self, x: f64, t: f64) -> f64 {
        match &self.kind {
            CurveKind::Vertical => x,
            CurveKind::Power => x - odd_power(t, self.kappa),
            CurveKind::ShiftedPower { amplitude } => x - amplitude * odd_power(t, self.kappa),
            CurveKind::User(f) => f(x, t),
        }
    }

    /// The `x ∈ I` with `γ(x, t) = y`, if any. User curves are inverted by
    /// bisection, which the bilipschitz condition makes well posed.
    pub fn invert_x(&self, y: f64, t: f64) -> Option<f64> {
        let x = match &self.kind {
            CurveKind::Vertical => y,
            CurveKind::Power => y + odd_power(t, self.kappa),
            CurveKind::ShiftedPower { amplitude } => y + amplitude * odd_power(t, self.kappa),
            CurveKind::User(f) => {
                let (mut lo, mut hi) = (-1.0, 1.0);
                let (flo, fhi) = (f(lo, t) - y, f(hi, t) - y);
                if flo == 0.0 {
                    return Some(lo);
                }
                if flo * fhi > 0.0 {
                    return None;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if (f(mid, t) - y) * flo > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        };
        (-1.0..=1.0).contains(&x).then_some(x)
    }

    pub fn from_spec(spec: &CurveSpec) -> Result<Self> {
        match *spec {
            CurveSpec::Vertical => Ok(Self::vertical()),
            CurveSpec::Power { kappa } => Self::power(kappa),
            CurveSpec::ShiftedPower { kappa, amplitude } => Self::shifted_power(kappa, amplitude),
        }
    }
}

/// Config form: `{"kind":"power","kappa":0.5}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurveSpec {
    Vertical,
    Power { kappa: f64 },
    ShiftedPower { kappa: f64, amplitude: f64 },
}

pub fn curve_eval(c: &CurveFamily, x: f64, t: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&t) {
        return Err(LabError::validation(format!("time {t} outside [-1, 1]")));
    }
    Ok(c.position(x, t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveCertificate {
    pub c1_est: f64,
    pub c2_est: f64,
    pub pass: bool,
}

/// Empirical Hölder and bilipschitz constants over seeded samples of `I`.
///
/// Besides uniform triples, each draw also tests the antipodal pair
/// `(t, −t)` and the anchored pair `(t, 0)`, where odd extensions are extremal.
pub fn verify_curve_class(c: &CurveFamily, sample_count: usize, seed: u64) -> Result<CurveCertificate> {
    if sample_count < 1000 {
        return Err(LabError::validation("curve certification needs >= 1000 samples"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = c.kappa;
    let mut c1 = 0.0f64;
    let mut c2 = 1.0f64;
    let mut anchor = 0.0f64;
    for _ in 0..sample_count {
        let x: f64 = rng.gen_range(-1.0..=1.0);
        let t: f64 = rng.gen_range(-1.0..=1.0);
        let tp: f64 = rng.gen_range(-1.0..=1.0);
        for (a, b) in [(t, tp), (t, -t), (t, 0.0)] {
            let dt = (a - b).abs();
            if dt > 0.0 {
                c1 = c1.max((c.position(x, a) - c.position(x, b)).abs() / dt.powf(k));
            }
        }
        anchor = anchor.max((c.position(x, 0.0) - x).abs());

        let xp: f64 = rng.gen_range(-1.0..=1.0);
        let dx = (x - xp).abs();
        if dx > 0.0 {
            let r = (c.position(x, t) - c.position(xp, t)).abs() / dx;
            c2 = c2.max(r).max(1.0 / r);
        }
    }
    Ok(CurveCertificate {
        c1_est: c1,
        c2_est: c2,
        pass: c1.is_finite() && c2.is_finite() && anchor <= 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluation_examples() {
        let p = CurveFamily::power(0.5).unwrap();
        assert_eq!(curve_eval(&p, 0.0, 0.25).unwrap(), -0.5);
        assert_eq!(curve_eval(&p, 0.0, -0.25).unwrap(), 0.5);
        let v = CurveFamily::vertical();
        assert_eq!(curve_eval(&v, 0.7, -0.3).unwrap(), 0.7);
        for c in [p, v, CurveFamily::shifted_power(0.3, 5.0).unwrap()] {
            for x in [-1.0, -0.2, 0.0, 0.9] {
                assert_eq!(curve_eval(&c, x, 0.0).unwrap(), x);
            }
            assert!(curve_eval(&c, 0.0, 1.5).is_err());
        }
        assert!(CurveFamily::power(0.0).is_err());
        assert!(CurveFamily::power(1.2).is_err());
    }

    #[test]
    fn certification_of_builtins() {
        for kappa in [0.1, 0.5, 1.0] {
            let c = CurveFamily::power(kappa).unwrap();
            let cert = verify_curve_class(&c, 2000, 0).unwrap();
            assert!(cert.pass);
            assert!(cert.c1_est <= 2.0 + 1e-12);
            assert!(cert.c1_est <= c.c1 * (1.0 + 1e-12));
            assert!((cert.c2_est - 1.0).abs() < 1e-9);
            let fine = verify_curve_class(&c, 20_000, 0).unwrap();
            assert!((fine.c1_est - cert.c1_est).abs() <= 0.05 * fine.c1_est);
        }
        let v = verify_curve_class(&CurveFamily::vertical(), 1000, 3).unwrap();
        assert_eq!(v.c1_est, 0.0);
        assert!((v.c2_est - 1.0).abs() < 1e-12);
        assert!(verify_curve_class(&CurveFamily::vertical(), 10, 0).is_err());
    }

    #[test]
    fn user_linear_curve() {
        let c = CurveFamily::user(1.0, |x, t| x - t, 1000, 7).unwrap();
        assert!((c.c1 - 1.0).abs() < 1e-9);
        assert!(CurveFamily::user(1.0, |x, t| x - t + 1.0, 1000, 7).is_err());
    }

    #[test]
    fn inversion_round_trips() {
        let curves = [
            CurveFamily::vertical(),
            CurveFamily::power(0.3).unwrap(),
            CurveFamily::shifted_power(0.5, 4.0).unwrap(),
            CurveFamily::user(1.0, |x, t| x + 0.3 * x * t * t - t, 1000, 0).unwrap(),
        ];
        for c in &curves {
            for (x, t) in [(-0.9, 0.1), (0.0, -0.4), (0.7, 0.02)] {
                let y = c.position(x, t);
                let back = c.invert_x(y, t).unwrap();
                assert!((back - x).abs() < 1e-12, "{c:?}: {back} vs {x}");
            }
        }
        assert!(CurveFamily::vertical().invert_x(1.5, 0.0).is_none());
    }

    #[test]
    fn bilipschitz_sandwich_holds_with_certified_constant() {
        let c = CurveFamily::shifted_power(0.4, 3.0).unwrap();
        let cert = verify_curve_class(&c, 1000, 11).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..100_000 {
            let (x, xp, t): (f64, f64, f64) = (
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let d = (c.position(x, t) - c.position(xp, t)).abs();
            let dx = (x - xp).abs();
            assert!(d <= cert.c2_est * dx * (1.0 + 1e-12) + 1e-15);
            assert!(dx / cert.c2_est <= d * (1.0 + 1e-12) + 1e-15);
        }
    }
}
