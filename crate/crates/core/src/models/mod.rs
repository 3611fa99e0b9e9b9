//! Velocity laws `V`, the local flux `f(u) = u V(u)`, wave-speed bounds and
//! named scenario presets.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

mod presets;

pub use presets::{preset, ScenarioPreset, PRESETS};

/// Sample count for bounds of closure-defined laws.
pub const SPEED_SAMPLES: usize = 256;
/// Safety factor applied to sampled bounds.
pub const SAMPLED_SAFETY: f64 = 1.2;

pub type VelocityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum VelocityLaw {
    /// `V(u) = a + b u`.
    Affine {
        a: f64,
        b: f64,
    },
    Custom {
        label: String,
        f: VelocityFn,
    },
}

impl fmt::Debug for VelocityLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VelocityLaw::Affine { a, b } => write!(f, "Affine {{ a: {a}, b: {b} }}"),
            VelocityLaw::Custom { label, .. } => write!(f, "Custom({label})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct VelocityModel {
    law: VelocityLaw,
    lipschitz_bound: f64,
    admissible_range: (f64, f64),
}

impl VelocityModel {
    pub fn affine(a: f64, b: f64, admissible_range: (f64, f64)) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidModel(format!(
                "non-finite coefficients ({a}, {b})"
            )));
        }
        Self::checked(VelocityLaw::Affine { a, b }, b.abs(), admissible_range)
    }

    /// `V(u) = 1 - u` on `[0, 1]`.
    pub fn traffic() -> Self {
        Self::affine(1.0, -1.0, (0.0, 1.0)).expect("valid traffic law")
    }

    pub fn custom(
        label: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        lipschitz_bound: f64,
        admissible_range: (f64, f64),
    ) -> Result<Self> {
        let model = Self::checked(
            VelocityLaw::Custom {
                label: label.into(),
                f: Arc::new(f),
            },
            lipschitz_bound,
            admissible_range,
        )?;
        model.check_lipschitz()?;
        Ok(model)
    }

    fn checked(
        law: VelocityLaw,
        lipschitz_bound: f64,
        admissible_range: (f64, f64),
    ) -> Result<Self> {
        let (m, big_m) = admissible_range;
        if !(m.is_finite() && big_m.is_finite() && m <= big_m) {
            return Err(Error::InvalidModel(format!(
                "admissible range [{m}, {big_m}] is not a finite interval"
            )));
        }
        if !(lipschitz_bound.is_finite() && lipschitz_bound >= 0.0) {
            return Err(Error::InvalidModel(format!(
                "Lipschitz bound must be finite and non-negative, got {lipschitz_bound}"
            )));
        }
        Ok(Self {
            law,
            lipschitz_bound,
            admissible_range,
        })
    }

    pub fn law(&self) -> &VelocityLaw {
        &self.law
    }

    pub fn lipschitz_bound(&self) -> f64 {
        self.lipschitz_bound
    }

    pub fn admissible_range(&self) -> (f64, f64) {
        self.admissible_range
    }

    pub fn is_affine(&self) -> bool {
        matches!(self.law, VelocityLaw::Affine { .. })
    }

    /// True when `V` does not depend on its argument.
    pub fn is_constant(&self) -> bool {
        matches!(self.law, VelocityLaw::Affine { b, .. } if b == 0.0)
    }

    #[inline]
    pub fn velocity(&self, u: f64) -> f64 {
        match &self.law {
            VelocityLaw::Affine { a, b } => a + b * u,
            VelocityLaw::Custom { f, .. } => f(u),
        }
    }

    /// `f(u) = u V(u)`.
    #[inline]
    pub fn flux(&self, u: f64) -> f64 {
        u * self.velocity(u)
    }

    /// Spot-checks the declared Lipschitz bound on a uniform sample of the
    /// admissible range.
    pub fn check_lipschitz(&self) -> Result<()> {
        let (m, big_m) = self.admissible_range;
        if m == big_m {
            return Ok(());
        }
        let du = (big_m - m) / SPEED_SAMPLES as f64;
        let mut prev = self.velocity(m);
        for i in 1..=SPEED_SAMPLES {
            let v = self.velocity(m + i as f64 * du);
            if !v.is_finite() {
                return Err(Error::InvalidModel(format!(
                    "V is not finite at {}",
                    m + i as f64 * du
                )));
            }
            let q = (v - prev).abs() / du;
            if q > self.lipschitz_bound * (1.0 + 1e-9) + 1e-12 {
                return Err(Error::InvalidModel(format!(
                    "difference quotient {q} exceeds the Lipschitz bound {}",
                    self.lipschitz_bound
                )));
            }
            prev = v;
        }
        Ok(())
    }

    /// Upper bound for `sup |V|` on `[lo, hi]`.
    pub fn velocity_bound(&self, lo: f64, hi: f64) -> f64 {
        match &self.law {
            VelocityLaw::Affine { .. } => self.velocity(lo).abs().max(self.velocity(hi).abs()),
            VelocityLaw::Custom { .. } => {
                let du = (hi - lo) / SPEED_SAMPLES as f64;
                (0..=SPEED_SAMPLES)
                    .map(|i| self.velocity(lo + i as f64 * du).abs())
                    .fold(0.0, f64::max)
                    * SAMPLED_SAFETY
            }
        }
    }
}

/// Serializable description of an affine law `V(u) = a + b u` with its
/// admissible state interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocitySpec {
    pub a: f64,
    pub b: f64,
    pub range: (f64, f64),
}

impl VelocitySpec {
    pub const TRAFFIC: VelocitySpec = VelocitySpec {
        a: 1.0,
        b: -1.0,
        range: (0.0, 1.0),
    };

    pub fn build(&self) -> Result<VelocityModel> {
        VelocityModel::affine(self.a, self.b, self.range)
    }
}

/// `u V(u)`.
pub fn eval_flux(model: &VelocityModel, u: f64) -> f64 {
    model.flux(u)
}

/// Upper bound for `|f'(u)|` on `[lo, hi]`: exact for affine laws (the
/// derivative `a + 2 b u` is affine, so its modulus peaks at an endpoint),
/// sampled difference quotients times [`SAMPLED_SAFETY`] otherwise.
pub fn wave_speed_bound(model: &VelocityModel, lo: f64, hi: f64) -> Result<f64> {
    if !(lo <= hi) {
        return Err(Error::InvalidModel(format!("empty range [{lo}, {hi}]")));
    }
    Ok(match model.law() {
        VelocityLaw::Affine { a, b } => (a + 2.0 * b * lo).abs().max((a + 2.0 * b * hi).abs()),
        VelocityLaw::Custom { .. } => {
            if lo == hi {
                // one-sided quotient around the single state
                let d = 1e-6 * lo.abs().max(1.0);
                return Ok(
                    (model.flux(lo + d) - model.flux(lo - d)).abs() / (2.0 * d) * SAMPLED_SAFETY
                );
            }
            let du = (hi - lo) / SPEED_SAMPLES as f64;
            let mut prev = model.flux(lo);
            let mut best: f64 = 0.0;
            for i in 1..=SPEED_SAMPLES {
                let next = model.flux(lo + i as f64 * du);
                best = best.max((next - prev).abs() / du);
                prev = next;
            }
            best * SAMPLED_SAFETY
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn flux_examples() {
        let t = VelocityModel::traffic();
        assert_eq!(eval_flux(&t, 0.5), 0.25);
        assert_eq!(eval_flux(&t, 0.0), 0.0);
        assert_eq!(eval_flux(&t, 1.0), 0.0);
        let c = VelocityModel::custom("exp", |u| (-u).exp(), 1.0, (0.0, 1.0)).unwrap();
        assert_eq!(eval_flux(&c, 0.0), 0.0);
    }

    #[test]
    fn speed_bound_examples() {
        let t = VelocityModel::traffic();
        assert_eq!(wave_speed_bound(&t, 0.0, 1.0).unwrap(), 1.0);
        let zero = VelocityModel::affine(0.0, 0.0, (-5.0, 5.0)).unwrap();
        assert_eq!(wave_speed_bound(&zero, -5.0, 5.0).unwrap(), 0.0);
        let burgers_like = VelocityModel::affine(0.0, 1.0, (0.0, 1.0)).unwrap();
        assert_eq!(wave_speed_bound(&burgers_like, 0.0, 1.0).unwrap(), 2.0);
        assert!(wave_speed_bound(&t, 1.0, 0.0).is_err());
    }

    #[test]
    fn sampled_bound_is_conservative() {
        // V(u) = 1 - u as a closure: exact bound 1, sampled bound 1.2
        let c = VelocityModel::custom("traffic", |u| 1.0 - u, 1.0, (0.0, 1.0)).unwrap();
        let b = wave_speed_bound(&c, 0.0, 1.0).unwrap();
        assert!(b >= 1.0 && b <= 1.2 + 1e-12, "{b}");
    }

    #[test]
    fn lipschitz_violation_detected() {
        assert!(VelocityModel::custom("steep", |u| 10.0 * u, 1.0, (0.0, 1.0)).is_err());
        assert!(VelocityModel::custom("ok", |u| 0.5 * u.sin(), 0.5, (-3.0, 3.0)).is_ok());
    }

    #[test]
    fn invalid_ranges_rejected() {
        assert!(VelocityModel::affine(1.0, -1.0, (1.0, 0.0)).is_err());
        assert!(VelocityModel::affine(f64::NAN, -1.0, (0.0, 1.0)).is_err());
    }

    proptest! {
        #[test]
        fn affine_bound_exact_and_monotone(a in -3.0f64..3.0, b in -3.0f64..3.0,
                                           lo in -2.0f64..2.0, w1 in 0.0f64..1.0, w2 in 0.0f64..1.0, pad in 0.0f64..1.0) {
            let m = VelocityModel::affine(a, b, (-10.0, 10.0)).unwrap();
            let hi = lo + w1;
            let bound = wave_speed_bound(&m, lo, hi).unwrap();
            // dense sampling never exceeds the exact bound and reaches it at an endpoint
            let sampled = (0..=1000).map(|i| (a + 2.0 * b * (lo + w1 * i as f64 / 1000.0)).abs()).fold(0.0, f64::max);
            prop_assert!((bound - sampled).abs() < 1e-12);
            let wider = wave_speed_bound(&m, lo - pad, hi + w2).unwrap();
            prop_assert!(bound <= wider + 1e-15);
        }
    }
}
