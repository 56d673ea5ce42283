//! Chambers-Mallows-Stuck sampling of stable laws.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stable-law parameterization.
///
/// `S1` is the Samorodnitsky-Taqqu form, whose totally skewed laws with
/// `alpha < 1` live on the positive half-line. `S0` shifts `S1` by
/// `-skew * tan(pi alpha / 2)` so the law is continuous in `alpha` at 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parameterization {
    #[default]
    S1,
    S0,
}

/// Standard stable sampler (scale 1, location 0) with precomputed constants.
#[derive(Debug, Clone, Copy)]
pub struct StableSampler {
    alpha: f64,
    skew: f64,
    b: f64,
    s: f64,
    shift: f64,
}

impl StableSampler {
    pub fn new(alpha: f64, skew: f64) -> Result<Self> {
        Self::with_parameterization(alpha, skew, Parameterization::S1)
    }

    pub fn with_parameterization(alpha: f64, skew: f64, param: Parameterization) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "stable index {alpha} outside (0, 2]"
            )));
        }
        if !(-1.0..=1.0).contains(&skew) {
            return Err(Error::InvalidParameter(format!(
                "stable skewness {skew} outside [-1, 1]"
            )));
        }
        let (b, s, shift) = if alpha == 1.0 {
            (0.0, 1.0, 0.0)
        } else {
            let t = skew * (PI * alpha / 2.0).tan();
            let shift = match param {
                Parameterization::S1 => 0.0,
                Parameterization::S0 => -t,
            };
            (t.atan() / alpha, (1.0 + t * t).powf(1.0 / (2.0 * alpha)), shift)
        };
        Ok(Self {
            alpha,
            skew,
            b,
            s,
            shift,
        })
    }

    /// One draw; consumes two uniforms.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let v = PI * (open_unit(rng) - 0.5);
        let w = -open_unit(rng).ln();
        let (alpha, skew) = (self.alpha, self.skew);
        if alpha == 1.0 {
            let lead = FRAC_PI_2 + skew * v;
            return (lead * v.tan() - skew * ((FRAC_PI_2 * w * v.cos()) / lead).ln()) / FRAC_PI_2;
        }
        let arg = alpha * (v + self.b);
        let x = self.s * arg.sin() / v.cos().powf(1.0 / alpha)
            * ((v - arg).cos() / w).powf((1.0 - alpha) / alpha);
        x + self.shift
    }
}

/// Uniform draw on the open interval `(0, 1)`.
pub(crate) fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}
