//! Invertible maps `g` between a parameter `lambda` and the log-log slope of a
//! statistic's trajectory.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::blockstats::{Form, Statistic};
use crate::error::{Error, Result};

/// Real interval with independently open or closed ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl Interval {
    pub const REAL: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
        lo_open: true,
        hi_open: true,
    };

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_open { x > self.lo } else { x >= self.lo };
        let below = if self.hi_open { x < self.hi } else { x <= self.hi };
        above && below
    }
}

/// Family of a rate map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum MapKind {
    /// Absolute moment of order `r`: `g(a) = r/a` (sum form) or `r/a - 1`
    /// (average form). Order 2 covers the sum of squares.
    TailMoment { r: u32, form: Form },
    /// Maximum or range: `g(a) = 1/a`.
    TailMax,
    /// Sample mean under long memory: `g(l) = -l/2` with `l = q * beta`.
    LmMean,
    /// `g(l) = l`.
    Identity,
}

/// A map `g` with its domain and an optional clip applied after inversion.
///
/// The clip is applied as the closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateMap {
    pub kind: MapKind,
    pub clip: Option<(f64, f64)>,
}

/// Result of inverting a slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Inversion {
    pub value: f64,
    pub clipped: bool,
}

impl RateMap {
    pub fn tail_moment(r: u32, form: Form) -> Self {
        let r = r.max(1);
        Self {
            kind: MapKind::TailMoment { r, form },
            clip: Some((0.0, f64::from(r).min(2.0))),
        }
    }

    pub fn tail_max() -> Self {
        Self {
            kind: MapKind::TailMax,
            clip: Some((0.0, 2.0)),
        }
    }

    pub fn lm_mean() -> Self {
        Self {
            kind: MapKind::LmMean,
            clip: Some((0.0, 2.0)),
        }
    }

    pub fn identity() -> Self {
        Self {
            kind: MapKind::Identity,
            clip: None,
        }
    }

    pub fn with_clip(mut self, clip: Option<(f64, f64)>) -> Self {
        self.clip = clip;
        self
    }

    /// Default map for a statistic: the tail map matching its moment order and
    /// form, `tail-max` for extremes, `lm-mean` for the mean.
    pub fn default_for(stat: Statistic) -> Self {
        match stat {
            Statistic::Mean => RateMap::lm_mean(),
            Statistic::Max | Statistic::Min | Statistic::Range => RateMap::tail_max(),
            s => RateMap::tail_moment(
                s.moment_order().expect("moment statistic"),
                s.form().expect("moment statistic"),
            ),
        }
    }

    /// Resolves a map id against a statistic; `tail-<r>` without a form suffix
    /// takes the statistic's form.
    pub fn parse_for(id: &str, stat: Statistic) -> Result<Self> {
        if let Some(rest) = id.strip_prefix("tail-") {
            if let Ok(r) = rest.parse::<u32>() {
                let form = stat.form().unwrap_or(Form::Average);
                return Ok(RateMap::tail_moment(r, form));
            }
        }
        id.parse()
    }

    pub fn id(&self) -> String {
        match self.kind {
            MapKind::TailMoment { r, form: Form::Sum } => format!("tail-{r}-sum"),
            MapKind::TailMoment {
                r,
                form: Form::Average,
            } => format!("tail-{r}-avg"),
            MapKind::TailMax => "tail-max".into(),
            MapKind::LmMean => "lm-mean".into(),
            MapKind::Identity => "identity".into(),
        }
    }

    pub fn forward(&self, lambda: f64) -> f64 {
        match self.kind {
            MapKind::TailMoment { r, form } => f64::from(r) / lambda - offset(form),
            MapKind::TailMax => 1.0 / lambda,
            MapKind::LmMean => -lambda / 2.0,
            MapKind::Identity => lambda,
        }
    }

    pub fn inverse(&self, slope: f64) -> f64 {
        match self.kind {
            MapKind::TailMoment { r, form } => f64::from(r) / (slope + offset(form)),
            MapKind::TailMax => 1.0 / slope,
            MapKind::LmMean => -2.0 * slope,
            MapKind::Identity => slope,
        }
    }

    pub fn lambda_domain(&self) -> Interval {
        match self.kind {
            MapKind::TailMoment { r, .. } => Interval {
                lo: 0.0,
                hi: f64::from(r).min(2.0),
                lo_open: true,
                hi_open: false,
            },
            MapKind::TailMax => Interval {
                lo: 0.0,
                hi: 2.0,
                lo_open: true,
                hi_open: false,
            },
            MapKind::LmMean => Interval {
                lo: 0.0,
                hi: 2.0,
                lo_open: true,
                hi_open: true,
            },
            MapKind::Identity => Interval::REAL,
        }
    }

    /// Image of [`lambda_domain`](Self::lambda_domain) under `forward`.
    pub fn slope_domain(&self) -> Interval {
        let d = self.lambda_domain();
        if self.decreasing() {
            Interval {
                lo: self.forward_limit(d.hi),
                hi: self.forward_limit(d.lo),
                lo_open: d.hi_open,
                hi_open: d.lo_open,
            }
        } else {
            Interval {
                lo: self.forward_limit(d.lo),
                hi: self.forward_limit(d.hi),
                lo_open: d.lo_open,
                hi_open: d.hi_open,
            }
        }
    }

    fn forward_limit(&self, lambda: f64) -> f64 {
        if lambda == 0.0 && matches!(self.kind, MapKind::TailMoment { .. } | MapKind::TailMax) {
            f64::INFINITY
        } else {
            self.forward(lambda)
        }
    }

    fn decreasing(&self) -> bool {
        !matches!(self.kind, MapKind::Identity)
    }

    /// Inverts `slope`, clipping per the configured clip.
    ///
    /// Out-of-domain slopes map to the clip boundary on their side and are
    /// flagged; without a clip they are an error.
    pub fn invert_slope(&self, slope: f64) -> Result<Inversion> {
        if slope.is_nan() {
            return Err(Error::OutOfDomain {
                map: self.id(),
                slope,
            });
        }
        let domain = self.slope_domain();
        if domain.contains(slope) {
            let value = self.inverse(slope);
            return Ok(match self.clip {
                Some((lo, hi)) if value < lo || value > hi => Inversion {
                    value: value.clamp(lo, hi),
                    clipped: true,
                },
                _ => Inversion {
                    value,
                    clipped: false,
                },
            });
        }
        let (lo, hi) = self.clip.ok_or_else(|| Error::OutOfDomain {
            map: self.id(),
            slope,
        })?;
        // below the slope domain means above the lambda domain for a decreasing map
        let below = slope <= domain.lo;
        let value = if below == self.decreasing() { hi } else { lo };
        Ok(Inversion {
            value,
            clipped: true,
        })
    }
}

fn offset(form: Form) -> f64 {
    match form {
        Form::Sum => 0.0,
        Form::Average => 1.0,
    }
}

impl fmt::Display for RateMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

impl FromStr for RateMap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::InvalidParameter(format!("unknown rate map `{s}`"));
        match s {
            "tail-max" => Ok(RateMap::tail_max()),
            "lm-mean" => Ok(RateMap::lm_mean()),
            "identity" => Ok(RateMap::identity()),
            other => {
                let rest = other.strip_prefix("tail-").ok_or_else(unknown)?;
                let (r, form) = rest.split_once('-').ok_or_else(unknown)?;
                let r: u32 = r.parse().map_err(|_| unknown())?;
                if r == 0 {
                    return Err(unknown());
                }
                let form = match form {
                    "sum" => Form::Sum,
                    "avg" => Form::Average,
                    _ => return Err(unknown()),
                };
                Ok(RateMap::tail_moment(r, form))
            }
        }
    }
}

/// `max |inverse(forward(l)) - l|` over `grid`.
pub fn roundtrip_check(map: &RateMap, grid: &[f64]) -> f64 {
    grid.iter()
        .map(|&l| (map.inverse(map.forward(l)) - l).abs())
        .fold(0.0, f64::max)
}
