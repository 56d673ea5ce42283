use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hill estimate from the `q` largest absolute values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HillEstimate {
    pub q: usize,
    /// `H_q`, the mean log-excess over the `(q+1)`-th largest value.
    pub h: f64,
    /// `1 / H_q`; infinite when `H_q = 0`.
    pub alpha: f64,
}

impl HillEstimate {
    pub fn is_infinite(&self) -> bool {
        self.alpha.is_infinite()
    }
}

/// Which order statistics the Hill estimator ranks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HillTail {
    /// `|X_t|`.
    #[default]
    Absolute,
    /// `X_t` itself, so only the right tail enters.
    Upper,
}

impl std::str::FromStr for HillTail {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "abs" | "absolute" => Ok(HillTail::Absolute),
            "upper" => Ok(HillTail::Upper),
            other => Err(Error::InvalidParameter(format!("unknown Hill tail `{other}`"))),
        }
    }
}

impl std::fmt::Display for HillTail {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            HillTail::Absolute => "abs",
            HillTail::Upper => "upper",
        })
    }
}

/// `H_q = (1/q) sum_{j=1..q} log(a_(n-j+1) / a_(n-q))` over the order
/// statistics `a_(1) <= ... <= a_(n)` of `|X_t|`.
pub fn hill_estimate(series: &[f64], q: usize) -> Result<HillEstimate> {
    hill_estimate_tail(series, q, HillTail::Absolute)
}

/// [`hill_estimate`] over the order statistics selected by `tail`.
pub fn hill_estimate_tail(series: &[f64], q: usize, tail: HillTail) -> Result<HillEstimate> {
    let n = series.len();
    if q == 0 || q >= n {
        return Err(Error::Domain(format!("Hill needs 1 <= q <= n - 1 (q = {q}, n = {n})")));
    }
    let mut a: Vec<f64> = match tail {
        HillTail::Absolute => series.iter().map(|x| x.abs()).collect(),
        HillTail::Upper => series.to_vec(),
    };
    // after partitioning, a[n-q-1] is a_(n-q) and everything above it is the top q
    let (_, &mut threshold, top) =
        a.select_nth_unstable_by(n - q - 1, |a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    if !(threshold > 0.0) {
        return Err(Error::DegenerateData(format!(
            "the ({})-th largest ranked value is not positive",
            q + 1
        )));
    }
    let h = top.iter().map(|&a| (a / threshold).ln()).sum::<f64>() / q as f64;
    Ok(HillEstimate { q, h, alpha: 1.0 / h })
}
