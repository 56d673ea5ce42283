//! Log-log slope regression of `Y_k` on `log k`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::blockstats::Trajectory;
use crate::error::{Error, Result};
use crate::format::sig12;

/// Why a block size was left out of the regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DropReason {
    /// `T_k <= 0`, so `log T_k` is undefined.
    Nonpositive,
    /// `T_k` equals the centering value exactly.
    TieWithCenter,
    /// `T_k` or its logarithm is not finite.
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLogPoint {
    pub k: usize,
    pub y: f64,
}

impl LogLogPoint {
    pub fn log_k(&self) -> f64 {
        (self.k as f64).ln()
    }
}

/// Retained `(k, Y_k)` pairs plus the block sizes that were dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogLogSample {
    pub points: Vec<LogLogPoint>,
    pub dropped: Vec<(usize, DropReason)>,
    /// Requested range of `k`, inclusive.
    pub k_range: (usize, usize),
}

impl LogLogSample {
    /// Builds a sample from explicit pairs; `ks` must be strictly increasing
    /// and every `y` finite.
    pub fn from_points(ks: &[usize], ys: &[f64]) -> Result<Self> {
        if ks.len() != ys.len() {
            return Err(Error::Shape {
                expected: ks.len(),
                got: ys.len(),
            });
        }
        if ks.is_empty() {
            return Err(Error::InsufficientSample {
                retained: 0,
                requested: 0,
                reason: "no points",
            });
        }
        if ks[0] == 0 || ks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("block sizes must be positive and strictly increasing".into()));
        }
        if ys.iter().any(|y| !y.is_finite()) {
            return Err(Error::Domain("log-log responses must be finite".into()));
        }
        Ok(Self {
            points: ks
                .iter()
                .zip(ys)
                .map(|(&k, &y)| LogLogPoint { k, y })
                .collect(),
            dropped: Vec::new(),
            k_range: (ks[0], *ks.last().expect("nonempty")),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// CSV with header `k,log_k,Y_k,retained`; dropped rows carry an empty `Y_k`.
    pub fn to_csv(&self) -> String {
        let mut rows: Vec<(usize, Option<f64>)> = self
            .points
            .iter()
            .map(|p| (p.k, Some(p.y)))
            .chain(self.dropped.iter().map(|&(k, _)| (k, None)))
            .collect();
        rows.sort_by_key(|r| r.0);
        let mut out = String::from("k,log_k,Y_k,retained\n");
        for (k, y) in rows {
            let log_k = sig12((k as f64).ln());
            match y {
                Some(y) => out.push_str(&format!("{k},{log_k},{},true\n", sig12(y))),
                None => out.push_str(&format!("{k},{log_k},,false\n")),
            }
        }
        out
    }
}

/// Turns a trajectory into `(k, Y_k)` pairs for `k = trim_n0..=n`.
///
/// Without a center `Y_k = log T_k` and nonpositive values are dropped; with a
/// center `c`, `Y_k = log |T_k - c|` and exact ties are dropped. Fails when
/// fewer than two points survive or more than half of the range is dropped.
pub fn build_loglog_sample(
    traj: &Trajectory,
    trim_n0: usize,
    center: Option<f64>,
) -> Result<LogLogSample> {
    let n = traj.n();
    build_range(traj, trim_n0, n, center)
}

/// [`build_loglog_sample`] restricted to `k = first..=last`.
pub fn build_range(
    traj: &Trajectory,
    first: usize,
    last: usize,
    center: Option<f64>,
) -> Result<LogLogSample> {
    let n = traj.n();
    if first == 0 || first > last || last > n {
        return Err(Error::Domain(format!(
            "block range {first}..={last} invalid for a trajectory of length {n}"
        )));
    }
    let mut points = Vec::with_capacity(last - first + 1);
    let mut dropped = Vec::new();
    for k in first..=last {
        let t = traj.at(k);
        let (arg, reason) = match center {
            None => (t, DropReason::Nonpositive),
            Some(c) => ((t - c).abs(), DropReason::TieWithCenter),
        };
        if !t.is_finite() {
            dropped.push((k, DropReason::NonFinite));
        } else if arg <= 0.0 {
            dropped.push((k, reason));
        } else {
            let y = arg.ln();
            if y.is_finite() {
                points.push(LogLogPoint { k, y });
            } else {
                dropped.push((k, DropReason::NonFinite));
            }
        }
    }
    let requested = last - first + 1;
    check_retention(points.len(), requested)?;
    Ok(LogLogSample {
        points,
        dropped,
        k_range: (first, last),
    })
}

fn check_retention(retained: usize, requested: usize) -> Result<()> {
    if retained < 2 {
        return Err(Error::InsufficientSample {
            retained,
            requested,
            reason: "fewer than two usable points",
        });
    }
    if 2 * (requested - retained) > requested {
        return Err(Error::InsufficientSample {
            retained,
            requested,
            reason: "more than half of the range was dropped",
        });
    }
    Ok(())
}

/// Regression method used for the log-log slope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    OlsIntercept,
    OlsOrigin,
    LadIntercept,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::OlsIntercept => "ols-intercept",
            Method::OlsOrigin => "ols-origin",
            Method::LadIntercept => "lad-intercept",
        })
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ols-intercept" => Ok(Method::OlsIntercept),
            "ols-origin" => Ok(Method::OlsOrigin),
            "lad-intercept" => Ok(Method::LadIntercept),
            other => Err(Error::InvalidParameter(format!("unknown regression method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: Option<f64>,
    pub method: Method,
    /// First and last retained `k`.
    pub k_range: (usize, usize),
    pub n_used: usize,
    /// Sum of squared (OLS) or absolute (LAD) residuals.
    pub residual_sum: f64,
}

/// Dispatches to the fit named by `method`.
pub fn fit(sample: &LogLogSample, method: Method) -> Result<SlopeFit> {
    match method {
        Method::OlsIntercept => fit_ols_intercept(sample),
        Method::OlsOrigin => fit_ols_origin(sample),
        Method::LadIntercept => fit_lad_intercept(sample),
    }
}

fn xy(points: &[LogLogPoint]) -> (Vec<f64>, Vec<f64>) {
    points.iter().map(|p| (p.log_k(), p.y)).unzip()
}

fn k_range(points: &[LogLogPoint]) -> (usize, usize) {
    (points[0].k, points[points.len() - 1].k)
}

/// Least-squares slope of `Y_k` on `log k` with an intercept.
pub fn fit_ols_intercept(sample: &LogLogSample) -> Result<SlopeFit> {
    ols_intercept_points(&sample.points)
}

fn ols_intercept_points(points: &[LogLogPoint]) -> Result<SlopeFit> {
    if points.len() < 2 {
        return Err(Error::InsufficientSample {
            retained: points.len(),
            requested: points.len(),
            reason: "intercept fit needs two points",
        });
    }
    let (x, y) = xy(points);
    let p = x.len() as f64;
    let x_bar = x.iter().sum::<f64>() / p;
    let y_bar = y.iter().sum::<f64>() / p;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (xi, yi) in x.iter().zip(&y) {
        let dx = xi - x_bar;
        sxx += dx * dx;
        sxy += dx * (yi - y_bar);
    }
    if sxx <= 0.0 {
        return Err(Error::DegenerateDesign("all retained k are identical"));
    }
    let slope = sxy / sxx;
    let intercept = y_bar - slope * x_bar;
    let residual_sum = x
        .iter()
        .zip(&y)
        .map(|(xi, yi)| (yi - intercept - slope * xi).powi(2))
        .sum();
    Ok(SlopeFit {
        slope,
        intercept: Some(intercept),
        method: Method::OlsIntercept,
        k_range: k_range(points),
        n_used: points.len(),
        residual_sum,
    })
}

/// Least-squares slope through the origin: `sum Y_k log k / sum log^2 k`.
pub fn fit_ols_origin(sample: &LogLogSample) -> Result<SlopeFit> {
    let points = &sample.points;
    if points.is_empty() {
        return Err(Error::InsufficientSample {
            retained: 0,
            requested: 0,
            reason: "origin fit needs one point",
        });
    }
    let (x, y) = xy(points);
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateDesign("all retained k equal 1"));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
    let slope = sxy / sxx;
    let residual_sum = x.iter().zip(&y).map(|(a, b)| (b - slope * a).powi(2)).sum();
    Ok(SlopeFit {
        slope,
        intercept: None,
        method: Method::OlsOrigin,
        k_range: k_range(points),
        n_used: points.len(),
        residual_sum,
    })
}

/// Least-absolute-deviations slope with an intercept.
///
/// With the intercept profiled out (it is the median residual), the L1
/// objective is convex and piecewise linear in the slope, with kinks only at
/// the slopes of lines through pairs of points. The minimum is located by
/// bisection over the sorted kinks.
pub fn fit_lad_intercept(sample: &LogLogSample) -> Result<SlopeFit> {
    let points = &sample.points;
    if points.len() < 2 {
        return Err(Error::InsufficientSample {
            retained: points.len(),
            requested: points.len(),
            reason: "intercept fit needs two points",
        });
    }
    let (x, y) = xy(points);
    let mut kinks = Vec::with_capacity(x.len() * (x.len() - 1) / 2);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let dx = x[j] - x[i];
            if dx != 0.0 {
                kinks.push((y[j] - y[i]) / dx);
            }
        }
    }
    if kinks.is_empty() {
        return Err(Error::DegenerateDesign("all retained k are identical"));
    }
    kinks.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    kinks.dedup();

    let mut scratch = vec![0.0; x.len()];
    let mut objective = |g: f64| profile_l1(&x, &y, g, &mut scratch);
    let (mut lo, mut hi) = (0usize, kinks.len() - 1);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if objective(kinks[mid]).0 <= objective(kinks[mid + 1]).0 {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let slope = kinks[lo];
    let (residual_sum, intercept) = objective(slope);
    Ok(SlopeFit {
        slope,
        intercept: Some(intercept),
        method: Method::LadIntercept,
        k_range: k_range(points),
        n_used: points.len(),
        residual_sum,
    })
}

/// `(min_a sum |y - a - g x|, argmin a)` with `a` a median residual.
fn profile_l1(x: &[f64], y: &[f64], g: f64, scratch: &mut [f64]) -> (f64, f64) {
    for ((r, xi), yi) in scratch.iter_mut().zip(x).zip(y) {
        *r = yi - g * xi;
    }
    let mid = scratch.len() / 2;
    let (_, &mut median, _) =
        scratch.select_nth_unstable_by(mid, |a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let obj = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (yi - median - g * xi).abs())
        .sum();
    (obj, median)
}

/// OLS-with-intercept slope over the retained `k` in `m..=b+m`.
pub fn fit_windowed(sample: &LogLogSample, m: usize, b: usize) -> Result<SlopeFit> {
    if m == 0 || b == 0 {
        return Err(Error::Domain(format!("window needs m >= 1 and b >= 1 (got m={m}, b={b})")));
    }
    let last = b + m;
    if last > sample.k_range.1 {
        return Err(Error::Domain(format!(
            "window end b + m = {last} exceeds the sample's last k = {}",
            sample.k_range.1
        )));
    }
    let inside: Vec<LogLogPoint> = sample
        .points
        .iter()
        .copied()
        .filter(|p| p.k >= m && p.k <= last)
        .collect();
    let requested = (m.max(sample.k_range.0)..=last).count();
    check_retention(inside.len(), requested)?;
    ols_intercept_points(&inside)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn line(ks: impl Iterator<Item = usize>, slope: f64, icpt: f64) -> LogLogSample {
        let ks: Vec<usize> = ks.collect();
        let ys: Vec<f64> = ks.iter().map(|&k| slope * (k as f64).ln() + icpt).collect();
        LogLogSample::from_points(&ks, &ys).unwrap()
    }

    #[test]
    fn build_examples() {
        let e = std::f64::consts::E;
        let t = Trajectory::injected(vec![1.0, e, e * e]).unwrap();
        let s = build_loglog_sample(&t, 1, None).unwrap();
        let ys: Vec<f64> = s.points.iter().map(|p| p.y).collect();
        assert_relative_eq!(ys[0], 0.0);
        assert_relative_eq!(ys[1], 1.0);
        assert_relative_eq!(ys[2], 2.0);

        let t = Trajectory::injected(vec![5.0, 4.0, 3.0]).unwrap();
        let s = build_loglog_sample(&t, 1, Some(3.0)).unwrap();
        assert_eq!(s.dropped, vec![(3, DropReason::TieWithCenter)]);
        assert_relative_eq!(s.points[0].y, 2f64.ln());
        assert_eq!(s.points[1].y, 0.0);

        let t = Trajectory::injected(vec![1.0, 2.0, 3.0, 4.0, 0.0, 6.0]).unwrap();
        let s = build_loglog_sample(&t, 1, None).unwrap();
        assert_eq!(s.dropped, vec![(5, DropReason::Nonpositive)]);
    }

    #[test]
    fn majority_drop_is_an_error() {
        let t = Trajectory::injected(vec![1.0, -1.0, -2.0, 3.0, -1.0]).unwrap();
        assert!(matches!(
            build_loglog_sample(&t, 1, None),
            Err(Error::InsufficientSample { .. })
        ));
        let t = Trajectory::injected(vec![1.0, 0.0]).unwrap();
        assert!(build_loglog_sample(&t, 1, None).is_err());
        assert!(build_loglog_sample(&t, 0, None).is_err());
        assert!(build_loglog_sample(&t, 3, None).is_err());
    }

    #[test]
    fn trimming_starts_at_n0() {
        let t = Trajectory::injected((1..=10).map(|k| k as f64).collect()).unwrap();
        let s = build_loglog_sample(&t, 4, None).unwrap();
        assert_eq!(s.points.first().unwrap().k, 4);
        assert_eq!(s.k_range, (4, 10));
    }

    #[test]
    fn ols_intercept_exact_line() {
        let f = fit_ols_intercept(&line(1..=10, 3.0, 5.0)).unwrap();
        assert_relative_eq!(f.slope, 3.0, epsilon = 1e-12);
        assert_relative_eq!(f.intercept.unwrap(), 5.0, epsilon = 1e-12);
        let f = fit_ols_intercept(&line(1..=10, 0.0, 2.0)).unwrap();
        assert_eq!(f.slope, 0.0);
    }

    #[test]
    fn ols_origin_examples() {
        let f = fit_ols_origin(&line(1..=50, 2.0, 0.0)).unwrap();
        assert_relative_eq!(f.slope, 2.0, epsilon = 1e-12);
        assert!(f.intercept.is_none());
        let f = fit_ols_origin(&line(1..=3, 3.0, 5.0)).unwrap();
        let (a, b) = (2f64.ln(), 3f64.ln());
        let expected = (a * (3.0 * a + 5.0) + b * (3.0 * b + 5.0)) / (a * a + b * b);
        assert_relative_eq!(f.slope, expected, epsilon = 1e-12);
        assert_relative_eq!(f.slope, 8.309_225_353_7, epsilon = 1e-9);
        let single = LogLogSample::from_points(&[1000], &[7.0]).unwrap();
        assert_relative_eq!(fit_ols_origin(&single).unwrap().slope, 7.0 / 1000f64.ln());
        let ones = LogLogSample::from_points(&[1], &[7.0]).unwrap();
        assert!(matches!(fit_ols_origin(&ones), Err(Error::DegenerateDesign(_))));
    }

    #[test]
    fn one_point_cannot_fit_an_intercept() {
        let single = LogLogSample::from_points(&[5], &[1.0]).unwrap();
        assert!(fit_ols_intercept(&single).is_err());
        assert!(fit_lad_intercept(&single).is_err());
    }

    #[test]
    fn lad_exact_line_and_outlier() {
        let f = fit_lad_intercept(&line(1..=10, 3.0, 5.0)).unwrap();
        assert_relative_eq!(f.slope, 3.0, epsilon = 1e-9);
        assert!(f.residual_sum < 1e-9);
        let mut s = line(1..=12, 3.0, 5.0);
        s.points[6].y += 40.0;
        let f = fit_lad_intercept(&s).unwrap();
        assert_relative_eq!(f.slope, 3.0, epsilon = 1e-9);
        assert_relative_eq!(f.residual_sum, 40.0, epsilon = 1e-9);
    }

    #[test]
    fn windowed_fits() {
        let s = line(1..=1000, 3.0, 5.0);
        let a = fit_windowed(&s, 1, 50).unwrap();
        let b = fit_windowed(&s, 10, 50).unwrap();
        assert_relative_eq!(a.slope, 3.0, epsilon = 1e-10);
        assert_relative_eq!(b.slope, 3.0, epsilon = 1e-10);
        let mut s = line(1..=100, 3.0, 5.0);
        s.points[90].y -= 100.0;
        assert_relative_eq!(fit_windowed(&s, 5, 60).unwrap().slope, 3.0, epsilon = 1e-10);
        assert!(fit_windowed(&s, 0, 5).is_err());
        assert!(fit_windowed(&s, 50, 51).is_err());
        let full = fit_ols_intercept(&s).unwrap();
        let win = fit_windowed(&s, 1, 99).unwrap();
        assert_eq!(full.slope, win.slope);
    }

    #[test]
    fn shift_invariance() {
        let ks: Vec<usize> = (1..=30).collect();
        let ys: Vec<f64> = ks.iter().map(|&k| ((k * 7919) % 31) as f64 / 10.0).collect();
        let shifted: Vec<f64> = ys.iter().map(|y| y + 2.5).collect();
        let a = LogLogSample::from_points(&ks, &ys).unwrap();
        let b = LogLogSample::from_points(&ks, &shifted).unwrap();
        let (fa, fb) = (fit_ols_intercept(&a).unwrap(), fit_ols_intercept(&b).unwrap());
        assert_relative_eq!(fa.slope, fb.slope, epsilon = 1e-12);
        assert_relative_eq!(fb.intercept.unwrap() - fa.intercept.unwrap(), 2.5, epsilon = 1e-12);
        let sum_log: f64 = ks.iter().map(|&k| (k as f64).ln()).sum();
        let sum_log2: f64 = ks.iter().map(|&k| (k as f64).ln().powi(2)).sum();
        let (oa, ob) = (fit_ols_origin(&a).unwrap(), fit_ols_origin(&b).unwrap());
        assert_relative_eq!(ob.slope - oa.slope, 2.5 * sum_log / sum_log2, epsilon = 1e-12);
    }

    #[test]
    fn csv_marks_dropped_rows() {
        let t = Trajectory::injected(vec![1.0, 0.0, 3.0]).unwrap();
        let s = build_loglog_sample(&t, 1, None).unwrap();
        let csv = s.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "k,log_k,Y_k,retained");
        assert_eq!(lines[1], "1,0,0,true");
        assert!(lines[2].ends_with(",,false"));
        assert!(lines[3].starts_with("3,1.09861228867,"));
    }

    #[test]
    fn method_ids() {
        for m in [Method::OlsIntercept, Method::OlsOrigin, Method::LadIntercept] {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
    }
}
