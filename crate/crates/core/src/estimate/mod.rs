//! Estimation pipelines: per-scan rate estimates, their mean/median
//! aggregation over random scans, the centered pipeline for converging
//! statistics, and the multi-order combined estimator.

mod hill;

pub use hill::{hill_estimate, hill_estimate_tail, HillEstimate, HillTail};

use serde::{Deserialize, Serialize};

use crate::blockstats::{batch_value, trajectory, Form, Statistic, Trajectory};
use crate::error::{Error, Result};
use crate::format::sig12;
use crate::ratemap::RateMap;
use crate::regress::{build_loglog_sample, build_range, fit, fit_windowed, Method, SlopeFit};
use crate::scan::{direct_scan, reverse_scan, uniform_random_scan, ScanPath};
use crate::stream;

/// Which scans a pipeline runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "policy")]
pub enum ScanPolicy {
    Direct,
    Reverse,
    /// `count` scans drawn uniformly from the stream `(seed, "scans", 0)`.
    /// The first `N` scans of a larger draw equal an `N`-scan draw.
    Uniform { count: usize, seed: u64 },
}

impl ScanPolicy {
    pub fn count(&self) -> usize {
        match self {
            ScanPolicy::Uniform { count, .. } => *count,
            _ => 1,
        }
    }

    /// The scans of a length-`n` series under this policy.
    pub fn scans(&self, n: usize) -> Result<Vec<ScanPath>> {
        match *self {
            ScanPolicy::Direct => Ok(vec![direct_scan(n)?]),
            ScanPolicy::Reverse => Ok(vec![reverse_scan(n)?]),
            ScanPolicy::Uniform { count, seed } => {
                if count == 0 {
                    return Err(Error::InvalidParameter("scan count must be at least 1".into()));
                }
                let mut rng = stream::derive(seed, "scans", 0);
                (0..count).map(|_| uniform_random_scan(n, &mut rng)).collect()
            }
        }
    }
}

/// How per-scan estimates are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    #[default]
    None,
    Mean,
    Median,
}

impl std::str::FromStr for Aggregation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Aggregation::None),
            "mean" => Ok(Aggregation::Mean),
            "median" => Ok(Aggregation::Median),
            other => Err(Error::InvalidParameter(format!("unknown aggregation `{other}`"))),
        }
    }
}

impl std::fmt::Display for Aggregation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Aggregation::None => "none",
            Aggregation::Mean => "mean",
            Aggregation::Median => "median",
        })
    }
}

/// Regression window `k = m..=b+m` for the centered pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CenteredWindow {
    pub m: usize,
    /// `None` selects `floor(n^(2/3))`.
    pub b: Option<usize>,
}

impl Default for CenteredWindow {
    fn default() -> Self {
        Self { m: 10, b: None }
    }
}

impl CenteredWindow {
    /// `(m, b)` for a series of length `n`.
    pub fn resolve(&self, n: usize) -> Result<(usize, usize)> {
        let b = self.b.unwrap_or_else(|| default_bandwidth(n));
        if self.m == 0 || b == 0 || self.m + b > n {
            return Err(Error::Domain(format!(
                "centered window m = {}, b = {b} needs m >= 1, b >= 1, b + m <= n = {n}",
                self.m
            )));
        }
        Ok((self.m, b))
    }
}

/// `floor(n^(2/3))`, computed exactly as the largest `b` with `b^3 <= n^2`.
pub fn default_bandwidth(n: usize) -> usize {
    let n2 = (n as u128) * (n as u128);
    let mut b = (n as f64).powf(2.0 / 3.0).round() as u128;
    while b * b * b > n2 {
        b -= 1;
    }
    while (b + 1).pow(3) <= n2 {
        b += 1;
    }
    b as usize
}

/// Full configuration of a rate estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    pub statistic: Statistic,
    pub map: RateMap,
    pub method: Method,
    pub trim_n0: usize,
    pub scans: ScanPolicy,
    pub aggregation: Aggregation,
    pub centered: Option<CenteredWindow>,
}

impl EstimatorSpec {
    /// Direct scan, OLS with intercept, no trimming, the statistic's default map.
    pub fn new(statistic: Statistic) -> Self {
        Self {
            statistic,
            map: RateMap::default_for(statistic),
            method: Method::OlsIntercept,
            trim_n0: 1,
            scans: ScanPolicy::Direct,
            aggregation: Aggregation::None,
            centered: None,
        }
    }

    pub fn with_map(mut self, map: RateMap) -> Self {
        self.map = map;
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_trim(mut self, trim_n0: usize) -> Self {
        self.trim_n0 = trim_n0;
        self
    }

    pub fn with_scans(mut self, scans: ScanPolicy) -> Self {
        self.scans = scans;
        self
    }

    pub fn with_aggregation(mut self, aggregation: Aggregation) -> Self {
        self.aggregation = aggregation;
        self
    }

    pub fn with_centered(mut self, window: CenteredWindow) -> Self {
        self.centered = Some(window);
        self
    }

    /// Uniform scans with `count` draws aggregated by `aggregation`.
    pub fn scanned(self, count: usize, seed: u64, aggregation: Aggregation) -> Self {
        self.with_scans(ScanPolicy::Uniform { count, seed })
            .with_aggregation(aggregation)
    }

    /// Replaces the seed of a uniform scan policy.
    pub fn reseeded(mut self, seed: u64) -> Self {
        if let ScanPolicy::Uniform { count, .. } = self.scans {
            self.scans = ScanPolicy::Uniform { count, seed };
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.trim_n0 == 0 {
            return Err(Error::InvalidParameter("trim_n0 must be at least 1".into()));
        }
        if self.aggregation == Aggregation::None && self.scans.count() != 1 {
            return Err(Error::InvalidParameter(
                "several scans need a mean or median aggregation".into(),
            ));
        }
        if self.scans.count() == 0 {
            return Err(Error::InvalidParameter("scan count must be at least 1".into()));
        }
        if self.centered.is_some() && self.method == Method::OlsOrigin {
            return Err(Error::InvalidParameter(
                "the centered pipeline fits with an intercept".into(),
            ));
        }
        Ok(())
    }
}

/// Estimate from one scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanEstimate {
    pub value: f64,
    pub clipped: bool,
    /// Start index of the scan's size-one block.
    pub scan_start: usize,
    pub fit: SlopeFit,
    pub dropped: usize,
}

/// Output of a pipeline run on one series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimate: f64,
    pub per_scan: Vec<ScanEstimate>,
    /// Scans whose fit failed and were left out of the aggregate.
    pub excluded: usize,
    pub n: usize,
    /// `T_n` for the centered pipeline.
    pub center: Option<f64>,
    /// Resolved `(m, b)` for the centered pipeline.
    pub window: Option<(usize, usize)>,
    pub spec: EstimatorSpec,
}

impl EstimateReport {
    pub fn values(&self) -> Vec<f64> {
        self.per_scan.iter().map(|s| s.value).collect()
    }

    pub fn clipped_fraction(&self) -> f64 {
        if self.per_scan.is_empty() {
            return 0.0;
        }
        self.per_scan.iter().filter(|s| s.clipped).count() as f64 / self.per_scan.len() as f64
    }

    pub fn dropped_total(&self) -> usize {
        self.per_scan.iter().map(|s| s.dropped).sum()
    }

    pub const CSV_HEADER: &'static str = "statistic,map,method,scans,aggregation,n,estimate,\
        scans_used,excluded,clipped_fraction,min,median,max";

    /// One CSV row matching [`CSV_HEADER`](Self::CSV_HEADER).
    pub fn to_csv_row(&self) -> String {
        let values = self.values();
        let (lo, hi) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let scans = match self.spec.scans {
            ScanPolicy::Direct => "direct".to_string(),
            ScanPolicy::Reverse => "reverse".to_string(),
            ScanPolicy::Uniform { count, .. } => format!("uniform:{count}"),
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.spec.statistic,
            self.spec.map.id(),
            self.spec.method,
            scans,
            self.spec.aggregation,
            self.n,
            sig12(self.estimate),
            values.len(),
            self.excluded,
            sig12(self.clipped_fraction()),
            sig12(lo),
            sig12(median(&values)),
            sig12(hi),
        )
    }
}

/// Mean of `values`.
pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Median with the midpoint convention for even counts.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    }
}

pub fn aggregate(values: &[f64], aggregation: Aggregation) -> f64 {
    match aggregation {
        Aggregation::Mean => mean(values),
        Aggregation::None | Aggregation::Median => median(values),
    }
}

/// Per-scan estimate from a trajectory.
///
/// With `centered = Some((m, b, center))` the regression is of
/// `log |T_k - center|` over `k = m..=b+m`; otherwise of `log T_k` over
/// `k = trim_n0..=n`.
pub fn estimate_trajectory(
    traj: &Trajectory,
    spec: &EstimatorSpec,
    centered: Option<(usize, usize, f64)>,
) -> Result<ScanEstimate> {
    let (slope_fit, dropped) = match centered {
        None => {
            let sample = build_loglog_sample(traj, spec.trim_n0, None)?;
            (fit(&sample, spec.method)?, sample.dropped.len())
        }
        Some((m, b, center)) => {
            let sample = build_range(traj, m, b + m, Some(center)).map_err(|e| match e {
                Error::InsufficientSample { retained, requested, .. } => Error::DegenerateData(
                    format!("{retained} of {requested} window points differ from T_n"),
                ),
                other => other,
            })?;
            let f = match spec.method {
                Method::OlsIntercept => fit_windowed(&sample, m, b)?,
                other => fit(&sample, other)?,
            };
            (f, sample.dropped.len())
        }
    };
    let inv = spec.map.invert_slope(slope_fit.slope)?;
    Ok(ScanEstimate {
        value: inv.value,
        clipped: inv.clipped,
        scan_start: traj.scan.start(),
        fit: slope_fit,
        dropped,
    })
}

/// Runs the configured pipeline on `series`.
pub fn estimate(series: &[f64], spec: &EstimatorSpec) -> Result<EstimateReport> {
    spec.validate()?;
    let n = series.len();
    if n < 2 {
        return Err(Error::InsufficientSample {
            retained: n,
            requested: n,
            reason: "series shorter than two observations",
        });
    }
    let centered = match spec.centered {
        Some(w) => {
            let (m, b) = w.resolve(n)?;
            Some((m, b, batch_value(series, spec.statistic)?))
        }
        None => None,
    };
    let scans = spec.scans.scans(n)?;
    let total = scans.len();
    let mut per_scan = Vec::with_capacity(total);
    let mut first_error = None;
    for scan in &scans {
        let result = trajectory(series, scan, spec.statistic)
            .and_then(|t| estimate_trajectory(&t, spec, centered));
        match result {
            Ok(est) => per_scan.push(est),
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    let excluded = total - per_scan.len();
    if per_scan.is_empty() || 2 * excluded > total {
        if total == 1 {
            return Err(first_error.expect("one failed scan"));
        }
        return Err(Error::TooManyFailures {
            what: "scans",
            failed: excluded,
            total,
            limit: total / 2,
        });
    }
    let values: Vec<f64> = per_scan.iter().map(|s| s.value).collect();
    Ok(EstimateReport {
        estimate: aggregate(&values, spec.aggregation),
        per_scan,
        excluded,
        n,
        center: centered.map(|c| c.2),
        window: centered.map(|c| (c.0, c.1)),
        spec: spec.clone(),
    })
}

/// Single-scan uncentered estimate (`aggregation` must be `None`).
pub fn estimate_uncentered_single(series: &[f64], spec: &EstimatorSpec) -> Result<EstimateReport> {
    if spec.aggregation != Aggregation::None || spec.centered.is_some() {
        return Err(Error::InvalidParameter(
            "single-scan estimate takes an uncentered spec without aggregation".into(),
        ));
    }
    estimate(series, spec)
}

/// Scan-aggregated uncentered estimate (mean or median over the scans).
pub fn estimate_scanned(series: &[f64], spec: &EstimatorSpec) -> Result<EstimateReport> {
    if spec.aggregation == Aggregation::None || spec.centered.is_some() {
        return Err(Error::InvalidParameter(
            "scanned estimate takes an uncentered spec with mean or median aggregation".into(),
        ));
    }
    estimate(series, spec)
}

/// Centered estimate: regression of `log |T_k - T_n|` on `log k` over the window.
pub fn estimate_centered(series: &[f64], spec: &EstimatorSpec) -> Result<EstimateReport> {
    if spec.centered.is_none() {
        return Err(Error::InvalidParameter("centered estimate needs a window".into()));
    }
    estimate(series, spec)
}

/// `k^(-G) T_k`, which turns a statistic converging to zero at rate
/// `k^g` with `G < g < 0` into one diverging at rate `k^(g - G)`.
///
/// The intercept-fit slope of the result is the original slope minus `G`.
pub fn diverging_transform(traj: &Trajectory, lower_bound: f64) -> Result<Trajectory> {
    if traj.values.iter().any(|&t| t < 0.0) {
        return Err(Error::Domain("diverging transform needs a nonnegative statistic".into()));
    }
    let mut out = traj.clone();
    for (i, t) in out.values.iter_mut().enumerate() {
        *t *= ((i + 1) as f64).powf(-lower_bound);
    }
    Ok(out)
}

/// Median over `r = 2..=max_order` of median-aggregated estimates based on
/// the `r`-th absolute moment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedEstimate {
    pub estimate: f64,
    /// `(r, estimate)` for each order.
    pub per_order: Vec<(u32, f64)>,
}

/// Combined median estimate over absolute-moment orders `2..=max_order`.
///
/// Each order uses the base spec's scans, method and trimming, the absolute
/// moment in the base statistic's form (average form when it has none), and
/// the matching tail map.
pub fn combined_median_estimate(
    series: &[f64],
    base: &EstimatorSpec,
    max_order: u32,
) -> Result<CombinedEstimate> {
    if max_order < 2 {
        return Err(Error::InvalidParameter(format!(
            "combined estimate needs R >= 2, got {max_order}"
        )));
    }
    let form = base.statistic.form().unwrap_or(Form::Average);
    let mut per_order = Vec::with_capacity(max_order as usize - 1);
    for r in 2..=max_order {
        let spec = EstimatorSpec {
            statistic: Statistic::abs_moment(r, form),
            map: RateMap::tail_moment(r, form),
            aggregation: Aggregation::Median,
            centered: None,
            ..base.clone()
        };
        per_order.push((r, estimate(series, &spec)?.estimate));
    }
    let values: Vec<f64> = per_order.iter().map(|p| p.1).collect();
    Ok(CombinedEstimate {
        estimate: median(&values),
        per_order,
    })
}
