//! Monte Carlo harness: replicated estimator runs over simulated models,
//! empirical MSE/bias/variance, and the two simulation tables.
//!
//! Replicate `r` of a cell draws its series from the stream
//! `(seed, "data/" + label, r)` and, for scanned estimators, its scans from
//! the seed `derive_seed(seed, "scans/" + label, r)`. Cells that share a
//! label therefore see the same series and the same scans, and the scan sets
//! of different `N` are nested.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blockstats::{trajectory, Statistic};
use crate::error::{Error, Result};
use crate::estimate::{
    aggregate, estimate, estimate_trajectory, hill_estimate_tail, median, Aggregation,
    EstimatorSpec, HillTail, ScanPolicy,
};
use crate::format::sig12;
use crate::ratemap::RateMap;
use crate::simulate::{generate, InnovationSpec, ModelSpec};
use crate::stream;

/// Largest tolerated fraction of failed replicates in a cell.
pub const MAX_FAILED_FRACTION: f64 = 0.1;

/// Default replicate count of the tables.
pub const DEFAULT_REPLICATES: usize = 100;

/// What a cell estimates on each replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum CellEstimator {
    Rate(EstimatorSpec),
    Hill {
        q: usize,
        #[serde(default)]
        tail: HillTail,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    /// Names the data and scan streams.
    pub label: String,
    pub model: ModelSpec,
    pub estimator: CellEstimator,
    pub replicates: usize,
    pub truth: f64,
    pub seed: u64,
}

impl CellSpec {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidParameter("a cell needs at least one replicate".into()));
        }
        self.model.validate()?;
        match &self.estimator {
            CellEstimator::Rate(spec) => {
                spec.validate()?;
                let dom = spec.map.lambda_domain();
                let at_clip = spec
                    .map
                    .clip
                    .is_some_and(|(lo, hi)| self.truth == lo || self.truth == hi);
                if !(dom.contains(self.truth) || at_clip) {
                    return Err(Error::Domain(format!(
                        "true value {} outside the domain of map `{}`",
                        self.truth,
                        spec.map.id()
                    )));
                }
            }
            CellEstimator::Hill { q, .. } => {
                if *q == 0 || *q >= self.model.n {
                    return Err(Error::Domain(format!(
                        "Hill q = {q} outside [1, n - 1] for n = {}",
                        self.model.n
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Empirical error summary of a cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub mse: f64,
    pub bias: f64,
    /// Population form (divisor = number of successful replicates).
    pub variance: f64,
    pub replicates: usize,
    pub failed: usize,
    /// Per-replicate estimates in replicate order; `None` marks a failure.
    pub estimates: Vec<Option<f64>>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl McResult {
    /// Summarises per-replicate estimates against `truth`.
    ///
    /// Errors when more than [`MAX_FAILED_FRACTION`] of the replicates failed.
    pub fn from_estimates(estimates: Vec<Option<f64>>, truth: f64) -> Result<Self> {
        let replicates = estimates.len();
        let ok: Vec<f64> = estimates.iter().flatten().copied().collect();
        let failed = replicates - ok.len();
        let limit = (MAX_FAILED_FRACTION * replicates as f64).floor() as usize;
        if ok.is_empty() || failed > limit {
            return Err(Error::TooManyFailures {
                what: "replicates",
                failed,
                total: replicates,
                limit,
            });
        }
        let m = ok.len() as f64;
        let mean = ok.iter().sum::<f64>() / m;
        let mse = ok.iter().map(|e| (e - truth).powi(2)).sum::<f64>() / m;
        let variance = ok.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / m;
        Ok(Self {
            mse,
            bias: mean - truth,
            variance,
            replicates,
            failed,
            estimates,
            wall_time: Duration::ZERO,
        })
    }

    pub fn successes(&self) -> Vec<f64> {
        self.estimates.iter().flatten().copied().collect()
    }
}

/// The series of replicate `r` of the cell labelled `label`.
pub fn replicate_series(model: &ModelSpec, label: &str, seed: u64, r: usize) -> Result<Vec<f64>> {
    generate(model, &mut stream::derive(seed, &format!("data/{label}"), r as u64))
}

/// Seed of the scan stream of replicate `r`.
pub fn replicate_scan_seed(label: &str, seed: u64, r: usize) -> u64 {
    stream::derive_seed(seed, &format!("scans/{label}"), r as u64)
}

/// Runs `f(series, scan_seed)` on every replicate in parallel and returns the
/// rows in replicate order. A generation failure fails the whole run.
pub fn replicate_rows<T, F>(
    model: &ModelSpec,
    label: &str,
    seed: u64,
    replicates: usize,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&[f64], u64) -> T + Sync,
{
    (0..replicates)
        .into_par_iter()
        .map(|r| {
            let x = replicate_series(model, label, seed, r)?;
            Ok(f(&x, replicate_scan_seed(label, seed, r)))
        })
        .collect()
}

/// Runs a cell with an arbitrary estimator in place of the configured one.
pub fn run_cell_with<F>(cell: &CellSpec, f: F) -> Result<McResult>
where
    F: Fn(&[f64], u64) -> Result<f64> + Sync,
{
    if cell.replicates == 0 {
        return Err(Error::InvalidParameter("a cell needs at least one replicate".into()));
    }
    let start = Instant::now();
    let rows = replicate_rows(&cell.model, &cell.label, cell.seed, cell.replicates, |x, s| {
        f(x, s).ok().filter(|v| !v.is_nan())
    })?;
    let mut res = McResult::from_estimates(rows, cell.truth)?;
    res.wall_time = start.elapsed();
    Ok(res)
}

pub fn run_cell(cell: &CellSpec) -> Result<McResult> {
    cell.validate()?;
    match &cell.estimator {
        CellEstimator::Rate(spec) => run_cell_with(cell, |x, scan_seed| {
            Ok(estimate(x, &spec.clone().reseeded(scan_seed))?.estimate)
        }),
        CellEstimator::Hill { q, tail } => {
            run_cell_with(cell, |x, _| Ok(hill_estimate_tail(x, *q, *tail)?.alpha))
        }
    }
}

/// Dependence panel of the tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Panel {
    A,
    B,
    C,
}

impl Panel {
    pub const ALL: [Panel; 3] = [Panel::A, Panel::B, Panel::C];

    pub fn rho(self) -> f64 {
        match self {
            Panel::A => 0.1,
            Panel::B => 0.7,
            Panel::C => -0.5,
        }
    }
}

impl std::fmt::Display for Panel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Panel::A => "a",
            Panel::B => "b",
            Panel::C => "c",
        })
    }
}

impl std::str::FromStr for Panel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" => Ok(Panel::A),
            "b" => Ok(Panel::B),
            "c" => Ok(Panel::C),
            other => Err(Error::InvalidParameter(format!("unknown panel `{other}`"))),
        }
    }
}

/// Innovation law of the tables, rows (i) to (vii).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Row {
    I,
    Ii,
    Iii,
    Iv,
    V,
    Vi,
    Vii,
}

impl Row {
    pub const ALL: [Row; 7] = [Row::I, Row::Ii, Row::Iii, Row::Iv, Row::V, Row::Vi, Row::Vii];

    pub fn innovation(self) -> InnovationSpec {
        // Burr(alpha, lambda, tau) with survival (lambda / (lambda + x^tau))^alpha
        let burr = (0.5, 1.0, 2.0);
        match self {
            Row::I => InnovationSpec::Cauchy,
            Row::Ii => InnovationSpec::Stable { alpha: 1.5, skew: 0.0 },
            Row::Iii => InnovationSpec::Stable { alpha: 1.9, skew: 0.0 },
            Row::Iv => InnovationSpec::Gaussian,
            Row::V => InnovationSpec::Pareto { shape: 2.0, scale: 1.0 },
            Row::Vi => InnovationSpec::Burr { c: burr.0, scale: burr.1, k: burr.2 },
            Row::Vii => InnovationSpec::BurrLogMod { c: burr.0, scale: burr.1, k: burr.2 },
        }
    }

    /// True tail index.
    pub fn alpha(self) -> f64 {
        self.innovation().tail_index()
    }
}

impl std::fmt::Display for Row {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Row::I => "i",
            Row::Ii => "ii",
            Row::Iii => "iii",
            Row::Iv => "iv",
            Row::V => "v",
            Row::Vi => "vi",
            Row::Vii => "vii",
        })
    }
}

impl std::str::FromStr for Row {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Row::ALL
            .into_iter()
            .find(|r| r.to_string() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown row `{s}`")))
    }
}

/// AR(1) model of a table cell.
pub fn table_model(panel: Panel, row: Row, n: usize) -> ModelSpec {
    ModelSpec::ar1(row.innovation(), panel.rho(), n)
}

/// Stream label shared by both tables for a `(panel, row)` model.
pub fn table_label(panel: Panel, row: Row) -> String {
    format!("model/{panel}/{row}")
}

/// Column of the first table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Table1Column {
    /// Direct scan.
    Single,
    /// Mean over `N` uniform scans.
    Mean,
    /// Median over `N` uniform scans.
    Median,
}

impl Table1Column {
    pub const ALL: [Table1Column; 3] = [Table1Column::Single, Table1Column::Mean, Table1Column::Median];

    pub fn id(self) -> &'static str {
        match self {
            Table1Column::Single => "alpha-hat",
            Table1Column::Mean => "alpha-star",
            Table1Column::Median => "alpha-star-star",
        }
    }
}

impl std::str::FromStr for Table1Column {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Table1Column::ALL
            .into_iter()
            .find(|c| c.id() == s.trim())
            .ok_or_else(|| Error::InvalidParameter(format!("unknown column `{s}`")))
    }
}

/// Settings shared by both tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableConfig {
    pub panel: Panel,
    pub rows: Vec<Row>,
    pub replicates: usize,
    pub n: usize,
    pub seed: u64,
    /// Order statistics ranked by the Hill estimator of the second table.
    pub hill_tail: HillTail,
}

impl TableConfig {
    pub fn new(panel: Panel, rows: Vec<Row>, replicates: usize, seed: u64) -> Self {
        Self {
            panel,
            rows,
            replicates,
            n: 1000,
            seed,
            hill_tail: HillTail::Upper,
        }
    }
}

/// Estimator spec of the first table: average-form sum of squares, the
/// `2/alpha - 1` map clipped to `(0, 2]`, OLS with intercept.
pub fn table1_spec() -> EstimatorSpec {
    EstimatorSpec::new(Statistic::MeanSquares)
        .with_map(RateMap::default_for(Statistic::MeanSquares))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "status")]
pub enum CellOutcome {
    Ok(McResult),
    /// Numbers were computed but the estimator does not apply to the model.
    NotApplicable(McResult),
    Failed { message: String },
}

impl CellOutcome {
    pub fn result(&self) -> Option<&McResult> {
        match self {
            CellOutcome::Ok(r) | CellOutcome::NotApplicable(r) => Some(r),
            CellOutcome::Failed { .. } => None,
        }
    }

    pub fn is_failed(&self) -> bool {
        matches!(self, CellOutcome::Failed { .. })
    }

    fn from_result(r: Result<McResult>) -> Self {
        match r {
            Ok(r) => CellOutcome::Ok(r),
            Err(e) => CellOutcome::Failed { message: e.to_string() },
        }
    }
}

/// One line of a table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub panel: Panel,
    pub row: Row,
    pub estimator: String,
    /// Scan count for scanned columns.
    #[serde(rename = "N")]
    pub scans: Option<usize>,
    pub q: Option<usize>,
    pub truth: f64,
    pub outcome: CellOutcome,
}

impl TableRow {
    pub fn mse(&self) -> Option<f64> {
        self.outcome.result().map(|r| r.mse)
    }
}

/// Run metadata echoed with every table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableMeta {
    pub table: u8,
    pub config: TableConfig,
    pub rho: f64,
    pub burn_in: usize,
    pub data_stream: String,
    pub scan_stream: String,
    /// Whether the scan sets of different `N` are nested per replicate.
    pub nested_scans: bool,
    pub scan_counts: Vec<usize>,
    pub q_values: Vec<usize>,
    pub q_grid: Vec<usize>,
}

/// Minimiser of the empirical Hill MSE over a q grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HillSearch {
    pub q_opt: usize,
    pub mse: f64,
    /// `(q, MSE)` over the grid, failed cells omitted.
    pub profile: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub meta: TableMeta,
    pub rows: Vec<TableRow>,
    /// Per-row optimum of the Hill search (second table only).
    pub q_opt: Vec<(Row, Option<HillSearch>)>,
}

pub const TABLE_CSV_HEADER: &str = "panel,row,estimator,N,q,replicates,mse,bias,variance,failed,seed";

impl Table {
    pub fn any_failed(&self) -> bool {
        self.rows.iter().any(|r| r.outcome.is_failed())
    }

    pub fn get(&self, row: Row, estimator: &str, scans: Option<usize>, q: Option<usize>) -> Option<&TableRow> {
        self.rows
            .iter()
            .find(|r| r.row == row && r.estimator == estimator && r.scans == scans && r.q == q)
    }

    /// CSV with [`TABLE_CSV_HEADER`]. Inapplicable cells print `n/a` in the
    /// error columns, failed cells `failed`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(TABLE_CSV_HEADER);
        out.push('\n');
        let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            let (reps, stats, failed) = match &r.outcome {
                CellOutcome::Ok(m) => (
                    m.replicates,
                    format!("{},{},{}", sig12(m.mse), sig12(m.bias), sig12(m.variance)),
                    m.failed.to_string(),
                ),
                CellOutcome::NotApplicable(m) => (m.replicates, "n/a,n/a,n/a".into(), m.failed.to_string()),
                CellOutcome::Failed { .. } => {
                    (self.meta.config.replicates, "failed,failed,failed".into(), String::new())
                }
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.panel,
                r.row,
                r.estimator,
                opt(r.scans),
                opt(r.q),
                reps,
                stats,
                failed,
                self.meta.config.seed
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serialises")
    }
}

/// Per-scan values of every column for one series.
///
/// Scans are drawn once for the largest `N`; the first `N` of them form the
/// `N`-scan set, so the result equals running [`estimate`] with an `N`-scan
/// spec under the same seed.
fn table1_replicate(
    x: &[f64],
    spec: &EstimatorSpec,
    scan_seed: u64,
    columns: &[(Table1Column, Option<usize>)],
) -> Vec<Option<f64>> {
    let max_n = columns.iter().filter_map(|c| c.1).max().unwrap_or(0);
    let per_scan: Vec<Option<f64>> = if max_n > 0 {
        let policy = ScanPolicy::Uniform { count: max_n, seed: scan_seed };
        match policy.scans(x.len()) {
            Ok(scans) => scans
                .iter()
                .map(|s| {
                    trajectory(x, s, spec.statistic)
                        .and_then(|t| estimate_trajectory(&t, spec, None))
                        .ok()
                        .map(|e| e.value)
                })
                .collect(),
            Err(_) => vec![None; max_n],
        }
    } else {
        Vec::new()
    };
    columns
        .iter()
        .map(|&(col, n_scans)| match (col, n_scans) {
            (Table1Column::Single, _) => estimate(x, spec).ok().map(|r| r.estimate),
            (_, Some(count)) => {
                let ok: Vec<f64> = per_scan[..count].iter().flatten().copied().collect();
                if ok.is_empty() || 2 * (count - ok.len()) > count {
                    return None;
                }
                let agg = if col == Table1Column::Mean {
                    Aggregation::Mean
                } else {
                    Aggregation::Median
                };
                Some(aggregate(&ok, agg))
            }
            (_, None) => None,
        })
        .collect()
}

/// The first table: MSE of the single-scan, scan-mean and scan-median tail
/// estimators for each requested row.
pub fn table1(config: &TableConfig, columns: &[Table1Column], scan_counts: &[usize]) -> Result<Table> {
    if config.replicates == 0 {
        return Err(Error::InvalidParameter("replicates must be at least 1".into()));
    }
    if scan_counts.contains(&0) {
        return Err(Error::InvalidParameter("scan counts must be positive".into()));
    }
    let spec = table1_spec();
    let mut cols: Vec<(Table1Column, Option<usize>)> = Vec::new();
    for &c in columns {
        if c == Table1Column::Single {
            cols.push((c, None));
        } else {
            cols.extend(scan_counts.iter().map(|&n| (c, Some(n))));
        }
    }
    let mut rows = Vec::new();
    for &row in &config.rows {
        let model = table_model(config.panel, row, config.n);
        let label = table_label(config.panel, row);
        let start = Instant::now();
        let matrix = replicate_rows(&model, &label, config.seed, config.replicates, |x, s| {
            table1_replicate(x, &spec, s, &cols)
        })?;
        let elapsed = start.elapsed();
        for (j, &(col, n_scans)) in cols.iter().enumerate() {
            let column: Vec<Option<f64>> = matrix.iter().map(|m| m[j]).collect();
            let outcome = CellOutcome::from_result(McResult::from_estimates(column, row.alpha()).map(
                |mut m| {
                    m.wall_time = elapsed;
                    m
                },
            ));
            rows.push(TableRow {
                panel: config.panel,
                row,
                estimator: col.id().to_string(),
                scans: n_scans,
                q: None,
                truth: row.alpha(),
                outcome,
            });
        }
    }
    Ok(Table {
        meta: meta(1, config, scan_counts.to_vec(), Vec::new(), Vec::new()),
        rows,
        q_opt: Vec::new(),
    })
}

fn meta(table: u8, config: &TableConfig, scans: Vec<usize>, q_values: Vec<usize>, q_grid: Vec<usize>) -> TableMeta {
    TableMeta {
        table,
        config: config.clone(),
        rho: config.panel.rho(),
        burn_in: crate::simulate::DEFAULT_BURN_IN,
        data_stream: "data/model/{panel}/{row}".into(),
        scan_stream: "scans/model/{panel}/{row}".into(),
        nested_scans: true,
        scan_counts: scans,
        q_values,
        q_grid,
    }
}

/// `20, 40, ..., 400`.
pub fn default_q_grid() -> Vec<usize> {
    (1..=20).map(|i| 20 * i).collect()
}

/// Hill MSE at or above which a row is reported as inapplicable.
pub const HILL_DIVERGENCE_MSE: f64 = 0.5;

/// Empirical Hill MSE for every q in `grid` on the cell's replicates; the
/// minimiser (ties toward smaller q) and its MSE.
pub fn hill_qopt_search(
    model: &ModelSpec,
    label: &str,
    grid: &[usize],
    replicates: usize,
    truth: f64,
    seed: u64,
    tail: HillTail,
) -> Result<HillSearch> {
    let results = hill_columns(model, label, grid, replicates, truth, seed, tail)?;
    search_from(grid, &results)
}

fn search_from(grid: &[usize], results: &[Result<McResult>]) -> Result<HillSearch> {
    let profile: Vec<(usize, f64)> = grid
        .iter()
        .zip(results)
        .filter_map(|(&q, r)| r.as_ref().ok().map(|m| (q, m.mse)))
        .collect();
    let best = profile
        .iter()
        .copied()
        .fold(None, |acc: Option<(usize, f64)>, (q, mse)| match acc {
            Some((bq, bm)) if bm < mse || (bm == mse && bq < q) => Some((bq, bm)),
            _ => Some((q, mse)),
        })
        .ok_or_else(|| Error::DegenerateData("every q in the Hill grid failed".into()))?;
    Ok(HillSearch {
        q_opt: best.0,
        mse: best.1,
        profile,
    })
}

fn hill_columns(
    model: &ModelSpec,
    label: &str,
    qs: &[usize],
    replicates: usize,
    truth: f64,
    seed: u64,
    tail: HillTail,
) -> Result<Vec<Result<McResult>>> {
    if let Some(&q) = qs.iter().find(|&&q| q == 0 || q >= model.n) {
        return Err(Error::Domain(format!("Hill q = {q} outside [1, n - 1] for n = {}", model.n)));
    }
    let matrix = replicate_rows(model, label, seed, replicates, |x, _| {
        qs.iter()
            .map(|&q| hill_estimate_tail(x, q, tail).ok().map(|h| h.alpha))
            .collect::<Vec<_>>()
    })?;
    Ok((0..qs.len())
        .map(|j| McResult::from_estimates(matrix.iter().map(|m| m[j]).collect(), truth))
        .collect())
}

/// The second table: Hill MSE at each `q`, plus the optimum over `grid`.
///
/// Rows whose innovations have no power-law tail, and rows whose optimal MSE
/// reaches [`HILL_DIVERGENCE_MSE`], are marked inapplicable in every cell:
/// the Hill estimate diverges as `q / n -> 0` there, whatever the finite-q
/// numbers look like.
pub fn table2(config: &TableConfig, q_values: &[usize], grid: &[usize]) -> Result<Table> {
    if config.replicates == 0 {
        return Err(Error::InvalidParameter("replicates must be at least 1".into()));
    }
    let mut rows = Vec::new();
    let mut q_opt = Vec::new();
    for &row in &config.rows {
        let model = table_model(config.panel, row, config.n);
        let label = table_label(config.panel, row);
        let mut qs: Vec<usize> = q_values.iter().chain(grid).copied().collect();
        qs.sort_unstable();
        qs.dedup();
        let results = hill_columns(
            &model,
            &label,
            &qs,
            config.replicates,
            row.alpha(),
            config.seed,
            config.hill_tail,
        )?;
        let pick = |q: usize| results[qs.binary_search(&q).expect("q present")].clone();
        let grid_results: Vec<Result<McResult>> = grid.iter().map(|&q| pick(q)).collect();
        let search = search_from(grid, &grid_results).ok();
        let diverges = row.innovation().is_light_tailed()
            || search.as_ref().is_none_or(|s| s.mse >= HILL_DIVERGENCE_MSE);
        let mut cells: Vec<(Option<usize>, Result<McResult>)> =
            q_values.iter().map(|&q| (Some(q), pick(q))).collect();
        if let Some(s) = &search {
            cells.push((None, pick(s.q_opt)));
        }
        for (q, r) in cells {
            let estimator = if q.is_some() { "hill" } else { "hill-qopt" };
            let outcome = match CellOutcome::from_result(r) {
                CellOutcome::Ok(m) if diverges => CellOutcome::NotApplicable(m),
                other => other,
            };
            rows.push(TableRow {
                panel: config.panel,
                row,
                estimator: estimator.into(),
                scans: None,
                q: q.or(search.as_ref().map(|s| s.q_opt)),
                truth: row.alpha(),
                outcome,
            });
        }
        q_opt.push((row, search));
    }
    Ok(Table {
        meta: meta(2, config, Vec::new(), q_values.to_vec(), grid.to_vec()),
        rows,
        q_opt,
    })
}

/// Median absolute error at one sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n: usize,
    pub median_abs_error: f64,
    pub failed: usize,
}

/// Median `|estimate - truth|` along an increasing grid of sample sizes.
pub fn consistency_sweep(
    model: &ModelSpec,
    spec: &EstimatorSpec,
    n_grid: &[usize],
    replicates: usize,
    truth: f64,
    seed: u64,
) -> Result<Vec<SweepPoint>> {
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("sample-size grid must increase".into()));
    }
    n_grid
        .iter()
        .map(|&n| {
            let cell = CellSpec {
                label: format!("sweep/{n}"),
                model: model.clone().with_n(n),
                estimator: CellEstimator::Rate(spec.clone()),
                replicates,
                truth,
                seed,
            };
            let res = run_cell(&cell)?;
            let errs: Vec<f64> = res.successes().iter().map(|e| (e - truth).abs()).collect();
            Ok(SweepPoint {
                n,
                median_abs_error: median(&errs),
                failed: res.failed,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::ScanPolicy;

    fn cell(reps: usize) -> CellSpec {
        CellSpec {
            label: "t".into(),
            model: ModelSpec::iid(InnovationSpec::Gaussian, 50),
            estimator: CellEstimator::Rate(table1_spec()),
            replicates: reps,
            truth: 2.0,
            seed: 9,
        }
    }

    #[test]
    fn injected_estimators() {
        let exact = run_cell_with(&cell(20), |_, _| Ok(2.0)).unwrap();
        assert_eq!((exact.mse, exact.bias, exact.variance), (0.0, 0.0, 0.0));
        let off = run_cell_with(&cell(20), |_, _| Ok(2.1)).unwrap();
        assert!((off.mse - 0.01).abs() < 1e-12);
        assert!((off.bias - 0.1).abs() < 1e-12);
        assert!(off.variance.abs() < 1e-24);
    }

    #[test]
    fn single_replicate_is_squared_error() {
        let res = run_cell(&cell(1)).unwrap();
        let e = res.estimates[0].unwrap();
        assert_eq!(res.mse, (e - 2.0).powi(2));
    }

    #[test]
    fn failure_threshold() {
        let c = cell(20);
        let r = run_cell_with(&c, |x, _| if x[0] > 1.0 { Err(Error::DegenerateData("x".into())) } else { Ok(2.0) });
        // P(Z > 1) = 0.16, so more than 2 of 20 fail for this seed or not; check consistency
        let failing = (0..20)
            .filter(|&r| replicate_series(&c.model, "t", 9, r).unwrap()[0] > 1.0)
            .count();
        assert_eq!(r.is_ok(), failing <= 2, "{failing}");
        let too_many = run_cell_with(&c, |_, _| Err(Error::DegenerateData("x".into())));
        assert!(matches!(too_many, Err(Error::TooManyFailures { failed: 20, .. })));
    }

    #[test]
    fn mse_decomposition() {
        let c = CellSpec {
            estimator: CellEstimator::Rate(table1_spec().scanned(10, 0, Aggregation::Mean)),
            ..cell(30)
        };
        let r = run_cell(&c).unwrap();
        assert!((r.mse - (r.bias * r.bias + r.variance)).abs() < 1e-10);
    }

    #[test]
    fn fast_path_matches_run_cell() {
        let config = TableConfig {
            n: 120,
            ..TableConfig::new(Panel::B, vec![Row::Ii], 6, 3)
        };
        let t = table1(&config, &Table1Column::ALL, &[5, 12]).unwrap();
        let model = table_model(Panel::B, Row::Ii, 120);
        let label = table_label(Panel::B, Row::Ii);
        for (col, n_scans) in [
            (Table1Column::Single, None),
            (Table1Column::Mean, Some(5)),
            (Table1Column::Median, Some(12)),
        ] {
            let spec = match n_scans {
                None => table1_spec(),
                Some(n) => table1_spec().with_scans(ScanPolicy::Uniform { count: n, seed: 0 }).with_aggregation(
                    if col == Table1Column::Mean { Aggregation::Mean } else { Aggregation::Median },
                ),
            };
            let direct = run_cell(&CellSpec {
                label: label.clone(),
                model: model.clone(),
                estimator: CellEstimator::Rate(spec),
                replicates: 6,
                truth: 1.5,
                seed: 3,
            })
            .unwrap();
            let row = t.get(Row::Ii, col.id(), n_scans, None).unwrap();
            assert_eq!(row.outcome.result().unwrap().estimates, direct.estimates);
        }
    }

    #[test]
    fn deterministic_csv() {
        let config = TableConfig {
            n: 200,
            ..TableConfig::new(Panel::A, vec![Row::I, Row::Iv], 8, 11)
        };
        let a = table1(&config, &Table1Column::ALL, &[4]).unwrap().to_csv();
        let b = table1(&config, &Table1Column::ALL, &[4]).unwrap().to_csv();
        assert_eq!(a, b);
        assert!(a.starts_with(TABLE_CSV_HEADER));
        assert_eq!(a.lines().count(), 1 + 2 * 3);
    }

    #[test]
    fn qopt_ties_toward_smaller_q() {
        let ok = |m: f64| McResult::from_estimates(vec![Some(1.0 + m.sqrt())], 1.0);
        let s = search_from(&[10, 20, 30], &[ok(0.5), ok(0.25), ok(0.25)]).unwrap();
        assert_eq!(s.q_opt, 20);
    }

    #[test]
    fn labels_and_parsing() {
        assert_eq!("iii".parse::<Row>().unwrap(), Row::Iii);
        assert_eq!("B".parse::<Panel>().unwrap(), Panel::B);
        assert!("viii".parse::<Row>().is_err());
        assert_eq!(Row::Vi.alpha(), 1.0);
        assert_eq!(Row::V.alpha(), 2.0);
        assert_eq!(table_label(Panel::C, Row::Vii), "model/c/vii");
    }

    #[test]
    fn sweep_rejects_unsorted_grid() {
        let m = ModelSpec::iid(InnovationSpec::Cauchy, 10);
        assert!(consistency_sweep(&m, &table1_spec(), &[100, 50], 2, 1.0, 0).is_err());
    }
}
