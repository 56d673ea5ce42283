//! `scanrate`: estimate rates on data, simulate models, run the table studies.

mod config;
mod input;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use scanrate::blockstats::{trajectory, Statistic, Trajectory};
use scanrate::estimate::{estimate, Aggregation, CenteredWindow, EstimateReport, EstimatorSpec, HillTail, ScanPolicy};
use scanrate::experiment::{
    default_q_grid, table1, table2, Panel, Row, Table, Table1Column, TableConfig, DEFAULT_REPLICATES,
};
use scanrate::format::sig12;
use scanrate::ratemap::RateMap;
use scanrate::regress::Method;
use scanrate::scan::{direct_scan, reverse_scan, uniform_random_scan, ScanPath};
use scanrate::simulate::{
    generate, Dependence, EpsilonLaw, InnovationSpec, ModelSpec, Subordinator, DEFAULT_BURN_IN,
};
use scanrate::stream;

#[derive(Parser, Debug)]
#[command(name = "scanrate", version, about = "Rate estimation from log-log regressions along nested-block scans")]
struct Cli {
    /// Flat `key = value` file; explicit flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker thread cap for the table studies.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate a rate on a series.
    Estimate(EstimateArgs),
    /// Export the log-log scatter of one scan.
    Diagnose(DiagnoseArgs),
    /// Draw a series from a model.
    Simulate(SimulateArgs),
    /// Monte Carlo MSEs of the scan-based tail estimators.
    Table1(Table1Args),
    /// Monte Carlo MSEs of the Hill estimator.
    Table2(Table2Args),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScanKind {
    Direct,
    Reverse,
    Uniform,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    /// Series file, or `-` for stdin.
    input: String,
    #[arg(long, default_value = "sum-squares")]
    stat: Statistic,
    /// Rate map id; defaults to the statistic's own map.
    #[arg(long)]
    map: Option<String>,
    #[arg(long, default_value = "ols-intercept")]
    method: Method,
    /// First block size entering the regression.
    #[arg(long, default_value_t = 1)]
    trim: usize,
    /// Scan kind; uniform when `--scans` exceeds 1, direct otherwise.
    #[arg(long, value_enum)]
    scan: Option<ScanKind>,
    #[arg(long, default_value_t = 1)]
    scans: usize,
    /// Aggregation; median when `--scans` exceeds 1, none otherwise.
    #[arg(long)]
    agg: Option<Aggregation>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Center at the full-sample value and fit over the window `m..=b+m`.
    #[arg(long)]
    centered: bool,
    #[arg(long, default_value_t = 10)]
    m: usize,
    /// Window width; `floor(n^(2/3))` when absent.
    #[arg(long)]
    b: Option<usize>,
    /// `lo,hi` clip interval, or `none`.
    #[arg(long)]
    clip: Option<String>,
    /// Write the full report as JSON.
    #[arg(long, value_name = "FILE")]
    json: Option<PathBuf>,
    /// Print a CSV header and row instead of the text summary.
    #[arg(long)]
    csv: bool,
}

#[derive(Args, Debug)]
struct DiagnoseArgs {
    input: String,
    #[arg(long, default_value = "sum-squares")]
    stat: Statistic,
    /// `direct`, `reverse`, `uniform` (with `--seed`) or an explicit `j:LR..` scan.
    #[arg(long, default_value = "direct")]
    scan: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    trim: usize,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModelKind {
    Iid,
    Ar1,
    Fir,
    Fgn,
    Subordinated,
    Product,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum InnovKind {
    Cauchy,
    Gaussian,
    Stable,
    Pareto,
    Burr,
    BurrLogmod,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EpsKind {
    Stable,
    Pareto,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value = "iid")]
    model: ModelKind,
    #[arg(long, value_enum, default_value = "gaussian")]
    innov: InnovKind,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Stable index, or the tail index of the product model.
    #[arg(long, default_value_t = 1.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    skew: f64,
    #[arg(long, default_value_t = 2.0)]
    shape: f64,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Burr exponent on `z`.
    #[arg(long, default_value_t = 0.5)]
    c: f64,
    /// Burr outer exponent.
    #[arg(long, default_value_t = 2.0)]
    k: f64,
    #[arg(long, default_value_t = 0.1)]
    rho: f64,
    /// Comma-separated filter weights.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    coef: Vec<f64>,
    #[arg(long, default_value_t = 0.75)]
    hurst: f64,
    #[arg(long, default_value = "identity")]
    h: Subordinator,
    #[arg(long, default_value_t = 0.0)]
    zeta: f64,
    #[arg(long, value_enum, default_value = "stable")]
    eps: EpsKind,
    #[arg(long, default_value_t = DEFAULT_BURN_IN)]
    burn_in: usize,
    /// Output file; a `.json` sidecar is written next to it. Stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TableArgs {
    #[arg(long, default_value = "a")]
    panel: Panel,
    /// Comma-separated rows `i`..`vii`; all when absent.
    #[arg(long, value_delimiter = ',')]
    rows: Vec<Row>,
    #[arg(long, default_value_t = DEFAULT_REPLICATES)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// CSV output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Full table with metadata as JSON.
    #[arg(long, value_name = "FILE")]
    json: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Table1Args {
    #[command(flatten)]
    table: TableArgs,
    #[arg(long, value_delimiter = ',')]
    columns: Vec<Table1Column>,
    /// Scan counts for the aggregated columns.
    #[arg(long, value_delimiter = ',', default_value = "100,200")]
    scans_list: Vec<usize>,
}

#[derive(Args, Debug)]
struct Table2Args {
    #[command(flatten)]
    table: TableArgs,
    #[arg(long, value_delimiter = ',', default_value = "100,200,300,400")]
    q: Vec<usize>,
    /// Search grid for the MSE-optimal q; `20,40,..,400` when absent.
    #[arg(long, value_delimiter = ',')]
    grid: Vec<usize>,
    #[arg(long, default_value = "upper")]
    hill_tail: HillTail,
}

/// Exit status 2: bad input or flags. Exit status 1: the computation failed.
enum Failure {
    Input(anyhow::Error),
    Run(anyhow::Error),
}

type CmdResult = std::result::Result<(), Failure>;

fn input_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Input(e.into())
}

fn run_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Run(e.into())
}

fn main() -> ExitCode {
    let args = match config::expand(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(args);
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = match cli.command {
        Command::Estimate(a) => cmd_estimate(a),
        Command::Diagnose(a) => cmd_diagnose(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Table1(a) => cmd_table1(a),
        Command::Table2(a) => cmd_table2(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn write_text(path: &Path, text: &str) -> CmdResult {
    fs::write(path, text)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(input_err)
}

fn parse_clip(s: &str) -> anyhow::Result<Option<(f64, f64)>> {
    if s == "none" {
        return Ok(None);
    }
    let (lo, hi) = s.split_once(',').ok_or_else(|| anyhow!("--clip expects `lo,hi` or `none`"))?;
    let lo: f64 = lo.trim().parse().context("clip lower bound")?;
    let hi: f64 = hi.trim().parse().context("clip upper bound")?;
    if !(lo < hi) {
        bail!("clip bounds must satisfy lo < hi");
    }
    Ok(Some((lo, hi)))
}

fn build_spec(a: &EstimateArgs) -> anyhow::Result<EstimatorSpec> {
    if a.scans == 0 {
        bail!("--scans must be at least 1");
    }
    let mut map = match &a.map {
        Some(id) => RateMap::parse_for(id, a.stat)?,
        None => RateMap::default_for(a.stat),
    };
    if let Some(c) = &a.clip {
        map = map.with_clip(parse_clip(c)?);
    }
    let kind = a.scan.unwrap_or(if a.scans > 1 { ScanKind::Uniform } else { ScanKind::Direct });
    let scans = match kind {
        ScanKind::Direct | ScanKind::Reverse if a.scans > 1 => {
            bail!("--scans {} needs --scan uniform", a.scans)
        }
        ScanKind::Direct => ScanPolicy::Direct,
        ScanKind::Reverse => ScanPolicy::Reverse,
        ScanKind::Uniform => ScanPolicy::Uniform {
            count: a.scans,
            seed: a.seed,
        },
    };
    let aggregation = a
        .agg
        .unwrap_or(if a.scans > 1 { Aggregation::Median } else { Aggregation::None });
    let mut spec = EstimatorSpec::new(a.stat)
        .with_map(map)
        .with_method(a.method)
        .with_trim(a.trim)
        .with_scans(scans)
        .with_aggregation(aggregation);
    if a.centered {
        spec = spec.with_centered(CenteredWindow { m: a.m, b: a.b });
    }
    spec.validate()?;
    Ok(spec)
}

fn summary(report: &EstimateReport) -> String {
    let values = report.values();
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let spec = serde_json::to_string(&report.spec).expect("spec serialises");
    let mut out = format!(
        "estimate: {}\nn: {}\nscans: {} used, {} excluded\nper-scan min: {}\nper-scan median: {}\n\
         per-scan max: {}\nclipped fraction: {}\ndropped k: {}\n",
        sig12(report.estimate),
        report.n,
        values.len(),
        report.excluded,
        sig12(lo),
        sig12(scanrate::estimate::median(&values)),
        sig12(hi),
        sig12(report.clipped_fraction()),
        report.dropped_total(),
    );
    if let (Some(c), Some((m, b))) = (report.center, report.window) {
        out.push_str(&format!("center: {}\nwindow: m = {m}, b = {b}\n", sig12(c)));
    }
    out.push_str(&format!("spec: {spec}\n"));
    out
}

fn cmd_estimate(a: EstimateArgs) -> CmdResult {
    let series = input::read_series(&a.input, input::MIN_LENGTH).map_err(input_err)?;
    let spec = build_spec(&a).map_err(input_err)?;
    let report = estimate(&series, &spec).map_err(run_err)?;
    if a.csv {
        println!("{}\n{}", EstimateReport::CSV_HEADER, report.to_csv_row());
    } else {
        print!("{}", summary(&report));
    }
    if let Some(path) = &a.json {
        let body = json!({ "input": a.input, "seed": a.seed, "report": report });
        write_text(path, &serde_json::to_string_pretty(&body).expect("report serialises"))?;
    }
    Ok(())
}

fn diagnose_scan(choice: &str, seed: u64, n: usize) -> anyhow::Result<ScanPath> {
    let scan = match choice {
        "direct" => direct_scan(n)?,
        "reverse" => reverse_scan(n)?,
        "uniform" => uniform_random_scan(n, &mut stream::derive(seed, "scans", 0))?,
        explicit => {
            let scan: ScanPath = explicit.parse()?;
            if scan.n() != n {
                bail!("scan `{explicit}` covers {} points but the series has {n}", scan.n());
            }
            scan
        }
    };
    Ok(scan)
}

/// Every `k` from `trim` on; blocks with `T_k <= 0` are kept with an empty `Y_k`.
fn scatter_csv(traj: &Trajectory, trim: usize) -> String {
    let mut out = String::from("k,log_k,Y_k,retained\n");
    for k in trim..=traj.n() {
        let t = traj.at(k);
        let log_k = sig12((k as f64).ln());
        if t > 0.0 && t.is_finite() {
            out.push_str(&format!("{k},{log_k},{},true\n", sig12(t.ln())));
        } else {
            out.push_str(&format!("{k},{log_k},,false\n"));
        }
    }
    out
}

fn cmd_diagnose(a: DiagnoseArgs) -> CmdResult {
    let series = input::read_series(&a.input, 1).map_err(input_err)?;
    let scan = diagnose_scan(&a.scan, a.seed, series.len()).map_err(input_err)?;
    if a.trim == 0 || a.trim > series.len() {
        return Err(input_err(anyhow!("--trim must lie in 1..={}", series.len())));
    }
    let traj = trajectory(&series, &scan, a.stat).map_err(run_err)?;
    let csv = scatter_csv(&traj, a.trim);
    match &a.out {
        Some(p) => write_text(p, &csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn model_from(a: &SimulateArgs) -> ModelSpec {
    let innovation = match a.innov {
        InnovKind::Cauchy => InnovationSpec::Cauchy,
        InnovKind::Gaussian => InnovationSpec::Gaussian,
        InnovKind::Stable => InnovationSpec::Stable {
            alpha: a.alpha,
            skew: a.skew,
        },
        InnovKind::Pareto => InnovationSpec::Pareto {
            shape: a.shape,
            scale: a.scale,
        },
        InnovKind::Burr => InnovationSpec::Burr {
            c: a.c,
            scale: a.scale,
            k: a.k,
        },
        InnovKind::BurrLogmod => InnovationSpec::BurrLogMod {
            c: a.c,
            scale: a.scale,
            k: a.k,
        },
    };
    let (dependence, burn_in) = match a.model {
        ModelKind::Iid => (Dependence::Iid, 0),
        ModelKind::Ar1 => (Dependence::Ar1 { rho: a.rho }, a.burn_in),
        ModelKind::Fir => (
            Dependence::Fir {
                coefficients: a.coef.clone(),
            },
            0,
        ),
        ModelKind::Fgn => (Dependence::GaussianLm { hurst: a.hurst }, 0),
        ModelKind::Subordinated => (
            Dependence::Subordinated {
                h: a.h,
                hurst: a.hurst,
            },
            0,
        ),
        ModelKind::Product => (
            Dependence::ProductLm {
                alpha: a.alpha,
                zeta: a.zeta,
                eps: match a.eps {
                    EpsKind::Stable => EpsilonLaw::Stable,
                    EpsKind::Pareto => EpsilonLaw::Pareto,
                },
            },
            0,
        ),
    };
    ModelSpec {
        innovation,
        dependence,
        n: a.n,
        burn_in,
    }
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn cmd_simulate(a: SimulateArgs) -> CmdResult {
    let model = model_from(&a);
    model.validate().map_err(input_err)?;
    let series = generate(&model, &mut stream::derive(a.seed, "simulate", 0)).map_err(run_err)?;
    let mut text = String::with_capacity(series.len() * 20);
    for v in &series {
        text.push_str(&sig12(*v));
        text.push('\n');
    }
    match &a.out {
        Some(p) => {
            write_text(p, &text)?;
            let meta = json!({ "model": model, "seed": a.seed, "stream": "simulate/0" });
            write_text(&sidecar_path(p), &serde_json::to_string_pretty(&meta).expect("model serialises"))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn table_config(a: &TableArgs) -> TableConfig {
    let rows = if a.rows.is_empty() { Row::ALL.to_vec() } else { a.rows.clone() };
    let mut cfg = TableConfig::new(a.panel, rows, a.reps, a.seed);
    cfg.n = a.n;
    cfg
}

fn emit_table(a: &TableArgs, table: &Table) -> CmdResult {
    let csv = table.to_csv();
    match &a.out {
        Some(p) => {
            write_text(p, &csv)?;
            write_text(&sidecar_path(p), &serde_json::to_string_pretty(&table.meta).expect("meta serialises"))?;
        }
        None => print!("{csv}"),
    }
    if let Some(p) = &a.json {
        write_text(p, &table.to_json())?;
    }
    if table.any_failed() {
        return Err(run_err(anyhow!("one or more table cells failed")));
    }
    Ok(())
}

fn cmd_table1(a: Table1Args) -> CmdResult {
    let cfg = table_config(&a.table);
    let columns = if a.columns.is_empty() { Table1Column::ALL.to_vec() } else { a.columns.clone() };
    let table = table1(&cfg, &columns, &a.scans_list).map_err(input_err)?;
    emit_table(&a.table, &table)
}

fn cmd_table2(a: Table2Args) -> CmdResult {
    let mut cfg = table_config(&a.table);
    cfg.hill_tail = a.hill_tail;
    let grid = if a.grid.is_empty() { default_q_grid() } else { a.grid.clone() };
    let table = table2(&cfg, &a.q, &grid).map_err(input_err)?;
    emit_table(&a.table, &table)
}
