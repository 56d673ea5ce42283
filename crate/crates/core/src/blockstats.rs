//! Incrementally updatable block statistics and their trajectories along a scan.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::sig12;
use crate::scan::ScanPath;

/// Sum form (diverging) or average form of a moment statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Form {
    Sum,
    Average,
}

/// Block statistics supported by the trajectory machinery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Statistic {
    /// `sum x_t^2`
    SumSquares,
    /// `(1/k) sum x_t^2`
    MeanSquares,
    /// `(1/k) sum x_t`
    Mean,
    /// `sum |x_t|^r`
    AbsMomentSum(u32),
    /// `(1/k) sum |x_t|^r`
    AbsMomentMean(u32),
    Max,
    Min,
    /// `max - min`
    Range,
}

impl Statistic {
    /// Order `r` of a moment statistic (`2` for the squares).
    pub fn moment_order(self) -> Option<u32> {
        match self {
            Statistic::SumSquares | Statistic::MeanSquares => Some(2),
            Statistic::AbsMomentSum(r) | Statistic::AbsMomentMean(r) => Some(r),
            _ => None,
        }
    }

    pub fn form(self) -> Option<Form> {
        match self {
            Statistic::SumSquares | Statistic::AbsMomentSum(_) => Some(Form::Sum),
            Statistic::MeanSquares | Statistic::AbsMomentMean(_) | Statistic::Mean => {
                Some(Form::Average)
            }
            _ => None,
        }
    }

    /// Degree `d` with `T(c x) = c^d T(x)` for `c > 0`.
    pub fn homogeneity_degree(self) -> u32 {
        self.moment_order().unwrap_or(1)
    }

    /// Absolute-moment statistic of order `r` in the given form.
    pub fn abs_moment(r: u32, form: Form) -> Self {
        match form {
            Form::Sum => Statistic::AbsMomentSum(r),
            Form::Average => Statistic::AbsMomentMean(r),
        }
    }

    fn validate(self) -> Result<Self> {
        match self {
            Statistic::AbsMomentSum(0) | Statistic::AbsMomentMean(0) => Err(
                Error::InvalidParameter("absolute moment order must be at least 1".into()),
            ),
            s => Ok(s),
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statistic::SumSquares => f.write_str("sum-squares"),
            Statistic::MeanSquares => f.write_str("mean-squares"),
            Statistic::Mean => f.write_str("mean"),
            Statistic::AbsMomentSum(r) => write!(f, "abs-sum-{r}"),
            Statistic::AbsMomentMean(r) => write!(f, "abs-mean-{r}"),
            Statistic::Max => f.write_str("max"),
            Statistic::Min => f.write_str("min"),
            Statistic::Range => f.write_str("range"),
        }
    }
}

impl FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let stat = match s {
            "sum-squares" => Statistic::SumSquares,
            "mean-squares" => Statistic::MeanSquares,
            "mean" => Statistic::Mean,
            "max" => Statistic::Max,
            "min" => Statistic::Min,
            "range" => Statistic::Range,
            other => {
                let parse_order = |rest: &str| {
                    rest.parse::<u32>()
                        .map_err(|_| Error::InvalidParameter(format!("unknown statistic `{other}`")))
                };
                if let Some(r) = other.strip_prefix("abs-sum-") {
                    Statistic::AbsMomentSum(parse_order(r)?)
                } else if let Some(r) = other.strip_prefix("abs-mean-") {
                    Statistic::AbsMomentMean(parse_order(r)?)
                } else {
                    return Err(Error::InvalidParameter(format!("unknown statistic `{other}`")));
                }
            }
        };
        stat.validate()
    }
}

impl TryFrom<String> for Statistic {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Statistic> for String {
    fn from(s: Statistic) -> String {
        s.to_string()
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// A statistic that can grow its window one observation at a time.
pub trait IncrementalStatistic {
    fn extend_left(&mut self, x: f64);
    fn extend_right(&mut self, x: f64);
    fn value(&self) -> f64;
    /// Current block size.
    fn len(&self) -> usize;
}

/// Constant-memory running state for any [`Statistic`].
#[derive(Debug, Clone)]
pub struct RunningStatistic {
    stat: Statistic,
    count: usize,
    sum: CompensatedSum,
    max: f64,
    min: f64,
}

impl RunningStatistic {
    /// Starts a window holding the single observation `x`.
    pub fn init(stat: Statistic, x: f64) -> Self {
        let mut s = Self {
            stat,
            count: 0,
            sum: CompensatedSum::default(),
            max: f64::NEG_INFINITY,
            min: f64::INFINITY,
        };
        s.push(x);
        s
    }

    fn push(&mut self, x: f64) {
        self.count += 1;
        match self.stat {
            Statistic::SumSquares | Statistic::MeanSquares => self.sum.add(x * x),
            Statistic::Mean => self.sum.add(x),
            Statistic::AbsMomentSum(r) | Statistic::AbsMomentMean(r) => {
                self.sum.add(abs_pow(x, r))
            }
            Statistic::Max | Statistic::Min | Statistic::Range => {
                self.max = self.max.max(x);
                self.min = self.min.min(x);
            }
        }
    }
}

impl IncrementalStatistic for RunningStatistic {
    // Every supported statistic is symmetric in its inputs, so both ends
    // update the same state.
    fn extend_left(&mut self, x: f64) {
        self.push(x);
    }

    fn extend_right(&mut self, x: f64) {
        self.push(x);
    }

    fn value(&self) -> f64 {
        let k = self.count as f64;
        match self.stat {
            Statistic::SumSquares | Statistic::AbsMomentSum(_) => self.sum.value(),
            Statistic::MeanSquares | Statistic::AbsMomentMean(_) | Statistic::Mean => {
                self.sum.value() / k
            }
            Statistic::Max => self.max,
            Statistic::Min => self.min,
            Statistic::Range => self.max - self.min,
        }
    }

    fn len(&self) -> usize {
        self.count
    }
}

fn abs_pow(x: f64, r: u32) -> f64 {
    x.abs().powi(r as i32)
}

/// Direct evaluation of `stat` on a window.
pub fn batch_value(window: &[f64], stat: Statistic) -> Result<f64> {
    if window.is_empty() {
        return Err(Error::Domain("statistic of an empty window".into()));
    }
    let k = window.len() as f64;
    let v = match stat {
        Statistic::SumSquares => window.iter().map(|x| x * x).collect::<CompensatedSum>().value(),
        Statistic::MeanSquares => {
            window.iter().map(|x| x * x).collect::<CompensatedSum>().value() / k
        }
        Statistic::Mean => window.iter().copied().collect::<CompensatedSum>().value() / k,
        Statistic::AbsMomentSum(r) => window
            .iter()
            .map(|&x| abs_pow(x, r))
            .collect::<CompensatedSum>()
            .value(),
        Statistic::AbsMomentMean(r) => {
            window
                .iter()
                .map(|&x| abs_pow(x, r))
                .collect::<CompensatedSum>()
                .value()
                / k
        }
        Statistic::Max => window.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        Statistic::Min => window.iter().copied().fold(f64::INFINITY, f64::min),
        Statistic::Range => {
            let max = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = window.iter().copied().fold(f64::INFINITY, f64::min);
            max - min
        }
    };
    Ok(v)
}

/// Values `T_1, ..., T_n` of a statistic along one scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// `None` for trajectories injected directly rather than computed.
    pub statistic: Option<Statistic>,
    pub scan: ScanPath,
    /// 1-based start of the block of size `k` at index `k - 1`.
    pub block_starts: Vec<usize>,
    /// `T_k` at index `k - 1`.
    pub values: Vec<f64>,
}

impl Trajectory {
    /// Wraps precomputed values as a trajectory along the direct scan.
    pub fn injected(values: Vec<f64>) -> Result<Self> {
        let scan = crate::scan::direct_scan(values.len())?;
        Ok(Self {
            statistic: None,
            block_starts: vec![1; values.len()],
            scan,
            values,
        })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// `T_k` for 1-based `k`.
    pub fn at(&self, k: usize) -> f64 {
        self.values[k - 1]
    }

    /// CSV with header `k,block_start,T_k`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,block_start,T_k\n");
        for (i, (&start, &v)) in self.block_starts.iter().zip(&self.values).enumerate() {
            out.push_str(&format!("{},{},{}\n", i + 1, start, sig12(v)));
        }
        out
    }
}

/// Evaluates `stat` on every block of `scan` in `O(n)` total work.
pub fn trajectory(series: &[f64], scan: &ScanPath, stat: Statistic) -> Result<Trajectory> {
    let n = scan.n();
    if series.len() != n {
        return Err(Error::Shape {
            expected: n,
            got: series.len(),
        });
    }
    let stat = stat.validate()?;
    let mut values = Vec::with_capacity(n);
    let mut starts = Vec::with_capacity(n);
    let mut windows = scan.windows();
    let first = windows.next().expect("a scan has at least one block");
    let mut running = RunningStatistic::init(stat, series[first.start - 1]);
    let mut start = first.start;
    values.push(running.value());
    starts.push(start);
    for w in windows {
        if w.start < start {
            running.extend_left(series[w.start - 1]);
        } else {
            running.extend_right(series[w.end() - 1]);
        }
        start = w.start;
        values.push(running.value());
        starts.push(start);
    }
    Ok(Trajectory {
        statistic: Some(stat),
        scan: scan.clone(),
        block_starts: starts,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scan::{direct_scan, reverse_scan, uniform_random_scan};
    use crate::stream;
    use proptest::prelude::*;
    use rand::Rng;

    const ALL: [Statistic; 10] = [
        Statistic::SumSquares,
        Statistic::MeanSquares,
        Statistic::Mean,
        Statistic::AbsMomentSum(1),
        Statistic::AbsMomentSum(3),
        Statistic::AbsMomentMean(4),
        Statistic::Max,
        Statistic::Min,
        Statistic::Range,
        Statistic::AbsMomentMean(2),
    ];

    #[test]
    fn hand_examples() {
        let t = trajectory(&[1.0, 2.0, 3.0], &direct_scan(3).unwrap(), Statistic::SumSquares)
            .unwrap();
        assert_eq!(t.values, vec![1.0, 5.0, 14.0]);
        let t = trajectory(&[3.0, 1.0, 2.0], &reverse_scan(3).unwrap(), Statistic::Max).unwrap();
        assert_eq!(t.values, vec![2.0, 2.0, 3.0]);
        assert_eq!(t.block_starts, vec![3, 2, 1]);
        assert_eq!(batch_value(&[-2.0, 2.0], Statistic::Range).unwrap(), 4.0);
        assert_eq!(batch_value(&[1.0; 4], Statistic::Mean).unwrap(), 1.0);
        assert_eq!(
            batch_value(&[1.0, -2.0, 3.0], Statistic::AbsMomentSum(3)).unwrap(),
            36.0
        );
        assert!(batch_value(&[], Statistic::Mean).is_err());
    }

    #[test]
    fn length_mismatch_is_a_shape_error() {
        let err = trajectory(&[1.0, 2.0], &direct_scan(3).unwrap(), Statistic::Mean).unwrap_err();
        assert_eq!(err, Error::Shape { expected: 3, got: 2 });
    }

    #[test]
    fn statistic_ids_round_trip() {
        for s in ALL {
            assert_eq!(s.to_string().parse::<Statistic>().unwrap(), s);
        }
        assert!("abs-sum-0".parse::<Statistic>().is_err());
        assert!("median".parse::<Statistic>().is_err());
    }

    #[test]
    fn csv_export() {
        let t = trajectory(&[1.0, 2.0, 3.0], &reverse_scan(3).unwrap(), Statistic::SumSquares)
            .unwrap();
        assert_eq!(t.to_csv(), "k,block_start,T_k\n1,3,9\n2,2,13\n3,1,14\n");
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut acc = CompensatedSum::default();
        acc.add(1e16);
        for _ in 0..1000 {
            acc.add(1.0);
        }
        acc.add(-1e16);
        assert_eq!(acc.value(), 1000.0);
    }

    fn rel_dev(a: f64, b: f64) -> f64 {
        if a == b {
            0.0
        } else {
            (a - b).abs() / a.abs().max(b.abs())
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn incremental_matches_batch(seed in any::<u64>(), n in 1usize..400, which in 0usize..ALL.len()) {
            let mut rng = stream::derive(seed, "bs-prop", 0);
            let series: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let scan = uniform_random_scan(n, &mut rng).unwrap();
            let stat = ALL[which];
            let t = trajectory(&series, &scan, stat).unwrap();
            for (k, w) in scan.windows().enumerate() {
                let b = batch_value(w.slice(&series), stat).unwrap();
                prop_assert!(rel_dev(t.values[k], b) <= 1e-9, "k={} {} vs {}", k + 1, t.values[k], b);
            }
        }

        #[test]
        fn homogeneity(seed in any::<u64>(), c in 0.1f64..10.0) {
            let mut rng = stream::derive(seed, "bs-homog", 0);
            let series: Vec<f64> = (0..100).map(|_| rng.random_range(0.01..5.0)).collect();
            let scaled: Vec<f64> = series.iter().map(|x| c * x).collect();
            let scan = uniform_random_scan(100, &mut rng).unwrap();
            for stat in [Statistic::SumSquares, Statistic::AbsMomentSum(3), Statistic::Max] {
                let d = stat.homogeneity_degree() as i32;
                let a = trajectory(&series, &scan, stat).unwrap();
                let b = trajectory(&scaled, &scan, stat).unwrap();
                for (x, y) in a.values.iter().zip(&b.values) {
                    prop_assert!(rel_dev(c.powi(d) * x, *y) <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn monotone_and_prefix_consistent() {
        let mut rng = stream::derive(4, "bs-mono", 0);
        let series: Vec<f64> = (0..300).map(|_| rng.random_range(-3.0..3.0)).collect();
        let scan = uniform_random_scan(300, &mut rng).unwrap();
        for stat in [Statistic::Max, Statistic::SumSquares, Statistic::AbsMomentSum(3)] {
            let t = trajectory(&series, &scan, stat).unwrap();
            assert!(t.values.windows(2).all(|p| p[0] <= p[1]), "{stat}");
        }
        let full = trajectory(&series, &direct_scan(300).unwrap(), Statistic::Mean).unwrap();
        let prefix = trajectory(&series[..120], &direct_scan(120).unwrap(), Statistic::Mean).unwrap();
        assert_eq!(&full.values[..120], &prefix.values[..]);
    }
}
