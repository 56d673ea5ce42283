//! Data models: heavy-tailed innovations, AR(1) and finite filters, fractional
//! Gaussian noise with subordination, and the heavy-tail/long-memory product
//! model. Every generator is a pure function of its spec and stream.
//!
//! Draw consumption per series of length `n`:
//! - i.i.d. innovations: `n` innovation draws;
//! - `ar1`: `burn_in + n` innovation draws;
//! - `fir` with `q` coefficients: `n + q - 1` innovation draws;
//! - `gaussian-lm` / `subordinated`: `2 * next_power_of_two(n)` normals;
//! - `product-lm`: `n` draws of the positive factor, then the Gaussian factor.
//!
//! Stable draws use two uniforms, Gaussian draws one normal, inverse-transform
//! families one uniform.

mod fgn;
mod stable;

pub use fgn::{fgn_autocovariance, FgnGenerator};
pub use stable::{Parameterization, StableSampler};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use stable::open_unit;

/// Innovation distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "family")]
pub enum InnovationSpec {
    /// Standard stable law, `S1` parameterization.
    Stable { alpha: f64, skew: f64 },
    Cauchy,
    Gaussian,
    /// Lomax form: survival `(1 + z/scale)^(-shape)` on `z >= 0`.
    Pareto { shape: f64, scale: f64 },
    /// Survival `(1 + (z/scale)^c)^(-k)` on `z >= 0`; tail index `c k`.
    Burr { c: f64, scale: f64, k: f64 },
    /// A Burr draw `z` mapped to `z * max(1, log10 z)`.
    BurrLogMod { c: f64, scale: f64, k: f64 },
}

impl InnovationSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match *self {
            InnovationSpec::Stable { alpha, skew } => {
                StableSampler::new(alpha, skew)?;
            }
            InnovationSpec::Pareto { shape, scale } => {
                if !(shape > 0.0 && scale > 0.0) {
                    return bad(format!("pareto needs shape > 0 and scale > 0 (got {shape}, {scale})"));
                }
            }
            InnovationSpec::Burr { c, scale, k } | InnovationSpec::BurrLogMod { c, scale, k } => {
                if !(c > 0.0 && scale > 0.0 && k > 0.0) {
                    return bad(format!("burr needs c, scale, k > 0 (got {c}, {scale}, {k})"));
                }
            }
            InnovationSpec::Cauchy | InnovationSpec::Gaussian => {}
        }
        Ok(())
    }

    /// Heavy-tail index of the innovation law, capped at 2.
    pub fn tail_index(&self) -> f64 {
        match *self {
            InnovationSpec::Stable { alpha, .. } => alpha,
            InnovationSpec::Cauchy => 1.0,
            InnovationSpec::Gaussian => 2.0,
            InnovationSpec::Pareto { shape, .. } => shape.min(2.0),
            InnovationSpec::Burr { c, k, .. } | InnovationSpec::BurrLogMod { c, k, .. } => {
                (c * k).min(2.0)
            }
        }
    }

    /// `true` for laws without a power-law tail.
    pub fn is_light_tailed(&self) -> bool {
        matches!(
            self,
            InnovationSpec::Gaussian | InnovationSpec::Stable { alpha: 2.0, .. }
        )
    }

    pub fn sampler(&self) -> Result<InnovationSampler> {
        self.validate()?;
        Ok(InnovationSampler {
            spec: *self,
            stable: match *self {
                InnovationSpec::Stable { alpha, skew } => Some(StableSampler::new(alpha, skew)?),
                InnovationSpec::Cauchy => Some(StableSampler::new(1.0, 0.0)?),
                _ => None,
            },
        })
    }
}

/// Validated innovation sampler.
#[derive(Debug, Clone, Copy)]
pub struct InnovationSampler {
    spec: InnovationSpec,
    stable: Option<StableSampler>,
}

impl InnovationSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if let Some(s) = &self.stable {
            return s.sample(rng);
        }
        match self.spec {
            InnovationSpec::Gaussian => rng.sample(StandardNormal),
            InnovationSpec::Pareto { shape, scale } => {
                scale * (open_unit(rng).powf(-1.0 / shape) - 1.0)
            }
            InnovationSpec::Burr { c, scale, k } => burr(rng, c, scale, k),
            InnovationSpec::BurrLogMod { c, scale, k } => burr_log_mod(burr(rng, c, scale, k)),
            InnovationSpec::Stable { .. } | InnovationSpec::Cauchy => unreachable!(),
        }
    }

    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.sample(rng)).collect()
    }
}

fn burr<R: Rng + ?Sized>(rng: &mut R, c: f64, scale: f64, k: f64) -> f64 {
    scale * (open_unit(rng).powf(-1.0 / k) - 1.0).powf(1.0 / c)
}

/// `z * max(1, log10 |z|)`.
pub fn burr_log_mod(z: f64) -> f64 {
    z * z.abs().log10().max(1.0)
}

/// One stable draw.
pub fn sample_stable<R: Rng + ?Sized>(alpha: f64, skew: f64, rng: &mut R) -> Result<f64> {
    Ok(StableSampler::new(alpha, skew)?.sample(rng))
}

/// One innovation draw.
pub fn sample_innovation<R: Rng + ?Sized>(spec: &InnovationSpec, rng: &mut R) -> Result<f64> {
    Ok(spec.sampler()?.sample(rng))
}

/// `X_t = rho X_{t-1} + Z_t` from `X_0 = 0`, discarding the first `burn_in`
/// values.
pub fn ar1_filter(innovations: &[f64], rho: f64, burn_in: usize) -> Result<Vec<f64>> {
    if !(rho.abs() < 1.0) {
        return Err(Error::Nonstationary(rho));
    }
    if innovations.len() <= burn_in {
        return Err(Error::InvalidLength(innovations.len().saturating_sub(burn_in)));
    }
    let mut x = 0.0;
    let mut out = Vec::with_capacity(innovations.len() - burn_in);
    for (t, &z) in innovations.iter().enumerate() {
        x = rho * x + z;
        if t >= burn_in {
            out.push(x);
        }
    }
    Ok(out)
}

/// `X_t = sum_j psi_j Z_{t-j}` over the finite filter; the output is
/// `q - 1` shorter than the input.
pub fn fir_filter(innovations: &[f64], coefficients: &[f64]) -> Result<Vec<f64>> {
    let q = coefficients.len();
    if q == 0 || coefficients.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidParameter("filter needs finite coefficients".into()));
    }
    if innovations.len() < q {
        return Err(Error::InvalidLength(0));
    }
    Ok(innovations
        .windows(q)
        .map(|w| {
            coefficients
                .iter()
                .zip(w.iter().rev())
                .map(|(c, z)| c * z)
                .sum()
        })
        .collect())
}

/// Unit-variance fGn of length `n`.
pub fn sample_fgn<R: Rng + ?Sized>(hurst: f64, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    Ok(FgnGenerator::cached(hurst, n)?.sample(rng))
}

/// Subordinating function `h` with known Hermite rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subordinator {
    /// `h(x) = x`, rank 1.
    Identity,
    /// `h(x) = x^2 - 1`, rank 2.
    Hermite2,
}

impl Subordinator {
    pub fn hermite_rank(self) -> u32 {
        match self {
            Subordinator::Identity => 1,
            Subordinator::Hermite2 => 2,
        }
    }

    pub fn apply(self, x: f64) -> f64 {
        match self {
            Subordinator::Identity => x,
            Subordinator::Hermite2 => x * x - 1.0,
        }
    }
}

impl std::str::FromStr for Subordinator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Subordinator::Identity),
            "hermite2" => Ok(Subordinator::Hermite2),
            other => Err(Error::InvalidParameter(format!("unknown subordinator `{other}`"))),
        }
    }
}

pub fn subordinate(series: &[f64], h: Subordinator) -> Vec<f64> {
    series.iter().map(|&x| h.apply(x)).collect()
}

/// Law of the positive factor in the product model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpsilonLaw {
    /// Totally skewed stable with index `alpha / 2`.
    #[default]
    Stable,
    /// Lomax with shape `alpha / 2`, scale 1.
    Pareto,
}

/// `X_t = sqrt(eps_t) G_t` with `eps_t` positive of index `alpha / 2` and `G`
/// Gaussian: i.i.d. for `zeta = 0`, fGn with `H = (1 + zeta) / 2` otherwise.
pub fn sample_product_lm<R: Rng + ?Sized>(
    alpha: f64,
    zeta: f64,
    n: usize,
    eps_law: EpsilonLaw,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let (eps, g) = sample_product_factors(alpha, zeta, n, eps_law, rng)?;
    Ok(eps.iter().zip(&g).map(|(e, g)| e.sqrt() * g).collect())
}

/// The two factors `(eps, G)` of the product model, in draw order.
pub fn sample_product_factors<R: Rng + ?Sized>(
    alpha: f64,
    zeta: f64,
    n: usize,
    eps_law: EpsilonLaw,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::InvalidParameter(format!("product model needs alpha in (0, 2), got {alpha}")));
    }
    if !(0.0..1.0).contains(&zeta) {
        return Err(Error::InvalidParameter(format!("product model needs zeta in [0, 1), got {zeta}")));
    }
    let eps_spec = match eps_law {
        EpsilonLaw::Stable => InnovationSpec::Stable {
            alpha: alpha / 2.0,
            skew: 1.0,
        },
        EpsilonLaw::Pareto => InnovationSpec::Pareto {
            shape: alpha / 2.0,
            scale: 1.0,
        },
    };
    let eps = eps_spec.sampler()?.fill(rng, n);
    let g = if zeta == 0.0 {
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    } else {
        sample_fgn((1.0 + zeta) / 2.0, n, rng)?
    };
    Ok((eps, g))
}

/// Dependence structure applied to the innovations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Dependence {
    Iid,
    Ar1 { rho: f64 },
    Fir { coefficients: Vec<f64> },
    /// fGn; the innovation spec is not used.
    GaussianLm { hurst: f64 },
    /// `h(G_t)` for fGn `G`; the innovation spec is not used.
    Subordinated { h: Subordinator, hurst: f64 },
    /// Product model; the innovation spec is not used.
    ProductLm {
        alpha: f64,
        zeta: f64,
        #[serde(default)]
        eps: EpsilonLaw,
    },
}

pub const DEFAULT_BURN_IN: usize = 1000;

/// Full model for one series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub innovation: InnovationSpec,
    pub dependence: Dependence,
    pub n: usize,
    pub burn_in: usize,
}

impl ModelSpec {
    pub fn iid(innovation: InnovationSpec, n: usize) -> Self {
        Self {
            innovation,
            dependence: Dependence::Iid,
            n,
            burn_in: 0,
        }
    }

    pub fn ar1(innovation: InnovationSpec, rho: f64, n: usize) -> Self {
        Self {
            innovation,
            dependence: Dependence::Ar1 { rho },
            n,
            burn_in: DEFAULT_BURN_IN,
        }
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidLength(0));
        }
        self.innovation.validate()?;
        match &self.dependence {
            Dependence::Ar1 { rho } if !(rho.abs() < 1.0) => Err(Error::Nonstationary(*rho)),
            Dependence::Fir { coefficients }
                if coefficients.is_empty() || coefficients.iter().any(|c| !c.is_finite()) =>
            {
                Err(Error::InvalidParameter("filter needs finite coefficients".into()))
            }
            Dependence::GaussianLm { hurst } | Dependence::Subordinated { hurst, .. }
                if !(*hurst > 0.0 && *hurst < 1.0) =>
            {
                Err(Error::InvalidParameter(format!("Hurst index {hurst} outside (0, 1)")))
            }
            _ => Ok(()),
        }
    }
}

/// Draws one series from `model`.
pub fn generate<R: Rng + ?Sized>(model: &ModelSpec, rng: &mut R) -> Result<Vec<f64>> {
    model.validate()?;
    let n = model.n;
    match &model.dependence {
        Dependence::Iid => Ok(model.innovation.sampler()?.fill(rng, n)),
        Dependence::Ar1 { rho } => {
            let z = model.innovation.sampler()?.fill(rng, n + model.burn_in);
            ar1_filter(&z, *rho, model.burn_in)
        }
        Dependence::Fir { coefficients } => {
            let z = model.innovation.sampler()?.fill(rng, n + coefficients.len() - 1);
            fir_filter(&z, coefficients)
        }
        Dependence::GaussianLm { hurst } => sample_fgn(*hurst, n, rng),
        Dependence::Subordinated { h, hurst } => Ok(subordinate(&sample_fgn(*hurst, n, rng)?, *h)),
        Dependence::ProductLm { alpha, zeta, eps } => sample_product_lm(*alpha, *zeta, n, *eps, rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream;

    fn ecdf_ks(mut x: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
        x.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = x.len() as f64;
        x.iter()
            .enumerate()
            .map(|(i, &v)| {
                let f = cdf(v);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    // 0.999 critical value of the one-sample Kolmogorov-Smirnov statistic
    fn ks_critical(n: usize) -> f64 {
        1.949 / (n as f64).sqrt()
    }

    fn draw(spec: InnovationSpec, n: usize, label: &str) -> Vec<f64> {
        spec.sampler().unwrap().fill(&mut stream::derive(21, label, 0), n)
    }

    #[test]
    fn pareto_median_and_ks() {
        let spec = InnovationSpec::Pareto { shape: 2.0, scale: 1.0 };
        let mut x = draw(spec, 100_000, "pareto");
        x.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((x[50_000] - (2f64.sqrt() - 1.0)).abs() < 0.02);
        let x = draw(spec, 10_000, "pareto-ks");
        assert!(ecdf_ks(x, |z| 1.0 - (1.0 + z).powi(-2)) < ks_critical(10_000));
    }

    #[test]
    fn burr_survival_and_ks() {
        let spec = InnovationSpec::Burr { c: 2.0, scale: 1.0, k: 0.5 };
        let x = draw(spec, 100_000, "burr");
        let above = x.iter().filter(|&&z| z > 1.0).count() as f64 / x.len() as f64;
        assert!((above - 0.5f64.sqrt()).abs() < 0.01);
        let x = draw(spec, 10_000, "burr-ks");
        assert!(ecdf_ks(x, |z| 1.0 - (1.0 + z * z).powf(-0.5)) < ks_critical(10_000));
    }

    #[test]
    fn cauchy_ks() {
        let x = draw(InnovationSpec::Cauchy, 10_000, "cauchy-ks");
        let cdf = |z: f64| 0.5 + z.atan() / std::f64::consts::PI;
        assert!(ecdf_ks(x, cdf) < ks_critical(10_000));
    }

    #[test]
    fn burr_log_mod_clamps_below_ten() {
        for z in [0.1, 1.0, 5.0, 10.0] {
            assert_eq!(burr_log_mod(z), z);
        }
        assert!((burr_log_mod(1000.0) - 3000.0).abs() < 1e-9);
    }

    #[test]
    fn ar1_examples() {
        let z: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert_eq!(ar1_filter(&z, 0.0, 3).unwrap(), z[3..].to_vec());
        let mut imp = vec![0.0; 6];
        imp[0] = 1.0;
        assert_eq!(ar1_filter(&imp, 0.5, 0).unwrap(), vec![1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125]);
        assert!(matches!(ar1_filter(&z, 1.0, 0), Err(Error::Nonstationary(_))));
        assert!(ar1_filter(&z, -1.2, 0).is_err());
    }

    #[test]
    fn ar1_lag_one_autocorrelation() {
        let model = ModelSpec::ar1(InnovationSpec::Gaussian, 0.7, 100_000);
        let x = generate(&model, &mut stream::derive(5, "ar1", 0)).unwrap();
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let c0: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
        let c1: f64 = x.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
        assert!((c1 / c0 - 0.7).abs() < 0.01);
    }

    #[test]
    fn fir_identity_matches_iid() {
        let iid = ModelSpec::iid(InnovationSpec::Cauchy, 50);
        let fir = ModelSpec {
            dependence: Dependence::Fir { coefficients: vec![1.0] },
            ..iid.clone()
        };
        let a = generate(&iid, &mut stream::derive(1, "fir", 0)).unwrap();
        let b = generate(&fir, &mut stream::derive(1, "fir", 0)).unwrap();
        assert_eq!(a, b);
        let ma = fir_filter(&[1.0, 2.0, 3.0, 4.0], &[1.0, 0.5]).unwrap();
        assert_eq!(ma, vec![2.5, 4.0, 5.5]);
    }

    #[test]
    fn generation_is_deterministic() {
        let model = ModelSpec::iid(InnovationSpec::Gaussian, 5);
        let a = generate(&model, &mut stream::derive(1, "det", 0)).unwrap();
        let b = generate(&model, &mut stream::derive(1, "det", 0)).unwrap();
        assert_eq!(a, b);
        let c = generate(&model, &mut stream::derive(2, "det", 0)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn subordination() {
        assert_eq!(subordinate(&[1.0, -2.0], Subordinator::Identity), vec![1.0, -2.0]);
        assert_eq!(subordinate(&[0.0; 3], Subordinator::Hermite2), vec![-1.0; 3]);
        let g = sample_fgn(0.7, 50_000, &mut stream::derive(8, "herm", 0)).unwrap();
        let h = subordinate(&g, Subordinator::Hermite2);
        let mean = h.iter().sum::<f64>() / h.len() as f64;
        assert!(mean.abs() < 0.1, "{mean}");
        assert!("hermite3".parse::<Subordinator>().is_err());
    }

    #[test]
    fn product_model_properties() {
        let mut rng = stream::derive(9, "prod", 0);
        let x = sample_product_lm(1.5, 0.0, 100_000, EpsilonLaw::Stable, &mut rng).unwrap();
        let pos = x.iter().filter(|&&v| v > 0.0).count() as f64 / x.len() as f64;
        assert!((pos - 0.5).abs() < 0.01);

        let (eps, g) =
            sample_product_factors(1.5, 0.4, 100_000, EpsilonLaw::Stable, &mut rng).unwrap();
        assert!(eps.iter().all(|&e| e > 0.0));
        let (_, g0) = sample_product_factors(1.5, 0.0, 10, EpsilonLaw::Pareto, &mut rng).unwrap();
        assert_eq!(g0.len(), 10);
        // rank correlation between eps and G^2 (eps has infinite mean)
        let n = eps.len();
        let ranks = |v: &[f64]| {
            let mut idx: Vec<usize> = (0..v.len()).collect();
            idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
            let mut r = vec![0.0; v.len()];
            for (rank, i) in idx.into_iter().enumerate() {
                r[i] = rank as f64;
            }
            r
        };
        let g2: Vec<f64> = g.iter().map(|v| v * v).collect();
        let (ra, rb) = (ranks(&eps), ranks(&g2));
        let m = (n as f64 - 1.0) / 2.0;
        let cov: f64 = ra.iter().zip(&rb).map(|(a, b)| (a - m) * (b - m)).sum();
        let var: f64 = ra.iter().map(|a| (a - m).powi(2)).sum();
        let rho = cov / var;
        assert!(rho.abs() < 3.0 / (n as f64).sqrt(), "{rho}");

        assert!(sample_product_lm(2.0, 0.0, 10, EpsilonLaw::Stable, &mut rng).is_err());
        assert!(sample_product_lm(1.5, 1.0, 10, EpsilonLaw::Stable, &mut rng).is_err());
    }

    #[test]
    fn tail_indices() {
        assert_eq!(InnovationSpec::Cauchy.tail_index(), 1.0);
        assert_eq!(InnovationSpec::Burr { c: 2.0, scale: 1.0, k: 0.5 }.tail_index(), 1.0);
        assert_eq!(InnovationSpec::Pareto { shape: 2.0, scale: 1.0 }.tail_index(), 2.0);
        assert!(InnovationSpec::Gaussian.is_light_tailed());
        assert!(!InnovationSpec::Cauchy.is_light_tailed());
    }

    #[test]
    fn validation() {
        assert!(InnovationSpec::Pareto { shape: 0.0, scale: 1.0 }.validate().is_err());
        assert!(InnovationSpec::Burr { c: 1.0, scale: 1.0, k: -1.0 }.validate().is_err());
        let mut m = ModelSpec::ar1(InnovationSpec::Gaussian, 1.0, 10);
        assert!(generate(&m, &mut stream::derive(0, "v", 0)).is_err());
        m.dependence = Dependence::GaussianLm { hurst: 1.2 };
        assert!(m.validate().is_err());
        m.dependence = Dependence::Fir { coefficients: vec![] };
        assert!(m.validate().is_err());
    }
}
