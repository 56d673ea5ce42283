//! Exact fractional Gaussian noise by circulant embedding.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Autocovariance of unit-variance fGn at lag `k`:
/// `((k+1)^{2H} - 2 k^{2H} + |k-1|^{2H}) / 2`.
pub fn fgn_autocovariance(hurst: f64, k: usize) -> f64 {
    let h2 = 2.0 * hurst;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

/// Circulant embedding of the fGn covariance for one `(H, n)`.
///
/// The `n x n` Toeplitz covariance is embedded in a circulant of size
/// `m = 2 * next_power_of_two(n)`; its eigenvalues are the FFT of the first
/// row. Each sample consumes exactly `m` standard normal draws.
pub struct FgnGenerator {
    hurst: f64,
    n: usize,
    sqrt_eigs: Vec<f64>,
    eigs: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FgnGenerator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FgnGenerator")
            .field("hurst", &self.hurst)
            .field("n", &self.n)
            .field("m", &self.eigs.len())
            .finish()
    }
}

impl FgnGenerator {
    pub fn new(hurst: f64, n: usize) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(Error::InvalidParameter(format!("Hurst index {hurst} outside (0, 1)")));
        }
        if n == 0 {
            return Err(Error::InvalidLength(0));
        }
        let half = n.next_power_of_two();
        let m = 2 * half;
        let mut row: Vec<Complex<f64>> = (0..m)
            .map(|j| {
                let lag = if j <= half { j } else { m - j };
                Complex::new(fgn_autocovariance(hurst, lag), 0.0)
            })
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(m);
        fft.process(&mut row);
        let max = row.iter().map(|c| c.re).fold(0.0, f64::max);
        let mut eigs = Vec::with_capacity(m);
        for c in &row {
            if c.re < -1e-10 * max {
                return Err(Error::DegenerateData(format!(
                    "circulant embedding has a negative eigenvalue {} for H = {hurst}, n = {n}",
                    c.re
                )));
            }
            eigs.push(c.re.max(0.0));
        }
        Ok(Self {
            hurst,
            n,
            sqrt_eigs: eigs.iter().map(|e| e.sqrt()).collect(),
            eigs,
            fft,
        })
    }

    /// Shared generator for `(hurst, n)`, built on first use.
    pub fn cached(hurst: f64, n: usize) -> Result<Arc<Self>> {
        type Cache = Mutex<HashMap<(u64, usize), Arc<FgnGenerator>>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        let key = (hurst.to_bits(), n);
        if let Some(g) = cache.lock().expect("fgn cache").get(&key) {
            return Ok(Arc::clone(g));
        }
        let g = Arc::new(FgnGenerator::new(hurst, n)?);
        cache
            .lock()
            .expect("fgn cache")
            .entry(key)
            .or_insert_with(|| Arc::clone(&g));
        Ok(g)
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Covariance implied by the embedding, lags `0..n`.
    pub fn implied_autocovariance(&self) -> Vec<f64> {
        let m = self.eigs.len();
        let mut buf: Vec<Complex<f64>> = self.eigs.iter().map(|&e| Complex::new(e, 0.0)).collect();
        // eigenvalues are real and symmetric, so a forward transform inverts up to 1/m
        self.fft.process(&mut buf);
        buf.iter().take(self.n).map(|c| c.re / m as f64).collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let m = self.eigs.len();
        let half = m / 2;
        let mut w = vec![Complex::new(0.0, 0.0); m];
        let mut normal = || -> f64 { rng.sample(StandardNormal) };
        w[0] = Complex::new(self.sqrt_eigs[0] * normal(), 0.0);
        w[half] = Complex::new(self.sqrt_eigs[half] * normal(), 0.0);
        for j in 1..half {
            let scale = self.sqrt_eigs[j] * std::f64::consts::FRAC_1_SQRT_2;
            let z = Complex::new(scale * normal(), scale * normal());
            w[j] = z;
            w[m - j] = z.conj();
        }
        self.fft.process(&mut w);
        let norm = (m as f64).sqrt();
        w.iter().take(self.n).map(|c| c.re / norm).collect()
    }
}
