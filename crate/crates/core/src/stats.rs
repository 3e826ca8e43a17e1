//! Sample summaries, Kolmogorov–Smirnov tests and the CLT scaling of `ln D`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sampler::{normal_batch, sample_batch, BatchConfig, LogDetSample, ModelParams, Pathway};

/// Smallest sample accepted by the KS tests.
pub const KS_MIN_SAMPLE: usize = 8;

/// Terms kept in the alternating Kolmogorov series.
const KOLMOGOROV_TERMS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    /// Unbiased (n − 1 denominator).
    pub variance: f64,
    pub min: f64,
    pub max: f64,
}

impl SummaryStats {
    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn std_error(&self) -> f64 {
        (self.variance / self.n as f64).sqrt()
    }
}

/// Single-pass Welford summary.
pub fn summarize(samples: &[f64]) -> Result<SummaryStats> {
    if samples.len() < 2 {
        return Err(Error::SampleSize {
            min: 2,
            got: samples.len(),
        });
    }
    let mut mean = 0.0;
    let mut m2 = 0.0;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for (k, &x) in samples.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::domain("summarize", format!("non-finite sample {x}")));
        }
        let delta = x - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (x - mean);
        min = min.min(x);
        max = max.max(x);
    }
    Ok(SummaryStats {
        n: samples.len(),
        mean: mean.clamp(min, max),
        variance: (m2 / (samples.len() - 1) as f64).max(0.0),
        min,
        max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n_effective: f64,
}

/// `P(K > λ)` for the limiting Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if !(lambda > 0.0) {
        return 1.0;
    }
    let p = if lambda < 1.18 {
        // Jacobi-theta form; the alternating series is useless this close to 0
        let pi2 = std::f64::consts::PI.powi(2);
        let mut cdf = 0.0;
        for k in 1..=KOLMOGOROV_TERMS {
            let m = (2 * k - 1) as f64;
            let term = (-m * m * pi2 / (8.0 * lambda * lambda)).exp();
            cdf += term;
            if term < 1e-18 * cdf {
                break;
            }
        }
        1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * cdf
    } else {
        let mut sum = 0.0;
        for k in 1..=KOLMOGOROV_TERMS {
            let kf = k as f64;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            sum += sign * (-2.0 * kf * kf * lambda * lambda).exp();
        }
        2.0 * sum
    };
    p.clamp(0.0, 1.0)
}

fn sorted_finite(function: &'static str, xs: &[f64]) -> Result<Vec<f64>> {
    if xs.len() < KS_MIN_SAMPLE {
        return Err(Error::SampleSize {
            min: KS_MIN_SAMPLE,
            got: xs.len(),
        });
    }
    if let Some(x) = xs.iter().find(|x| x.is_nan()) {
        return Err(Error::domain(function, format!("sample contains {x}")));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Two-sample KS test; ties are stepped over together.
pub fn ks_two_sample(x: &[f64], y: &[f64]) -> Result<KsResult> {
    let x = sorted_finite("ks_two_sample", x)?;
    let y = sorted_finite("ks_two_sample", y)?;
    let (n1, n2) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n1 && j < n2 {
        let t = x[i].min(y[j]);
        while i < n1 && x[i] == t {
            i += 1;
        }
        while j < n2 && y[j] == t {
            j += 1;
        }
        d = d.max((i as f64 / n1 as f64 - j as f64 / n2 as f64).abs());
    }
    let n_eff = (n1 * n2) as f64 / (n1 + n2) as f64;
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_survival(n_eff.sqrt() * d),
        n_effective: n_eff,
    })
}

/// One-sample KS test against a continuous CDF.
pub fn ks_one_sample(x: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    let x = sorted_finite("ks_one_sample", x)?;
    let n = x.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &xi) in x.iter().enumerate() {
        let f = cdf(xi);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(KsResult {
        statistic: d.clamp(0.0, 1.0),
        p_value: kolmogorov_survival(n.sqrt() * d),
        n_effective: n,
    })
}

/// `z = (y + d) / √(ln d)`.
pub fn clt_transform(samples: &[LogDetSample], d: usize) -> Result<Vec<f64>> {
    if d < 3 {
        return Err(Error::Dimension { min: 3, got: d });
    }
    let shift = d as f64;
    let scale = (d as f64).ln().sqrt();
    Ok(samples.iter().map(|s| (s.y + shift) / scale).collect())
}

/// One dimension of the CLT-scaling experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CltRow {
    pub d: usize,
    pub n: usize,
    pub seed: u64,
    pub z_mean: f64,
    pub z_sd: f64,
    pub ks_stat: f64,
    pub ks_p: f64,
}

/// Draws `n` direct log-determinants at dimension `d` under the uniform law,
/// applies [`clt_transform`] and compares the result by two-sample KS with a
/// normal batch of the same mean and sd drawn from auxiliary stream `d`.
/// Returns the summary row and the transformed samples.
pub fn clt_experiment(d: usize, n: usize, seed: u64, workers: usize) -> Result<(CltRow, Vec<f64>)> {
    let config = BatchConfig {
        params: ModelParams::uniform(d)?,
        n,
        seed,
        workers,
        pathway: Pathway::Direct,
    };
    let z = clt_transform(&sample_batch(&config)?, d)?;
    let summary = summarize(&z)?;
    let reference = normal_batch(n, summary.mean, summary.sd(), seed, d as u64);
    let ks = ks_two_sample(&z, &reference)?;
    let row = CltRow {
        d,
        n,
        seed,
        z_mean: summary.mean,
        z_sd: summary.sd(),
        ks_stat: ks.statistic,
        ks_p: ks.p_value,
    };
    Ok((row, z))
}

/// CDF of `2X − 1` with `X ~ Beta(shape, shape)`, at `x ∈ [−1, 1]`.
pub fn symmetric_beta_pm1_cdf(x: f64, shape: f64) -> Result<f64> {
    crate::specfun::reg_inc_beta(((x + 1.0) / 2.0).clamp(0.0, 1.0), shape, shape)
}

/// Density of `2X − 1` with `X ~ Beta(shape, shape)`; zero outside `(−1, 1)`.
pub fn symmetric_beta_pm1_pdf(x: f64, shape: f64) -> Result<f64> {
    if !(x.abs() < 1.0) {
        return Ok(0.0);
    }
    let ln = (shape - 1.0) * (x.ln_1p() + (-x).ln_1p())
        - (2.0 * shape - 1.0) * std::f64::consts::LN_2
        - crate::specfun::log_beta(shape, shape)?;
    Ok(ln.exp())
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}
