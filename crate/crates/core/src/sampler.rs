//! Seeded samplers for Beta variates, LKJ-style correlation matrices and the
//! log-determinant.
//!
//! Gamma variates use the Marsaglia–Tsang squeeze, with the `U^(1/a)` boost
//! for shapes below one, and are produced in log domain so Beta variates
//! with tiny components never underflow before the logarithm is taken.
//!
//! Every sample in a batch owns its own ChaCha stream keyed by the global
//! sample index, so a batch's content depends only on `(seed, n)`: the worker
//! count changes scheduling and nothing else.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_log_det, CorrelationMatrix};
use crate::vine::{build_dvine, PartialCorrSet, PartialTable};

/// Smallest value a Beta variate is clamped to.
pub const BETA_FLOOR: f64 = 1e-300;
/// Largest `f64` strictly below one.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

/// Streams at or above this index are reserved for auxiliary draws so they
/// never collide with per-sample streams.
pub const AUXILIARY_STREAM_BASE: u64 = 1 << 63;

/// A reproducible random stream identified by `(master_seed, stream_index)`.
#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    stream_index: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_index);
        Self {
            master_seed,
            stream_index,
            rng,
        }
    }

    /// Stream reserved for auxiliary draws such as reference batches.
    pub fn auxiliary(master_seed: u64, tag: u64) -> Self {
        Self::new(master_seed, AUXILIARY_STREAM_BASE | tag)
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Dimension and LKJ concentration `η`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub d: usize,
    pub eta: f64,
}

impl ModelParams {
    /// `d ≥ 2`, `η ≥ 1`; `η = 1` is the uniform law.
    pub fn new(d: usize, eta: f64) -> Result<Self> {
        if !(eta >= 1.0) || !eta.is_finite() {
            return Err(Error::Config(format!(
                "eta = {eta} must be >= 1 (use ModelParams::extrapolated for 0 < eta < 1)"
            )));
        }
        Self::extrapolated(d, eta)
    }

    pub fn uniform(d: usize) -> Result<Self> {
        Self::new(d, 1.0)
    }

    /// Allows `0 < η < 1`. The formulas are unchanged but this range is not
    /// covered by the determinant results.
    pub fn extrapolated(d: usize, eta: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::Dimension { min: 2, got: d });
        }
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::Config(format!("eta = {eta} must be > 0")));
        }
        Ok(Self { d, eta })
    }

    /// Symmetric Beta shape on `(−1, 1)` for a partial correlation whose
    /// conditioning set has `k` elements.
    pub fn partial_shape(&self, k: usize) -> f64 {
        self.eta - 1.0 + (self.d - k) as f64 / 2.0
    }

    /// `(α_j, β_j)` of the `j`-th factor (1-based) in the single-product law
    /// `D = Π_j Beta(η + (j−1)/2, (d−j)/2)`.
    pub fn factor(&self, j: usize) -> (f64, f64) {
        (self.eta + (j - 1) as f64 / 2.0, (self.d - j) as f64 / 2.0)
    }
}

/// A determinant realization stored as `y = ln D`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogDetSample {
    pub y: f64,
}

fn check_shape(function: &'static str, name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(
            function,
            format!("{name} = {v} must be finite and > 0"),
        ))
    }
}

/// `ln G` with `G ~ Gamma(shape, 1)`; `shape` must be positive.
fn sample_ln_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape < 1.0 {
        let u: f64 = rng.random();
        // u in [0, 1); ln(0) would be -inf, so use 1 - u in (0, 1]
        return sample_ln_gamma(shape + 1.0, rng) + (1.0 - u).ln() / shape;
    }
    let d = shape - 1.0 / 3.0;
    let c = (9.0 * d).sqrt().recip();
    loop {
        let (x, v) = loop {
            let x: f64 = rng.sample(StandardNormal);
            let v = 1.0 + c * x;
            if v > 0.0 {
                break (x, v * v * v);
            }
        };
        let u: f64 = 1.0 - rng.random::<f64>();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d.ln() + v.ln();
        }
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln X` with `X ~ Beta(a, b)`, never above zero.
pub fn sample_ln_beta<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> Result<f64> {
    check_shape("sample_ln_beta", "a", a)?;
    check_shape("sample_ln_beta", "b", b)?;
    let ga = sample_ln_gamma(a, rng);
    let gb = sample_ln_gamma(b, rng);
    Ok((ga - log_add_exp(ga, gb)).clamp(BETA_FLOOR.ln(), 0.0))
}

/// One `Beta(a, b)` variate in the open unit interval.
pub fn sample_beta<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> Result<f64> {
    Ok(sample_ln_beta(a, b, rng)?
        .exp()
        .clamp(BETA_FLOOR, BELOW_ONE))
}

/// `2X − 1` with `X ~ Beta(shape, shape)`.
pub fn sample_symmetric_beta_pm1<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> Result<f64> {
    check_shape("sample_symmetric_beta_pm1", "shape", shape)?;
    let ga = sample_ln_gamma(shape, rng);
    let gb = sample_ln_gamma(shape, rng);
    // (Ga − Gb)/(Ga + Gb) = tanh((ln Ga − ln Gb)/2)
    Ok((0.5 * (ga - gb)).tanh().clamp(-BELOW_ONE, BELOW_ONE))
}

fn sample_dvine_dense<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> Result<Vec<f64>> {
    let d = params.d;
    let mut dense = vec![0.0; d * d];
    for gap in 1..d {
        let shape = params.partial_shape(gap - 1);
        for i in 0..d - gap {
            dense[i * d + i + gap] = sample_symmetric_beta_pm1(shape, rng)?;
        }
    }
    Ok(dense)
}

/// Independent D-vine partial correlations; the edge with `k` conditioning
/// variables is symmetric Beta with shape `η − 1 + (d − k)/2`.
pub fn sample_partial_correlations<R: Rng + ?Sized>(
    params: &ModelParams,
    rng: &mut R,
) -> Result<PartialCorrSet> {
    let spec = build_dvine(params.d)?;
    let d = params.d;
    let dense = sample_dvine_dense(params, rng)?;
    PartialCorrSet::from_fn(&spec, |e| {
        let (i, j) = e.conditioned;
        dense[i.min(j) * d + i.max(j)]
    })
}

/// A correlation matrix with density proportional to `|R|^(η−1)`.
pub fn sample_correlation_matrix<R: Rng + ?Sized>(
    params: &ModelParams,
    rng: &mut R,
) -> Result<CorrelationMatrix> {
    let dense = sample_dvine_dense(params, rng)?;
    PartialTable::dvine_to_matrix(params.d, &dense)
}

/// `ln D` as a sum of `d − 1` independent log-Beta variates. O(d).
pub fn sample_log_det_direct<R: Rng + ?Sized>(
    params: &ModelParams,
    rng: &mut R,
) -> Result<LogDetSample> {
    let mut y = 0.0;
    for j in 1..params.d {
        let (a, b) = params.factor(j);
        y += sample_ln_beta(a, b, rng)?;
    }
    Ok(LogDetSample { y: y.min(0.0) })
}

/// `ln D` from the uniform-case double product
/// `Π_{j=0}^{d−2} Π_{i=j}^{d−2} Beta(1 + i/2, 1/2)`. O(d²).
pub fn sample_log_det_double<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<LogDetSample> {
    if d < 2 {
        return Err(Error::Dimension { min: 2, got: d });
    }
    let mut y = 0.0;
    for j in 0..d - 1 {
        for i in j..d - 1 {
            y += sample_ln_beta(1.0 + i as f64 / 2.0, 0.5, rng)?;
        }
    }
    Ok(LogDetSample { y: y.min(0.0) })
}

/// Which representation generates the log-determinant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pathway {
    /// Single product of `d − 1` Beta factors.
    Direct,
    /// Double product of `d(d−1)/2` Beta factors; uniform law only.
    Double,
    /// Sample a full matrix through the vine and factorize it.
    Matrix,
}

impl std::str::FromStr for Pathway {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Pathway::Direct),
            "double" => Ok(Pathway::Double),
            "matrix" => Ok(Pathway::Matrix),
            other => Err(Error::Config(format!("unknown pathway {other:?}"))),
        }
    }
}

impl std::fmt::Display for Pathway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Pathway::Direct => "direct",
            Pathway::Double => "double",
            Pathway::Matrix => "matrix",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchConfig {
    pub params: ModelParams,
    pub n: usize,
    pub seed: u64,
    pub workers: usize,
    pub pathway: Pathway,
}

impl BatchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if self.pathway == Pathway::Double && self.params.eta != 1.0 {
            return Err(Error::Config(
                "the double-product pathway only covers eta = 1".into(),
            ));
        }
        Ok(())
    }
}

/// Runs `f` once per global index in `0..n`, each call on
/// `RngStream::new(seed, index)`. Workers take contiguous index ranges and
/// results come back in index order.
pub fn run_indexed<T, F>(n: usize, seed: u64, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut RngStream) -> Result<T> + Sync,
{
    if n == 0 {
        return Err(Error::Config("n must be at least 1".into()));
    }
    if workers == 0 {
        return Err(Error::Config("workers must be at least 1".into()));
    }
    let workers = workers.min(n);
    let chunk = n.div_ceil(workers);
    let run_range = |lo: usize, hi: usize| -> Result<Vec<T>> {
        let mut out = Vec::new();
        out.try_reserve_exact(hi - lo)
            .map_err(|e| Error::Resource(format!("allocating {} samples: {e}", hi - lo)))?;
        for index in lo..hi {
            let mut rng = RngStream::new(seed, index as u64);
            out.push(f(&mut rng)?);
        }
        Ok(out)
    };
    if workers == 1 {
        return run_range(0, n);
    }
    let parts: Vec<Result<Vec<T>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let (lo, hi) = (w * chunk, ((w + 1) * chunk).min(n));
                let run_range = &run_range;
                scope.spawn(move || run_range(lo, hi))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(Error::Resource("sampling worker panicked".into())))
            })
            .collect()
    });
    let mut out = Vec::new();
    out.try_reserve_exact(n)
        .map_err(|e| Error::Resource(format!("allocating {n} samples: {e}")))?;
    for part in parts {
        out.extend(part?);
    }
    Ok(out)
}

/// `n` log-determinant samples along `config.pathway`.
pub fn sample_batch(config: &BatchConfig) -> Result<Vec<LogDetSample>> {
    config.validate()?;
    let params = config.params;
    match config.pathway {
        Pathway::Direct => run_indexed(config.n, config.seed, config.workers, |rng| {
            sample_log_det_direct(&params, rng)
        }),
        Pathway::Double => run_indexed(config.n, config.seed, config.workers, |rng| {
            sample_log_det_double(params.d, rng)
        }),
        Pathway::Matrix => run_indexed(config.n, config.seed, config.workers, |rng| {
            let r = sample_correlation_matrix(&params, rng)?;
            Ok(LogDetSample {
                y: cholesky_log_det(&r)?,
            })
        }),
    }
}

/// `n` correlation matrices with the same stream layout as [`sample_batch`].
pub fn sample_matrix_batch(
    params: &ModelParams,
    n: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<CorrelationMatrix>> {
    run_indexed(n, seed, workers, |rng| {
        sample_correlation_matrix(params, rng)
    })
}

/// `n` independent normals with the given mean and standard deviation,
/// drawn from an auxiliary stream.
pub fn normal_batch(n: usize, mean: f64, sd: f64, seed: u64, tag: u64) -> Vec<f64> {
    let mut rng = RngStream::auxiliary(seed, tag);
    (0..n)
        .map(|_| mean + sd * rng.sample::<f64, _>(StandardNormal))
        .collect()
}
