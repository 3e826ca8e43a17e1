//! Closed-form moments of the determinant `D` of a random correlation matrix
//! and of `Y = ln D`.
//!
//! Under the LKJ(η) law `D = Π_{j=1}^{d−1} Beta(α_j, β_j)` with
//! `α_j = η + (j−1)/2`, `β_j = (d−j)/2` and constant sum
//! `S = α_j + β_j = η + (d−1)/2`. Every quantity below is a finite sum over
//! those factors and is evaluated in log domain, since `E(D)` decays like
//! `e^(−d)` and leaves the `f64` range near `d ≈ 700`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sampler::ModelParams;
use crate::specfun::{digamma, log_gamma, log_gamma_ratio, trigamma, CONSTANTS};

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        Err(Error::Dimension { min: 2, got: d })
    } else {
        Ok(())
    }
}

/// A positive quantity held by its natural logarithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogValue {
    pub ln: f64,
}

impl LogValue {
    /// May underflow to zero; `ln` stays exact.
    pub fn value(&self) -> f64 {
        self.ln.exp()
    }
}

/// A real quantity held as sign and log-magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignedLog {
    pub sign: i8,
    pub ln_abs: f64,
}

impl SignedLog {
    fn from_parts(ln_scale: f64, factor: f64) -> Self {
        let sign = if factor > 0.0 {
            1
        } else if factor < 0.0 {
            -1
        } else {
            0
        };
        Self {
            sign,
            ln_abs: ln_scale + factor.abs().ln(),
        }
    }

    pub fn value(&self) -> f64 {
        f64::from(self.sign) * self.ln_abs.exp()
    }

    pub fn is_positive(&self) -> bool {
        self.sign > 0
    }
}

/// `ln E(D) = ln d! − (d−1) ln(d+1)` for the uniform law.
pub fn exact_log_mean_det(d: usize) -> Result<f64> {
    check_dim(d)?;
    let df = d as f64;
    Ok(log_gamma(df + 1.0)? - (df - 1.0) * (df + 1.0).ln())
}

/// `ln E(D²) = ln d! + ln (d+2)! − ln 6 − (d−1)(ln(d+1) + ln(d+3))`.
pub fn exact_log_second_moment_det(d: usize) -> Result<f64> {
    check_dim(d)?;
    let df = d as f64;
    Ok(log_gamma(df + 1.0)? + log_gamma(df + 3.0)?
        - 6f64.ln()
        - (df - 1.0) * ((df + 1.0).ln() + (df + 3.0).ln()))
}

// ln(e^a − e^b) for a > b
fn log_sub_exp(a: f64, b: f64) -> f64 {
    a + (-(b - a).exp_m1()).ln()
}

/// `var(D) = E(D²) − E(D)²`, in log scale.
pub fn exact_var_det(d: usize) -> Result<LogValue> {
    let m1 = exact_log_mean_det(d)?;
    let m2 = exact_log_second_moment_det(d)?;
    Ok(LogValue {
        ln: log_sub_exp(m2, 2.0 * m1),
    })
}

/// Three forms of the large-`d` variance approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceApprox {
    /// `2π(d+1)² e^{−2(d+1)} · c d³ / e²`, `c = √((d+1)/(d+3)) / 6`.
    pub leading: SignedLog,
    /// `2π(d+1)² e^{−2(d+1)} · (c (d+3)³ − e² (d+1)) / e²` with the same `c`.
    /// Negative for `d ≤ 3`.
    pub expanded: SignedLog,
    /// As `expanded` but with `c = √((d+3)/(d+1)) / 6`, the radicand obtained
    /// when the Stirling ratio is expanded directly; positive for all `d ≥ 2`.
    pub expanded_corrected: SignedLog,
}

pub fn approx_var_det(d: usize) -> Result<VarianceApprox> {
    check_dim(d)?;
    let df = d as f64;
    let e2 = 2f64.exp();
    let scale = CONSTANTS.ln_2pi + 2.0 * (df + 1.0).ln() - 2.0 * (df + 1.0) - 2.0;
    let c = ((df + 1.0) / (df + 3.0)).sqrt() / 6.0;
    let c_alt = ((df + 3.0) / (df + 1.0)).sqrt() / 6.0;
    let cube = (df + 3.0).powi(3);
    Ok(VarianceApprox {
        leading: SignedLog::from_parts(scale, c * df.powi(3)),
        expanded: SignedLog::from_parts(scale, c * cube - e2 * (df + 1.0)),
        expanded_corrected: SignedLog::from_parts(scale, c_alt * cube - e2 * (df + 1.0)),
    })
}

/// `ln E(D^t) = Σ_j [ln Γ(α_j + t) − ln Γ(α_j) − ln Γ(S + t) + ln Γ(S)]`,
/// defined for `t > −η`. At `t = p/d` this is the log of the `p`-th moment of
/// `D^(1/d)`; as a function of `t` it is the log-MGF of `Y`.
pub fn log_det_moment(params: &ModelParams, t: f64) -> Result<f64> {
    if !(t > -params.eta) {
        return Err(Error::domain(
            "log_det_moment",
            format!("t = {t} must exceed -eta = {}", -params.eta),
        ));
    }
    let s = params.eta + (params.d - 1) as f64 / 2.0;
    let shared = log_gamma_ratio(s, t)?;
    let mut sum = 0.0;
    for j in 1..params.d {
        let (alpha, _) = params.factor(j);
        sum += log_gamma_ratio(alpha, t)? - shared;
    }
    Ok(sum)
}

/// `E(D^(p/d))` for `p ∈ {1, 2}`.
pub fn exact_mean_root(d: usize, p: u32, eta: f64) -> Result<f64> {
    if !(p == 1 || p == 2) {
        return Err(Error::domain(
            "exact_mean_root",
            format!("p = {p} must be 1 or 2"),
        ));
    }
    let params = ModelParams::extrapolated(d, eta)?;
    Ok(log_det_moment(&params, f64::from(p) / d as f64)?.exp())
}

/// Below this step the `ln Γ` second difference is taken from its Taylor form.
const TAYLOR_STEP: f64 = 1e-3;

/// `ψ₃(x)` to a few parts in 1e9, enough for a correction term of order `h⁴`.
fn pentagamma_approx(x: f64) -> f64 {
    let mut z = x;
    let mut acc = 0.0;
    while z < 10.0 {
        acc += 6.0 / z.powi(4);
        z += 1.0;
    }
    let inv = z.recip();
    acc + inv.powi(3)
        * (2.0 + inv * (3.0 + inv * (2.0 + inv * inv * (-1.0 + inv * inv * 4.0 / 3.0))))
}

/// `var(D^(1/d)) = E(D^(2/d)) − E(D^(1/d))²`.
///
/// Evaluated as `E(D^(1/d))² · expm1(L₂ − 2L₁)` where `L₂ − 2L₁` is summed
/// factor by factor as second differences of `ln Γ`, so the tiny variance at
/// large `d` is never the difference of two nearly equal moments.
pub fn var_root(d: usize, eta: f64) -> Result<f64> {
    let params = ModelParams::extrapolated(d, eta)?;
    let h = 1.0 / d as f64;
    let s = params.eta + (d - 1) as f64 / 2.0;
    let second_diff = |x: f64| -> Result<f64> {
        if h <= TAYLOR_STEP {
            // lnΓ(c+h) − 2lnΓ(c) + lnΓ(c−h) = h²ψ₁(c) + h⁴ψ₃(c)/12 + O(h⁶), c = x + h
            let c = x + h;
            Ok(h * h * (trigamma(c)? + h * h * pentagamma_approx(c) / 12.0))
        } else {
            Ok(log_gamma_ratio(x, 2.0 * h)? - 2.0 * log_gamma_ratio(x, h)?)
        }
    };
    let shared = second_diff(s)?;
    let mut curvature = 0.0;
    for j in 1..d {
        let (alpha, _) = params.factor(j);
        curvature += second_diff(alpha)? - shared;
    }
    let l1 = log_det_moment(&params, h)?;
    Ok(((2.0 * l1).exp() * curvature.exp_m1()).max(0.0))
}

/// `E(Y) = Σ_j [ψ(α_j) − ψ(S)]`.
pub fn logdet_mean_eta(params: &ModelParams) -> Result<f64> {
    let s = params.eta + (params.d - 1) as f64 / 2.0;
    let shared = digamma(s)?;
    let mut sum = 0.0;
    for j in 1..params.d {
        sum += digamma(params.factor(j).0)? - shared;
    }
    Ok(sum)
}

/// `var(Y) = Σ_j [ψ₁(α_j) − ψ₁(S)]`.
pub fn logdet_var_eta(params: &ModelParams) -> Result<f64> {
    let s = params.eta + (params.d - 1) as f64 / 2.0;
    let shared = trigamma(s)?;
    let mut sum = 0.0;
    for j in 1..params.d {
        sum += trigamma(params.factor(j).0)? - shared;
    }
    Ok(sum)
}

/// `E(ln D)` under the uniform law.
pub fn logdet_mean(d: usize) -> Result<f64> {
    logdet_mean_eta(&ModelParams::uniform(d)?)
}

/// `var(ln D)` under the uniform law.
pub fn logdet_var(d: usize) -> Result<f64> {
    logdet_var_eta(&ModelParams::uniform(d)?)
}

/// The large-`d` expansion `−d(1 + ln 2) + γ + 2 + 2 ln 2`.
///
/// Diagnostic only. The exact digamma sum grows like `−d`, not
/// `−d(1 + ln 2)`, so this drifts away from [`logdet_mean`] linearly in `d`.
pub fn asymptotic_logdet_mean(d: usize) -> Result<f64> {
    check_dim(d)?;
    let ln2 = std::f64::consts::LN_2;
    Ok(-(d as f64) * (1.0 + ln2) + CONSTANTS.euler_gamma + 2.0 + 2.0 * ln2)
}

/// `ln M_Y(t) = ln E(D^t)` under the uniform law, for `t > −1`.
pub fn mgf_logdet(d: usize, t: f64) -> Result<f64> {
    log_det_moment(&ModelParams::uniform(d)?, t)
}

/// `t · ln E(D)`, i.e. `ln (E D)^t`.
pub fn mgf_approx(d: usize, t: f64) -> Result<f64> {
    Ok(t * exact_log_mean_det(d)?)
}

/// `d ln d − d + ½ ln(2πd)`.
pub fn stirling_log_factorial(d: usize) -> Result<f64> {
    if d < 1 {
        return Err(Error::Dimension { min: 1, got: d });
    }
    let df = d as f64;
    Ok(df * df.ln() - df + 0.5 * (CONSTANTS.ln_2pi + df.ln()))
}

/// Exact-versus-approximate moment summary for one `(d, η)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub d: usize,
    pub eta: f64,
    pub exact_log_mean: f64,
    pub exact_log_second_moment: f64,
    pub exact_variance_log_scale: f64,
    /// Large-`d` approximation (leading form); only defined for `η = 1`.
    pub approx_variance_log_scale: Option<f64>,
    pub mean_root: f64,
    pub mean_root_sq: f64,
    pub var_root: f64,
    pub logdet_mean: f64,
    pub logdet_var: f64,
    /// `(t, ln M_Y(t), t ln E(D))`.
    pub mgf_values: Vec<(f64, f64, f64)>,
}

/// `t` values reported by default.
pub const DEFAULT_MGF_TS: [f64; 4] = [-0.5, 0.5, 1.0, 2.0];

impl MomentReport {
    pub fn compute(d: usize, eta: f64, mgf_ts: &[f64]) -> Result<Self> {
        let params = ModelParams::extrapolated(d, eta)?;
        let uniform = eta == 1.0;
        let (m1, m2) = if uniform {
            (exact_log_mean_det(d)?, exact_log_second_moment_det(d)?)
        } else {
            (log_det_moment(&params, 1.0)?, log_det_moment(&params, 2.0)?)
        };
        let approx = if uniform {
            let a = approx_var_det(d)?.leading;
            a.is_positive().then_some(a.ln_abs)
        } else {
            None
        };
        let mgf_values = mgf_ts
            .iter()
            .map(|&t| Ok((t, log_det_moment(&params, t)?, t * m1)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            d,
            eta,
            exact_log_mean: m1,
            exact_log_second_moment: m2,
            exact_variance_log_scale: log_sub_exp(m2, 2.0 * m1),
            approx_variance_log_scale: approx,
            mean_root: exact_mean_root(d, 1, eta)?,
            mean_root_sq: exact_mean_root(d, 2, eta)?,
            var_root: var_root(d, eta)?,
            logdet_mean: logdet_mean_eta(&params)?,
            logdet_var: logdet_var_eta(&params)?,
            mgf_values,
        })
    }

    /// Flat `(column, value)` pairs in fixed order; the MGF list expands to
    /// `mgf_exact_t{t}` / `mgf_approx_t{t}` pairs.
    pub fn flat_fields(&self) -> Vec<(String, Option<f64>)> {
        let mut out: Vec<(String, Option<f64>)> = vec![
            ("d".into(), Some(self.d as f64)),
            ("eta".into(), Some(self.eta)),
            ("exact_log_mean".into(), Some(self.exact_log_mean)),
            (
                "exact_log_second_moment".into(),
                Some(self.exact_log_second_moment),
            ),
            (
                "exact_variance_log_scale".into(),
                Some(self.exact_variance_log_scale),
            ),
            (
                "approx_variance_log_scale".into(),
                self.approx_variance_log_scale,
            ),
            ("mean_root".into(), Some(self.mean_root)),
            ("mean_root_sq".into(), Some(self.mean_root_sq)),
            ("var_root".into(), Some(self.var_root)),
            ("logdet_mean".into(), Some(self.logdet_mean)),
            ("logdet_var".into(), Some(self.logdet_var)),
        ];
        for &(t, exact, approx) in &self.mgf_values {
            out.push((format!("mgf_exact_t{t}"), Some(exact)));
            out.push((format!("mgf_approx_t{t}"), Some(approx)));
        }
        out
    }
}
