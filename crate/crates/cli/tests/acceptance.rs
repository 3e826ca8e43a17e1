//! Acceptance criteria for the library and the `randcorr` binary.
//!
//! Criteria run one after another inside a single test so that the wall-clock
//! bounds are measured without competing test threads. Each prints one
//! `PASS` / `FAIL` line; the test fails if any criterion fails.

// reference values are quoted at the precision they were computed to
#![allow(clippy::excessive_precision)]

use std::process::Command;
use std::time::{Duration, Instant};

use randcorr::moments::{
    exact_log_mean_det, exact_log_second_moment_det, exact_mean_root, exact_var_det, logdet_mean,
    logdet_var, mgf_logdet, var_root,
};
use randcorr::sampler::{
    run_indexed, sample_batch, sample_correlation_matrix, sample_partial_correlations,
};
use randcorr::specfun::{
    digamma, harmonic, log_beta, log_gamma, reg_inc_beta, trigamma, CONSTANTS,
};
use randcorr::stats::{
    clt_experiment, ks_one_sample, ks_two_sample, summarize, symmetric_beta_pm1_cdf,
};
use randcorr::vine::{log_det_from_partials, partials_to_matrix};
use randcorr::{cholesky_log_det, BatchConfig, ModelParams, Pathway, VineSpec};

const SEED: u64 = 42;

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// `d! / (d+1)^(d−1)` by direct multiplication.
fn mean_det_by_hand(d: u32) -> f64 {
    let factorial: f64 = (1..=d).map(f64::from).product();
    factorial / f64::from(d + 1).powi(d as i32 - 1)
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

// 1. Monte Carlo mean of D against the closed form, n = 1e5 per dimension.
fn exact_mean_reproduction() -> Outcome {
    const N: usize = 100_000;
    const Z: f64 = 3.0;
    let mut pass = true;
    let mut detail = Vec::new();
    for d in [3u32, 5, 10] {
        let config = BatchConfig {
            params: ModelParams::uniform(d as usize).unwrap(),
            n: N,
            seed: SEED,
            workers: workers(),
            pathway: Pathway::Direct,
        };
        let dets: Vec<f64> = sample_batch(&config)
            .unwrap()
            .iter()
            .map(|s| s.y.exp())
            .collect();
        let s = summarize(&dets).unwrap();
        let target = mean_det_by_hand(d);
        let z = (s.mean - target) / s.std_error();
        pass &= z.abs() <= Z;
        detail.push(format!(
            "d={d} mean={:.8} target={target:.8} z={z:+.2}",
            s.mean
        ));
    }
    outcome(pass, detail.join("; "))
}

// 2. Vine versus Cholesky log-determinant, and the three sampling pathways.
fn representation_equivalence() -> Outcome {
    const MATRICES: usize = 1000;
    const LOGDET_TOL: f64 = 1e-10;
    const KS_MIN_P: f64 = 0.001;
    const KS_D: usize = 8;
    const KS_N: usize = 20_000;

    let mut worst: f64 = 0.0;
    for d in 3..=15 {
        let params = ModelParams::uniform(d).unwrap();
        let spec = VineSpec::dvine(d).unwrap();
        let diffs = run_indexed(MATRICES, SEED, workers(), |rng| {
            let p = sample_partial_correlations(&params, rng)?;
            let r = partials_to_matrix(&spec, &p)?;
            Ok((log_det_from_partials(&p)? - cholesky_log_det(&r)?).abs())
        })
        .unwrap();
        worst = diffs.into_iter().fold(worst, f64::max);
    }

    let draw = |pathway| {
        let config = BatchConfig {
            params: ModelParams::uniform(KS_D).unwrap(),
            n: KS_N,
            seed: SEED
                + match pathway {
                    Pathway::Direct => 0,
                    Pathway::Double => 1,
                    Pathway::Matrix => 2,
                },
            workers: workers(),
            pathway,
        };
        sample_batch(&config)
            .unwrap()
            .iter()
            .map(|s| s.y)
            .collect::<Vec<f64>>()
    };
    let direct = draw(Pathway::Direct);
    let double = draw(Pathway::Double);
    let matrix = draw(Pathway::Matrix);
    let ps = [
        ks_two_sample(&direct, &double).unwrap().p_value,
        ks_two_sample(&direct, &matrix).unwrap().p_value,
        ks_two_sample(&double, &matrix).unwrap().p_value,
    ];
    let pass = worst <= LOGDET_TOL && ps.iter().all(|&p| p > KS_MIN_P);
    outcome(
        pass,
        format!(
            "max |vine - cholesky| = {worst:.2e} (tol {LOGDET_TOL:e}); KS p direct/double {:.4}, direct/matrix {:.4}, double/matrix {:.4} (min {KS_MIN_P})",
            ps[0], ps[1], ps[2]
        ),
    )
}

// 3. Entry (1,2) against its symmetric Beta law at η = 1 and η = 2.
fn marginal_law() -> Outcome {
    const N: usize = 10_000;
    const D: usize = 6;
    const KS_MIN_P: f64 = 0.001;
    let mut pass = true;
    let mut detail = Vec::new();
    // symmetric Beta(η − 1 + d/2) on (−1, 1)
    for (eta, shape) in [(1.0, 3.0), (2.0, 4.0)] {
        let params = ModelParams::new(D, eta).unwrap();
        let rho12 = run_indexed(N, SEED, workers(), |rng| {
            Ok(sample_correlation_matrix(&params, rng)?.get(1, 0))
        })
        .unwrap();
        let ks = ks_one_sample(&rho12, |x| symmetric_beta_pm1_cdf(x, shape).unwrap()).unwrap();
        pass &= ks.p_value > KS_MIN_P;
        detail.push(format!(
            "eta={eta} vs Beta({shape},{shape}): p={:.4}",
            ks.p_value
        ));
    }
    outcome(pass, detail.join("; "))
}

// 4. E(D^(1/d)) → 1/e and var(D^(1/d)) → 0.
fn main_limit() -> Outcome {
    const GRID: [usize; 5] = [10, 100, 1000, 10_000, 100_000];
    const MEAN_TOL_AT_1E5: f64 = 1e-3;
    const VAR_TOL_AT_1E4: f64 = 1e-6;
    let inv_e = (-1.0f64).exp();
    let mut pass = true;
    let mut detail = Vec::new();
    for eta in [1.0, 2.0, 5.0] {
        let err: Vec<f64> = GRID
            .iter()
            .map(|&d| (exact_mean_root(d, 1, eta).unwrap() - inv_e).abs())
            .collect();
        let var: Vec<f64> = GRID.iter().map(|&d| var_root(d, eta).unwrap()).collect();
        let ok = strictly_decreasing(&err)
            && err[4] < MEAN_TOL_AT_1E5
            && strictly_decreasing(&var)
            && var[3] < VAR_TOL_AT_1E4;
        pass &= ok;
        detail.push(format!(
            "eta={eta}: |mean-1/e| at 1e5 = {:.2e}, var at 1e4 = {:.2e}",
            err[4], var[3]
        ));
    }
    outcome(pass, detail.join("; "))
}

// 5. (E D)^(1/d) → 1/e and (var D)^(1/d) → 1/e².
fn moment_root_limits() -> Outcome {
    const D: usize = 100_000;
    const TOL: f64 = 1e-3;
    let df = D as f64;
    let mean_root = (exact_log_mean_det(D).unwrap() / df).exp();
    let var_root = (exact_var_det(D).unwrap().ln / df).exp();
    let e1 = (mean_root - (-1.0f64).exp()).abs();
    let e2 = (var_root - (-2.0f64).exp()).abs();
    outcome(
        e1 < TOL && e2 < TOL,
        format!("d=1e5: |(ED)^(1/d) - 1/e| = {e1:.2e}, |(var D)^(1/d) - 1/e^2| = {e2:.2e} (tol {TOL:e})"),
    )
}

// 6. Empirical mean and variance of ln D at d = 50.
fn logdet_moments() -> Outcome {
    const D: usize = 50;
    const N: usize = 50_000;
    const Z: f64 = 3.0;
    let config = BatchConfig {
        params: ModelParams::uniform(D).unwrap(),
        n: N,
        seed: SEED,
        workers: workers(),
        pathway: Pathway::Direct,
    };
    let ys: Vec<f64> = sample_batch(&config).unwrap().iter().map(|s| s.y).collect();
    let s = summarize(&ys).unwrap();
    // oracles: Σ_j [ψ(1 + (j−1)/2) − ψ((d+1)/2)] and the trigamma analogue
    let half = |k: usize| k as f64 / 2.0;
    let s_param = half(D + 1);
    let mean_oracle: f64 = (1..D)
        .map(|j| digamma(1.0 + half(j - 1)).unwrap() - digamma(s_param).unwrap())
        .sum();
    let var_oracle: f64 = (1..D)
        .map(|j| trigamma(1.0 + half(j - 1)).unwrap() - trigamma(s_param).unwrap())
        .sum();
    let m4 = ys.iter().map(|y| (y - s.mean).powi(4)).sum::<f64>() / N as f64;
    let se_var = ((m4 - s.variance * s.variance) / N as f64).sqrt();
    let z_mean = (s.mean - mean_oracle) / s.std_error();
    let z_var = (s.variance - var_oracle) / se_var;
    let consistent = (logdet_mean(D).unwrap() - mean_oracle).abs() < 1e-10
        && (logdet_var(D).unwrap() - var_oracle).abs() < 1e-10;
    outcome(
        z_mean.abs() <= Z && z_var.abs() <= Z && consistent,
        format!(
            "mean {:.5} vs {mean_oracle:.5} (z={z_mean:+.2}); var {:.5} vs {var_oracle:.5} (z={z_var:+.2})",
            s.mean, s.variance
        ),
    )
}

// 7. MGF of ln D at t = 1, 2 and its slope at 0.
fn mgf_identities() -> Outcome {
    const TOL: f64 = 1e-12;
    const SLOPE_TOL: f64 = 1e-5;
    const H: f64 = 1e-4;
    let close = |a: f64, b: f64| (a - b).abs() <= TOL * b.abs().max(1.0);
    let mut worst: f64 = 0.0;
    let mut worst_slope: f64 = 0.0;
    let mut pass = true;
    for d in 2..=60 {
        let (m1, m2) = (mgf_logdet(d, 1.0).unwrap(), mgf_logdet(d, 2.0).unwrap());
        let (e1, e2) = (
            exact_log_mean_det(d).unwrap(),
            exact_log_second_moment_det(d).unwrap(),
        );
        pass &= close(m1, e1) && close(m2, e2);
        worst = worst.max((m1 - e1).abs().max((m2 - e2).abs()));
        let slope = (mgf_logdet(d, H).unwrap() - mgf_logdet(d, -H).unwrap()) / (2.0 * H);
        let gap = (slope - logdet_mean(d).unwrap()).abs();
        pass &= gap < SLOPE_TOL;
        worst_slope = worst_slope.max(gap);
    }
    outcome(
        pass,
        format!("d=2..60: max identity gap {worst:.2e} (tol {TOL:e}, relative above 1); max slope gap {worst_slope:.2e} (tol {SLOPE_TOL:e})"),
    )
}

// 8. (ln D + d)/√(ln d) against a moment-matched normal batch.
fn clt_scaling() -> Outcome {
    const N: usize = 2000;
    const KS_MIN_P: f64 = 0.01;
    const REF_MEAN: f64 = 1.69;
    const REF_SD: f64 = 1.34;
    const BAND: f64 = 0.5;
    let mut pass = true;
    let mut detail = Vec::new();
    for d in [300, 400, 500] {
        let (row, _) = clt_experiment(d, N, SEED, workers()).unwrap();
        pass &= row.ks_p > KS_MIN_P;
        let flag = (row.z_mean - REF_MEAN).abs() > BAND || (row.z_sd - REF_SD).abs() > BAND;
        detail.push(format!(
            "d={d} p={:.4} mean={:.3} sd={:.3}{}",
            row.ks_p,
            row.z_mean,
            row.z_sd,
            if flag {
                " [soft flag: outside reference ±0.5]"
            } else {
                ""
            }
        ));
    }
    outcome(pass, detail.join("; "))
}

fn randcorr_bin(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_randcorr"))
        .args(args)
        .env_remove("RANDCORR_SEED")
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

// 9. Byte-identical reruns and worker-count independence.
fn determinism() -> Outcome {
    let runs: &[&[&str]] = &[
        &["sample-matrix", "--d", "6", "--n", "200"],
        &[
            "sample-matrix",
            "--d",
            "6",
            "--n",
            "200",
            "--emit",
            "histogram",
        ],
        &[
            "sample-det",
            "--d",
            "50",
            "--n",
            "2000",
            "--method",
            "direct",
        ],
        &[
            "sample-det",
            "--d",
            "10",
            "--n",
            "500",
            "--method",
            "double",
            "--format",
            "json",
        ],
        &[
            "sample-det",
            "--d",
            "10",
            "--n",
            "500",
            "--method",
            "matrix",
        ],
        &["moments", "--d-grid", "2,5,100"],
        &["converge", "--d-grid", "10,100,1000"],
        &["clt", "--d", "400", "--n", "2000", "--seed", "42"],
        &["marginals", "--d", "6", "--n", "2000"],
        &["validate", "--d-grid", "3,8", "--trials", "50"],
    ];
    let mut failures = Vec::new();
    for args in runs {
        if randcorr_bin(args) != randcorr_bin(args) {
            failures.push(args.join(" "));
        }
    }
    let body = |bytes: Vec<u8>| -> String {
        String::from_utf8(bytes)
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .collect::<Vec<_>>()
            .join("\n")
    };
    for method in ["direct", "double", "matrix"] {
        let base = [
            "sample-det",
            "--d",
            "20",
            "--n",
            "1000",
            "--seed",
            "42",
            "--method",
            method,
        ];
        let one = body(randcorr_bin(&[&base[..], &["--workers", "1"]].concat()));
        let four = body(randcorr_bin(&[&base[..], &["--workers", "4"]].concat()));
        if one != four {
            failures.push(format!("workers 1 vs 4 ({method})"));
        }
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            format!(
                "{} reruns identical; workers 1 vs 4 identical for all pathways",
                runs.len()
            )
        } else {
            format!("differences: {}", failures.join(", "))
        },
    )
}

// 10. Special-function reference values and recurrences.
fn special_functions() -> Outcome {
    const LGAMMA_REL: f64 = 1e-12;
    const ABS: f64 = 1e-10;
    let mut failures: Vec<String> = Vec::new();
    let mut check = |name: &str, got: f64, want: f64, tol: f64| {
        if (got - want).abs() > tol || got.is_nan() {
            failures.push(format!("{name}: {got} vs {want}"));
        }
    };
    // references from 40-digit mpmath
    for (x, want) in [
        (1e-3, 6.907_178_885_383_853_7),
        (0.5, 0.572_364_942_924_700_09),
        (1.0, 0.0),
        (2.5, 0.284_682_870_472_919_16),
        (6.0, 4.787_491_742_782_046),
        (17.25, 31.374_622_313_677_686),
        (123.456, 469.605_547_129_929_47),
        (1e4, 82_099.717_496_442_377),
        (1e7, 151_180_949.369_473_91),
    ] {
        check(
            &format!("log_gamma({x})"),
            log_gamma(x).unwrap(),
            want,
            LGAMMA_REL * f64::abs(want).max(1.0),
        );
    }
    check(
        "log_gamma(6) = ln 120",
        log_gamma(6.0).unwrap(),
        120f64.ln(),
        1e-12,
    );
    for (x, psi, psi1) in [
        (0.1, -10.423_754_940_411_077, 101.433_299_150_792_76),
        (0.5, -1.963_510_026_021_423_5, 4.934_802_200_544_679),
        (1.0, -0.577_215_664_901_532_9, 1.644_934_066_848_226_4),
        (1.5, 0.036_489_973_978_576_52, 0.934_802_200_544_679_3),
        (7.3, 1.917_820_335_637_986, 0.146_795_768_131_427_1),
        (50.0, 3.901_989_673_427_892, 0.020_201_333_226_697_126),
    ] {
        check(&format!("digamma({x})"), digamma(x).unwrap(), psi, ABS);
        check(&format!("trigamma({x})"), trigamma(x).unwrap(), psi1, ABS);
    }
    check(
        "trigamma(2)",
        trigamma(2.0).unwrap(),
        CONSTANTS.pi_sq_over_6 - 1.0,
        ABS,
    );
    check(
        "digamma(1) = -gamma",
        digamma(1.0).unwrap(),
        -CONSTANTS.euler_gamma,
        ABS,
    );
    check("log_beta(1,1)", log_beta(1.0, 1.0).unwrap(), 0.0, 1e-12);
    check(
        "log_beta(1,0.5)",
        log_beta(1.0, 0.5).unwrap(),
        2f64.ln(),
        1e-12,
    );
    check(
        "log_beta(1.5,0.5)",
        log_beta(1.5, 0.5).unwrap(),
        std::f64::consts::FRAC_PI_2.ln(),
        1e-12,
    );
    check("I(0;2,3)", reg_inc_beta(0.0, 2.0, 3.0).unwrap(), 0.0, ABS);
    check("I(1;2,3)", reg_inc_beta(1.0, 2.0, 3.0).unwrap(), 1.0, ABS);
    check("I(0.5;3,3)", reg_inc_beta(0.5, 3.0, 3.0).unwrap(), 0.5, ABS);
    check(
        "I(0.3;2.5,4)",
        reg_inc_beta(0.3, 2.5, 4.0).unwrap(),
        0.352_197_585_906_767_24,
        ABS,
    );
    check(
        "I(0.9;10,0.5)",
        reg_inc_beta(0.9, 10.0, 0.5).unwrap(),
        0.151_640_909_634_709_92,
        ABS,
    );
    check("H_0", harmonic(0), 0.0, 0.0);
    check("H_1", harmonic(1), 1.0, 0.0);
    check("H_4", harmonic(4), 25.0 / 12.0, 1e-15);
    check("H_1000", harmonic(1000), 7.485_470_860_550_345, 1e-12);

    // recurrences on x = 0.1, 0.2, ..., 50
    let mut worst: f64 = 0.0;
    for k in 1..=500 {
        let x = k as f64 / 10.0;
        let dpsi = (digamma(x + 1.0).unwrap() - digamma(x).unwrap() - 1.0 / x).abs();
        let dpsi1 = (trigamma(x + 1.0).unwrap() - trigamma(x).unwrap() + 1.0 / (x * x)).abs();
        worst = worst.max(dpsi).max(dpsi1);
    }
    check("recurrence grid", worst, 0.0, ABS);
    for (x, a, b) in [(0.2, 1.5, 4.0), (0.7, 3.0, 0.5), (0.45, 12.0, 9.0)] {
        let sum = reg_inc_beta(x, a, b).unwrap() + reg_inc_beta(1.0 - x, b, a).unwrap();
        check(&format!("I symmetry ({x},{a},{b})"), sum, 1.0, ABS);
    }
    let n_checks = failures.len();
    outcome(
        failures.is_empty(),
        if n_checks == 0 {
            format!("reference tables and recurrences hold; worst recurrence gap {worst:.2e}")
        } else {
            failures.join("; ")
        },
    )
}

#[test]
fn acceptance_criteria() {
    type Criterion = (u32, &'static str, fn() -> Outcome, Duration);
    let criteria: [Criterion; 10] = [
        (
            1,
            "exact mean of D",
            exact_mean_reproduction,
            Duration::from_secs(5),
        ),
        (
            2,
            "representation equivalence",
            representation_equivalence,
            Duration::from_secs(30),
        ),
        (
            3,
            "entry marginal law",
            marginal_law,
            Duration::from_secs(30),
        ),
        (4, "d-th root limit", main_limit, Duration::from_secs(1)),
        (
            5,
            "moment root limits",
            moment_root_limits,
            Duration::from_secs(1),
        ),
        (
            6,
            "log-det moments",
            logdet_moments,
            Duration::from_secs(10),
        ),
        (7, "MGF identities", mgf_identities, Duration::from_secs(1)),
        (8, "CLT scaling", clt_scaling, Duration::from_secs(60)),
        (9, "determinism", determinism, Duration::from_secs(10)),
        (
            10,
            "special functions",
            special_functions,
            Duration::from_secs(1),
        ),
    ];
    let mut failed = Vec::new();
    for (id, name, run, budget) in criteria {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let in_time = elapsed < budget;
        let pass = result.pass && in_time;
        println!(
            "{} [{id:>2}] {name}: {} | {:.2}s (limit {}s)",
            if pass { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
        if !pass {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
