//! One function per subcommand, each producing a [`Report`].

use randcorr::moments::{exact_mean_root, var_root, MomentReport};
use randcorr::sampler::{
    run_indexed, sample_batch, sample_matrix_batch, sample_partial_correlations,
};
use randcorr::stats::{
    clt_experiment, ks_one_sample, summarize, symmetric_beta_pm1_cdf, symmetric_beta_pm1_pdf,
};
use randcorr::vine::{log_det_from_partials, matrix_to_partials, partials_to_matrix};
use randcorr::{cholesky_log_det, BatchConfig, ModelParams, VineSpec};
use serde_json::json;

use crate::config::{Emit, ExperimentConfig};
use crate::error::CliError;
use crate::output::{Cell, Report};

/// Reference mean and sd of the transformed log-determinant, pooled over
/// d = 300, 400, 500.
pub const CLT_REFERENCE_MEAN: f64 = 1.69;
pub const CLT_REFERENCE_SD: f64 = 1.34;
/// Distance from the reference values beyond which a soft flag is raised.
pub const CLT_FLAG_BAND: f64 = 0.5;

/// Agreement required between the vine and Cholesky log-determinants.
pub const VALIDATE_LOGDET_TOL: f64 = 1e-10;
/// Agreement required for matrix → partials → matrix reconstruction.
pub const VALIDATE_ROUNDTRIP_TOL: f64 = 1e-9;

pub fn run(config: &ExperimentConfig) -> Result<Report, CliError> {
    match config.command {
        "sample-matrix" => sample_matrix(config),
        "sample-det" => sample_det(config),
        "moments" => moments(config),
        "converge" => converge(config),
        "clt" => clt(config),
        "marginals" => marginals(config),
        "validate" => validate(config),
        other => Err(CliError::Config(format!("unknown command {other}"))),
    }
}

fn params(config: &ExperimentConfig, d: usize) -> Result<ModelParams, CliError> {
    Ok(if config.extrapolated {
        ModelParams::extrapolated(d, config.eta)?
    } else {
        ModelParams::new(d, config.eta)?
    })
}

fn sample_matrix(config: &ExperimentConfig) -> Result<Report, CliError> {
    let meta = config.metadata();
    match config.emit {
        Emit::Matrices => {
            let mut report = Report::new(meta, &["d", "sample", "i", "j", "value"]);
            for &d in &config.d_grid {
                let ms = sample_matrix_batch(
                    &params(config, d)?,
                    config.n,
                    config.seed,
                    config.workers,
                )?;
                for (s, m) in ms.iter().enumerate() {
                    for i in 1..d {
                        for j in 0..i {
                            report.push(vec![
                                d.into(),
                                s.into(),
                                (i + 1).into(),
                                (j + 1).into(),
                                m.get(i, j).into(),
                            ]);
                        }
                    }
                }
            }
            Ok(report)
        }
        Emit::Histogram => {
            let columns = ["d", "bin_lo", "bin_hi", "count", "density", "beta_density"];
            let mut report = Report::new(meta, &columns);
            let width = 2.0 / config.bins as f64;
            for &d in &config.d_grid {
                let p = params(config, d)?;
                let shape = p.partial_shape(0);
                let ms = sample_matrix_batch(&p, config.n, config.seed, config.workers)?;
                let mut counts = vec![0u64; config.bins];
                for m in &ms {
                    for &v in m.lower_triangle() {
                        let b = (((v + 1.0) / width) as usize).min(config.bins - 1);
                        counts[b] += 1;
                    }
                }
                let total: u64 = counts.iter().sum();
                for (b, &count) in counts.iter().enumerate() {
                    let lo = -1.0 + b as f64 * width;
                    let hi = lo + width;
                    let density = count as f64 / (total as f64 * width);
                    let reference = symmetric_beta_pm1_pdf(0.5 * (lo + hi), shape)?;
                    report.push(vec![
                        d.into(),
                        lo.into(),
                        hi.into(),
                        count.into(),
                        density.into(),
                        reference.into(),
                    ]);
                }
            }
            Ok(report)
        }
    }
}

fn sample_det(config: &ExperimentConfig) -> Result<Report, CliError> {
    let mut report = Report::new(config.metadata(), &["d", "sample", "y"]);
    for &d in &config.d_grid {
        let batch = BatchConfig {
            params: params(config, d)?,
            n: config.n,
            seed: config.seed,
            workers: config.workers,
            pathway: config.method,
        };
        for (s, y) in sample_batch(&batch)?.iter().enumerate() {
            report.push(vec![d.into(), s.into(), y.y.into()]);
        }
    }
    Ok(report)
}

fn moments(config: &ExperimentConfig) -> Result<Report, CliError> {
    let mut report: Option<Report> = None;
    for &d in &config.d_grid {
        let r = MomentReport::compute(d, config.eta, &config.t_grid)?;
        let mut fields = r.flat_fields();
        // plain-scale companions of the log moments, which may underflow to 0
        fields.insert(2, ("exact_mean".into(), Some(r.exact_log_mean.exp())));
        fields.insert(
            4,
            (
                "exact_second_moment".into(),
                Some(r.exact_log_second_moment.exp()),
            ),
        );
        fields.insert(
            6,
            (
                "exact_variance".into(),
                Some(r.exact_variance_log_scale.exp()),
            ),
        );
        let table = report.get_or_insert_with(|| {
            let names: Vec<&str> = fields.iter().map(|(n, _)| n.as_str()).collect();
            Report::new(config.metadata(), &names)
        });
        table.push(fields.into_iter().map(|(_, v)| Cell::from(v)).collect());
    }
    report.ok_or_else(|| CliError::Config("the dimension grid is empty".into()))
}

fn converge(config: &ExperimentConfig) -> Result<Report, CliError> {
    let columns = [
        "d",
        "eta",
        "mean_root",
        "var_root",
        "mean_det_dth_root",
        "var_det_dth_root",
        "abs_err_vs_inv_e",
    ];
    let mut report = Report::new(config.metadata(), &columns);
    let inv_e = (-1.0f64).exp();
    for &d in &config.d_grid {
        params(config, d)?;
        let r = MomentReport::compute(d, config.eta, &[])?;
        let mean_root = exact_mean_root(d, 1, config.eta)?;
        let df = d as f64;
        report.push(vec![
            d.into(),
            config.eta.into(),
            mean_root.into(),
            var_root(d, config.eta)?.into(),
            (r.exact_log_mean / df).exp().into(),
            (r.exact_variance_log_scale / df).exp().into(),
            (mean_root - inv_e).abs().into(),
        ]);
    }
    Ok(report)
}

fn clt(config: &ExperimentConfig) -> Result<Report, CliError> {
    if config.eta != 1.0 {
        return Err(CliError::Config(
            "the CLT experiment covers eta = 1 only".into(),
        ));
    }
    let columns = ["d", "n", "seed", "z_mean", "z_sd", "ks_stat", "ks_p"];
    let mut report = Report::new(config.metadata(), &columns);
    let mut pooled = Vec::new();
    let mut flags = Vec::new();
    for &d in &config.d_grid {
        let (row, z) = clt_experiment(d, config.n, config.seed, config.workers)?;
        if (row.z_mean - CLT_REFERENCE_MEAN).abs() > CLT_FLAG_BAND {
            flags.push(format!(
                "d={d}: mean {:.4} outside {CLT_REFERENCE_MEAN}±{CLT_FLAG_BAND}",
                row.z_mean
            ));
        }
        if (row.z_sd - CLT_REFERENCE_SD).abs() > CLT_FLAG_BAND {
            flags.push(format!(
                "d={d}: sd {:.4} outside {CLT_REFERENCE_SD}±{CLT_FLAG_BAND}",
                row.z_sd
            ));
        }
        pooled.extend(z);
        report.push(vec![
            row.d.into(),
            row.n.into(),
            row.seed.into(),
            row.z_mean.into(),
            row.z_sd.into(),
            row.ks_stat.into(),
            row.ks_p.into(),
        ]);
    }
    let all = summarize(&pooled)?;
    report.add_meta("pooled_z_mean", json!(all.mean));
    report.add_meta("pooled_z_sd", json!(all.sd()));
    report.add_meta("reference_z_mean", json!(CLT_REFERENCE_MEAN));
    report.add_meta("reference_z_sd", json!(CLT_REFERENCE_SD));
    report.add_meta("soft_flags", json!(flags));
    Ok(report)
}

fn marginals(config: &ExperimentConfig) -> Result<Report, CliError> {
    let columns = ["d", "eta", "i", "j", "shape", "n", "ks_stat", "ks_p"];
    let mut report = Report::new(config.metadata(), &columns);
    for &d in &config.d_grid {
        let p = params(config, d)?;
        let shape = p.partial_shape(0);
        let ms = sample_matrix_batch(&p, config.n, config.seed, config.workers)?;
        let mut entries = vec![(1, 0), (d - 1, 0), (d / 2, d / 2 - 1)];
        entries.sort_unstable();
        entries.dedup();
        for (i, j) in entries {
            let xs: Vec<f64> = ms.iter().map(|m| m.get(i, j)).collect();
            let ks = ks_one_sample(&xs, |x| {
                symmetric_beta_pm1_cdf(x, shape).unwrap_or(f64::NAN)
            })?;
            report.push(vec![
                d.into(),
                config.eta.into(),
                (j + 1).into(),
                (i + 1).into(),
                shape.into(),
                config.n.into(),
                ks.statistic.into(),
                ks.p_value.into(),
            ]);
        }
    }
    Ok(report)
}

fn validate(config: &ExperimentConfig) -> Result<Report, CliError> {
    let columns = [
        "d",
        "trials",
        "max_logdet_abs_diff",
        "max_roundtrip_abs_diff",
        "pass",
    ];
    let mut report = Report::new(config.metadata(), &columns);
    report.add_meta("logdet_tolerance", json!(VALIDATE_LOGDET_TOL));
    report.add_meta("roundtrip_tolerance", json!(VALIDATE_ROUNDTRIP_TOL));
    for &d in &config.d_grid {
        let p = params(config, d)?;
        let spec = VineSpec::dvine(d)?;
        let diffs = run_indexed(config.trials, config.seed, config.workers, |rng| {
            let partials = sample_partial_correlations(&p, rng)?;
            let r = partials_to_matrix(&spec, &partials)?;
            let logdet = (log_det_from_partials(&partials)? - cholesky_log_det(&r)?).abs();
            let back = partials_to_matrix(&spec, &matrix_to_partials(&spec, &r)?)?;
            Ok((logdet, back.max_abs_diff(&r)))
        })?;
        let max_logdet = diffs.iter().map(|x| x.0).fold(0.0, f64::max);
        let max_roundtrip = diffs.iter().map(|x| x.1).fold(0.0, f64::max);
        let pass = max_logdet <= VALIDATE_LOGDET_TOL && max_roundtrip <= VALIDATE_ROUNDTRIP_TOL;
        report.push(vec![
            d.into(),
            config.trials.into(),
            max_logdet.into(),
            max_roundtrip.into(),
            pass.into(),
        ]);
    }
    Ok(report)
}
