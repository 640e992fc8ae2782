//! `noise-stats`: Monte-Carlo statistics of the configured noise model.

use std::path::Path;

use sel3d_core::noise::{estimate_holder_exponent, NoiseModel};
use sel3d_core::ou::{stationary_variance, sup_norm_stats};
use sel3d_core::TorusGrid;

use crate::config::RunConfig;
use crate::{csv_writer, num, CliError};

pub const HOLDER_PATHS: usize = 200;
pub const HOLDER_HORIZON: f64 = 0.25;
pub const SUP_PATHS: usize = 100;
pub const SUP_DT: f64 = 1.0 / 256.0;

#[derive(Clone, Debug, PartialEq)]
pub struct StatRow {
    pub section: String,
    pub name: String,
    pub value: f64,
    pub stderr: Option<f64>,
}

fn row(section: &str, name: impl Into<String>, value: f64, stderr: Option<f64>) -> StatRow {
    StatRow {
        section: section.to_string(),
        name: name.into(),
        value,
        stderr,
    }
}

/// Dyadic lags `2⁻⁸ … 2⁻³`.
pub fn holder_lags() -> Vec<f64> {
    (3..=8).rev().map(|j| 0.5f64.powi(j)).collect()
}

pub fn noise_stats(config: &RunConfig) -> Result<Vec<StatRow>, CliError> {
    let model = match config.noise_model() {
        Some(m) => m,
        None => NoiseModel::new(config.noise.delta, config.noise.decay_s, 0, config.noise.seed)?,
    };
    let report = model.report();
    let mut rows = vec![
        row("model", "trace", report.trace, None),
        row("model", "wavevectors", report.wavevector_count as f64, None),
        row("model", "modes", report.mode_count as f64, None),
    ];
    for (i, m) in report.table.iter().enumerate() {
        rows.push(row(
            "stationary_variance",
            format!("k=({} {} {})", m.k[0], m.k[1], m.k[2]),
            stationary_variance(&model, i),
            None,
        ));
    }

    if model.coordinate_count() == 0 {
        rows.push(row("holder", "slope", 0.0, None));
    } else {
        let est = estimate_holder_exponent(&model, HOLDER_HORIZON, &holder_lags(), HOLDER_PATHS)?;
        rows.push(row("holder", "slope", est.slope, None));
        for (h, mean) in &est.points {
            rows.push(row("holder", format!("mean_norm_at_{h}"), *mean, None));
        }
    }

    let mut sizes = vec![config.n];
    let half = config.n / 2;
    if half >= 8 && half % 2 == 0 && model.kmax() <= TorusGrid::new(half)?.cutoff() {
        sizes.push(half);
    } else {
        log::info!("skipping sup-norm moments at n = {half}: noise modes exceed its cutoff");
    }
    for n in sizes {
        let grid = TorusGrid::new(n)?;
        let sup = sup_norm_stats(&grid, &model, SUP_PATHS, HOLDER_HORIZON, SUP_DT, model.delta())?;
        rows.push(row("sup", format!("domain_sq_n{n}"), sup.sup_domain_sq.0, Some(sup.sup_domain_sq.1)));
        rows.push(row("sup", format!("linf_n{n}"), sup.sup_linf.0, Some(sup.sup_linf.1)));
    }
    Ok(rows)
}

pub fn write_stats(path: &Path, rows: &[StatRow]) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    w.write_record(["section", "name", "value", "stderr"])?;
    for r in rows {
        let se = r.stderr.map(num).unwrap_or_default();
        w.write_record([r.section.as_str(), r.name.as_str(), &num(r.value), &se])?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}
