//! `diagnose`: energy residuals, suitability margins and the a priori
//! bound ingredients of a recorded run.

use std::path::Path;

use sel3d_core::bump::BumpTestFunction;
use sel3d_core::energy::{global_energy_residual, psi_bound_report};
use sel3d_core::local::{local_energy_residual, suitability_sign_check};
use sel3d_core::solver::Solver;
use sel3d_core::Mollifier;

use crate::config::RunConfig;
use crate::snapshot::RunDirectory;
use crate::{csv_writer, num, CliError};

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub section: String,
    pub name: String,
    pub value: f64,
}

impl ReportRow {
    fn new(section: impl Into<String>, name: &str, value: f64) -> Self {
        Self {
            section: section.into(),
            name: name.to_string(),
            value,
        }
    }
}

/// Reads `[[bump]]` entries with keys `center`, `t0`, `rho`, `tau`.
pub fn read_bumps(path: &Path) -> Result<Vec<BumpTestFunction>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::format(path, format!("is not valid TOML: {}", e.message())))?;
    let Some(list) = table.get("bump") else {
        return Ok(Vec::new());
    };
    let list = list
        .as_array()
        .ok_or_else(|| CliError::format(path, "`bump` must be an array of tables"))?;
    let number = |v: &toml::Value, key: &str, i: usize| -> Result<f64, CliError> {
        match v {
            toml::Value::Float(x) => Ok(*x),
            toml::Value::Integer(k) => Ok(*k as f64),
            _ => Err(CliError::format(path, format!("bump {i}: `{key}` must be a number"))),
        }
    };
    let mut out = Vec::with_capacity(list.len());
    for (i, entry) in list.iter().enumerate() {
        let get = |key: &str| {
            entry
                .get(key)
                .ok_or_else(|| CliError::format(path, format!("bump {i}: missing `{key}`")))
        };
        let center = get("center")?
            .as_array()
            .filter(|a| a.len() == 3)
            .ok_or_else(|| CliError::format(path, format!("bump {i}: `center` must have three entries")))?;
        let c = [
            number(&center[0], "center", i)?,
            number(&center[1], "center", i)?,
            number(&center[2], "center", i)?,
        ];
        let bump = BumpTestFunction::new(
            c,
            number(get("t0")?, "t0", i)?,
            number(get("rho")?, "rho", i)?,
            number(get("tau")?, "tau", i)?,
        )
        .map_err(|e| CliError::format(path, format!("bump {i}: {e}")))?;
        out.push(bump);
    }
    Ok(out)
}

fn solver_for(run: &RunDirectory) -> Result<Solver, CliError> {
    let spec = match &run.config {
        Some(c) => c.mollifier,
        None => {
            log::warn!("no run.toml found; using the default mollifier");
            RunConfig::default().mollifier
        }
    };
    let mollifier = Mollifier::new(&run.grid, spec)?;
    Ok(Solver::new(run.grid.clone(), mollifier))
}

/// Report rows for the run in `dir`; with `refined`, also the ratio of
/// global residuals between the two runs.
pub fn diagnose(dir: &Path, bumps: &[BumpTestFunction], refined: Option<&Path>) -> Result<Vec<ReportRow>, CliError> {
    let run = RunDirectory::load(dir)?;
    run.require_history(dir)?;
    let solver = solver_for(&run)?;
    let ledger = global_energy_residual(solver.grid(), solver.mollifier(), &run.states)?;

    let mut rows = vec![
        ReportRow::new("global", "integrated_relative_residual", ledger.integrated_relative_residual()),
        ReportRow::new("global", "max_residual", ledger.max_residual()),
        ReportRow::new("global", "suitability_margin", ledger.suitability_margin()),
    ];
    for (i, bump) in bumps.iter().enumerate() {
        let local = local_energy_residual(&solver, &run.states, *bump)?;
        let s = suitability_sign_check(&ledger, &local);
        let section = format!("local_{i}");
        rows.push(ReportRow::new(section.clone(), "residual", local.residual));
        rows.push(ReportRow::new(section.clone(), "normalized_residual", local.normalized_residual()));
        rows.push(ReportRow::new(section, "suitability_margin", s.local_margin));
    }

    let psi = psi_bound_report(&run.grid, &run.states)?;
    for (name, value) in [
        ("sup_kinetic", psi.sup_kinetic),
        ("sup_director_h1", psi.sup_director_h1),
        ("int_grad_v", psi.int_grad_v),
        ("int_hessian_d", psi.int_hessian_d),
        ("initial_velocity_sq", psi.initial_velocity_sq),
        ("initial_director_h1", psi.initial_director_h1),
        ("z_l4_q", psi.z_l4_q),
        ("exponent", psi.exponent),
        ("lhs_total", psi.lhs_total()),
        ("psi", psi.psi()),
        ("ratio", psi.ratio()),
    ] {
        rows.push(ReportRow::new("psi", name, value));
    }

    if let Some(fine_dir) = refined {
        let fine = RunDirectory::load(fine_dir)?;
        fine.require_history(fine_dir)?;
        let fine_solver = solver_for(&fine)?;
        let fine_ledger = global_energy_residual(fine_solver.grid(), fine_solver.mollifier(), &fine.states)?;
        let coarse = ledger.integrated_relative_residual();
        let finer = fine_ledger.integrated_relative_residual();
        rows.push(ReportRow::new("refinement", "coarse_residual", coarse));
        rows.push(ReportRow::new("refinement", "fine_residual", finer));
        rows.push(ReportRow::new("refinement", "ratio", if finer == 0.0 { 0.0 } else { coarse / finer }));
    }
    Ok(rows)
}

pub fn write_report(path: &Path, rows: &[ReportRow]) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    w.write_record(["section", "name", "value"])?;
    for r in rows {
        w.write_record([r.section.as_str(), r.name.as_str(), &num(r.value)])?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}
