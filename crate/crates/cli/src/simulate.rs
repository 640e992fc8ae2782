//! `simulate`: integrate a configuration and persist snapshots plus the
//! energy ledger.

use std::fs;
use std::path::Path;

use sel3d_core::energy::{EnergyLedger, EnergyTracker};
use sel3d_core::potential::max_director_norm;
use sel3d_core::solver::{SimState, Simulation, Solver};
use sel3d_core::{init, Mollifier, SpectralField, TorusGrid};

use crate::config::{DirectorPreset, RunConfig, VelocityPreset};
use crate::snapshot::{snapshot_name, Snapshot};
use crate::{csv_writer, num, CliError};

/// Summary of a finished run.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub steps: u64,
    pub snapshots: usize,
    pub max_director: f64,
    pub integrated_relative_residual: f64,
}

pub fn initial_state(config: &RunConfig, grid: &TorusGrid) -> Result<SimState, CliError> {
    if let Some(path) = &config.init_file {
        let snap = Snapshot::read(path)?;
        let mut state = snap.to_state(grid, path)?.state;
        state.t = 0.0;
        return Ok(SimState::new(grid, state.v, state.d)?);
    }
    let v = match config.velocity {
        VelocityPreset::Zero => SpectralField::zeros(grid, 3),
        VelocityPreset::TaylorGreen => init::taylor_green(grid, 1.0),
    };
    let d = match config.director {
        DirectorPreset::Quenched => init::quenched_director(grid),
        DirectorPreset::Uniform => init::constant_director(grid, [0.0, 0.0, 1.0]),
    };
    Ok(SimState::new(grid, v, d)?)
}

/// Runs `config` and writes `run.toml`, `snap_*.sel3d` and `energy.csv`
/// into `out`. On an instability the ledger up to the failing step is
/// still written before the error is returned.
pub fn simulate(config: &RunConfig, out: &Path) -> Result<RunSummary, CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let mut recorded = config.clone();
    recorded.output_dir = None;
    let run_toml = out.join("run.toml");
    fs::write(&run_toml, recorded.to_toml()).map_err(|e| CliError::io(&run_toml, e))?;

    let grid = config.grid();
    let mollifier = Mollifier::new(&grid, config.mollifier)?;
    let solver = Solver::new(grid.clone(), mollifier);
    let initial = initial_state(config, &grid)?;
    let mut sim = Simulation::new(solver, config.noise_model(), initial, config.dt)?;

    let steps = config.steps();
    let every = config.steps_per_snapshot();
    let mut snapshots = 0;
    let mut write_snapshot = |sim: &Simulation, step: u64| -> Result<(), CliError> {
        let pi = sim.solver().pressure_solve(sim.state())?;
        let path = out.join(snapshot_name(step));
        Snapshot::from_state(&grid, sim.state(), &pi).write(&path)?;
        snapshots += 1;
        Ok(())
    };
    write_snapshot(&sim, 0)?;

    let mut tracker = EnergyTracker::new(sim.solver(), sim.state())?;
    let mut max_d = vec![max_director_norm(&grid, &sim.state().d)];
    let mut failure = None;
    for step in 1..=steps {
        let prev = match sim.advance() {
            Ok(prev) => prev,
            Err(e) => {
                failure = Some(e);
                break;
            }
        };
        if let Err(e) = tracker.observe(sim.solver(), &prev, sim.state()) {
            failure = Some(e);
            break;
        }
        let m = max_director_norm(&grid, &sim.state().d);
        if m > 1.0 + config.tol_mp {
            log::warn!("max |d| = {m} exceeds 1 + {} at t = {}", config.tol_mp, sim.state().t);
        }
        max_d.push(m);
        if step % every == 0 || step == steps {
            write_snapshot(&sim, step)?;
        }
    }

    write_ledger(&out.join("energy.csv"), tracker.ledger(), &max_d)?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok(RunSummary {
        steps,
        snapshots,
        max_director: max_d.iter().copied().fold(0.0, f64::max),
        integrated_relative_residual: tracker.ledger().integrated_relative_residual(),
    })
}

pub fn write_ledger(path: &Path, ledger: &EnergyLedger, max_director: &[f64]) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "time",
        "E",
        "dissipation_v",
        "dissipation_d",
        "work_z1",
        "work_z2",
        "residual",
        "max_director",
    ])?;
    for (i, row) in ledger.rows().iter().enumerate() {
        let md = max_director.get(i).copied().unwrap_or(f64::NAN);
        w.write_record([
            num(row.time),
            num(row.energy),
            num(row.dissipation_v),
            num(row.dissipation_d),
            num(row.work_z1),
            num(row.work_z2),
            num(row.residual),
            num(md),
        ])?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}
