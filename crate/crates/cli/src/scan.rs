//! `scan`: classify a lattice of parabolic cylinders and build the Vitali
//! cover of the unresolved ones.

use std::f64::consts::PI;
use std::path::Path;

use sel3d_core::regularity::{
    classify_point, hausdorff_cover, Classification, CoverReport, Frame, History, ParabolicCylinder, PointReport,
    SpaceTimePoint, Thresholds,
};

use crate::snapshot::RunDirectory;
use crate::{csv_writer, num, CliError};

#[derive(Clone, Debug, PartialEq)]
pub struct ScanOptions {
    pub eps0: Option<f64>,
    pub eps1: Option<f64>,
    pub m: Option<f64>,
    /// Cylinder radius; defaults to `min(0.5, √window)`.
    pub radius: Option<f64>,
    /// Lattice points per axis.
    pub lattice: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            eps0: None,
            eps1: None,
            m: None,
            radius: None,
            lattice: 4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScanResult {
    pub thresholds: Thresholds,
    pub points: Vec<PointReport>,
    pub cover: CoverReport,
}

pub fn history_of(run: &RunDirectory) -> Result<History, CliError> {
    let frames = run
        .states
        .iter()
        .zip(&run.pressures)
        .map(|(s, pi)| Frame::from_state(&run.grid, s, pi))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(History::new(run.grid.clone(), frames)?)
}

/// Cylinder end times: snapshot times from the last one backwards, at
/// least `r²` apart, whose cylinders fit inside the window.
fn end_times(history: &History, r: f64) -> Vec<f64> {
    let (start, _) = history.window();
    let mut out: Vec<f64> = Vec::new();
    for f in history.frames().iter().rev() {
        if f.t - r * r < start - 1e-12 {
            break;
        }
        if out.last().is_none_or(|&t| t - f.t >= r * r - 1e-12) {
            out.push(f.t);
        }
    }
    out.reverse();
    out
}

pub fn scan(dir: &Path, options: &ScanOptions) -> Result<ScanResult, CliError> {
    let run = RunDirectory::load(dir)?;
    run.require_history(dir)?;
    let mut thresholds = run.config.as_ref().map(|c| c.thresholds).unwrap_or_default();
    thresholds.eps0 = options.eps0.unwrap_or(thresholds.eps0);
    thresholds.eps1 = options.eps1.unwrap_or(thresholds.eps1);
    thresholds.m = options.m.unwrap_or(thresholds.m);
    thresholds.validate()?;
    if options.lattice == 0 {
        return Err(CliError::Input("lattice must have at least one point per axis".into()));
    }
    let history = history_of(&run)?;
    let (start, end) = history.window();
    let r = options.radius.unwrap_or_else(|| 0.5f64.min((end - start).sqrt()));
    if !(r > 0.0 && r < PI) {
        return Err(CliError::Input(format!("radius must lie in (0, π), got {r}")));
    }

    let h = 2.0 * PI / options.lattice as f64;
    let mut points = Vec::new();
    for t0 in end_times(&history, r) {
        for k in 0..options.lattice {
            for j in 0..options.lattice {
                for i in 0..options.lattice {
                    let center = [(i as f64 + 0.5) * h, (j as f64 + 0.5) * h, (k as f64 + 0.5) * h];
                    let cyl = ParabolicCylinder::new(center, t0, r)?;
                    points.push(classify_point(&history, &cyl, &thresholds)?);
                }
            }
        }
    }
    if points.is_empty() {
        return Err(CliError::Input(format!(
            "radius {r} does not fit the recorded window [{start}, {end}]"
        )));
    }
    let candidates: Vec<SpaceTimePoint> = points
        .iter()
        .filter(|p| p.classification == Classification::Unresolved)
        .map(|p| SpaceTimePoint {
            x: p.cylinder.center,
            t: p.cylinder.t0,
        })
        .collect();
    let cover = hausdorff_cover(&history, &candidates, &[r, r / 2.0, r / 4.0], thresholds.eps1)?;
    Ok(ScanResult {
        thresholds,
        points,
        cover,
    })
}

/// Writes `regularity.csv` and `cover.csv` into `out`.
pub fn write_reports(out: &Path, result: &ScanResult) -> Result<(), CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let path = out.join("regularity.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["x0", "y0", "z0", "t0", "r", "Theta", "A", "B", "C", "D", "classification"])?;
    for p in &result.points {
        let c = &p.cylinder;
        let q = &p.quantities;
        w.write_record([
            num(c.center[0]),
            num(c.center[1]),
            num(c.center[2]),
            num(c.t0),
            num(c.r),
            num(q.theta()),
            num(q.a),
            num(q.b),
            num(q.c),
            num(q.d),
            p.classification.as_str().to_string(),
        ])?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;

    let path = out.join("cover.csv");
    let mut w = csv_writer(&path)?;
    w.write_record([
        "kind", "x0", "y0", "z0", "t0", "r", "integral", "density", "sum_5r", "bound", "inequality",
    ])?;
    let cover = &result.cover;
    for s in &cover.selected {
        let c = &s.cylinder;
        w.write_record([
            "selected".to_string(),
            num(c.center[0]),
            num(c.center[1]),
            num(c.center[2]),
            num(c.t0),
            num(c.r),
            num(s.integral),
            num(s.density),
            String::new(),
            String::new(),
            String::new(),
        ])?;
    }
    for p in &cover.dropped {
        w.write_record([
            "dropped".to_string(),
            num(p.x[0]),
            num(p.x[1]),
            num(p.x[2]),
            num(p.t),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ])?;
    }
    w.write_record([
        "bound".to_string(),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        num(cover.window_integral),
        String::new(),
        num(cover.sum_5r),
        num(cover.bound),
        if cover.holds() { "pass" } else { "fail" }.to_string(),
    ])?;
    w.flush().map_err(|e| CliError::io(&path, e))
}
