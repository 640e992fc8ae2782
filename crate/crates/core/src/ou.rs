//! Exact-in-law integrator for the linear stochastic Stokes field
//! `dz + Az dt = dW`, `z(0) = 0`.

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::TorusGrid;
use crate::noise::NoiseModel;

/// Time, frame coordinates and spectral field of `z`.
#[derive(Clone, Debug, PartialEq)]
pub struct OUState {
    pub t: f64,
    pub coords: Vec<f64>,
    pub zhat: SpectralField,
}

impl OUState {
    pub fn new(grid: &TorusGrid, model: &NoiseModel) -> Result<Self> {
        model.check_grid(grid)?;
        Ok(Self {
            t: 0.0,
            coords: vec![0.0; model.coordinate_count()],
            zhat: SpectralField::zeros(grid, 3),
        })
    }

    /// Advances by `dt` with randomness keyed by `stream`.
    pub fn step(&mut self, grid: &TorusGrid, model: &NoiseModel, dt: f64, stream: u64) -> Result<()> {
        ou_step_coordinates(model, &mut self.coords, dt, stream)?;
        self.zhat = model.field_from_coordinates(grid, &self.coords)?;
        self.t += dt;
        Ok(())
    }
}

/// Per coordinate `ξ ← e^{-λ dt} ξ + η`, `η ~ N(0, a²(1 - e^{-2λ dt})/(2λ))`
/// with `a² = γ λ^{-2δ}`.
pub fn ou_step_coordinates(
    model: &NoiseModel,
    coords: &mut [f64],
    dt: f64,
    stream: u64,
) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::param("dt", format!("must be positive, got {dt}")));
    }
    if coords.len() != model.coordinate_count() {
        return Err(Error::param(
            "coords",
            format!("expected {} coordinates, got {}", model.coordinate_count(), coords.len()),
        ));
    }
    let mut eta = vec![0.0; coords.len()];
    model.standard_normals(stream, &mut eta);
    for ((m, c), e) in model.modes().iter().zip(coords.chunks_mut(4)).zip(eta.chunks(4)) {
        let decay = (-m.lambda * dt).exp();
        let a2 = m.amplitude(model.delta()).powi(2);
        let sd = (a2 * -(-2.0 * m.lambda * dt).exp_m1() / (2.0 * m.lambda)).sqrt();
        for (x, n) in c.iter_mut().zip(e) {
            *x = decay * *x + sd * n;
        }
    }
    Ok(())
}

/// Advances `state` and returns the new one (functional form).
pub fn ou_step(
    grid: &TorusGrid,
    model: &NoiseModel,
    state: &OUState,
    dt: f64,
    stream: u64,
) -> Result<OUState> {
    let mut next = state.clone();
    next.step(grid, model, dt, stream)?;
    Ok(next)
}

/// Stationary variance `a²/(2λ)` of each coordinate of a mode.
pub fn stationary_variance(model: &NoiseModel, mode: usize) -> f64 {
    let m = &model.modes()[mode];
    m.amplitude(model.delta()).powi(2) / (2.0 * m.lambda)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupNormReport {
    pub paths: usize,
    pub alpha: f64,
    /// Mean over paths of `sup_t ‖z(t)‖²_{D(A^α)}` and its standard error.
    pub sup_domain_sq: (f64, f64),
    /// Mean over paths of `sup_t ‖z(t)‖_{L∞}` and its standard error.
    pub sup_linf: (f64, f64),
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Monte-Carlo moments of the running supremum of `z` over `[0, horizon]`,
/// sampled on the time grid of step `dt`. Path `p` uses streams
/// `(p << 32) | step`.
pub fn sup_norm_stats(
    grid: &TorusGrid,
    model: &NoiseModel,
    paths: usize,
    horizon: f64,
    dt: f64,
    alpha: f64,
) -> Result<SupNormReport> {
    if paths < 100 {
        return Err(Error::param("paths", format!("need at least 100, got {paths}")));
    }
    if !(alpha >= 0.0) {
        return Err(Error::param("alpha", format!("must be >= 0, got {alpha}")));
    }
    model.check_grid(grid)?;
    let steps = (horizon / dt).round() as usize;
    let mut sup_dom = Vec::with_capacity(paths);
    let mut sup_inf = Vec::with_capacity(paths);
    for p in 0..paths {
        let mut state = OUState::new(grid, model)?;
        let (mut a, mut b) = (0.0f64, 0.0f64);
        for step in 0..steps {
            state.step(grid, model, dt, ((p as u64) << 32) | step as u64)?;
            a = a.max(model.weighted_norm_sq(&state.coords, alpha));
            if model.coordinate_count() > 0 {
                let phys = state.zhat.to_physical(grid);
                for idx in 0..grid.len() {
                    let m2 = phys[0][idx].powi(2) + phys[1][idx].powi(2) + phys[2][idx].powi(2);
                    b = b.max(m2.sqrt());
                }
            }
        }
        sup_dom.push(a);
        sup_inf.push(b);
    }
    Ok(SupNormReport {
        paths,
        alpha,
        sup_domain_sq: mean_and_se(&sup_dom),
        sup_linf: mean_and_se(&sup_inf),
    })
}
