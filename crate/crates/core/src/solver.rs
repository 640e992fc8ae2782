//! Time integration of the mollified Ericksen–Leslie system driven by the
//! Stokes noise field `z`:
//!
//! ```text
//! ∂t v - Δv + P_L[(z + Φv)·∇(z + v) + (∇Φd)ᵀ(Δd - f(d))] = 0
//! ∂t d - Δd + (z + v)·∇Φd + f(d) = 0
//! ```
//!
//! The Laplacian is integrated exactly by an integrating factor; the
//! nonlinear terms use a two-stage exponential Heun scheme with `z` frozen
//! at the start of each step.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::TorusGrid;
use crate::mollifier::Mollifier;
use crate::noise::NoiseModel;
use crate::ou::OUState;
use crate::potential::force_physical;
use crate::spectral::{derivative_ksq, for_each_mode, heat_multiplier, leray_project_in_place};

/// Time plus spectral velocity, director and noise fields.
#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub v: SpectralField,
    pub d: SpectralField,
    pub z: SpectralField,
}

impl SimState {
    pub fn new(grid: &TorusGrid, v: SpectralField, d: SpectralField) -> Result<Self> {
        v.check_grid(grid)?;
        d.check_grid(grid)?;
        v.check_components(3)?;
        d.check_components(3)?;
        let mut v = v.masked(grid);
        leray_project_in_place(grid, &mut v)?;
        Ok(Self {
            t: 0.0,
            v,
            d: d.masked(grid),
            z: SpectralField::zeros(grid, 3),
        })
    }
}

/// Everything one right-hand-side evaluation produces.
#[derive(Clone, Debug)]
pub struct Evaluation {
    /// Projected velocity forcing.
    pub nv: SpectralField,
    /// Director forcing.
    pub nd: SpectralField,
    /// Dealiased `(a·∇)u + (∇Φd)ᵀμ` before projection.
    pub g: SpectralField,
    /// Dealiased `f(d)`.
    pub f: SpectralField,
}

#[derive(Clone, Debug)]
pub struct Solver {
    grid: TorusGrid,
    mollifier: Mollifier,
    nonlinear: bool,
    growth_limit: f64,
    derivative_ksq: Vec<f64>,
}

/// Inverse-transforms all components of several fields in one batch.
pub(crate) fn physical(grid: &TorusGrid, fields: &[&SpectralField]) -> Vec<Vec<f64>> {
    let refs: Vec<&[Complex64]> = fields
        .iter()
        .flat_map(|f| (0..f.components()).map(move |c| f.component(c)))
        .collect();
    grid.to_physical_batch(&refs)
}

pub(crate) fn spectral(grid: &TorusGrid, values: &[Vec<f64>]) -> SpectralField {
    let refs: Vec<&[f64]> = values.iter().map(|v| v.as_slice()).collect();
    SpectralField::from_components(grid, grid.to_spectral_batch(&refs))
}

/// Forward transform restricted to the retained modes.
fn spectral_masked(grid: &TorusGrid, values: &[Vec<f64>]) -> SpectralField {
    let refs: Vec<&[f64]> = values.iter().map(|v| v.as_slice()).collect();
    SpectralField::from_components(grid, grid.to_spectral_masked_batch(&refs))
}

/// `π̂ = i k·ĝ / |k|²`, zero mean.
pub fn pressure_from_forcing(grid: &TorusGrid, g: &SpectralField) -> Result<SpectralField> {
    g.check_components(3)?;
    let mut out = SpectralField::zeros(grid, 1);
    let (a, b, c) = (g.component(0), g.component(1), g.component(2));
    let dst = out.coeffs_mut();
    for_each_mode(grid, |idx, k| {
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 == 0.0 {
            return;
        }
        let s = (a[idx] * k[0] + b[idx] * k[1] + c[idx] * k[2]) / k2;
        dst[idx] = Complex64::new(-s.im, s.re);
    });
    Ok(out)
}

impl Solver {
    pub fn new(grid: TorusGrid, mollifier: Mollifier) -> Self {
        Self {
            derivative_ksq: derivative_ksq(&grid),
            grid,
            mollifier,
            nonlinear: true,
            growth_limit: 1e3,
        }
    }

    /// Switches the nonlinear terms off (pure heat flow), for testing.
    pub fn without_nonlinearity(mut self) -> Self {
        self.nonlinear = false;
        self
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn mollifier(&self) -> &Mollifier {
        &self.mollifier
    }

    /// Evaluates the forcing at `(v, d)` with noise field `z`. Only the
    /// retained modes of the inputs are used.
    pub fn evaluate(&self, v: &SpectralField, d: &SpectralField, z: &SpectralField) -> Result<Evaluation> {
        let grid = &self.grid;
        for f in [v, d, z] {
            f.check_grid(grid)?;
            f.check_components(3)?;
        }
        if [v, d, z].iter().all(|f| f.is_masked(grid)) {
            self.evaluate_masked(v, d, z)
        } else {
            let [v, d, z] = [v, d, z].map(|f| f.clone().masked(grid));
            self.evaluate_masked(&v, &d, &z)
        }
    }

    fn evaluate_masked(&self, v: &SpectralField, d: &SpectralField, z: &SpectralField) -> Result<Evaluation> {
        let grid = &self.grid;
        let dc = d.coeffs();
        let dp = grid.to_physical_masked_with(3, |c, out| out.copy_from_slice(d.component(c)));
        let f = spectral_masked(grid, &force_physical(&dp));
        if !self.nonlinear {
            let zero = SpectralField::zeros(grid, 3);
            return Ok(Evaluation {
                nv: zero.clone(),
                nd: zero.clone(),
                g: zero,
                f,
            });
        }

        let m = self.mollifier.multiplier();
        let ksq = &self.derivative_ksq;
        let (vc, zc, fc) = (v.coeffs(), z.coeffs(), f.coeffs());
        let len = grid.len();
        let ad = grid.axis_derivative();
        let n = grid.n();
        // a, ∇u, ∇Φd, u, μ with a = z + Φv, u = z + v, μ = Δd - f
        let p = grid.to_physical_masked_with(27, |field, out| match field {
            0..=2 => {
                let r = field * len..(field + 1) * len;
                for (((o, &zv), &vv), &mv) in out.iter_mut().zip(&zc[r.clone()]).zip(&vc[r]).zip(m) {
                    *o = zv + vv * mv;
                }
            }
            3..=20 => {
                let (i, j) = ((field - 3) / 3 % 3, (field - 3) % 3);
                let r = i * len..(i + 1) * len;
                if field < 12 {
                    for ((o, &zv), &vv) in out.iter_mut().zip(&zc[r.clone()]).zip(&vc[r]) {
                        *o = zv + vv;
                    }
                } else {
                    for ((o, &dv), &mv) in out.iter_mut().zip(&dc[r]).zip(m) {
                        *o = dv * mv;
                    }
                }
                let times_ik = |c: &mut Complex64, k: f64| *c = Complex64::new(-c.im * k, c.re * k);
                for (row_index, row) in out.chunks_exact_mut(n).enumerate() {
                    match j {
                        0 => row.iter_mut().zip(ad).for_each(|(c, &k)| times_ik(c, k)),
                        1 => {
                            let k = ad[row_index % n];
                            row.iter_mut().for_each(|c| times_ik(c, k));
                        }
                        _ => {
                            let k = ad[row_index / n];
                            row.iter_mut().for_each(|c| times_ik(c, k));
                        }
                    }
                }
            }
            21..=23 => {
                let r = (field - 21) * len..(field - 20) * len;
                for ((o, &zv), &vv) in out.iter_mut().zip(&zc[r.clone()]).zip(&vc[r]) {
                    *o = zv + vv;
                }
            }
            _ => {
                let r = (field - 24) * len..(field - 23) * len;
                for (((o, &dv), &fv), &k2) in out.iter_mut().zip(&dc[r.clone()]).zip(&fc[r]).zip(ksq.iter()) {
                    *o = -dv * k2 - fv;
                }
            }
        });
        let (pa, pgu, pgd, pu, pmu) = (&p[0..3], &p[3..12], &p[12..21], &p[21..24], &p[24..27]);
        let mut gh: Vec<Vec<f64>> = Vec::with_capacity(6);
        for i in 0..3 {
            let mut out = vec![0.0; len];
            for j in 0..3 {
                let terms = pa[j].iter().zip(&pgu[3 * i + j]).zip(&pgd[3 * j + i]).zip(&pmu[j]);
                for (o, (((a, gu), gd), mu)) in out.iter_mut().zip(terms) {
                    *o += a * gu + gd * mu;
                }
            }
            gh.push(out);
        }
        for i in 0..3 {
            let mut out = vec![0.0; len];
            for j in 0..3 {
                for (o, (u, gd)) in out.iter_mut().zip(pu[j].iter().zip(&pgd[3 * i + j])) {
                    *o += u * gd;
                }
            }
            gh.push(out);
        }
        let gh = spectral_masked(grid, &gh);
        let g = gh.select(0..3);
        let mut nv = g.clone().scaled(-1.0);
        leray_project_in_place(grid, &mut nv)?;
        let mut nd = gh.select(3..6).scaled(-1.0);
        nd.axpy(-1.0, &f)?;
        Ok(Evaluation { nv, nd, g, f })
    }

    /// `(Nv, Nd)` at a state.
    pub fn nonlinear_rhs(&self, state: &SimState) -> Result<(SpectralField, SpectralField)> {
        let e = self.evaluate(&state.v, &state.d, &state.z)?;
        Ok((e.nv, e.nd))
    }

    /// Zero-mean pressure of the state with noise field `z`.
    pub fn pressure(&self, v: &SpectralField, d: &SpectralField, z: &SpectralField) -> Result<SpectralField> {
        if !self.nonlinear {
            return Ok(SpectralField::zeros(&self.grid, 1));
        }
        let e = self.evaluate(v, d, z)?;
        pressure_from_forcing(&self.grid, &e.g)
    }

    pub fn pressure_solve(&self, state: &SimState) -> Result<SpectralField> {
        self.pressure(&state.v, &state.d, &state.z)
    }

    fn guard(&self, t: f64, field: &'static str, before: f64, after: f64) -> Result<()> {
        if !after.is_finite() || after > self.growth_limit * before.max(1e-3) {
            return Err(Error::Instability {
                time: t,
                field,
                before,
                after,
            });
        }
        Ok(())
    }

    /// One step of length `dt`. The nonlinear terms see `state.z`; the
    /// returned state carries `z_next`.
    pub fn step(&self, state: &SimState, dt: f64, z_next: &SpectralField) -> Result<SimState> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::param("dt", format!("must be positive, got {dt}")));
        }
        z_next.check_grid(&self.grid)?;
        z_next.check_components(3)?;
        let grid = &self.grid;
        let e = heat_multiplier(grid, dt);

        let ev0 = self.evaluate(&state.v, &state.d, &state.z)?;
        let stage = |w: &SpectralField, n: &SpectralField| -> Result<SpectralField> {
            let mut s = w.clone();
            s.axpy(dt, n)?;
            s.apply_multiplier(&e);
            Ok(s.masked(grid))
        };
        let v1 = stage(&state.v, &ev0.nv)?;
        let d1 = stage(&state.d, &ev0.nd)?;
        let t_end = state.t + dt;
        self.guard(t_end, "v", state.v.coeff_norm(), v1.coeff_norm())?;
        self.guard(t_end, "d", state.d.coeff_norm(), d1.coeff_norm())?;

        let ev1 = self.evaluate_masked(&v1, &d1, &state.z)?;
        let correct = |w: &SpectralField, n0: &SpectralField, n1: &SpectralField| -> Result<SpectralField> {
            let mut s = w.clone();
            s.axpy(0.5 * dt, n0)?;
            s.apply_multiplier(&e);
            s.axpy(0.5 * dt, n1)?;
            Ok(s.masked(grid))
        };
        let mut v = correct(&state.v, &ev0.nv, &ev1.nv)?;
        leray_project_in_place(grid, &mut v)?;
        let d = correct(&state.d, &ev0.nd, &ev1.nd)?;
        self.guard(t_end, "v", state.v.coeff_norm(), v.coeff_norm())?;
        self.guard(t_end, "d", state.d.coeff_norm(), d.coeff_norm())?;
        Ok(SimState {
            t: t_end,
            v,
            d,
            z: z_next.clone(),
        })
    }
}

/// A solver coupled to an optional noise source. Step `j` draws its noise
/// from stream `j`.
#[derive(Clone, Debug)]
pub struct Simulation {
    solver: Solver,
    noise: Option<(NoiseModel, OUState)>,
    state: SimState,
    dt: f64,
    steps: u64,
}

impl Simulation {
    pub fn new(solver: Solver, noise: Option<NoiseModel>, initial: SimState, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::param("dt", format!("must be positive, got {dt}")));
        }
        let noise = match noise {
            Some(model) => {
                let ou = OUState::new(solver.grid(), &model)?;
                Some((model, ou))
            }
            None => None,
        };
        let mut state = initial;
        state.z = match &noise {
            Some((_, ou)) => ou.zhat.clone(),
            None => SpectralField::zeros(solver.grid(), 3),
        };
        Ok(Self {
            solver,
            noise,
            state,
            dt,
            steps: 0,
        })
    }

    pub fn solver(&self) -> &Solver {
        &self.solver
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Advances one step and returns the state it started from.
    pub fn advance(&mut self) -> Result<SimState> {
        let z_next = match &mut self.noise {
            Some((model, ou)) => {
                ou.step(self.solver.grid(), model, self.dt, self.steps)?;
                ou.zhat.clone()
            }
            None => self.state.z.clone(),
        };
        let next = self.solver.step(&self.state, self.dt, &z_next)?;
        self.steps += 1;
        Ok(std::mem::replace(&mut self.state, next))
    }
}
