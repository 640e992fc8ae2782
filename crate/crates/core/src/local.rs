//! Local energy balance against a bump test function, and the
//! suitability margins derived from it and from the global ledger.
//!
//! With `e = ½|v|² + ½|∇d|² + F(d)`, `a = z + Φv`, `u = z + v` and
//! `(∇φ·∇)d = ∂_jφ ∂_j d`, the solver fields satisfy
//!
//! ```text
//! d/dt ∫eφ + ∫(|∇v|² + |Δd|² + |f|²)φ
//!   = ∫e ∂tφ + ∫[(a·∇)v]·z φ + ∫(½|v|² + v·z) a·∇φ + ∫π v·∇φ
//!   + ∫½|v|² Δφ + ∫(∇d⊙∇d - ½|∇d|² I):∇²φ + ∫[(z·∇)Φd]·(Δd - f)φ
//!   + ∫[(u·∇)Φd]·(∇φ·∇)d - ∫f·(∇φ·∇)d - 2∫∇f:∇d φ
//! ```
//!
//! The last group enters with coefficient `-2`.

use crate::bump::{BumpTestFunction, SpatialBump};
use crate::energy::EnergyLedger;
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::TorusGrid;
use crate::potential::{force, potential};
use crate::solver::{physical, SimState, Solver};
use crate::spectral::{gradient, laplacian};

/// Number of right-hand groups.
pub const GROUPS: usize = 10;

/// Coefficient of the `∇f:∇d φ` group.
pub const GRADIENT_FORCE_SIGN: f64 = -2.0;

/// Spatial integrals at one instant.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LocalTerms {
    /// `∫eφ`.
    pub energy: f64,
    /// `∫(|∇v|² + |Δd|² + |f|²)φ`.
    pub dissipation: f64,
    pub rhs: [f64; GROUPS],
}

impl LocalTerms {
    pub fn rhs_total(&self) -> f64 {
        self.rhs.iter().sum()
    }
}

const HESS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

/// Evaluates every integral of the local balance at time `t`, with
/// `bt, dbt` the time factor of `φ` and its derivative.
#[allow(clippy::too_many_arguments)]
pub fn local_terms(
    solver: &Solver,
    spatial: &SpatialBump,
    bt: f64,
    dbt: f64,
    v: &SpectralField,
    d: &SpectralField,
    z: &SpectralField,
    pi: &SpectralField,
) -> Result<LocalTerms> {
    let grid: &TorusGrid = solver.grid();
    let phi_v = solver.mollifier().apply(v)?;
    let phi_d = solver.mollifier().apply(d)?;
    let gv = gradient(grid, v)?;
    let gd = gradient(grid, d)?;
    let gpd = gradient(grid, &phi_d)?;
    let lap = laplacian(grid, d)?;
    let p = physical(grid, &[v, &gv, d, &gd, &lap, &gpd, z, &phi_v, pi]);
    let (pv, pgv, pd, pgd) = (&p[0..3], &p[3..12], &p[12..15], &p[15..24]);
    let (plap, pgpd, pz, ppv, ppi) = (&p[24..27], &p[27..36], &p[36..39], &p[39..42], &p[42]);

    let mut out = LocalTerms::default();
    for idx in 0..grid.len() {
        let sb = spatial.value[idx];
        let phi = sb * bt;
        let phit = sb * dbt;
        let grad_phi = [
            spatial.grad[0][idx] * bt,
            spatial.grad[1][idx] * bt,
            spatial.grad[2][idx] * bt,
        ];
        if phi == 0.0 && phit == 0.0 && grad_phi == [0.0; 3] {
            continue;
        }
        let mut hess = [[0.0; 3]; 3];
        for (slot, &(i, j)) in HESS.iter().enumerate() {
            let h = spatial.hessian[slot][idx] * bt;
            hess[i][j] = h;
            hess[j][i] = h;
        }
        let lap_phi = hess[0][0] + hess[1][1] + hess[2][2];

        let vv = [pv[0][idx], pv[1][idx], pv[2][idx]];
        let dv = [pd[0][idx], pd[1][idx], pd[2][idx]];
        let zv = [pz[0][idx], pz[1][idx], pz[2][idx]];
        let av = [zv[0] + ppv[0][idx], zv[1] + ppv[1][idx], zv[2] + ppv[2][idx]];
        let uv = [zv[0] + vv[0], zv[1] + vv[1], zv[2] + vv[2]];
        let fv = force(dv);
        let lapd = [plap[0][idx], plap[1][idx], plap[2][idx]];
        let gdij = |i: usize, j: usize| pgd[3 * i + j][idx];

        let v2 = vv[0] * vv[0] + vv[1] * vv[1] + vv[2] * vv[2];
        let mut grad_d_sq = 0.0;
        let mut grad_v_sq = 0.0;
        for c in 0..9 {
            grad_d_sq += pgd[c][idx] * pgd[c][idx];
            grad_v_sq += pgv[c][idx] * pgv[c][idx];
        }
        let e = 0.5 * v2 + 0.5 * grad_d_sq + potential(dv);
        let lap_sq = lapd[0] * lapd[0] + lapd[1] * lapd[1] + lapd[2] * lapd[2];
        let f_sq = fv[0] * fv[0] + fv[1] * fv[1] + fv[2] * fv[2];

        out.energy += e * phi;
        out.dissipation += (grad_v_sq + lap_sq + f_sq) * phi;

        let mut adv_v = [0.0; 3];
        let mut z_grad_pd = [0.0; 3];
        let mut u_grad_pd = [0.0; 3];
        let mut phi_grad_d = [0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                adv_v[i] += av[j] * pgv[3 * i + j][idx];
                z_grad_pd[i] += zv[j] * pgpd[3 * i + j][idx];
                u_grad_pd[i] += uv[j] * pgpd[3 * i + j][idx];
                phi_grad_d[i] += grad_phi[j] * gdij(i, j);
            }
        }
        let dot = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];

        let mut stress = 0.0;
        for j in 0..3 {
            for k in 0..3 {
                let m: f64 = (0..3).map(|i| gdij(i, j) * gdij(i, k)).sum();
                stress += m * hess[j][k];
            }
        }
        stress -= 0.5 * grad_d_sq * lap_phi;

        let norm_sq = dot(dv, dv);
        let mut dtg_sq = 0.0;
        for j in 0..3 {
            let s: f64 = (0..3).map(|i| dv[i] * gdij(i, j)).sum();
            dtg_sq += s * s;
        }
        let grad_f_grad_d = 4.0 * (norm_sq - 1.0) * grad_d_sq + 8.0 * dtg_sq;
        let mu = [lapd[0] - fv[0], lapd[1] - fv[1], lapd[2] - fv[2]];

        let r = &mut out.rhs;
        r[0] += e * phit;
        r[1] += dot(adv_v, zv) * phi;
        r[2] += (0.5 * v2 + dot(vv, zv)) * dot(av, grad_phi);
        r[3] += ppi[idx] * dot(vv, grad_phi);
        r[4] += 0.5 * v2 * lap_phi;
        r[5] += stress;
        r[6] += dot(z_grad_pd, mu) * phi;
        r[7] += dot(u_grad_pd, phi_grad_d);
        r[8] -= dot(fv, phi_grad_d);
        r[9] += GRADIENT_FORCE_SIGN * grad_f_grad_d * phi;
    }
    let w = grid.cell_volume();
    out.energy *= w;
    out.dissipation *= w;
    for x in out.rhs.iter_mut() {
        *x *= w;
    }
    Ok(out)
}

/// Time-integrated local balance.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LocalReport {
    /// `∫∫(|∇v|² + |Δd|² + |f|²)φ`.
    pub dissipation: f64,
    /// Time integrals of the right-hand groups.
    pub rhs: [f64; GROUPS],
    /// Sum over intervals of `Δ∫eφ + ∫dissipation - ∫rhs`.
    pub residual: f64,
    /// Sum of the absolute per-interval residuals.
    pub abs_residual: f64,
}

impl LocalReport {
    /// Largest magnitude among the integrated terms.
    pub fn scale(&self) -> f64 {
        self.rhs.iter().fold(self.dissipation.abs(), |m, x| m.max(x.abs()))
    }

    /// `|residual|` over the largest term.
    pub fn normalized_residual(&self) -> f64 {
        let s = self.scale();
        if s == 0.0 {
            0.0
        } else {
            self.residual.abs() / s
        }
    }

    /// Signed `LHS - RHS` of the local energy inequality, normalized.
    pub fn suitability_margin(&self) -> f64 {
        let s = self.scale();
        if s == 0.0 {
            0.0
        } else {
            self.residual / s
        }
    }
}

/// Streams the local balance alongside a simulation. Intervals where `φ`
/// vanishes identically are skipped.
#[derive(Clone, Debug)]
pub struct LocalEnergyTracker {
    bump: BumpTestFunction,
    spatial: SpatialBump,
    report: LocalReport,
    left: Option<LocalTerms>,
}

fn active(bump: &BumpTestFunction, t: f64) -> bool {
    let (b, db) = bump.time_factor(t);
    b != 0.0 || db != 0.0
}

impl LocalEnergyTracker {
    pub fn new(solver: &Solver, bump: BumpTestFunction) -> Self {
        Self {
            spatial: bump.spatial_on_grid(solver.grid()),
            bump,
            report: LocalReport::default(),
            left: None,
        }
    }

    fn terms(&self, solver: &Solver, t: f64, v: &SpectralField, d: &SpectralField, z: &SpectralField) -> Result<LocalTerms> {
        let (bt, dbt) = self.bump.time_factor(t);
        if bt == 0.0 && dbt == 0.0 {
            return Ok(LocalTerms::default());
        }
        let pi = solver.pressure(v, d, z)?;
        local_terms(solver, &self.spatial, bt, dbt, v, d, z, &pi)
    }

    /// Records the step `prev → next`; the interval uses `prev.z`.
    pub fn observe(&mut self, solver: &Solver, prev: &SimState, next: &SimState) -> Result<()> {
        if !active(&self.bump, prev.t) && !active(&self.bump, next.t) {
            self.left = None;
            return Ok(());
        }
        let left = match self.left.take() {
            Some(l) => l,
            None => self.terms(solver, prev.t, &prev.v, &prev.d, &prev.z)?,
        };
        let right = self.terms(solver, next.t, &next.v, &next.d, &prev.z)?;
        let h = next.t - prev.t;
        let rep = &mut self.report;
        let diss = 0.5 * h * (left.dissipation + right.dissipation);
        rep.dissipation += diss;
        let mut rhs = 0.0;
        for g in 0..GROUPS {
            let x = 0.5 * h * (left.rhs[g] + right.rhs[g]);
            rep.rhs[g] += x;
            rhs += x;
        }
        let r = right.energy - left.energy + diss - rhs;
        rep.residual += r;
        rep.abs_residual += r.abs();
        self.left = Some(if next.z == prev.z {
            right
        } else {
            self.terms(solver, next.t, &next.v, &next.d, &next.z)?
        });
        Ok(())
    }

    pub fn report(&self) -> LocalReport {
        self.report.clone()
    }
}

/// Local balance over a recorded history whose window must contain the
/// time support of `bump`.
pub fn local_energy_residual(
    solver: &Solver,
    history: &[SimState],
    bump: BumpTestFunction,
) -> Result<LocalReport> {
    if history.len() < 2 {
        return Err(Error::InsufficientHistory {
            needed: 2,
            found: history.len(),
        });
    }
    bump.check_window(history[0].t, history[history.len() - 1].t)?;
    let mut tracker = LocalEnergyTracker::new(solver, bump);
    for pair in history.windows(2) {
        tracker.observe(solver, &pair[0], &pair[1])?;
    }
    Ok(tracker.report())
}

/// Signed margins of the two energy inequalities; both should be at most
/// the residual tolerance for the mollified solver.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SuitabilityReport {
    /// Worst sub-window margin of the global inequality.
    pub global_margin: f64,
    /// `LHS - RHS` of the local inequality for the bump.
    pub local_margin: f64,
}

impl SuitabilityReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.global_margin <= tol && self.local_margin <= tol
    }
}

pub fn suitability_sign_check(ledger: &EnergyLedger, local: &LocalReport) -> SuitabilityReport {
    SuitabilityReport {
        global_margin: ledger.suitability_margin(),
        local_margin: local.suitability_margin(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init;
    use crate::mollifier::{Mollifier, MollifierKind, MollifierSpec};

    fn solver(n: usize) -> Solver {
        let g = TorusGrid::new(n).unwrap();
        let m = Mollifier::new(&g, MollifierSpec::new(0.4, MollifierKind::Gaussian).unwrap()).unwrap();
        Solver::new(g, m)
    }

    #[test]
    fn zero_and_equilibrium_histories_balance() {
        let s = solver(8);
        let g = s.grid().clone();
        let bump = BumpTestFunction::new([3.0, 3.0, 3.0], 0.5, 2.0, 0.3).unwrap();
        for d in [SpectralField::zeros(&g, 3), init::constant_director(&g, [0.0, 1.0, 0.0])] {
            let st = SimState::new(&g, SpectralField::zeros(&g, 3), d).unwrap();
            let hist: Vec<SimState> = (0..=10)
                .map(|i| {
                    let mut x = st.clone();
                    x.t = 0.1 * i as f64;
                    x
                })
                .collect();
            let r = local_energy_residual(&s, &hist, bump).unwrap();
            assert!(r.residual.abs() < 1e-12);
            assert!(r.dissipation.abs() < 1e-12 || r.normalized_residual() < 1e-12);
        }
    }

    #[test]
    fn support_outside_window_is_rejected() {
        let s = solver(8);
        let g = s.grid().clone();
        let st = SimState::new(&g, SpectralField::zeros(&g, 3), init::constant_director(&g, [1.0, 0.0, 0.0])).unwrap();
        let mut later = st.clone();
        later.t = 0.2;
        let bump = BumpTestFunction::new([0.0; 3], 0.15, 1.0, 0.1).unwrap();
        assert!(matches!(
            local_energy_residual(&s, &[st, later], bump),
            Err(Error::WindowViolation(_))
        ));
    }

    #[test]
    fn frozen_time_profile_integrates_by_parts() {
        // With a stationary state the balance reduces to the spatial
        // identity, which the grid quadrature reproduces to spectral
        // accuracy on well-resolved fields.
        let s = solver(32);
        let g = s.grid().clone();
        let st = SimState::new(&g, init::taylor_green(&g, 0.5), init::quenched_director(&g)).unwrap();
        let bump = BumpTestFunction::new([3.0, 3.0, 3.0], 0.0, 3.0, 1.0).unwrap();
        let spatial = bump.spatial_on_grid(&g);
        let pi = s.pressure_solve(&st).unwrap();
        let t = local_terms(&s, &spatial, 1.0, 0.0, &st.v, &st.d, &st.z, &pi).unwrap();

        // d/dt ∫eφ from the solver's own tendencies
        let e = s.evaluate(&st.v, &st.d, &st.z).unwrap();
        let lap_v = laplacian(&g, &st.v).unwrap();
        let mut vt = e.nv.clone();
        vt.axpy(1.0, &lap_v).unwrap();
        let mut dt_d = e.nd.clone();
        dt_d.axpy(1.0, &laplacian(&g, &st.d).unwrap()).unwrap();
        let h = 1e-4;
        let mut plus = st.clone();
        plus.v.axpy(h, &vt).unwrap();
        plus.d.axpy(h, &dt_d).unwrap();
        let mut minus = st.clone();
        minus.v.axpy(-h, &vt).unwrap();
        minus.d.axpy(-h, &dt_d).unwrap();
        let ep = local_terms(&s, &spatial, 1.0, 0.0, &plus.v, &plus.d, &plus.z, &pi).unwrap().energy;
        let em = local_terms(&s, &spatial, 1.0, 0.0, &minus.v, &minus.d, &minus.z, &pi).unwrap().energy;
        let ddt = (ep - em) / (2.0 * h);
        let lhs = ddt + t.dissipation;
        let rhs = t.rhs_total();
        let scale = t.rhs.iter().fold(t.dissipation.abs(), |m, x| m.max(x.abs()));
        assert!((lhs - rhs).abs() < 1e-4 * scale, "lhs {lhs} rhs {rhs} scale {scale}");
    }
}
