//! Global energy balance of the solver and the σ-uniform bound
//! ingredients.
//!
//! For a fixed noise field `z` the semi-discrete system satisfies
//!
//! ```text
//! d/dt E + ‖∇v‖² + ‖Δd - f(d)‖² = ∫[(z + Φv)·∇v]·z + ∫(z·∇Φd)·(Δd - f(d))
//! ```
//!
//! with `E = ∫ ½|v|² + ½|∇d|² + F(d)`. Over each step the noise is frozen
//! at its left-endpoint value, so both endpoints of an interval are
//! evaluated with that `z`.

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::TorusGrid;
use crate::mollifier::Mollifier;
use crate::potential::{force_physical, potential_energy};
use crate::solver::{physical, spectral, SimState, Solver};
use crate::spectral::{derivative_ksq, gradient, laplacian};

/// Energy, dissipation and noise work at one instant.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyTerms {
    pub kinetic: f64,
    pub elastic: f64,
    pub potential: f64,
    /// `‖∇v‖²`.
    pub dissipation_v: f64,
    /// `‖Δd - f(d)‖²` with the dealiased force.
    pub dissipation_d: f64,
    /// `∫[(z + Φv)·∇v]·z`.
    pub work_z1: f64,
    /// `∫(z·∇Φd)·(Δd - f(d))`.
    pub work_z2: f64,
}

impl EnergyTerms {
    pub fn energy(&self) -> f64 {
        self.kinetic + self.elastic + self.potential
    }

    pub fn dissipation(&self) -> f64 {
        self.dissipation_v + self.dissipation_d
    }

    pub fn work(&self) -> f64 {
        self.work_z1 + self.work_z2
    }
}

/// `Σ w(k) |f̂(k)|²` in physical L² scaling.
pub(crate) fn weighted_sq(grid: &TorusGrid, f: &SpectralField, weight: &[f64]) -> f64 {
    let n3 = grid.len() as f64;
    let mut sum = 0.0;
    for c in 0..f.components() {
        for (x, w) in f.component(c).iter().zip(weight) {
            sum += w * x.norm_sqr();
        }
    }
    grid.volume() * sum / (n3 * n3)
}

pub fn energy_terms(
    grid: &TorusGrid,
    mollifier: &Mollifier,
    v: &SpectralField,
    d: &SpectralField,
    z: &SpectralField,
) -> Result<EnergyTerms> {
    for f in [v, d, z] {
        f.check_grid(grid)?;
        f.check_components(3)?;
    }
    let ksq = derivative_ksq(grid);
    let dp = d.to_physical(grid);
    let f = spectral(grid, &force_physical(&dp)).masked(grid);
    let mut mu = laplacian(grid, d)?;
    mu.axpy(-1.0, &f)?;

    let mut terms = EnergyTerms {
        kinetic: 0.5 * v.l2_norm(grid).powi(2),
        elastic: 0.5 * weighted_sq(grid, d, &ksq),
        potential: potential_energy(grid, &dp),
        dissipation_v: weighted_sq(grid, v, &ksq),
        dissipation_d: mu.l2_norm(grid).powi(2),
        work_z1: 0.0,
        work_z2: 0.0,
    };
    if z.max_abs_coeff() == 0.0 {
        return Ok(terms);
    }

    let mut a = mollifier.apply(v)?;
    a.axpy(1.0, z)?;
    let grad_v = gradient(grid, v)?;
    let grad_pd = gradient(grid, &mollifier.apply(d)?)?;
    let p = physical(grid, &[&a, &grad_v, &grad_pd, z, &mu]);
    let (pa, pgv, pgd, pz, pmu) = (&p[0..3], &p[3..12], &p[12..21], &p[21..24], &p[24..27]);
    let (mut w1, mut w2) = (0.0, 0.0);
    for idx in 0..grid.len() {
        for i in 0..3 {
            for j in 0..3 {
                w1 += pa[j][idx] * pgv[3 * i + j][idx] * pz[i][idx];
                w2 += pz[j][idx] * pgd[3 * i + j][idx] * pmu[i][idx];
            }
        }
    }
    terms.work_z1 = grid.cell_volume() * w1;
    terms.work_z2 = grid.cell_volume() * w2;
    Ok(terms)
}

/// One CSV row of the ledger. Work and dissipation are the right-endpoint
/// values with the interval's noise field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyRow {
    pub time: f64,
    pub energy: f64,
    pub dissipation_v: f64,
    pub dissipation_d: f64,
    pub work_z1: f64,
    pub work_z2: f64,
    pub residual: f64,
}

/// Trapezoid-in-time residuals of the energy balance, interval by
/// interval.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EnergyLedger {
    rows: Vec<EnergyRow>,
    abs_residual: f64,
    scale: f64,
    max_abs: f64,
    cumulative: Vec<f64>,
}

impl EnergyLedger {
    pub fn new(t0: f64, initial: &EnergyTerms) -> Self {
        Self {
            rows: vec![EnergyRow {
                time: t0,
                energy: initial.energy(),
                dissipation_v: initial.dissipation_v,
                dissipation_d: initial.dissipation_d,
                work_z1: initial.work_z1,
                work_z2: initial.work_z2,
                residual: 0.0,
            }],
            abs_residual: 0.0,
            scale: 0.0,
            max_abs: 0.0,
            cumulative: vec![0.0],
        }
    }

    /// Adds the interval `[t_left, t_right]`; both term sets use the
    /// interval's noise field.
    pub fn push(&mut self, t_left: f64, left: &EnergyTerms, t_right: f64, right: &EnergyTerms) {
        let h = t_right - t_left;
        let de = right.energy() - left.energy();
        let diss = 0.5 * h * (left.dissipation() + right.dissipation());
        let work = 0.5 * h * (left.work() + right.work());
        let r = de + diss - work;
        self.abs_residual += r.abs();
        self.scale += de.abs() + diss.abs() + work.abs();
        self.max_abs = self.max_abs.max(r.abs());
        let c = self.cumulative.last().copied().unwrap_or(0.0) + r;
        self.cumulative.push(c);
        self.rows.push(EnergyRow {
            time: t_right,
            energy: right.energy(),
            dissipation_v: right.dissipation_v,
            dissipation_d: right.dissipation_d,
            work_z1: right.work_z1,
            work_z2: right.work_z2,
            residual: r,
        });
    }

    pub fn rows(&self) -> &[EnergyRow] {
        &self.rows
    }

    pub fn max_residual(&self) -> f64 {
        self.max_abs
    }

    /// `Σ|r| / Σ(|ΔE| + ∫dissipation + |∫work|)`, zero when nothing moves.
    pub fn integrated_relative_residual(&self) -> f64 {
        if self.scale == 0.0 {
            0.0
        } else {
            self.abs_residual / self.scale
        }
    }

    /// Largest `E(t) - E(s) + ∫_s^t (dissipation - work)` over recorded
    /// `s < t`, normalized like the integrated residual. Nonpositive values
    /// mean the energy inequality holds on every sub-window.
    pub fn suitability_margin(&self) -> f64 {
        let mut best = f64::NEG_INFINITY;
        let mut min_prefix = f64::INFINITY;
        for &c in &self.cumulative {
            if min_prefix.is_finite() {
                best = best.max(c - min_prefix);
            }
            min_prefix = min_prefix.min(c);
        }
        if !best.is_finite() || self.scale == 0.0 {
            return 0.0;
        }
        best / self.scale
    }
}

/// Streams energy terms alongside a running simulation.
#[derive(Clone, Debug)]
pub struct EnergyTracker {
    ledger: EnergyLedger,
    left: EnergyTerms,
}

impl EnergyTracker {
    pub fn new(solver: &Solver, state: &SimState) -> Result<Self> {
        let left = energy_terms(solver.grid(), solver.mollifier(), &state.v, &state.d, &state.z)?;
        Ok(Self {
            ledger: EnergyLedger::new(state.t, &left),
            left,
        })
    }

    /// Records the step `prev → next`.
    pub fn observe(&mut self, solver: &Solver, prev: &SimState, next: &SimState) -> Result<()> {
        let (g, m) = (solver.grid(), solver.mollifier());
        let right = energy_terms(g, m, &next.v, &next.d, &prev.z)?;
        self.ledger.push(prev.t, &self.left, next.t, &right);
        self.left = if next.z == prev.z {
            right
        } else {
            energy_terms(g, m, &next.v, &next.d, &next.z)?
        };
        Ok(())
    }

    pub fn ledger(&self) -> &EnergyLedger {
        &self.ledger
    }

    pub fn into_ledger(self) -> EnergyLedger {
        self.ledger
    }
}

/// Ledger over a recorded history; every state carries its own `z`.
pub fn global_energy_residual(
    grid: &TorusGrid,
    mollifier: &Mollifier,
    history: &[SimState],
) -> Result<EnergyLedger> {
    if history.len() < 2 {
        return Err(Error::InsufficientHistory {
            needed: 2,
            found: history.len(),
        });
    }
    let first = &history[0];
    let mut left = energy_terms(grid, mollifier, &first.v, &first.d, &first.z)?;
    let mut ledger = EnergyLedger::new(first.t, &left);
    for pair in history.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let right = energy_terms(grid, mollifier, &b.v, &b.d, &a.z)?;
        ledger.push(a.t, &left, b.t, &right);
        left = energy_terms(grid, mollifier, &b.v, &b.d, &b.z)?;
    }
    Ok(ledger)
}

/// Left-hand quantities of the σ-uniform energy bound and the ingredients
/// of its right-hand side, evaluated with unit constant.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PsiReport {
    pub sup_kinetic: f64,
    pub sup_director_h1: f64,
    pub int_grad_v: f64,
    pub int_hessian_d: f64,
    pub initial_velocity_sq: f64,
    pub initial_director_h1: f64,
    /// `∫₀ᵀ∫|z|⁴`.
    pub z_l4_q: f64,
    /// `∫₀ᵀ (½ + ‖z‖⁴_{L⁴})`.
    pub exponent: f64,
}

impl PsiReport {
    /// `(‖u₀‖² + ‖d₀‖²_{H¹} + ‖z‖⁴_{L⁴(Q_T)}) e^{∫(½ + ‖z‖⁴)}`.
    pub fn psi(&self) -> f64 {
        (self.initial_velocity_sq + self.initial_director_h1 + self.z_l4_q) * self.exponent.exp()
    }

    pub fn lhs_total(&self) -> f64 {
        self.sup_kinetic + self.sup_director_h1 + self.int_grad_v + self.int_hessian_d
    }

    pub fn ratio(&self) -> f64 {
        let p = self.psi();
        if p == 0.0 {
            0.0
        } else {
            self.lhs_total() / p
        }
    }

    pub fn lhs(&self) -> [f64; 4] {
        [self.sup_kinetic, self.sup_director_h1, self.int_grad_v, self.int_hessian_d]
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct PsiSample {
    t: f64,
    grad_v: f64,
    hessian_d: f64,
    z4: f64,
}

/// Streaming accumulator for [`PsiReport`].
#[derive(Clone, Debug, Default)]
pub struct PsiAccumulator {
    report: PsiReport,
    last: Option<PsiSample>,
}

/// `∫_{T³}|z|⁴` by grid quadrature.
pub fn z_l4_fourth(grid: &TorusGrid, z: &SpectralField) -> Result<f64> {
    z.check_grid(grid)?;
    z.check_components(3)?;
    if z.max_abs_coeff() == 0.0 {
        return Ok(0.0);
    }
    let p = z.to_physical(grid);
    let s: f64 = (0..grid.len())
        .map(|i| (p[0][i].powi(2) + p[1][i].powi(2) + p[2][i].powi(2)).powi(2))
        .sum();
    Ok(grid.cell_volume() * s)
}

impl PsiAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, grid: &TorusGrid, state: &SimState) -> Result<()> {
        let ksq = derivative_ksq(grid);
        let k4: Vec<f64> = ksq.iter().map(|k| k * k).collect();
        let kin = state.v.l2_norm(grid).powi(2);
        let h1 = state.d.l2_norm(grid).powi(2) + weighted_sq(grid, &state.d, &ksq);
        let sample = PsiSample {
            t: state.t,
            grad_v: weighted_sq(grid, &state.v, &ksq),
            hessian_d: weighted_sq(grid, &state.d, &k4),
            z4: z_l4_fourth(grid, &state.z)?,
        };
        let r = &mut self.report;
        match self.last {
            None => {
                r.initial_velocity_sq = kin;
                r.initial_director_h1 = h1;
            }
            Some(prev) => {
                let h = sample.t - prev.t;
                r.int_grad_v += 0.5 * h * (prev.grad_v + sample.grad_v);
                r.int_hessian_d += 0.5 * h * (prev.hessian_d + sample.hessian_d);
                r.z_l4_q += 0.5 * h * (prev.z4 + sample.z4);
                r.exponent += h * 0.5 + 0.5 * h * (prev.z4 + sample.z4);
            }
        }
        r.sup_kinetic = r.sup_kinetic.max(kin);
        r.sup_director_h1 = r.sup_director_h1.max(h1);
        self.last = Some(sample);
        Ok(())
    }

    pub fn report(&self) -> PsiReport {
        self.report.clone()
    }
}

pub fn psi_bound_report(grid: &TorusGrid, history: &[SimState]) -> Result<PsiReport> {
    let mut acc = PsiAccumulator::new();
    for s in history {
        acc.push(grid, s)?;
    }
    Ok(acc.report())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init;
    use crate::mollifier::{MollifierKind, MollifierSpec};
    use crate::solver::Simulation;
    use std::f64::consts::PI;

    #[test]
    fn zero_state_has_zero_terms() {
        let g = TorusGrid::new(8).unwrap();
        let z = SpectralField::zeros(&g, 3);
        let t = energy_terms(&g, &Mollifier::identity(&g), &z, &z, &z).unwrap();
        assert_eq!(t.dissipation(), 0.0);
        assert_eq!(t.work(), 0.0);
        assert_eq!(t.kinetic + t.elastic, 0.0);
        // F(0) = 1 everywhere
        assert!((t.potential - g.volume()).abs() < 1e-9);
    }

    #[test]
    fn equilibrium_history_has_zero_residual() {
        let g = TorusGrid::new(8).unwrap();
        let st = SimState::new(&g, SpectralField::zeros(&g, 3), init::constant_director(&g, [1.0, 0.0, 0.0])).unwrap();
        let mut later = st.clone();
        later.t = 0.1;
        let ledger = global_energy_residual(&g, &Mollifier::identity(&g), &[st.clone(), later]).unwrap();
        assert_eq!(ledger.integrated_relative_residual(), 0.0);
        assert!(ledger.max_residual() < 1e-12);
        assert!(global_energy_residual(&g, &Mollifier::identity(&g), &[st]).is_err());
    }

    #[test]
    fn deterministic_energy_decreases() {
        let g = TorusGrid::new(16).unwrap();
        let m = Mollifier::new(&g, MollifierSpec::new(0.3, MollifierKind::Gaussian).unwrap()).unwrap();
        let solver = Solver::new(g.clone(), m);
        let st = SimState::new(&g, init::taylor_green(&g, 1.0), init::quenched_director(&g)).unwrap();
        let mut sim = Simulation::new(solver, None, st, 2e-3).unwrap();
        let mut tracker = EnergyTracker::new(sim.solver(), sim.state()).unwrap();
        for _ in 0..20 {
            let prev = sim.advance().unwrap();
            tracker.observe(sim.solver(), &prev, sim.state()).unwrap();
        }
        let rows = tracker.ledger().rows();
        for w in rows.windows(2) {
            assert!(w[1].energy <= w[0].energy + 1e-6);
        }
        assert!(tracker.ledger().integrated_relative_residual() < 1e-3);
    }

    #[test]
    fn frozen_sine_noise_l4() {
        let g = TorusGrid::new(16).unwrap();
        let amp = 0.7;
        let z = SpectralField::from_fn(&g, 3, |x, o| {
            o[0] = 0.0;
            o[1] = 0.0;
            o[2] = amp * x[0].sin();
        });
        let exact = 3.0 * PI.powi(3) * amp.powi(4);
        assert!((z_l4_fourth(&g, &z).unwrap() - exact).abs() < 1e-10 * exact);

        let mut a = SimState::new(&g, SpectralField::zeros(&g, 3), init::constant_director(&g, [1.0, 0.0, 0.0])).unwrap();
        a.z = z;
        let mut b = a.clone();
        b.t = 0.5;
        let r = psi_bound_report(&g, &[a, b]).unwrap();
        assert!((r.z_l4_q - 0.5 * exact).abs() < 1e-10 * exact);
        assert!((r.exponent - (0.25 + 0.5 * exact)).abs() < 1e-9 * exact);
        assert_eq!(r.int_grad_v, 0.0);
    }

    #[test]
    fn suitability_margin_tracks_worst_window() {
        let mut l = EnergyLedger::new(0.0, &EnergyTerms::default());
        let mut t = EnergyTerms::default();
        t.kinetic = 1.0;
        l.push(0.0, &EnergyTerms::default(), 1.0, &t);
        l.push(1.0, &t, 2.0, &EnergyTerms::default());
        // cumulative residuals 0, 1, 0: worst window gains 1 over a scale of 2
        assert!((l.suitability_margin() - 0.5).abs() < 1e-15);
    }
}
