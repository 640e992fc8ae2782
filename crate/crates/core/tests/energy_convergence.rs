use sel3d_core::energy::EnergyTracker;
use sel3d_core::solver::{SimState, Solver};
use sel3d_core::{init, Mollifier, MollifierKind, MollifierSpec, TorusGrid};

fn residual(dt: f64) -> f64 {
    let g = TorusGrid::new(16).unwrap();
    let m = Mollifier::new(&g, MollifierSpec::new(0.3, MollifierKind::Bump).unwrap()).unwrap();
    let s = Solver::new(g.clone(), m);
    let mut st = SimState::new(&g, init::taylor_green(&g, 1.0), init::quenched_director(&g)).unwrap();
    let mut tr = EnergyTracker::new(&s, &st).unwrap();
    for _ in 0..(0.05 / dt).round() as usize {
        let next = s.step(&st, dt, &st.z).unwrap();
        tr.observe(&s, &st, &next).unwrap();
        st = next;
    }
    tr.ledger().integrated_relative_residual()
}

#[test]
fn global_residual_is_second_order() {
    let coarse = residual(2e-3);
    let fine = residual(1e-3);
    assert!(coarse < 1e-3);
    let ratio = coarse / fine;
    assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
}
