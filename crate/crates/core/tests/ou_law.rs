use sel3d_core::noise::NoiseModel;
use sel3d_core::ou::{ou_step_coordinates, stationary_variance};

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
}

#[test]
fn stationary_variance_is_reached() {
    let model = NoiseModel::single_wavevector([1, 2, 0], 1.0, 1.0, 9).unwrap();
    let target = stationary_variance(&model, 0);
    let samples = 4000;
    let mut finals = Vec::with_capacity(samples);
    for s in 0..samples {
        let mut c = vec![0.0; model.coordinate_count()];
        // five relaxation times at λ = 5
        for step in 0..10 {
            ou_step_coordinates(&model, &mut c, 0.1, ((s as u64) << 32) | step).unwrap();
        }
        finals.push(c[0]);
    }
    let (_, var) = mean_var(&finals);
    let expected = target * (1.0 - (-2.0 * 5.0 * 1.0f64).exp());
    let se = expected * (2.0 / (samples as f64 - 1.0)).sqrt();
    assert!((var - expected).abs() < 4.0 * se, "{var} vs {expected} ± {se}");
}

#[test]
fn terminal_law_ignores_time_grid() {
    let model = NoiseModel::single_wavevector([1, 0, 0], 1.0, 1.0, 4).unwrap();
    let samples = 3000;
    let run = |steps: u64, dt: f64| -> Vec<f64> {
        (0..samples)
            .map(|s| {
                let mut c = vec![0.0; model.coordinate_count()];
                for step in 0..steps {
                    ou_step_coordinates(&model, &mut c, dt, ((s as u64) << 32) | step).unwrap();
                }
                c[1]
            })
            .collect()
    };
    let (_, coarse) = mean_var(&run(2, 0.25));
    let (_, fine) = mean_var(&run(16, 1.0 / 32.0));
    let exact = 0.5 * (1.0 - (-1.0f64).exp());
    let se = exact * (2.0 / (samples as f64 - 1.0)).sqrt();
    assert!((coarse - exact).abs() < 4.0 * se);
    assert!((fine - exact).abs() < 4.0 * se);
}
