use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sel3d_core::{Mollifier, MollifierKind, MollifierSpec, SpectralField, TorusGrid};

fn lp_norm(values: &[Vec<f64>], p: f64, cell: f64) -> f64 {
    let n = values[0].len();
    let sum: f64 = (0..n)
        .map(|i| values.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt().powf(p))
        .sum();
    (cell * sum).powf(1.0 / p)
}

fn random_field(grid: &TorusGrid, seed: u64, rough: bool) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = grid.len();
    let values: Vec<Vec<f64>> = (0..3)
        .map(|_| {
            if rough {
                (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
            } else {
                let waves: Vec<([f64; 3], f64, f64)> = (0..6)
                    .map(|_| {
                        let k = [
                            rng.random_range(-4..=4) as f64,
                            rng.random_range(-4..=4) as f64,
                            rng.random_range(-4..=4) as f64,
                        ];
                        (k, rng.random_range(-1.0..1.0), rng.random_range(0.0..6.3))
                    })
                    .collect();
                (0..len)
                    .map(|idx| {
                        let x = grid.point(idx);
                        waves
                            .iter()
                            .map(|(k, a, ph)| a * (k[0] * x[0] + k[1] * x[1] + k[2] * x[2] + ph).cos())
                            .sum()
                    })
                    .collect()
            }
        })
        .collect();
    let refs: Vec<&[f64]> = values.iter().map(|v| v.as_slice()).collect();
    SpectralField::from_physical(grid, &refs).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn mollifier_contracts_lp(
        seed in any::<u64>(),
        rough in any::<bool>(),
        sigma in 0.05f64..1.5,
        bump in any::<bool>(),
    ) {
        let g = TorusGrid::new(16).unwrap();
        let kind = if bump { MollifierKind::Bump } else { MollifierKind::Gaussian };
        let m = Mollifier::new(&g, MollifierSpec::new(sigma, kind).unwrap()).unwrap();
        let f = random_field(&g, seed, rough);
        let before = f.to_physical(&g);
        let after = m.apply(&f).unwrap().to_physical(&g);
        for p in [1.0, 2.0, 4.0] {
            let a = lp_norm(&before, p, g.cell_volume());
            let b = lp_norm(&after, p, g.cell_volume());
            prop_assert!(a - b >= -1e-12 * a.max(1.0), "p = {p}: {b} > {a}");
        }
    }
}
