//! Initial-data presets.

use crate::field::SpectralField;
use crate::grid::TorusGrid;

/// `A (sin x cos y cos z, -cos x sin y cos z, 0)`, divergence-free.
pub fn taylor_green(grid: &TorusGrid, amplitude: f64) -> SpectralField {
    SpectralField::from_fn(grid, 3, |x, o| {
        o[0] = amplitude * x[0].sin() * x[1].cos() * x[2].cos();
        o[1] = -amplitude * x[0].cos() * x[1].sin() * x[2].cos();
        o[2] = 0.0;
    })
}

/// Unit director `(cos φ, sin φ, 0)` with a smooth phase
/// `φ = 0.6 sin x + 0.4 cos y sin z`.
pub fn quenched_director(grid: &TorusGrid) -> SpectralField {
    SpectralField::from_fn(grid, 3, |x, o| {
        let phase = 0.6 * x[0].sin() + 0.4 * x[1].cos() * x[2].sin();
        o[0] = phase.cos();
        o[1] = phase.sin();
        o[2] = 0.0;
    })
}

/// A spatially constant director; `dir` is normalized.
pub fn constant_director(grid: &TorusGrid, dir: [f64; 3]) -> SpectralField {
    let n = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
    SpectralField::from_fn(grid, 3, |_, o| {
        for c in 0..3 {
            o[c] = dir[c] / n;
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taylor_green_is_solenoidal() {
        let g = TorusGrid::new(16).unwrap();
        let v = taylor_green(&g, 1.0);
        assert!(crate::spectral::max_divergence(&g, &v).unwrap() < 1e-10);
    }

    #[test]
    fn presets_are_unit_directors() {
        let g = TorusGrid::new(16).unwrap();
        for d in [quenched_director(&g), constant_director(&g, [1.0, 2.0, 2.0])] {
            let p = d.to_physical(&g);
            for i in 0..g.len() {
                let m = (p[0][i].powi(2) + p[1][i].powi(2) + p[2][i].powi(2)).sqrt();
                assert!((m - 1.0).abs() < 1e-12);
            }
        }
    }
}
