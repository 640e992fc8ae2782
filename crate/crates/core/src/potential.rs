//! Ginzburg–Landau potential `F(d) = (|d|² - 1)²` and its force
//! `f(d) = ∇_d F = 4(|d|² - 1) d`.

use crate::error::Result;
use crate::field::SpectralField;
use crate::grid::TorusGrid;
use crate::spectral::{gradient, laplacian};

#[inline]
pub fn potential(d: [f64; 3]) -> f64 {
    let s = d[0] * d[0] + d[1] * d[1] + d[2] * d[2] - 1.0;
    s * s
}

#[inline]
pub fn force(d: [f64; 3]) -> [f64; 3] {
    let c = 4.0 * (d[0] * d[0] + d[1] * d[1] + d[2] * d[2] - 1.0);
    [c * d[0], c * d[1], c * d[2]]
}

/// Pointwise force on physical arrays (three components).
pub fn force_physical(d: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let len = d[0].len();
    let mut out = vec![vec![0.0; len]; 3];
    for idx in 0..len {
        let f = force([d[0][idx], d[1][idx], d[2][idx]]);
        for c in 0..3 {
            out[c][idx] = f[c];
        }
    }
    out
}

/// `f(d)` evaluated on the grid, transformed and dealiased.
pub fn gl_force(grid: &TorusGrid, d: &SpectralField) -> Result<SpectralField> {
    d.check_grid(grid)?;
    d.check_components(3)?;
    let f = force_physical(&d.to_physical(grid));
    let refs: Vec<&[f64]> = f.iter().map(|v| v.as_slice()).collect();
    Ok(SpectralField::from_physical(grid, &refs)?.masked(grid))
}

/// Grid quadrature of `F(d)`.
pub fn potential_energy(grid: &TorusGrid, d_phys: &[Vec<f64>]) -> f64 {
    let sum: f64 = (0..d_phys[0].len())
        .map(|i| potential([d_phys[0][i], d_phys[1][i], d_phys[2][i]]))
        .sum();
    grid.cell_volume() * sum
}

/// `∫|Δd - f(d)|²` by direct grid quadrature of the squared residual.
pub fn gl_dissipation_direct(grid: &TorusGrid, d: &SpectralField) -> Result<f64> {
    d.check_components(3)?;
    let lap = laplacian(grid, d)?.to_physical(grid);
    let dp = d.to_physical(grid);
    let mut sum = 0.0;
    for idx in 0..grid.len() {
        let f = force([dp[0][idx], dp[1][idx], dp[2][idx]]);
        for c in 0..3 {
            sum += (lap[c][idx] - f[c]).powi(2);
        }
    }
    Ok(grid.cell_volume() * sum)
}

/// `∫|Δd - f(d)|²` through the expansion `|Δd|² + |f|² + 2∇d:∇f`, where
/// `∇f` follows from the chain rule:
/// `2∇d:∇f = 8(|d|² - 1)|∇d|² + 16|(∇d)ᵀd|²`.
pub fn gl_dissipation_expanded(grid: &TorusGrid, d: &SpectralField) -> Result<f64> {
    d.check_components(3)?;
    let lap = laplacian(grid, d)?.to_physical(grid);
    let dp = d.to_physical(grid);
    let gd = gradient(grid, d)?.to_physical(grid);
    let mut sum = 0.0;
    for idx in 0..grid.len() {
        let dv = [dp[0][idx], dp[1][idx], dp[2][idx]];
        let f = force(dv);
        let mut grad_sq = 0.0;
        let mut dtg = [0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                let g = gd[3 * i + j][idx];
                grad_sq += g * g;
                dtg[j] += dv[i] * g;
            }
        }
        let norm_sq = dv[0] * dv[0] + dv[1] * dv[1] + dv[2] * dv[2];
        let lap_sq: f64 = (0..3).map(|c| lap[c][idx].powi(2)).sum();
        let f_sq: f64 = f.iter().map(|x| x * x).sum();
        let dtg_sq: f64 = dtg.iter().map(|x| x * x).sum();
        sum += lap_sq + f_sq + 8.0 * (norm_sq - 1.0) * grad_sq + 16.0 * dtg_sq;
    }
    Ok(grid.cell_volume() * sum)
}

/// True iff `max_x |d(x)| ≤ 1 + tol` on the grid.
pub fn maximum_principle_check(grid: &TorusGrid, d: &SpectralField, tol: f64) -> bool {
    max_director_norm(grid, d) <= 1.0 + tol
}

pub fn max_director_norm(grid: &TorusGrid, d: &SpectralField) -> f64 {
    let dp = d.to_physical(grid);
    (0..grid.len())
        .map(|i| (dp[0][i].powi(2) + dp[1][i].powi(2) + dp[2][i].powi(2)).sqrt())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn force_examples() {
        assert_eq!(force([1.0, 0.0, 0.0]), [0.0, 0.0, 0.0]);
        assert_eq!(force([0.0, 0.0, 0.0]), [0.0, 0.0, 0.0]);
        assert_eq!(force([2.0, 0.0, 0.0]), [24.0, 0.0, 0.0]);
        assert_eq!(potential([0.6, 0.8, 0.0]), 0.0);
    }

    #[test]
    fn force_is_gradient_of_potential() {
        let d = [0.3, -1.1, 0.7];
        let h = 1e-6;
        let f = force(d);
        for c in 0..3 {
            let mut p = d;
            let mut m = d;
            p[c] += h;
            m[c] -= h;
            let fd = (potential(p) - potential(m)) / (2.0 * h);
            assert!((fd - f[c]).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_fields_map_to_constant_force() {
        let g = TorusGrid::new(8).unwrap();
        let d = SpectralField::from_fn(&g, 3, |_, o| {
            o[0] = 2.0;
            o[1] = 0.0;
            o[2] = 0.0;
        });
        let f = gl_force(&g, &d).unwrap().to_physical(&g);
        assert!(f[0].iter().all(|v| (v - 24.0).abs() < 1e-12));
        let unit = SpectralField::from_fn(&g, 3, |_, o| {
            o[0] = 0.0;
            o[1] = 1.0;
            o[2] = 0.0;
        });
        assert!(gl_force(&g, &unit).unwrap().max_abs_coeff() < 1e-12);
    }

    #[test]
    fn two_dissipation_evaluations_agree() {
        let g = TorusGrid::new(24).unwrap();
        let d = SpectralField::from_fn(&g, 3, |x, o| {
            o[0] = 0.8 * x[0].cos() + 0.2 * (x[1] - x[2]).sin();
            o[1] = 0.5 * x[1].sin() * x[2].cos();
            o[2] = 0.3 + 0.4 * (x[0] + x[2]).cos();
        });
        let a = gl_dissipation_direct(&g, &d).unwrap();
        let b = gl_dissipation_expanded(&g, &d).unwrap();
        assert!((a - b).abs() <= 1e-10 * a.abs());
    }

    #[test]
    fn max_principle_flags_long_directors() {
        let g = TorusGrid::new(8).unwrap();
        let d = SpectralField::from_fn(&g, 3, |_, o| {
            o[0] = 1.5;
            o[1] = 0.0;
            o[2] = 0.0;
        });
        assert!(!maximum_principle_check(&g, &d, 1e-3));
        assert!(maximum_principle_check(&g, &d.clone().scaled(1.0 / 1.5), 1e-3));
    }
}
