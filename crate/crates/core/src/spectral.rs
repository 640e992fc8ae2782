//! Spectral calculus: derivatives, Leray projection, fractional Stokes
//! norms and dealiased pointwise products.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::TorusGrid;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Calls `f(idx, k)` for every mode with its derivative wavenumber.
#[inline]
pub(crate) fn for_each_mode(grid: &TorusGrid, mut f: impl FnMut(usize, [f64; 3])) {
    let n = grid.n();
    let ad = grid.axis_derivative();
    let mut idx = 0;
    for iz in 0..n {
        for iy in 0..n {
            for ix in 0..n {
                f(idx, [ad[ix], ad[iy], ad[iz]]);
                idx += 1;
            }
        }
    }
}

/// Orthogonal projection onto divergence-free fields, `I - k kᵀ/|k|²` per
/// mode. Nyquist modes are zeroed; the mean mode passes through.
pub fn leray_project(grid: &TorusGrid, f: &SpectralField) -> Result<SpectralField> {
    let mut out = f.clone();
    leray_project_in_place(grid, &mut out)?;
    Ok(out)
}

pub fn leray_project_in_place(grid: &TorusGrid, f: &mut SpectralField) -> Result<()> {
    f.check_grid(grid)?;
    f.check_components(3)?;
    let len = grid.len();
    let coeffs = f.coeffs_mut();
    let (c0, rest) = coeffs.split_at_mut(len);
    let (c1, c2) = rest.split_at_mut(len);
    for_each_mode(grid, |idx, k| {
        if idx == 0 {
            return;
        }
        if grid.is_nyquist(idx) {
            c0[idx] = ZERO;
            c1[idx] = ZERO;
            c2[idx] = ZERO;
            return;
        }
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        let dot = (c0[idx] * k[0] + c1[idx] * k[1] + c2[idx] * k[2]) / k2;
        c0[idx] -= dot * k[0];
        c1[idx] -= dot * k[1];
        c2[idx] -= dot * k[2];
    });
    Ok(())
}

/// Spectral gradient. For an `m`-component input the output has `3m`
/// components ordered `[i][j] = ∂_j f_i`.
pub fn gradient(grid: &TorusGrid, f: &SpectralField) -> Result<SpectralField> {
    f.check_grid(grid)?;
    let len = grid.len();
    let m = f.components();
    let mut out = SpectralField::zeros(grid, 3 * m);
    let coeffs = out.coeffs_mut();
    for i in 0..m {
        let src = f.component(i);
        for_each_mode(grid, |idx, k| {
            let s = src[idx];
            let is = Complex64::new(-s.im, s.re);
            for (j, kj) in k.iter().enumerate() {
                coeffs[(3 * i + j) * len + idx] = is * *kj;
            }
        });
    }
    Ok(out)
}

/// Spectral divergence of a vector field.
pub fn divergence(grid: &TorusGrid, f: &SpectralField) -> Result<SpectralField> {
    f.check_grid(grid)?;
    f.check_components(3)?;
    let mut out = SpectralField::zeros(grid, 1);
    let (a, b, c) = (f.component(0), f.component(1), f.component(2));
    let dst = out.coeffs_mut();
    for_each_mode(grid, |idx, k| {
        let s = a[idx] * k[0] + b[idx] * k[1] + c[idx] * k[2];
        dst[idx] = Complex64::new(-s.im, s.re);
    });
    Ok(out)
}

/// Largest `|k·f̂(k)|` over all modes.
pub fn max_divergence(grid: &TorusGrid, f: &SpectralField) -> Result<f64> {
    f.check_grid(grid)?;
    f.check_components(3)?;
    let (a, b, c) = (f.component(0), f.component(1), f.component(2));
    let mut worst: f64 = 0.0;
    for_each_mode(grid, |idx, k| {
        worst = worst.max((a[idx] * k[0] + b[idx] * k[1] + c[idx] * k[2]).norm());
    });
    Ok(worst)
}

/// Componentwise `Δf`, i.e. multiplication by `-|k|²`.
pub fn laplacian(grid: &TorusGrid, f: &SpectralField) -> Result<SpectralField> {
    f.check_grid(grid)?;
    let neg: Vec<f64> = derivative_ksq(grid).into_iter().map(|x| -x).collect();
    let mut out = f.clone();
    out.apply_multiplier(&neg);
    Ok(out)
}

/// `|k|²` computed from the derivative wavenumbers (Nyquist entries zeroed).
pub fn derivative_ksq(grid: &TorusGrid) -> Vec<f64> {
    let mut out = vec![0.0; grid.len()];
    for_each_mode(grid, |idx, k| out[idx] = k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
    out
}

/// `(Σ_{k≠0} |k|^{4α} |f̂(k)|²)^{1/2}` with `f̂` the Fourier-series
/// coefficient, scaled so that `α = 0` gives the physical L² norm of the
/// zero-mean part.
pub fn fractional_norm(grid: &TorusGrid, f: &SpectralField, alpha: f64) -> Result<f64> {
    f.check_grid(grid)?;
    if !(alpha >= 0.0) {
        return Err(Error::param("alpha", format!("must be >= 0, got {alpha}")));
    }
    let ksq = grid.ksq();
    let len = grid.len();
    let mut sum = 0.0;
    for c in 0..f.components() {
        let comp = f.component(c);
        for idx in 1..len {
            sum += ksq[idx].powf(2.0 * alpha) * comp[idx].norm_sqr();
        }
    }
    let n3 = len as f64;
    Ok((grid.volume() * sum / (n3 * n3)).sqrt())
}

/// Pointwise product evaluated on the grid and masked back to the retained
/// modes. Inputs are masked first. Equal component counts multiply
/// componentwise; a scalar factor broadcasts against a vector.
pub fn dealiased_product(
    grid: &TorusGrid,
    f: &SpectralField,
    g: &SpectralField,
) -> Result<SpectralField> {
    f.check_grid(grid)?;
    g.check_grid(grid)?;
    let (mf, mg) = (f.components(), g.components());
    if mf != mg && mf != 1 && mg != 1 {
        return Err(Error::ComponentMismatch {
            expected: mf,
            found: mg,
        });
    }
    let fp = f.clone().masked(grid).to_physical(grid);
    let gp = g.clone().masked(grid).to_physical(grid);
    let m = mf.max(mg);
    let prod: Vec<Vec<f64>> = (0..m)
        .map(|c| {
            let a = &fp[if mf == 1 { 0 } else { c }];
            let b = &gp[if mg == 1 { 0 } else { c }];
            a.iter().zip(b.iter()).map(|(x, y)| x * y).collect()
        })
        .collect();
    let refs: Vec<&[f64]> = prod.iter().map(|v| v.as_slice()).collect();
    Ok(SpectralField::from_components(grid, grid.to_spectral_batch(&refs)).masked(grid))
}

/// Heat-semigroup factors `e^{-|k|² t}` in storage order.
pub fn heat_multiplier(grid: &TorusGrid, t: f64) -> Vec<f64> {
    grid.ksq().iter().map(|k2| (-k2 * t).exp()).collect()
}
