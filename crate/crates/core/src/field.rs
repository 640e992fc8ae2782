//! Spectral representation of real periodic fields.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::TorusGrid;

/// Fourier coefficients of a real scalar, vector or tensor field.
///
/// Coefficients are stored per component in grid storage order and follow
/// the unnormalized-forward convention of [`TorusGrid`]. Real-valuedness
/// shows up as Hermitian symmetry `F(-k) = conj F(k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    n: usize,
    components: usize,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: &TorusGrid, components: usize) -> Self {
        Self {
            n: grid.n(),
            components,
            coeffs: vec![Complex64::new(0.0, 0.0); components * grid.len()],
        }
    }

    pub fn from_components(grid: &TorusGrid, comps: Vec<Vec<Complex64>>) -> Self {
        let components = comps.len();
        let mut coeffs = Vec::with_capacity(components * grid.len());
        for c in comps {
            assert_eq!(c.len(), grid.len(), "component length mismatch");
            coeffs.extend(c);
        }
        Self {
            n: grid.n(),
            components,
            coeffs,
        }
    }

    /// Transforms real grid values (one slice per component).
    pub fn from_physical(grid: &TorusGrid, values: &[&[f64]]) -> Result<Self> {
        for v in values {
            if v.len() != grid.len() {
                return Err(Error::param(
                    "values",
                    format!("expected {} samples, got {}", grid.len(), v.len()),
                ));
            }
        }
        Ok(Self::from_components(grid, grid.to_spectral_batch(values)))
    }

    /// Samples `f` at every grid point; `f` writes `components` values.
    pub fn from_fn<F>(grid: &TorusGrid, components: usize, f: F) -> Self
    where
        F: Fn([f64; 3], &mut [f64]),
    {
        let mut values = vec![vec![0.0; grid.len()]; components];
        let mut out = vec![0.0; components];
        for idx in 0..grid.len() {
            f(grid.point(idx), &mut out);
            for (c, v) in out.iter().enumerate() {
                values[c][idx] = *v;
            }
        }
        let refs: Vec<&[f64]> = values.iter().map(|v| v.as_slice()).collect();
        Self::from_components(grid, grid.to_spectral_batch(&refs))
    }

    pub fn to_physical(&self, grid: &TorusGrid) -> Vec<Vec<f64>> {
        let refs: Vec<&[Complex64]> = (0..self.components).map(|c| self.component(c)).collect();
        grid.to_physical_batch(&refs)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    fn stride(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        let s = self.stride();
        &self.coeffs[c * s..(c + 1) * s]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        let s = self.stride();
        &mut self.coeffs[c * s..(c + 1) * s]
    }

    /// Copies out a subset of components as a new field.
    pub fn select(&self, comps: std::ops::Range<usize>) -> Self {
        let s = self.stride();
        Self {
            n: self.n,
            components: comps.len(),
            coeffs: self.coeffs[comps.start * s..comps.end * s].to_vec(),
        }
    }

    pub fn check_grid(&self, grid: &TorusGrid) -> Result<()> {
        if self.n != grid.n() {
            return Err(Error::GridMismatch {
                expected: grid.n(),
                found: self.n,
            });
        }
        Ok(())
    }

    pub fn check_components(&self, expected: usize) -> Result<()> {
        if self.components != expected {
            return Err(Error::ComponentMismatch {
                expected,
                found: self.components,
            });
        }
        Ok(())
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::GridMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        if self.components != other.components {
            return Err(Error::ComponentMismatch {
                expected: self.components,
                found: other.components,
            });
        }
        Ok(())
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &Self) -> Result<()> {
        self.check_same_shape(other)?;
        for (x, y) in self.coeffs.iter_mut().zip(other.coeffs.iter()) {
            *x += y * a;
        }
        Ok(())
    }

    pub fn scale(&mut self, a: f64) {
        for x in self.coeffs.iter_mut() {
            *x *= a;
        }
    }

    pub fn scaled(mut self, a: f64) -> Self {
        self.scale(a);
        self
    }

    /// Sum of two fields of the same shape.
    pub fn plus(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(1.0, other)?;
        Ok(out)
    }

    /// Zeroes every mode outside the dealiasing mask.
    pub fn apply_mask(&mut self, grid: &TorusGrid) {
        let mask = grid.mask();
        let s = self.stride();
        for c in 0..self.components {
            for (x, &keep) in self.coeffs[c * s..(c + 1) * s].iter_mut().zip(mask) {
                if !keep {
                    *x = Complex64::new(0.0, 0.0);
                }
            }
        }
    }

    /// Whether every mode outside the dealiasing mask is zero.
    pub fn is_masked(&self, grid: &TorusGrid) -> bool {
        let mask = grid.mask();
        let s = self.stride();
        (0..self.components).all(|c| {
            self.coeffs[c * s..(c + 1) * s]
                .iter()
                .zip(mask)
                .all(|(x, &keep)| keep || (x.re == 0.0 && x.im == 0.0))
        })
    }

    pub fn masked(mut self, grid: &TorusGrid) -> Self {
        self.apply_mask(grid);
        self
    }

    /// Multiplies every mode by `m(k)`, given per storage index.
    pub fn apply_multiplier(&mut self, multiplier: &[f64]) {
        let s = self.stride();
        for c in 0..self.components {
            for (x, &m) in self.coeffs[c * s..(c + 1) * s].iter_mut().zip(multiplier) {
                *x *= m;
            }
        }
    }

    /// Physical L² norm `(∫|f|²)^{1/2}` summed over components.
    pub fn l2_norm(&self, grid: &TorusGrid) -> f64 {
        let n3 = grid.len() as f64;
        let sum: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        (grid.volume() * sum / (n3 * n3)).sqrt()
    }

    /// Plain ℓ² norm of the raw coefficient vector.
    pub fn coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `∫ f·g` for two fields of the same shape.
    pub fn inner(&self, other: &Self, grid: &TorusGrid) -> Result<f64> {
        self.check_same_shape(other)?;
        let n3 = grid.len() as f64;
        let sum: f64 = self
            .coeffs
            .iter()
            .zip(other.coeffs.iter())
            .map(|(a, b)| (a * b.conj()).re)
            .sum();
        Ok(grid.volume() * sum / (n3 * n3))
    }

    /// Largest violation of `F(-k) = conj F(k)` over all modes.
    pub fn hermitian_defect(&self, grid: &TorusGrid) -> f64 {
        let s = self.stride();
        let mut worst: f64 = 0.0;
        for c in 0..self.components {
            let comp = &self.coeffs[c * s..(c + 1) * s];
            for idx in 0..s {
                let j = grid.conjugate_index(idx);
                worst = worst.max((comp[idx] - comp[j].conj()).norm());
            }
        }
        worst
    }

    /// Spatial average of component `c`.
    pub fn mean(&self, c: usize) -> f64 {
        self.component(c)[0].re / self.stride() as f64
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l2_norm_of_sine_matches_parseval() {
        let g = TorusGrid::new(8).unwrap();
        let f = SpectralField::from_fn(&g, 3, |x, out| {
            out[0] = x[0].sin();
            out[1] = 0.0;
            out[2] = 0.0;
        });
        let expected = (4.0 * std::f64::consts::PI.powi(3)).sqrt();
        assert!((f.l2_norm(&g) - expected).abs() < 1e-12);
        assert!(f.hermitian_defect(&g) < 1e-12);
    }

    #[test]
    fn mean_mode_carries_average() {
        let g = TorusGrid::new(8).unwrap();
        let f = SpectralField::from_fn(&g, 1, |x, out| out[0] = 2.5 + x[1].cos());
        assert!((f.mean(0) - 2.5).abs() < 1e-14);
    }

    #[test]
    fn axpy_rejects_mismatched_shapes() {
        let g8 = TorusGrid::new(8).unwrap();
        let g10 = TorusGrid::new(10).unwrap();
        let mut a = SpectralField::zeros(&g8, 3);
        assert!(matches!(
            a.axpy(1.0, &SpectralField::zeros(&g10, 3)),
            Err(Error::GridMismatch { .. })
        ));
        assert!(matches!(
            a.axpy(1.0, &SpectralField::zeros(&g8, 1)),
            Err(Error::ComponentMismatch { .. })
        ));
    }
}
