//! Discretization of the periodic box `[0, 2π)³` and the 3D transforms.
//!
//! Transforms follow one fixed convention: the forward transform is the
//! unnormalized DFT, the inverse carries the `1/n³` factor. Spectral
//! coefficients are therefore `n³` times the Fourier-series coefficients,
//! and every physical-space integral is `(2π/n)³` times a grid sum.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform grid on the torus together with its wavenumber lattice and
/// dealiasing mask.
///
/// Wavenumbers along each axis run over `{-n/2+1, …, n/2}`. A mode is
/// retained by the dealiasing mask when every `|k_j| ≤ K`, where `K` is the
/// largest integer with `3K < n`. That keeps the mask inside the two-thirds
/// band and makes grid sums of triple products of retained fields exact.
#[derive(Clone)]
pub struct TorusGrid {
    n: usize,
    cutoff: usize,
    axis_wavenumbers: Vec<i64>,
    axis_derivative: Vec<f64>,
    ksq: Vec<f64>,
    retained: Vec<bool>,
    conjugate: Vec<usize>,
    /// `(start, width)` runs of retained indices along one axis.
    axis_runs: Vec<(usize, usize)>,
    /// Runs of retained `(ix, iy)` columns within a z-plane.
    plane_runs: Vec<(usize, usize)>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("n", &self.n)
            .field("cutoff", &self.cutoff)
            .finish()
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

impl TorusGrid {
    /// Builds the grid with `n` points per axis (`n` even, `n ≥ 8`).
    pub fn new(n: usize) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be even and >= 8, got {n}"
            )));
        }
        let half = (n / 2) as i64;
        let axis_wavenumbers: Vec<i64> = (0..n as i64)
            .map(|i| if i <= half { i } else { i - n as i64 })
            .collect();
        let axis_derivative = axis_wavenumbers
            .iter()
            .map(|&k| if k == half { 0.0 } else { k as f64 })
            .collect();
        let cutoff = (n - 1) / 3;

        let total = n * n * n;
        let mut ksq = Vec::with_capacity(total);
        let mut retained = Vec::with_capacity(total);
        for iz in 0..n {
            let kz = axis_wavenumbers[iz];
            for iy in 0..n {
                let ky = axis_wavenumbers[iy];
                for ix in 0..n {
                    let kx = axis_wavenumbers[ix];
                    ksq.push((kx * kx + ky * ky + kz * kz) as f64);
                    let c = cutoff as i64;
                    retained.push(kx.abs() <= c && ky.abs() <= c && kz.abs() <= c);
                }
            }
        }

        let mut conjugate = Vec::with_capacity(total);
        for iz in 0..n {
            for iy in 0..n {
                for ix in 0..n {
                    conjugate.push((((n - iz) % n) * n + (n - iy) % n) * n + (n - ix) % n);
                }
            }
        }

        let axis_runs = vec![(0, cutoff + 1), (n - cutoff, cutoff)];
        let mut plane_runs = Vec::new();
        for &(start, width) in &axis_runs {
            for iy in start..start + width {
                plane_runs.extend(axis_runs.iter().map(|&(x0, w)| (iy * n + x0, w)));
            }
        }

        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Self {
            n,
            cutoff,
            axis_wavenumbers,
            axis_derivative,
            ksq,
            retained,
            conjugate,
            axis_runs,
            plane_runs,
            forward,
            inverse,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of grid points (and of Fourier modes), `n³`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest retained `|k_j|` under the dealiasing mask.
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Torus period along each axis.
    pub fn length(&self) -> f64 {
        2.0 * PI
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    /// `|T³| = (2π)³`.
    pub fn volume(&self) -> f64 {
        (2.0 * PI).powi(3)
    }

    /// Integer wavenumber of the mode stored at `idx`.
    pub fn mode(&self, idx: usize) -> [i64; 3] {
        let (iz, iy, ix) = self.unflatten(idx);
        [
            self.axis_wavenumbers[ix],
            self.axis_wavenumbers[iy],
            self.axis_wavenumbers[iz],
        ]
    }

    /// Wavenumber used for spectral differentiation: the Nyquist entry is
    /// zeroed so that derivatives of real fields stay real.
    pub fn derivative_wavenumber(&self, idx: usize) -> [f64; 3] {
        let (iz, iy, ix) = self.unflatten(idx);
        [
            self.axis_derivative[ix],
            self.axis_derivative[iy],
            self.axis_derivative[iz],
        ]
    }

    pub(crate) fn axis_derivative(&self) -> &[f64] {
        &self.axis_derivative
    }

    /// `|k|²` per mode, in storage order.
    pub fn ksq(&self) -> &[f64] {
        &self.ksq
    }

    /// Dealiasing mask per mode, in storage order.
    pub fn mask(&self) -> &[bool] {
        &self.retained
    }

    pub fn is_retained(&self, idx: usize) -> bool {
        self.retained[idx]
    }

    /// True when any component of the mode sits on the Nyquist row.
    pub fn is_nyquist(&self, idx: usize) -> bool {
        let half = (self.n / 2) as i64;
        self.mode(idx).iter().any(|&k| k == half)
    }

    /// Storage index of the wavenumber `k`, if it is on the lattice.
    pub fn index_of(&self, k: [i64; 3]) -> Option<usize> {
        let n = self.n as i64;
        let half = n / 2;
        let mut out = [0usize; 3];
        for (slot, &kj) in out.iter_mut().zip(k.iter()) {
            if kj <= -half || kj > half {
                return None;
            }
            *slot = kj.rem_euclid(n) as usize;
        }
        Some(self.flatten(out[2], out[1], out[0]))
    }

    /// Storage index of `-k` for the mode at `idx` (Nyquist rows map onto
    /// themselves).
    pub fn conjugate_index(&self, idx: usize) -> usize {
        self.conjugate[idx]
    }

    /// Physical coordinates of grid point `idx`.
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let (iz, iy, ix) = self.unflatten(idx);
        let h = self.spacing();
        [ix as f64 * h, iy as f64 * h, iz as f64 * h]
    }

    #[inline]
    pub fn flatten(&self, iz: usize, iy: usize, ix: usize) -> usize {
        (iz * self.n + iy) * self.n + ix
    }

    #[inline]
    pub fn unflatten(&self, idx: usize) -> (usize, usize, usize) {
        let n = self.n;
        (idx / (n * n), (idx / n) % n, idx % n)
    }

    /// In-place unnormalized forward DFT.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// In-place inverse DFT including the `1/n³` factor.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let s = 1.0 / self.len() as f64;
        for c in data.iter_mut() {
            *c *= s;
        }
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        let full = [(0, n)];
        self.transform_runs(data, fft, &full, &[(0, n * n)], false);
    }

    /// Unscaled inverse of a spectrum supported on the retained modes; the
    /// columns known to vanish are skipped.
    fn inverse_from_masked(&self, data: &mut [Complex64]) {
        self.transform_runs(data, &self.inverse, &self.axis_runs, &self.plane_runs, true);
    }

    /// Forward transform that is exact on the retained modes only.
    fn forward_to_masked(&self, data: &mut [Complex64]) {
        self.transform_runs(data, &self.forward, &self.axis_runs, &self.plane_runs, false);
    }

    fn transform_runs(
        &self,
        data: &mut [Complex64],
        fft: &Arc<dyn Fft<f64>>,
        y_runs: &[(usize, usize)],
        z_runs: &[(usize, usize)],
        z_first: bool,
    ) {
        let n = self.n;
        assert_eq!(data.len(), n * n * n, "transform length mismatch");
        let zero = Complex64::new(0.0, 0.0);
        let mut scratch = vec![zero; fft.get_inplace_scratch_len()];
        let mut buf = vec![zero; COLUMN_BLOCK * n];
        let fft = fft.as_ref();
        if z_first {
            fft_columns(data, n * n, n, z_runs, fft, &mut buf, &mut scratch);
            for plane in data.chunks_exact_mut(n * n) {
                fft_columns(plane, n, n, y_runs, fft, &mut buf, &mut scratch);
            }
            fft.process_with_scratch(data, &mut scratch);
        } else {
            fft.process_with_scratch(data, &mut scratch);
            for plane in data.chunks_exact_mut(n * n) {
                fft_columns(plane, n, n, y_runs, fft, &mut buf, &mut scratch);
            }
            fft_columns(data, n * n, n, z_runs, fft, &mut buf, &mut scratch);
        }
    }

    /// Inverse-transforms a batch of Hermitian spectra into real arrays.
    /// Spectra are packed two at a time into one complex transform.
    pub fn to_physical_batch(&self, spectra: &[&[Complex64]]) -> Vec<Vec<f64>> {
        self.to_physical_with(spectra.len(), |field, out| out.copy_from_slice(spectra[field]))
    }

    /// Inverse-transforms `count` real fields; `fill(field, out)` writes the
    /// spectrum of one field into `out`.
    pub fn to_physical_with<F>(&self, count: usize, fill: F) -> Vec<Vec<f64>>
    where
        F: FnMut(usize, &mut [Complex64]),
    {
        self.physical_with(count, fill, false)
    }

    /// Like [`to_physical_with`](Self::to_physical_with) for spectra that
    /// vanish outside the dealiasing mask, which is not checked.
    pub fn to_physical_masked_with<F>(&self, count: usize, fill: F) -> Vec<Vec<f64>>
    where
        F: FnMut(usize, &mut [Complex64]),
    {
        self.physical_with(count, fill, true)
    }

    fn physical_with<F>(&self, count: usize, mut fill: F, masked: bool) -> Vec<Vec<f64>>
    where
        F: FnMut(usize, &mut [Complex64]),
    {
        let len = self.len();
        let zero = Complex64::new(0.0, 0.0);
        let s = 1.0 / len as f64;
        let mut out = Vec::with_capacity(count);
        let mut work = vec![zero; len];
        let mut second = vec![zero; len];
        for first in (0..count).step_by(2) {
            fill(first, &mut work);
            let pair = first + 1 < count;
            if pair {
                fill(first + 1, &mut second);
                for (w, y) in work.iter_mut().zip(&second) {
                    *w = Complex64::new((w.re - y.im) * s, (w.im + y.re) * s);
                }
            } else {
                for w in work.iter_mut() {
                    *w *= s;
                }
            }
            if masked {
                self.inverse_from_masked(&mut work);
            } else {
                self.transform(&mut work, &self.inverse);
            }
            out.push(work.iter().map(|w| w.re).collect());
            if pair {
                out.push(work.iter().map(|w| w.im).collect());
            }
        }
        out
    }

    /// Forward-transforms a batch of real arrays, two per complex transform.
    pub fn to_spectral_batch(&self, fields: &[&[f64]]) -> Vec<Vec<Complex64>> {
        self.spectral_batch(fields, false)
    }

    /// Forward transforms with every mode outside the dealiasing mask set
    /// to zero.
    pub fn to_spectral_masked_batch(&self, fields: &[&[f64]]) -> Vec<Vec<Complex64>> {
        self.spectral_batch(fields, true)
    }

    fn spectral_batch(&self, fields: &[&[f64]], masked: bool) -> Vec<Vec<Complex64>> {
        let len = self.len();
        let zero = Complex64::new(0.0, 0.0);
        let keep = |idx: usize| !masked || self.retained[idx];
        let mut out = Vec::with_capacity(fields.len());
        let mut work = vec![zero; len];
        for pair in fields.chunks(2) {
            match pair {
                [a, b] => {
                    for ((w, &x), &y) in work.iter_mut().zip(a.iter()).zip(b.iter()) {
                        *w = Complex64::new(x, y);
                    }
                }
                [a] => {
                    for (w, &x) in work.iter_mut().zip(a.iter()) {
                        *w = Complex64::new(x, 0.0);
                    }
                }
                _ => unreachable!(),
            }
            if masked {
                self.forward_to_masked(&mut work);
            } else {
                self.transform(&mut work, &self.forward);
            }
            if pair.len() == 2 {
                let split = |idx: usize| (work[idx], work[self.conjugate[idx]].conj());
                // a = (w + conj w(-k)) / 2, b = (w - conj w(-k)) / (2i)
                out.push(
                    (0..len)
                        .map(|idx| {
                            if !keep(idx) {
                                return zero;
                            }
                            let (w, wc) = split(idx);
                            (w + wc) * 0.5
                        })
                        .collect(),
                );
                out.push(
                    (0..len)
                        .map(|idx| {
                            if !keep(idx) {
                                return zero;
                            }
                            let (w, wc) = split(idx);
                            let d = w - wc;
                            Complex64::new(d.im * 0.5, -d.re * 0.5)
                        })
                        .collect(),
                );
            } else {
                out.push(
                    work.iter()
                        .enumerate()
                        .map(|(idx, &w)| if keep(idx) { w } else { zero })
                        .collect(),
                );
            }
        }
        out
    }

    /// Grid quadrature `(2π/n)³ Σ f`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.cell_volume() * values.iter().sum::<f64>()
    }
}

const COLUMN_BLOCK: usize = 8;

/// Transforms the columns of a row-major `len × stride` block listed in
/// `runs` as `(start, width)`, gathering `COLUMN_BLOCK` adjacent columns at
/// a time.
fn fft_columns(
    data: &mut [Complex64],
    stride: usize,
    len: usize,
    runs: &[(usize, usize)],
    fft: &dyn Fft<f64>,
    buf: &mut [Complex64],
    scratch: &mut [Complex64],
) {
    for &(run_start, run_width) in runs {
        let mut start = run_start;
        let end = run_start + run_width;
        while start < end {
            let width = COLUMN_BLOCK.min(end - start);
            let block = &mut buf[..width * len];
            for r in 0..len {
                let row = &data[r * stride + start..r * stride + start + width];
                for (c, &v) in row.iter().enumerate() {
                    block[c * len + r] = v;
                }
            }
            fft.process_with_scratch(block, scratch);
            for r in 0..len {
                let row = &mut data[r * stride + start..r * stride + start + width];
                for (c, v) in row.iter_mut().enumerate() {
                    *v = block[c * len + r];
                }
            }
            start += width;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pruned_transforms_match_full_ones_on_masked_data() {
        let g = TorusGrid::new(16).unwrap();
        let len = g.len();
        let a: Vec<f64> = (0..len).map(|i| ((i * 37 % 101) as f64 / 50.0 - 1.0).sin()).collect();
        let b: Vec<f64> = (0..len).map(|i| ((i * 13 % 97) as f64 / 40.0).cos()).collect();
        let full = g.to_spectral_batch(&[&a, &b]);
        let pruned = g.to_spectral_masked_batch(&[&a, &b]);
        for (f, p) in full.iter().zip(&pruned) {
            for idx in 0..len {
                let expected = if g.is_retained(idx) { f[idx] } else { Complex64::new(0.0, 0.0) };
                assert!((expected - p[idx]).norm() < 1e-9, "mode {idx}");
            }
        }
        let spectra: Vec<&[Complex64]> = pruned.iter().map(|v| v.as_slice()).collect();
        let x = g.to_physical_batch(&spectra);
        let y = g.to_physical_masked_with(2, |f, out| out.copy_from_slice(spectra[f]));
        for (u, w) in x.iter().zip(&y) {
            for (p, q) in u.iter().zip(w) {
                assert!((p - q).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_odd_or_small_grids() {
        assert!(TorusGrid::new(7).is_err());
        assert!(TorusGrid::new(6).is_err());
        assert!(TorusGrid::new(9).is_err());
        assert!(TorusGrid::new(8).is_ok());
    }

    #[test]
    fn mask_respects_two_thirds_band() {
        for n in [8, 12, 16, 24, 32] {
            let g = TorusGrid::new(n).unwrap();
            assert!(3 * g.cutoff() < n);
            for idx in 0..g.len() {
                let k = g.mode(idx);
                if k.iter().any(|&kj| 3 * kj.abs() > n as i64) {
                    assert!(!g.is_retained(idx));
                }
                if g.is_nyquist(idx) {
                    assert!(!g.is_retained(idx));
                }
            }
        }
    }

    #[test]
    fn conjugate_and_index_roundtrip() {
        let g = TorusGrid::new(8).unwrap();
        for idx in 0..g.len() {
            let k = g.mode(idx);
            assert_eq!(g.index_of(k), Some(idx));
            let c = g.conjugate_index(idx);
            if !g.is_nyquist(idx) {
                let kc = g.mode(c);
                assert_eq!(kc, [-k[0], -k[1], -k[2]]);
            }
            assert_eq!(g.conjugate_index(c), idx);
        }
        assert_eq!(g.index_of([4, 0, 0]), Some(4));
        assert_eq!(g.index_of([-4, 0, 0]), None);
    }

    #[test]
    fn single_mode_transform() {
        let g = TorusGrid::new(8).unwrap();
        let vals: Vec<f64> = (0..g.len()).map(|i| g.point(i)[0].sin()).collect();
        let spec = g.to_spectral_batch(&[&vals]);
        let n3 = g.len() as f64;
        let i1 = g.index_of([1, 0, 0]).unwrap();
        let im1 = g.index_of([-1, 0, 0]).unwrap();
        // sin x = (e^{ix} - e^{-ix}) / 2i
        assert!((spec[0][i1] - Complex64::new(0.0, -0.5 * n3)).norm() < 1e-10);
        assert!((spec[0][im1] - Complex64::new(0.0, 0.5 * n3)).norm() < 1e-10);
        let back = g.to_physical_batch(&[&spec[0]]);
        for (a, b) in back[0].iter().zip(vals.iter()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn paired_transforms_match_single() {
        let g = TorusGrid::new(8).unwrap();
        let a: Vec<f64> = (0..g.len()).map(|i| ((i * 37 % 101) as f64).sin()).collect();
        let b: Vec<f64> = (0..g.len()).map(|i| ((i * 53 % 97) as f64).cos()).collect();
        let pair = g.to_spectral_batch(&[&a, &b]);
        let sa = g.to_spectral_batch(&[&a]);
        let sb = g.to_spectral_batch(&[&b]);
        for idx in 0..g.len() {
            assert!((pair[0][idx] - sa[0][idx]).norm() < 1e-10);
            assert!((pair[1][idx] - sb[0][idx]).norm() < 1e-10);
        }
        let back = g.to_physical_batch(&[&pair[0], &pair[1]]);
        for idx in 0..g.len() {
            assert!((back[0][idx] - a[idx]).abs() < 1e-12);
            assert!((back[1][idx] - b[idx]).abs() < 1e-12);
        }
    }
}
