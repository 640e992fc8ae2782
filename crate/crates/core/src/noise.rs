//! Q-Wiener noise with values in `D(A^δ)`, expanded on divergence-free
//! Fourier modes.
//!
//! Each wavevector pair `±k` with `1 ≤ |k|_∞ ≤ kmax` carries two
//! polarizations orthogonal to `k`, and for each polarization a cosine and
//! a sine coordinate. These four real coordinates per pair form an
//! L²-orthonormal frame: `√(2/|T³|) p cos(k·x)` and `√(2/|T³|) p sin(k·x)`.
//! Random numbers are keyed by `(seed, stream, pair)` so any coordinate can
//! be regenerated independently of evaluation order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::TorusGrid;

/// Random words reserved per wavevector pair inside one stream.
const WORDS_PER_PAIR: u128 = 256;

/// One wavevector pair `±k` of the noise expansion.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseMode {
    /// Canonical representative of the pair.
    pub k: [i64; 3],
    /// Two unit polarizations, orthogonal to `k` and to each other.
    pub polarizations: [[f64; 3]; 2],
    /// Stokes eigenvalue `λ = |k|²`.
    pub lambda: f64,
    /// Covariance eigenvalue `γ = λ^{-s}`.
    pub gamma: f64,
}

impl NoiseMode {
    /// Standard deviation of the L² coordinate of `W` per unit time,
    /// `(γ λ^{-2δ})^{1/2}`.
    pub fn amplitude(&self, delta: f64) -> f64 {
        (self.gamma * self.lambda.powf(-2.0 * delta)).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseModel {
    delta: f64,
    decay_s: f64,
    kmax: usize,
    seed: u64,
    modes: Vec<NoiseMode>,
}

fn is_canonical(k: [i64; 3]) -> bool {
    k[0] > 0 || (k[0] == 0 && (k[1] > 0 || (k[1] == 0 && k[2] > 0)))
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn normalize(a: [f64; 3]) -> [f64; 3] {
    let n = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

fn polarizations(k: [i64; 3]) -> [[f64; 3]; 2] {
    let kf = [k[0] as f64, k[1] as f64, k[2] as f64];
    let mut axis = 0;
    for j in 1..3 {
        if k[j].abs() < k[axis].abs() {
            axis = j;
        }
    }
    let mut a = [0.0; 3];
    a[axis] = 1.0;
    let e1 = normalize(cross(kf, a));
    let e2 = normalize(cross(normalize(kf), e1));
    [e1, e2]
}

impl NoiseModel {
    /// Enumerates every pair with `1 ≤ |k|_∞ ≤ kmax`.
    pub fn new(delta: f64, decay_s: f64, kmax: usize, seed: u64) -> Result<Self> {
        if !delta.is_finite() || delta < 0.0 {
            return Err(Error::param("delta", format!("must be finite and >= 0, got {delta}")));
        }
        if !decay_s.is_finite() || decay_s < 0.0 {
            return Err(Error::param("decay_s", format!("must be finite and >= 0, got {decay_s}")));
        }
        let km = kmax as i64;
        let mut modes = Vec::new();
        for kx in 0..=km {
            for ky in -km..=km {
                for kz in -km..=km {
                    let k = [kx, ky, kz];
                    if !is_canonical(k) {
                        continue;
                    }
                    let lambda = (kx * kx + ky * ky + kz * kz) as f64;
                    modes.push(NoiseMode {
                        k,
                        polarizations: polarizations(k),
                        lambda,
                        gamma: lambda.powf(-decay_s),
                    });
                }
            }
        }
        Ok(Self {
            delta,
            decay_s,
            kmax,
            seed,
            modes,
        })
    }

    /// A model supported on the single pair `±k` with prescribed `γ`.
    pub fn single_wavevector(k: [i64; 3], gamma: f64, delta: f64, seed: u64) -> Result<Self> {
        let k = if is_canonical(k) { k } else { [-k[0], -k[1], -k[2]] };
        if k == [0, 0, 0] {
            return Err(Error::param("k", "the zero mode carries no noise"));
        }
        if !(gamma >= 0.0) {
            return Err(Error::param("gamma", format!("must be >= 0, got {gamma}")));
        }
        let kmax = k.iter().map(|c| c.unsigned_abs() as usize).max().unwrap_or(0);
        let lambda = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
        Ok(Self {
            delta,
            decay_s: 0.0,
            kmax,
            seed,
            modes: vec![NoiseMode {
                k,
                polarizations: polarizations(k),
                lambda,
                gamma,
            }],
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn decay_s(&self) -> f64 {
        self.decay_s
    }

    pub fn kmax(&self) -> usize {
        self.kmax
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn modes(&self) -> &[NoiseMode] {
        &self.modes
    }

    /// Number of real coordinates (two per wavevector and polarization).
    pub fn coordinate_count(&self) -> usize {
        4 * self.modes.len()
    }

    /// Fails unless every noise mode survives the grid's dealiasing mask.
    pub fn check_grid(&self, grid: &TorusGrid) -> Result<()> {
        if self.kmax > grid.cutoff() {
            return Err(Error::param(
                "kmax",
                format!(
                    "{} exceeds the dealiasing cutoff {} of an n = {} grid",
                    self.kmax,
                    grid.cutoff(),
                    grid.n()
                ),
            ));
        }
        Ok(())
    }

    /// Writes `4 · modes` standard normals keyed by `(seed, stream)`.
    pub fn standard_normals(&self, stream: u64, out: &mut [f64]) {
        assert_eq!(out.len(), self.coordinate_count());
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        for (p, chunk) in out.chunks_mut(4).enumerate() {
            rng.set_word_pos(p as u128 * WORDS_PER_PAIR);
            for x in chunk.iter_mut() {
                *x = rng.sample(StandardNormal);
            }
        }
    }

    /// L² coordinates of a Wiener increment over `dt`.
    pub fn increment_coordinates(&self, dt: f64, stream: u64) -> Result<Vec<f64>> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::param("dt", format!("must be positive, got {dt}")));
        }
        let mut xi = vec![0.0; self.coordinate_count()];
        self.standard_normals(stream, &mut xi);
        for (m, chunk) in self.modes.iter().zip(xi.chunks_mut(4)) {
            let s = dt.sqrt() * m.amplitude(self.delta);
            chunk.iter_mut().for_each(|x| *x *= s);
        }
        Ok(xi)
    }

    /// Builds the spectral field whose L² frame coordinates are `coords`.
    /// Coordinates are ordered `[cos p₁, cos p₂, sin p₁, sin p₂]` per pair.
    pub fn field_from_coordinates(&self, grid: &TorusGrid, coords: &[f64]) -> Result<SpectralField> {
        self.check_grid(grid)?;
        if coords.len() != self.coordinate_count() {
            return Err(Error::param(
                "coords",
                format!("expected {} coordinates, got {}", self.coordinate_count(), coords.len()),
            ));
        }
        let mut out = SpectralField::zeros(grid, 3);
        let scale = grid.len() as f64 * (2.0 / grid.volume()).sqrt() * 0.5;
        let len = grid.len();
        let buf = out.coeffs_mut();
        for (m, c) in self.modes.iter().zip(coords.chunks(4)) {
            let ip = grid.index_of(m.k).expect("mode inside grid");
            let im = grid.conjugate_index(ip);
            for comp in 0..3 {
                let re = c[0] * m.polarizations[0][comp] + c[1] * m.polarizations[1][comp];
                let si = c[2] * m.polarizations[0][comp] + c[3] * m.polarizations[1][comp];
                let v = Complex64::new(re, -si) * scale;
                buf[comp * len + ip] = v;
                buf[comp * len + im] = v.conj();
            }
        }
        Ok(out)
    }

    /// One Wiener increment `W(t + dt) - W(t)` as a spectral field,
    /// deterministic in `(seed, stream)`.
    pub fn sample_increment(&self, grid: &TorusGrid, dt: f64, stream: u64) -> Result<SpectralField> {
        self.check_grid(grid)?;
        let xi = self.increment_coordinates(dt, stream)?;
        self.field_from_coordinates(grid, &xi)
    }

    /// `‖w‖²_{D(A^δ)}` of a field given by its frame coordinates.
    pub fn domain_norm_sq(&self, coords: &[f64]) -> f64 {
        self.weighted_norm_sq(coords, self.delta)
    }

    /// `Σ λ^{2α} ξ²`, the squared `D(A^α)` norm in frame coordinates.
    pub fn weighted_norm_sq(&self, coords: &[f64], alpha: f64) -> f64 {
        self.modes
            .iter()
            .zip(coords.chunks(4))
            .map(|(m, c)| m.lambda.powf(2.0 * alpha) * c.iter().map(|x| x * x).sum::<f64>())
            .sum()
    }

    pub fn report(&self) -> NoiseReport {
        let table: Vec<ModeNormRow> = self
            .modes
            .iter()
            .map(|m| ModeNormRow {
                k: m.k,
                lambda: m.lambda,
                gamma: m.gamma,
                l2_amplitude: m.lambda.powf(-self.delta),
                increment_variance_per_time: m.amplitude(self.delta).powi(2),
            })
            .collect();
        NoiseReport {
            trace: 4.0 * self.modes.iter().map(|m| m.gamma).sum::<f64>(),
            wavevector_count: 2 * self.modes.len(),
            mode_count: self.coordinate_count(),
            table,
        }
    }
}

/// Per-pair normalization: the `D(A^δ)`-orthonormal basis vector has L²
/// amplitude `λ^{-δ}` on its mode.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeNormRow {
    pub k: [i64; 3],
    pub lambda: f64,
    pub gamma: f64,
    pub l2_amplitude: f64,
    pub increment_variance_per_time: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseReport {
    /// `Σ γ_i` over all real modes.
    pub trace: f64,
    /// Number of wavevectors `k` (both signs counted).
    pub wavevector_count: usize,
    /// Number of real modes, two polarizations per wavevector.
    pub mode_count: usize,
    pub table: Vec<ModeNormRow>,
}

/// Log-log fit of `E‖W(t+h) - W(t)‖_{D(A^δ)}` against `h`.
#[derive(Clone, Debug, PartialEq)]
pub struct HolderEstimate {
    pub slope: f64,
    /// `(h, mean norm)` per lag.
    pub points: Vec<(f64, f64)>,
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Monte-Carlo Hölder exponent of the noise paths.
///
/// Every path is built from increments over the smallest lag; each lag
/// must be a positive integer multiple of it, and the horizon a multiple of
/// the largest lag. Paths use streams `(path << 32) | step`.
pub fn estimate_holder_exponent(
    model: &NoiseModel,
    horizon: f64,
    lags: &[f64],
    paths: usize,
) -> Result<HolderEstimate> {
    if paths < 100 {
        return Err(Error::param("paths", format!("need at least 100, got {paths}")));
    }
    if lags.len() < 4 {
        return Err(Error::param("lags", format!("need at least 4, got {}", lags.len())));
    }
    let h0 = lags.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(h0 > 0.0) {
        return Err(Error::param("lags", "must be positive"));
    }
    let mut steps_per_lag = Vec::with_capacity(lags.len());
    for &h in lags {
        let r = h / h0;
        if (r - r.round()).abs() > 1e-9 {
            return Err(Error::param("lags", format!("{h} is not a multiple of {h0}")));
        }
        steps_per_lag.push(r.round() as usize);
    }
    let total = (horizon / h0).round() as usize;
    let largest = *steps_per_lag.iter().max().unwrap();
    if total < largest || (horizon / h0 - total as f64).abs() > 1e-9 {
        return Err(Error::param(
            "horizon",
            format!("must be a multiple of the smallest lag and cover the largest, got {horizon}"),
        ));
    }

    let dim = model.coordinate_count();
    let mut sums = vec![0.0; lags.len()];
    let mut counts = vec![0usize; lags.len()];
    let mut path = vec![0.0; dim * (total + 1)];
    for p in 0..paths {
        for step in 0..total {
            let inc = model.increment_coordinates(h0, ((p as u64) << 32) | step as u64)?;
            let (prev, next) = path.split_at_mut((step + 1) * dim);
            let prev = &prev[step * dim..];
            for ((w, a), b) in next[..dim].iter_mut().zip(prev).zip(&inc) {
                *w = a + b;
            }
        }
        for (li, &m) in steps_per_lag.iter().enumerate() {
            let mut start = 0;
            while start + m <= total {
                let a = &path[start * dim..(start + 1) * dim];
                let b = &path[(start + m) * dim..(start + m + 1) * dim];
                let diff: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
                sums[li] += model.domain_norm_sq(&diff).sqrt();
                counts[li] += 1;
                start += m;
            }
        }
    }
    let points: Vec<(f64, f64)> = lags
        .iter()
        .zip(sums.iter().zip(&counts))
        .map(|(&h, (&s, &c))| (h, s / c as f64))
        .collect();
    if points.iter().any(|p| !(p.1 > 0.0)) {
        return Err(Error::Degenerate(
            "noise increments vanish, slope undefined".into(),
        ));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|p| (p.0.ln(), p.1.ln())).collect();
    Ok(HolderEstimate {
        slope: fit_slope(&logs),
        points,
    })
}
