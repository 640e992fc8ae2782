//! Mollification `Φσ` realized as a precomputed Fourier multiplier.
//!
//! Both symbols are DFTs of nonnegative grid kernels of unit discrete mass,
//! so the discrete convolution contracts every grid `Lᵖ` norm.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::TorusGrid;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MollifierKind {
    /// Compactly supported standard bump, support radius `σ`.
    Bump,
    /// Periodized Gaussian with Fourier symbol `≈ e^{-σ²|k|²/2}`.
    Gaussian,
}

impl fmt::Display for MollifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MollifierKind::Bump => "bump",
            MollifierKind::Gaussian => "gaussian",
        })
    }
}

impl FromStr for MollifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bump" | "bump-kernel" => Ok(MollifierKind::Bump),
            "gaussian" | "gaussian-multiplier" => Ok(MollifierKind::Gaussian),
            other => Err(Error::param(
                "kind",
                format!("expected `bump` or `gaussian`, got `{other}`"),
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MollifierSpec {
    pub sigma: f64,
    pub kind: MollifierKind,
}

impl MollifierSpec {
    pub fn new(sigma: f64, kind: MollifierKind) -> Result<Self> {
        let spec = Self { sigma, kind };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::param(
                "sigma",
                format!("must be positive and finite, got {}", self.sigma),
            ));
        }
        if self.kind == MollifierKind::Bump && self.sigma > PI {
            return Err(Error::param(
                "sigma",
                format!(
                    "bump kernel of radius {} does not fit in the half period {PI}",
                    self.sigma
                ),
            ));
        }
        Ok(())
    }
}

/// The multiplier `m(k)` of a [`MollifierSpec`] on a given grid.
#[derive(Clone, Debug)]
pub struct Mollifier {
    spec: MollifierSpec,
    n: usize,
    multiplier: Vec<f64>,
}

/// Standard bump `exp(1 - 1/(1 - s²))` on `|s| < 1`.
pub fn bump(s: f64) -> f64 {
    let s2 = s * s;
    if s2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s2)).exp()
    }
}

fn min_image(x: f64) -> f64 {
    let l = 2.0 * PI;
    x - l * (x / l).round()
}

impl Mollifier {
    pub fn new(grid: &TorusGrid, spec: MollifierSpec) -> Result<Self> {
        spec.validate()?;
        let multiplier = match spec.kind {
            MollifierKind::Gaussian => gaussian_multiplier(grid, spec.sigma),
            MollifierKind::Bump => bump_multiplier(grid, spec.sigma),
        };
        Ok(Self {
            spec,
            n: grid.n(),
            multiplier,
        })
    }

    /// The identity mollifier (`m ≡ 1`).
    pub fn identity(grid: &TorusGrid) -> Self {
        Self {
            spec: MollifierSpec {
                sigma: f64::MIN_POSITIVE,
                kind: MollifierKind::Gaussian,
            },
            n: grid.n(),
            multiplier: vec![1.0; grid.len()],
        }
    }

    pub fn spec(&self) -> MollifierSpec {
        self.spec
    }

    pub fn multiplier(&self) -> &[f64] {
        &self.multiplier
    }

    pub fn apply(&self, f: &SpectralField) -> Result<SpectralField> {
        if f.n() != self.n {
            return Err(Error::GridMismatch {
                expected: self.n,
                found: f.n(),
            });
        }
        let mut out = f.clone();
        out.apply_multiplier(&self.multiplier);
        Ok(out)
    }
}

/// Convenience wrapper building the multiplier and applying it once.
pub fn mollify(grid: &TorusGrid, f: &SpectralField, spec: MollifierSpec) -> Result<SpectralField> {
    f.check_grid(grid)?;
    Mollifier::new(grid, spec)?.apply(f)
}

/// Per axis the symbol is the theta sum `Σ_m e^{-σ²(k+mn)²/2}`, which by
/// Poisson summation is the DFT of the sampled periodized Gaussian.
fn gaussian_multiplier(grid: &TorusGrid, sigma: f64) -> Vec<f64> {
    let n = grid.n();
    let nf = n as f64;
    let reach = (9.0 / (sigma * nf)).ceil() as i64 + 1;
    let theta = |k: f64| -> f64 {
        (-reach..=reach)
            .map(|m| {
                let q = k + m as f64 * nf;
                (-0.5 * sigma * sigma * q * q).exp()
            })
            .sum()
    };
    let norm = theta(0.0);
    let half = n as i64 / 2;
    let axis: Vec<f64> = (0..n as i64)
        .map(|i| {
            let k = if i <= half { i } else { i - n as i64 };
            theta(k as f64) / norm
        })
        .collect();
    let mut out = Vec::with_capacity(grid.len());
    for iz in 0..n {
        for iy in 0..n {
            for ix in 0..n {
                out.push(axis[ix] * axis[iy] * axis[iz]);
            }
        }
    }
    out
}

/// The discrete kernel is the self-convolution of a sampled bump of radius
/// `σ/2`, so its symbol is a square and never negative.
fn bump_multiplier(grid: &TorusGrid, sigma: f64) -> Vec<f64> {
    let half = 0.5 * sigma;
    let mut kernel: Vec<Complex64> = (0..grid.len())
        .map(|idx| {
            let x = grid.point(idx);
            let r2: f64 = x.iter().map(|&c| min_image(c).powi(2)).sum();
            Complex64::new(bump(r2.sqrt() / half), 0.0)
        })
        .collect();
    let mass: f64 = kernel.iter().map(|c| c.re).sum();
    for c in kernel.iter_mut() {
        *c /= mass;
    }
    grid.forward(&mut kernel);
    kernel.iter().map(|c| c.re * c.re).collect()
}
