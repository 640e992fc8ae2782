//! Compactly supported space-time test functions
//! `φ(x, t) = b(|x - x₀|/ρ) b((t - t₀)/τ)` with `b(s) = exp(1 - 1/(1 - s²))`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::TorusGrid;

/// `b`, `b'` and `b''` at `s`; all vanish for `|s| ≥ 1`.
pub fn profile(s: f64) -> (f64, f64, f64) {
    let q = 1.0 - s * s;
    if q <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let b = (1.0 - 1.0 / q).exp();
    let g1 = -2.0 * s / (q * q);
    let g2 = -2.0 / (q * q) - 8.0 * s * s / (q * q * q);
    (b, b * g1, b * (g2 + g1 * g1))
}

/// Minimum-image displacement on the torus.
pub fn torus_delta(x: f64) -> f64 {
    let l = 2.0 * PI;
    x - l * (x / l).round()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BumpTestFunction {
    pub center: [f64; 3],
    pub t0: f64,
    pub rho: f64,
    pub tau: f64,
}

/// `φ` and its derivatives at one space-time point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BumpValue {
    pub phi: f64,
    pub dt: f64,
    pub grad: [f64; 3],
    pub hessian: [[f64; 3]; 3],
}

/// Spatial factor and its derivatives, precomputed on a grid.
#[derive(Clone, Debug)]
pub struct SpatialBump {
    pub value: Vec<f64>,
    pub grad: [Vec<f64>; 3],
    /// Upper triangle `xx, xy, xz, yy, yz, zz`.
    pub hessian: [Vec<f64>; 6],
}

impl BumpTestFunction {
    pub fn new(center: [f64; 3], t0: f64, rho: f64, tau: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < PI) {
            return Err(Error::param("rho", format!("must lie in (0, π), got {rho}")));
        }
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::param("tau", format!("must be positive, got {tau}")));
        }
        Ok(Self { center, t0, rho, tau })
    }

    /// Errors unless the time support sits strictly inside `(start, end)`.
    pub fn check_window(&self, start: f64, end: f64) -> Result<()> {
        if self.t0 - self.tau < start || self.t0 + self.tau > end {
            return Err(Error::WindowViolation(format!(
                "time support [{}, {}] escapes the recorded window [{start}, {end}]",
                self.t0 - self.tau,
                self.t0 + self.tau
            )));
        }
        Ok(())
    }

    /// Time factor and its derivative.
    pub fn time_factor(&self, t: f64) -> (f64, f64) {
        let (b, b1, _) = profile((t - self.t0) / self.tau);
        (b, b1 / self.tau)
    }

    /// Spatial factor, gradient and Hessian at `x`.
    pub fn spatial(&self, x: [f64; 3]) -> (f64, [f64; 3], [[f64; 3]; 3]) {
        let d = [
            torus_delta(x[0] - self.center[0]),
            torus_delta(x[1] - self.center[1]),
            torus_delta(x[2] - self.center[2]),
        ];
        let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        let s = r / self.rho;
        let (b, b1, b2) = profile(s);
        let mut grad = [0.0; 3];
        let mut hess = [[0.0; 3]; 3];
        if b == 0.0 {
            return (0.0, grad, hess);
        }
        let radial2 = b2 / (self.rho * self.rho);
        if r < 1e-12 {
            for (i, row) in hess.iter_mut().enumerate() {
                row[i] = radial2;
            }
            return (b, grad, hess);
        }
        let e = [d[0] / r, d[1] / r, d[2] / r];
        let tangential = b1 / (self.rho * r);
        for i in 0..3 {
            grad[i] = b1 / self.rho * e[i];
            for j in 0..3 {
                let delta = if i == j { 1.0 } else { 0.0 };
                hess[i][j] = radial2 * e[i] * e[j] + tangential * (delta - e[i] * e[j]);
            }
        }
        (b, grad, hess)
    }

    pub fn eval(&self, x: [f64; 3], t: f64) -> BumpValue {
        let (bt, dbt) = self.time_factor(t);
        let (bx, g, h) = self.spatial(x);
        let mut out = BumpValue {
            phi: bx * bt,
            dt: bx * dbt,
            ..Default::default()
        };
        for i in 0..3 {
            out.grad[i] = g[i] * bt;
            for j in 0..3 {
                out.hessian[i][j] = h[i][j] * bt;
            }
        }
        out
    }

    pub fn spatial_on_grid(&self, grid: &TorusGrid) -> SpatialBump {
        let len = grid.len();
        let mut value = vec![0.0; len];
        let mut grad = [vec![0.0; len], vec![0.0; len], vec![0.0; len]];
        let mut hessian: [Vec<f64>; 6] = Default::default();
        for h in hessian.iter_mut() {
            *h = vec![0.0; len];
        }
        const PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
        for idx in 0..len {
            let (b, g, h) = self.spatial(grid.point(idx));
            value[idx] = b;
            for c in 0..3 {
                grad[c][idx] = g[c];
            }
            for (slot, &(i, j)) in PAIRS.iter().enumerate() {
                hessian[slot][idx] = h[i][j];
            }
        }
        SpatialBump { value, grad, hessian }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn profile_at_origin() {
        let (b, b1, b2) = profile(0.0);
        assert_eq!(b, 1.0);
        assert_eq!(b1, 0.0);
        assert_eq!(b2, -2.0);
        assert_eq!(profile(1.0), (0.0, 0.0, 0.0));
    }

    #[test]
    fn rejects_bad_radii_and_windows() {
        assert!(BumpTestFunction::new([0.0; 3], 0.5, 3.2, 0.1).is_err());
        assert!(BumpTestFunction::new([0.0; 3], 0.5, 1.0, 0.0).is_err());
        let b = BumpTestFunction::new([0.0; 3], 0.5, 1.0, 0.2).unwrap();
        assert!(b.check_window(0.0, 1.0).is_ok());
        assert!(matches!(b.check_window(0.4, 1.0), Err(Error::WindowViolation(_))));
    }

    fn fd_errors(b: &BumpTestFunction, x: [f64; 3], t: f64, h: f64) -> f64 {
        let v = b.eval(x, t);
        let mut worst: f64 = 0.0;
        let dt = (b.eval(x, t + h).phi - b.eval(x, t - h).phi) / (2.0 * h);
        worst = worst.max((dt - v.dt).abs());
        for i in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let g = (b.eval(xp, t).phi - b.eval(xm, t).phi) / (2.0 * h);
            worst = worst.max((g - v.grad[i]).abs());
            let gp = b.eval(xp, t).grad;
            let gm = b.eval(xm, t).grad;
            for j in 0..3 {
                let hij = (gp[j] - gm[j]) / (2.0 * h);
                worst = worst.max((hij - v.hessian[i][j]).abs());
            }
        }
        worst
    }

    #[test]
    fn derivatives_match_central_differences() {
        let b = BumpTestFunction::new([1.0, 2.0, 3.0], 0.3, 1.2, 0.1).unwrap();
        for (x, t) in [([1.4, 2.3, 2.8], 0.33), ([0.5, 1.9, 3.4], 0.27), ([1.0, 2.7, 3.1], 0.31)] {
            let e1 = fd_errors(&b, x, t, 1e-3);
            let e2 = fd_errors(&b, x, t, 5e-4);
            assert!(e1 < 1e-2, "coarse error {e1}");
            assert!(e2 < e1 / 3.0, "no second-order decay: {e1} -> {e2}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn nonnegative_and_supported(x in 0.0f64..6.28, y in 0.0f64..6.28, z in 0.0f64..6.28, t in -1.0f64..2.0) {
            let b = BumpTestFunction::new([0.5, 6.0, 3.0], 0.5, 1.5, 0.25).unwrap();
            let v = b.eval([x, y, z], t);
            prop_assert!(v.phi >= 0.0);
            let r = [x - 0.5, y - 6.0, z - 3.0].iter().map(|c| torus_delta(*c).powi(2)).sum::<f64>().sqrt();
            if r >= 1.5 || (t - 0.5).abs() >= 0.25 {
                prop_assert_eq!(v.phi, 0.0);
            }
        }
    }
}
