//! Partial-regularity diagnostics on a recorded history: parabolic cylinder
//! integrals, the scale-invariant quantities `A, B, C, D` and `Θ = C + D²`,
//! ε-regularity classification and a Vitali covering estimate.
//!
//! All integrals are grid quadratures: balls use a sub-cell overlap weight,
//! time uses the trapezoid rule over stored snapshots only.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::bump::torus_delta;
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::TorusGrid;
use crate::solver::SimState;

/// Sub-samples per axis used to weigh cells cut by a ball boundary.
const SUBCELLS: usize = 8;

/// Pointwise densities of one snapshot.
#[derive(Clone, Debug)]
pub struct Frame {
    pub t: f64,
    pub v_abs: Vec<f64>,
    pub grad_d_abs: Vec<f64>,
    pub grad_v_sq: Vec<f64>,
    pub hess_d_sq: Vec<f64>,
    pub pi: Vec<f64>,
    pub z_abs: Vec<f64>,
    pub d_abs: Vec<f64>,
}

impl Frame {
    /// Builds the densities from spectral `v`, `d`, `z` (three components)
    /// and `π` (one component).
    pub fn new(
        grid: &TorusGrid,
        t: f64,
        v: &SpectralField,
        d: &SpectralField,
        z: &SpectralField,
        pi: &SpectralField,
    ) -> Result<Self> {
        for f in [v, d, z, pi] {
            f.check_grid(grid)?;
        }
        for f in [v, d, z] {
            f.check_components(3)?;
        }
        pi.check_components(1)?;
        let len = grid.len();
        let ad = grid.axis_derivative();
        let n = grid.n();
        let kvecs: Vec<[f64; 3]> = (0..len)
            .map(|idx| [ad[idx % n], ad[(idx / n) % n], ad[idx / (n * n)]])
            .collect();
        // ∇v (9), ∇d (9), ∂_j∂_k d_i for j ≤ k (18)
        const PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
        let (vc, dc) = (v.coeffs(), d.coeffs());
        let p = grid.to_physical_with(36, |field, out| {
            if field < 18 {
                let src = if field < 9 { vc } else { dc };
                let (i, j) = ((field % 9) / 3, field % 3);
                for ((o, c), k) in out.iter_mut().zip(&src[i * len..(i + 1) * len]).zip(&kvecs) {
                    *o = Complex64::new(-c.im * k[j], c.re * k[j]);
                }
            } else {
                let (i, (j, l)) = ((field - 18) / 6, PAIRS[(field - 18) % 6]);
                for ((o, c), k) in out.iter_mut().zip(&dc[i * len..(i + 1) * len]).zip(&kvecs) {
                    *o = -c * (k[j] * k[l]);
                }
            }
        });
        let vp = v.to_physical(grid);
        let dp = d.to_physical(grid);
        let zp = z.to_physical(grid);
        let pip = pi.to_physical(grid).remove(0);
        let norm = |f: &[Vec<f64>], idx: usize| f.iter().map(|c| c[idx] * c[idx]).sum::<f64>();
        let mut frame = Frame {
            t,
            v_abs: vec![0.0; len],
            grad_d_abs: vec![0.0; len],
            grad_v_sq: vec![0.0; len],
            hess_d_sq: vec![0.0; len],
            pi: pip,
            z_abs: vec![0.0; len],
            d_abs: vec![0.0; len],
        };
        for idx in 0..len {
            frame.v_abs[idx] = norm(&vp, idx).sqrt();
            frame.d_abs[idx] = norm(&dp, idx).sqrt();
            frame.z_abs[idx] = norm(&zp, idx).sqrt();
            frame.grad_v_sq[idx] = norm(&p[0..9], idx);
            frame.grad_d_abs[idx] = norm(&p[9..18], idx).sqrt();
            let mut h = 0.0;
            for i in 0..3 {
                for (slot, &(j, k)) in PAIRS.iter().enumerate() {
                    let x = p[18 + 6 * i + slot][idx];
                    h += if j == k { x * x } else { 2.0 * x * x };
                }
            }
            frame.hess_d_sq[idx] = h;
        }
        Ok(frame)
    }

    pub fn from_state(grid: &TorusGrid, state: &SimState, pi: &SpectralField) -> Result<Self> {
        Self::new(grid, state.t, &state.v, &state.d, &state.z, pi)
    }

    /// Zero fields at time `t`.
    pub fn zeros(grid: &TorusGrid, t: f64) -> Self {
        let z = vec![0.0; grid.len()];
        Frame {
            t,
            v_abs: z.clone(),
            grad_d_abs: z.clone(),
            grad_v_sq: z.clone(),
            hess_d_sq: z.clone(),
            pi: z.clone(),
            z_abs: z.clone(),
            d_abs: z,
        }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        let lens = [
            self.v_abs.len(),
            self.grad_d_abs.len(),
            self.grad_v_sq.len(),
            self.hess_d_sq.len(),
            self.pi.len(),
            self.z_abs.len(),
            self.d_abs.len(),
        ];
        if lens.iter().any(|&l| l != len) {
            return Err(Error::param("frame", format!("arrays must hold {len} samples")));
        }
        Ok(())
    }
}

/// Time-ordered snapshots on one grid.
#[derive(Clone, Debug)]
pub struct History {
    grid: TorusGrid,
    frames: Vec<Frame>,
}

impl History {
    pub fn new(grid: TorusGrid, frames: Vec<Frame>) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::InsufficientHistory { needed: 1, found: 0 });
        }
        for f in &frames {
            f.check_len(grid.len())?;
        }
        if frames.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(Error::param("frames", "snapshot times must increase strictly"));
        }
        Ok(Self { grid, frames })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    /// `[first, last]` snapshot times.
    pub fn window(&self) -> (f64, f64) {
        (self.frames[0].t, self.frames[self.frames.len() - 1].t)
    }

    fn nearest(&self, t: f64) -> usize {
        let mut best = 0;
        for (i, f) in self.frames.iter().enumerate() {
            if (f.t - t).abs() < (self.frames[best].t - t).abs() {
                best = i;
            }
        }
        best
    }

    /// Trapezoid weights of every snapshot over the whole window.
    fn window_weights(&self) -> Vec<f64> {
        trapezoid(&self.frames.iter().map(|f| f.t).collect::<Vec<_>>())
    }
}

fn trapezoid(times: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; times.len()];
    for i in 1..times.len() {
        let h = 0.5 * (times[i] - times[i - 1]);
        w[i - 1] += h;
        w[i] += h;
    }
    w
}

/// `Q_r(z₀) = B_r(x₀) × (t₀ - r², t₀]` with torus distance in space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParabolicCylinder {
    pub center: [f64; 3],
    pub t0: f64,
    pub r: f64,
}

impl ParabolicCylinder {
    /// Rejects `r ∉ (0, π)`: larger balls wrap around the torus.
    pub fn new(center: [f64; 3], t0: f64, r: f64) -> Result<Self> {
        if !(r > 0.0 && r < PI) {
            return Err(Error::param("r", format!("must lie in (0, π), got {r}")));
        }
        Ok(Self { center, t0, r })
    }

    pub fn start(&self) -> f64 {
        self.t0 - self.r * self.r
    }

    /// True when the two cylinders (half-open in time) share no point.
    pub fn is_disjoint(&self, other: &ParabolicCylinder) -> bool {
        if self.t0 <= other.start() || other.t0 <= self.start() {
            return true;
        }
        torus_distance(self.center, other.center) >= self.r + other.r
    }

    pub fn dilated(&self, factor: f64) -> ParabolicCylinder {
        ParabolicCylinder {
            r: self.r * factor,
            ..*self
        }
    }
}

pub fn torus_distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    (0..3)
        .map(|i| torus_delta(a[i] - b[i]).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Grid cells meeting the ball, with the fraction of each cell inside it.
pub fn ball_weights(grid: &TorusGrid, center: [f64; 3], r: f64) -> Vec<(usize, f64)> {
    let h = grid.spacing();
    let half_diag = 0.5 * 3f64.sqrt() * h;
    let mut out = Vec::new();
    let sub: Vec<f64> = (0..SUBCELLS)
        .map(|i| ((i as f64 + 0.5) / SUBCELLS as f64 - 0.5) * h)
        .collect();
    let total = (SUBCELLS * SUBCELLS * SUBCELLS) as f64;
    for idx in 0..grid.len() {
        let p = grid.point(idx);
        let d = [
            torus_delta(p[0] - center[0]),
            torus_delta(p[1] - center[1]),
            torus_delta(p[2] - center[2]),
        ];
        let dist = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        if dist >= r + half_diag {
            continue;
        }
        if dist + half_diag <= r {
            out.push((idx, 1.0));
            continue;
        }
        let mut inside = 0usize;
        for &a in &sub {
            for &b in &sub {
                for &c in &sub {
                    let q = (d[0] + a).powi(2) + (d[1] + b).powi(2) + (d[2] + c).powi(2);
                    if q < r * r {
                        inside += 1;
                    }
                }
            }
        }
        if inside > 0 {
            out.push((idx, inside as f64 / total));
        }
    }
    out
}

/// A cylinder resolved against the snapshot grid.
#[derive(Clone, Debug)]
pub struct SnappedCylinder {
    /// Cylinder with `t₀` and `r` moved onto snapshot times.
    pub cylinder: ParabolicCylinder,
    first: usize,
    last: usize,
    time_weights: Vec<f64>,
    ball: Vec<(usize, f64)>,
}

impl SnappedCylinder {
    fn frames<'a>(&self, history: &'a History) -> &'a [Frame] {
        &history.frames[self.first..=self.last]
    }

    /// `∫_{Q} f` for a pointwise density of a frame.
    fn integral(&self, history: &History, f: impl Fn(&Frame, usize) -> f64) -> f64 {
        let dv = history.grid.cell_volume();
        self.frames(history)
            .iter()
            .zip(&self.time_weights)
            .map(|(fr, &wt)| wt * dv * self.ball.iter().map(|&(i, w)| w * f(fr, i)).sum::<f64>())
            .sum()
    }

    fn sup(&self, history: &History, f: impl Fn(&Frame, usize) -> f64) -> f64 {
        self.frames(history)
            .iter()
            .flat_map(|fr| self.ball.iter().map(move |&(i, _)| (fr, i)))
            .map(|(fr, i)| f(fr, i))
            .fold(0.0, f64::max)
    }
}

/// Moves `t₀` and `t₀ - r²` to the nearest snapshots and rebuilds `r`.
pub fn snap(history: &History, cyl: &ParabolicCylinder) -> Result<SnappedCylinder> {
    let (start, end) = history.window();
    let slack = |i: usize| {
        let fr = &history.frames;
        let left = if i > 0 { fr[i].t - fr[i - 1].t } else { 0.0 };
        let right = if i + 1 < fr.len() { fr[i + 1].t - fr[i].t } else { 0.0 };
        0.5 * left.max(right)
    };
    let last = history.nearest(cyl.t0);
    let first = history.nearest(cyl.start());
    if cyl.start() < start - slack(0) || cyl.t0 > end + slack(history.frames.len() - 1) {
        return Err(Error::WindowViolation(format!(
            "cylinder ({}, {}] escapes the recorded window [{start}, {end}]",
            cyl.start(),
            cyl.t0
        )));
    }
    if last <= first {
        return Err(Error::InsufficientHistory { needed: 2, found: 1 });
    }
    let t0 = history.frames[last].t;
    let r = (t0 - history.frames[first].t).sqrt();
    let cylinder = ParabolicCylinder::new(cyl.center, t0, r)?;
    let times: Vec<f64> = history.frames[first..=last].iter().map(|f| f.t).collect();
    Ok(SnappedCylinder {
        cylinder,
        first,
        last,
        time_weights: trapezoid(&times),
        ball: ball_weights(&history.grid, cyl.center, r),
    })
}

/// The scale-invariant quantities of one cylinder.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Abcd {
    /// `sup_t r⁻¹ ∫_{B_r} (|v|² + |∇d|²)`
    pub a: f64,
    /// `r⁻¹ ∫_{Q_r} (|∇v|² + |∇²d|²)`
    pub b: f64,
    /// `r⁻² ∫_{Q_r} (|v|³ + |∇d|³)`
    pub c: f64,
    /// `r⁻² ∫_{Q_r} |π|^{3/2}`
    pub d: f64,
}

impl Abcd {
    pub fn theta(&self) -> f64 {
        self.c + self.d * self.d
    }
}

pub fn abcd_snapped(history: &History, cyl: &SnappedCylinder) -> Abcd {
    let r = cyl.cylinder.r;
    let dv = history.grid.cell_volume();
    let a = cyl
        .frames(history)
        .iter()
        .map(|fr| {
            dv * cyl
                .ball
                .iter()
                .map(|&(i, w)| w * (fr.v_abs[i].powi(2) + fr.grad_d_abs[i].powi(2)))
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
        / r;
    let b = cyl.integral(history, |fr, i| fr.grad_v_sq[i] + fr.hess_d_sq[i]) / r;
    let c = cyl.integral(history, |fr, i| fr.v_abs[i].powi(3) + fr.grad_d_abs[i].powi(3)) / (r * r);
    let d = cyl.integral(history, |fr, i| fr.pi[i].abs().powf(1.5)) / (r * r);
    Abcd { a, b, c, d }
}

/// `A, B, C, D` on the snapped cylinder.
pub fn abcd(history: &History, cyl: &ParabolicCylinder) -> Result<Abcd> {
    Ok(abcd_snapped(history, &snap(history, cyl)?))
}

/// `Θ = C + D²` together with its two parts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Theta {
    pub flux: f64,
    pub pressure: f64,
    pub total: f64,
}

pub fn theta(history: &History, cyl: &ParabolicCylinder) -> Result<Theta> {
    let q = abcd(history, cyl)?;
    Ok(Theta {
        flux: q.c,
        pressure: q.d * q.d,
        total: q.theta(),
    })
}

/// Heuristic thresholds; only their existence is guaranteed by theory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    pub eps0: f64,
    pub eps1: f64,
    pub m: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            eps0: 0.05,
            eps1: 0.1,
            m: 10.0,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eps0", self.eps0), ("eps1", self.eps1), ("M", self.m)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classification {
    RegularCertified,
    Unresolved,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::RegularCertified => "regular-certified",
            Classification::Unresolved => "unresolved",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointReport {
    pub cylinder: ParabolicCylinder,
    pub quantities: Abcd,
    pub sup_z: f64,
    pub sup_d: f64,
    pub classification: Classification,
}

/// Regular-certified iff `Θ ≤ ε₀³`, `sup|z| ≤ M` and `sup|d| ≤ M` on the
/// cylinder; anything else stays unresolved.
pub fn classify_point(history: &History, cyl: &ParabolicCylinder, thresholds: &Thresholds) -> Result<PointReport> {
    thresholds.validate()?;
    let snapped = snap(history, cyl)?;
    let quantities = abcd_snapped(history, &snapped);
    let sup_z = snapped.sup(history, |fr, i| fr.z_abs[i]);
    let sup_d = snapped.sup(history, |fr, i| fr.d_abs[i]);
    let ok = quantities.theta() <= thresholds.eps0.powi(3) && sup_z <= thresholds.m && sup_d <= thresholds.m;
    Ok(PointReport {
        cylinder: snapped.cylinder,
        quantities,
        sup_z,
        sup_d,
        classification: if ok {
            Classification::RegularCertified
        } else {
            Classification::Unresolved
        },
    })
}

/// Largest `r⁻¹ ∫_{Q_r} (|∇v|² + |∇²d|²)` over the given radii: a
/// finite-scale stand-in for the lim sup as `r → 0`.
pub fn limsup_density(history: &History, center: [f64; 3], t0: f64, radii: &[f64]) -> Result<f64> {
    if radii.is_empty() {
        return Err(Error::param("radii", "need at least one radius"));
    }
    let mut best: f64 = 0.0;
    for &r in radii {
        let cyl = ParabolicCylinder::new(center, t0, r)?;
        best = best.max(abcd(history, &cyl)?.b);
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpaceTimePoint {
    pub x: [f64; 3],
    pub t: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SelectedCylinder {
    pub cylinder: ParabolicCylinder,
    /// `∫_{Q_r} (|∇v|² + |∇²d|²)`
    pub integral: f64,
    pub density: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoverReport {
    pub selected: Vec<SelectedCylinder>,
    /// The selected cylinders dilated by 5.
    pub cover: Vec<ParabolicCylinder>,
    pub dropped: Vec<SpaceTimePoint>,
    pub sum_5r: f64,
    /// `∫_V (|∇v|² + |∇²d|²)` over the whole recorded window.
    pub window_integral: f64,
    /// `(5/ε₁²) ∫_V (|∇v|² + |∇²d|²)`
    pub bound: f64,
}

impl CoverReport {
    pub fn holds(&self) -> bool {
        self.sum_5r <= self.bound
    }
}

/// Greedy Vitali selection. Each candidate takes the largest radius whose
/// density reaches `ε₁²`; candidates are then visited by decreasing radius
/// and kept when disjoint from everything kept so far.
///
/// Panics if the covering inequality fails, which the construction rules
/// out.
pub fn hausdorff_cover(
    history: &History,
    candidates: &[SpaceTimePoint],
    radii: &[f64],
    eps1: f64,
) -> Result<CoverReport> {
    if !(eps1 > 0.0) || !eps1.is_finite() {
        return Err(Error::param("eps1", format!("must be positive, got {eps1}")));
    }
    let mut radii = radii.to_vec();
    radii.sort_by(|a, b| b.total_cmp(a));
    let threshold = eps1 * eps1;
    let mut qualified = Vec::new();
    let mut dropped = Vec::new();
    for p in candidates {
        let mut found = None;
        for &r in &radii {
            let Ok(cyl) = ParabolicCylinder::new(p.x, p.t, r) else {
                continue;
            };
            let Ok(s) = snap(history, &cyl) else {
                continue;
            };
            let rr = s.cylinder.r;
            let integral = s.integral(history, |fr, i| fr.grad_v_sq[i] + fr.hess_d_sq[i]);
            if integral / rr >= threshold {
                found = Some(SelectedCylinder {
                    cylinder: s.cylinder,
                    integral,
                    density: integral / rr,
                });
                break;
            }
        }
        match found {
            Some(c) => qualified.push(c),
            None => dropped.push(*p),
        }
    }
    if !dropped.is_empty() {
        log::warn!(
            "{} of {} candidates have no radius with density >= eps1^2 and were dropped",
            dropped.len(),
            candidates.len()
        );
    }
    qualified.sort_by(|a, b| b.cylinder.r.total_cmp(&a.cylinder.r));
    let mut selected: Vec<SelectedCylinder> = Vec::new();
    for c in qualified {
        if selected.iter().all(|s| s.cylinder.is_disjoint(&c.cylinder)) {
            selected.push(c);
        }
    }

    let dv = history.grid.cell_volume();
    let window_integral: f64 = history
        .frames
        .iter()
        .zip(history.window_weights())
        .map(|(fr, w)| w * dv * fr.grad_v_sq.iter().zip(&fr.hess_d_sq).map(|(a, b)| a + b).sum::<f64>())
        .sum();
    let sum_5r = selected.iter().fold(0.0, |acc, s| acc + 5.0 * s.cylinder.r);
    let report = CoverReport {
        cover: selected.iter().map(|s| s.cylinder.dilated(5.0)).collect(),
        selected,
        dropped,
        sum_5r,
        window_integral,
        bound: 5.0 / threshold * window_integral,
    };
    assert!(
        report.sum_5r <= report.bound * (1.0 + 1e-12),
        "covering inequality violated: {} > {}",
        report.sum_5r,
        report.bound
    );
    Ok(report)
}
