use proptest::prelude::*;
use sel3d_core::regularity::{
    abcd, hausdorff_cover, Frame, History, ParabolicCylinder, SpaceTimePoint,
};
use sel3d_core::{SpectralField, TorusGrid};

fn localized(center: [f64; 3], width: f64) -> impl Fn([f64; 3], &mut [f64]) {
    move |x, o| {
        let r2: f64 = (0..3)
            .map(|i| {
                let d = x[i] - center[i];
                (2.0 * (1.0 - d.cos())).max(0.0)
            })
            .sum();
        let g = (-r2 / (width * width)).exp();
        o[0] = g;
        o[1] = 0.5 * g;
        o[2] = -0.25 * g;
    }
}

fn history(grid: &TorusGrid, times: &[f64], scale: f64, hotspots: &[[f64; 3]]) -> History {
    let frames = times
        .iter()
        .map(|&t| {
            let field = |s: f64| {
                SpectralField::from_fn(grid, 3, |x, o| {
                    o.iter_mut().for_each(|c| *c = 0.0);
                    let mut tmp = [0.0; 3];
                    for h in hotspots {
                        localized(*h, 0.5)(x, &mut tmp);
                        for c in 0..3 {
                            o[c] += s * tmp[c] * (1.0 + t);
                        }
                    }
                })
            };
            let v = field(scale);
            let d = field(scale);
            let z = SpectralField::zeros(grid, 3);
            let pi = SpectralField::from_fn(grid, 1, |x, o| o[0] = scale * scale * (x[0] + x[1]).cos());
            Frame::new(grid, t, &v, &d, &z, &pi).unwrap()
        })
        .collect();
    History::new(grid.clone(), frames).unwrap()
}

#[test]
fn quantities_are_homogeneous() {
    let g = TorusGrid::new(16).unwrap();
    let times = [0.0, 0.25, 0.5, 0.75, 1.0];
    let base = history(&g, &times, 1.0, &[[3.0, 3.0, 3.0]]);
    let s = 1.7;
    let scaled = history(&g, &times, s, &[[3.0, 3.0, 3.0]]);
    let cyl = ParabolicCylinder::new([3.2, 2.9, 3.0], 1.0, 1.0).unwrap();
    let a = abcd(&base, &cyl).unwrap();
    let b = abcd(&scaled, &cyl).unwrap();
    assert!((b.a / a.a - s * s).abs() < 1e-10);
    assert!((b.b / a.b - s * s).abs() < 1e-10);
    assert!((b.c / a.c - s.powi(3)).abs() < 1e-10);
    assert!((b.d / a.d - s.powi(3)).abs() < 1e-10);
}

#[test]
fn separated_hotspots_are_both_selected() {
    let g = TorusGrid::new(16).unwrap();
    let times = [0.0, 0.25, 0.5, 0.75, 1.0];
    let spots = [[1.5, 1.5, 1.5], [4.5, 4.5, 4.5]];
    let h = history(&g, &times, 1.0, &spots);
    let candidates: Vec<SpaceTimePoint> = spots.iter().map(|&x| SpaceTimePoint { x, t: 1.0 }).collect();
    let rep = hausdorff_cover(&h, &candidates, &[0.5, 1.0], 0.1).unwrap();
    assert_eq!(rep.selected.len(), 2);
    assert!(rep.selected[0].cylinder.is_disjoint(&rep.selected[1].cylinder));
    assert!(rep.holds());
}

#[test]
fn single_hotspot_gives_single_cylinder() {
    let g = TorusGrid::new(16).unwrap();
    let times = [0.0, 0.25, 0.5, 0.75, 1.0];
    let h = history(&g, &times, 1.0, &[[3.0, 3.0, 3.0]]);
    let rep = hausdorff_cover(&h, &[SpaceTimePoint { x: [3.0; 3], t: 1.0 }], &[1.0], 0.1).unwrap();
    assert_eq!(rep.selected.len(), 1);
    assert!((rep.sum_5r - 5.0 * rep.selected[0].cylinder.r).abs() < 1e-15);
    assert!(rep.holds());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn cover_is_disjoint_and_bounded(
        spots in prop::collection::vec((0.0f64..6.28, 0.0f64..6.28, 0.0f64..6.28), 1..4),
        queries in prop::collection::vec((0.0f64..6.28, 0.0f64..6.28, 0.0f64..6.28, 0.5f64..1.0), 1..12),
        eps1 in 0.01f64..0.5,
    ) {
        let g = TorusGrid::new(16).unwrap();
        let times = [0.0, 0.25, 0.5, 0.75, 1.0];
        let centers: Vec<[f64; 3]> = spots.iter().map(|&(a, b, c)| [a, b, c]).collect();
        let h = history(&g, &times, 1.0, &centers);
        let candidates: Vec<SpaceTimePoint> = queries
            .iter()
            .map(|&(a, b, c, t)| SpaceTimePoint { x: [a, b, c], t })
            .collect();
        let rep = hausdorff_cover(&h, &candidates, &[0.25, 0.5, 0.7], eps1).unwrap();
        for (i, a) in rep.selected.iter().enumerate() {
            for b in &rep.selected[i + 1..] {
                prop_assert!(a.cylinder.is_disjoint(&b.cylinder));
            }
            prop_assert!(a.density >= eps1 * eps1);
        }
        prop_assert!(rep.holds());
        prop_assert_eq!(rep.selected.len() + rep.dropped.len() <= candidates.len(), true);
    }
}
