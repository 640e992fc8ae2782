use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::Command;

use sel3d::config::RunConfig;
use sel3d::diagnose::diagnose;
use sel3d::scan::{scan, write_reports, ScanOptions};
use sel3d::simulate::simulate;
use sel3d::snapshot::{list_snapshots, snapshot_name, NamedField, Snapshot};
use sel3d::stats::noise_stats;
use sel3d::CliError;

fn config(text: &str) -> RunConfig {
    RunConfig::from_toml_str(text).unwrap()
}

fn rejection(text: &str) -> String {
    RunConfig::from_toml_str(text).unwrap_err().to_string()
}

#[test]
fn config_rejections_name_the_key() {
    assert_eq!(rejection("[grid]\nsize = 8"), "invalid config: `grid.size` is not a recognized key");
    assert_eq!(rejection("[grid]\nn = 9"), "invalid config: `grid.n` must be an even integer >= 8, got 9");
    assert_eq!(rejection("[time]\ndt = 0"), "invalid config: `time.dt` must be positive, got 0");
    assert_eq!(
        rejection("[time]\ndt = 0.01\nt_end = 0.005"),
        "invalid config: `time.t_end` must be 0 or at least time.dt, got 0.005"
    );
    assert_eq!(
        rejection("[time]\ndt = 0.01\nsnapshot_every = 0.015"),
        "invalid config: `time.snapshot_every` must be a positive multiple of time.dt, got 0.015"
    );
    assert_eq!(
        rejection("[grid]\nn = 16\n[noise]\nkmax = 6"),
        "invalid config: `noise.kmax` must not exceed the dealiasing cutoff 5 of grid.n = 16, got 6"
    );
    assert_eq!(
        rejection("[init]\nvelocity_preset = \"abc\""),
        "invalid config: `init.velocity_preset` must be `zero` or `taylor-green`, got `abc`"
    );
    let e = CliError::from(RunConfig::from_toml_str("[grid]\nn = 7").unwrap_err());
    assert_eq!(e.exit_code(), 2);
}

const SMALL: &str = "[grid]\nn = 16\n[time]\ndt = 0.002\nt_end = 0.01\nsnapshot_every = 0.004\n\
[mollifier]\nsigma = 0.3\n[noise]\nkmax = 5\nseed = 11\n";

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn simulate_is_deterministic_and_follows_the_cadence() {
    let tmp = tempfile::tempdir().unwrap();
    let c = config(SMALL);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let summary = simulate(&c, &a).unwrap();
    simulate(&c, &b).unwrap();
    assert_eq!(summary.steps, 5);
    let names: Vec<String> = list_snapshots(&a)
        .unwrap()
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names, [snapshot_name(0), snapshot_name(2), snapshot_name(4), snapshot_name(5)]);
    assert_eq!(files(&a), files(&b));
    let csv = fs::read_to_string(a.join("energy.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
    assert!(csv.starts_with("time,E,dissipation_v,dissipation_d,work_z1,work_z2,residual,max_director"));
}

#[test]
fn zero_end_time_writes_only_the_initial_snapshot() {
    let tmp = tempfile::tempdir().unwrap();
    let c = config("[grid]\nn = 8\n[time]\nt_end = 0\n");
    simulate(&c, tmp.path()).unwrap();
    let snaps = list_snapshots(tmp.path()).unwrap();
    assert_eq!(snaps.len(), 1);
    assert_eq!(Snapshot::read(&snaps[0]).unwrap().t, 0.0);
    assert_eq!(fs::read_to_string(tmp.path().join("energy.csv")).unwrap().lines().count(), 2);
}

#[test]
fn equilibrium_without_noise_is_a_fixed_point() {
    let tmp = tempfile::tempdir().unwrap();
    let c = config(
        "[grid]\nn = 16\n[time]\ndt = 0.01\nt_end = 0.1\n[noise]\nenabled = false\n\
         [init]\nvelocity_preset = \"zero\"\ndirector_preset = \"uniform\"\n",
    );
    simulate(&c, tmp.path()).unwrap();
    let snaps = list_snapshots(tmp.path()).unwrap();
    let first = Snapshot::read(&snaps[0]).unwrap();
    let last = Snapshot::read(snaps.last().unwrap()).unwrap();
    assert!((last.t - 0.1).abs() < 1e-12);
    for (f0, f1) in first.fields.iter().zip(&last.fields) {
        for (c0, c1) in f0.data.iter().zip(&f1.data) {
            for (x0, x1) in c0.iter().zip(c1) {
                assert!((x0 - x1).abs() <= 1e-12, "{} drifted: {x0} -> {x1}", f0.name);
            }
        }
    }
}

#[test]
fn snapshot_files_round_trip_bitwise() {
    let tmp = tempfile::tempdir().unwrap();
    let n = 8;
    let len = n * n * n;
    let snap = Snapshot {
        n,
        t: 0.3,
        fields: vec![NamedField {
            name: "v".into(),
            data: (0..3)
                .map(|c| (0..len).map(|i| ((i * 7 + c) as f64).sin() * 1e-300f64.max(1.0 / (i + 1) as f64)).collect())
                .collect(),
        }],
    };
    let path = tmp.path().join("x.sel3d");
    snap.write(&path).unwrap();
    let back = Snapshot::read(&path).unwrap();
    for (a, b) in snap.fields[0].data.iter().zip(&back.fields[0].data) {
        for (x, y) in a.iter().zip(b) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}

fn fixture(dir: &Path, n: usize, times: &[f64], v: impl Fn([f64; 3]) -> [f64; 3]) {
    fs::create_dir_all(dir).unwrap();
    let len = n * n * n;
    let h = 2.0 * PI / n as f64;
    let mut vel = vec![vec![0.0; len]; 3];
    for iz in 0..n {
        for iy in 0..n {
            for ix in 0..n {
                let val = v([ix as f64 * h, iy as f64 * h, iz as f64 * h]);
                for c in 0..3 {
                    vel[c][(iz * n + iy) * n + ix] = val[c];
                }
            }
        }
    }
    for (i, &t) in times.iter().enumerate() {
        let snap = Snapshot {
            n,
            t,
            fields: vec![
                NamedField {
                    name: "v".into(),
                    data: vel.clone(),
                },
                NamedField {
                    name: "d".into(),
                    data: vec![vec![0.0; len]; 3],
                },
                NamedField {
                    name: "z".into(),
                    data: vec![vec![0.0; len]; 3],
                },
                NamedField {
                    name: "pi".into(),
                    data: vec![vec![0.0; len]],
                },
            ],
        };
        snap.write(&dir.join(snapshot_name(i as u64))).unwrap();
    }
}

#[test]
fn diagnose_needs_two_snapshots_and_names_bad_files() {
    let tmp = tempfile::tempdir().unwrap();
    let one = tmp.path().join("one");
    fixture(&one, 8, &[0.0], |_| [0.0; 3]);
    let err = diagnose(&one, &[], None).unwrap_err();
    assert_eq!(err.exit_code(), 4);
    assert!(err.to_string().contains("insufficient history"), "{err}");

    let two = tmp.path().join("two");
    fixture(&two, 8, &[0.0, 0.1], |_| [0.0; 3]);
    let bad = two.join(snapshot_name(1));
    let mut bytes = fs::read(&bad).unwrap();
    let k = bytes.len() - 20;
    bytes[k] ^= 0xff;
    fs::write(&bad, bytes).unwrap();
    let err = diagnose(&two, &[], None).unwrap_err();
    assert!(err.to_string().contains(&snapshot_name(1)), "{err}");
    assert!(err.to_string().contains("payload checksum mismatch"), "{err}");
}

#[test]
fn zero_fields_give_a_zero_report() {
    let tmp = tempfile::tempdir().unwrap();
    fixture(tmp.path(), 8, &[0.0, 0.05, 0.1], |_| [0.0; 3]);
    let bump = sel3d_core::bump::BumpTestFunction::new([3.0; 3], 0.05, 1.0, 0.04).unwrap();
    let rows = diagnose(tmp.path(), &[bump], None).unwrap();
    for r in &rows {
        if r.name == "exponent" {
            assert!((r.value - 0.05).abs() < 1e-15);
        } else {
            assert_eq!(r.value, 0.0, "{} {}", r.section, r.name);
        }
    }
}

#[test]
fn zero_fields_scan_as_regular() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in");
    fixture(&input, 8, &[0.0, 0.125, 0.25], |_| [0.0; 3]);
    let result = scan(&input, &ScanOptions::default()).unwrap();
    assert_eq!(result.points.len(), 64);
    assert!(result
        .points
        .iter()
        .all(|p| p.classification.as_str() == "regular-certified"));
    assert!(result.cover.selected.is_empty());
    let out = tmp.path().join("out");
    write_reports(&out, &result).unwrap();
    let cover = fs::read_to_string(out.join("cover.csv")).unwrap();
    assert_eq!(cover.lines().last().unwrap(), "bound,,,,,,0.0,,0.0,0.0,pass");
}

#[test]
fn a_hotspot_is_unresolved_and_covered_once() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in");
    let c = 0.75 * PI;
    let times: Vec<f64> = (0..5).map(|k| k as f64 / 64.0).collect();
    fixture(&input, 32, &times, |x| {
        let p: f64 = (0..3).map(|j| (0.5 * (1.0 + (x[j] - c).cos())).powi(10)).product();
        [5.0 * p, 0.0, 0.0]
    });
    let options = ScanOptions {
        radius: Some(0.25),
        ..Default::default()
    };
    let result = scan(&input, &options).unwrap();
    let unresolved: Vec<_> = result
        .points
        .iter()
        .filter(|p| p.classification.as_str() == "unresolved")
        .collect();
    assert_eq!(unresolved.len(), 1);
    assert_eq!(unresolved[0].cylinder.center, [c; 3]);
    assert_eq!(result.cover.selected.len(), 1);
    assert!(result.cover.holds());
}

#[test]
fn noise_stats_of_an_empty_model_are_zero() {
    let rows = noise_stats(&config("[grid]\nn = 16\n[noise]\nkmax = 0\n")).unwrap();
    assert!(rows.iter().all(|r| r.value == 0.0 && r.stderr.unwrap_or(0.0) == 0.0));
}

#[test]
fn stationary_variances_match_the_closed_form() {
    let rows = noise_stats(&config("[grid]\nn = 16\n[noise]\nkmax = 1\ndelta = 0.5\ndecay_s = 1.0\n")).unwrap();
    let table: Vec<_> = rows.iter().filter(|r| r.section == "stationary_variance").collect();
    assert_eq!(table.len(), 13);
    for r in table {
        let k: Vec<f64> = r.name[3..r.name.len() - 1].split(' ').map(|s| s.parse().unwrap()).collect();
        let lambda: f64 = k.iter().map(|x| x * x).sum();
        let gamma = 1.0 / lambda;
        let a2 = gamma / lambda;
        assert!((r.value - a2 / (2.0 * lambda)).abs() < 1e-15, "{}", r.name);
    }
    let slope = rows.iter().find(|r| r.name == "slope").unwrap().value;
    assert!((0.4..0.6).contains(&slope), "slope {slope}");
}

#[test]
fn binary_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_sel3d");
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "[grid]\nn = 7\n").unwrap();
    let out = Command::new(bin)
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`grid.n`"));

    let out = Command::new(bin)
        .args(["scan", "--in"])
        .arg(tmp.path().join("missing"))
        .arg("--out")
        .arg(tmp.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn refinement_pair_reports_the_residual_ratio() {
    let tmp = tempfile::tempdir().unwrap();
    let base = "[grid]\nn = 16\n[mollifier]\nsigma = 0.3\nkind = \"gaussian\"\n[noise]\nenabled = false\n";
    let coarse = tmp.path().join("coarse");
    let fine = tmp.path().join("fine");
    simulate(&config(&format!("{base}[time]\ndt = 0.002\nt_end = 0.02\nsnapshot_every = 0.002\n")), &coarse).unwrap();
    simulate(&config(&format!("{base}[time]\ndt = 0.001\nt_end = 0.02\nsnapshot_every = 0.001\n")), &fine).unwrap();
    let rows = diagnose(&coarse, &[], Some(&fine)).unwrap();
    let ratio = rows.iter().find(|r| r.section == "refinement" && r.name == "ratio").unwrap().value;
    assert!(ratio >= 1.8, "ratio {ratio}");
}
