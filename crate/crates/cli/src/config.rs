//! Run configuration: a TOML file whose tables give dotted keys such as
//! `time.dt`. Every key has a default; unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sel3d_core::noise::NoiseModel;
use sel3d_core::regularity::Thresholds;
use sel3d_core::{MollifierKind, MollifierSpec, TorusGrid};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid config: `{key}` {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(key: &str, message: impl Into<String>) -> Self {
        Self {
            key: key.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VelocityPreset {
    Zero,
    TaylorGreen,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DirectorPreset {
    Quenched,
    Uniform,
}

impl VelocityPreset {
    fn as_str(&self) -> &'static str {
        match self {
            VelocityPreset::Zero => "zero",
            VelocityPreset::TaylorGreen => "taylor-green",
        }
    }
}

impl DirectorPreset {
    fn as_str(&self) -> &'static str {
        match self {
            DirectorPreset::Quenched => "quenched",
            DirectorPreset::Uniform => "uniform",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseConfig {
    pub enabled: bool,
    pub delta: f64,
    pub decay_s: f64,
    pub kmax: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub dt: f64,
    pub t_end: f64,
    pub snapshot_every: f64,
    pub mollifier: MollifierSpec,
    pub noise: NoiseConfig,
    pub velocity: VelocityPreset,
    pub director: DirectorPreset,
    pub init_file: Option<PathBuf>,
    pub thresholds: Thresholds,
    pub tol_mp: f64,
    pub output_dir: Option<PathBuf>,
}

const KEYS: &[&str] = &[
    "grid.n",
    "time.dt",
    "time.t_end",
    "time.snapshot_every",
    "mollifier.sigma",
    "mollifier.kind",
    "noise.enabled",
    "noise.delta",
    "noise.decay_s",
    "noise.kmax",
    "noise.seed",
    "init.velocity_preset",
    "init.director_preset",
    "init.file",
    "thresholds.eps0",
    "thresholds.eps1",
    "thresholds.M",
    "thresholds.tol_mp",
    "output.dir",
];

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, toml::Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}

struct Values(BTreeMap<String, toml::Value>);

impl Values {
    fn float(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.0.get(key) {
            None => Ok(default),
            Some(toml::Value::Float(x)) => Ok(*x),
            Some(toml::Value::Integer(i)) => Ok(*i as f64),
            Some(_) => Err(ConfigError::new(key, "must be a number")),
        }
    }

    fn integer(&self, key: &str, default: i64) -> Result<i64, ConfigError> {
        match self.0.get(key) {
            None => Ok(default),
            Some(toml::Value::Integer(i)) => Ok(*i),
            Some(_) => Err(ConfigError::new(key, "must be an integer")),
        }
    }

    fn boolean(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.0.get(key) {
            None => Ok(default),
            Some(toml::Value::Boolean(b)) => Ok(*b),
            Some(_) => Err(ConfigError::new(key, "must be true or false")),
        }
    }

    fn string(&self, key: &str) -> Result<Option<String>, ConfigError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(ConfigError::new(key, "must be a string")),
        }
    }
}

fn positive(key: &str, x: f64) -> Result<f64, ConfigError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(ConfigError::new(key, format!("must be positive, got {x}")))
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::new("<file>", format!("is not valid TOML: {}", e.message())))?;
        let mut flat = BTreeMap::new();
        flatten("", &table, &mut flat);
        if let Some(unknown) = flat.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(ConfigError::new(unknown, "is not a recognized key"));
        }
        let v = Values(flat);

        let n = v.integer("grid.n", 32)?;
        if n < 8 || n % 2 != 0 {
            return Err(ConfigError::new("grid.n", format!("must be an even integer >= 8, got {n}")));
        }
        let n = n as usize;

        let dt = positive("time.dt", v.float("time.dt", 1e-3)?)?;
        let t_end = v.float("time.t_end", 0.1)?;
        if !(t_end == 0.0 || (t_end.is_finite() && t_end >= dt)) {
            return Err(ConfigError::new("time.t_end", format!("must be 0 or at least time.dt, got {t_end}")));
        }
        if t_end > 0.0 && !is_multiple(t_end, dt) {
            return Err(ConfigError::new("time.t_end", format!("must be a multiple of time.dt, got {t_end}")));
        }
        let snapshot_every = v.float("time.snapshot_every", 10.0 * dt)?;
        if !(snapshot_every > 0.0) || !is_multiple(snapshot_every, dt) {
            return Err(ConfigError::new(
                "time.snapshot_every",
                format!("must be a positive multiple of time.dt, got {snapshot_every}"),
            ));
        }

        let kind = match v.string("mollifier.kind")? {
            None => MollifierKind::Bump,
            Some(s) => MollifierKind::from_str(&s)
                .map_err(|_| ConfigError::new("mollifier.kind", format!("must be `bump` or `gaussian`, got `{s}`")))?,
        };
        let sigma = v.float("mollifier.sigma", 0.2)?;
        let mollifier = MollifierSpec::new(sigma, kind).map_err(|e| ConfigError::new("mollifier.sigma", reason(&e)))?;

        let cutoff = TorusGrid::new(n).map_err(|e| ConfigError::new("grid.n", reason(&e)))?.cutoff();
        let kmax = v.integer("noise.kmax", cutoff as i64)?;
        if kmax < 0 {
            return Err(ConfigError::new("noise.kmax", format!("must be >= 0, got {kmax}")));
        }
        if kmax as usize > cutoff {
            return Err(ConfigError::new(
                "noise.kmax",
                format!("must not exceed the dealiasing cutoff {cutoff} of grid.n = {n}, got {kmax}"),
            ));
        }
        let delta = positive("noise.delta", v.float("noise.delta", 1.0)?)?;
        let decay_s = v.float("noise.decay_s", 2.0)?;
        if !(decay_s >= 0.0) || !decay_s.is_finite() {
            return Err(ConfigError::new("noise.decay_s", format!("must be >= 0, got {decay_s}")));
        }
        let seed = v.integer("noise.seed", 0)?;
        if seed < 0 {
            return Err(ConfigError::new("noise.seed", format!("must be >= 0, got {seed}")));
        }
        let noise = NoiseConfig {
            enabled: v.boolean("noise.enabled", true)?,
            delta,
            decay_s,
            kmax: kmax as usize,
            seed: seed as u64,
        };

        let velocity = match v.string("init.velocity_preset")?.as_deref() {
            None | Some("taylor-green") => VelocityPreset::TaylorGreen,
            Some("zero") => VelocityPreset::Zero,
            Some(other) => {
                return Err(ConfigError::new(
                    "init.velocity_preset",
                    format!("must be `zero` or `taylor-green`, got `{other}`"),
                ))
            }
        };
        let director = match v.string("init.director_preset")?.as_deref() {
            None | Some("quenched") => DirectorPreset::Quenched,
            Some("uniform") => DirectorPreset::Uniform,
            Some(other) => {
                return Err(ConfigError::new(
                    "init.director_preset",
                    format!("must be `quenched` or `uniform`, got `{other}`"),
                ))
            }
        };
        let init_file = v.string("init.file")?.map(PathBuf::from);

        let thresholds = Thresholds {
            eps0: positive("thresholds.eps0", v.float("thresholds.eps0", 0.05)?)?,
            eps1: positive("thresholds.eps1", v.float("thresholds.eps1", 0.1)?)?,
            m: positive("thresholds.M", v.float("thresholds.M", 10.0)?)?,
        };
        let tol_mp = positive("thresholds.tol_mp", v.float("thresholds.tol_mp", 1e-3)?)?;
        let output_dir = v.string("output.dir")?.map(PathBuf::from);

        Ok(Self {
            n,
            dt,
            t_end,
            snapshot_every,
            mollifier,
            noise,
            velocity,
            director,
            init_file,
            thresholds,
            tol_mp,
            output_dir,
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, crate::CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| crate::CliError::io(path, e))?;
        Ok(Self::from_toml_str(&text)?)
    }

    pub fn steps(&self) -> u64 {
        (self.t_end / self.dt).round() as u64
    }

    pub fn steps_per_snapshot(&self) -> u64 {
        ((self.snapshot_every / self.dt).round() as u64).max(1)
    }

    pub fn grid(&self) -> TorusGrid {
        TorusGrid::new(self.n).expect("validated grid size")
    }

    pub fn noise_model(&self) -> Option<NoiseModel> {
        if !self.noise.enabled {
            return None;
        }
        Some(
            NoiseModel::new(self.noise.delta, self.noise.decay_s, self.noise.kmax, self.noise.seed)
                .expect("validated noise parameters"),
        )
    }

    /// Canonical TOML rendering with every key spelled out.
    pub fn to_toml(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[grid]\nn = {}\n", self.n);
        let _ = writeln!(
            s,
            "[time]\ndt = {:?}\nt_end = {:?}\nsnapshot_every = {:?}\n",
            self.dt, self.t_end, self.snapshot_every
        );
        let _ = writeln!(
            s,
            "[mollifier]\nsigma = {:?}\nkind = \"{}\"\n",
            self.mollifier.sigma, self.mollifier.kind
        );
        let _ = writeln!(
            s,
            "[noise]\nenabled = {}\ndelta = {:?}\ndecay_s = {:?}\nkmax = {}\nseed = {}\n",
            self.noise.enabled, self.noise.delta, self.noise.decay_s, self.noise.kmax, self.noise.seed
        );
        let _ = writeln!(
            s,
            "[init]\nvelocity_preset = \"{}\"\ndirector_preset = \"{}\"",
            self.velocity.as_str(),
            self.director.as_str()
        );
        if let Some(f) = &self.init_file {
            let _ = writeln!(s, "file = {:?}", f.display().to_string());
        }
        let _ = writeln!(
            s,
            "\n[thresholds]\neps0 = {:?}\neps1 = {:?}\nM = {:?}\ntol_mp = {:?}",
            self.thresholds.eps0, self.thresholds.eps1, self.thresholds.m, self.tol_mp
        );
        if let Some(d) = &self.output_dir {
            let _ = writeln!(s, "\n[output]\ndir = {:?}", d.display().to_string());
        }
        s
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::from_toml_str("").expect("defaults are valid")
    }
}

fn is_multiple(x: f64, unit: f64) -> bool {
    let r = x / unit;
    r >= 1.0 - 1e-9 && (r - r.round()).abs() <= 1e-9 * r.max(1.0)
}

fn reason(e: &sel3d_core::Error) -> String {
    match e {
        sel3d_core::Error::InvalidParameter { reason, .. } => reason.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_an_empty_file() {
        let c = RunConfig::from_toml_str("").unwrap();
        assert_eq!(c.n, 32);
        assert_eq!(c.noise.kmax, 10);
        assert_eq!(c.mollifier.kind, MollifierKind::Bump);
        assert_eq!(c.thresholds, Thresholds::default());
        assert_eq!(c.steps(), 100);
        assert_eq!(c.steps_per_snapshot(), 10);
    }

    #[test]
    fn canonical_rendering_round_trips() {
        let c = RunConfig::from_toml_str(
            "[grid]\nn = 16\n[time]\ndt = 0.01\nt_end = 0.05\nsnapshot_every = 0.02\n[noise]\nenabled = false\nseed = 3\n",
        )
        .unwrap();
        assert_eq!(RunConfig::from_toml_str(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn zero_end_time_is_allowed() {
        let c = RunConfig::from_toml_str("[time]\nt_end = 0").unwrap();
        assert_eq!(c.steps(), 0);
    }
}
