//! Binary snapshots of real-space fields.
//!
//! Layout, all little-endian:
//!
//! ```text
//! "SEL3D"  u16 version  u32 n  f64 t  u8 field count
//! per field: u8 name length, name bytes, u8 components
//! u32 CRC-32 of everything above
//! payload: f64 arrays, field by field, [component][z][y][x]
//! u32 CRC-32 of the payload
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use sel3d_core::solver::SimState;
use sel3d_core::{SpectralField, TorusGrid};

use crate::config::RunConfig;
use crate::CliError;

pub const MAGIC: &[u8; 5] = b"SEL3D";
pub const VERSION: u16 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct NamedField {
    pub name: String,
    /// One array of `n³` values per component.
    pub data: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub n: usize,
    pub t: f64,
    pub fields: Vec<NamedField>,
}

/// Spectral state rebuilt from a snapshot.
#[derive(Clone, Debug)]
pub struct LoadedState {
    pub state: SimState,
    pub pi: SpectralField,
}

impl Snapshot {
    /// `v`, `d`, `z` and `π` of a state, in real space.
    pub fn from_state(grid: &TorusGrid, state: &SimState, pi: &SpectralField) -> Self {
        let named = |name: &str, f: &SpectralField| NamedField {
            name: name.to_string(),
            data: f.to_physical(grid),
        };
        Snapshot {
            n: grid.n(),
            t: state.t,
            fields: vec![named("v", &state.v), named("d", &state.d), named("z", &state.z), named("pi", pi)],
        }
    }

    pub fn field(&self, name: &str) -> Option<&NamedField> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn to_state(&self, grid: &TorusGrid, path: &Path) -> Result<LoadedState, CliError> {
        if self.n != grid.n() {
            return Err(CliError::format(path, format!("grid size {} does not match n = {}", self.n, grid.n())));
        }
        let spectral = |name: &str, comps: usize| -> Result<SpectralField, CliError> {
            let f = self
                .field(name)
                .ok_or_else(|| CliError::format(path, format!("missing field `{name}`")))?;
            if f.data.len() != comps {
                return Err(CliError::format(
                    path,
                    format!("field `{name}` has {} components, expected {comps}", f.data.len()),
                ));
            }
            let refs: Vec<&[f64]> = f.data.iter().map(|c| c.as_slice()).collect();
            Ok(SpectralField::from_physical(grid, &refs)
                .map_err(|e| CliError::format(path, e.to_string()))?
                .masked(grid))
        };
        Ok(LoadedState {
            state: SimState {
                t: self.t,
                v: spectral("v", 3)?,
                d: spectral("d", 3)?,
                z: spectral("z", 3)?,
            },
            pi: spectral("pi", 1)?,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.n as u32).to_le_bytes());
        out.extend_from_slice(&self.t.to_le_bytes());
        out.push(self.fields.len() as u8);
        for f in &self.fields {
            out.push(f.name.len() as u8);
            out.extend_from_slice(f.name.as_bytes());
            out.push(f.data.len() as u8);
        }
        let header_crc = crc32fast::hash(&out);
        out.extend_from_slice(&header_crc.to_le_bytes());
        let start = out.len();
        for f in &self.fields {
            for c in &f.data {
                for x in c {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
        }
        let payload_crc = crc32fast::hash(&out[start..]);
        out.extend_from_slice(&payload_crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self, CliError> {
        let bad = |msg: &str| CliError::format(path, msg.to_string());
        let mut r = Reader { bytes, pos: 0 };
        if r.take(5).ok_or_else(|| bad("truncated header"))? != MAGIC {
            return Err(bad("bad magic"));
        }
        let version = u16::from_le_bytes(r.array().ok_or_else(|| bad("truncated header"))?);
        if version != VERSION {
            return Err(bad(&format!("unsupported format version {version}")));
        }
        let n = u32::from_le_bytes(r.array().ok_or_else(|| bad("truncated header"))?) as usize;
        let t = f64::from_le_bytes(r.array().ok_or_else(|| bad("truncated header"))?);
        let count = r.take(1).ok_or_else(|| bad("truncated header"))?[0] as usize;
        let mut layout = Vec::with_capacity(count);
        for _ in 0..count {
            let len = r.take(1).ok_or_else(|| bad("truncated header"))?[0] as usize;
            let name = std::str::from_utf8(r.take(len).ok_or_else(|| bad("truncated header"))?)
                .map_err(|_| bad("field name is not UTF-8"))?
                .to_string();
            let comps = r.take(1).ok_or_else(|| bad("truncated header"))?[0] as usize;
            layout.push((name, comps));
        }
        let header_end = r.pos;
        let stored = u32::from_le_bytes(r.array().ok_or_else(|| bad("truncated header"))?);
        if crc32fast::hash(&bytes[..header_end]) != stored {
            return Err(bad("header checksum mismatch"));
        }
        let len = n * n * n;
        let values: usize = layout.iter().map(|(_, c)| c * len).sum();
        let payload_start = r.pos;
        if bytes.len() != payload_start + 8 * values + 4 {
            return Err(bad("payload size does not match the header"));
        }
        let payload = &bytes[payload_start..payload_start + 8 * values];
        let stored = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().expect("four bytes"));
        if crc32fast::hash(payload) != stored {
            return Err(bad("payload checksum mismatch"));
        }
        let mut chunks = payload.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("eight bytes")));
        let fields = layout
            .into_iter()
            .map(|(name, comps)| NamedField {
                name,
                data: (0..comps).map(|_| chunks.by_ref().take(len).collect()).collect(),
            })
            .collect();
        Ok(Snapshot { n, t, fields })
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        fs::write(path, self.to_bytes()).map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, k: usize) -> Option<&'a [u8]> {
        let s = self.bytes.get(self.pos..self.pos + k)?;
        self.pos += k;
        Some(s)
    }

    fn array<const K: usize>(&mut self) -> Option<[u8; K]> {
        self.take(K).map(|s| s.try_into().expect("slice of length K"))
    }
}

pub fn snapshot_name(step: u64) -> String {
    format!("snap_{step:06}.sel3d")
}

/// Snapshot files of a directory in name order.
pub fn list_snapshots(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "sel3d") {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Every snapshot of a run directory, rebuilt in spectral space, with the
/// run's configuration when `run.toml` is present.
#[derive(Clone, Debug)]
pub struct RunDirectory {
    pub config: Option<RunConfig>,
    pub grid: TorusGrid,
    pub states: Vec<SimState>,
    pub pressures: Vec<SpectralField>,
}

impl RunDirectory {
    pub fn load(dir: &Path) -> Result<Self, CliError> {
        let run_toml = dir.join("run.toml");
        let config = if run_toml.exists() {
            Some(RunConfig::from_file(&run_toml)?)
        } else {
            None
        };
        let paths = list_snapshots(dir)?;
        let Some(first) = paths.first() else {
            return Err(CliError::Input(format!(
                "{}: {}",
                dir.display(),
                sel3d_core::Error::InsufficientHistory { needed: 2, found: 0 }
            )));
        };
        let n = Snapshot::read(first)?.n;
        let grid = TorusGrid::new(n).map_err(|e| CliError::format(first, e.to_string()))?;
        if let Some(c) = &config {
            if c.n != n {
                return Err(CliError::format(first, format!("grid size {n} does not match run.toml n = {}", c.n)));
            }
        }
        let mut states: Vec<SimState> = Vec::with_capacity(paths.len());
        let mut pressures = Vec::with_capacity(paths.len());
        for path in &paths {
            let loaded = Snapshot::read(path)?.to_state(&grid, path)?;
            if let Some(prev) = states.last() {
                if !(loaded.state.t > prev.t) {
                    return Err(CliError::format(
                        path,
                        format!("time {} does not follow the previous snapshot at {}", loaded.state.t, prev.t),
                    ));
                }
            }
            states.push(loaded.state);
            pressures.push(loaded.pi);
        }
        Ok(Self {
            config,
            grid,
            states,
            pressures,
        })
    }

    pub fn require_history(&self, dir: &Path) -> Result<(), CliError> {
        if self.states.len() < 2 {
            let e = sel3d_core::Error::InsufficientHistory {
                needed: 2,
                found: self.states.len(),
            };
            return Err(CliError::Input(format!("{}: {e}", dir.display())));
        }
        Ok(())
    }
}
