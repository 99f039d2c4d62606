//! Output: diagnostic CSV, legacy-VTK snapshots and binary checkpoints.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::config::ScenarioConfig;
use crate::error::IoError;
use crate::lattice::{face_to_cell, Axis, CellField};
use crate::solver::{DiagRow, SimState};

pub const CSV_HEADER: &str =
    "t,kinetic_energy,surface_energy,max_divergence,contact_angle_deg,interface_thickness,pcg_iterations,clamp_mass";

fn opt(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => x.to_string(),
        _ => String::new(),
    }
}

/// One CSV line (no newline); missing or NaN values become empty cells.
pub fn csv_row(r: &DiagRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        r.t,
        r.kinetic_energy,
        r.surface_energy,
        r.max_divergence,
        opt(r.contact_angle_deg),
        opt(r.interface_thickness),
        r.pcg_iterations,
        r.clamp_mass
    )
}

/// Streaming writer for the diagnostic time series.
pub struct CsvWriter<W: Write> {
    out: W,
}

impl CsvWriter<BufWriter<File>> {
    pub fn create(path: &Path) -> Result<Self, IoError> {
        CsvWriter::new(BufWriter::new(File::create(path)?))
    }

    /// Append to an existing series (used when resuming).
    pub fn append(path: &Path) -> Result<Self, IoError> {
        if !path.exists() {
            return Self::create(path);
        }
        let file = std::fs::OpenOptions::new().append(true).open(path)?;
        Ok(CsvWriter {
            out: BufWriter::new(file),
        })
    }
}

impl<W: Write> CsvWriter<W> {
    pub fn new(mut out: W) -> Result<Self, IoError> {
        writeln!(out, "{CSV_HEADER}")?;
        Ok(CsvWriter { out })
    }

    pub fn write(&mut self, row: &DiagRow) -> Result<(), IoError> {
        writeln!(self.out, "{}", csv_row(row))?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<(), IoError> {
        self.out.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

fn sig9(v: f64) -> String {
    format!("{v:.8e}")
}

/// Legacy VTK structured-points snapshot (ASCII). Cell scalars `f`, `V`,
/// `p`, `rho`, `xi0` and the cell-averaged velocity.
pub fn write_vtk<W: Write>(state: &SimState, out: &mut W) -> Result<(), IoError> {
    let g = &state.grid;
    let [nx, ny, nz] = g.dims();
    let a = g.spacing();
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(
        out,
        "mpflow time_us={} step={}",
        sig9(state.time),
        state.step
    )?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET STRUCTURED_POINTS")?;
    writeln!(out, "DIMENSIONS {} {} {}", nx + 1, ny + 1, nz + 1)?;
    writeln!(out, "ORIGIN 0 0 0")?;
    writeln!(out, "SPACING {} {} {}", sig9(a), sig9(a), sig9(a))?;
    writeln!(out, "CELL_DATA {}", g.n_cells())?;
    let scalars: [(&str, &CellField); 5] = [
        ("f", &state.f),
        ("V", &state.wall.volume),
        ("p", &state.p),
        ("rho", &state.rho),
        ("xi0", &state.wall.xi0),
    ];
    for (name, field) in scalars {
        writeln!(out, "SCALARS {name} double 1")?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for v in &field.values {
            writeln!(out, "{}", sig9(*v))?;
        }
    }
    let [ux, uy, uz] = face_to_cell(&state.u, g);
    writeln!(out, "VECTORS velocity double")?;
    for i in 0..g.n_cells() {
        writeln!(
            out,
            "{} {} {}",
            sig9(ux.values[i]),
            sig9(uy.values[i]),
            sig9(uz.values[i])
        )?;
    }
    Ok(())
}

pub fn write_vtk_file(state: &SimState, path: &Path) -> Result<(), IoError> {
    let mut out = BufWriter::new(File::create(path)?);
    write_vtk(state, &mut out)?;
    out.flush()?;
    Ok(())
}

const MAGIC: &[u8; 8] = b"MPFCKPT1";

/// Binary checkpoint: magic, SHA-256 of the configuration, the
/// configuration text, time, step, clamp mass, `f`, `p`, `u` (little-endian
/// IEEE doubles), and a trailing SHA-256 of everything before it.
pub fn write_checkpoint<W: Write>(
    state: &SimState,
    config: &ScenarioConfig,
    out: &mut W,
) -> Result<(), IoError> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&config.hash());
    let text = config.to_toml();
    buf.extend_from_slice(&(text.len() as u64).to_le_bytes());
    buf.extend_from_slice(text.as_bytes());
    buf.extend_from_slice(&state.time.to_le_bytes());
    buf.extend_from_slice(&state.step.to_le_bytes());
    buf.extend_from_slice(&state.clamp_mass.to_le_bytes());
    let mut put = |vals: &[f64]| {
        buf.extend_from_slice(&(vals.len() as u64).to_le_bytes());
        for v in vals {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    };
    put(&state.f.values);
    put(&state.p.values);
    for axis in Axis::ALL {
        put(state.u.get(axis));
    }
    let digest = Sha256::digest(&buf);
    out.write_all(&buf)?;
    out.write_all(&digest)?;
    Ok(())
}

pub fn write_checkpoint_file(
    state: &SimState,
    config: &ScenarioConfig,
    path: &Path,
) -> Result<(), IoError> {
    // write then rename so a crash never leaves a half-written checkpoint
    let tmp = path.with_extension("partial");
    {
        let mut out = BufWriter::new(File::create(&tmp)?);
        write_checkpoint(state, config, &mut out)?;
        out.flush()?;
    }
    std::fs::rename(tmp, path)?;
    Ok(())
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IoError> {
        let end = self.pos.checked_add(n).ok_or(IoError::Truncated)?;
        if end > self.data.len() {
            return Err(IoError::Truncated);
        }
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64, IoError> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn f64(&mut self) -> Result<f64, IoError> {
        Ok(f64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn vec(&mut self, expect: usize) -> Result<Vec<f64>, IoError> {
        let n = self.u64()? as usize;
        if n != expect {
            return Err(IoError::Format(format!(
                "field length {n}, expected {expect}"
            )));
        }
        (0..n).map(|_| self.f64()).collect()
    }
}

/// Checkpoint contents before they are applied to a state.
pub struct Checkpoint {
    pub config: ScenarioConfig,
    pub hash: [u8; 32],
    data: Vec<u8>,
    body: usize,
}

impl Checkpoint {
    pub fn read<R: Read>(input: &mut R) -> Result<Self, IoError> {
        let mut data = Vec::new();
        input.read_to_end(&mut data)?;
        if data.len() < MAGIC.len() || &data[..MAGIC.len()] != MAGIC {
            return if MAGIC.starts_with(&data[..data.len().min(MAGIC.len())]) {
                Err(IoError::Truncated)
            } else {
                Err(IoError::Format("not a checkpoint".into()))
            };
        }
        let mut cur = Cursor {
            data: &data,
            pos: MAGIC.len(),
        };
        let hash: [u8; 32] = cur.take(32)?.try_into().expect("32 bytes");
        let len = cur.u64()? as usize;
        let text =
            std::str::from_utf8(cur.take(len)?).map_err(|e| IoError::Format(e.to_string()))?;
        let config = ScenarioConfig::from_toml(text).map_err(|e| IoError::Format(e.to_string()))?;
        if config.hash() != hash {
            return Err(IoError::HashMismatch);
        }
        let body = cur.pos;
        if data.len() < body + 32 {
            return Err(IoError::Truncated);
        }
        Ok(Checkpoint {
            config,
            hash,
            data,
            body,
        })
    }

    pub fn read_file(path: &Path) -> Result<Self, IoError> {
        Self::read(&mut File::open(path)?)
    }

    /// Rebuild the state; the derived fields are recomputed from `f`, which
    /// reproduces them bit for bit.
    pub fn restore(&self) -> Result<SimState, IoError> {
        let mut state = self
            .config
            .build_state()
            .map_err(|e| IoError::Format(e.to_string()))?;
        let g = state.grid.clone();
        let mut cur = Cursor {
            data: &self.data,
            pos: self.body,
        };
        state.time = cur.f64()?;
        state.step = cur.u64()?;
        state.clamp_mass = cur.f64()?;
        state.f.values = cur.vec(g.n_cells())?;
        state.p.values = cur.vec(g.n_cells())?;
        for axis in Axis::ALL {
            *state.u.get_mut(axis) = cur.vec(g.n_faces(axis))?;
        }
        let payload = cur.pos;
        let digest: [u8; 32] = cur.take(32)?.try_into().expect("32 bytes");
        if cur.pos != self.data.len() {
            return Err(IoError::Format("trailing bytes after checkpoint".into()));
        }
        if Sha256::digest(&self.data[..payload]).as_slice() != digest {
            return Err(IoError::Format("checkpoint checksum mismatch".into()));
        }
        state.refresh_derived();
        Ok(state)
    }

    /// Refuse to resume under a different configuration.
    pub fn check_config(&self, config: &ScenarioConfig) -> Result<(), IoError> {
        if config.hash() == self.hash {
            Ok(())
        } else {
            Err(IoError::HashMismatch)
        }
    }
}
