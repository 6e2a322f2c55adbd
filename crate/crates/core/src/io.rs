//! File formats: fibre lists, binary volumes, direction and attribute fields,
//! posteriors and JSON documents. Every writer goes through
//! [`atomic_write`].

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::field::{DirectionField, GridSpec, ScalarField3};
use crate::saem::{Label, PosteriorField};
use crate::sim::{BinaryVolume, Fibre};
use crate::sphere::UnitVector3;
use crate::{Error, Result};

/// Norm deviation up to which loaded directions are renormalised.
pub const LOAD_UNIT_TOLERANCE: f64 = 1e-3;

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn csv_bytes<T: Serialize>(header: &[&str], rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn parse_error(path: &Path, e: &csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: e.to_string(),
    }
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path, header: &[&str]) -> Result<Vec<(u64, T)>> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let found: Vec<String> = r
        .headers()
        .map_err(|e| parse_error(path, &e))?
        .iter()
        .map(String::from)
        .collect();
    if found != header {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!(
                "expected header {}, found {}",
                header.join(","),
                found.join(",")
            ),
        });
    }
    let mut out = Vec::new();
    for rec in r.deserialize() {
        let row: T = rec.map_err(|e| parse_error(path, &e))?;
        out.push((out.len() as u64 + 2, row));
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct FibreRow {
    p0x: f64,
    p0y: f64,
    p0z: f64,
    p1x: f64,
    p1y: f64,
    p1z: f64,
    radius: f64,
}

const FIBRE_HEADER: [&str; 7] = ["p0x", "p0y", "p0z", "p1x", "p1y", "p1z", "radius"];

pub fn save_fibres(path: &Path, fibres: &[Fibre]) -> Result<()> {
    let rows = fibres.iter().map(|f| FibreRow {
        p0x: f.p0[0],
        p0y: f.p0[1],
        p0z: f.p0[2],
        p1x: f.p1[0],
        p1y: f.p1[1],
        p1z: f.p1[2],
        radius: f.radius,
    });
    atomic_write(path, &csv_bytes(&FIBRE_HEADER, rows)?)
}

pub fn load_fibres(path: &Path) -> Result<Vec<Fibre>> {
    read_csv::<FibreRow>(path, &FIBRE_HEADER)?
        .into_iter()
        .map(|(line, r)| {
            let f = Fibre {
                p0: [r.p0x, r.p0y, r.p0z],
                p1: [r.p1x, r.p1y, r.p1z],
                radius: r.radius,
            };
            if !(f.radius > 0.0) || !(f.length() > 0.0) {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: "fibre needs positive radius and length".into(),
                });
            }
            Ok(f)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeSidecar {
    pub dims: [usize; 3],
    pub voxel_size_um: f64,
}

fn sidecar_path(raw: &Path) -> PathBuf {
    raw.with_extension("json")
}

/// Raw little-endian u8 volume plus a JSON sidecar with the same stem.
pub fn save_volume(raw: &Path, volume: &BinaryVolume, voxel_size_um: f64) -> Result<()> {
    atomic_write(raw, &volume.data)?;
    let meta = VolumeSidecar {
        dims: volume.dims,
        voxel_size_um,
    };
    atomic_write(&sidecar_path(raw), &serde_json::to_vec_pretty(&meta)?)
}

pub fn load_volume(raw: &Path) -> Result<(BinaryVolume, VolumeSidecar)> {
    let meta: VolumeSidecar = serde_json::from_slice(&fs::read(sidecar_path(raw))?)?;
    let data = fs::read(raw)?;
    if data.len() != meta.dims.iter().product::<usize>() {
        return Err(Error::invalid(format!(
            "{} holds {} bytes, sidecar dims {:?}",
            raw.display(),
            data.len(),
            meta.dims
        )));
    }
    Ok((
        BinaryVolume {
            dims: meta.dims,
            data,
        },
        meta,
    ))
}

#[derive(Serialize, Deserialize)]
struct DirectionRow {
    i1: usize,
    i2: usize,
    i3: usize,
    x: f64,
    y: f64,
    z: f64,
}

const DIRECTION_HEADER: [&str; 6] = ["i1", "i2", "i3", "x", "y", "z"];

pub fn save_direction_field(path: &Path, field: &DirectionField) -> Result<()> {
    let rows = field.iter_occupied().map(|(i, u)| DirectionRow {
        i1: i[0] + 1,
        i2: i[1] + 1,
        i3: i[2] + 1,
        x: u.x(),
        y: u.y(),
        z: u.z(),
    });
    atomic_write(path, &csv_bytes(&DIRECTION_HEADER, rows)?)
}

fn one_based(
    path: &Path,
    line: u64,
    idx: [usize; 3],
    dims: Option<[usize; 3]>,
) -> Result<[usize; 3]> {
    if idx.contains(&0) || dims.is_some_and(|d| (0..3).any(|k| idx[k] > d[k])) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("index {idx:?} outside the grid"),
        });
    }
    Ok(idx.map(|v| v - 1))
}

/// Loads a direction field. Without `grid` the cell counts are taken from
/// the largest indices present (unit cell edge, window factor 1).
pub fn load_direction_field(path: &Path, grid: Option<GridSpec>) -> Result<DirectionField> {
    let rows = read_csv::<DirectionRow>(path, &DIRECTION_HEADER)?;
    let dims = grid.map(|g| g.cells);
    let mut cells = Vec::with_capacity(rows.len());
    let mut seen = HashSet::new();
    for (line, r) in rows {
        let idx = one_based(path, line, [r.i1, r.i2, r.i3], dims)?;
        if !seen.insert(idx) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("duplicate cell index {:?}", [r.i1, r.i2, r.i3]),
            });
        }
        let norm = (r.x * r.x + r.y * r.y + r.z * r.z).sqrt();
        if !((norm - 1.0).abs() <= LOAD_UNIT_TOLERANCE) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("direction has norm {norm}"),
            });
        }
        cells.push((idx, UnitVector3::normalize(r.x, r.y, r.z)?));
    }
    let grid = match grid {
        Some(g) => g,
        None => {
            let mut n = [0usize; 3];
            for (i, _) in &cells {
                for k in 0..3 {
                    n[k] = n[k].max(i[k] + 1);
                }
            }
            GridSpec::new(1.0, n, 1)?
        }
    };
    let mut field = DirectionField::empty(grid);
    for (i, u) in cells {
        field.set(i, Some(u));
    }
    Ok(field)
}

#[derive(Serialize, Deserialize)]
struct ValueRow {
    i1: usize,
    i2: usize,
    i3: usize,
    value: f64,
}

const VALUE_HEADER: [&str; 4] = ["i1", "i2", "i3", "value"];

pub fn save_scalar_field(path: &Path, field: &ScalarField3) -> Result<()> {
    let rows = field.iter_occupied().map(|(i, v)| ValueRow {
        i1: i[0] + 1,
        i2: i[1] + 1,
        i3: i[2] + 1,
        value: v,
    });
    atomic_write(path, &csv_bytes(&VALUE_HEADER, rows)?)
}

/// Loads an attribute field; without `dims` the extent is inferred from the
/// largest indices.
pub fn load_scalar_field(path: &Path, dims: Option<[usize; 3]>) -> Result<ScalarField3> {
    let rows = read_csv::<ValueRow>(path, &VALUE_HEADER)?;
    let mut entries = Vec::with_capacity(rows.len());
    for (line, r) in rows {
        let idx = one_based(path, line, [r.i1, r.i2, r.i3], dims)?;
        if !r.value.is_finite() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: "non-finite value".into(),
            });
        }
        entries.push((line, idx, r.value));
    }
    let dims = dims.unwrap_or_else(|| {
        let mut n = [0; 3];
        for (_, i, _) in &entries {
            for k in 0..3 {
                n[k] = n[k].max(i[k] + 1);
            }
        }
        n
    });
    let mut field = ScalarField3::empty(dims);
    for (line, i, v) in entries {
        if field.get(i).is_some() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("duplicate index {:?}", i.map(|c| c + 1)),
            });
        }
        field.set(i, v);
    }
    Ok(field)
}

#[derive(Serialize)]
struct PosteriorRow {
    l1: usize,
    l2: usize,
    l3: usize,
    q: f64,
    label: Label,
}

pub fn save_posteriors(path: &Path, posterior: &PosteriorField, labels: &[Label]) -> Result<()> {
    if labels.len() != posterior.len() {
        return Err(Error::invalid("label count differs from posterior count"));
    }
    let rows = posterior
        .windows
        .iter()
        .zip(&posterior.q)
        .zip(labels)
        .map(|((w, &q), &label)| PosteriorRow {
            l1: w[0] + 1,
            l2: w[1] + 1,
            l3: w[2] + 1,
            q,
            label,
        });
    atomic_write(path, &csv_bytes(&["l1", "l2", "l3", "q", "label"], rows)?)
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    atomic_write(path, &bytes)
}
