//! Output artifacts: CSV profiles and traces, and raw field dumps.
//!
//! A field dump is a pair of files, `<stem>.hdr` (plain `key: value` lines)
//! and `<stem>.bin` (float32 little-endian, x fastest). The header carries the
//! SHA-256 of the payload.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use pbmsim_core::dosimetry::Profile;
use pbmsim_core::units::MM_TO_M;
use pbmsim_core::{Grid, Quantity, ScalarField};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> IoError + '_ {
    move |source| IoError::Io { path: path.to_path_buf(), source }
}

fn format_err(path: &Path, message: impl Into<String>) -> IoError {
    IoError::Format { path: path.to_path_buf(), message: message.into() }
}

/// `position_cm,<quantity>_<units>` then one row per sample.
pub fn cutline_csv(profile: &Profile) -> String {
    let mut s = format!("position_cm,{}_{}\n", profile.quantity.name(), profile.quantity.units_tag());
    for (x, v) in profile.positions.iter().zip(&profile.values) {
        let _ = writeln!(s, "{x},{v}");
    }
    s
}

pub fn write_cutline_csv(profile: &Profile, path: &Path) -> Result<(), IoError> {
    if profile.is_empty() {
        return Err(format_err(path, "empty profile"));
    }
    fs::write(path, cutline_csv(profile)).map_err(io_err(path))
}

/// `time_s,T_<probe>_C,...` with one row per sample time.
pub fn probe_csv(times: &[f64], names: &[String], traces: &[Vec<f64>]) -> String {
    let mut s = String::from("time_s");
    for n in names {
        let _ = write!(s, ",T_{n}_C");
    }
    s.push('\n');
    for (i, t) in times.iter().enumerate() {
        let _ = write!(s, "{t}");
        for tr in traces {
            let _ = write!(s, ",{}", tr[i]);
        }
        s.push('\n');
    }
    s
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest.iter() {
        let _ = write!(s, "{b:02x}");
    }
    s
}

fn payload(field: &ScalarField) -> Vec<u8> {
    let mut out = Vec::with_capacity(field.values.len() * 4);
    for &v in &field.values {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

fn header(field: &ScalarField, checksum: &str) -> String {
    let [nx, ny, nz] = field.grid.dims;
    format!(
        "format: pbmsim-field 1\n\
         dims: {nx} {ny} {nz}\n\
         spacing_mm: {}\n\
         quantity: {}\n\
         units: {}\n\
         encoding: float32 little-endian\n\
         ordering: x-fastest row-major\n\
         checksum: sha256:{checksum}\n",
        field.grid.spacing / MM_TO_M,
        field.quantity.name(),
        field.quantity.units(),
    )
}

/// Paths of the header and payload for a dump stem.
pub fn dump_paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("hdr"), stem.with_extension("bin"))
}

/// Writes `<stem>.hdr` and `<stem>.bin`. Values are stored as float32.
pub fn write_field_dump(field: &ScalarField, stem: &Path) -> Result<(), IoError> {
    if !field.is_finite() {
        return Err(format_err(stem, "field has non-finite values"));
    }
    let (hdr, bin) = dump_paths(stem);
    let data = payload(field);
    fs::write(&bin, &data).map_err(io_err(&bin))?;
    fs::write(&hdr, header(field, &sha256_hex(&data))).map_err(io_err(&hdr))
}

/// Reads a dump written by [`write_field_dump`]. `path` may name the header,
/// the payload or the bare stem.
pub fn read_field_dump(path: &Path) -> Result<ScalarField, IoError> {
    let (hdr, bin) = dump_paths(path);
    let text = fs::read_to_string(&hdr).map_err(io_err(&hdr))?;
    let mut dims = None;
    let mut spacing = None;
    let mut quantity = None;
    let mut checksum = None;
    for line in text.lines() {
        let Some((k, v)) = line.split_once(':') else { continue };
        let v = v.trim();
        match k.trim() {
            "dims" => {
                let d: Vec<usize> = v.split_whitespace().filter_map(|x| x.parse().ok()).collect();
                if d.len() == 3 {
                    dims = Some([d[0], d[1], d[2]]);
                }
            }
            "spacing_mm" => spacing = v.parse::<f64>().ok(),
            "quantity" => quantity = Quantity::from_name(v),
            "checksum" => checksum = v.strip_prefix("sha256:").map(str::to_string),
            "encoding" if v != "float32 little-endian" => return Err(format_err(&hdr, format!("unsupported encoding '{v}'"))),
            "ordering" if v != "x-fastest row-major" => return Err(format_err(&hdr, format!("unsupported ordering '{v}'"))),
            _ => {}
        }
    }
    let dims = dims.ok_or_else(|| format_err(&hdr, "missing dims"))?;
    let spacing = spacing.ok_or_else(|| format_err(&hdr, "missing spacing_mm"))?;
    let quantity = quantity.ok_or_else(|| format_err(&hdr, "missing or unknown quantity"))?;
    let data = fs::read(&bin).map_err(io_err(&bin))?;
    let n = dims[0] * dims[1] * dims[2];
    if data.len() != 4 * n {
        return Err(format_err(&bin, format!("payload is {} bytes, expected {}", data.len(), 4 * n)));
    }
    match checksum {
        Some(c) if c == sha256_hex(&data) => {}
        Some(_) => return Err(format_err(&bin, "checksum mismatch")),
        None => return Err(format_err(&hdr, "missing checksum")),
    }
    let grid = Grid::new(dims, spacing * MM_TO_M).map_err(|e| format_err(&hdr, e.to_string()))?;
    let values = data.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64).collect();
    ScalarField::from_values(grid, quantity, values).map_err(|e| format_err(&hdr, e.to_string()))
}

pub fn ensure_dir(dir: &Path) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    fs::write(path, text).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_field_payload() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::new([2, 2, 2], 1e-3).unwrap();
        let f = ScalarField::zeros(g, Quantity::Temperature);
        let stem = dir.path().join("z");
        write_field_dump(&f, &stem).unwrap();
        let bin = fs::read(stem.with_extension("bin")).unwrap();
        assert_eq!(bin, vec![0u8; 32]);
        let hdr = fs::read_to_string(stem.with_extension("hdr")).unwrap();
        assert!(hdr.contains(&format!("checksum: sha256:{}", sha256_hex(&[0u8; 32]))));
        assert!(hdr.contains("dims: 2 2 2\n"));
        assert!(hdr.contains("spacing_mm: 1\n"));
    }

    #[test]
    fn corrupted_payload_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::new([2, 1, 1], 1e-3).unwrap();
        let f = ScalarField::from_values(g, Quantity::FluenceRate, vec![1.0, 2.0]).unwrap();
        let stem = dir.path().join("f");
        write_field_dump(&f, &stem).unwrap();
        fs::write(stem.with_extension("bin"), [0u8; 8]).unwrap();
        assert!(matches!(read_field_dump(&stem), Err(IoError::Format { .. })));
    }

    #[test]
    fn constant_profile_csv() {
        let p = Profile { quantity: Quantity::Temperature, positions: vec![0.0, 0.5], values: vec![37.0, 37.0] };
        assert_eq!(cutline_csv(&p), "position_cm,temperature_C\n0,37\n0.5,37\n");
    }

    #[test]
    fn probe_header() {
        let s = probe_csv(&[0.0, 1.0], &["scalp".into(), "cortex".into()], &[vec![33.0, 33.5], vec![37.0, 37.01]]);
        assert!(s.starts_with("time_s,T_scalp_C,T_cortex_C\n0,33,37\n1,33.5,37.01\n"));
    }
}
