//! Scalar-field I/O: node values as CSV (one value per line) or flat binary
//! (little-endian f64), always paired with a JSON sidecar carrying the grid.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Result, XfgError};
use crate::geometry::BoxDomain;
use crate::grid::{Grid, ScalarField};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldSidecar {
    #[serde(rename = "box")]
    pub boxd: BoxDomain,
    pub res: Vec<usize>,
}

pub fn sidecar_path(data_path: &Path) -> PathBuf {
    let mut os = data_path.as_os_str().to_owned();
    os.push(".json");
    PathBuf::from(os)
}

fn is_binary(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("f64") | Some("bin")
    )
}

/// Writes the field (format chosen by extension: .f64/.bin binary, else CSV)
/// plus its `<path>.json` sidecar.
pub fn write_field(field: &ScalarField, path: &Path) -> Result<()> {
    let grid = field.grid();
    let sidecar = FieldSidecar {
        boxd: grid.domain().clone(),
        res: grid.res().to_vec(),
    };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    if is_binary(path) {
        let mut bytes = Vec::with_capacity(field.values().len() * 8);
        for v in field.values() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(path, bytes)?;
    } else {
        let mut out = fs::File::create(path)?;
        for v in field.values() {
            writeln!(out, "{v:e}")?;
        }
    }
    fs::write(
        sidecar_path(path),
        serde_json::to_string_pretty(&sidecar).expect("sidecar serializes"),
    )?;
    Ok(())
}

/// Reads a field written by `write_field`.
pub fn read_field(path: &Path) -> Result<ScalarField> {
    let sidecar_file = sidecar_path(path);
    let sidecar: FieldSidecar = serde_json::from_str(&fs::read_to_string(&sidecar_file).map_err(
        |e| XfgError::config(format!("missing sidecar {}: {e}", sidecar_file.display())),
    )?)
    .map_err(|e| XfgError::config(format!("bad sidecar {}: {e}", sidecar_file.display())))?;
    let grid = Grid::new(sidecar.boxd, sidecar.res)?;
    let values = if is_binary(path) {
        let bytes = fs::read(path)?;
        if bytes.len() % 8 != 0 {
            return Err(XfgError::config("binary field length not a multiple of 8"));
        }
        bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect()
    } else {
        fs::read_to_string(path)?
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.trim()
                    .parse::<f64>()
                    .map_err(|e| XfgError::config(format!("bad field value `{l}`: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?
    };
    ScalarField::from_values(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_field() -> ScalarField {
        let grid = Grid::uniform(BoxDomain::unit(2), 4).unwrap();
        ScalarField::from_fn(grid, |x| x[0] * 2.0 - x[1]).unwrap()
    }

    #[test]
    fn csv_round_trip() {
        let dir = std::env::temp_dir().join("xfg-fieldio-csv");
        let path = dir.join("u.csv");
        let field = sample_field();
        write_field(&field, &path).unwrap();
        let back = read_field(&path).unwrap();
        assert_eq!(back.values(), field.values());
        assert_eq!(back.grid(), field.grid());
    }

    #[test]
    fn binary_round_trip() {
        let dir = std::env::temp_dir().join("xfg-fieldio-bin");
        let path = dir.join("u.f64");
        let field = sample_field();
        write_field(&field, &path).unwrap();
        let back = read_field(&path).unwrap();
        assert_eq!(back.values(), field.values());
    }

    #[test]
    fn missing_sidecar_is_a_config_error() {
        let dir = std::env::temp_dir().join("xfg-fieldio-missing");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("u.csv");
        std::fs::write(&path, "1.0\n").unwrap();
        let _ = std::fs::remove_file(sidecar_path(&path));
        assert!(matches!(read_field(&path), Err(XfgError::Config(_))));
    }
}
