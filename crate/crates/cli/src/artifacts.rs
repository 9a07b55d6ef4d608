//! On-disk layout of a run: `manifest.json`, `field.bin`, `energy.csv`,
//! `verify/*.csv` and `plots/*.svg` under one output directory.

use std::fs;
use std::path::{Path, PathBuf};

use platelike_core::energy::PeriodicField;
use platelike_core::minimize::MinimizerResult;
use platelike_core::verify::VerificationReport;
use platelike_core::{Error, Result};
use serde::Serialize;

pub const MANIFEST: &str = "manifest.json";
pub const FIELD: &str = "field.bin";
pub const ENERGY: &str = "energy.csv";
pub const VERIFY_DIR: &str = "verify";
pub const PLOTS_DIR: &str = "plots";

#[derive(Debug, Clone)]
pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root.join(VERIFY_DIR))?;
        fs::create_dir_all(root.join(PLOTS_DIR))?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&self, rel: &str, contents: &[u8]) -> Result<PathBuf> {
        let p = self.root.join(rel);
        fs::write(&p, contents)?;
        Ok(p)
    }

    pub fn write_json(&self, rel: &str, value: &impl Serialize) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(rel, text.as_bytes())
    }

    pub fn write_field(&self, u: &PeriodicField) -> Result<PathBuf> {
        self.write(FIELD, &field_bytes(u.values()))
    }

    pub fn write_report(&self, rep: &VerificationReport) -> Result<PathBuf> {
        self.write(&format!("{VERIFY_DIR}/{}.csv", rep.check), rep.to_csv().as_bytes())
    }

    pub fn write_plot(&self, name: &str, svg: &str) -> Result<PathBuf> {
        self.write(&format!("{PLOTS_DIR}/{name}.svg"), svg.as_bytes())
    }
}

/// Raw little-endian `f64` values in site order.
pub fn field_bytes(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn read_field(path: &Path) -> Result<Vec<f64>> {
    let bytes = fs::read(path)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Parse(format!(
            "{} holds {} bytes, not a whole number of f64 values",
            path.display(),
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of eight")))
        .collect())
}

pub const ENERGY_HEADER: &str =
    "label,total,kinetic_same,kinetic_cross,potential,iterations,projected_gradient,status";

pub fn energy_row(label: &str, r: &MinimizerResult) -> String {
    format!(
        "{},{:e},{:e},{:e},{:e},{},{:e},{:?}",
        label.replace(',', ";"),
        r.energy.total,
        r.energy.kinetic_same,
        r.energy.kinetic_cross,
        r.energy.potential,
        r.iterations,
        r.final_projected_gradient_norm,
        r.status
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_bytes_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let vals = vec![1.0, -0.5, f64::MIN_POSITIVE, 0.1 + 0.2];
        let p = dir.path().join("f.bin");
        fs::write(&p, field_bytes(&vals)).unwrap();
        assert_eq!(read_field(&p).unwrap(), vals);
        assert_eq!(&field_bytes(&[1.0])[..], &[0, 0, 0, 0, 0, 0, 0xf0, 0x3f]);
        fs::write(&p, [0u8; 7]).unwrap();
        assert!(read_field(&p).is_err());
    }
}
