//! Echo-phase shift datasets and their interchange format.
//!
//! Rows are (E magnitude, hyperfine line, measured shift, uncertainty).
//! On disk a dataset is a CSV file with the header
//! `e_field_v_per_cm,m_i,delta_f_hz,sigma_hz` — the `m_i` column holds the
//! line label or the literal `averaged` — plus a JSON sidecar carrying the
//! run metadata.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::donor::Species;
use crate::error::Error;
use crate::geometry::MillerDirection;
use crate::stark::{HyperfineLine, Polarity};
use crate::Result;

pub const CSV_HEADER: [&str; 4] = ["e_field_v_per_cm", "m_i", "delta_f_hz", "sigma_hz"];

/// One measured (or simulated) point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetRow {
    pub e_field_v_per_cm: f64,
    pub m_i: HyperfineLine,
    pub delta_f_hz: f64,
    pub sigma_hz: f64,
}

/// Run conditions attached to a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMetadata {
    pub donor: Species,
    pub e_direction: MillerDirection,
    pub b_direction: MillerDirection,
    pub f0_hz: f64,
    pub t_e_s: f64,
    pub polarity: Polarity,
    pub seed: u64,
}

/// A dataset: rows plus the metadata describing how they were produced.
#[derive(Debug, Clone, PartialEq)]
pub struct EchoPhaseDataset {
    pub rows: Vec<DatasetRow>,
    pub metadata: DatasetMetadata,
}

impl EchoPhaseDataset {
    pub fn new(rows: Vec<DatasetRow>, metadata: DatasetMetadata) -> Result<Self> {
        for row in &rows {
            if row.sigma_hz < 0.0 || row.sigma_hz.is_nan() {
                return Err(Error::InvalidDataset(format!(
                    "sigma_hz must be non-negative, got {} at E = {}",
                    row.sigma_hz, row.e_field_v_per_cm
                )));
            }
            if !row.delta_f_hz.is_finite() || !row.e_field_v_per_cm.is_finite() {
                return Err(Error::InvalidDataset("non-finite row values".into()));
            }
        }
        Ok(Self { rows, metadata })
    }

    /// Distinct field values in first-appearance order.
    pub fn field_values(&self) -> Vec<f64> {
        let mut seen = Vec::new();
        for row in &self.rows {
            if !seen
                .iter()
                .any(|&e: &f64| e.to_bits() == row.e_field_v_per_cm.to_bits())
            {
                seen.push(row.e_field_v_per_cm);
            }
        }
        seen
    }

    /// Distinct numeric line labels, ascending. Averaged rows contribute none.
    pub fn line_labels(&self) -> Vec<f64> {
        let mut labels: Vec<f64> = Vec::new();
        for row in &self.rows {
            if let Some(m) = row.m_i.projection() {
                if !labels.iter().any(|&x| x.to_bits() == m.to_bits()) {
                    labels.push(m);
                }
            }
        }
        labels.sort_by(|a, b| a.partial_cmp(b).unwrap());
        labels
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(CSV_HEADER)?;
        for row in &self.rows {
            writer.write_record([
                row.e_field_v_per_cm.to_string(),
                row.m_i.to_string(),
                row.delta_f_hz.to_string(),
                row.sigma_hz.to_string(),
            ])?;
        }
        let bytes = writer
            .into_inner()
            .map_err(|e| Error::InvalidDataset(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::InvalidDataset(e.to_string()))
    }

    pub fn from_csv_str(csv_text: &str, metadata: DatasetMetadata) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(csv_text.as_bytes());
        {
            let header = reader.headers()?;
            let got: Vec<&str> = header.iter().collect();
            if got != CSV_HEADER {
                return Err(Error::InvalidDataset(format!(
                    "unexpected CSV header {got:?}, expected {CSV_HEADER:?}"
                )));
            }
        }
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record?;
            if record.len() != 4 {
                return Err(Error::InvalidDataset(format!(
                    "expected 4 columns, got {}",
                    record.len()
                )));
            }
            let parse = |s: &str, what: &str| -> Result<f64> {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidDataset(format!("unparseable {what} value {s:?}")))
            };
            rows.push(DatasetRow {
                e_field_v_per_cm: parse(&record[0], "e_field_v_per_cm")?,
                m_i: record[1].trim().parse()?,
                delta_f_hz: parse(&record[2], "delta_f_hz")?,
                sigma_hz: parse(&record[3], "sigma_hz")?,
            });
        }
        Self::new(rows, metadata)
    }

    /// Writes the CSV and its `<stem>.meta.json` sidecar next to it.
    pub fn write(&self, csv_path: &Path) -> Result<()> {
        std::fs::write(csv_path, self.to_csv_string()?)?;
        let sidecar = sidecar_path(csv_path);
        let mut json = serde_json::to_string_pretty(&self.metadata)?;
        json.push('\n');
        std::fs::write(sidecar, json)?;
        Ok(())
    }

    /// Reads a CSV and its sidecar.
    pub fn read(csv_path: &Path) -> Result<Self> {
        let metadata_text = std::fs::read_to_string(sidecar_path(csv_path))?;
        let metadata: DatasetMetadata = serde_json::from_str(&metadata_text)?;
        let csv_text = std::fs::read_to_string(csv_path)?;
        Self::from_csv_str(&csv_text, metadata)
    }
}

/// Sidecar path for a dataset CSV: `data.csv` -> `data.meta.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn metadata() -> DatasetMetadata {
        DatasetMetadata {
            donor: Species::As75,
            e_direction: MillerDirection::new(0, 0, 1).unwrap(),
            b_direction: MillerDirection::new(1, 1, 0).unwrap(),
            f0_hz: 9.6e9,
            t_e_s: 1e-5,
            polarity: Polarity::Bipolar,
            seed: 7,
        }
    }

    fn sample_rows() -> Vec<DatasetRow> {
        vec![
            DatasetRow {
                e_field_v_per_cm: 25.0,
                m_i: HyperfineLine::Projection(-1.5),
                delta_f_hz: -12.5,
                sigma_hz: 2.0,
            },
            DatasetRow {
                e_field_v_per_cm: 25.0,
                m_i: HyperfineLine::Averaged,
                delta_f_hz: -3.25,
                sigma_hz: 1.0,
            },
        ]
    }

    #[test]
    fn csv_round_trip() {
        let ds = EchoPhaseDataset::new(sample_rows(), metadata()).unwrap();
        let text = ds.to_csv_string().unwrap();
        assert!(text.starts_with("e_field_v_per_cm,m_i,delta_f_hz,sigma_hz\n"));
        assert!(text.contains("averaged"));
        let back = EchoPhaseDataset::from_csv_str(&text, metadata()).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn file_round_trip_with_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.csv");
        let ds = EchoPhaseDataset::new(sample_rows(), metadata()).unwrap();
        ds.write(&path).unwrap();
        assert!(dir.path().join("run.meta.json").exists());
        let back = EchoPhaseDataset::read(&path).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn header_mismatch_is_rejected() {
        let bad = "e,v,x,y\n1,2,3,4\n";
        assert!(matches!(
            EchoPhaseDataset::from_csv_str(bad, metadata()),
            Err(Error::InvalidDataset(_))
        ));
    }

    #[test]
    fn negative_sigma_is_rejected() {
        let rows = vec![DatasetRow {
            e_field_v_per_cm: 1.0,
            m_i: HyperfineLine::Averaged,
            delta_f_hz: 0.0,
            sigma_hz: -1.0,
        }];
        assert!(EchoPhaseDataset::new(rows, metadata()).is_err());
    }

    #[test]
    fn field_and_line_enumeration() {
        let ds = EchoPhaseDataset::new(sample_rows(), metadata()).unwrap();
        assert_eq!(ds.field_values(), vec![25.0]);
        assert_eq!(ds.line_labels(), vec![-1.5]);
    }
}
