use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{ScanResult, ScanAxis};
use crate::Result;

/// Files written for one scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanFiles {
    pub records: PathBuf,
    pub points: PathBuf,
    pub long: PathBuf,
    pub metadata: PathBuf,
}

impl ScanFiles {
    pub fn all(&self) -> [&Path; 4] {
        [&self.records, &self.points, &self.long, &self.metadata]
    }
}

#[derive(Serialize)]
struct LongRow<'a> {
    axis: &'a str,
    axis_unit: &'a str,
    axis_value: f64,
    temperature_k: f64,
    larmor_hz: f64,
    pump_power_w: f64,
    quantity: &'a str,
    value: f64,
}

#[derive(Serialize)]
struct SeedEntry {
    axis_value: f64,
    repeat: usize,
    seed: u64,
}

#[derive(Serialize)]
struct Metadata<'a> {
    axis: ScanAxis,
    axis_unit: &'a str,
    master_seed: u64,
    repeats: usize,
    values: Vec<f64>,
    failed_records: usize,
    seeds: Vec<SeedEntry>,
    config: &'a crate::config::CellConfig,
    constants: serde_json::Value,
}

/// Writes `records.csv`, `points.csv`, `long.csv` and `metadata.json` into
/// `dir`. The content depends only on the scan result.
pub fn write_scan(result: &ScanResult, dir: &Path) -> Result<ScanFiles> {
    std::fs::create_dir_all(dir)?;
    let files = ScanFiles {
        records: dir.join("records.csv"),
        points: dir.join("points.csv"),
        long: dir.join("long.csv"),
        metadata: dir.join("metadata.json"),
    };

    let mut w = csv::Writer::from_path(&files.records)?;
    for r in &result.records {
        w.serialize(r)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(&files.points)?;
    for p in &result.points {
        w.serialize(p)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(&files.long)?;
    let axis = result.axis;
    for p in &result.points {
        let cell = result.config.with_axis_value(axis, p.axis_value);
        for (quantity, value) in [
            ("amplitude", p.amplitude),
            ("fwhm_hz", p.fwhm_hz),
            ("fwhm_sigma_hz", p.fwhm_sigma_hz),
            ("center_hz", p.center_hz),
            ("model_fwhm_hz", p.model_fwhm_hz),
        ] {
            w.serialize(LongRow {
                axis: axis.name(),
                axis_unit: axis.unit(),
                axis_value: p.axis_value,
                temperature_k: cell.temperature_k,
                larmor_hz: cell.field.larmor_hz,
                pump_power_w: cell.pump.power_w,
                quantity,
                value,
            })?;
        }
    }
    w.flush()?;

    let constants: serde_json::Value = serde_json::from_str(&result.config.constants().to_json_string()?)?;
    let metadata = Metadata {
        axis,
        axis_unit: axis.unit(),
        master_seed: result.master_seed,
        repeats: result.repeats,
        values: result.axis_values(),
        failed_records: result.records.iter().filter(|r| !r.ok).count(),
        seeds: result
            .records
            .iter()
            .map(|r| SeedEntry { axis_value: r.axis_value, repeat: r.repeat, seed: r.seed })
            .collect(),
        config: &result.config,
        constants,
    };
    std::fs::write(&files.metadata, serde_json::to_string_pretty(&metadata)? + "\n")?;
    Ok(files)
}
