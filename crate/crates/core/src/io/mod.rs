//! Configuration parsing and result export.

pub mod config;
pub mod csv;
pub mod manifest;
pub mod vtk;

use std::path::Path;

pub use config::{config_to_string, parse_config};
pub use csv::{read_csv, write_csv, CsvRow, CSV_HEADER};
pub use manifest::{RunManifest, MANIFEST_FILE};
pub use vtk::{write_vtk, VTK_QUADRATIC_TRIANGLE};

use crate::error::{Error, Result};
use crate::study::{ContourGrid, MmsTable, StudyConfig, SweepTable};

pub const THREADS_ENV: &str = "PENALFLOW_THREADS";

/// Thread budget: `PENALFLOW_THREADS` when set, otherwise `configured`.
pub fn threads_from_env(configured: usize) -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&t| t >= 1)
            .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        Err(_) => Ok(configured),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn to_json<T: serde::Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).unwrap_or(serde_json::Value::Null)
}

/// Writes `sweep.csv` and the manifest into `dir`.
pub fn write_sweep_results(dir: &Path, config: &StudyConfig, table: &SweepTable, seconds: f64) -> Result<RunManifest> {
    create_dir(dir)?;
    let mut m = RunManifest::new("sweep", Some(config), Some(&table.mesh_fingerprint));
    m.reference_fingerprint = Some(table.reference_fingerprint.clone());
    m.add_output(dir, "sweep.csv", &csv::csv_bytes(&table.rows)?)?;
    m.solves = table.rows.iter().map(Into::into).collect();
    m.summary = serde_json::json!({
        "fingerprint": table.fingerprint,
        "reference_certificate": table.reference_certificate,
        "fits": to_json(&table.fits),
    });
    m.time("total", seconds);
    m.write(dir)?;
    Ok(m)
}

/// Writes `contour.csv` (m-major order) and the manifest into `dir`.
pub fn write_contour_results(dir: &Path, config: &StudyConfig, grid: &ContourGrid, seconds: f64) -> Result<RunManifest> {
    create_dir(dir)?;
    let mut m = RunManifest::new("contour", Some(config), Some(&grid.mesh_fingerprint));
    m.reference_fingerprint = Some(grid.reference_fingerprint.clone());
    m.add_output(dir, "contour.csv", &csv::csv_bytes(grid.rows())?)?;
    m.solves = grid.rows().map(Into::into).collect();
    m.summary = serde_json::json!({
        "fingerprint": grid.fingerprint,
        "m_axis": grid.m_axis,
        "n_axis": grid.n_axis,
        "max_law": to_json(&grid.max_law),
    });
    m.time("total", seconds);
    m.write(dir)?;
    Ok(m)
}

pub const MMS_HEADER: &str = "level,h,triangles,err_L2,err_H1semi,newton_iters";

pub fn mms_csv(table: &MmsTable) -> String {
    let mut s = format!("{MMS_HEADER}\n");
    for r in &table.rows {
        s += &format!(
            "{},{},{},{},{},{}\n",
            r.level,
            csv::format_float(r.h),
            r.triangles,
            csv::format_float(r.err_L2),
            csv::format_float(r.err_H1semi),
            r.newton_iterations
        );
    }
    s
}
