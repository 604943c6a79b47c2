//! CSV and JSON outputs named `<scenario>_<seed>.{csv,json}`.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use super::ExperimentRecord;
use crate::error::Result;

pub const CSV_COLUMNS: [&str; 5] = ["sweep_value", "criterion", "mean", "std_error", "n"];

fn stem(record: &ExperimentRecord) -> String {
    format!("{}_{}", record.scenario.short_name(), record.config.seed)
}

pub fn csv_path(dir: &Path, record: &ExperimentRecord) -> PathBuf {
    dir.join(format!("{}.csv", stem(record)))
}

pub fn json_path(dir: &Path, record: &ExperimentRecord) -> PathBuf {
    dir.join(format!("{}.json", stem(record)))
}

/// Writes both files into `dir`, creating it if needed, and returns their paths.
pub fn write_outputs(record: &ExperimentRecord, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let csv_file = csv_path(dir, record);
    let mut w = csv::Writer::from_path(&csv_file)?;
    w.write_record(CSV_COLUMNS)?;
    for point in &record.points {
        for a in &point.aggregates {
            w.write_record([
                a.sweep_value.to_string(),
                a.criterion.clone(),
                a.mean.to_string(),
                a.std_error.map(|s| s.to_string()).unwrap_or_default(),
                a.n.to_string(),
            ])?;
        }
    }
    w.flush()?;
    let json_file = json_path(dir, record);
    serde_json::to_writer(BufWriter::new(fs::File::create(&json_file)?), record)?;
    Ok((csv_file, json_file))
}

pub fn read_record(path: &Path) -> Result<ExperimentRecord> {
    Ok(serde_json::from_reader(std::io::BufReader::new(fs::File::open(path)?))?)
}
