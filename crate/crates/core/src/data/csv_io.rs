//! CSV formats: raw readings, exported profile matrices, and label files.
//!
//! Readings use the header `entity_id,sector_id,day_index,slot_index,kwh`;
//! missing cells are simply absent. Matrix exports use `row_id,f00..` with
//! values at 6 significant digits. Label files are `row_id,<label column>`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::Array2;

use super::{
    feature_labels, DataError, Granularity, MeterSeries, ProfileMatrix, DAYS, SLOTS,
};
use crate::scalar::Scalar;

/// Column mapping for reading ingestion. Defaults to the canonical header.
#[derive(Debug, Clone)]
pub struct CsvSchema {
    pub entity_id: String,
    pub sector_id: String,
    pub day_index: String,
    pub slot_index: String,
    pub kwh: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            entity_id: "entity_id".into(),
            sector_id: "sector_id".into(),
            day_index: "day_index".into(),
            slot_index: "slot_index".into(),
            kwh: "kwh".into(),
        }
    }
}

fn malformed(line: u64, reason: impl Into<String>) -> DataError {
    DataError::MalformedRow { line, reason: reason.into() }
}

/// Load readings into one [`MeterSeries`] per entity, sorted by entity id.
pub fn load_readings(path: &Path, schema: &CsvSchema) -> Result<Vec<MeterSeries>, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => DataError::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("{}: {e}", path.display()),
            )),
            _ => malformed(0, e.to_string()),
        })?;

    let headers = reader.headers().map_err(|e| malformed(1, e.to_string()))?.clone();
    let col = |name: &str| -> Result<usize, DataError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| malformed(1, format!("missing column `{name}`")))
    };
    let c_entity = col(&schema.entity_id)?;
    let c_sector = col(&schema.sector_id)?;
    let c_day = col(&schema.day_index)?;
    let c_slot = col(&schema.slot_index)?;
    let c_kwh = col(&schema.kwh)?;

    let mut series: BTreeMap<String, MeterSeries> = BTreeMap::new();
    let mut rows = 0u64;
    for record in reader.records() {
        let record = record.map_err(|e| malformed(0, e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        rows += 1;
        let field = |i: usize| -> Result<&str, DataError> {
            record.get(i).ok_or_else(|| malformed(line, "short row"))
        };
        let entity = field(c_entity)?.to_string();
        let sector = field(c_sector)?.to_string();
        if entity.is_empty() {
            return Err(malformed(line, "empty entity_id"));
        }
        let day_raw = field(c_day)?;
        let day: usize = day_raw
            .parse()
            .map_err(|_| malformed(line, format!("bad day_index `{day_raw}`")))?;
        let slot_raw = field(c_slot)?;
        let slot: usize = slot_raw
            .parse()
            .map_err(|_| malformed(line, format!("bad slot_index `{slot_raw}`")))?;
        let kwh_raw = field(c_kwh)?;
        let kwh: f64 = kwh_raw
            .parse()
            .map_err(|_| malformed(line, format!("bad kwh `{kwh_raw}`")))?;
        if day >= DAYS {
            return Err(malformed(line, format!("day_index {day} out of range 0..{DAYS}")));
        }
        if slot >= SLOTS {
            return Err(malformed(line, format!("slot_index {slot} out of range 0..{SLOTS}")));
        }
        if !kwh.is_finite() || kwh < 0.0 {
            return Err(malformed(line, format!("kwh {kwh} must be finite and >= 0")));
        }
        let s = series
            .entry(entity.clone())
            .or_insert_with(|| MeterSeries::new(entity.clone(), sector.clone()));
        if s.sector_id() != sector {
            return Err(malformed(
                line,
                format!("entity {entity} maps to sectors {} and {sector}", s.sector_id()),
            ));
        }
        s.insert(day, slot, kwh)?;
    }
    if rows == 0 {
        return Err(DataError::EmptyFile);
    }
    Ok(series.into_values().collect())
}

/// Write readings in the canonical format, rows sorted by (entity, day,
/// slot). `kwh` uses the shortest round-trip decimal, so load → write →
/// load is the identity.
pub fn write_readings(path: &Path, all: &[MeterSeries]) -> Result<(), DataError> {
    let mut order: Vec<&MeterSeries> = all.iter().collect();
    order.sort_by(|a, b| a.entity_id().cmp(b.entity_id()));
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "entity_id,sector_id,day_index,slot_index,kwh")?;
    for s in order {
        for day in 0..DAYS {
            for slot in 0..SLOTS {
                if let Some(v) = s.get(day, slot) {
                    writeln!(w, "{},{},{day},{slot},{v}", s.entity_id(), s.sector_id())?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// 6-significant-digit rendering used in matrix exports.
pub fn fmt_sig6(v: f64) -> String {
    format!("{v:.5e}")
}

/// Export a matrix as `row_id,f00..`, 6 significant digits per value.
pub fn write_matrix<T: Scalar>(path: &Path, matrix: &ProfileMatrix<T>) -> Result<(), DataError> {
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "row_id")?;
    for name in matrix.feature_names() {
        write!(w, ",{name}")?;
    }
    writeln!(w)?;
    for (i, id) in matrix.row_ids().iter().enumerate() {
        write!(w, "{id}")?;
        for v in matrix.row(i) {
            write!(w, ",{}", fmt_sig6(v.to64()))?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Load a matrix export back into memory.
pub fn load_matrix<T: Scalar>(
    path: &Path,
    granularity: Granularity,
) -> Result<ProfileMatrix<T>, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| malformed(0, e.to_string()))?;
    let headers = reader.headers().map_err(|e| malformed(1, e.to_string()))?;
    if headers.get(0) != Some("row_id") {
        return Err(malformed(1, "matrix file must start with a row_id column"));
    }
    let d = headers.len().saturating_sub(1);
    if d == 0 {
        return Err(malformed(1, "matrix file has no feature columns"));
    }
    let mut ids = Vec::new();
    let mut data: Vec<T> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| malformed(0, e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != d + 1 {
            return Err(malformed(line, format!("expected {} fields, got {}", d + 1, record.len())));
        }
        ids.push(record.get(0).unwrap().to_string());
        for j in 1..=d {
            let raw = record.get(j).unwrap();
            let v: f64 = raw.parse().map_err(|_| malformed(line, format!("bad value `{raw}`")))?;
            data.push(T::of(v));
        }
    }
    if ids.is_empty() {
        return Err(DataError::EmptyFile);
    }
    let n = ids.len();
    let features = Array2::from_shape_vec((n, d), data).expect("consistent row widths");
    ProfileMatrix::new(ids, features, feature_labels(d), granularity)
}

/// Write `(row_id, integer label)` pairs under the given label column name.
pub fn write_labels(
    path: &Path,
    column: &str,
    ids: &[String],
    labels: &[usize],
) -> Result<(), DataError> {
    assert_eq!(ids.len(), labels.len());
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "row_id,{column}")?;
    for (id, l) in ids.iter().zip(labels) {
        writeln!(w, "{id},{l}")?;
    }
    w.flush()?;
    Ok(())
}

/// Load `(row_id, integer label)` pairs in file order.
pub fn load_labels(path: &Path) -> Result<Vec<(String, usize)>, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| malformed(0, e.to_string()))?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| malformed(0, e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let id = record.get(0).ok_or_else(|| malformed(line, "missing row_id"))?.to_string();
        let raw = record.get(1).ok_or_else(|| malformed(line, "missing label"))?;
        let label: usize =
            raw.parse().map_err(|_| malformed(line, format!("bad label `{raw}`")))?;
        out.push((id, label));
    }
    if out.is_empty() {
        return Err(DataError::EmptyFile);
    }
    Ok(out)
}
