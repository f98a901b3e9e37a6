//! Data model for half-hourly consumption records.
//!
//! A year is exactly [`DAYS`]×[`SLOTS`] half-hour cells. Missing cells are
//! allowed in a [`MeterSeries`] and are ignored (never imputed) by the
//! feature transforms; entities with insufficient coverage are excluded by
//! [`filter_by_coverage`].

mod csv_io;
mod transform;

use ndarray::Array2;
use thiserror::Error;

use crate::scalar::Scalar;

pub use csv_io::{
    load_labels, load_matrix, load_readings, write_labels, write_matrix, write_readings, CsvSchema,
};
pub use transform::{
    aggregate_by_sector, disaggregated_matrix, entity_features, filter_by_coverage, lag_features,
    mean_daily_profile, slot_std_profile,
};

/// Days in the modeled year.
pub const DAYS: usize = 365;
/// Half-hour slots per day.
pub const SLOTS: usize = 48;
/// Total cells in a complete grid.
pub const CELLS: usize = DAYS * SLOTS;

/// Errors raised by ingestion, validation and the feature transforms.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("duplicate reading for entity {entity_id} at day {day}, slot {slot}")]
    DuplicateReading { entity_id: String, day: usize, slot: usize },
    #[error("no data rows in file")]
    EmptyFile,
    #[error("slot {0} has no observations across the year")]
    SlotAllMissing(usize),
    #[error("reading out of range: day {day}, slot {slot}")]
    IndexOutOfRange { day: usize, slot: usize },
    #[error("invalid kwh value {value} (must be finite and >= 0)")]
    InvalidKwh { value: f64 },
    #[error("series for entity {0} has no sector id")]
    MissingSector(String),
    #[error("sector {0} has no member entities")]
    EmptySector(String),
    #[error("matrix rows must have unique ids; {0} repeats")]
    DuplicateRowId(String),
    #[error("matrix entry ({row},{col}) is not finite")]
    NonFiniteEntry { row: usize, col: usize },
    #[error("matrix must be at least 1x1, got {rows}x{cols}")]
    EmptyMatrix { rows: usize, cols: usize },
    #[error("labels length {labels} does not match matrix rows {rows}")]
    LabelLengthMismatch { labels: usize, rows: usize },
    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error("classification needs at least 2 classes, got {0}")]
    TooFewClasses(usize),
    #[error("lag order must be 1 or 2, got {0}")]
    InvalidLagOrder(usize),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// One validated half-hourly observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Reading {
    pub entity_id: String,
    pub day_index: usize,
    pub slot_index: usize,
    pub kwh: f64,
}

impl Reading {
    pub fn new(
        entity_id: impl Into<String>,
        day_index: usize,
        slot_index: usize,
        kwh: f64,
    ) -> Result<Self, DataError> {
        if day_index >= DAYS || slot_index >= SLOTS {
            return Err(DataError::IndexOutOfRange { day: day_index, slot: slot_index });
        }
        if !kwh.is_finite() || kwh < 0.0 {
            return Err(DataError::InvalidKwh { value: kwh });
        }
        Ok(Self { entity_id: entity_id.into(), day_index, slot_index, kwh })
    }
}

/// One entity's year of readings on the fixed 365×48 grid.
///
/// Cells are optional; `NaN` marks a missing observation internally and is
/// never exposed through the accessors.
#[derive(Debug, Clone)]
pub struct MeterSeries {
    entity_id: String,
    sector_id: String,
    values: Vec<f64>,
}

impl PartialEq for MeterSeries {
    fn eq(&self, other: &Self) -> bool {
        // missing cells (NaN) compare equal to each other
        self.entity_id == other.entity_id
            && self.sector_id == other.sector_id
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a == b || (a.is_nan() && b.is_nan()))
    }
}

impl MeterSeries {
    /// Empty (all-missing) series.
    pub fn new(entity_id: impl Into<String>, sector_id: impl Into<String>) -> Self {
        Self {
            entity_id: entity_id.into(),
            sector_id: sector_id.into(),
            values: vec![f64::NAN; CELLS],
        }
    }

    /// Complete grid holding the same value everywhere.
    pub fn constant(entity_id: impl Into<String>, sector_id: impl Into<String>, kwh: f64) -> Self {
        Self {
            entity_id: entity_id.into(),
            sector_id: sector_id.into(),
            values: vec![kwh; CELLS],
        }
    }

    pub fn entity_id(&self) -> &str {
        &self.entity_id
    }

    pub fn sector_id(&self) -> &str {
        &self.sector_id
    }

    pub fn set_sector_id(&mut self, sector_id: impl Into<String>) {
        self.sector_id = sector_id.into();
    }

    /// Insert a reading; a cell may only be written once.
    pub fn insert(&mut self, day: usize, slot: usize, kwh: f64) -> Result<(), DataError> {
        if day >= DAYS || slot >= SLOTS {
            return Err(DataError::IndexOutOfRange { day, slot });
        }
        if !kwh.is_finite() || kwh < 0.0 {
            return Err(DataError::InvalidKwh { value: kwh });
        }
        let cell = &mut self.values[day * SLOTS + slot];
        if !cell.is_nan() {
            return Err(DataError::DuplicateReading {
                entity_id: self.entity_id.clone(),
                day,
                slot,
            });
        }
        *cell = kwh;
        Ok(())
    }

    /// Overwrite a cell unconditionally (generator use).
    pub fn put(&mut self, day: usize, slot: usize, kwh: f64) {
        debug_assert!(day < DAYS && slot < SLOTS && kwh >= 0.0 && kwh.is_finite());
        self.values[day * SLOTS + slot] = kwh;
    }

    pub fn get(&self, day: usize, slot: usize) -> Option<f64> {
        let v = self.values[day * SLOTS + slot];
        if v.is_nan() {
            None
        } else {
            Some(v)
        }
    }

    /// Fraction of the 17,520 cells that hold an observation.
    pub fn coverage(&self) -> f64 {
        let present = self.values.iter().filter(|v| !v.is_nan()).count();
        present as f64 / CELLS as f64
    }

    /// Cells in day-major time order, `None` where missing.
    pub fn flattened(&self) -> impl Iterator<Item = Option<f64>> + '_ {
        self.values.iter().map(|v| if v.is_nan() { None } else { Some(*v) })
    }
}

/// Whether matrix rows are individual entities or sector averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Granularity {
    Disaggregated,
    Aggregated,
}

impl Granularity {
    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Disaggregated => "disaggregated",
            Granularity::Aggregated => "aggregated",
        }
    }
}

impl std::str::FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "disaggregated" => Ok(Granularity::Disaggregated),
            "aggregated" => Ok(Granularity::Aggregated),
            other => Err(format!("unknown granularity `{other}`")),
        }
    }
}

/// Which per-slot statistics form the feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeatureMode {
    /// 48 per-slot means (the default design matrix).
    #[default]
    Mean,
    /// 48 per-slot means followed by 48 per-slot standard deviations.
    MeanStd,
}

impl std::str::FromStr for FeatureMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mean" => Ok(FeatureMode::Mean),
            "mean+std" => Ok(FeatureMode::MeanStd),
            other => Err(format!("unknown feature mode `{other}` (use mean or mean+std)")),
        }
    }
}

/// N×D design matrix with row identities and feature labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileMatrix<T> {
    row_ids: Vec<String>,
    features: Array2<T>,
    feature_names: Vec<String>,
    granularity: Granularity,
}

impl<T: Scalar> ProfileMatrix<T> {
    /// Validate and build a matrix: finite entries, unique ids, N,D ≥ 1.
    pub fn new(
        row_ids: Vec<String>,
        features: Array2<T>,
        feature_names: Vec<String>,
        granularity: Granularity,
    ) -> Result<Self, DataError> {
        let (n, d) = features.dim();
        if n == 0 || d == 0 {
            return Err(DataError::EmptyMatrix { rows: n, cols: d });
        }
        assert_eq!(row_ids.len(), n, "row id count must match matrix rows");
        assert_eq!(feature_names.len(), d, "feature name count must match columns");
        let mut seen = std::collections::HashSet::new();
        for id in &row_ids {
            if !seen.insert(id.as_str()) {
                return Err(DataError::DuplicateRowId(id.clone()));
            }
        }
        for ((i, j), v) in features.indexed_iter() {
            if !v.is_finite() {
                return Err(DataError::NonFiniteEntry { row: i, col: j });
            }
        }
        Ok(Self { row_ids, features, feature_names, granularity })
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn features(&self) -> &Array2<T> {
        &self.features
    }

    pub fn row(&self, i: usize) -> ndarray::ArrayView1<'_, T> {
        self.features.row(i)
    }

    /// New matrix holding the given subset of rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let rows: Vec<String> = indices.iter().map(|&i| self.row_ids[i].clone()).collect();
        let mut data = Vec::with_capacity(indices.len() * self.n_features());
        for &i in indices {
            data.extend(self.features.row(i).iter().copied());
        }
        let features = Array2::from_shape_vec((indices.len(), self.n_features()), data)
            .expect("subset shape is consistent");
        Self {
            row_ids: rows,
            features,
            feature_names: self.feature_names.clone(),
            granularity: self.granularity,
        }
    }
}

/// Default feature column labels `f00`, `f01`, ...
pub fn feature_labels(d: usize) -> Vec<String> {
    (0..d).map(|j| format!("f{j:02}")).collect()
}

/// A profile matrix plus integer class labels in `0..n_classes`.
#[derive(Debug, Clone)]
pub struct LabeledDataset<T> {
    pub matrix: ProfileMatrix<T>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
}

impl<T: Scalar> LabeledDataset<T> {
    pub fn new(
        matrix: ProfileMatrix<T>,
        labels: Vec<usize>,
        n_classes: usize,
    ) -> Result<Self, DataError> {
        if labels.len() != matrix.n_rows() {
            return Err(DataError::LabelLengthMismatch {
                labels: labels.len(),
                rows: matrix.n_rows(),
            });
        }
        if n_classes < 2 {
            return Err(DataError::TooFewClasses(n_classes));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(DataError::LabelOutOfRange { label: bad, n_classes });
        }
        Ok(Self { matrix, labels, n_classes })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Subset of rows (same class space), in the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            matrix: self.matrix.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            n_classes: self.n_classes,
        }
    }

    /// Per-class sample counts.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn reading_rejects_out_of_range_and_negative() {
        assert!(Reading::new("e1", 365, 0, 1.0).is_err());
        assert!(Reading::new("e1", 0, 48, 1.0).is_err());
        assert!(Reading::new("e1", 0, 0, -0.1).is_err());
        assert!(Reading::new("e1", 0, 0, f64::INFINITY).is_err());
        assert!(Reading::new("e1", 364, 47, 0.0).is_ok());
    }

    #[test]
    fn series_insert_once() {
        let mut s = MeterSeries::new("e1", "s1");
        s.insert(0, 0, 0.5).unwrap();
        let err = s.insert(0, 0, 0.7).unwrap_err();
        assert!(matches!(err, DataError::DuplicateReading { day: 0, slot: 0, .. }));
        assert_eq!(s.get(0, 0), Some(0.5));
        assert_eq!(s.get(0, 1), None);
    }

    #[test]
    fn coverage_counts_cells() {
        let mut s = MeterSeries::new("e1", "s1");
        assert_eq!(s.coverage(), 0.0);
        s.insert(3, 7, 1.0).unwrap();
        assert!((s.coverage() - 1.0 / CELLS as f64).abs() < 1e-15);
        let full = MeterSeries::constant("e2", "s1", 0.2);
        assert_eq!(full.coverage(), 1.0);
    }

    #[test]
    fn matrix_validation() {
        let m = ProfileMatrix::new(
            vec!["a".into(), "a".into()],
            array![[1.0_f64], [2.0]],
            feature_labels(1),
            Granularity::Disaggregated,
        );
        assert!(matches!(m, Err(DataError::DuplicateRowId(_))));

        let m = ProfileMatrix::new(
            vec!["a".into(), "b".into()],
            array![[1.0_f64], [f64::NAN]],
            feature_labels(1),
            Granularity::Disaggregated,
        );
        assert!(matches!(m, Err(DataError::NonFiniteEntry { row: 1, col: 0 })));
    }

    #[test]
    fn labeled_dataset_validation() {
        let m = ProfileMatrix::new(
            vec!["a".into(), "b".into()],
            array![[1.0_f64], [2.0]],
            feature_labels(1),
            Granularity::Disaggregated,
        )
        .unwrap();
        assert!(matches!(
            LabeledDataset::new(m.clone(), vec![0], 2),
            Err(DataError::LabelLengthMismatch { .. })
        ));
        assert!(matches!(
            LabeledDataset::new(m.clone(), vec![0, 0], 1),
            Err(DataError::TooFewClasses(1))
        ));
        assert!(matches!(
            LabeledDataset::new(m.clone(), vec![0, 2], 2),
            Err(DataError::LabelOutOfRange { label: 2, .. })
        ));
        let ds = LabeledDataset::new(m, vec![0, 1], 2).unwrap();
        assert_eq!(ds.class_counts(), vec![1, 1]);
    }

    #[test]
    fn select_rows_keeps_order() {
        let m = ProfileMatrix::new(
            vec!["a".into(), "b".into(), "c".into()],
            array![[1.0_f64], [2.0], [3.0]],
            feature_labels(1),
            Granularity::Disaggregated,
        )
        .unwrap();
        let sub = m.select_rows(&[2, 0]);
        assert_eq!(sub.row_ids(), &["c".to_string(), "a".to_string()]);
        assert_eq!(sub.features()[[0, 0]], 3.0);
        assert_eq!(sub.features()[[1, 0]], 1.0);
    }
}
