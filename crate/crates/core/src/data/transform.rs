//! Feature transforms: per-slot statistics, the two sample granularities,
//! and lag-window extraction.

use std::collections::BTreeMap;

use ndarray::Array2;

use super::{
    feature_labels, DataError, FeatureMode, Granularity, MeterSeries, ProfileMatrix, DAYS, SLOTS,
};

/// Per-slot mean over the year, ignoring missing cells.
///
/// Errors with [`DataError::SlotAllMissing`] if any slot has no observation.
pub fn mean_daily_profile(series: &MeterSeries) -> Result<Vec<f64>, DataError> {
    let mut sums = vec![0.0f64; SLOTS];
    let mut counts = vec![0usize; SLOTS];
    for day in 0..DAYS {
        for slot in 0..SLOTS {
            if let Some(v) = series.get(day, slot) {
                sums[slot] += v;
                counts[slot] += 1;
            }
        }
    }
    if let Some(slot) = counts.iter().position(|&c| c == 0) {
        return Err(DataError::SlotAllMissing(slot));
    }
    Ok(sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect())
}

/// Per-slot population standard deviation over the year, ignoring missing
/// cells. A slot observed exactly once has deviation 0.
pub fn slot_std_profile(series: &MeterSeries) -> Result<Vec<f64>, DataError> {
    let means = mean_daily_profile(series)?;
    let mut sq = vec![0.0f64; SLOTS];
    let mut counts = vec![0usize; SLOTS];
    for day in 0..DAYS {
        for slot in 0..SLOTS {
            if let Some(v) = series.get(day, slot) {
                let d = v - means[slot];
                sq[slot] += d * d;
                counts[slot] += 1;
            }
        }
    }
    Ok(sq.iter().zip(&counts).map(|(s, &c)| (s / c as f64).sqrt()).collect())
}

/// Feature vector for one entity under the chosen mode.
pub fn entity_features(series: &MeterSeries, mode: FeatureMode) -> Result<Vec<f64>, DataError> {
    let mut v = mean_daily_profile(series)?;
    if mode == FeatureMode::MeanStd {
        v.extend(slot_std_profile(series)?);
    }
    Ok(v)
}

fn matrix_from_rows(
    ids: Vec<String>,
    rows: Vec<Vec<f64>>,
    granularity: Granularity,
) -> Result<ProfileMatrix<f64>, DataError> {
    let n = rows.len();
    let d = rows.first().map_or(0, Vec::len);
    let mut data = Vec::with_capacity(n * d);
    for r in rows {
        data.extend(r);
    }
    let features = Array2::from_shape_vec((n, d), data).expect("uniform row widths");
    ProfileMatrix::new(ids, features, feature_labels(d), granularity)
}

/// One row per entity, sorted by entity id.
pub fn disaggregated_matrix(
    all: &[MeterSeries],
    mode: FeatureMode,
) -> Result<ProfileMatrix<f64>, DataError> {
    let mut order: Vec<&MeterSeries> = all.iter().collect();
    order.sort_by(|a, b| a.entity_id().cmp(b.entity_id()));
    let mut ids = Vec::with_capacity(order.len());
    let mut rows = Vec::with_capacity(order.len());
    for s in order {
        ids.push(s.entity_id().to_string());
        rows.push(entity_features(s, mode)?);
    }
    matrix_from_rows(ids, rows, Granularity::Disaggregated)
}

/// One row per sector: the element-wise mean of member entities' feature
/// vectors. Rows are sorted by sector id.
pub fn aggregate_by_sector(
    all: &[MeterSeries],
    mode: FeatureMode,
) -> Result<ProfileMatrix<f64>, DataError> {
    let mut by_sector: BTreeMap<&str, Vec<&MeterSeries>> = BTreeMap::new();
    for s in all {
        if s.sector_id().is_empty() {
            return Err(DataError::MissingSector(s.entity_id().to_string()));
        }
        by_sector.entry(s.sector_id()).or_default().push(s);
    }
    let mut ids = Vec::with_capacity(by_sector.len());
    let mut rows = Vec::with_capacity(by_sector.len());
    for (sector, members) in by_sector {
        if members.is_empty() {
            return Err(DataError::EmptySector(sector.to_string()));
        }
        let mut acc: Option<Vec<f64>> = None;
        for m in &members {
            let f = entity_features(m, mode)?;
            match &mut acc {
                None => acc = Some(f),
                Some(a) => a.iter_mut().zip(&f).for_each(|(x, y)| *x += y),
            }
        }
        let mut row = acc.expect("sector has members");
        let k = members.len() as f64;
        row.iter_mut().for_each(|x| *x /= k);
        ids.push(sector.to_string());
        rows.push(row);
    }
    matrix_from_rows(ids, rows, Granularity::Aggregated)
}

/// Keep entities whose cell coverage is at least `threshold`; returns the
/// kept series and the ids of the excluded ones.
pub fn filter_by_coverage(
    all: Vec<MeterSeries>,
    threshold: f64,
) -> (Vec<MeterSeries>, Vec<String>) {
    let mut kept = Vec::with_capacity(all.len());
    let mut dropped = Vec::new();
    for s in all {
        if s.coverage() >= threshold {
            kept.push(s);
        } else {
            dropped.push(s.entity_id().to_string());
        }
    }
    (kept, dropped)
}

/// Lag-window rows from the day-major flattened series.
///
/// Row layout is `(value_t, value_{t-order}, ..., value_{t-1})`; windows
/// containing any missing cell are dropped.
pub fn lag_features(series: &MeterSeries, order: usize) -> Result<Array2<f64>, DataError> {
    if order != 1 && order != 2 {
        return Err(DataError::InvalidLagOrder(order));
    }
    let flat: Vec<Option<f64>> = series.flattened().collect();
    let mut data = Vec::new();
    let mut n_rows = 0usize;
    for t in order..flat.len() {
        let window = &flat[t - order..=t];
        if window.iter().all(Option::is_some) {
            data.push(flat[t].unwrap());
            for lag in &flat[t - order..t] {
                data.push(lag.unwrap());
            }
            n_rows += 1;
        }
    }
    Ok(Array2::from_shape_vec((n_rows, order + 1), data).expect("fixed window width"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series_with(cells: &[(usize, usize, f64)]) -> MeterSeries {
        let mut s = MeterSeries::new("e1", "s1");
        for &(d, sl, v) in cells {
            s.insert(d, sl, v).unwrap();
        }
        s
    }

    #[test]
    fn constant_series_profile() {
        let s = MeterSeries::constant("e1", "s1", 0.5);
        let p = mean_daily_profile(&s).unwrap();
        assert_eq!(p.len(), SLOTS);
        assert!(p.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn partial_slot_average() {
        // Slot 0 observed on two days only; every other slot constant 0.1.
        let mut s = MeterSeries::new("e1", "s1");
        s.insert(0, 0, 0.2).unwrap();
        s.insert(1, 0, 0.4).unwrap();
        for day in 0..DAYS {
            for slot in 1..SLOTS {
                s.insert(day, slot, 0.1).unwrap();
            }
        }
        let p = mean_daily_profile(&s).unwrap();
        assert!((p[0] - 0.3).abs() < 1e-15);
        for slot in 1..SLOTS {
            assert!((p[slot] - 0.1).abs() < 1e-15);
        }
    }

    #[test]
    fn fully_missing_slot_is_an_error() {
        let mut s = MeterSeries::new("e1", "s1");
        for day in 0..DAYS {
            for slot in 0..SLOTS {
                if slot != 7 {
                    s.insert(day, slot, 0.1).unwrap();
                }
            }
        }
        let err = mean_daily_profile(&s).unwrap_err();
        assert!(matches!(err, DataError::SlotAllMissing(7)));
    }

    #[test]
    fn profile_invariant_under_day_permutation() {
        // Move a day's values to another day; slot means are unchanged.
        let mut a = MeterSeries::new("e1", "s1");
        let mut b = MeterSeries::new("e1", "s1");
        for slot in 0..SLOTS {
            let v = 0.1 + slot as f64 * 0.01;
            a.insert(0, slot, v).unwrap();
            a.insert(1, slot, 2.0 * v).unwrap();
            b.insert(300, slot, 2.0 * v).unwrap();
            b.insert(12, slot, v).unwrap();
        }
        assert_eq!(mean_daily_profile(&a).unwrap(), mean_daily_profile(&b).unwrap());
    }

    #[test]
    fn complete_grid_mean_matches_annual_total() {
        let mut s = MeterSeries::new("e1", "s1");
        let mut total = 0.0;
        for day in 0..DAYS {
            for slot in 0..SLOTS {
                let v = 0.05 + ((day * 31 + slot * 7) % 23) as f64 * 0.01;
                s.insert(day, slot, v).unwrap();
                total += v;
            }
        }
        let p = mean_daily_profile(&s).unwrap();
        let slot_mean: f64 = p.iter().sum::<f64>() / SLOTS as f64;
        assert!((slot_mean - total / super::super::CELLS as f64).abs() < 1e-12);
    }

    #[test]
    fn aggregate_two_entities_one_sector() {
        let a = MeterSeries::constant("e1", "sec", 0.2);
        let b = MeterSeries::constant("e2", "sec", 0.4);
        let m = aggregate_by_sector(&[a, b], FeatureMode::Mean).unwrap();
        assert_eq!(m.n_rows(), 1);
        assert_eq!(m.row_ids(), &["sec".to_string()]);
        assert!(m.row(0).iter().all(|&v| (v - 0.3).abs() < 1e-12));
        assert_eq!(m.granularity(), Granularity::Aggregated);
    }

    #[test]
    fn singleton_sector_equals_member_profile() {
        let mut s = MeterSeries::new("e1", "solo");
        for day in 0..DAYS {
            for slot in 0..SLOTS {
                s.insert(day, slot, 0.1 + slot as f64 * 0.003).unwrap();
            }
        }
        let profile = mean_daily_profile(&s).unwrap();
        let m = aggregate_by_sector(std::slice::from_ref(&s), FeatureMode::Mean).unwrap();
        for (x, y) in m.row(0).iter().zip(&profile) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn disaggregated_rows_sorted_and_deterministic() {
        let a = MeterSeries::constant("e2", "s1", 0.2);
        let b = MeterSeries::constant("e1", "s1", 0.4);
        let c = MeterSeries::constant("e3", "s1", 0.4);
        let m = disaggregated_matrix(&[a, b, c], FeatureMode::Mean).unwrap();
        assert_eq!(m.n_rows(), 3);
        assert_eq!(m.row_ids(), &["e1".to_string(), "e2".to_string(), "e3".to_string()]);
        // identical inputs give identical rows
        assert_eq!(m.row(0), m.row(2));
        assert_eq!(m.granularity(), Granularity::Disaggregated);
    }

    #[test]
    fn mean_std_features_are_96_wide() {
        let s = MeterSeries::constant("e1", "s1", 0.5);
        let m = disaggregated_matrix(std::slice::from_ref(&s), FeatureMode::MeanStd).unwrap();
        assert_eq!(m.n_features(), 96);
        assert!((m.features()[[0, 0]] - 0.5).abs() < 1e-15);
        assert_eq!(m.features()[[0, 48]], 0.0); // constant series: zero spread
        assert_eq!(m.feature_names()[95], "f95");
    }

    #[test]
    fn lag_rows_by_definition() {
        let s = series_with(&[(0, 0, 1.0), (0, 1, 2.0), (0, 2, 3.0), (0, 3, 4.0)]);
        let m1 = lag_features(&s, 1).unwrap();
        let m1_rows: Vec<Vec<f64>> = m1.rows().into_iter().map(|r| r.to_vec()).collect();
        assert_eq!(m1_rows[..3], [vec![2.0, 1.0], vec![3.0, 2.0], vec![4.0, 3.0]]);

        let m2 = lag_features(&s, 2).unwrap();
        let m2_rows: Vec<Vec<f64>> = m2.rows().into_iter().map(|r| r.to_vec()).collect();
        assert_eq!(m2_rows[..2], [vec![3.0, 1.0, 2.0], vec![4.0, 2.0, 3.0]]);
    }

    #[test]
    fn lag_drops_windows_with_missing() {
        // [1, missing, 3, 4] then nothing else observed
        let s = series_with(&[(0, 0, 1.0), (0, 2, 3.0), (0, 3, 4.0)]);
        let m = lag_features(&s, 1).unwrap();
        assert_eq!(m.nrows(), 1);
        assert_eq!(m.row(0).to_vec(), vec![4.0, 3.0]);
        assert!(matches!(lag_features(&s, 3), Err(DataError::InvalidLagOrder(3))));
    }

    #[test]
    fn coverage_filter_excludes_sparse_entities() {
        let full = MeterSeries::constant("e1", "s1", 0.1);
        let mut sparse = MeterSeries::new("e2", "s1");
        sparse.insert(0, 0, 1.0).unwrap();
        let (kept, dropped) = filter_by_coverage(vec![full, sparse], 0.9);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].entity_id(), "e1");
        assert_eq!(dropped, vec!["e2".to_string()]);
    }
}
