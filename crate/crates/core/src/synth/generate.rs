//! Population generation and sector assignment.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{PopulationConfig, SectorMixing, SynthError};
use crate::data::{MeterSeries, DAYS, SLOTS};
use crate::rng::stream_rng;

/// Stream index used for the sector-assignment generator, kept clear of
/// the per-entity streams (which use the entity index).
const SECTOR_STREAM: u64 = 1 << 40;

fn season(day: usize, amplitude: f64) -> f64 {
    1.0 + amplitude * (std::f64::consts::TAU * day as f64 / DAYS as f64).cos()
}

fn is_weekend(day: usize) -> bool {
    matches!(day % 7, 5 | 6)
}

/// Generate the population: one complete-grid series per entity plus the
/// ground-truth `(entity_id, archetype_id)` pairs, sorted by entity id.
///
/// Deterministic given the config (including its seed).
pub fn generate(
    config: &PopulationConfig,
) -> Result<(Vec<MeterSeries>, Vec<(String, usize)>), SynthError> {
    config.validate()?;
    let width = entity_id_width(config.n_entities);

    // Per-archetype samplers; None when the deviation is zero.
    let day_noise: Vec<Option<Normal<f64>>> = config
        .archetypes
        .iter()
        .map(|a| (a.day_noise_sd > 0.0).then(|| Normal::new(0.0, a.day_noise_sd).unwrap()))
        .collect();
    let slot_noise: Vec<Option<Normal<f64>>> = config
        .archetypes
        .iter()
        .map(|a| (a.slot_noise_sd > 0.0).then(|| Normal::new(0.0, a.slot_noise_sd).unwrap()))
        .collect();

    let mut all = Vec::with_capacity(config.n_entities);
    let mut truth = Vec::with_capacity(config.n_entities);
    let mut drawn = Vec::with_capacity(config.n_entities);
    for e in 0..config.n_entities {
        let mut rng = stream_rng(config.seed, e as u64);
        let arch_idx = sample_index(&config.mixing, rng.gen::<f64>());
        let arch = &config.archetypes[arch_idx];
        let entity_id = format!("e{e:0width$}");

        let mut series = MeterSeries::new(entity_id.clone(), "");
        for day in 0..DAYS {
            let scale = season(day, config.season_amplitude)
                * if is_weekend(day) { arch.weekend_scale } else { 1.0 };
            let day_effect = day_noise[arch_idx].map_or(0.0, |n| n.sample(&mut rng));
            for slot in 0..SLOTS {
                let noise = slot_noise[arch_idx].map_or(0.0, |n| n.sample(&mut rng));
                let v = (arch.base_profile[slot] * scale + day_effect + noise).max(0.0);
                series.put(day, slot, v);
            }
        }
        all.push(series);
        truth.push((entity_id, arch.id));
        drawn.push(arch_idx);
    }

    let sectors = assign_sectors(&drawn, config.n_sectors, config.sector_mixing, config.seed);
    let sector_width = sector_id_width(config.n_sectors);
    for (series, sector) in all.iter_mut().zip(&sectors) {
        series.set_sector_id(format!("s{sector:0sector_width$}"));
    }
    Ok((all, truth))
}

/// Sector index per entity.
///
/// `Homogeneous` sorts entities by archetype and cuts the order into
/// near-equal contiguous chunks, so sectors are pure whenever counts
/// permit. `Mixed` draws a uniform sector per entity.
pub fn assign_sectors(
    archetype_per_entity: &[usize],
    n_sectors: usize,
    mode: SectorMixing,
    seed: u64,
) -> Vec<usize> {
    assert!(n_sectors >= 1, "n_sectors must be >= 1");
    let n = archetype_per_entity.len();
    match mode {
        SectorMixing::Homogeneous => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by_key(|&i| (archetype_per_entity[i], i));
            let mut sectors = vec![0usize; n];
            for (pos, &entity) in order.iter().enumerate() {
                sectors[entity] = pos * n_sectors / n;
            }
            sectors
        }
        SectorMixing::Mixed => {
            let mut rng = stream_rng(seed, SECTOR_STREAM);
            (0..n).map(|_| rng.gen_range(0..n_sectors)).collect()
        }
    }
}

fn sample_index(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

fn entity_id_width(n: usize) -> usize {
    n.saturating_sub(1).max(1).to_string().len()
}

fn sector_id_width(n: usize) -> usize {
    n.saturating_sub(1).max(1).to_string().len()
}
