//! Seeded synthetic meter population with ground-truth archetype labels.
//!
//! Each entity draws an archetype from the mixing distribution, then a
//! year of readings
//! `max(0, base[slot] * season(day) * wk(day) + day_effect + slot_noise)`.
//! Per-entity generators are derived from the config seed with a fixed
//! splitting function, so output is independent of evaluation order.

mod archetypes;
mod generate;

use thiserror::Error;

pub use archetypes::{default_archetypes, default_archetypes_with_noise, default_mixing};
pub use generate::{assign_sectors, generate};

use crate::data::SLOTS;

/// Tolerance on the mixing-vector sum.
pub const MIXING_SUM_TOL: f64 = 1e-12;
/// Largest allowed seasonal amplitude; keeps the curve inside [0.8, 1.2].
pub const MAX_SEASON_AMPLITUDE: f64 = 0.2;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid population config: {0}")]
    ConfigInvalid(String),
}

/// A ground-truth behavioural class with a characteristic daily shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Archetype {
    pub id: usize,
    /// kWh per half-hour, 48 slots.
    pub base_profile: Vec<f64>,
    /// Standard deviation of the per-day level shift.
    pub day_noise_sd: f64,
    /// Standard deviation of the per-cell noise.
    pub slot_noise_sd: f64,
    /// Multiplier applied on days ≡ 5, 6 (mod 7).
    pub weekend_scale: f64,
}

impl Archetype {
    fn validate(&self) -> Result<(), SynthError> {
        if self.base_profile.len() != SLOTS {
            return Err(SynthError::ConfigInvalid(format!(
                "archetype {}: base_profile must have {SLOTS} slots, got {}",
                self.id,
                self.base_profile.len()
            )));
        }
        if self.base_profile.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(SynthError::ConfigInvalid(format!(
                "archetype {}: base_profile must be finite and non-negative",
                self.id
            )));
        }
        if self.day_noise_sd < 0.0 || self.slot_noise_sd < 0.0 {
            return Err(SynthError::ConfigInvalid(format!(
                "archetype {}: noise standard deviations must be >= 0",
                self.id
            )));
        }
        if !(self.weekend_scale > 0.0) {
            return Err(SynthError::ConfigInvalid(format!(
                "archetype {}: weekend_scale must be positive",
                self.id
            )));
        }
        Ok(())
    }
}

/// How entities are grouped into sectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SectorMixing {
    /// Sectors hold a single archetype where counts permit.
    Homogeneous,
    /// Uniform random sector per entity.
    Mixed,
}

impl std::str::FromStr for SectorMixing {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "homogeneous" => Ok(SectorMixing::Homogeneous),
            "mixed" => Ok(SectorMixing::Mixed),
            other => Err(format!("unknown sector mixing `{other}`")),
        }
    }
}

/// Full description of a synthetic population.
#[derive(Debug, Clone)]
pub struct PopulationConfig {
    pub archetypes: Vec<Archetype>,
    /// Probability of each archetype; must sum to 1 within [`MIXING_SUM_TOL`].
    pub mixing: Vec<f64>,
    pub n_entities: usize,
    pub n_sectors: usize,
    pub sector_mixing: SectorMixing,
    pub seed: u64,
    /// Amplitude of the annual seasonal curve; 0 disables it.
    pub season_amplitude: f64,
}

impl PopulationConfig {
    /// Default nine-archetype population.
    pub fn with_defaults(
        n_entities: usize,
        n_sectors: usize,
        sector_mixing: SectorMixing,
        seed: u64,
    ) -> Self {
        Self {
            archetypes: default_archetypes(),
            mixing: default_mixing(),
            n_entities,
            n_sectors,
            sector_mixing,
            seed,
            season_amplitude: MAX_SEASON_AMPLITUDE,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.archetypes.is_empty() {
            return Err(SynthError::ConfigInvalid("no archetypes".into()));
        }
        for a in &self.archetypes {
            a.validate()?;
        }
        if self.mixing.len() != self.archetypes.len() {
            return Err(SynthError::ConfigInvalid(format!(
                "mixing has {} entries for {} archetypes",
                self.mixing.len(),
                self.archetypes.len()
            )));
        }
        if self.mixing.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(SynthError::ConfigInvalid("mixing entries must be >= 0".into()));
        }
        let sum: f64 = self.mixing.iter().sum();
        if (sum - 1.0).abs() > MIXING_SUM_TOL {
            return Err(SynthError::ConfigInvalid(format!(
                "mixing sums to {sum}, must be 1 within {MIXING_SUM_TOL}"
            )));
        }
        if self.n_entities == 0 {
            return Err(SynthError::ConfigInvalid("n_entities must be >= 1".into()));
        }
        if self.n_sectors == 0 || self.n_sectors > self.n_entities {
            return Err(SynthError::ConfigInvalid(format!(
                "n_sectors must be in 1..={}, got {}",
                self.n_entities, self.n_sectors
            )));
        }
        if !(0.0..=MAX_SEASON_AMPLITUDE).contains(&self.season_amplitude) {
            return Err(SynthError::ConfigInvalid(format!(
                "season_amplitude must be in [0, {MAX_SEASON_AMPLITUDE}], got {}",
                self.season_amplitude
            )));
        }
        Ok(())
    }
}
