//! The nine default behavioural archetypes.
//!
//! Shapes span the usual residential patterns: single morning or evening
//! peaks, a dual peak, flat profiles at two levels, daytime occupancy,
//! night-active (storage-heating style), very low usage, and a
//! high-variance profile. Default mixing follows the disaggregated segment
//! shares, with one entry nudged by 0.001 so the vector sums to 1.

use super::Archetype;
use crate::data::SLOTS;

/// Default mixing weights for [`default_archetypes`].
pub fn default_mixing() -> Vec<f64> {
    // Shares for segments 1..9; 0.200 -> 0.199 absorbs the rounding excess.
    vec![0.157, 0.142, 0.014, 0.059, 0.199, 0.034, 0.136, 0.225, 0.034]
}

/// Unnormalized bell bump centred at `center` (hours) with width `width`.
fn bump(hour: f64, center: f64, width: f64) -> f64 {
    let d = hour - center;
    (-d * d / (2.0 * width * width)).exp()
}

/// Bump on the 24h circle, for shapes that straddle midnight.
fn wrapped_bump(hour: f64, center: f64, width: f64) -> f64 {
    let d = (hour - center).abs();
    let d = d.min(24.0 - d);
    (-d * d / (2.0 * width * width)).exp()
}

fn profile(f: impl Fn(f64) -> f64) -> Vec<f64> {
    (0..SLOTS).map(|s| f(s as f64 * 0.5)).collect()
}

/// Nine archetypes with mild noise defaults; pass `scale` to shrink or
/// grow the noise levels (0 gives a noiseless population).
pub fn default_archetypes_with_noise(scale: f64) -> Vec<Archetype> {
    assert!(scale >= 0.0, "noise scale must be >= 0");
    // Day-level shifts are kept near slot_noise/√48 so the within-archetype
    // covariance of the mean profile stays close to isotropic.
    let spec: [(Vec<f64>, f64, f64, f64); 9] = [
        // evening peak
        (profile(|h| 0.12 + 0.75 * bump(h, 19.0, 1.5)), 0.010, 0.06, 1.10),
        // morning peak
        (profile(|h| 0.12 + 0.65 * bump(h, 7.5, 1.2)), 0.010, 0.06, 0.95),
        // dual peak: morning max in 07:00-09:00, evening max in 17:00-21:00
        (
            profile(|h| 0.10 + 0.45 * bump(h, 8.0, 1.0) + 0.55 * bump(h, 19.0, 1.4)),
            0.010,
            0.06,
            1.15,
        ),
        // flat low
        (profile(|_| 0.08), 0.008, 0.04, 1.00),
        // flat high
        (profile(|_| 0.50), 0.015, 0.08, 1.05),
        // daytime high (home all day)
        (profile(|h| 0.15 + 0.50 * bump(h, 13.0, 3.0)), 0.010, 0.06, 1.20),
        // night active
        (profile(|h| 0.10 + 0.55 * wrapped_bump(h, 2.0, 2.5)), 0.010, 0.06, 0.90),
        // very low usage
        (profile(|h| 0.03 + 0.02 * bump(h, 19.0, 2.0)), 0.004, 0.02, 1.00),
        // high variance
        (profile(|h| 0.30 + 0.10 * bump(h, 18.0, 3.0)), 0.040, 0.25, 1.30),
    ];
    spec.into_iter()
        .enumerate()
        .map(|(id, (base_profile, day_sd, slot_sd, weekend_scale))| Archetype {
            id,
            base_profile,
            day_noise_sd: day_sd * scale,
            slot_noise_sd: slot_sd * scale,
            weekend_scale,
        })
        .collect()
}

/// The nine default archetypes at the standard noise level.
pub fn default_archetypes() -> Vec<Archetype> {
    default_archetypes_with_noise(1.0)
}
