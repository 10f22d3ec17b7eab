//! Link-quality and radiation metrics.
//!
//! Covers sample power, power gain, modulation error ratio with its
//! implied noise level, spectral efficiency, and computed radiation
//! patterns of a configured surface (including half-power beamwidth and
//! dominant-lobe extraction).

use alloc::vec::Vec;
use core::fmt;
use num_complex::Complex64;

use crate::geometry::{steering_vector, RisGeometry};
use crate::linalg;
use crate::math;

/// Metric failures on degenerate inputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricsError {
    /// A sample frame is empty, so no mean power exists.
    EmptyFrame,
    /// A power is zero or negative, so no decibel ratio exists.
    NonPositivePower,
    /// An error ratio is zero or negative, so no noise level follows.
    NonPositiveRatio,
}

impl fmt::Display for MetricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmptyFrame => write!(f, "sample frame is empty"),
            Self::NonPositivePower => write!(f, "power must be positive"),
            Self::NonPositiveRatio => write!(f, "error ratio must be positive"),
        }
    }
}

impl core::error::Error for MetricsError {}

/// Sum spectral efficiency `sum_k log2(1 + gamma_k)` from linear SNRs.
pub fn spectral_efficiency(snrs: &[f64]) -> f64 {
    snrs.iter().map(|&g| math::log2(1.0 + g)).sum()
}

/// Mean sample power `mean |x|^2`.
pub fn received_power(samples: &[Complex64]) -> Result<f64, MetricsError> {
    if samples.is_empty() {
        return Err(MetricsError::EmptyFrame);
    }
    Ok(linalg::norm_sq(samples) / samples.len() as f64)
}

/// Power ratio in decibels: `10 log10(p_on / p_off)`.
pub fn power_gain_db(p_on: f64, p_off: f64) -> Result<f64, MetricsError> {
    if !(p_on > 0.0 && p_off > 0.0) {
        return Err(MetricsError::NonPositivePower);
    }
    Ok(10.0 * math::log10(p_on / p_off))
}

/// Modulation error ratio of measured samples against their reference
/// symbols.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RxMer {
    /// `sum |ref|^2 / sum |measured - ref|^2`, linear.
    Ratio(f64),
    /// The samples match the reference exactly.
    Unbounded,
}

/// Measure the modulation error ratio `sum |ref|^2 / sum |measured -
/// ref|^2` as a linear ratio.
///
/// # Panics
///
/// Panics if the slices differ in length or are empty.
pub fn rxmer(measured: &[Complex64], reference: &[Complex64]) -> RxMer {
    assert_eq!(measured.len(), reference.len(), "frame lengths differ");
    assert!(!measured.is_empty(), "error ratio of an empty frame");
    let signal = linalg::norm_sq(reference);
    let error: f64 = measured
        .iter()
        .zip(reference)
        .map(|(s, r)| (s - r).norm_sqr())
        .sum();
    if error == 0.0 {
        RxMer::Unbounded
    } else {
        RxMer::Ratio(signal / error)
    }
}

/// Noise power implied by a measured error ratio at the given received
/// power: `received_power / rxmer`.
pub fn corrected_noise(received_power: f64, rxmer: f64) -> Result<f64, MetricsError> {
    if !(rxmer > 0.0) {
        return Err(MetricsError::NonPositiveRatio);
    }
    Ok(received_power / rxmer)
}

/// `count` evenly spaced points covering `[start, end]` inclusive.
///
/// # Panics
///
/// Panics if `count < 2` or the endpoints are not ordered.
pub fn linspace(start: f64, end: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2, "a grid needs at least two points");
    assert!(end > start, "grid endpoints must be ordered");
    let step = (end - start) / (count - 1) as f64;
    (0..count).map(|i| start + step * i as f64).collect()
}

/// One point of a computed radiation pattern.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PatternSample {
    /// Observation azimuth in degrees.
    pub azimuth_deg: f64,
    /// Power gain in decibels relative to the pattern maximum.
    pub gain_db: f64,
}

fn deg_to_rad(degrees: f64) -> f64 {
    degrees * (core::f64::consts::PI / 180.0)
}

/// Normalized scattered power over an azimuth cut at horizon elevation.
///
/// A wave arrives from the incident direction; element `n` re-radiates
/// with weight `codeword_n` times the incident phase, so the power
/// observed toward azimuth `psi` is
/// `|sum_n codeword_n a_n(incident) a_n(psi, horizon)|^2`. All angles are
/// degrees. Gains are normalized so the strongest grid point is exactly
/// 0 dB; zero-power points map to negative infinity.
///
/// # Panics
///
/// Panics if the codeword length differs from the element count, the grid
/// is empty, or the pattern has no energy anywhere on the grid.
pub fn radiation_pattern(
    geom: &RisGeometry,
    codeword: &[Complex64],
    incident_azimuth_deg: f64,
    incident_elevation_deg: f64,
    azimuth_grid_deg: &[f64],
) -> Vec<PatternSample> {
    assert_eq!(codeword.len(), geom.n_elements(), "codeword length mismatch");
    assert!(!azimuth_grid_deg.is_empty(), "azimuth grid is empty");
    let incident = steering_vector(
        geom,
        deg_to_rad(incident_azimuth_deg),
        deg_to_rad(incident_elevation_deg),
    );
    // Fold the incident phase into the codeword once.
    let excitation: Vec<Complex64> = codeword
        .iter()
        .zip(&incident)
        .map(|(c, a)| c * a)
        .collect();
    let powers: Vec<f64> = azimuth_grid_deg
        .iter()
        .map(|&psi| {
            let out = steering_vector(geom, deg_to_rad(psi), core::f64::consts::FRAC_PI_2);
            linalg::dot(&excitation, &out).norm_sqr()
        })
        .collect();
    let peak = powers.iter().cloned().fold(0.0f64, f64::max);
    assert!(peak > 0.0, "radiation pattern has no energy");
    azimuth_grid_deg
        .iter()
        .zip(&powers)
        .map(|(&azimuth_deg, &p)| PatternSample {
            azimuth_deg,
            gain_db: 10.0 * math::log10(p / peak),
        })
        .collect()
}

/// Width in degrees of the lobe at `peak_azimuth_deg` at half power:
/// the distance between the two crossings 3.01 dB below the lobe's peak
/// sample, linearly interpolated between grid points. Returns `None` when
/// either crossing is not bracketed by the grid.
///
/// # Panics
///
/// Panics on an empty pattern or non-finite peak gain.
pub fn half_power_beamwidth(pattern: &[PatternSample], peak_azimuth_deg: f64) -> Option<f64> {
    assert!(!pattern.is_empty(), "pattern is empty");
    let peak = pattern
        .iter()
        .enumerate()
        .min_by(|a, b| {
            let da = (a.1.azimuth_deg - peak_azimuth_deg).abs();
            let db = (b.1.azimuth_deg - peak_azimuth_deg).abs();
            da.partial_cmp(&db).expect("azimuths must not contain NaN")
        })
        .map(|(i, _)| i)
        .expect("pattern is non-empty");
    assert!(
        pattern[peak].gain_db.is_finite(),
        "peak sample has no energy"
    );
    let threshold = pattern[peak].gain_db + 10.0 * math::log10(0.5);

    let cross = |below: usize, above: usize| -> f64 {
        let lo = &pattern[below];
        let hi = &pattern[above];
        let t = (threshold - lo.gain_db) / (hi.gain_db - lo.gain_db);
        lo.azimuth_deg + t * (hi.azimuth_deg - lo.azimuth_deg)
    };

    let mut left = None;
    for i in (0..peak).rev() {
        if pattern[i].gain_db < threshold {
            left = Some(cross(i, i + 1));
            break;
        }
    }
    let mut right = None;
    for i in peak + 1..pattern.len() {
        if pattern[i].gain_db < threshold {
            right = Some(cross(i, i - 1));
            break;
        }
    }
    match (left, right) {
        (Some(l), Some(r)) => Some(r - l),
        _ => None,
    }
}

/// Azimuths (degrees) of local pattern maxima at or above `threshold_db`.
/// Grid endpoints count when they dominate their single neighbor; exact
/// plateaus are suppressed.
pub fn dominant_lobes(pattern: &[PatternSample], threshold_db: f64) -> Vec<f64> {
    let n = pattern.len();
    let mut lobes = Vec::new();
    for i in 0..n {
        let left = if i == 0 {
            f64::NEG_INFINITY
        } else {
            pattern[i - 1].gain_db
        };
        let right = if i + 1 == n {
            f64::NEG_INFINITY
        } else {
            pattern[i + 1].gain_db
        };
        let g = pattern[i].gain_db;
        if g >= threshold_db && g > left && g > right {
            lobes.push(pattern[i].azimuth_deg);
        }
    }
    lobes
}
