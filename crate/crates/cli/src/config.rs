//! Experiment configuration: the on-disk TOML schema and its conversion
//! into validated core types.
//!
//! Angles are written in degrees in the file and converted to radians at
//! the boundary; everything else uses SI units (meters, watts, seconds).
//! See the repository README for a complete annotated schema.

use anyhow::{bail, Context, Result};
use risbeam_core::channel::{LinkConfig, ScenarioConfig, UserConfig, Wavefront};
use risbeam_core::estimation::GampOptions;
use risbeam_core::geometry::RisGeometry;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Solver knobs shared by every pipeline run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlgorithmOptions {
    /// Message-passing solver options.
    pub gamp: GampOptions,
    /// Beamformer surrogate rounds per start.
    pub t_max: usize,
    /// Beamformer starts per instance (first is deterministic).
    pub multi_start: usize,
    /// Relative eigenvalue cutoff inside the low-rank solver.
    pub eig_zero_tol: f64,
}

/// A fully validated experiment description.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    /// Channel scenario; link angles already in radians.
    pub scenario: ScenarioConfig,
    /// Training slot counts to sweep.
    pub pilot_counts: Vec<usize>,
    /// Transmit power levels in dB to sweep (scales measurement SNR).
    pub tx_power_db: Vec<f64>,
    /// Monte Carlo trials per sweep point.
    pub trials: usize,
    /// Master seed; per-record seeds derive from it.
    pub seed: u64,
    pub algorithm: AlgorithmOptions,
    /// Default output path when the command line gives none.
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Check sweep shapes and solver ranges on top of scenario validation.
    pub fn validate(&self) -> Result<()> {
        self.scenario
            .validate()
            .map_err(|e| anyhow::anyhow!("invalid scenario: {e}"))?;
        if self.pilot_counts.is_empty() {
            bail!("pilot_counts must list at least one slot count");
        }
        if self.pilot_counts.iter().any(|&p| p == 0) {
            bail!("pilot counts must be at least 1");
        }
        if self.tx_power_db.is_empty() {
            bail!("tx_power_db must list at least one level");
        }
        if self.tx_power_db.iter().any(|p| !p.is_finite()) {
            bail!("tx power levels must be finite");
        }
        if self.trials == 0 {
            bail!("trials must be at least 1");
        }
        let a = &self.algorithm;
        if a.gamp.max_iter == 0
            || !(a.gamp.tol > 0.0)
            || !(a.gamp.damping > 0.0 && a.gamp.damping <= 1.0)
            || !(a.gamp.init_sparsity > 0.0 && a.gamp.init_sparsity < 1.0)
        {
            bail!("gamp options out of range");
        }
        if a.multi_start == 0 {
            bail!("multi_start must be at least 1");
        }
        if !(a.eig_zero_tol > 0.0 && a.eig_zero_tol.is_finite()) {
            bail!("eig_zero_tol must be positive and finite");
        }
        Ok(())
    }
}

/// On-disk form of one link.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSection {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    /// Distance from the surface in meters.
    pub distance: f64,
    pub num_paths: usize,
    /// Total mean path power.
    pub power_scale: f64,
    /// Rician K-factor (linear); omit for all-Rayleigh paths.
    #[serde(default)]
    pub k_factor: Option<f64>,
    /// Scatterer angular spread around the line of sight, degrees.
    #[serde(default)]
    pub angle_spread_deg: f64,
    #[serde(default)]
    pub wavefront: WavefrontKind,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WavefrontKind {
    #[default]
    FarField,
    Spherical,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserSection {
    /// Mean power of the direct base-station-to-user path.
    pub direct_power: f64,
    pub link: LinkSection,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub n_y: usize,
    pub n_z: usize,
    /// Element pitch along y, meters.
    pub d_y: f64,
    /// Element pitch along z, meters.
    pub d_z: f64,
    /// Carrier wavelength, meters.
    pub wavelength: f64,
    /// Phase resolution in bits per element.
    pub tau: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    /// Receiver noise power in watts.
    pub noise_power: f64,
    pub bs_link: LinkSection,
    pub users: Vec<UserSection>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSection {
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_damping")]
    pub damping: f64,
    #[serde(default = "default_init_sparsity")]
    pub init_sparsity: f64,
    #[serde(default = "default_t_max")]
    pub t_max: usize,
    #[serde(default = "default_multi_start")]
    pub multi_start: usize,
    #[serde(default = "default_eig_zero_tol")]
    pub eig_zero_tol: f64,
}

fn default_max_iter() -> usize {
    200
}
fn default_tol() -> f64 {
    1e-6
}
fn default_damping() -> f64 {
    0.7
}
fn default_init_sparsity() -> f64 {
    0.1
}
fn default_t_max() -> usize {
    50
}
fn default_multi_start() -> usize {
    4
}
fn default_eig_zero_tol() -> f64 {
    1e-10
}

impl Default for AlgorithmSection {
    fn default() -> Self {
        Self {
            max_iter: default_max_iter(),
            tol: default_tol(),
            damping: default_damping(),
            init_sparsity: default_init_sparsity(),
            t_max: default_t_max(),
            multi_start: default_multi_start(),
            eig_zero_tol: default_eig_zero_tol(),
        }
    }
}

fn default_tx_power() -> Vec<f64> {
    vec![0.0]
}

/// Top-level on-disk schema.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    #[serde(default)]
    pub seed: u64,
    pub trials: usize,
    pub pilot_counts: Vec<usize>,
    #[serde(default = "default_tx_power")]
    pub tx_power_db: Vec<f64>,
    #[serde(default)]
    pub output: Option<String>,
    pub geometry: GeometrySection,
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub algorithm: AlgorithmSection,
}

fn link_from_section(section: &LinkSection) -> Result<LinkConfig> {
    if !(section.azimuth_deg > -180.0 && section.azimuth_deg <= 180.0) {
        bail!("azimuth {} deg outside (-180, 180]", section.azimuth_deg);
    }
    if !(0.0..=180.0).contains(&section.elevation_deg) {
        bail!("elevation {} deg outside [0, 180]", section.elevation_deg);
    }
    if !(section.angle_spread_deg >= 0.0) {
        bail!("angle spread must be non-negative");
    }
    Ok(LinkConfig {
        azimuth: section.azimuth_deg.to_radians(),
        elevation: section.elevation_deg.to_radians(),
        distance: section.distance,
        num_paths: section.num_paths,
        power_scale: section.power_scale,
        k_factor: section.k_factor,
        angle_spread: section.angle_spread_deg.to_radians(),
        wavefront: match section.wavefront {
            WavefrontKind::FarField => Wavefront::FarField,
            WavefrontKind::Spherical => Wavefront::Spherical,
        },
    })
}

impl ExperimentFile {
    /// Convert to validated core types (degrees become radians here).
    pub fn into_config(self) -> Result<ExperimentConfig> {
        let geometry = RisGeometry {
            n_y: self.geometry.n_y,
            n_z: self.geometry.n_z,
            d_y: self.geometry.d_y,
            d_z: self.geometry.d_z,
            wavelength: self.geometry.wavelength,
            tau: self.geometry.tau,
        };
        let bs_link = link_from_section(&self.scenario.bs_link).context("bs_link")?;
        let mut users = Vec::with_capacity(self.scenario.users.len());
        for (i, u) in self.scenario.users.iter().enumerate() {
            users.push(UserConfig {
                link: link_from_section(&u.link).with_context(|| format!("users[{i}]"))?,
                direct_power: u.direct_power,
            });
        }
        let scenario = ScenarioConfig {
            geometry,
            bs_link,
            users,
            noise_power: self.scenario.noise_power,
            seed: self.seed,
        };
        let algorithm = AlgorithmOptions {
            gamp: GampOptions {
                max_iter: self.algorithm.max_iter,
                tol: self.algorithm.tol,
                damping: self.algorithm.damping,
                init_sparsity: self.algorithm.init_sparsity,
            },
            t_max: self.algorithm.t_max,
            multi_start: self.algorithm.multi_start,
            eig_zero_tol: self.algorithm.eig_zero_tol,
        };
        let config = ExperimentConfig {
            scenario,
            pilot_counts: self.pilot_counts,
            tx_power_db: self.tx_power_db,
            trials: self.trials,
            seed: self.seed,
            algorithm,
            output: self.output.map(PathBuf::from),
        };
        config.validate()?;
        Ok(config)
    }
}

/// Parse a TOML string into a validated configuration.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let file: ExperimentFile = toml::from_str(text).context("parsing config")?;
    file.into_config()
}

/// Load and validate a configuration file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    parse_config(&text).with_context(|| format!("in {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_toml() -> String {
        String::from(
            r#"
trials = 2
pilot_counts = [8]

[geometry]
n_y = 2
n_z = 2
d_y = 0.025
d_z = 0.025
wavelength = 0.05
tau = 1

[scenario]
noise_power = 0.1

[scenario.bs_link]
azimuth_deg = 30.0
elevation_deg = 90.0
distance = 10.0
num_paths = 1
power_scale = 1.0

[[scenario.users]]
direct_power = 0.5

[scenario.users.link]
azimuth_deg = -45.0
elevation_deg = 60.0
distance = 5.0
num_paths = 1
power_scale = 1.0
"#,
        )
    }

    // 1. A minimal file parses, fills defaults, and converts degrees.
    #[test]
    fn minimal_config_defaults_and_units() {
        let config = parse_config(&minimal_toml()).unwrap();
        assert_eq!(config.seed, 0);
        assert_eq!(config.trials, 2);
        assert_eq!(config.pilot_counts, vec![8]);
        assert_eq!(config.tx_power_db, vec![0.0]);
        assert!(config.output.is_none());
        assert_eq!(config.algorithm.gamp.max_iter, 200);
        assert_eq!(config.algorithm.t_max, 50);
        assert_eq!(config.algorithm.multi_start, 4);
        let bs = &config.scenario.bs_link;
        assert!((bs.azimuth - 30f64.to_radians()).abs() < 1e-15);
        assert!((bs.elevation - 90f64.to_radians()).abs() < 1e-15);
        assert!(bs.k_factor.is_none());
        assert_eq!(bs.angle_spread, 0.0);
        let user = &config.scenario.users[0];
        assert!((user.link.azimuth - (-45f64).to_radians()).abs() < 1e-15);
        assert_eq!(user.direct_power, 0.5);
        assert_eq!(config.scenario.seed, config.seed);
    }

    // 2. Explicit optional fields land where they should.
    #[test]
    fn optional_fields_are_honored() {
        let mut text = minimal_toml();
        text.push_str(
            r#"
k_factor = 10.0
angle_spread_deg = 5.0
wavefront = "spherical"
"#,
        );
        let config = parse_config(&text).unwrap();
        let link = &config.scenario.users[0].link;
        assert_eq!(link.k_factor, Some(10.0));
        assert!((link.angle_spread - 5f64.to_radians()).abs() < 1e-15);
        assert_eq!(link.wavefront, risbeam_core::channel::Wavefront::Spherical);

        let text = minimal_toml().replace("trials = 2", "trials = 2\nseed = 9\noutput = \"r.csv\"");
        let config = parse_config(&text).unwrap();
        assert_eq!(config.seed, 9);
        assert_eq!(config.scenario.seed, 9);
        assert_eq!(config.output.as_deref(), Some(Path::new("r.csv")));
    }

    // 3. Unknown keys are rejected instead of silently ignored.
    #[test]
    fn unknown_fields_are_rejected() {
        let text = minimal_toml().replace("trials = 2", "trials = 2\ntypo_field = 1");
        assert!(parse_config(&text).is_err());
        let text = minimal_toml().replace("noise_power = 0.1", "noise_power = 0.1\nbogus = 1");
        assert!(parse_config(&text).is_err());
    }

    // 4. Range validation: angles, sweeps, trials, solver knobs.
    #[test]
    fn invalid_values_are_rejected() {
        let bad = [
            ("azimuth_deg = 30.0", "azimuth_deg = 181.0"),
            ("azimuth_deg = 30.0", "azimuth_deg = -180.0"),
            ("elevation_deg = 60.0", "elevation_deg = -1.0"),
            ("trials = 2", "trials = 0"),
            ("pilot_counts = [8]", "pilot_counts = []"),
            ("pilot_counts = [8]", "pilot_counts = [0]"),
            ("noise_power = 0.1", "noise_power = -0.1"),
        ];
        for (from, to) in bad {
            let text = minimal_toml().replace(from, to);
            assert!(parse_config(&text).is_err(), "{to} should fail");
        }
        let text = minimal_toml() + "\n[algorithm]\ndamping = 1.5\n";
        assert!(parse_config(&text).is_err());
        let text = minimal_toml() + "\n[algorithm]\nmulti_start = 0\n";
        assert!(parse_config(&text).is_err());
    }

    // 5. load_config reports the file path on failure.
    #[test]
    fn load_config_reads_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.toml");
        std::fs::write(&path, minimal_toml()).unwrap();
        let config = load_config(&path).unwrap();
        assert_eq!(config.trials, 2);
        let missing = dir.path().join("absent.toml");
        let err = load_config(&missing).unwrap_err();
        assert!(format!("{err:#}").contains("absent.toml"));
    }
}
