//! Multipath channel synthesis and the narrowband received-signal model.
//!
//! Channels are sums of weighted steering vectors (a clustered multipath
//! model with a small number of planar wavefronts). The link from the base
//! station to the surface is `g`; each user `k` adds a surface-to-user
//! vector `h_r_k`, a scalar direct path `h_d_k`, and the cascaded vector
//! `h_k = h_r_k (*) g` (elementwise), which is what a surface codeword
//! multiplies. With codeword `theta`, pilot `s`, and noise power `sigma2`
//! the received sample is
//!
//! ```text
//! y = (h_d + theta^T h) * s + n,    n ~ CN(0, sigma2)
//! ```
//!
//! Scenario drawing is fully deterministic given an RNG, so experiment
//! records can be reproduced from a seed alone.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use num_complex::Complex64;
use rand_core::RngCore;

use crate::geometry::{steering_vector, GeometryError, RisGeometry};
use crate::linalg;
use crate::math;

/// One planar wavefront: complex gain plus arrival direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathComponent {
    pub gain: Complex64,
    /// Azimuth in `(-pi, pi]`.
    pub azimuth: f64,
    /// Elevation in `[0, pi]`.
    pub elevation: f64,
}

/// A set of propagation paths making up one link.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PathSet {
    pub components: Vec<PathComponent>,
}

/// Wavefront model for the surface-to-user link.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Wavefront {
    /// Planar wavefronts for every path.
    FarField,
    /// Exact spherical phase for the line-of-sight path, evaluated at the
    /// configured distance; scattered paths stay planar.
    Spherical,
}

/// Statistical description of one link.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkConfig {
    /// Line-of-sight azimuth in `(-pi, pi]`.
    pub azimuth: f64,
    /// Line-of-sight elevation in `[0, pi]`.
    pub elevation: f64,
    /// Distance from the surface in meters.
    pub distance: f64,
    /// Number of paths `L >= 1` (the first is the line of sight).
    pub num_paths: usize,
    /// Total mean path power (sum over paths of `E|gain|^2`).
    pub power_scale: f64,
    /// Rician K-factor (linear). `None` draws every path gain from the same
    /// zero-mean complex Gaussian; `Some(k)` gives the line of sight a
    /// deterministic magnitude carrying `k/(k+1)` of the power.
    pub k_factor: Option<f64>,
    /// Scattered paths land within this angular offset (radians) of the
    /// line of sight on both axes.
    pub angle_spread: f64,
    pub wavefront: Wavefront,
}

/// Per-user link description.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UserConfig {
    pub link: LinkConfig,
    /// Mean power of the direct base-station-to-user path (`h_d` variance).
    pub direct_power: f64,
}

/// Everything needed to draw one random channel realization.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub geometry: RisGeometry,
    /// Base-station-to-surface link.
    pub bs_link: LinkConfig,
    pub users: Vec<UserConfig>,
    /// Receiver noise power in watts.
    pub noise_power: f64,
    /// Base seed; harnesses mix per-trial values on top of it.
    pub seed: u64,
}

/// One drawn channel realization.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    /// Base-station-to-surface vector, length `N`.
    pub g: Vec<Complex64>,
    /// Surface-to-user vectors, one per user.
    pub h_r: Vec<Vec<Complex64>>,
    /// Direct scalar paths, one per user.
    pub h_d: Vec<Complex64>,
    /// Cascaded vectors `h_k = h_r_k (*) g`, one per user.
    pub h: Vec<Vec<Complex64>>,
}

impl ChannelRealization {
    pub fn n_users(&self) -> usize {
        self.h.len()
    }
}

/// Configuration failures for scenario drawing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChannelError {
    Geometry(GeometryError),
    /// A link must carry at least one path.
    NoPaths,
    /// Powers and K-factors must be finite and non-negative.
    InvalidPower,
    /// Link distances must be positive and finite.
    InvalidDistance,
    /// At least one user is required.
    NoUsers,
}

impl fmt::Display for ChannelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Geometry(e) => write!(f, "invalid geometry: {e}"),
            Self::NoPaths => write!(f, "links need at least one path"),
            Self::InvalidPower => write!(f, "powers must be finite and non-negative"),
            Self::InvalidDistance => write!(f, "distances must be positive and finite"),
            Self::NoUsers => write!(f, "at least one user is required"),
        }
    }
}

impl core::error::Error for ChannelError {}

impl From<GeometryError> for ChannelError {
    fn from(e: GeometryError) -> Self {
        Self::Geometry(e)
    }
}

impl LinkConfig {
    fn validate(&self) -> Result<(), ChannelError> {
        if self.num_paths == 0 {
            return Err(ChannelError::NoPaths);
        }
        if !(self.power_scale >= 0.0 && self.power_scale.is_finite()) {
            return Err(ChannelError::InvalidPower);
        }
        if let Some(k) = self.k_factor {
            if !(k >= 0.0 && k.is_finite()) {
                return Err(ChannelError::InvalidPower);
            }
        }
        if !(self.distance > 0.0 && self.distance.is_finite()) {
            return Err(ChannelError::InvalidDistance);
        }
        Ok(())
    }
}

impl ScenarioConfig {
    /// Check geometry, links, and powers.
    pub fn validate(&self) -> Result<(), ChannelError> {
        self.geometry.validate()?;
        self.bs_link.validate()?;
        if self.users.is_empty() {
            return Err(ChannelError::NoUsers);
        }
        for u in &self.users {
            u.link.validate()?;
            if !(u.direct_power >= 0.0 && u.direct_power.is_finite()) {
                return Err(ChannelError::InvalidPower);
            }
        }
        if !(self.noise_power >= 0.0 && self.noise_power.is_finite()) {
            return Err(ChannelError::InvalidPower);
        }
        Ok(())
    }
}

/// Uniform sample in `[0, 1)` with 53 random bits.
#[inline]
pub(crate) fn uniform_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// One circularly symmetric complex Gaussian sample with unit variance
/// (`E|z|^2 = 1`), drawn in polar form.
pub fn complex_normal(rng: &mut impl RngCore) -> Complex64 {
    let u1 = 1.0 - uniform_f64(rng); // (0, 1], keeps the log finite
    let u2 = uniform_f64(rng);
    Complex64::from_polar(math::sqrt(-math::ln(u1)), 2.0 * PI * u2)
}

/// Sum of weighted steering vectors for the base-station-to-surface link.
pub fn generate_bs_ris_channel(geom: &RisGeometry, paths: &PathSet) -> Vec<Complex64> {
    synthesize_far_field(geom, &paths.components)
}

/// Sum of weighted steering vectors for a surface-to-user link.
pub fn generate_ris_user_channel(geom: &RisGeometry, paths: &PathSet) -> Vec<Complex64> {
    synthesize_far_field(geom, &paths.components)
}

fn synthesize_far_field(geom: &RisGeometry, components: &[PathComponent]) -> Vec<Complex64> {
    let mut out = alloc::vec![Complex64::ZERO; geom.n_elements()];
    for p in components {
        let a = steering_vector(geom, p.azimuth, p.elevation);
        for (o, s) in out.iter_mut().zip(a) {
            *o += p.gain * s;
        }
    }
    out
}

/// Per-element response of a point source at finite distance.
///
/// Each element sees the exact propagation phase for its own distance to
/// the source, referenced to the array origin. As `distance` grows the
/// result converges to [`steering_vector`] at the same angles.
pub fn spherical_steering(
    geom: &RisGeometry,
    azimuth: f64,
    elevation: f64,
    distance: f64,
) -> Vec<Complex64> {
    let k = 2.0 * PI / geom.wavelength;
    // Unit direction toward the source; elements live in the x = 0 plane.
    let uy = math::sin(elevation) * math::sin(azimuth);
    let uz = math::cos(elevation);
    let ux = math::sin(elevation) * math::cos(azimuth);
    let (sx, sy, sz) = (distance * ux, distance * uy, distance * uz);
    let mut out = Vec::with_capacity(geom.n_elements());
    for i_y in 0..geom.n_y {
        let y = i_y as f64 * geom.d_y;
        for i_z in 0..geom.n_z {
            let z = i_z as f64 * geom.d_z;
            let r = math::sqrt(sx * sx + (sy - y) * (sy - y) + (sz - z) * (sz - z));
            out.push(Complex64::from_polar(1.0, k * (r - distance)));
        }
    }
    out
}

/// Cascaded channel `h_r (*) g`: the diagonal-matrix product
/// `diag(h_r) * g` written elementwise.
///
/// # Panics
///
/// Panics if the vectors differ in length.
pub fn cascade(h_r: &[Complex64], g: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(h_r.len(), g.len(), "cascade needs equal-length vectors");
    h_r.iter().zip(g).map(|(a, b)| a * b).collect()
}

/// One received sample `y = (h_d + theta^T h) * s + n` with
/// `n ~ CN(0, sigma2)`.
///
/// Pilot symbols are nominally unit modulus; transmit-power scaling is
/// modeled by scaling `sigma2` instead of `s`. The noise draw always
/// consumes the RNG, even for `sigma2 = 0`, so seeded streams stay aligned
/// across noise settings.
///
/// # Panics
///
/// Panics if `theta` and `h` differ in length.
pub fn received_signal(
    theta: &[Complex64],
    h_d: Complex64,
    h: &[Complex64],
    s: Complex64,
    sigma2: f64,
    rng: &mut impl RngCore,
) -> Complex64 {
    assert_eq!(theta.len(), h.len(), "codeword and channel lengths differ");
    debug_assert!(sigma2 >= 0.0);
    let noise = complex_normal(rng) * math::sqrt(sigma2);
    (h_d + linalg::dot(theta, h)) * s + noise
}

fn wrap_azimuth(mut a: f64) -> f64 {
    while a > PI {
        a -= 2.0 * PI;
    }
    while a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Draw the random path set of one link. The first component is the line
/// of sight at the configured angles; scattered paths land within
/// `angle_spread` of it.
fn draw_path_set(link: &LinkConfig, rng: &mut impl RngCore) -> PathSet {
    let l = link.num_paths;
    let rho = link.power_scale;
    let mut components = Vec::with_capacity(l);
    let los_power = match link.k_factor {
        // All power in the line of sight when it is the only path.
        Some(_) if l == 1 => rho,
        Some(k) => rho * k / (k + 1.0),
        None => rho / l as f64,
    };
    let scatter_power = match link.k_factor {
        Some(_) if l == 1 => 0.0,
        Some(k) => rho / ((k + 1.0) * (l - 1) as f64),
        None => rho / l as f64,
    };

    let los_gain = match link.k_factor {
        // Deterministic magnitude, uniform phase.
        Some(_) => Complex64::from_polar(math::sqrt(los_power), 2.0 * PI * uniform_f64(rng)),
        None => complex_normal(rng) * math::sqrt(los_power),
    };
    components.push(PathComponent {
        gain: los_gain,
        azimuth: link.azimuth,
        elevation: link.elevation,
    });

    for _ in 1..l {
        let gain = complex_normal(rng) * math::sqrt(scatter_power);
        let az = wrap_azimuth(link.azimuth + link.angle_spread * (2.0 * uniform_f64(rng) - 1.0));
        let el = (link.elevation + link.angle_spread * (2.0 * uniform_f64(rng) - 1.0))
            .clamp(0.0, PI);
        components.push(PathComponent {
            gain,
            azimuth: az,
            elevation: el,
        });
    }
    PathSet { components }
}

fn synthesize_link(
    geom: &RisGeometry,
    link: &LinkConfig,
    paths: &PathSet,
) -> Vec<Complex64> {
    match link.wavefront {
        Wavefront::FarField => synthesize_far_field(geom, &paths.components),
        Wavefront::Spherical => {
            let mut out = synthesize_far_field(geom, &paths.components[1..]);
            let los = &paths.components[0];
            let sph = spherical_steering(geom, los.azimuth, los.elevation, link.distance);
            for (o, s) in out.iter_mut().zip(sph) {
                *o += los.gain * s;
            }
            out
        }
    }
}

/// Draw a full multi-user channel realization.
///
/// Draw order is fixed (base-station link first, then per user: path set,
/// then direct path), so equal seeds give equal realizations.
pub fn draw_scenario(
    config: &ScenarioConfig,
    rng: &mut impl RngCore,
) -> Result<ChannelRealization, ChannelError> {
    config.validate()?;
    let geom = &config.geometry;
    let g_paths = draw_path_set(&config.bs_link, rng);
    let g = synthesize_link(geom, &config.bs_link, &g_paths);

    let mut h_r = Vec::with_capacity(config.users.len());
    let mut h_d = Vec::with_capacity(config.users.len());
    let mut h = Vec::with_capacity(config.users.len());
    for user in &config.users {
        let paths = draw_path_set(&user.link, rng);
        let hr = synthesize_link(geom, &user.link, &paths);
        let direct = if user.direct_power > 0.0 {
            complex_normal(rng) * math::sqrt(user.direct_power)
        } else {
            Complex64::ZERO
        };
        h.push(cascade(&hr, &g));
        h_r.push(hr);
        h_d.push(direct);
    }
    Ok(ChannelRealization { g, h_r, h_d, h })
}
