//! Uniform planar array geometry and the angular-domain basis.
//!
//! The surface is an `n_y x n_z` grid of passive elements in the y-z plane
//! with spacings `d_y`, `d_z`. Element `(i_y, i_z)` lives at flat index
//! `i_y * n_z + i_z`; every vector and transform in the crate uses that
//! ordering. Azimuth is measured in `(-pi, pi]` within the horizontal plane,
//! elevation in `[0, pi]` from the array's zenith axis, so `pi/2` points
//! along the horizon.

use alloc::vec::Vec;
use core::fmt;
use num_complex::Complex64;

use crate::linalg::CMat;
use crate::math;

/// Physical description of the planar surface.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RisGeometry {
    /// Elements along the horizontal (y) axis.
    pub n_y: usize,
    /// Elements along the vertical (z) axis.
    pub n_z: usize,
    /// Horizontal element spacing in meters.
    pub d_y: f64,
    /// Vertical element spacing in meters.
    pub d_z: f64,
    /// Carrier wavelength in meters.
    pub wavelength: f64,
    /// Phase resolution of each element in bits (alphabet size `2^tau`).
    pub tau: u32,
}

/// Validation failures for [`RisGeometry`] and phase alphabets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeometryError {
    /// `n_y * n_z` must be at least one element.
    EmptyArray,
    /// Element spacings must be positive and finite.
    InvalidSpacing,
    /// The wavelength must be positive and finite.
    InvalidWavelength,
    /// Phase resolution must satisfy `1 <= tau <= 16`.
    InvalidResolution,
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmptyArray => write!(f, "array needs at least one element per axis"),
            Self::InvalidSpacing => write!(f, "element spacings must be positive and finite"),
            Self::InvalidWavelength => write!(f, "wavelength must be positive and finite"),
            Self::InvalidResolution => write!(f, "phase resolution must be between 1 and 16 bits"),
        }
    }
}

impl core::error::Error for GeometryError {}

impl RisGeometry {
    /// Total element count `N = n_y * n_z`.
    pub fn n_elements(&self) -> usize {
        self.n_y * self.n_z
    }

    /// Check all physical parameters.
    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.n_y == 0 || self.n_z == 0 {
            return Err(GeometryError::EmptyArray);
        }
        if !(self.d_y > 0.0 && self.d_y.is_finite() && self.d_z > 0.0 && self.d_z.is_finite()) {
            return Err(GeometryError::InvalidSpacing);
        }
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return Err(GeometryError::InvalidWavelength);
        }
        if self.tau == 0 || self.tau > 16 {
            return Err(GeometryError::InvalidResolution);
        }
        Ok(())
    }
}

/// Far-field steering vector of the surface toward `(azimuth, elevation)`.
///
/// The vector factors as a Kronecker product of the per-axis responses: the
/// horizontal factor advances the phase by `-2*pi*(d_y/lambda) * sin(az) *
/// sin(el)` per element, the vertical factor by `-2*pi*(d_z/lambda) *
/// cos(el)`. Every entry has unit magnitude, so the squared norm equals the
/// element count.
pub fn steering_vector(geom: &RisGeometry, azimuth: f64, elevation: f64) -> Vec<Complex64> {
    debug_assert!(azimuth > -core::f64::consts::PI - 1e-9 && azimuth <= core::f64::consts::PI + 1e-9);
    debug_assert!((-1e-9..=core::f64::consts::PI + 1e-9).contains(&elevation));
    let psi_y = -2.0 * core::f64::consts::PI * (geom.d_y / geom.wavelength)
        * math::sin(azimuth)
        * math::sin(elevation);
    let psi_z = -2.0 * core::f64::consts::PI * (geom.d_z / geom.wavelength) * math::cos(elevation);
    let mut out = Vec::with_capacity(geom.n_elements());
    for i_y in 0..geom.n_y {
        let y_phase = psi_y * i_y as f64;
        for i_z in 0..geom.n_z {
            out.push(Complex64::from_polar(1.0, y_phase + psi_z * i_z as f64));
        }
    }
    out
}

/// Unitary angular-domain transform `D = F_y (x) F_z`.
///
/// Each factor is the symmetric DFT matrix of its axis scaled by
/// `1/sqrt(dim)`, which makes the full transform unitary: energy is
/// preserved, and white noise stays white after a change of basis. The
/// factored form lets [`AngularTransform::apply`] run in
/// `O(N * (n_y + n_z))` instead of `O(N^2)`.
#[derive(Clone, Debug)]
pub struct AngularTransform {
    n_y: usize,
    n_z: usize,
    f_y: CMat,
    f_z: CMat,
}

/// Build the angular transform for a geometry.
pub fn angular_transform(geom: &RisGeometry) -> AngularTransform {
    AngularTransform {
        n_y: geom.n_y,
        n_z: geom.n_z,
        f_y: dft_factor(geom.n_y),
        f_z: dft_factor(geom.n_z),
    }
}

fn dft_factor(m: usize) -> CMat {
    let scale = 1.0 / math::sqrt(m as f64);
    CMat::from_fn(m, m, |a, b| {
        let angle = -2.0 * core::f64::consts::PI * (a as f64) * (b as f64) / m as f64;
        Complex64::from_polar(scale, angle)
    })
}

impl AngularTransform {
    /// Side length `N` of the transform.
    pub fn dimension(&self) -> usize {
        self.n_y * self.n_z
    }

    /// Dense `N x N` matrix `D`.
    pub fn matrix(&self) -> CMat {
        self.f_y.kron(&self.f_z)
    }

    /// Forward transform `D x` (element domain to angular domain).
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.apply_impl(x, false)
    }

    /// Adjoint transform `D^H x` (angular domain to element domain).
    pub fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.apply_impl(x, true)
    }

    fn apply_impl(&self, x: &[Complex64], adjoint: bool) -> Vec<Complex64> {
        let (ny, nz) = (self.n_y, self.n_z);
        assert_eq!(x.len(), ny * nz, "vector length must match the geometry");
        // Both DFT factors are symmetric, so the adjoint is the entrywise
        // conjugate with identical indexing.
        let fz = &self.f_z;
        let fy = &self.f_y;
        let mut mid = Vec::with_capacity(ny * nz);
        for by in 0..ny {
            let row = &x[by * nz..(by + 1) * nz];
            for az in 0..nz {
                let mut acc = Complex64::ZERO;
                for (bz, &v) in row.iter().enumerate() {
                    let f = fz.get(az, bz);
                    acc += if adjoint { f.conj() * v } else { f * v };
                }
                mid.push(acc);
            }
        }
        let mut out = alloc::vec![Complex64::ZERO; ny * nz];
        for ay in 0..ny {
            for by in 0..ny {
                let f = fy.get(ay, by);
                let f = if adjoint { f.conj() } else { f };
                let src = &mid[by * nz..(by + 1) * nz];
                let dst = &mut out[ay * nz..(ay + 1) * nz];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d += f * s;
                }
            }
        }
        out
    }
}

/// Distance separating the radiating near field from the far field, in
/// meters: `2 * n_y * n_z * d_y * d_z / lambda`.
///
/// Beyond this distance a point source is well approximated by a plane wave
/// across the whole aperture; inside it the per-element spherical phase
/// curvature is no longer negligible.
pub fn near_field_boundary(geom: &RisGeometry) -> f64 {
    2.0 * (geom.n_y * geom.n_z) as f64 * geom.d_y * geom.d_z / geom.wavelength
}

/// Discrete phase alphabet `{ exp(j*2*pi*m / 2^tau) : m = 0..2^tau-1 }`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseAlphabet {
    tau: u32,
    values: Vec<Complex64>,
}

/// Build the alphabet for a `tau`-bit phase shifter.
///
/// Components that land within rounding error of 0 or +/-1 are snapped
/// exactly, so the cardinal states are bit-exact (`{1, -1}` for one bit,
/// `{1, j, -1, -j}` for two) and distance ties resolve deterministically.
pub fn phase_alphabet(tau: u32) -> Result<PhaseAlphabet, GeometryError> {
    if tau == 0 || tau > 16 {
        return Err(GeometryError::InvalidResolution);
    }
    let snap = |x: f64| {
        let nearest = math::round(x);
        if math::abs(x - nearest) < 1e-12 {
            nearest
        } else {
            x
        }
    };
    let m = 1usize << tau;
    let values = (0..m)
        .map(|i| {
            let v =
                Complex64::from_polar(1.0, 2.0 * core::f64::consts::PI * i as f64 / m as f64);
            Complex64::new(snap(v.re), snap(v.im))
        })
        .collect();
    Ok(PhaseAlphabet { tau, values })
}

impl PhaseAlphabet {
    /// Resolution in bits.
    pub fn tau(&self) -> u32 {
        self.tau
    }

    /// Number of phase states, `2^tau`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// All phase states in index order.
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Phase state `m`.
    pub fn value(&self, index: usize) -> Complex64 {
        self.values[index]
    }

    /// Index of the alphabet point closest to `x` in the complex plane.
    ///
    /// Distance ties resolve to the lowest index, so the map is
    /// deterministic even for `x = 0`.
    pub fn nearest_index(&self, x: Complex64) -> usize {
        // Minimizing |v - x| over unit-modulus v maximizes Re(conj(v) * x).
        let mut best = 0usize;
        let mut best_score = (self.values[0].conj() * x).re;
        for (m, v) in self.values.iter().enumerate().skip(1) {
            let score = (v.conj() * x).re;
            if score > best_score {
                best = m;
                best_score = score;
            }
        }
        best
    }
}
