//! Simulation primitives for links assisted by a reconfigurable intelligent
//! surface (RIS): planar-array geometry, multipath channel synthesis,
//! compressed-sensing recovery of the cascaded channel, and discrete-phase
//! multi-user beamforming.
//!
//! The crate is `no_std` compatible (`alloc` required); disable the default
//! `std` feature for embedded or kernel targets. All heavy lifting is plain
//! dense complex arithmetic over `Vec<Complex64>`, so no BLAS backend is
//! needed.
//!
//! # Modules
//!
//! * [`geometry`] - array layout, steering vectors, the angular (DFT) basis,
//!   near-field boundary, discrete phase alphabets.
//! * [`channel`] - multipath channel synthesis and the received-signal model.
//! * [`estimation`] - Rademacher sensing plans, least-squares direct-link
//!   estimation, and EM-GAMP sparse recovery of the cascaded channel.
//! * [`beamforming`] - the quadratic-transform low-rank multi-user (QTLM)
//!   codeword search, plus single-user and exhaustive baselines.
//! * [`metrics`] - spectral efficiency, received power, RxMER, radiation
//!   patterns, and beamwidth.
//! * [`linalg`] - the small dense complex-matrix toolkit the other modules
//!   are built on.
//!
//! # Conventions
//!
//! Angles are radians: azimuth in `(-pi, pi]`, elevation in `[0, pi]` with
//! `pi/2` the horizontal plane. Element `(i_y, i_z)` of an `n_y x n_z` array
//! is stored at flat index `i_y * n_z + i_z`. Powers are linear (watts)
//! unless a name ends in `_db`.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod beamforming;
pub mod channel;
pub mod estimation;
pub mod geometry;
pub mod linalg;
pub mod metrics;

pub(crate) mod math;

pub use num_complex::Complex64;
