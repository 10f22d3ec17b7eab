//! Scalar float math that works with and without `std`.
//!
//! `f64` inherent methods like `sin` live in `std`, not `core`; under
//! `no_std` the same routines come from `libm`. Keeping the dispatch in one
//! place spares every caller the cfg noise.

#![allow(dead_code)]

macro_rules! unary {
    ($($name:ident => $libm:ident),* $(,)?) => {
        $(
            #[cfg(feature = "std")]
            #[inline]
            pub fn $name(x: f64) -> f64 {
                f64::$name(x)
            }

            #[cfg(not(feature = "std"))]
            #[inline]
            pub fn $name(x: f64) -> f64 {
                libm::$libm(x)
            }
        )*
    };
}

unary! {
    sin => sin,
    cos => cos,
    exp => exp,
    ln => log,
    log2 => log2,
    log10 => log10,
    sqrt => sqrt,
    abs => fabs,
    round => round,
}

#[cfg(feature = "std")]
#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    f64::atan2(y, x)
}

#[cfg(not(feature = "std"))]
#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

#[cfg(feature = "std")]
#[inline]
pub fn powi(x: f64, n: i32) -> f64 {
    f64::powi(x, n)
}

#[cfg(not(feature = "std"))]
#[inline]
pub fn powi(x: f64, n: i32) -> f64 {
    libm::pow(x, n as f64)
}

#[cfg(feature = "std")]
#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    f64::powf(x, y)
}

#[cfg(not(feature = "std"))]
#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}
