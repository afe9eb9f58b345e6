//! Scalar abstraction shared by every numeric module.
//!
//! All dense linear algebra is written against [`Real`], which is satisfied by
//! `f32` and `f64`. Exact arithmetic (fixed-point enumeration on the torus)
//! uses `num_rational::Rational64` directly and never goes through this trait.

use nalgebra::{ComplexField, DMatrix, RealField};
use num_complex::Complex;
use num_traits::ToPrimitive;

/// Real scalar usable by the symplectic and spectral routines.
pub trait Real: RealField + Copy + ToPrimitive {}

impl<T> Real for T where T: RealField + Copy + ToPrimitive {}

/// Dense complex matrix over `T`.
pub type CMatrix<T> = DMatrix<Complex<T>>;

/// Converts an `f64` literal into the working scalar.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    nalgebra::convert(x)
}

#[inline]
pub(crate) fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[inline]
pub(crate) fn cplx<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn cexp<T: Real>(z: Complex<T>) -> Complex<T> {
    <Complex<T> as ComplexField>::exp(z)
}

#[inline]
pub(crate) fn cabs<T: Real>(z: Complex<T>) -> T {
    <Complex<T> as ComplexField>::modulus(z)
}

#[inline]
pub(crate) fn carg<T: Real>(z: Complex<T>) -> T {
    <Complex<T> as ComplexField>::argument(z)
}

pub(crate) fn complexify<T: Real>(m: &DMatrix<T>) -> CMatrix<T> {
    m.map(|x| Complex::new(x, T::zero()))
}

/// Largest absolute entry.
pub(crate) fn max_abs<T: Real>(m: &DMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, x| acc.max(x.abs()))
}

pub(crate) fn max_abs_c<T: Real>(m: &CMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc.max(cabs(*z)))
}

/// Reduces `x` into `[0, period)`.
pub(crate) fn wrap<T: Real>(x: T, period: T) -> T {
    let r = x % period;
    if r < T::zero() {
        r + period
    } else {
        r
    }
}

/// Default tolerances. Every run can override them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// `‖MᵀJ₀M − J₀‖_max` and complex-structure checks.
    pub symp: f64,
    /// Distance of an eigenvalue from 1 below which a fixed point is degenerate.
    pub eig: f64,
    /// Reassembly error allowed for decompositions and logarithms.
    pub decomp: f64,
    /// Eigenvalues of `D` below this magnitude count as kernel.
    pub kernel: f64,
    /// Band around `|Tr| = 2` classified as parabolic.
    pub trace: f64,
    /// Two eigenvalues closer than this are ambiguous when tracking a path.
    pub matching: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            symp: 1e-10,
            eig: 1e-9,
            decomp: 1e-8,
            kernel: 1e-12,
            trace: 1e-9,
            matching: 1e-6,
        }
    }
}
