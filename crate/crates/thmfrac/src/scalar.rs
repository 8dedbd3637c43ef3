//! Scalar abstraction for the numerical core.
//!
//! All geometry, discretisation and assembly code is generic over [`Scalar`],
//! which bundles the floating-point behaviour we need (nalgebra's `RealField`
//! for linear algebra, `FromPrimitive` for literals) with a sparse direct
//! factorisation hook implemented per concrete type. `f32` and `f64` are the
//! supported instantiations; the crate root exposes `f64` aliases for the
//! simulator proper.

use crate::linalg::SparseLu;

pub trait Scalar:
    nalgebra::RealField
    + Copy
    + Default
    + num_traits::FromPrimitive
    + std::iter::Sum
    + std::fmt::LowerExp
    + SparseLu
    + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts an `f64` literal to the active scalar type.
#[inline]
pub fn lit<F: Scalar>(x: f64) -> F {
    F::from_f64(x).expect("scalar literal conversion")
}
