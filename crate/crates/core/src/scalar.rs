//! Scalar abstraction shared by the linear-algebra layer.
//!
//! Everything under [`crate::linalg`] and [`crate::ode`] is generic over a
//! real floating-point type `T: Real`; amplitudes are `Complex<T>`. The
//! physics modules are written against the `f64` aliases exported from the
//! crate root.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Real floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Sum + Debug + Display + LowerExp + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Anything an ODE right-hand side can be built from: a real scalar or a
/// complex amplitude over one.
pub trait Field<T: Real>:
    Copy
    + Debug
    + Default
    + Send
    + Sync
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<T, Output = Self>
    + std::ops::AddAssign
{
    fn modulus(self) -> T;
}

impl<T: Real> Field<T> for T {
    #[inline]
    fn modulus(self) -> T {
        self.abs()
    }
}

impl<T: Real> Field<T> for Complex<T> {
    #[inline]
    fn modulus(self) -> T {
        self.norm()
    }
}

#[inline]
pub fn c<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::lit(re), T::lit(im))
}
