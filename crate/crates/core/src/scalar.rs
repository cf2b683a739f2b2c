//! Scalar fields the geometry is generic over.
//!
//! Every kernel in the crate is written once against [`Scalar`]. Real
//! symmetric problems use `f64` (or `f32`); Hermitian problems use
//! `Complex<f64>`, where every transpose becomes a conjugate transpose.

use nalgebra::{ComplexField, RealField};
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

/// A real or complex scalar with a floating point real part.
pub trait Scalar: ComplexField<RealField = <Self as Scalar>::Real> + Copy {
    /// The underlying real type.
    type Real: RealField + Copy;

    /// `true` for complex fields (Hermitian mode).
    const IS_COMPLEX: bool;

    /// Builds a scalar from real and imaginary parts. Returns `None` when
    /// `im != 0` for a real field.
    fn from_parts(re: f64, im: f64) -> Option<Self>;

    /// Splits into `(re, im)` as `f64`.
    fn to_parts(self) -> (f64, f64);

    /// Draws a standard Gaussian sample with unit expected squared modulus.
    fn sample_normal<G: Rng + ?Sized>(rng: &mut G) -> Self;
}

macro_rules! impl_real_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            type Real = $t;
            const IS_COMPLEX: bool = false;

            fn from_parts(re: f64, im: f64) -> Option<Self> {
                (im == 0.0).then_some(re as $t)
            }

            fn to_parts(self) -> (f64, f64) {
                (self as f64, 0.0)
            }

            fn sample_normal<G: Rng + ?Sized>(rng: &mut G) -> Self {
                rng.sample(StandardNormal)
            }
        }

        impl Scalar for Complex<$t> {
            type Real = $t;
            const IS_COMPLEX: bool = true;

            fn from_parts(re: f64, im: f64) -> Option<Self> {
                Some(Complex::new(re as $t, im as $t))
            }

            fn to_parts(self) -> (f64, f64) {
                (self.re as f64, self.im as f64)
            }

            fn sample_normal<G: Rng + ?Sized>(rng: &mut G) -> Self {
                let re: $t = rng.sample(StandardNormal);
                let im: $t = rng.sample(StandardNormal);
                Complex::new(re, im) * core::f64::consts::FRAC_1_SQRT_2 as $t
            }
        }
    };
}

impl_real_scalar!(f32);
impl_real_scalar!(f64);

/// Converts an `f64` constant into the real type `R`.
#[inline]
pub fn real<R: RealField>(x: f64) -> R {
    nalgebra::convert(x)
}

/// Converts a real value to `f64` for reporting.
#[inline]
pub fn to_f64<R: RealField>(x: R) -> f64 {
    nalgebra::try_convert(x).unwrap_or(f64::NAN)
}

/// Lifts a real value into the scalar field.
#[inline]
pub fn lift<T: Scalar>(x: T::Real) -> T {
    T::from_real(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn real_field_rejects_imaginary_part() {
        assert_eq!(f64::from_parts(1.5, 0.0), Some(1.5));
        assert_eq!(f64::from_parts(1.5, 0.1), None);
        let z = Complex::<f64>::from_parts(1.0, -2.0).unwrap();
        assert_eq!(z.to_parts(), (1.0, -2.0));
    }

    #[test]
    fn complex_samples_have_unit_second_moment() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = 20_000;
        let s: f64 = (0..m)
            .map(|_| Complex::<f64>::sample_normal(&mut rng).norm_sqr())
            .sum::<f64>()
            / m as f64;
        assert!((s - 1.0).abs() < 0.05, "{s}");
    }
}
