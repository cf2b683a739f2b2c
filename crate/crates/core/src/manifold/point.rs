use nalgebra::DMatrix;
use nalgebra::ComplexField;
use num_traits::Zero;

use crate::linalg::{axpy, frob_inner, SpdMatrix};
use crate::scalar::{lift, real, Scalar};

/// Smallest eigenvalue below which an accepted point is reported as close to
/// the boundary of the manifold.
pub const NEAR_BOUNDARY: f64 = 1e-9;

/// A point `(X₁, …, X_K)`: positive definite parts summing to the identity.
///
/// Only [`MatrixSimplex`](super::MatrixSimplex) constructs these, after
/// validation; each part carries its spectral factorization.
#[derive(Debug, Clone)]
pub struct SimplexPoint<T: Scalar> {
    pub(crate) parts: Vec<SpdMatrix<T>>,
}

impl<T: Scalar> SimplexPoint<T> {
    pub fn k(&self) -> usize {
        self.parts.len()
    }

    pub fn n(&self) -> usize {
        self.parts[0].dim()
    }

    pub fn parts(&self) -> &[SpdMatrix<T>] {
        &self.parts
    }

    pub fn part(&self, i: usize) -> &DMatrix<T> {
        self.parts[i].matrix()
    }

    pub fn matrices(&self) -> Vec<DMatrix<T>> {
        self.parts.iter().map(|p| p.matrix().clone()).collect()
    }

    pub fn min_eigenvalue(&self) -> T::Real {
        self.parts
            .iter()
            .map(|p| p.min_eigenvalue())
            .reduce(|a, b| if b < a { b } else { a })
            .expect("point has at least two parts")
    }

    pub fn near_boundary(&self) -> bool {
        self.min_eigenvalue() < real(NEAR_BOUNDARY)
    }

    /// `‖Σᵢ Xᵢ − I‖_F`.
    pub fn sum_residual(&self) -> T::Real {
        let n = self.n();
        let mut s = -DMatrix::<T>::identity(n, n);
        for p in &self.parts {
            s += p.matrix();
        }
        s.norm()
    }

    /// Frobenius distance `sqrt(Σᵢ ‖Xᵢ − Yᵢ‖²)`.
    pub fn distance_fro(&self, other: &Self) -> T::Real {
        self.parts
            .iter()
            .zip(&other.parts)
            .map(|(a, b)| (a.matrix() - b.matrix()).norm_squared())
            .fold(T::Real::zero(), |acc, v| acc + v)
            .sqrt()
    }
}

macro_rules! tuple_ops {
    ($name:ident) => {
        impl<T: Scalar> $name<T> {
            pub fn zeros(n: usize, k: usize) -> Self {
                $name {
                    parts: vec![DMatrix::zeros(n, n); k],
                }
            }

            pub fn k(&self) -> usize {
                self.parts.len()
            }

            pub fn n(&self) -> usize {
                self.parts.first().map_or(0, |p| p.nrows())
            }

            pub fn parts(&self) -> &[DMatrix<T>] {
                &self.parts
            }

            pub fn into_parts(self) -> Vec<DMatrix<T>> {
                self.parts
            }

            pub fn scale(&self, a: T::Real) -> Self {
                $name {
                    parts: self.parts.iter().map(|p| p * lift::<T>(a)).collect(),
                }
            }

            /// `self + a · other`.
            pub fn add_scaled(&self, a: T::Real, other: &Self) -> Self {
                let mut out = self.clone();
                out.axpy(a, other);
                out
            }

            /// `self ← self + a · other`.
            pub fn axpy(&mut self, a: T::Real, other: &Self) {
                let a = lift::<T>(a);
                for (p, q) in self.parts.iter_mut().zip(&other.parts) {
                    axpy(p, a, q);
                }
            }

            /// Frobenius norm of the stacked tuple.
            pub fn norm_fro(&self) -> T::Real {
                self.parts
                    .iter()
                    .map(|p| p.norm_squared())
                    .fold(T::Real::zero(), |acc, v| acc + v)
                    .sqrt()
            }

            /// Frobenius inner product of the stacked tuples.
            pub fn dot_fro(&self, other: &Self) -> T::Real {
                self.parts
                    .iter()
                    .zip(&other.parts)
                    .map(|(a, b)| frob_inner(a, b))
                    .fold(T::Real::zero(), |acc, v| acc + v)
            }

            /// Sum of the parts.
            pub fn sum(&self) -> DMatrix<T> {
                let n = self.n();
                self.parts
                    .iter()
                    .fold(DMatrix::zeros(n, n), |acc, p| acc + p)
            }
        }
    };
}

/// A tangent vector `(ξ₁, …, ξ_K)`: symmetric parts summing to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVec<T: Scalar> {
    pub(crate) parts: Vec<DMatrix<T>>,
}

/// A tuple of arbitrary square matrices in the ambient space.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbientVec<T: Scalar> {
    pub(crate) parts: Vec<DMatrix<T>>,
}

tuple_ops!(TangentVec);
tuple_ops!(AmbientVec);

impl<T: Scalar> AmbientVec<T> {
    pub fn new(parts: Vec<DMatrix<T>>) -> Self {
        AmbientVec { parts }
    }
}

impl<T: Scalar> TangentVec<T> {
    /// Wraps parts without checking tangency. Solver internals use this for
    /// linear combinations of tangent vectors.
    pub fn from_parts_unchecked(parts: Vec<DMatrix<T>>) -> Self {
        TangentVec { parts }
    }

    pub fn to_ambient(&self) -> AmbientVec<T> {
        AmbientVec {
            parts: self.parts.clone(),
        }
    }
}

impl<T: Scalar> From<TangentVec<T>> for AmbientVec<T> {
    fn from(v: TangentVec<T>) -> Self {
        AmbientVec { parts: v.parts }
    }
}
