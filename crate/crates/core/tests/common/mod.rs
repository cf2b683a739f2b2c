//! Independent dense oracles shared by the integration tests.
//!
//! Nothing here calls the library's projection or Hessian code; every
//! quantity is recomputed from its defining equations with dense
//! Kronecker-product linear algebra.

#![allow(dead_code)]

use matsimplex::Scalar;
use nalgebra::{DMatrix, DVector};

pub fn sym<T: Scalar>(a: &DMatrix<T>) -> DMatrix<T> {
    (a + a.adjoint()) * nalgebra::convert::<f64, T>(0.5)
}

fn vec_of<T: Scalar>(a: &DMatrix<T>) -> DVector<T> {
    DVector::from_column_slice(a.as_slice())
}

/// Solves `Σᵢ Xᵢ Λ Xᵢ = R` through `vec(XΛX) = (Xᵀ ⊗ X) vec(Λ)`.
pub fn dense_sum_conjugation<T: Scalar>(xs: &[DMatrix<T>], r: &DMatrix<T>) -> DMatrix<T> {
    let n = r.nrows();
    let mut op = DMatrix::<T>::zeros(n * n, n * n);
    for x in xs {
        op += x.transpose().kronecker(x);
    }
    let sol = op.lu().solve(&vec_of(r)).expect("operator is nonsingular");
    DMatrix::from_column_slice(n, n, sol.as_slice())
}

/// Metric projection `(Zᵢ + XᵢΛXᵢ)` with `Σ XᵢΛXᵢ = −Σ symm(Zᵢ)`.
pub fn project<T: Scalar>(xs: &[DMatrix<T>], z: &[DMatrix<T>]) -> Vec<DMatrix<T>> {
    let n = xs[0].nrows();
    let zs: Vec<_> = z.iter().map(sym).collect();
    let total = zs.iter().fold(DMatrix::<T>::zeros(n, n), |a, b| a + b);
    let lam = dense_sum_conjugation(xs, &(-total));
    zs.iter().zip(xs).map(|(zi, x)| sym(&(zi + x * &lam * x))).collect()
}

/// Riemannian Hessian with the multiplier derivative formed explicitly.
///
/// With `η(x) = (Xᵢ(G + Λ)Xᵢ)ᵢ` the gradient field, `Λ` from
/// `Σ XΛX = −Σ XGX`, differentiate along `ξ`:
/// `Dη = ξ(G+Λ)X + X(G+Λ)ξ + X(Ġ+Λ̇)X` where `Λ̇` solves
/// `Σ XΛ̇X = −Σ (ξ(G+Λ)X + X(G+Λ)ξ + XĠX)`. The Hessian is
/// `Π(Dη − symm(ξ X⁻¹ η))` for the affine-invariant connection.
pub fn hessian<T: Scalar>(
    xs: &[DMatrix<T>],
    egrad: &[DMatrix<T>],
    ehess: &[DMatrix<T>],
    xi: &[DMatrix<T>],
) -> Vec<DMatrix<T>> {
    let n = xs[0].nrows();
    let zero = || DMatrix::<T>::zeros(n, n);
    let g: Vec<_> = egrad.iter().map(sym).collect();
    let gd: Vec<_> = ehess.iter().map(sym).collect();
    let xgx = xs.iter().zip(&g).fold(zero(), |a, (x, gi)| a + x * gi * x);
    let lam = dense_sum_conjugation(xs, &(-xgx));

    let mut rhs = zero();
    let mut partial = Vec::new();
    for i in 0..xs.len() {
        let s = &g[i] + &lam;
        let d = &xi[i] * &s * &xs[i] + &xs[i] * &s * &xi[i];
        rhs -= &d + &xs[i] * &gd[i] * &xs[i];
        partial.push(d);
    }
    let lam_dot = dense_sum_conjugation(xs, &rhs);

    let ambient: Vec<_> = (0..xs.len())
        .map(|i| {
            let x = &xs[i];
            let eta = x * (&g[i] + &lam) * x;
            let d_eta = &partial[i] + x * (&gd[i] + &lam_dot) * x;
            let inv = x.clone().try_inverse().expect("part is invertible");
            d_eta - sym(&(&xi[i] * inv * eta))
        })
        .collect();
    project(xs, &ambient)
}

/// Relative Frobenius distance between two tuples.
pub fn rel_diff<T: Scalar>(a: &[DMatrix<T>], b: &[DMatrix<T>]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in a.iter().zip(b) {
        num += nalgebra::try_convert::<T::Real, f64>((x - y).norm_squared()).unwrap();
        den += nalgebra::try_convert::<T::Real, f64>(y.norm_squared()).unwrap();
    }
    num.sqrt() / den.sqrt().max(f64::MIN_POSITIVE)
}

/// Closed-form projection for `n = 1`: `ξᵢ = zᵢ − xᵢ² Σz / Σx²`.
pub fn scalar_projection(x: &[f64], z: &[f64]) -> Vec<f64> {
    let sz: f64 = z.iter().sum();
    let sx2: f64 = x.iter().map(|v| v * v).sum();
    x.iter().zip(z).map(|(xi, zi)| zi - xi * xi * sz / sx2).collect()
}

pub fn modulus<T: Scalar>(v: T) -> f64 {
    nalgebra::try_convert::<T::Real, f64>(v.modulus()).unwrap()
}
