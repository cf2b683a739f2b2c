use crate::error::Result;
use crate::manifold::{MatrixSimplex, SimplexPoint, TangentVec};
use crate::problems::Problem;
use crate::scalar::{real, to_f64, Scalar};

use super::rsd::run_descent;
use super::{SolveResult, SolverConfig};

/// Riemannian conjugate gradient with the Polak–Ribière+ rule.
///
/// The previous direction is carried to the new tangent space by projection.
/// The method restarts from the negative gradient whenever the conjugate
/// direction fails to be a descent direction, or when consecutive gradients
/// are far from orthogonal (Powell's test).
pub fn solve_rcg<T: Scalar, P: Problem<T>>(
    manifold: &MatrixSimplex<T>,
    problem: &P,
    x0: SimplexPoint<T>,
    cfg: &SolverConfig,
) -> Result<SolveResult<T>> {
    run_descent(manifold, problem, x0, cfg, true)
}

/// `β = max(0, g(grad_new, grad_new − grad_prev) / ‖grad_old‖²)` with
/// `grad_prev` already transported to the new point.
pub(super) fn polak_ribiere_plus<T: Scalar>(
    manifold: &MatrixSimplex<T>,
    x_new: &SimplexPoint<T>,
    grad_new: &TangentVec<T>,
    grad_prev: &TangentVec<T>,
    gradnorm_old: T::Real,
) -> Result<T::Real> {
    let diff = grad_new.add_scaled(real(-1.0), grad_prev);
    let num = to_f64(manifold.inner(x_new, grad_new, &diff)?);
    let den = to_f64(gradnorm_old);
    let beta = num / (den * den);
    Ok(real(if beta.is_finite() { beta.max(0.0) } else { 0.0 }))
}

/// Powell's restart test `|g(grad_new, grad_prev)| ≥ 0.1·‖grad_new‖²`.
pub(super) fn needs_restart<T: Scalar>(
    manifold: &MatrixSimplex<T>,
    x_new: &SimplexPoint<T>,
    grad_new: &TangentVec<T>,
    grad_prev: &TangentVec<T>,
) -> Result<bool> {
    let overlap = to_f64(manifold.inner(x_new, grad_new, grad_prev)?).abs();
    let gg = to_f64(manifold.inner(x_new, grad_new, grad_new)?);
    Ok(overlap >= 0.1 * gg)
}
