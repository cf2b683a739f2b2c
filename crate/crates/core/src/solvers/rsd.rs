use crate::error::Result;
use crate::manifold::{MatrixSimplex, SimplexPoint, TangentVec};
use crate::problems::Problem;
use crate::scalar::{real, to_f64, Scalar};

use super::rcg::{needs_restart, polak_ribiere_plus};
use super::{
    armijo_linesearch, check_start, evaluate, failure_status, keep_on_manifold, SolveResult,
    SolverConfig, Status, TraceRecorder,
};

/// Steepest descent `x ← R_x(−t·grad)` with Armijo backtracking.
///
/// The first trial step is `1 / (1 + ‖grad‖)` (or the configured initial
/// step). Later trial steps reuse the previous accepted step rescaled by the
/// ratio of directional slopes, `t₀ = t_prev · slope_prev / slope`, which is
/// the Barzilai–Borwein scaling along the search direction.
pub fn solve_rsd<T: Scalar, P: Problem<T>>(
    manifold: &MatrixSimplex<T>,
    problem: &P,
    x0: SimplexPoint<T>,
    cfg: &SolverConfig,
) -> Result<SolveResult<T>> {
    run_descent(manifold, problem, x0, cfg, false)
}

pub(super) fn run_descent<T: Scalar, P: Problem<T>>(
    manifold: &MatrixSimplex<T>,
    problem: &P,
    x0: SimplexPoint<T>,
    cfg: &SolverConfig,
    conjugate: bool,
) -> Result<SolveResult<T>> {
    check_start(manifold, &x0, cfg)?;
    let mut rec = TraceRecorder::new();
    let mut cur = evaluate(manifold, problem, x0, None)?;
    rec.push(&cur, 0.0, 0);
    let mut dir = cur.rg.grad.scale(real(-1.0));
    // Accepted step and slope of the previous iteration.
    let mut previous: Option<(f64, f64)> = None;

    loop {
        let gradnorm = to_f64(cur.gradnorm);
        if gradnorm <= cfg.tol_gradnorm {
            return Ok(rec.finish(cur.x, Status::Converged));
        }
        if rec.len() > cfg.max_iter {
            return Ok(rec.finish(cur.x, Status::MaxIter));
        }

        let mut slope = to_f64(manifold.inner(&cur.x, &cur.rg.grad, &dir)?);
        if slope >= 0.0 {
            log::debug!("conjugate direction is not descent, restarting");
            dir = cur.rg.grad.scale(real(-1.0));
            slope = -gradnorm * gradnorm;
        }
        let first = cfg.armijo.initial_step.unwrap_or(1.0 / (1.0 + gradnorm));
        let t0 = match previous {
            Some((step, prev_slope)) => {
                let t = step * prev_slope / slope;
                if t.is_finite() && t > 0.0 {
                    t
                } else {
                    first
                }
            }
            None => first,
        };

        let ls = match armijo_linesearch(
            manifold,
            problem,
            &cur.x,
            &dir,
            cur.cost,
            real(slope),
            t0,
            &cfg.armijo,
        ) {
            Ok(ls) => ls,
            Err(e) => {
                let status = failure_status(&cur.x, &e);
                return Ok(rec.finish(cur.x, status));
            }
        };

        let next = match keep_on_manifold(manifold, ls.point)
            .and_then(|x| evaluate(manifold, problem, x, Some(ls.cost)))
        {
            Ok(next) => next,
            Err(e) => {
                let status = failure_status(&cur.x, &e);
                return Ok(rec.finish(cur.x, status));
            }
        };

        previous = Some((ls.step, slope));
        dir = if conjugate {
            match conjugate_direction(manifold, &next.x, &dir, &cur.rg.grad, &next.rg.grad, cur.gradnorm) {
                Ok(d) => d,
                Err(e) => {
                    let status = failure_status(&next.x, &e);
                    return Ok(rec.finish(next.x, status));
                }
            }
        } else {
            next.rg.grad.scale(real(-1.0))
        };
        rec.push(&next, ls.step, ls.backtracks);
        cur = next;
    }
}

/// `−grad_new + β·T(dir)` with both the previous direction and gradient
/// carried to `x_new` by projection.
fn conjugate_direction<T: Scalar>(
    manifold: &MatrixSimplex<T>,
    x_new: &SimplexPoint<T>,
    dir: &TangentVec<T>,
    grad: &TangentVec<T>,
    grad_new: &TangentVec<T>,
    gradnorm_old: T::Real,
) -> Result<TangentVec<T>> {
    let steepest = grad_new.scale(real(-1.0));
    let grad_prev = manifold.transport(x_new, grad)?;
    if needs_restart(manifold, x_new, grad_new, &grad_prev)? {
        return Ok(steepest);
    }
    let beta = polak_ribiere_plus(manifold, x_new, grad_new, &grad_prev, gradnorm_old)?;
    let dir_prev = manifold.transport(x_new, dir)?;
    Ok(steepest.add_scaled(beta, &dir_prev))
}
