use crate::error::{Error, Result};
use crate::manifold::{MatrixSimplex, SimplexPoint, TangentVec};
use crate::problems::Problem;
use crate::scalar::{real, to_f64, Scalar};

use super::ArmijoConfig;

/// Accepted probe of [`armijo_linesearch`].
#[derive(Debug, Clone)]
pub struct LineSearchOutcome<T: Scalar> {
    pub step: f64,
    pub point: SimplexPoint<T>,
    pub cost: T::Real,
    pub backtracks: usize,
}

/// Backtracking along `t ↦ R_x(t·ξ)` from `initial_step`, contracting until
/// `f(R_x(tξ)) ≤ f(x) + c·t·slope` where `slope = g_x(grad, ξ)`.
///
/// Probes whose retraction fails (step overflow, loss of definiteness) or
/// whose cost is not finite count as rejected. When the predicted decrease
/// is below the rounding level of `f(x)`, a probe is accepted as long as it
/// does not increase the cost beyond that level. An accepted first probe
/// is refined by one safeguarded quadratic interpolation step.
#[allow(clippy::too_many_arguments)]
pub fn armijo_linesearch<T: Scalar, P: Problem<T>>(
    manifold: &MatrixSimplex<T>,
    problem: &P,
    x: &SimplexPoint<T>,
    direction: &TangentVec<T>,
    fx: T::Real,
    slope: T::Real,
    initial_step: f64,
    cfg: &ArmijoConfig,
) -> Result<LineSearchOutcome<T>> {
    let fx64 = to_f64(fx);
    let slope64 = to_f64(slope);
    if !(slope64 < 0.0) {
        return Err(Error::NotDescent { slope: slope64 });
    }
    let noise = 8.0 * f64::EPSILON * fx64.abs().max(1.0);
    let mut t = initial_step;
    for backtracks in 0..=cfg.max_backtracks {
        let probe = manifold
            .retract(x, &direction.scale(real(t)))
            .and_then(|y| problem.cost(&y).map(|c| (y, c)));
        if let Ok((y, fy)) = probe {
            let fy64 = to_f64(fy);
            let predicted = cfg.sufficient_decrease * t * slope64;
            let accept = fy64.is_finite()
                && (fy64 <= fx64 + predicted || (-predicted < noise && fy64 <= fx64 + noise));
            if accept && backtracks == 0 {
                if let Some(better) = refine(manifold, problem, x, direction, fx64, slope64, t, fy64, cfg) {
                    return Ok(better);
                }
            }
            if accept {
                return Ok(LineSearchOutcome {
                    step: t,
                    point: y,
                    cost: fy,
                    backtracks,
                });
            }
        }
        t *= cfg.contraction;
    }
    Err(Error::LineSearchFail {
        backtracks: cfg.max_backtracks,
    })
}

/// Minimizer of the quadratic through `f(0)`, the slope and `f(t)`, tried
/// when it lies in `[0.1·t, t)` and kept if it beats the accepted probe.
#[allow(clippy::too_many_arguments)]
fn refine<T: Scalar, P: Problem<T>>(
    manifold: &MatrixSimplex<T>,
    problem: &P,
    x: &SimplexPoint<T>,
    direction: &TangentVec<T>,
    fx: f64,
    slope: f64,
    t: f64,
    ft: f64,
    cfg: &ArmijoConfig,
) -> Option<LineSearchOutcome<T>> {
    let curvature = ft - fx - slope * t;
    if !(curvature > 0.0) {
        return None;
    }
    let ts = (-slope * t * t / (2.0 * curvature)).max(0.1 * t);
    if ts >= t {
        return None;
    }
    let y = manifold.retract(x, &direction.scale(real(ts))).ok()?;
    let fy = problem.cost(&y).ok()?;
    let fy64 = to_f64(fy);
    (fy64 < ft && fy64 <= fx + cfg.sufficient_decrease * ts * slope).then_some(LineSearchOutcome {
        step: ts,
        point: y,
        cost: fy,
        backtracks: 0,
    })
}
