use crate::error::Result;
use crate::manifold::{MatrixSimplex, RiemannianGradient, SimplexPoint, TangentVec};
use crate::problems::Problem;
use crate::scalar::{real, to_f64, Scalar};

use super::{
    check_start, evaluate, keep_on_manifold, SolveResult, SolverConfig, Status, TraceRecorder,
};

/// Why the inner solver stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcgStop {
    NegativeCurvature,
    ExceededRadius,
    LinearConvergence,
    SuperlinearConvergence,
    MaxInner,
    CauchyPoint,
}

#[derive(Debug, Clone)]
pub struct TcgOutcome<T: Scalar> {
    pub eta: TangentVec<T>,
    pub heta: TangentVec<T>,
    pub inner_iters: usize,
    pub stop: TcgStop,
}

/// Steihaug–Toint truncated CG on `m(η) = f + g(grad, η) + ½ g(Hess η, η)`
/// inside the ball of radius `radius`.
///
/// Stops on negative curvature or when leaving the ball (both by moving
/// to the boundary), or once `‖r‖ ≤ ‖r₀‖·min(‖r₀‖^θ, κ)`. With
/// `max_inner = 0` the Cauchy point is returned instead.
#[allow(clippy::too_many_arguments)]
pub fn truncated_cg<T: Scalar, H>(
    manifold: &MatrixSimplex<T>,
    x: &SimplexPoint<T>,
    grad: &TangentVec<T>,
    hess: H,
    radius: f64,
    max_inner: usize,
    kappa: f64,
    theta: f64,
) -> Result<TcgOutcome<T>>
where
    H: Fn(&TangentVec<T>) -> Result<TangentVec<T>>,
{
    let (n, k) = (x.n(), x.k());
    let inner = |a: &TangentVec<T>, b: &TangentVec<T>| -> Result<f64> {
        Ok(to_f64(manifold.inner(x, a, b)?))
    };

    if max_inner == 0 {
        let hg = hess(grad)?;
        let gg = inner(grad, grad)?;
        let ghg = inner(grad, &hg)?;
        let gnorm = gg.sqrt();
        let mut tau = radius / gnorm;
        if ghg > 0.0 {
            tau = tau.min(gg / ghg);
        }
        return Ok(TcgOutcome {
            eta: grad.scale(real(-tau)),
            heta: hg.scale(real(-tau)),
            inner_iters: 0,
            stop: TcgStop::CauchyPoint,
        });
    }

    let mut eta = TangentVec::zeros(n, k);
    let mut heta = TangentVec::zeros(n, k);
    let mut r = grad.clone();
    let mut rr = inner(&r, &r)?;
    let r0 = rr.sqrt();
    let mut delta = r.scale(real(-1.0));
    // Metric quantities ⟨η,η⟩, ⟨η,δ⟩, ⟨δ,δ⟩ updated by recurrence.
    let mut e_e = 0.0;
    let mut e_d = 0.0;
    let mut d_d = rr;
    let radius2 = radius * radius;
    let mut stop = TcgStop::MaxInner;
    let mut iters = 0;

    for j in 0..max_inner {
        iters = j + 1;
        let hdelta = hess(&delta)?;
        let curvature = inner(&delta, &hdelta)?;
        let alpha = rr / curvature;
        let e_e_new = e_e + 2.0 * alpha * e_d + alpha * alpha * d_d;

        if curvature <= 0.0 || e_e_new >= radius2 {
            let tau = (-e_d + (e_d * e_d + d_d * (radius2 - e_e)).max(0.0).sqrt()) / d_d;
            eta.axpy(real(tau), &delta);
            heta.axpy(real(tau), &hdelta);
            stop = if curvature <= 0.0 {
                TcgStop::NegativeCurvature
            } else {
                TcgStop::ExceededRadius
            };
            break;
        }

        e_e = e_e_new;
        eta.axpy(real(alpha), &delta);
        heta.axpy(real(alpha), &hdelta);
        r.axpy(real(alpha), &hdelta);
        // Rounding drift leaves the tangent space once ‖r‖ nears machine
        // precision; re-projecting keeps the Hessian applied to tangents.
        r = manifold.transport(x, &r)?;
        let rr_new = inner(&r, &r)?;
        let rnorm = rr_new.sqrt();
        if rnorm <= r0 * r0.powf(theta).min(kappa) {
            stop = if kappa < r0.powf(theta) {
                TcgStop::LinearConvergence
            } else {
                TcgStop::SuperlinearConvergence
            };
            break;
        }
        let beta = rr_new / rr;
        rr = rr_new;
        delta = r.scale(real(-1.0)).add_scaled(real(beta), &delta);
        e_d = beta * (e_d + alpha * d_d);
        d_d = rr + beta * beta * d_d;
    }

    Ok(TcgOutcome {
        eta,
        heta,
        inner_iters: iters,
        stop,
    })
}

/// Riemannian trust-region method with a truncated CG inner solver.
///
/// The quadratic model uses the Riemannian Hessian. A step is accepted when
/// the ratio of actual to predicted decrease exceeds `eta_accept`; the radius
/// shrinks by 4 below ratio ¼ and doubles (up to the cap) above ¾ when the
/// inner solver stopped on the boundary.
pub fn solve_rtr<T: Scalar, P: Problem<T>>(
    manifold: &MatrixSimplex<T>,
    problem: &P,
    x0: SimplexPoint<T>,
    cfg: &SolverConfig,
) -> Result<SolveResult<T>> {
    check_start(manifold, &x0, cfg)?;
    let rcfg = &cfg.rtr;
    let dim = manifold.dimension().max(1);
    let max_radius = rcfg.max_radius.unwrap_or((dim as f64).sqrt());
    let mut radius = rcfg.initial_radius.unwrap_or(max_radius / 8.0);
    let max_inner = rcfg.tcg_max_inner.unwrap_or(dim);

    let mut rec = TraceRecorder::new();
    let mut cur = evaluate(manifold, problem, x0, None)?;
    rec.push(&cur, radius, 0);
    let mut iterations = 0usize;

    loop {
        if to_f64(cur.gradnorm) <= cfg.tol_gradnorm {
            return Ok(rec.finish(cur.x, Status::Converged));
        }
        if iterations >= cfg.max_iter {
            return Ok(rec.finish(cur.x, Status::MaxIter));
        }
        iterations += 1;
        if radius < f64::EPSILON * max_radius {
            let status = if cur.x.near_boundary() {
                Status::Boundary
            } else {
                Status::NumericalError("trust-region radius collapsed".into())
            };
            return Ok(rec.finish(cur.x, status));
        }

        let x = &cur.x;
        let rg: &RiemannianGradient<T> = &cur.rg;
        let hess = |v: &TangentVec<T>| {
            let hv = problem.euclidean_hess_vec(x, v)?;
            manifold.hessian_with(x, rg, &hv, v)
        };
        let tcg = match truncated_cg(
            manifold,
            x,
            &rg.grad,
            hess,
            radius,
            max_inner,
            rcfg.tcg_kappa,
            rcfg.tcg_theta,
        ) {
            Ok(t) => t,
            Err(e) => {
                let status = Status::NumericalError(e.to_string());
                return Ok(rec.finish(cur.x, status));
            }
        };

        let fx = to_f64(cur.cost);
        let model_decrease = -(to_f64(manifold.inner(x, &rg.grad, &tcg.eta)?)
            + 0.5 * to_f64(manifold.inner(x, &tcg.heta, &tcg.eta)?));
        let candidate = manifold
            .retract(x, &tcg.eta)
            .and_then(|y| keep_on_manifold(manifold, y))
            .and_then(|y| problem.cost(&y).map(|c| (y, c)));

        let reg = 1e3 * f64::EPSILON * fx.abs().max(1.0);
        let (rho, candidate) = match candidate {
            Ok((y, fy)) if to_f64(fy).is_finite() && model_decrease > 0.0 => {
                let rho = (fx - to_f64(fy) + reg) / (model_decrease + reg);
                (rho, Some((y, fy)))
            }
            _ => (f64::NEG_INFINITY, None),
        };

        let on_boundary = matches!(
            tcg.stop,
            TcgStop::NegativeCurvature | TcgStop::ExceededRadius | TcgStop::CauchyPoint
        );
        if rho < 0.25 {
            radius *= 0.25;
        } else if rho > 0.75 && on_boundary {
            radius = (2.0 * radius).min(max_radius);
        }

        if rho > rcfg.eta_accept {
            let (y, fy) = candidate.expect("accepted ratio implies a candidate");
            match evaluate(manifold, problem, y, Some(fy)) {
                Ok(next) => cur = next,
                Err(e) => {
                    let status = Status::NumericalError(e.to_string());
                    return Ok(rec.finish(cur.x, status));
                }
            }
        }
        rec.push(&cur, radius, tcg.inner_iters);
    }
}
