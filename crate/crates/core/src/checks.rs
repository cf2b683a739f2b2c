//! Runnable verifications of the geometry and of problem derivatives.
//!
//! [`invariant_suite`] exercises the projection, the metric and the
//! retraction on random instances. [`gradcheck`] estimates Taylor residual
//! slopes for a problem. Both report residuals against fixed tolerances so
//! the command line and the tests share one implementation.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::Result;
use crate::manifold::{AmbientVec, MatrixSimplex, SimplexPoint, TangentVec};
use crate::problems::Problem;
use crate::scalar::{lift, real, to_f64, Scalar};

pub const IDEMPOTENCE_TOL: f64 = 1e-9;
pub const TANGENCY_TOL: f64 = 1e-9;
pub const ORTHOGONALITY_TOL: f64 = 1e-9;
pub const CENTERING_TOL: f64 = 1e-12;
pub const RIGIDITY_RATIO: f64 = 0.6;
pub const HESSIAN_SYMMETRY_TOL: f64 = 1e-8;

/// Deliberate defects for exercising the harness itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    /// Projection returns the symmetrized input without the `Λ` correction.
    SkipMultiplier,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    /// Worst value seen over all trials.
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "ok" } else { "FAIL" };
        write!(f, "{:<24} {:>12.3e}  (limit {:.1e})  {verdict}", self.name, self.value, self.limit)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CheckReport {
    pub checks: Vec<CheckOutcome>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| !c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn at_most(&mut self, name: &'static str, value: f64, limit: f64) {
        self.checks.push(CheckOutcome {
            name,
            value,
            limit,
            passed: value <= limit,
        });
    }
}

/// Which parts of the suite to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteOptions {
    pub rigidity: bool,
    pub rank: bool,
    pub fault: Fault,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            rigidity: true,
            rank: true,
            fault: Fault::None,
        }
    }
}

/// Step sizes `1e-1, 1e-1/2, …` down to `1e-5`.
pub fn rigidity_steps() -> Vec<f64> {
    std::iter::successors(Some(1e-1), |t| Some(t / 2.0))
        .take_while(|&t| t >= 1e-5)
        .collect()
}

/// Rigidity errors `e(t) = ‖(R_x(tξ) − x)/t − ξ‖_F` over [`rigidity_steps`].
pub fn rigidity_errors<T: Scalar>(
    manifold: &MatrixSimplex<T>,
    x: &SimplexPoint<T>,
    xi: &TangentVec<T>,
) -> Result<Vec<(f64, f64)>> {
    rigidity_steps()
        .into_iter()
        .map(|t| {
            let y = manifold.retract(x, &xi.scale(real(t)))?;
            let scale = lift::<T>(real(1.0 / t));
            let err = (0..x.k())
                .map(|i| {
                    let d = (y.part(i) - x.part(i)) * scale - &xi.parts()[i];
                    to_f64(d.norm_squared())
                })
                .sum::<f64>()
                .sqrt();
            Ok((t, err))
        })
        .collect()
}

/// Largest ratio `e(t/2) / e(t)` in a rigidity sequence.
pub fn worst_halving_ratio(errors: &[(f64, f64)]) -> f64 {
    errors
        .windows(2)
        .map(|w| w[1].1 / w[0].1)
        .fold(0.0, f64::max)
}

fn project_with_fault<T: Scalar>(
    manifold: &MatrixSimplex<T>,
    x: &SimplexPoint<T>,
    z: &AmbientVec<T>,
    fault: Fault,
) -> Result<TangentVec<T>> {
    match fault {
        Fault::None => manifold.project(x, z),
        Fault::SkipMultiplier => Ok(TangentVec::from_parts_unchecked(
            z.parts().iter().map(crate::linalg::hermitian_part).collect(),
        )),
    }
}

/// Runs the invariant suite over `trials` random `(x, z, η)` triples.
///
/// Checks, in order: projection idempotence, tangency, metric orthogonality
/// of the projection residual, retraction centering, retraction rigidity,
/// metric positivity and the numerical rank of the projection.
pub fn invariant_suite<T: Scalar, G: Rng + ?Sized>(
    manifold: &MatrixSimplex<T>,
    trials: usize,
    rng: &mut G,
    opts: SuiteOptions,
) -> Result<CheckReport> {
    let mut idem = 0.0f64;
    let mut tangency = 0.0f64;
    let mut ortho = 0.0f64;
    let mut centering = 0.0f64;
    let mut rigidity = 0.0f64;
    let mut positivity = f64::INFINITY;

    for _ in 0..trials {
        let x = manifold.random_point(rng);
        let z = manifold.random_ambient(rng);
        let eta = manifold.random_tangent(&x, rng)?;
        let zn = 1.0 + to_f64(z.norm_fro());

        let p = project_with_fault(manifold, &x, &z, opts.fault)?;
        let pp = project_with_fault(manifold, &x, &p.to_ambient(), opts.fault)?;
        idem = idem.max(to_f64(pp.add_scaled(real(-1.0), &p).norm_fro()) / zn);
        tangency = tangency.max(to_f64(p.sum().norm()));

        let sym = AmbientVec::new(z.parts().iter().map(crate::linalg::hermitian_part).collect());
        let residual = sym.add_scaled(real(-1.0), &p.to_ambient());
        let pairing = to_f64(manifold.inner_ambient(&x, &residual, &eta.to_ambient())?).abs();
        let rnorm = to_f64(manifold.inner_ambient(&x, &residual, &residual)?).max(0.0).sqrt();
        ortho = ortho.max(pairing / (1.0 + rnorm));

        let x0 = manifold.retract(&x, &TangentVec::zeros(x.n(), x.k()))?;
        centering = centering.max(to_f64(x0.distance_fro(&x)));

        if opts.rigidity {
            rigidity = rigidity.max(worst_halving_ratio(&rigidity_errors(manifold, &x, &eta)?));
        }

        let xi = manifold.random_tangent(&x, rng)?;
        let fro = to_f64(xi.norm_fro());
        positivity = positivity.min(to_f64(manifold.inner(&x, &xi, &xi)?) / (fro * fro));
    }

    let mut report = CheckReport::default();
    report.at_most("projection_idempotence", idem, IDEMPOTENCE_TOL);
    report.at_most("tangency", tangency, TANGENCY_TOL);
    report.at_most("metric_orthogonality", ortho, ORTHOGONALITY_TOL);
    report.at_most("retraction_centering", centering, CENTERING_TOL);
    if opts.rigidity && trials > 0 {
        report.at_most("retraction_rigidity", rigidity, RIGIDITY_RATIO);
    }
    if trials > 0 {
        // min g(ξ,ξ)/‖ξ‖²; a lower bound, unlike the other rows.
        report.checks.push(CheckOutcome {
            name: "metric_positivity",
            value: positivity,
            limit: 0.0,
            passed: positivity > 0.0,
        });
    }
    if opts.rank {
        let x = manifold.random_point(rng);
        let rank = projection_rank(manifold, &x, opts.fault)?;
        let expected = manifold.dimension();
        report.checks.push(CheckOutcome {
            name: "dimension",
            value: rank as f64,
            limit: expected as f64,
            passed: rank == expected,
        });
    }
    Ok(report)
}

/// Numerical rank of the projection at `x`, from the singular values of its
/// matrix in the standard real basis of the ambient space.
pub fn projection_rank<T: Scalar>(
    manifold: &MatrixSimplex<T>,
    x: &SimplexPoint<T>,
    fault: Fault,
) -> Result<usize> {
    let (n, k) = (manifold.n(), manifold.k());
    let units: Vec<T> = if T::IS_COMPLEX {
        vec![T::one(), T::from_parts(0.0, 1.0).expect("complex field")]
    } else {
        vec![T::one()]
    };
    let rows = k * n * n * units.len();
    let mut columns = Vec::with_capacity(rows);
    for i in 0..k {
        for r in 0..n {
            for c in 0..n {
                for &u in &units {
                    let mut parts = vec![DMatrix::<T>::zeros(n, n); k];
                    parts[i][(r, c)] = u;
                    let p = project_with_fault(manifold, x, &AmbientVec::new(parts), fault)?;
                    columns.push(real_coordinates(&p));
                }
            }
        }
    }
    let m = DMatrix::from_columns(&columns);
    let sv = m.singular_values();
    let top = sv.max();
    Ok(sv.iter().filter(|&&s| s > 1e-8 * top.max(f64::MIN_POSITIVE)).count())
}

fn real_coordinates<T: Scalar>(v: &TangentVec<T>) -> DVector<f64> {
    let mut out = Vec::new();
    for p in v.parts() {
        for z in p.iter() {
            let (re, im) = z.to_parts();
            out.push(re);
            if T::IS_COMPLEX {
                out.push(im);
            }
        }
    }
    DVector::from_vec(out)
}

/// `n` logarithmically spaced values from `lo` to `hi`.
pub fn log_steps(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1).max(1) as f64))
        .collect()
}

/// Least-squares slope of `log r` against `log t`, ignoring zero residuals.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(t, r)| *t > 0.0 && *r > 0.0)
        .map(|(t, r)| (t.ln(), r.ln()))
        .collect();
    let m = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// First-order Taylor residuals `|f(R_x(tξ)) − f(x) − t·g_x(grad, ξ)|`.
pub fn first_order_residuals<T: Scalar, P: Problem<T>>(
    manifold: &MatrixSimplex<T>,
    problem: &P,
    x: &SimplexPoint<T>,
    xi: &TangentVec<T>,
    steps: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let f0 = to_f64(problem.cost(x)?);
    let grad = manifold.egrad_to_rgrad(x, &problem.euclidean_grad(x)?)?;
    let slope = to_f64(manifold.inner(x, &grad, xi)?);
    steps
        .iter()
        .map(|&t| {
            let ft = to_f64(problem.cost(&manifold.retract(x, &xi.scale(real(t)))?)?);
            Ok((t, (ft - f0 - t * slope).abs()))
        })
        .collect()
}

/// Second-order Taylor residuals at a critical point,
/// `|f(R_x(tξ)) − f(x) − ½t²·g_x(Hess ξ, ξ)|`. Valid for any retraction
/// because the gradient vanishes.
pub fn second_order_residuals<T: Scalar, P: Problem<T>>(
    manifold: &MatrixSimplex<T>,
    problem: &P,
    x: &SimplexPoint<T>,
    xi: &TangentVec<T>,
    steps: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let f0 = to_f64(problem.cost(x)?);
    let hx = manifold.ehess_to_rhess(
        x,
        &problem.euclidean_grad(x)?,
        &problem.euclidean_hess_vec(x, xi)?,
        xi,
    )?;
    let curv = to_f64(manifold.inner(x, &hx, xi)?);
    steps
        .iter()
        .map(|&t| {
            let ft = to_f64(problem.cost(&manifold.retract(x, &xi.scale(real(t)))?)?);
            Ok((t, (ft - f0 - 0.5 * t * t * curv).abs()))
        })
        .collect()
}

/// `|g(Hess ξ, η) − g(ξ, Hess η)| / (‖ξ‖‖η‖)`.
pub fn hessian_symmetry<T: Scalar, P: Problem<T>>(
    manifold: &MatrixSimplex<T>,
    problem: &P,
    x: &SimplexPoint<T>,
    xi: &TangentVec<T>,
    eta: &TangentVec<T>,
) -> Result<f64> {
    let rg = manifold.riemannian_gradient(x, &problem.euclidean_grad(x)?)?;
    let hxi = manifold.hessian_with(x, &rg, &problem.euclidean_hess_vec(x, xi)?, xi)?;
    let heta = manifold.hessian_with(x, &rg, &problem.euclidean_hess_vec(x, eta)?, eta)?;
    let a = to_f64(manifold.inner(x, &hxi, eta)?);
    let b = to_f64(manifold.inner(x, xi, &heta)?);
    let scale = to_f64(manifold.norm(x, xi)?) * to_f64(manifold.norm(x, eta)?);
    Ok((a - b).abs() / scale)
}

/// Steps for the first-order check.
pub fn first_order_steps() -> Vec<f64> {
    log_steps(1e-6, 1e-1, 11)
}

/// Steps for the second-order check at a critical point. Below `1e-3` the
/// residual `O(t³)` sinks under the rounding error of the cost; above `1e-2`
/// the quartic term can cancel a small cubic one.
pub fn second_order_steps() -> Vec<f64> {
    log_steps(1e-3, 1e-2, 7)
}

pub const FIRST_ORDER_SLOPE: (f64, f64) = (1.8, 2.2);
pub const SECOND_ORDER_SLOPE: (f64, f64) = (2.7, 3.3);

/// Result of [`gradcheck`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub first_order_slope: f64,
    pub second_order_slope: Option<f64>,
    pub hessian_symmetry: f64,
}

impl GradcheckReport {
    pub fn first_order_ok(&self) -> bool {
        in_band(self.first_order_slope, FIRST_ORDER_SLOPE)
    }

    pub fn second_order_ok(&self) -> bool {
        self.second_order_slope
            .is_none_or(|s| in_band(s, SECOND_ORDER_SLOPE))
    }

    pub fn symmetry_ok(&self) -> bool {
        self.hessian_symmetry <= HESSIAN_SYMMETRY_TOL
    }

    pub fn passed(&self) -> bool {
        self.first_order_ok() && self.second_order_ok() && self.symmetry_ok()
    }

    /// Name of the first violated band.
    pub fn first_failure(&self) -> Option<&'static str> {
        if !self.first_order_ok() {
            Some("first_order_slope")
        } else if !self.second_order_ok() {
            Some("second_order_slope")
        } else if !self.symmetry_ok() {
            Some("hessian_symmetry")
        } else {
            None
        }
    }
}

pub fn in_band(v: f64, (lo, hi): (f64, f64)) -> bool {
    v >= lo && v <= hi
}

/// Taylor slope checks at a random point, plus the second-order check at
/// `optimum` when one is known.
pub fn gradcheck<T: Scalar, P: Problem<T>, G: Rng + ?Sized>(
    manifold: &MatrixSimplex<T>,
    problem: &P,
    optimum: Option<&SimplexPoint<T>>,
    rng: &mut G,
) -> Result<GradcheckReport> {
    let x = manifold.random_point(rng);
    let xi = manifold.random_tangent(&x, rng)?;
    let eta = manifold.random_tangent(&x, rng)?;
    let first = first_order_residuals(manifold, problem, &x, &xi, &first_order_steps())?;
    let hessian_symmetry = hessian_symmetry(manifold, problem, &x, &xi, &eta)?;
    let second_order_slope = match optimum {
        Some(opt) => {
            let v = manifold.random_tangent(opt, rng)?;
            let r = second_order_residuals(manifold, problem, opt, &v, &second_order_steps())?;
            Some(loglog_slope(&r))
        }
        None => None,
    };
    Ok(GradcheckReport {
        first_order_slope: loglog_slope(&first),
        second_order_slope,
        hessian_symmetry,
    })
}

/// Wraps a problem and scales its Euclidean gradient, leaving the cost
/// untouched. A correct checker must reject it.
#[derive(Debug, Clone)]
pub struct ScaledGradient<P> {
    pub inner: P,
    pub factor: f64,
}

impl<T: Scalar, P: Problem<T>> Problem<T> for ScaledGradient<P> {
    fn cost(&self, x: &SimplexPoint<T>) -> Result<T::Real> {
        self.inner.cost(x)
    }

    fn euclidean_grad(&self, x: &SimplexPoint<T>) -> Result<AmbientVec<T>> {
        let g = self.inner.euclidean_grad(x)?;
        Ok(g.scale(real(self.factor)))
    }

    fn euclidean_hess_vec(&self, x: &SimplexPoint<T>, xi: &TangentVec<T>) -> Result<AmbientVec<T>> {
        let h = self.inner.euclidean_hess_vec(x, xi)?;
        Ok(h.scale(real(self.factor)))
    }
}
