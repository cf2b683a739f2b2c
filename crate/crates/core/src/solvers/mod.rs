//! Riemannian solvers built on the manifold API: steepest descent and
//! conjugate gradient with Armijo backtracking, and a trust-region method
//! with a truncated conjugate gradient inner solver.

mod linesearch;
mod rcg;
mod rsd;
mod rtr;

use std::fmt;
use std::time::Instant;

pub use linesearch::{armijo_linesearch, LineSearchOutcome};
pub use rcg::solve_rcg;
pub use rsd::solve_rsd;
pub use rtr::{solve_rtr, truncated_cg, TcgOutcome, TcgStop};

use crate::error::{Error, Result};
use crate::manifold::{MatrixSimplex, RiemannianGradient, SimplexPoint};
use crate::problems::Problem;
use crate::scalar::{real, to_f64, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Rsd,
    Rcg,
    Rtr,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Rsd => "rsd",
            Method::Rcg => "rcg",
            Method::Rtr => "rtr",
        }
    }
}

/// Backtracking parameters for RSD and RCG.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmijoConfig {
    /// Step tried on the first iteration; `None` uses `1 / (1 + ‖grad‖)`.
    pub initial_step: Option<f64>,
    pub contraction: f64,
    pub sufficient_decrease: f64,
    pub max_backtracks: usize,
}

impl Default for ArmijoConfig {
    fn default() -> Self {
        ArmijoConfig {
            initial_step: None,
            contraction: 0.5,
            sufficient_decrease: 1e-4,
            max_backtracks: 50,
        }
    }
}

/// Trust-region parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RtrConfig {
    /// `None` uses `max_radius / 8`.
    pub initial_radius: Option<f64>,
    /// `None` uses `sqrt(dim M)`.
    pub max_radius: Option<f64>,
    pub eta_accept: f64,
    /// `None` uses `dim M`. Zero gives the Cauchy point method.
    pub tcg_max_inner: Option<usize>,
    pub tcg_kappa: f64,
    pub tcg_theta: f64,
}

impl Default for RtrConfig {
    fn default() -> Self {
        RtrConfig {
            initial_radius: None,
            max_radius: None,
            eta_accept: 0.1,
            tcg_max_inner: None,
            tcg_kappa: 0.1,
            tcg_theta: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    pub max_iter: usize,
    /// Stop once the metric norm of the Riemannian gradient is below this.
    pub tol_gradnorm: f64,
    pub armijo: ArmijoConfig,
    pub rtr: RtrConfig,
}

impl SolverConfig {
    pub fn new(method: Method) -> Self {
        SolverConfig {
            method,
            max_iter: 1000,
            tol_gradnorm: 1e-8,
            armijo: ArmijoConfig::default(),
            rtr: RtrConfig::default(),
        }
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol_gradnorm = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidInput(format!("solver: {what}")));
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.tol_gradnorm) {
            return bad("tol_gradnorm must be positive");
        }
        let a = &self.armijo;
        if let Some(s) = a.initial_step {
            if !positive(s) {
                return bad("initial_step must be positive");
            }
        }
        if !(a.contraction > 0.0 && a.contraction < 1.0) {
            return bad("contraction must lie in (0, 1)");
        }
        if !(a.sufficient_decrease > 0.0 && a.sufficient_decrease < 1.0) {
            return bad("sufficient_decrease must lie in (0, 1)");
        }
        if a.max_backtracks == 0 {
            return bad("max_backtracks must be positive");
        }
        let r = &self.rtr;
        for (name, v) in [("initial_radius", r.initial_radius), ("max_radius", r.max_radius)] {
            if let Some(v) = v {
                if !positive(v) {
                    return bad(&format!("{name} must be positive"));
                }
            }
        }
        if let (Some(init), Some(max)) = (r.initial_radius, r.max_radius) {
            if init > max {
                return bad("initial_radius exceeds max_radius");
            }
        }
        if !(r.eta_accept > 0.0 && r.eta_accept <= 0.25) {
            return bad("eta_accept must lie in (0, 0.25]");
        }
        if !positive(r.tcg_kappa) || !positive(r.tcg_theta) {
            return bad("tcg_kappa and tcg_theta must be positive");
        }
        Ok(())
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Converged,
    MaxIter,
    LineSearchFail,
    /// Progress blocked by the positive definiteness boundary.
    Boundary,
    /// A manifold or problem error aborted the run.
    NumericalError(String),
}

impl Status {
    pub fn label(&self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIter => "max_iter",
            Status::LineSearchFail => "line_search_fail",
            Status::Boundary => "boundary",
            Status::NumericalError(_) => "numerical_error",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::NumericalError(msg) => write!(f, "numerical_error ({msg})"),
            other => f.write_str(other.label()),
        }
    }
}

/// One row of the convergence trace.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateRecord {
    pub iter: usize,
    pub cost: f64,
    pub gradnorm: f64,
    /// Accepted step length (RSD/RCG) or trust-region radius (RTR).
    pub step: f64,
    pub inner_iters: usize,
    pub wall_ms: f64,
    pub near_boundary: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterateTrace {
    pub records: Vec<IterateRecord>,
    pub status: Status,
}

impl IterateTrace {
    pub fn last(&self) -> &IterateRecord {
        self.records.last().expect("trace always holds the initial iterate")
    }

    /// Number of iterations performed (records after the initial one).
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult<T: Scalar> {
    pub point: SimplexPoint<T>,
    pub trace: IterateTrace,
}

/// Runs the configured method.
pub fn solve<T: Scalar, P: Problem<T>>(
    manifold: &MatrixSimplex<T>,
    problem: &P,
    x0: SimplexPoint<T>,
    cfg: &SolverConfig,
) -> Result<SolveResult<T>> {
    match cfg.method {
        Method::Rsd => solve_rsd(manifold, problem, x0, cfg),
        Method::Rcg => solve_rcg(manifold, problem, x0, cfg),
        Method::Rtr => solve_rtr(manifold, problem, x0, cfg),
    }
}

/// Cost and gradient at an iterate.
pub(crate) struct Evaluated<T: Scalar> {
    pub x: SimplexPoint<T>,
    pub cost: T::Real,
    pub rg: RiemannianGradient<T>,
    pub gradnorm: T::Real,
}

pub(crate) fn evaluate<T: Scalar, P: Problem<T>>(
    manifold: &MatrixSimplex<T>,
    problem: &P,
    x: SimplexPoint<T>,
    cost: Option<T::Real>,
) -> Result<Evaluated<T>> {
    let cost = match cost {
        Some(c) => c,
        None => problem.cost(&x)?,
    };
    let rg = manifold.riemannian_gradient(&x, &problem.euclidean_grad(&x)?)?;
    let gradnorm = manifold.norm(&x, &rg.grad)?;
    Ok(Evaluated { x, cost, rg, gradnorm })
}

/// Re-projects an accepted iterate when the sum constraint has drifted
/// beyond half the feasibility tolerance.
pub(crate) fn keep_on_manifold<T: Scalar>(
    manifold: &MatrixSimplex<T>,
    x: SimplexPoint<T>,
) -> Result<SimplexPoint<T>> {
    if x.sum_residual() > real::<T::Real>(0.5 * manifold.config().tol_feas) {
        manifold.renormalize(x.matrices())
    } else {
        Ok(x)
    }
}

pub(crate) struct TraceRecorder {
    start: Instant,
    records: Vec<IterateRecord>,
}

impl TraceRecorder {
    pub fn new() -> Self {
        TraceRecorder {
            start: Instant::now(),
            records: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn push<T: Scalar>(&mut self, e: &Evaluated<T>, step: f64, inner_iters: usize) {
        let iter = self.records.len();
        let near_boundary = e.x.near_boundary();
        if near_boundary {
            log::warn!("iterate {iter} is near the boundary of the manifold");
        }
        self.records.push(IterateRecord {
            iter,
            cost: to_f64(e.cost),
            gradnorm: to_f64(e.gradnorm),
            step,
            inner_iters,
            wall_ms: self.start.elapsed().as_secs_f64() * 1e3,
            near_boundary,
        });
    }

    pub fn finish<T: Scalar>(self, point: SimplexPoint<T>, status: Status) -> SolveResult<T> {
        SolveResult {
            point,
            trace: IterateTrace {
                records: self.records,
                status,
            },
        }
    }
}

pub(crate) fn check_start<T: Scalar>(
    manifold: &MatrixSimplex<T>,
    x0: &SimplexPoint<T>,
    cfg: &SolverConfig,
) -> Result<()> {
    cfg.validate()?;
    if x0.n() != manifold.n() || x0.k() != manifold.k() {
        return Err(Error::InvalidInput("initial point does not match the manifold".into()));
    }
    Ok(())
}

/// Status for a failed step: boundary if the iterate is close to it.
pub(crate) fn failure_status<T: Scalar>(x: &SimplexPoint<T>, err: &Error) -> Status {
    match err {
        Error::LineSearchFail { .. } if x.near_boundary() => Status::Boundary,
        Error::LineSearchFail { .. } => Status::LineSearchFail,
        Error::NotPositiveDefinite { .. } => Status::Boundary,
        other => Status::NumericalError(other.to_string()),
    }
}
