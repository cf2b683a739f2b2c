//! Riemannian geometry and optimization on the matrix simplex
//!
//! ```text
//! M = { (X₁, …, X_K) : Xᵢ ≻ 0, Σᵢ Xᵢ = I }
//! ```
//!
//! of `K` symmetric (or Hermitian) positive definite `n × n` matrices summing
//! to the identity, with the metric `g_x(ξ, η) = Σᵢ tr(Xᵢ⁻¹ ξᵢ Xᵢ⁻¹ ηᵢ)`.
//!
//! The crate provides the tangent-space projection, an exponential-type
//! retraction, conversion of Euclidean derivatives to Riemannian ones,
//! three solvers (steepest descent, conjugate gradient, trust region) and
//! three benchmark problems. Everything is generic over [`Scalar`]; the
//! aliases below fix the common fields.
//!
//! ```
//! use matsimplex::{RealSimplex, Method, SolverConfig, solve};
//! use matsimplex::problems::{ProblemSpec, analytic_optimum_logdet};
//!
//! let m = RealSimplex::with_sizes(3, 3).unwrap();
//! let p = ProblemSpec::weighted_logdet(vec![1.0, 2.0, 3.0]).unwrap();
//! let x0 = m.random_point_seeded();
//! let out = solve(&m, &p, x0, &SolverConfig::new(Method::Rtr)).unwrap();
//! let opt = analytic_optimum_logdet(&[1.0, 2.0, 3.0], &m).unwrap();
//! assert!(out.point.distance_fro(&opt) < 1e-6);
//! ```

pub mod bench;
pub mod checks;
pub mod error;
pub mod linalg;
pub mod manifold;
pub mod problems;
pub mod scalar;
pub mod solvers;

pub use num_complex::Complex64;

pub use error::{Error, Result};
pub use manifold::{AmbientVec, FieldKind, GeometryConfig, MatrixSimplex, SimplexPoint, TangentVec};
pub use problems::{Problem, ProblemSpec};
pub use scalar::Scalar;
pub use solvers::{solve, IterateRecord, IterateTrace, Method, SolveResult, SolverConfig, Status};

/// Real symmetric matrix simplex.
pub type RealSimplex = MatrixSimplex<f64>;
/// Hermitian matrix simplex.
pub type HermitianSimplex = MatrixSimplex<Complex64>;
pub type RealPoint = SimplexPoint<f64>;
pub type HermitianPoint = SimplexPoint<Complex64>;
pub type RealTangent = TangentVec<f64>;
pub type HermitianTangent = TangentVec<Complex64>;
pub type RealProblem = ProblemSpec<f64>;
pub type HermitianProblem = ProblemSpec<Complex64>;
