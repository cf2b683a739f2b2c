//! Geometry of the matrix simplex
//!
//! `M = {(X₁, …, X_K) : Xᵢ ≻ 0, Σᵢ Xᵢ = I}` with the sum of affine-invariant
//! metrics `g_x(ξ, η) = Σᵢ tr(Xᵢ⁻¹ ξᵢ Xᵢ⁻¹ ηᵢ)`. Tangent vectors are tuples of
//! symmetric matrices summing to zero. Everything here works unchanged for
//! Hermitian matrices by picking a complex [`Scalar`].

mod point;

use std::marker::PhantomData;

use nalgebra::{ComplexField, DMatrix, RealField};
use num_traits::{One, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use point::{AmbientVec, SimplexPoint, TangentVec, NEAR_BOUNDARY};

use crate::error::{Error, Result};
use crate::linalg::{
    self, frob_inner, hermitian_part, matrix_exp_capped, LinearSolveOptions, SpdMatrix, SymMatrix,
};
use crate::scalar::{lift, real, to_f64, Scalar};

/// Scalar field of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Real,
    Complex,
}

impl FieldKind {
    pub fn of<T: Scalar>() -> Self {
        if T::IS_COMPLEX {
            FieldKind::Complex
        } else {
            FieldKind::Real
        }
    }
}

/// Sizes and numerical tolerances of the geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryConfig {
    pub n: usize,
    pub k: usize,
    pub field: FieldKind,
    /// Tolerance on `‖Σ Xᵢ − I‖_F` (and on `‖Σ ξᵢ‖_F`, relative).
    pub tol_feas: f64,
    /// Smallest admissible eigenvalue of a part.
    pub eps_pd: f64,
    /// Relative residual target of the multiplier solve.
    pub tol_lin: f64,
    /// Largest spectral norm accepted as a retraction exponent.
    pub exp_cap: f64,
    pub rng_seed: u64,
}

impl GeometryConfig {
    pub fn new(n: usize, k: usize, field: FieldKind) -> Self {
        GeometryConfig {
            n,
            k,
            field,
            tol_feas: 1e-8,
            eps_pd: linalg::DEFAULT_EPS_PD,
            tol_lin: linalg::DEFAULT_TOL_LIN,
            exp_cap: 700.0,
            rng_seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::InvalidInput("n must be at least 1".into()));
        }
        if self.k < 2 {
            return Err(Error::InvalidInput("K must be at least 2".into()));
        }
        for (name, v) in [
            ("tol_feas", self.tol_feas),
            ("eps_pd", self.eps_pd),
            ("tol_lin", self.tol_lin),
            ("exp_cap", self.exp_cap),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Riemannian gradient together with the pieces the Hessian reuses.
#[derive(Debug, Clone)]
pub struct RiemannianGradient<T: Scalar> {
    pub grad: TangentVec<T>,
    /// Multiplier `Λ` of the projection of `(Xᵢ symm(Gᵢ) Xᵢ)ᵢ`.
    pub multiplier: DMatrix<T>,
    /// `symm(Gᵢ)`.
    pub egrad_sym: Vec<DMatrix<T>>,
}

/// The matrix simplex manifold for a fixed `(n, K)` and scalar field `T`.
#[derive(Debug, Clone)]
pub struct MatrixSimplex<T: Scalar> {
    cfg: GeometryConfig,
    _field: PhantomData<T>,
}

impl<T: Scalar> MatrixSimplex<T> {
    pub fn new(cfg: GeometryConfig) -> Result<Self> {
        cfg.validate()?;
        if cfg.field != FieldKind::of::<T>() {
            return Err(Error::InvalidInput(format!(
                "configuration asks for {:?} field but the scalar type is {:?}",
                cfg.field,
                FieldKind::of::<T>()
            )));
        }
        Ok(MatrixSimplex {
            cfg,
            _field: PhantomData,
        })
    }

    /// Default tolerances for the given sizes.
    pub fn with_sizes(n: usize, k: usize) -> Result<Self> {
        Self::new(GeometryConfig::new(n, k, FieldKind::of::<T>()))
    }

    pub fn config(&self) -> &GeometryConfig {
        &self.cfg
    }

    pub fn n(&self) -> usize {
        self.cfg.n
    }

    pub fn k(&self) -> usize {
        self.cfg.k
    }

    /// Real dimension: `(K−1)·n(n+1)/2` for symmetric, `(K−1)·n²` for
    /// Hermitian parts.
    pub fn dimension(&self) -> usize {
        dimension(&self.cfg)
    }

    fn eps_pd(&self) -> T::Real {
        real(self.cfg.eps_pd)
    }

    /// Solve options for a right-hand side of norm `rhs_norm`: the residual
    /// target is `tol_lin` relative, and also `tol_lin` absolute once
    /// `‖R‖ > 1`, so the tangency defect stays below `tol_lin` for large
    /// inputs.
    fn lin_opts(&self, rhs_norm: f64) -> LinearSolveOptions {
        LinearSolveOptions {
            tol: self.cfg.tol_lin / rhs_norm.max(1.0),
            max_iter: None,
        }
    }

    fn check_tuple(&self, parts: &[DMatrix<T>], what: &str) -> Result<()> {
        if parts.len() != self.cfg.k {
            return Err(Error::InvalidInput(format!(
                "{what} has {} parts, expected K = {}",
                parts.len(),
                self.cfg.k
            )));
        }
        let n = self.cfg.n;
        if let Some(i) = parts.iter().position(|p| p.nrows() != n || p.ncols() != n) {
            return Err(Error::InvalidInput(format!(
                "{what} part {i} is {}x{}, expected {n}x{n}",
                parts[i].nrows(),
                parts[i].ncols()
            )));
        }
        Ok(())
    }

    fn check_point(&self, x: &SimplexPoint<T>) -> Result<()> {
        if x.k() != self.cfg.k || x.n() != self.cfg.n {
            return Err(Error::InvalidInput(format!(
                "point is ({}, {}), manifold is ({}, {})",
                x.n(),
                x.k(),
                self.cfg.n,
                self.cfg.k
            )));
        }
        Ok(())
    }

    /// Checks symmetry, positive definiteness and the sum constraint.
    pub fn validate_point(&self, parts: Vec<DMatrix<T>>) -> Result<SimplexPoint<T>> {
        self.check_tuple(&parts, "point")?;
        let mut spd = Vec::with_capacity(parts.len());
        for (i, m) in parts.into_iter().enumerate() {
            let sym = SymMatrix::new(m).map_err(|e| match e {
                Error::NotSymmetric { residual, .. } => Error::NotSymmetric { part: i, residual },
                other => other,
            })?;
            let p = SpdMatrix::new(sym, self.eps_pd()).map_err(|e| match e {
                Error::NotPositiveDefinite { min_eig, .. } => Error::NotPositiveDefinite {
                    part: Some(i),
                    min_eig,
                },
                other => other,
            })?;
            spd.push(p);
        }
        let x = SimplexPoint { parts: spd };
        let residual = x.sum_residual();
        if !(residual <= real(self.cfg.tol_feas)) {
            return Err(Error::SumConstraintViolated {
                residual: to_f64(residual),
            });
        }
        if x.near_boundary() {
            log::debug!(
                "accepted point near the boundary (smallest eigenvalue {:e})",
                to_f64(x.min_eigenvalue())
            );
        }
        Ok(x)
    }

    /// Checks that `parts` is a tangent vector: symmetric parts whose sum
    /// vanishes relative to `max(1, maxᵢ ‖ξᵢ‖_F)`.
    pub fn validate_tangent(&self, parts: Vec<DMatrix<T>>) -> Result<TangentVec<T>> {
        self.check_tuple(&parts, "tangent vector")?;
        let mut scale = T::Real::one();
        for (i, p) in parts.iter().enumerate() {
            let nrm = p.norm();
            if nrm > scale {
                scale = nrm;
            }
            let residual = linalg::asymmetry(p);
            if !(residual <= real::<T::Real>(linalg::SYMMETRY_TOL) * nrm.max(T::Real::one())) {
                return Err(Error::NotSymmetric {
                    part: i,
                    residual: to_f64(residual),
                });
            }
        }
        let v = TangentVec { parts };
        let residual = v.sum().norm();
        if !(residual <= real::<T::Real>(self.cfg.tol_feas) * scale) {
            return Err(Error::NotTangent {
                residual: to_f64(residual),
            });
        }
        Ok(v)
    }

    /// Metric `Σᵢ Re tr(Xᵢ⁻¹ ξᵢ Xᵢ⁻¹ ηᵢ)`. Also accepts symmetric ambient
    /// tuples through [`Self::inner_ambient`].
    pub fn inner(&self, x: &SimplexPoint<T>, xi: &TangentVec<T>, eta: &TangentVec<T>) -> Result<T::Real> {
        self.inner_parts(x, &xi.parts, &eta.parts)
    }

    pub fn inner_ambient(
        &self,
        x: &SimplexPoint<T>,
        z: &AmbientVec<T>,
        eta: &AmbientVec<T>,
    ) -> Result<T::Real> {
        self.inner_parts(x, &z.parts, &eta.parts)
    }

    fn inner_parts(&self, x: &SimplexPoint<T>, a: &[DMatrix<T>], b: &[DMatrix<T>]) -> Result<T::Real> {
        self.check_point(x)?;
        self.check_tuple(a, "left operand")?;
        self.check_tuple(b, "right operand")?;
        let mut acc = T::Real::zero();
        for ((p, ai), bi) in x.parts.iter().zip(a).zip(b) {
            let w = p.inverse() * ai * p.inverse();
            acc += frob_inner(&w.adjoint(), bi);
        }
        Ok(acc)
    }

    /// Metric norm `sqrt(g_x(ξ, ξ))`.
    pub fn norm(&self, x: &SimplexPoint<T>, xi: &TangentVec<T>) -> Result<T::Real> {
        Ok(self.inner(x, xi, xi)?.max(T::Real::zero()).sqrt())
    }

    /// Metric-orthogonal projection onto the tangent space. Parts are
    /// symmetrized first; then `Λ` solves `Σ XᵢΛXᵢ = −Σ Zᵢ` and the result
    /// is `(Zᵢ + XᵢΛXᵢ)ᵢ`.
    pub fn project(&self, x: &SimplexPoint<T>, z: &AmbientVec<T>) -> Result<TangentVec<T>> {
        self.check_point(x)?;
        self.check_tuple(&z.parts, "ambient vector")?;
        let sym: Vec<_> = z.parts.iter().map(hermitian_part).collect();
        Ok(self.project_symmetric(x, sym)?.0)
    }

    /// Projection of already symmetric parts; also returns the multiplier.
    fn project_symmetric(
        &self,
        x: &SimplexPoint<T>,
        mut parts: Vec<DMatrix<T>>,
    ) -> Result<(TangentVec<T>, DMatrix<T>)> {
        let n = self.cfg.n;
        let total = parts.iter().fold(DMatrix::<T>::zeros(n, n), |acc, p| acc + p);
        let rhs = SymMatrix::from_symmetrized(&(-total));
        let opts = self.lin_opts(to_f64(rhs.as_matrix().norm()));
        let lam = linalg::solve_sum_conjugation(&x.parts, &rhs, &opts)?.into_inner();
        for (p, xi) in parts.iter_mut().zip(&x.parts) {
            let corr = xi.matrix() * &lam * xi.matrix();
            *p += hermitian_part(&corr);
        }
        Ok((TangentVec { parts }, lam))
    }

    /// Transport of a tangent vector at another point into `T_x M` by
    /// projection.
    pub fn transport(&self, x: &SimplexPoint<T>, xi: &TangentVec<T>) -> Result<TangentVec<T>> {
        self.check_point(x)?;
        self.check_tuple(&xi.parts, "tangent vector")?;
        Ok(self.project_symmetric(x, xi.parts.clone())?.0)
    }

    /// Retraction: `Yᵢ = Xᵢ^{1/2} exp(Xᵢ^{-1/2} ξᵢ Xᵢ^{-1/2}) Xᵢ^{1/2}`
    /// followed by the congruence `Y_sum^{-1/2} Yᵢ Y_sum^{-1/2}`.
    pub fn retract(&self, x: &SimplexPoint<T>, xi: &TangentVec<T>) -> Result<SimplexPoint<T>> {
        self.check_point(x)?;
        self.check_tuple(&xi.parts, "tangent vector")?;
        let cap = Some(real::<T::Real>(self.cfg.exp_cap));
        let mut ys = Vec::with_capacity(self.cfg.k);
        for (p, v) in x.parts.iter().zip(&xi.parts) {
            let arg = SymMatrix::from_symmetrized(&(p.inv_sqrt() * v * p.inv_sqrt()));
            let e = matrix_exp_capped(&arg, cap)?;
            ys.push(hermitian_part(&(p.sqrt() * e.matrix() * p.sqrt())));
        }
        self.normalize_parts(ys)
    }

    /// Maps positive definite parts back onto the manifold by the congruence
    /// with `(Σ Yᵢ)^{-1/2}`. Used after drift in long runs.
    pub fn renormalize(&self, parts: Vec<DMatrix<T>>) -> Result<SimplexPoint<T>> {
        self.check_tuple(&parts, "point")?;
        self.normalize_parts(parts)
    }

    fn normalize_parts(&self, ys: Vec<DMatrix<T>>) -> Result<SimplexPoint<T>> {
        let n = self.cfg.n;
        let sum = ys.iter().fold(DMatrix::<T>::zeros(n, n), |acc, y| acc + y);
        let sum = SpdMatrix::new(SymMatrix::from_symmetrized(&sum), self.eps_pd())?;
        let s = sum.inv_sqrt();
        let parts = ys.iter().map(|y| hermitian_part(&(s * y * s))).collect();
        self.validate_point(parts)
    }

    /// Riemannian gradient from the Euclidean partial derivatives `Gᵢ`:
    /// `Π_x((Xᵢ symm(Gᵢ) Xᵢ)ᵢ)`.
    pub fn egrad_to_rgrad(&self, x: &SimplexPoint<T>, egrad: &AmbientVec<T>) -> Result<TangentVec<T>> {
        Ok(self.riemannian_gradient(x, egrad)?.grad)
    }

    pub fn riemannian_gradient(
        &self,
        x: &SimplexPoint<T>,
        egrad: &AmbientVec<T>,
    ) -> Result<RiemannianGradient<T>> {
        self.check_point(x)?;
        self.check_tuple(&egrad.parts, "Euclidean gradient")?;
        let egrad_sym: Vec<_> = egrad.parts.iter().map(hermitian_part).collect();
        let ambient = x
            .parts
            .iter()
            .zip(&egrad_sym)
            .map(|(p, g)| hermitian_part(&(p.matrix() * g * p.matrix())))
            .collect();
        let (grad, multiplier) = self.project_symmetric(x, ambient)?;
        Ok(RiemannianGradient {
            grad,
            multiplier,
            egrad_sym,
        })
    }

    /// Riemannian Hessian along `ξ` from the Euclidean gradient `G` and the
    /// Euclidean Hessian-vector product `Hξ`.
    pub fn ehess_to_rhess(
        &self,
        x: &SimplexPoint<T>,
        egrad: &AmbientVec<T>,
        ehess: &AmbientVec<T>,
        xi: &TangentVec<T>,
    ) -> Result<TangentVec<T>> {
        let rg = self.riemannian_gradient(x, egrad)?;
        self.hessian_with(x, &rg, ehess, xi)
    }

    /// Same as [`Self::ehess_to_rhess`] with the gradient pieces precomputed.
    ///
    /// With `η = X(symm G + Λ)X` the gradient field, the covariant derivative
    /// is `Π(Dη[ξ] − symm(ξᵢ Xᵢ⁻¹ ηᵢ))`. The `XᵢΛ̇Xᵢ` part of `Dη[ξ]` is in
    /// the kernel of `Π` and is never formed.
    pub fn hessian_with(
        &self,
        x: &SimplexPoint<T>,
        rg: &RiemannianGradient<T>,
        ehess: &AmbientVec<T>,
        xi: &TangentVec<T>,
    ) -> Result<TangentVec<T>> {
        self.check_point(x)?;
        self.check_tuple(&ehess.parts, "Euclidean Hessian product")?;
        self.check_tuple(&xi.parts, "tangent vector")?;
        let two: T = lift(real(2.0));
        let lam = &rg.multiplier;
        let parts = (0..self.cfg.k)
            .map(|i| {
                let p = &x.parts[i];
                let xm = p.matrix();
                let v = &xi.parts[i];
                let s = &rg.egrad_sym[i] + lam;
                let first = hermitian_part(&(v * &s * xm)) * two;
                let second = xm * hermitian_part(&ehess.parts[i]) * xm;
                let conn = hermitian_part(&(v * p.inverse() * &rg.grad.parts[i]));
                hermitian_part(&(first + second - conn))
            })
            .collect();
        Ok(self.project_symmetric(x, parts)?.0)
    }

    /// Random point: `Aᵢ = BᵢBᵢᴴ + 0.1·I` with Gaussian `Bᵢ`, normalized by
    /// `S^{-1/2}` where `S = Σ Aᵢ`.
    pub fn random_point<G: Rng + ?Sized>(&self, rng: &mut G) -> SimplexPoint<T> {
        let n = self.cfg.n;
        let shift: T = lift(real(0.1));
        let parts: Vec<_> = (0..self.cfg.k)
            .map(|_| {
                let b = DMatrix::<T>::from_fn(n, n, |_, _| T::sample_normal(rng));
                hermitian_part(&(&b * b.adjoint() + DMatrix::identity(n, n) * shift))
            })
            .collect();
        self.normalize_parts(parts)
            .expect("normalized Gram matrices lie on the manifold")
    }

    /// Random point from the configured seed.
    pub fn random_point_seeded(&self) -> SimplexPoint<T> {
        self.random_point(&mut ChaCha8Rng::seed_from_u64(self.cfg.rng_seed))
    }

    /// Random symmetric Gaussian ambient tuple.
    pub fn random_ambient<G: Rng + ?Sized>(&self, rng: &mut G) -> AmbientVec<T> {
        let n = self.cfg.n;
        AmbientVec {
            parts: (0..self.cfg.k)
                .map(|_| DMatrix::<T>::from_fn(n, n, |_, _| T::sample_normal(rng)))
                .collect(),
        }
    }

    /// Random tangent vector of unit metric norm.
    pub fn random_tangent<G: Rng + ?Sized>(
        &self,
        x: &SimplexPoint<T>,
        rng: &mut G,
    ) -> Result<TangentVec<T>> {
        loop {
            let z = self.random_ambient(rng);
            let v = self.project(x, &z)?;
            let nrm = self.norm(x, &v)?;
            if nrm > T::Real::zero() {
                return Ok(v.scale(nrm.recip()));
            }
        }
    }
}

/// Dimension of the manifold described by `cfg`.
pub fn dimension(cfg: &GeometryConfig) -> usize {
    let per_part = match cfg.field {
        FieldKind::Real => cfg.n * (cfg.n + 1) / 2,
        FieldKind::Complex => cfg.n * cfg.n,
    };
    (cfg.k - 1) * per_part
}
