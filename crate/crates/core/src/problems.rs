//! Benchmark cost functions with Euclidean derivatives.
//!
//! * [`ProblemSpec::NearestPoint`]: `½ Σᵢ ‖Xᵢ − Aᵢ‖²_F`.
//! * [`ProblemSpec::WeightedLogDet`]: `−Σᵢ wᵢ log det Xᵢ`, optimum `(wᵢ/Σw)·I`.
//! * [`ProblemSpec::PovmMle`]: negative log-likelihood of measurement counts
//!   for a POVM `(X₁, …, X_K)` probed with known states `ρⱼ`.

use nalgebra::{ComplexField, DMatrix, RealField};
use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{frob_inner, hermitian_part, SymMatrix};
use crate::manifold::{AmbientVec, MatrixSimplex, SimplexPoint, TangentVec};
use crate::scalar::{lift, real, to_f64, Scalar};

/// Lower clamp on `tr(ρⱼ Xᵢ)` inside the logarithm.
pub const PROBABILITY_FLOOR: f64 = 1e-300;

/// A smooth cost on the manifold, given through Euclidean derivatives.
pub trait Problem<T: Scalar> {
    fn cost(&self, x: &SimplexPoint<T>) -> Result<T::Real>;

    /// Partial derivatives `(∇_{Xᵢ} f)ᵢ`.
    fn euclidean_grad(&self, x: &SimplexPoint<T>) -> Result<AmbientVec<T>>;

    /// Directional derivative of the Euclidean gradient along `ξ`.
    fn euclidean_hess_vec(&self, x: &SimplexPoint<T>, xi: &TangentVec<T>) -> Result<AmbientVec<T>>;
}

/// The benchmark problem family.
#[derive(Debug, Clone)]
pub enum ProblemSpec<T: Scalar> {
    NearestPoint {
        targets: Vec<DMatrix<T>>,
    },
    WeightedLogDet {
        weights: Vec<f64>,
    },
    PovmMle {
        states: Vec<DMatrix<T>>,
        /// `counts[j][i]`: outcome `i` observed for state `j`.
        counts: Vec<Vec<u64>>,
    },
}

impl<T: Scalar> ProblemSpec<T> {
    /// Targets are symmetrized on ingest.
    pub fn nearest_point(targets: Vec<DMatrix<T>>) -> Result<Self> {
        check_square_family(&targets, "target")?;
        if targets.len() < 2 {
            return Err(Error::InvalidInput("need at least two targets".into()));
        }
        Ok(ProblemSpec::NearestPoint {
            targets: targets.iter().map(hermitian_part).collect(),
        })
    }

    pub fn weighted_logdet(weights: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::InvalidInput("need at least two weights".into()));
        }
        if let Some(i) = weights.iter().position(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidInput(format!(
                "weight {i} must be strictly positive, got {}",
                weights[i]
            )));
        }
        Ok(ProblemSpec::WeightedLogDet { weights })
    }

    /// States must be Hermitian PSD with unit trace; `counts` is `J × K`.
    pub fn povm_mle(states: Vec<DMatrix<T>>, counts: Vec<Vec<u64>>) -> Result<Self> {
        check_square_family(&states, "state")?;
        if states.is_empty() {
            return Err(Error::InvalidInput("need at least one state".into()));
        }
        if counts.len() != states.len() {
            return Err(Error::InvalidInput(format!(
                "counts has {} rows but there are {} states",
                counts.len(),
                states.len()
            )));
        }
        let k = counts[0].len();
        if k < 2 || counts.iter().any(|row| row.len() != k) {
            return Err(Error::InvalidInput(
                "counts rows must all have the same length K >= 2".into(),
            ));
        }
        for (j, rho) in states.iter().enumerate() {
            let sym = SymMatrix::new(rho.clone()).map_err(|_| {
                Error::InvalidInput(format!("state {j} is not Hermitian"))
            })?;
            let tr = to_f64(rho.trace().real());
            if (tr - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidInput(format!("state {j} has trace {tr}, expected 1")));
            }
            let (vals, _) = sym.eigen();
            let min = to_f64(vals.min());
            if min < -1e-12 {
                return Err(Error::InvalidInput(format!(
                    "state {j} is not positive semidefinite (eigenvalue {min:e})"
                )));
            }
        }
        Ok(ProblemSpec::PovmMle { states, counts })
    }

    pub fn k(&self) -> usize {
        match self {
            ProblemSpec::NearestPoint { targets } => targets.len(),
            ProblemSpec::WeightedLogDet { weights } => weights.len(),
            ProblemSpec::PovmMle { counts, .. } => counts[0].len(),
        }
    }

    /// Matrix size fixed by the data; `None` for the log-det family.
    pub fn n(&self) -> Option<usize> {
        match self {
            ProblemSpec::NearestPoint { targets } => Some(targets[0].nrows()),
            ProblemSpec::WeightedLogDet { .. } => None,
            ProblemSpec::PovmMle { states, .. } => Some(states[0].nrows()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ProblemSpec::NearestPoint { .. } => "nearest_point",
            ProblemSpec::WeightedLogDet { .. } => "weighted_logdet",
            ProblemSpec::PovmMle { .. } => "povm_mle",
        }
    }

    fn check(&self, x: &SimplexPoint<T>) -> Result<()> {
        if x.k() != self.k() {
            return Err(Error::InvalidInput(format!(
                "problem has K = {}, point has K = {}",
                self.k(),
                x.k()
            )));
        }
        if let Some(n) = self.n() {
            if x.n() != n {
                return Err(Error::InvalidInput(format!(
                    "problem has n = {n}, point has n = {}",
                    x.n()
                )));
            }
        }
        Ok(())
    }
}

fn check_square_family<T: Scalar>(ms: &[DMatrix<T>], what: &str) -> Result<()> {
    let Some(first) = ms.first() else {
        return Ok(());
    };
    let n = first.nrows();
    for (i, m) in ms.iter().enumerate() {
        if m.nrows() != n || m.ncols() != n || n == 0 {
            return Err(Error::InvalidInput(format!(
                "{what} {i} is {}x{}, expected {n}x{n}",
                m.nrows(),
                m.ncols()
            )));
        }
    }
    Ok(())
}

/// `tr(ρ X)` for Hermitian `ρ`, clamped below.
fn probability<T: Scalar>(rho: &DMatrix<T>, x: &DMatrix<T>) -> T::Real {
    let p = frob_inner(rho, x);
    let floor = real::<T::Real>(PROBABILITY_FLOOR);
    if p > floor {
        p
    } else {
        floor
    }
}

impl<T: Scalar> Problem<T> for ProblemSpec<T> {
    fn cost(&self, x: &SimplexPoint<T>) -> Result<T::Real> {
        self.check(x)?;
        let half = real::<T::Real>(0.5);
        Ok(match self {
            ProblemSpec::NearestPoint { targets } => {
                half * (0..x.k())
                    .map(|i| (x.part(i) - &targets[i]).norm_squared())
                    .fold(T::Real::zero(), |a, b| a + b)
            }
            ProblemSpec::WeightedLogDet { weights } => x
                .parts()
                .iter()
                .zip(weights)
                .fold(T::Real::zero(), |acc, (p, &w)| acc - real::<T::Real>(w) * p.logdet()),
            ProblemSpec::PovmMle { states, counts } => {
                let mut acc = T::Real::zero();
                for (rho, row) in states.iter().zip(counts) {
                    for (i, &c) in row.iter().enumerate() {
                        if c > 0 {
                            acc -= real::<T::Real>(c as f64) * probability(rho, x.part(i)).ln();
                        }
                    }
                }
                acc
            }
        })
    }

    fn euclidean_grad(&self, x: &SimplexPoint<T>) -> Result<AmbientVec<T>> {
        self.check(x)?;
        let n = x.n();
        let parts = match self {
            ProblemSpec::NearestPoint { targets } => {
                (0..x.k()).map(|i| x.part(i) - &targets[i]).collect()
            }
            ProblemSpec::WeightedLogDet { weights } => x
                .parts()
                .iter()
                .zip(weights)
                .map(|(p, &w)| p.inverse() * lift::<T>(real(-w)))
                .collect(),
            ProblemSpec::PovmMle { states, counts } => (0..x.k())
                .map(|i| {
                    let mut g = DMatrix::<T>::zeros(n, n);
                    for (rho, row) in states.iter().zip(counts) {
                        let c = row[i];
                        if c > 0 {
                            let p = probability(rho, x.part(i));
                            g -= rho * lift::<T>(real::<T::Real>(c as f64) / p);
                        }
                    }
                    g
                })
                .collect(),
        };
        Ok(AmbientVec::new(parts))
    }

    fn euclidean_hess_vec(&self, x: &SimplexPoint<T>, xi: &TangentVec<T>) -> Result<AmbientVec<T>> {
        self.check(x)?;
        if xi.k() != x.k() || xi.n() != x.n() {
            return Err(Error::InvalidInput("direction shape does not match the point".into()));
        }
        let n = x.n();
        let parts = match self {
            ProblemSpec::NearestPoint { .. } => xi.parts().to_vec(),
            ProblemSpec::WeightedLogDet { weights } => x
                .parts()
                .iter()
                .zip(weights)
                .zip(xi.parts())
                .map(|((p, &w), v)| p.inverse() * v * p.inverse() * lift::<T>(real(w)))
                .collect(),
            ProblemSpec::PovmMle { states, counts } => (0..x.k())
                .map(|i| {
                    let mut h = DMatrix::<T>::zeros(n, n);
                    for (rho, row) in states.iter().zip(counts) {
                        let c = row[i];
                        if c > 0 {
                            let p = probability(rho, x.part(i));
                            let d = frob_inner(rho, &xi.parts()[i]);
                            h += rho * lift::<T>(real::<T::Real>(c as f64) * d / (p * p));
                        }
                    }
                    h
                })
                .collect(),
        };
        Ok(AmbientVec::new(parts))
    }
}

/// Stationary point of the weighted log-det cost: `Xᵢ* = (wᵢ / Σⱼ wⱼ) · I`.
pub fn analytic_optimum_logdet<T: Scalar>(
    weights: &[f64],
    manifold: &MatrixSimplex<T>,
) -> Result<SimplexPoint<T>> {
    if weights.len() != manifold.k() {
        return Err(Error::InvalidInput(format!(
            "{} weights for K = {}",
            weights.len(),
            manifold.k()
        )));
    }
    let total: f64 = weights.iter().sum();
    let n = manifold.n();
    manifold.validate_point(
        weights
            .iter()
            .map(|&w| DMatrix::<T>::identity(n, n) * lift::<T>(real(w / total)))
            .collect(),
    )
}

/// Euclidean projection of `a` onto the probability simplex, by sorting and
/// thresholding.
pub fn project_onto_simplex(a: &[f64]) -> Vec<f64> {
    let mut u = a.to_vec();
    u.sort_by(|x, y| y.total_cmp(x));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (r, &ur) in u.iter().enumerate() {
        cumsum += ur;
        let t = (cumsum - 1.0) / (r + 1) as f64;
        if ur - t > 0.0 {
            theta = t;
        }
    }
    a.iter().map(|&v| (v - theta).max(0.0)).collect()
}

/// Minimizer of the nearest-point cost for targets that are all diagonal
/// in the standard basis. The problem splits into one scalar simplex
/// projection per diagonal index.
pub fn nearest_point_diagonal_oracle<T: Scalar>(
    targets: &[DMatrix<T>],
    manifold: &MatrixSimplex<T>,
) -> Result<SimplexPoint<T>> {
    let (n, k) = (manifold.n(), manifold.k());
    if targets.len() != k || targets.iter().any(|a| a.nrows() != n || a.ncols() != n) {
        return Err(Error::InvalidInput("targets do not match the manifold".into()));
    }
    for (i, a) in targets.iter().enumerate() {
        let scale = a.norm().max(T::Real::one());
        let off = (0..n)
            .flat_map(|r| (0..n).filter(move |&c| c != r).map(move |c| (r, c)))
            .fold(T::Real::zero(), |acc, (r, c)| acc + a[(r, c)].modulus());
        if off > real::<T::Real>(1e-14) * scale {
            return Err(Error::InvalidInput(format!("target {i} is not diagonal")));
        }
    }
    let mut parts = vec![DMatrix::<T>::zeros(n, n); k];
    let eps = manifold.config().eps_pd;
    for d in 0..n {
        let a: Vec<f64> = targets.iter().map(|t| to_f64(t[(d, d)].real())).collect();
        let x = project_onto_simplex(&a);
        for (i, &v) in x.iter().enumerate() {
            if v <= eps {
                return Err(Error::BoundaryHit {
                    index: d * k + i,
                    value: v,
                });
            }
            parts[i][(d, d)] = lift(real(v));
        }
    }
    manifold.validate_point(parts)
}

/// Targets `Aᵢ = Xᵢ* + S` for a well-conditioned random point `X*` and one
/// random symmetric shift `S` shared by all parts, so `X*` is the strictly
/// interior minimizer.
pub fn random_nearest_point<T: Scalar, G: Rng + ?Sized>(
    manifold: &MatrixSimplex<T>,
    rng: &mut G,
) -> ProblemSpec<T> {
    let n = manifold.n();
    let k = manifold.k();
    let uniform = DMatrix::<T>::identity(n, n) * lift::<T>(real(0.5 / k as f64));
    let center = manifold.random_point(rng);
    let g = DMatrix::<T>::from_fn(n, n, |_, _| T::sample_normal(rng));
    let shift = hermitian_part(&g) * lift::<T>(real(0.3));
    let half = lift::<T>(real(0.5));
    let targets = center
        .matrices()
        .into_iter()
        .map(|x| x * half + &uniform + &shift)
        .collect();
    ProblemSpec::nearest_point(targets).expect("generated targets are well formed")
}

/// Diagonal targets whose nearest point is strictly interior: each diagonal
/// index gets an interior simplex point shifted by a common offset.
pub fn random_diagonal_interior<T: Scalar, G: Rng + ?Sized>(
    manifold: &MatrixSimplex<T>,
    rng: &mut G,
) -> ProblemSpec<T> {
    let (n, k) = (manifold.n(), manifold.k());
    let mut targets = vec![DMatrix::<T>::zeros(n, n); k];
    for d in 0..n {
        let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..1.5)).collect();
        let total: f64 = w.iter().sum();
        let shift = rng.random_range(-0.3..0.3);
        for i in 0..k {
            targets[i][(d, d)] = lift(real(w[i] / total + shift));
        }
    }
    ProblemSpec::nearest_point(targets).expect("generated targets are well formed")
}

/// Random density matrix `BBᴴ / tr(BBᴴ)`.
pub fn random_state<T: Scalar, G: Rng + ?Sized>(n: usize, rng: &mut G) -> DMatrix<T> {
    let b = DMatrix::<T>::from_fn(n, n, |_, _| T::sample_normal(rng));
    let g = hermitian_part(&(&b * b.adjoint()));
    let tr = g.trace().real();
    let mut rho = g * lift::<T>(tr.recip());
    // Pin the trace exactly so validation sees 1 to working precision.
    let correction = (T::Real::one() - rho.trace().real()) / real(n as f64);
    for d in 0..n {
        rho[(d, d)] += lift::<T>(correction);
    }
    rho
}

/// POVM fitting instance with `j` random states and counts in `1..=50`.
pub fn random_povm<T: Scalar, G: Rng + ?Sized>(
    manifold: &MatrixSimplex<T>,
    j: usize,
    rng: &mut G,
) -> ProblemSpec<T> {
    let (n, k) = (manifold.n(), manifold.k());
    let states = (0..j).map(|_| random_state::<T, G>(n, rng)).collect();
    let counts = (0..j)
        .map(|_| (0..k).map(|_| rng.random_range(1..=50)).collect())
        .collect();
    ProblemSpec::povm_mle(states, counts).expect("generated instance is well formed")
}
