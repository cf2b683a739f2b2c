//! Timing of the core geometric operations over a grid of sizes.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::linalg::hermitian_part;
use crate::manifold::{MatrixSimplex, SimplexPoint};
use crate::scalar::{lift, real, to_f64, Scalar};

/// Operations timed by [`bench_grid`].
pub const OPERATIONS: [&str; 3] = ["project", "retract", "ehess_to_rhess"];

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub op: &'static str,
    pub n: usize,
    pub k: usize,
    pub mean_ms: f64,
    pub reps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchOptions {
    /// Each cell repeats its operation until this much time has passed.
    pub budget: Duration,
    pub min_reps: usize,
    pub max_reps: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            budget: Duration::from_millis(200),
            min_reps: 3,
            max_reps: 100_000,
        }
    }
}

const BATCHES: usize = 5;

/// Mean time per call of the fastest of [`BATCHES`] batches, each given an
/// equal share of the budget, and the total number of timed calls. One
/// untimed batch runs first.
fn time_op<F: FnMut() -> Result<()>>(opts: &BenchOptions, mut f: F) -> Result<(f64, usize)> {
    let share = opts.budget / BATCHES as u32;
    let warm = Instant::now();
    while warm.elapsed() < share / 2 {
        f()?;
    }
    let (mut best, mut total) = (f64::INFINITY, 0);
    for _ in 0..BATCHES {
        let start = Instant::now();
        let mut reps = 0;
        while reps < opts.min_reps || (start.elapsed() < share && reps < opts.max_reps) {
            f()?;
            reps += 1;
        }
        best = best.min(start.elapsed().as_secs_f64() * 1e3 / reps as f64);
        total += reps;
    }
    Ok((best, total))
}

/// Point `Xᵢ = (I + sᵢ D)/K` with one random `D` of unit Frobenius norm and
/// signs `sᵢ = ±½` alternating (zero for an odd last part). The spectrum of
/// the multiplier operator `Λ ↦ Σ XᵢΛXᵢ`, up to the factor `1/K`, is then the
/// same for every `K`, so timings isolate the per-part cost.
pub fn bench_point<T: Scalar, G: Rng + ?Sized>(
    m: &MatrixSimplex<T>,
    rng: &mut G,
) -> Result<SimplexPoint<T>> {
    let (n, k) = (m.n(), m.k());
    let h = hermitian_part(&m.random_ambient(rng).parts()[0]);
    let scale = to_f64(h.norm()).max(f64::MIN_POSITIVE);
    let d = &h * lift::<T>(real(1.0 / scale));
    let inv_k: T = lift(real(1.0 / k as f64));
    let parts = (0..k)
        .map(|i| {
            let s = if k % 2 == 1 && i == k - 1 {
                0.0
            } else if i % 2 == 0 {
                0.5
            } else {
                -0.5
            };
            (DMatrix::<T>::identity(n, n) + &d * lift::<T>(real(s))) * inv_k
        })
        .collect();
    m.renormalize(parts)
}

/// Times every operation at every `(n, K)` of the grid, at a
/// [`bench_point`] drawn once per cell from an RNG seeded with `seed`.
pub fn bench_grid<T: Scalar>(
    ns: &[usize],
    ks: &[usize],
    seed: u64,
    opts: &BenchOptions,
) -> Result<Vec<BenchRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for &n in ns {
        for &k in ks {
            let m = MatrixSimplex::<T>::with_sizes(n, k)?;
            let x = bench_point(&m, &mut rng)?;
            let z = m.random_ambient(&mut rng);
            let g = m.random_ambient(&mut rng);
            let h = m.random_ambient(&mut rng);
            let xi = m.random_tangent(&x, &mut rng)?;
            for op in OPERATIONS {
                let (mean_ms, reps) = match op {
                    "project" => time_op(opts, || m.project(&x, &z).map(drop))?,
                    "retract" => time_op(opts, || m.retract(&x, &xi).map(drop))?,
                    _ => time_op(opts, || m.ehess_to_rhess(&x, &g, &h, &xi).map(drop))?,
                };
                rows.push(BenchRow { op, n, k, mean_ms, reps });
            }
        }
    }
    Ok(rows)
}

/// Least-squares slope of `log mean_ms` against `log K` for one operation
/// at a fixed `n`.
pub fn scaling_slope(rows: &[BenchRow], op: &str, n: usize) -> f64 {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.op == op && r.n == n)
        .map(|r| (r.k as f64, r.mean_ms))
        .collect();
    crate::checks::loglog_slope(&pts)
}
