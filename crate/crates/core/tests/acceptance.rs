//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs sequentially so the timing criteria see an idle process.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use matsimplex::bench::{bench_grid, scaling_slope, BenchOptions};
use matsimplex::checks::{
    first_order_residuals, first_order_steps, hessian_symmetry, in_band, invariant_suite,
    loglog_slope, rigidity_errors, second_order_residuals, second_order_steps, worst_halving_ratio,
    SuiteOptions, FIRST_ORDER_SLOPE, RIGIDITY_RATIO, SECOND_ORDER_SLOPE,
};
use matsimplex::linalg::{solve_sum_conjugation, LinearSolveOptions, SymMatrix};
use matsimplex::problems::{
    analytic_optimum_logdet, nearest_point_diagonal_oracle, random_diagonal_interior,
    random_nearest_point, random_povm,
};
use matsimplex::{
    solve, Complex64, MatrixSimplex, Method, Problem, ProblemSpec, Scalar, SolverConfig, Status,
};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Verdict = (bool, String);

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn problems<T: Scalar>(m: &MatrixSimplex<T>, seed: u64) -> Vec<ProblemSpec<T>> {
    let mut r = rng(seed);
    let w: Vec<f64> = (1..=m.k()).map(|i| i as f64).collect();
    vec![
        random_nearest_point(m, &mut r),
        ProblemSpec::weighted_logdet(w).unwrap(),
        random_povm(m, 3, &mut r),
    ]
}

fn invariants<T: Scalar>() -> Verdict {
    let start = Instant::now();
    let opts = SuiteOptions {
        rigidity: false,
        rank: false,
        ..Default::default()
    };
    let mut worst = [0.0f64; 4];
    for n in [1, 2, 4, 8] {
        for k in [2, 3, 8] {
            let m = MatrixSimplex::<T>::with_sizes(n, k).unwrap();
            let report = invariant_suite(&m, 50, &mut rng((n * 100 + k) as u64), opts).unwrap();
            if let Some(f) = report.first_failure() {
                return (false, format!("n={n} K={k}: {f}"));
            }
            for (w, c) in worst.iter_mut().zip(&report.checks) {
                *w = w.max(c.value);
            }
        }
    }
    let elapsed = start.elapsed();
    let detail = format!(
        "idempotence {:.1e}, tangency {:.1e}, orthogonality {:.1e}, centering {:.1e}, {:.1} s",
        worst[0],
        worst[1],
        worst[2],
        worst[3],
        elapsed.as_secs_f64()
    );
    (elapsed < Duration::from_secs(60), detail)
}

fn invariants_both_fields() -> Verdict {
    let (a, da) = invariants::<f64>();
    let (b, db) = invariants::<Complex64>();
    (a && b, format!("real: {da}; complex: {db}"))
}

fn rigidity<T: Scalar>() -> Verdict {
    let m = MatrixSimplex::<T>::with_sizes(3, 3).unwrap();
    let mut r = rng(2);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let x = m.random_point(&mut r);
        let xi = m.random_tangent(&x, &mut r).unwrap();
        worst = worst.max(worst_halving_ratio(&rigidity_errors(&m, &x, &xi).unwrap()));
    }
    (worst <= RIGIDITY_RATIO, format!("worst e(t/2)/e(t) = {worst:.4}"))
}

fn gradient_slopes<T: Scalar>() -> Verdict {
    let m = MatrixSimplex::<T>::with_sizes(3, 3).unwrap();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for seed in 0..5 {
        for p in problems(&m, seed) {
            let mut r = rng(1000 + seed);
            let x = m.random_point(&mut r);
            let xi = m.random_tangent(&x, &mut r).unwrap();
            let res = first_order_residuals(&m, &p, &x, &xi, &first_order_steps()).unwrap();
            let s = loglog_slope(&res);
            lo = lo.min(s);
            hi = hi.max(s);
            if !in_band(s, FIRST_ORDER_SLOPE) {
                return (false, format!("{} seed {seed}: slope {s:.3}", p.name()));
            }
        }
    }
    (true, format!("slopes in [{lo:.3}, {hi:.3}] over 3 problems x 5 seeds"))
}

fn hessian_checks<T: Scalar>() -> Verdict {
    // (a) self-adjointness
    let mut sym_worst = 0.0f64;
    for seed in 0..20u64 {
        let (n, k) = [(2, 2), (3, 3), (4, 2), (2, 5)][seed as usize % 4];
        let m = MatrixSimplex::<T>::with_sizes(n, k).unwrap();
        let p = &problems(&m, seed)[seed as usize % 3];
        let mut r = rng(2000 + seed);
        let x = m.random_point(&mut r);
        let xi = m.random_tangent(&x, &mut r).unwrap();
        let eta = m.random_tangent(&x, &mut r).unwrap();
        sym_worst = sym_worst.max(hessian_symmetry(&m, p, &x, &xi, &eta).unwrap());
    }
    // (b) explicit multiplier-derivative oracle
    let mut oracle_worst = 0.0f64;
    for n in 1..=4 {
        for k in 2..=4 {
            let m = MatrixSimplex::<T>::with_sizes(n, k).unwrap();
            for (s, p) in problems(&m, (n * 10 + k) as u64).iter().enumerate() {
                let mut r = rng((3000 + n * 100 + k * 10 + s) as u64);
                let x = m.random_point(&mut r);
                let xi = m.random_tangent(&x, &mut r).unwrap();
                let g = p.euclidean_grad(&x).unwrap();
                let h = p.euclidean_hess_vec(&x, &xi).unwrap();
                let lib = m.ehess_to_rhess(&x, &g, &h, &xi).unwrap();
                let oracle = common::hessian(&x.matrices(), g.parts(), h.parts(), xi.parts());
                oracle_worst = oracle_worst.max(common::rel_diff(lib.parts(), &oracle));
            }
        }
    }
    // (c) second-order slope at the log-det optimum
    let w = [1.0, 2.0, 3.0];
    let m = MatrixSimplex::<T>::with_sizes(3, 3).unwrap();
    let p = ProblemSpec::<T>::weighted_logdet(w.to_vec()).unwrap();
    let opt = analytic_optimum_logdet(&w, &m).unwrap();
    let mut r = rng(4000);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..5 {
        let xi = m.random_tangent(&opt, &mut r).unwrap();
        let s = loglog_slope(&second_order_residuals(&m, &p, &opt, &xi, &second_order_steps()).unwrap());
        lo = lo.min(s);
        hi = hi.max(s);
    }
    let ok = sym_worst <= 1e-8
        && oracle_worst <= 1e-10
        && in_band(lo, SECOND_ORDER_SLOPE)
        && in_band(hi, SECOND_ORDER_SLOPE);
    let detail = format!(
        "(a) self-adjointness {sym_worst:.1e}; (b) oracle {oracle_worst:.1e}; (c) slopes [{lo:.3}, {hi:.3}]"
    );
    (ok, detail)
}

fn linear_oracle() -> Verdict {
    let mut worst = 0.0f64;
    let mut r = rng(5);
    for i in 0..50 {
        let n = 1 + i % 4;
        let k = 2 + (i / 4) % 5;
        let m = MatrixSimplex::<f64>::with_sizes(n, k).unwrap();
        let x = m.random_point(&mut r);
        let rhs = common::sym(&m.random_ambient(&mut r).parts()[0]);
        let lam = solve_sum_conjugation(
            x.parts(),
            &SymMatrix::from_symmetrized(&rhs),
            &LinearSolveOptions::default(),
        )
        .unwrap();
        let oracle = common::dense_sum_conjugation(&x.matrices(), &rhs);
        worst = worst.max((lam.as_matrix() - &oracle).norm() / oracle.norm());
    }
    (worst <= 1e-9, format!("worst relative difference {worst:.1e} over 50 instances"))
}

fn logdet_convergence() -> Verdict {
    let w = [1.0, 2.0, 3.0, 4.0];
    let m = MatrixSimplex::<f64>::with_sizes(5, 4).unwrap();
    let p = ProblemSpec::<f64>::weighted_logdet(w.to_vec()).unwrap();
    let opt = analytic_optimum_logdet(&w, &m).unwrap();
    let mut parts = Vec::new();
    let mut ok = true;
    for (method, budget) in [(Method::Rsd, 500), (Method::Rcg, 200), (Method::Rtr, 50)] {
        let (mut iters, mut err, mut secs) = (0usize, 0.0f64, 0.0f64);
        for seed in 0..5 {
            let x0 = m.random_point(&mut rng(600 + seed));
            let cfg = SolverConfig::new(method).with_tol(1e-7).with_max_iter(budget);
            let start = Instant::now();
            let out = solve(&m, &p, x0, &cfg).unwrap();
            let elapsed = start.elapsed().as_secs_f64();
            let e = out.point.distance_fro(&opt);
            ok &= e <= 1e-6 && out.trace.iterations() <= budget && elapsed < 5.0;
            iters = iters.max(out.trace.iterations());
            err = err.max(e);
            secs = secs.max(elapsed);
        }
        parts.push(format!("{} {iters} it, err {err:.1e}, {:.0} ms", method.name(), secs * 1e3));
    }
    (ok, parts.join("; "))
}

fn diagonal_oracle() -> Verdict {
    let m = MatrixSimplex::<f64>::with_sizes(3, 4).unwrap();
    let mut worst = 0.0f64;
    for seed in 0..5 {
        let mut r = rng(700 + seed);
        let p = random_diagonal_interior(&m, &mut r);
        let ProblemSpec::NearestPoint { targets } = &p else {
            unreachable!()
        };
        let oracle = nearest_point_diagonal_oracle(targets, &m).unwrap();
        let x0 = m.random_point(&mut r);
        let out = solve(&m, &p, x0, &SolverConfig::new(Method::Rtr)).unwrap();
        if out.trace.status != Status::Converged {
            return (false, format!("seed {seed}: {}", out.trace.status));
        }
        worst = worst.max(out.point.distance_fro(&oracle));
    }
    (worst <= 1e-5, format!("worst distance to oracle {worst:.1e}"))
}

fn scalar_reduction() -> Verdict {
    let mut worst = 0.0f64;
    let mut r = rng(8);
    for i in 0..100 {
        let m = MatrixSimplex::<f64>::with_sizes(1, 2 + i % 7).unwrap();
        let x = m.random_point(&mut r);
        let z = m.random_ambient(&mut r);
        let xs: Vec<f64> = x.matrices().iter().map(|a| a[(0, 0)]).collect();
        let zs: Vec<f64> = z.parts().iter().map(|a| a[(0, 0)]).collect();
        let expect = common::scalar_projection(&xs, &zs);
        let got = m.project(&x, &z).unwrap();
        for (g, e) in got.parts().iter().zip(&expect) {
            worst = worst.max((g[(0, 0)] - e).abs());
        }
    }
    (worst <= 1e-12, format!("worst deviation {worst:.1e} over 100 instances"))
}

fn bernoulli() -> Verdict {
    let n = 2;
    let m = MatrixSimplex::<Complex64>::with_sizes(n, 2).unwrap();
    let rho = DMatrix::<Complex64>::identity(n, n) * Complex64::new(1.0 / n as f64, 0.0);
    let mut worst = 0.0f64;
    for (seed, (c1, c2)) in [(3u64, 7u64), (1, 1), (12, 5), (40, 2)].into_iter().enumerate() {
        let p = ProblemSpec::povm_mle(vec![rho.clone()], vec![vec![c1, c2]]).unwrap();
        let x0 = m.random_point(&mut rng(900 + seed as u64));
        let cfg = SolverConfig::new(Method::Rsd).with_tol(1e-9);
        let out = solve(&m, &p, x0, &cfg).unwrap();
        let costs: Vec<f64> = out.trace.records.iter().map(|r| r.cost).collect();
        if costs.windows(2).any(|c| c[1] > c[0] + 1e-12) {
            return (false, format!("counts ({c1},{c2}): cost increased under RSD"));
        }
        let ratio = out.point.part(0).trace().re / n as f64;
        worst = worst.max((ratio - c1 as f64 / (c1 + c2) as f64).abs());
    }
    (worst <= 1e-4, format!("worst |tr(X1)/n - c1/(c1+c2)| = {worst:.1e}"))
}

fn hermitian() -> Verdict {
    let parts = [
        ("1", invariants::<Complex64>()),
        ("2", rigidity::<Complex64>()),
        ("3", gradient_slopes::<Complex64>()),
        ("4", hessian_checks::<Complex64>()),
        ("bernoulli", bernoulli()),
    ];
    let ok = parts.iter().all(|(_, (p, _))| *p);
    let detail = parts
        .iter()
        .map(|(name, (p, d))| format!("[{name}: {} {d}]", if *p { "ok" } else { "FAIL" }))
        .collect::<Vec<_>>()
        .join(" ");
    (ok, detail)
}

fn cost_scaling() -> Verdict {
    // Repeated passes over the grid take the fastest time per cell, so a
    // transient slowdown cannot land on a single K.
    let opts = BenchOptions {
        budget: Duration::from_millis(40),
        ..Default::default()
    };
    let ks = [2, 4, 8, 16];
    let mut rows = bench_grid::<f64>(&[32], &ks, 10, &opts).unwrap();
    for _ in 0..14 {
        let again = bench_grid::<f64>(&[32], &ks, 10, &opts).unwrap();
        for (r, a) in rows.iter_mut().zip(again) {
            r.mean_ms = r.mean_ms.min(a.mean_ms);
        }
    }
    let slope = scaling_slope(&rows, "project", 32);
    let times: Vec<String> = rows
        .iter()
        .filter(|r| r.op == "project")
        .map(|r| format!("K={} {:.3} ms", r.k, r.mean_ms))
        .collect();
    (
        (0.7..=1.3).contains(&slope),
        format!("slope {slope:.3} ({})", times.join(", ")),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("manifold invariant suite", invariants_both_fields),
        ("retraction rigidity", rigidity::<f64>),
        ("gradient Taylor slope", gradient_slopes::<f64>),
        ("Hessian checks", hessian_checks::<f64>),
        ("linear-system oracle", linear_oracle),
        ("solver-to-analytic convergence", logdet_convergence),
        ("solver-to-oracle convergence", diagonal_oracle),
        ("n=1 reduction", scalar_reduction),
        ("Hermitian mode", hermitian),
        ("cost scaling in K", cost_scaling),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (ok, detail) = run();
        failed += usize::from(!ok);
        println!("{} criterion {:>2}: {name}: {detail}", if ok { "PASS" } else { "FAIL" }, i + 1);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
