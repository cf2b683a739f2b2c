use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_matsimplex"));
    c.env_remove("MATSIMPLEX_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Workspace {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, v: &Value) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
        p
    }

    /// Config with trace and point outputs inside the workspace.
    fn config(&self, name: &str, problem: Value, solver: Value, seed: u64) -> PathBuf {
        let stem = name.trim_end_matches(".json");
        let v = json!({
            "problem": problem,
            "solver": solver,
            "seed": seed,
            "output": {
                "trace_path": self.path(&format!("{stem}.csv")),
                "point_path": self.path(&format!("{stem}.point.json")),
            }
        });
        self.write(name, &v)
    }
}

fn logdet_problem() -> Value {
    json!({"variant": "weighted_logdet", "n": 3, "K": 3, "field": "real", "data": {"weights": [1, 2, 3]}})
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

struct Trace {
    rows: Vec<Vec<String>>,
    status: String,
}

fn read_trace(p: &Path) -> Trace {
    let text = std::fs::read_to_string(p).unwrap();
    let (body, status) = text.trim_end().rsplit_once('\n').unwrap();
    let status = status.strip_prefix("# status=").expect("status line").to_string();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let headers: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(headers, ["iter", "cost", "gradnorm", "step", "inner_iters", "wall_ms"]);
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    Trace { rows, status }
}

#[test]
fn logdet_solve_reaches_analytic_optimum() {
    let ws = Workspace::new();
    let cfg = ws.config("logdet.json", logdet_problem(), json!({"method": "rtr"}), 1);
    let out = run(&["solve", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("status=converged"));

    let point = read_json(&ws.path("logdet.point.json"));
    assert_eq!(point["field"], "real");
    assert_eq!(point["K"], 3);
    let mut err2 = 0.0;
    for (i, part) in point["parts"].as_array().unwrap().iter().enumerate() {
        for r in 0..3 {
            for c in 0..3 {
                let want = if r == c { (i + 1) as f64 / 6.0 } else { 0.0 };
                let got = part[r][c].as_f64().unwrap();
                err2 += (got - want).powi(2);
            }
        }
    }
    assert!(err2.sqrt() <= 1e-6, "distance {}", err2.sqrt());

    let trace = read_trace(&ws.path("logdet.csv"));
    assert_eq!(trace.status, "converged");
    let iters: Vec<usize> = trace.rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(iters.windows(2).all(|w| w[1] > w[0]));
    for row in &trace.rows {
        for v in &row[1..] {
            v.parse::<f64>().unwrap();
        }
    }
}

#[test]
fn every_method_converges_from_the_cli() {
    let ws = Workspace::new();
    for method in ["rsd", "rcg", "rtr"] {
        let cfg = ws.config(
            &format!("{method}.json"),
            logdet_problem(),
            json!({"method": method, "max_iter": 500, "tol_gradnorm": 1e-7}),
            3,
        );
        let out = run(&["solve", cfg.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{method}: {}", stdout(&out));
    }
}

#[test]
fn max_iter_exit_code() {
    let ws = Workspace::new();
    let cfg = ws.config("one.json", logdet_problem(), json!({"method": "rsd", "max_iter": 1}), 5);
    let out = run(&["solve", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert_eq!(read_trace(&ws.path("one.csv")).status, "max_iter");
}

#[test]
fn solver_failure_exit_code() {
    let ws = Workspace::new();
    let solver = json!({"method": "rsd", "overrides": {"armijo": {"initial_step": 1e6, "max_backtracks": 1}}});
    let cfg = ws.config("fail.json", logdet_problem(), solver, 1);
    let out = run(&["solve", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    assert_eq!(read_trace(&ws.path("fail.csv")).status, "line_search_fail");
}

#[test]
fn config_errors_name_the_key() {
    let ws = Workspace::new();
    let mut problem = logdet_problem();
    problem["colour"] = json!("blue");
    let cfg = ws.config("bad.json", problem, json!({"method": "rtr"}), 0);
    let out = run(&["solve", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("problem.colour") || stderr(&out).contains("colour"), "{}", stderr(&out));

    let cfg = ws.config("bad2.json", logdet_problem(), json!({"method": "newton"}), 0);
    let out = run(&["solve", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("solver.method"), "{}", stderr(&out));

    let p = ws.path("broken.json");
    std::fs::write(&p, "{\"problem\": {\"variant\": ").unwrap();
    let out = run(&["solve", p.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("config error"), "{}", stderr(&out));

    let out = run(&["solve", ws.path("missing.json").to_str().unwrap()]);
    assert_eq!(code(&out), 1);
}

#[test]
fn invalid_problem_data_is_a_config_error() {
    let ws = Workspace::new();
    let problem = json!({"variant": "povm_mle", "n": 2, "K": 2,
        "data": {"states": [[[1, 0], [0, 1]]], "counts": [[3, 4]]}});
    let cfg = ws.config("trace.json", problem, json!({"method": "rtr"}), 0);
    let out = run(&["solve", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let msg = stderr(&out);
    assert!(msg.contains("problem.data.states") && msg.contains("trace"), "{msg}");
}

#[test]
fn identical_runs_give_identical_traces() {
    let ws = Workspace::new();
    let problem = json!({"variant": "nearest_point", "n": 3, "K": 3});
    let a = ws.config("a.json", problem.clone(), json!({"method": "rcg"}), 17);
    let b = ws.config("b.json", problem, json!({"method": "rcg"}), 17);
    assert_eq!(code(&run(&["solve", a.to_str().unwrap()])), 0);
    assert_eq!(code(&run(&["solve", b.to_str().unwrap()])), 0);
    let strip = |p: &Path| -> Vec<Vec<String>> {
        read_trace(p).rows.into_iter().map(|mut r| {
            r.truncate(5);
            r
        }).collect()
    };
    assert_eq!(strip(&ws.path("a.csv")), strip(&ws.path("b.csv")));
    assert_eq!(
        std::fs::read(ws.path("a.point.json")).unwrap(),
        std::fs::read(ws.path("b.point.json")).unwrap()
    );
}

#[test]
fn seed_override_from_environment() {
    let ws = Workspace::new();
    let cfg = ws.config("s.json", logdet_problem(), json!({"method": "rsd", "max_iter": 3}), 1);
    let first_cost = |seed: Option<&str>| {
        let mut c = bin();
        if let Some(s) = seed {
            c.env("MATSIMPLEX_SEED", s);
        }
        let out = c.args(["solve", cfg.to_str().unwrap()]).output().unwrap();
        assert_eq!(code(&out), 2);
        read_trace(&ws.path("s.csv")).rows[0][1].clone()
    };
    let base = first_cost(None);
    assert_eq!(first_cost(Some("1")), base);
    assert_ne!(first_cost(Some("2")), base);
}

#[test]
fn written_point_round_trips_as_a_start() {
    let ws = Workspace::new();
    let cfg = ws.config("first.json", logdet_problem(), json!({"method": "rtr"}), 2);
    assert_eq!(code(&run(&["solve", cfg.to_str().unwrap()])), 0);
    let start = ws.path("first.point.json");
    let solver = json!({"method": "rtr", "start_path": start});
    let cfg = ws.config("second.json", logdet_problem(), solver, 2);
    let out = run(&["solve", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(read_trace(&ws.path("second.csv")).rows.len() <= 2);

    // A point of the wrong size is rejected on ingest.
    let mut problem = logdet_problem();
    problem["n"] = json!(2);
    let solver = json!({"method": "rtr", "start_path": start});
    let cfg = ws.config("third.json", problem, solver, 2);
    let out = run(&["solve", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("solver.start_path"), "{}", stderr(&out));
}

#[test]
fn complex_entries_are_pairs() {
    let ws = Workspace::new();
    let problem = json!({"variant": "nearest_point", "n": 2, "K": 2, "field": "complex",
        "data": {"targets": [
            [[0.6, [0.05, 0.1]], [[0.05, -0.1], 0.4]],
            [[0.4, [-0.05, -0.1]], [[-0.05, 0.1], 0.6]]
        ]}});
    let cfg = ws.config("c.json", problem, json!({"method": "rtr"}), 0);
    let out = run(&["solve", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let point = read_json(&ws.path("c.point.json"));
    assert_eq!(point["field"], "complex");
    let z = &point["parts"][0][0][1];
    // Targets sum to I, so the minimizer is the targets themselves.
    assert!((z[0].as_f64().unwrap() - 0.05).abs() < 1e-8, "{z}");
    assert!((z[1].as_f64().unwrap() - 0.1).abs() < 1e-8, "{z}");
}

#[test]
fn check_passes_and_reports_dimension() {
    let out = run(&["check", "--n", "3", "--K", "4", "--trials", "20", "--seed", "7"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let out = run(&["check", "--n", "1", "--K", "3", "--trials", "5"]);
    assert_eq!(code(&out), 0);
    let line = stdout(&out).lines().find(|l| l.starts_with("dimension")).unwrap().to_string();
    assert_eq!(line.split_whitespace().nth(1), Some("2"), "{line}");
    let out = run(&["check", "--n", "2", "--K", "3", "--field", "complex", "--trials", "5"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
}

#[test]
fn check_fault_names_tangency() {
    let out = run(&["check", "--n", "3", "--K", "4", "--trials", "5", "--fault", "skip-multiplier"]);
    assert_eq!(code(&out), 4);
    assert!(stderr(&out).contains("tangency"), "{}", stderr(&out));
}

#[test]
fn check_rejects_bad_sizes() {
    assert_eq!(code(&run(&["check", "--n", "2", "--K", "1"])), 1);
    assert_eq!(code(&run(&["check", "--n", "2"])), 1);
    assert_eq!(code(&run(&["bogus"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

fn slope(report: &str, name: &str) -> f64 {
    let line = report.lines().find(|l| l.starts_with(name)).unwrap();
    line.split_whitespace().nth(1).unwrap().parse().unwrap()
}

#[test]
fn gradcheck_logdet_has_both_slopes() {
    let ws = Workspace::new();
    let cfg = ws.write("g.json", &json!({"problem": logdet_problem(), "seed": 3}));
    let out = run(&["gradcheck", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let report = stdout(&out);
    assert!((slope(&report, "first_order_slope") - 2.0).abs() <= 0.2);
    assert!((slope(&report, "second_order_slope") - 3.0).abs() <= 0.3);
}

#[test]
fn gradcheck_nearest_point_and_povm() {
    let ws = Workspace::new();
    for (name, problem) in [
        ("np.json", json!({"variant": "nearest_point", "n": 3, "K": 3})),
        ("povm.json", json!({"variant": "povm_mle", "n": 2, "K": 3, "field": "complex"})),
    ] {
        let cfg = ws.write(name, &json!({"problem": problem, "seed": 8}));
        let out = run(&["gradcheck", cfg.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{name}: {}", stdout(&out));
        assert!((slope(&stdout(&out), "first_order_slope") - 2.0).abs() <= 0.2);
    }
}

#[test]
fn gradcheck_catches_scaled_gradient() {
    let ws = Workspace::new();
    let cfg = ws.write("g.json", &json!({"problem": logdet_problem(), "seed": 3}));
    let out = run(&["gradcheck", cfg.to_str().unwrap(), "--fault", "scale-grad"]);
    assert_eq!(code(&out), 4);
    assert!(stderr(&out).contains("first_order_slope"));
    assert!((slope(&stdout(&out), "first_order_slope") - 1.0).abs() <= 0.2);
}

#[test]
fn bench_covers_the_grid() {
    let out = run(&["bench", "--n", "1,3", "--K", "2,4", "--seed", "1", "--budget-ms", "10"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let mut r = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(r.headers().unwrap(), vec!["op", "n", "K", "mean_ms"]);
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 3 * 2 * 2);
    for op in ["project", "retract", "ehess_to_rhess"] {
        for n in ["1", "3"] {
            for k in ["2", "4"] {
                assert!(rows.iter().any(|row| &row[0] == op && &row[1] == n && &row[2] == k));
            }
        }
    }
    for row in rows.iter().filter(|row| &row[1] == "1") {
        assert!(row[3].parse::<f64>().unwrap() < 1.0, "{row:?}");
    }
    assert_eq!(code(&run(&["bench", "--n", "0", "--K", "2"])), 1);
}
