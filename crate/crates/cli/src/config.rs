//! Run configuration: JSON schema, validation and instance construction.

use std::fmt;
use std::path::{Path, PathBuf};

use matsimplex::problems::random_nearest_point;
use matsimplex::problems::random_povm;
use matsimplex::solvers::{ArmijoConfig, RtrConfig};
use matsimplex::{
    FieldKind, GeometryConfig, MatrixSimplex, Method, ProblemSpec, Scalar, SolverConfig,
};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::{decode_matrix, MatrixRows};
use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub solver: Option<SolverSection>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    NearestPoint,
    WeightedLogdet,
    PovmMle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    #[default]
    Real,
    Complex,
}

impl Field {
    pub fn kind(self) -> FieldKind {
        match self {
            Field::Real => FieldKind::Real,
            Field::Complex => FieldKind::Complex,
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Field::Real => "real",
            Field::Complex => "complex",
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub variant: Variant,
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(default)]
    pub field: Field,
    /// Absent: a random instance is drawn from the seed.
    #[serde(default)]
    pub data: Option<ProblemData>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemData {
    pub targets: Option<Vec<MatrixRows>>,
    pub weights: Option<Vec<f64>>,
    pub states: Option<Vec<MatrixRows>>,
    pub counts: Option<Vec<Vec<u64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    Rsd,
    Rcg,
    Rtr,
}

impl From<MethodName> for Method {
    fn from(m: MethodName) -> Self {
        match m {
            MethodName::Rsd => Method::Rsd,
            MethodName::Rcg => Method::Rcg,
            MethodName::Rtr => Method::Rtr,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub method: MethodName,
    pub max_iter: Option<usize>,
    pub tol_gradnorm: Option<f64>,
    #[serde(default)]
    pub overrides: Overrides,
    /// Point file to start from instead of a random point.
    pub start_path: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub armijo: Option<ArmijoOverrides>,
    pub rtr: Option<RtrOverrides>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmijoOverrides {
    pub initial_step: Option<f64>,
    pub contraction: Option<f64>,
    pub sufficient_decrease: Option<f64>,
    pub max_backtracks: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RtrOverrides {
    pub initial_radius: Option<f64>,
    pub max_radius: Option<f64>,
    pub eta_accept: Option<f64>,
    pub tcg_max_inner: Option<usize>,
    pub tcg_kappa: Option<f64>,
    pub tcg_theta: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub trace_path: Option<PathBuf>,
    pub point_path: Option<PathBuf>,
}

/// Parses a configuration document, naming the key path of the first error.
pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::config(path, e.into_inner().to_string())
    })
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(".", format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

impl SolverSection {
    pub fn to_solver_config(&self) -> Result<SolverConfig, CliError> {
        let method = Method::from(self.method);
        let mut cfg = SolverConfig::new(method);
        if let Some(m) = self.max_iter {
            cfg.max_iter = m;
        }
        if let Some(t) = self.tol_gradnorm {
            cfg.tol_gradnorm = t;
        }
        if let Some(a) = &self.overrides.armijo {
            if method == Method::Rtr {
                return Err(CliError::config(
                    "solver.overrides.armijo",
                    "line-search settings do not apply to method rtr",
                ));
            }
            apply_armijo(&mut cfg.armijo, a);
        }
        if let Some(r) = &self.overrides.rtr {
            if method != Method::Rtr {
                return Err(CliError::config(
                    "solver.overrides.rtr",
                    format!("trust-region settings do not apply to method {}", method.name()),
                ));
            }
            apply_rtr(&mut cfg.rtr, r);
        }
        cfg.validate()
            .map_err(|e| CliError::config("solver", e.to_string()))?;
        Ok(cfg)
    }
}

fn apply_armijo(cfg: &mut ArmijoConfig, o: &ArmijoOverrides) {
    if o.initial_step.is_some() {
        cfg.initial_step = o.initial_step;
    }
    if let Some(v) = o.contraction {
        cfg.contraction = v;
    }
    if let Some(v) = o.sufficient_decrease {
        cfg.sufficient_decrease = v;
    }
    if let Some(v) = o.max_backtracks {
        cfg.max_backtracks = v;
    }
}

fn apply_rtr(cfg: &mut RtrConfig, o: &RtrOverrides) {
    if o.initial_radius.is_some() {
        cfg.initial_radius = o.initial_radius;
    }
    if o.max_radius.is_some() {
        cfg.max_radius = o.max_radius;
    }
    if let Some(v) = o.eta_accept {
        cfg.eta_accept = v;
    }
    if o.tcg_max_inner.is_some() {
        cfg.tcg_max_inner = o.tcg_max_inner;
    }
    if let Some(v) = o.tcg_kappa {
        cfg.tcg_kappa = v;
    }
    if let Some(v) = o.tcg_theta {
        cfg.tcg_theta = v;
    }
}

/// A validated manifold and problem in a concrete field.
pub struct Instance<T: Scalar> {
    pub manifold: MatrixSimplex<T>,
    pub problem: ProblemSpec<T>,
}

impl ProblemConfig {
    pub fn manifold<T: Scalar>(&self, seed: u64) -> Result<MatrixSimplex<T>, CliError> {
        let geometry = GeometryConfig::new(self.n, self.k, self.field.kind()).with_seed(seed);
        MatrixSimplex::new(geometry).map_err(|e| CliError::config("problem", e.to_string()))
    }

    pub fn instance<T: Scalar>(&self, seed: u64) -> Result<Instance<T>, CliError> {
        let manifold = self.manifold::<T>(seed)?;
        let problem = match &self.data {
            None => self.random_problem(&manifold, seed),
            Some(data) => self.problem_from_data(data)?,
        };
        Ok(Instance { manifold, problem })
    }

    fn random_problem<T: Scalar>(&self, m: &MatrixSimplex<T>, seed: u64) -> ProblemSpec<T> {
        // A separate stream from the one that draws the start point.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        match self.variant {
            Variant::NearestPoint => random_nearest_point(m, &mut rng),
            Variant::WeightedLogdet => {
                let w = (1..=self.k).map(|i| i as f64).collect();
                ProblemSpec::weighted_logdet(w).expect("positive weights")
            }
            Variant::PovmMle => random_povm(m, 3, &mut rng),
        }
    }

    fn problem_from_data<T: Scalar>(&self, data: &ProblemData) -> Result<ProblemSpec<T>, CliError> {
        let (need, forbidden): (&[&str], &[&str]) = match self.variant {
            Variant::NearestPoint => (&["targets"], &["weights", "states", "counts"]),
            Variant::WeightedLogdet => (&["weights"], &["targets", "states", "counts"]),
            Variant::PovmMle => (&["states", "counts"], &["targets", "weights"]),
        };
        let present = |key: &str| match key {
            "targets" => data.targets.is_some(),
            "weights" => data.weights.is_some(),
            "states" => data.states.is_some(),
            _ => data.counts.is_some(),
        };
        if let Some(key) = forbidden.iter().find(|k| present(k)) {
            return Err(CliError::config(
                format!("problem.data.{key}"),
                format!("not used by variant {}", self.variant_name()),
            ));
        }
        if let Some(key) = need.iter().find(|k| !present(k)) {
            return Err(CliError::config(
                format!("problem.data.{key}"),
                format!("required by variant {}", self.variant_name()),
            ));
        }
        let invalid = |key: &str, e: matsimplex::Error| {
            CliError::config(format!("problem.data.{key}"), format!("{}: {e}", e.name()))
        };
        match self.variant {
            Variant::NearestPoint => {
                let targets = self.matrices::<T>(data.targets.as_deref().unwrap(), "targets", self.k)?;
                ProblemSpec::nearest_point(targets).map_err(|e| invalid("targets", e))
            }
            Variant::WeightedLogdet => {
                let w = data.weights.clone().unwrap();
                if w.len() != self.k {
                    return Err(CliError::config(
                        "problem.data.weights",
                        format!("expected K = {} weights, got {}", self.k, w.len()),
                    ));
                }
                ProblemSpec::weighted_logdet(w).map_err(|e| invalid("weights", e))
            }
            Variant::PovmMle => {
                let raw = data.states.as_deref().unwrap();
                let states = self.matrices::<T>(raw, "states", raw.len())?;
                let counts = data.counts.clone().unwrap();
                if let Some(j) = counts.iter().position(|row| row.len() != self.k) {
                    return Err(CliError::config(
                        format!("problem.data.counts[{j}]"),
                        format!("expected K = {} counts, got {}", self.k, counts[j].len()),
                    ));
                }
                ProblemSpec::povm_mle(states, counts).map_err(|e| invalid("states", e))
            }
        }
    }

    fn matrices<T: Scalar>(
        &self,
        raw: &[MatrixRows],
        key: &str,
        expected: usize,
    ) -> Result<Vec<DMatrix<T>>, CliError> {
        if raw.len() != expected {
            return Err(CliError::config(
                format!("problem.data.{key}"),
                format!("expected {expected} matrices, got {}", raw.len()),
            ));
        }
        raw.iter()
            .enumerate()
            .map(|(i, rows)| {
                decode_matrix::<T>(rows, self.n)
                    .map_err(|msg| CliError::config(format!("problem.data.{key}[{i}]"), msg))
            })
            .collect()
    }

    fn variant_name(&self) -> &'static str {
        match self.variant {
            Variant::NearestPoint => "nearest_point",
            Variant::WeightedLogdet => "weighted_logdet",
            Variant::PovmMle => "povm_mle",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LOGDET: &str = r#"{
        "problem": {"variant": "weighted_logdet", "n": 3, "K": 3, "data": {"weights": [1, 2, 3]}},
        "solver": {"method": "rtr", "max_iter": 50, "tol_gradnorm": 1e-9},
        "seed": 4
    }"#;

    #[test]
    fn parses_a_complete_config() {
        let cfg = parse(LOGDET).unwrap();
        assert_eq!(cfg.problem.variant, Variant::WeightedLogdet);
        assert_eq!(cfg.problem.field, Field::Real);
        assert_eq!(cfg.seed, 4);
        let solver = cfg.solver.unwrap().to_solver_config().unwrap();
        assert_eq!(solver.method, Method::Rtr);
        assert_eq!(solver.max_iter, 50);
        let inst = cfg.problem.instance::<f64>(cfg.seed).unwrap();
        assert_eq!(inst.problem.k(), 3);
    }

    #[test]
    fn unknown_key_is_named() {
        let text = LOGDET.replace("\"max_iter\"", "\"max_iters\"");
        let err = parse(&text).unwrap_err();
        assert!(err.to_string().contains("solver"), "{err}");
        assert!(err.to_string().contains("max_iters"), "{err}");
    }

    #[test]
    fn nested_type_error_carries_its_path() {
        let text = LOGDET.replace("[1, 2, 3]", "[1, \"two\", 3]");
        let err = parse(&text).unwrap_err();
        assert!(err.to_string().contains("problem.data.weights[1]"), "{err}");
    }

    #[test]
    fn mismatched_data_is_rejected() {
        let text = LOGDET.replace("[1, 2, 3]", "[1, 2]");
        let cfg = parse(&text).unwrap();
        let err = cfg.problem.instance::<f64>(0).err().unwrap();
        assert!(err.to_string().contains("problem.data.weights"), "{err}");

        let text = LOGDET.replace("\"weights\"", "\"targets\"");
        assert!(parse(&text).is_err());
    }

    #[test]
    fn overrides_must_match_the_method() {
        let text = LOGDET.replace(
            "\"tol_gradnorm\": 1e-9",
            "\"tol_gradnorm\": 1e-9, \"overrides\": {\"armijo\": {\"contraction\": 0.3}}",
        );
        let err = parse(&text).unwrap().solver.unwrap().to_solver_config().unwrap_err();
        assert!(err.to_string().contains("solver.overrides.armijo"), "{err}");

        let text = LOGDET.replace(
            "\"tol_gradnorm\": 1e-9",
            "\"tol_gradnorm\": 1e-9, \"overrides\": {\"rtr\": {\"tcg_max_inner\": 0}}",
        );
        let cfg = parse(&text).unwrap().solver.unwrap().to_solver_config().unwrap();
        assert_eq!(cfg.rtr.tcg_max_inner, Some(0));
    }

    #[test]
    fn complex_targets_need_the_complex_field() {
        let text = r#"{
            "problem": {"variant": "nearest_point", "n": 1, "K": 2, "field": "real",
                        "data": {"targets": [[[[0.5, 0.1]]], [[0.5]]]}}
        }"#;
        let cfg = parse(text).unwrap();
        let err = cfg.problem.instance::<f64>(0).err().unwrap();
        assert!(err.to_string().contains("problem.data.targets[0]"), "{err}");
    }

    #[test]
    fn missing_data_draws_a_seeded_instance() {
        let text = r#"{"problem": {"variant": "povm_mle", "n": 2, "K": 3, "field": "complex"}, "seed": 9}"#;
        let cfg = parse(text).unwrap();
        let a = cfg.problem.instance::<matsimplex::Complex64>(9).unwrap();
        let b = cfg.problem.instance::<matsimplex::Complex64>(9).unwrap();
        assert_eq!(format!("{:?}", a.problem), format!("{:?}", b.problem));
    }
}
