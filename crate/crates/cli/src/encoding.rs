//! File formats: nested row-major matrices, point files and traces.
//!
//! A matrix is an array of rows; an entry is a number or, for complex
//! values, a two-element array `[re, im]`.

use std::fmt;
use std::io::Write;
use std::path::Path;

use matsimplex::{IterateTrace, MatrixSimplex, Scalar, SimplexPoint};
use nalgebra::DMatrix;
use serde::de::{self, SeqAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::config::Field;
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Entry {
    Real(f64),
    Complex(f64, f64),
}

pub type MatrixRows = Vec<Vec<Entry>>;

impl Serialize for Entry {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match *self {
            Entry::Real(v) => s.serialize_f64(v),
            Entry::Complex(re, im) => [re, im].serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for Entry {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct EntryVisitor;

        impl<'de> Visitor<'de> for EntryVisitor {
            type Value = Entry;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or a [re, im] pair")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Entry, E> {
                Ok(Entry::Real(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Entry, E> {
                Ok(Entry::Real(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Entry, E> {
                Ok(Entry::Real(v as f64))
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Entry, A::Error> {
                let re: f64 = seq.next_element()?.ok_or_else(|| de::Error::invalid_length(0, &self))?;
                let im: f64 = seq.next_element()?.ok_or_else(|| de::Error::invalid_length(1, &self))?;
                if seq.next_element::<de::IgnoredAny>()?.is_some() {
                    return Err(de::Error::invalid_length(3, &self));
                }
                Ok(Entry::Complex(re, im))
            }
        }

        d.deserialize_any(EntryVisitor)
    }
}

/// Decodes an `n × n` matrix, rejecting complex entries in a real field.
pub fn decode_matrix<T: Scalar>(rows: &MatrixRows, n: usize) -> Result<DMatrix<T>, String> {
    if rows.len() != n {
        return Err(format!("expected {n} rows, got {}", rows.len()));
    }
    let mut m = DMatrix::<T>::zeros(n, n);
    for (r, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(format!("row {r} has {} entries, expected {n}", row.len()));
        }
        for (c, e) in row.iter().enumerate() {
            let (re, im) = match *e {
                Entry::Real(v) => (v, 0.0),
                Entry::Complex(re, im) => (re, im),
            };
            if !(re.is_finite() && im.is_finite()) {
                return Err(format!("entry ({r}, {c}) is not finite"));
            }
            m[(r, c)] = T::from_parts(re, im)
                .ok_or_else(|| format!("entry ({r}, {c}) is complex but the field is real"))?;
        }
    }
    Ok(m)
}

pub fn encode_matrix<T: Scalar>(m: &DMatrix<T>) -> MatrixRows {
    (0..m.nrows())
        .map(|r| {
            (0..m.ncols())
                .map(|c| {
                    let (re, im) = m[(r, c)].to_parts();
                    if T::IS_COMPLEX {
                        Entry::Complex(re, im)
                    } else {
                        Entry::Real(re)
                    }
                })
                .collect()
        })
        .collect()
}

/// A manifold point on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointFile {
    pub field: Field,
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub parts: Vec<MatrixRows>,
}

impl PointFile {
    pub fn from_point<T: Scalar>(x: &SimplexPoint<T>) -> Self {
        PointFile {
            field: if T::IS_COMPLEX { Field::Complex } else { Field::Real },
            n: x.n(),
            k: x.k(),
            parts: x.matrices().iter().map(encode_matrix).collect(),
        }
    }

    /// Decodes and validates against `manifold`.
    pub fn to_point<T: Scalar>(&self, manifold: &MatrixSimplex<T>) -> Result<SimplexPoint<T>, String> {
        let field = if T::IS_COMPLEX { Field::Complex } else { Field::Real };
        if self.field != field || self.n != manifold.n() || self.k != manifold.k() {
            return Err(format!(
                "point is {} n={} K={}, problem is {field} n={} K={}",
                self.field,
                self.n,
                self.k,
                manifold.n(),
                manifold.k()
            ));
        }
        if self.parts.len() != self.k {
            return Err(format!("expected {} parts, got {}", self.k, self.parts.len()));
        }
        let parts = self
            .parts
            .iter()
            .enumerate()
            .map(|(i, rows)| decode_matrix::<T>(rows, self.n).map_err(|e| format!("parts[{i}]: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        manifold
            .validate_point(parts)
            .map_err(|e| format!("{}: {e}", e.name()))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(".", format!("cannot read {}: {e}", path.display())))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        serde_path_to_error::deserialize(de)
            .map_err(|e| CliError::config(e.path().to_string(), e.into_inner().to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string(self).expect("point files serialize");
        std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
    }
}

#[derive(Serialize)]
struct TraceRow {
    iter: usize,
    cost: f64,
    gradnorm: f64,
    step: f64,
    inner_iters: usize,
    wall_ms: f64,
}

/// CSV `iter,cost,gradnorm,step,inner_iters,wall_ms` closed by a
/// `# status=<label>` line.
pub fn write_trace<W: Write>(out: W, trace: &IterateTrace) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in &trace.records {
        w.serialize(TraceRow {
            iter: r.iter,
            cost: r.cost,
            gradnorm: r.gradnorm,
            step: r.step,
            inner_iters: r.inner_iters,
            wall_ms: r.wall_ms,
        })?;
    }
    if trace.records.is_empty() {
        w.write_record(["iter", "cost", "gradnorm", "step", "inner_iters", "wall_ms"])?;
    }
    let mut out = w.into_inner().map_err(|e| e.into_error())?;
    writeln!(out, "# status={}", trace.status.label())?;
    Ok(())
}
