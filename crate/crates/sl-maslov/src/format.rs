//! JSON problem and boundary-condition files.
//!
//! Real matrices are arrays of rows. Complex entries are `[re, im]` pairs;
//! a bare number is read as a real entry.

use std::fmt;
use std::path::Path;

use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::{Deserialize, Serialize};
use sl_maslov_core::lagrangian::{
    dirichlet, graph_lagrangian, neumann, validate_frame, SymplecticMat,
};
use sl_maslov_core::slp::{CoefficientFn, SLProblem};
use sl_maslov_core::{CMat, CanonicalForm, LagrangianFrame, RMat, Tolerances, C64};

use crate::error::CliError;

/// Schema identifier written into problem files.
pub const PROBLEM_SCHEMA: &str = "sl-maslov/problem/v1";
pub const BC_SCHEMA: &str = "sl-maslov/bc/v1";

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Complex(pub [f64; 2]);

impl<'de> Deserialize<'de> for Complex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Complex;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a complex number [re, im] or a real number")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Complex, E> {
                Ok(Complex([v, 0.0]))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Complex, E> {
                Ok(Complex([v as f64, 0.0]))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Complex, E> {
                Ok(Complex([v as f64, 0.0]))
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Complex, A::Error> {
                let re: f64 = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(0, &self))?;
                let im: f64 = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(1, &self))?;
                if seq.next_element::<de::IgnoredAny>()?.is_some() {
                    return Err(de::Error::invalid_length(3, &self));
                }
                Ok(Complex([re, im]))
            }
        }
        d.deserialize_any(V)
    }
}

pub type RealMatrix = Vec<Vec<f64>>;
pub type ComplexMatrix = Vec<Vec<Complex>>;

fn real_matrix(rows: &RealMatrix, field: &str) -> Result<RMat, CliError> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(CliError::invalid(field, "rows have different lengths"));
    }
    Ok(RMat::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn complex_matrix(rows: &ComplexMatrix, field: &str) -> Result<CMat, CliError> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(CliError::invalid(field, "rows have different lengths"));
    }
    Ok(CMat::from_fn(nrows, ncols, |i, j| {
        C64::new(rows[i][j].0[0], rows[i][j].0[1])
    }))
}

pub fn rows_of_real(m: &RMat) -> RealMatrix {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn rows_of_complex(m: &CMat) -> ComplexMatrix {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| Complex([m[(i, j)].re, m[(i, j)].im]))
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    content = "data",
    rename_all = "snake_case",
    deny_unknown_fields
)]
pub enum CoefficientSpec {
    Constant(RealMatrix),
    /// Coefficients of `t^0, t^1, ...`.
    Polynomial(Vec<RealMatrix>),
    PiecewiseConstant {
        breaks: Vec<f64>,
        values: Vec<RealMatrix>,
    },
}

impl CoefficientSpec {
    fn build(&self, field: &str) -> Result<CoefficientFn, CliError> {
        Ok(match self {
            CoefficientSpec::Constant(m) => CoefficientFn::Constant(real_matrix(m, field)?),
            CoefficientSpec::Polynomial(cs) => CoefficientFn::Polynomial(
                cs.iter()
                    .enumerate()
                    .map(|(k, m)| real_matrix(m, &format!("{field}.data[{k}]")))
                    .collect::<Result<_, _>>()?,
            ),
            CoefficientSpec::PiecewiseConstant { breaks, values } => {
                CoefficientFn::PiecewiseConstant {
                    breaks: breaks.clone(),
                    values: values
                        .iter()
                        .enumerate()
                        .map(|(k, m)| real_matrix(m, &format!("{field}.data.values[{k}]")))
                        .collect::<Result<_, _>>()?,
                }
            }
        })
    }

    pub fn from_fn(c: &CoefficientFn) -> Self {
        match c {
            CoefficientFn::Constant(m) => CoefficientSpec::Constant(rows_of_real(m)),
            CoefficientFn::Polynomial(cs) => {
                CoefficientSpec::Polynomial(cs.iter().map(rows_of_real).collect())
            }
            CoefficientFn::PiecewiseConstant { breaks, values } => {
                CoefficientSpec::PiecewiseConstant {
                    breaks: breaks.clone(),
                    values: values.iter().map(rows_of_real).collect(),
                }
            }
        }
    }
}

/// `-(P x' + Q x)' + Q^T x' + R x = lambda D x` on `[0, T]`. Missing
/// coefficients default to `P = D = I`, `Q = R = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub n: usize,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "P", default, skip_serializing_if = "Option::is_none")]
    pub p: Option<CoefficientSpec>,
    #[serde(rename = "Q", default, skip_serializing_if = "Option::is_none")]
    pub q: Option<CoefficientSpec>,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub r: Option<CoefficientSpec>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub d: Option<CoefficientSpec>,
}

impl ProblemFile {
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let p: ProblemFile = parse_json(text, origin)?;
        match &p.schema {
            Some(s) if s != PROBLEM_SCHEMA => Err(CliError::invalid(
                "schema",
                &format!("expected {PROBLEM_SCHEMA:?}, found {s:?}"),
            )),
            _ => Ok(p),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn build(&self) -> Result<SLProblem, CliError> {
        let n = self.n;
        let coef = |c: &Option<CoefficientSpec>, name: &str, default: CoefficientFn| match c {
            Some(spec) => spec.build(name),
            None => Ok(default),
        };
        let p = coef(&self.p, "P", CoefficientFn::identity(n))?;
        let q = coef(&self.q, "Q", CoefficientFn::zero(n))?;
        let r = coef(&self.r, "R", CoefficientFn::zero(n))?;
        let d = coef(&self.d, "D", CoefficientFn::identity(n))?;
        Ok(SLProblem::new(n, self.t, p, q, r, d)?)
    }
}

/// Boundary condition file, tagged by `kind`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BcSpec {
    /// `dirichlet`, `neumann`, `periodic` or `antiperiodic`.
    Named { name: String },
    /// Layer `r`, Hermitian `a` of size `2n - r` and unitary `basis`.
    Canonical {
        r: usize,
        a: ComplexMatrix,
        basis: ComplexMatrix,
    },
    /// `4n x 2n` frame `[X; Y]` in the basis `(-y(0), y(T), x(0), x(T))`.
    Frame { z: ComplexMatrix },
    /// Graph `{(z(0), M z(0))}` of a real symplectic `2n x 2n` matrix.
    Graph { matrix: RealMatrix },
}

pub const NAMED_BCS: [&str; 4] = ["dirichlet", "neumann", "periodic", "antiperiodic"];

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NamedBc {
    #[allow(dead_code)]
    kind: String,
    name: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CanonicalBc {
    #[allow(dead_code)]
    kind: String,
    r: usize,
    a: ComplexMatrix,
    basis: ComplexMatrix,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameBc {
    #[allow(dead_code)]
    kind: String,
    z: ComplexMatrix,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphBc {
    #[allow(dead_code)]
    kind: String,
    matrix: RealMatrix,
}

impl BcSpec {
    /// Reads `kind` first and then the matching body, so parse errors keep
    /// the path of the offending field.
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let mut v: serde_json::Value = parse_json(text, origin)?;
        if let Some(schema) = v.as_object_mut().and_then(|o| o.remove("schema")) {
            if schema.as_str() != Some(BC_SCHEMA) {
                return Err(CliError::invalid(
                    "schema",
                    &format!("expected {BC_SCHEMA:?}, found {schema}"),
                ));
            }
        }
        let kind = v
            .get("kind")
            .and_then(serde_json::Value::as_str)
            .map(str::to_string);
        let missing = |message: String| CliError::Parse {
            location: origin.to_string(),
            field: "kind".into(),
            message,
        };
        match kind.as_deref() {
            Some("named") => {
                from_value::<NamedBc>(v, origin).map(|b| BcSpec::Named { name: b.name })
            }
            Some("canonical") => from_value::<CanonicalBc>(v, origin).map(|b| BcSpec::Canonical {
                r: b.r,
                a: b.a,
                basis: b.basis,
            }),
            Some("frame") => from_value::<FrameBc>(v, origin).map(|b| BcSpec::Frame { z: b.z }),
            Some("graph") => {
                from_value::<GraphBc>(v, origin).map(|b| BcSpec::Graph { matrix: b.matrix })
            }
            Some(other) => Err(missing(format!(
                "unknown kind {other:?}; expected named, canonical, frame or graph"
            ))),
            None => Err(missing("missing string field `kind`".into())),
        }
    }

    /// A bare name from [`NAMED_BCS`] or a path to a JSON file.
    pub fn from_arg(arg: &str) -> Result<Self, CliError> {
        if NAMED_BCS.contains(&arg) {
            return Ok(BcSpec::Named {
                name: arg.to_string(),
            });
        }
        let path = Path::new(arg);
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, arg)
    }

    pub fn frame(&self, n: usize, tol: &Tolerances) -> Result<LagrangianFrame, CliError> {
        let m = 2 * n;
        match self {
            BcSpec::Named { name } => match name.as_str() {
                "dirichlet" => Ok(dirichlet(m)),
                "neumann" => Ok(neumann(m)),
                "periodic" | "antiperiodic" => {
                    let s = if name == "periodic" { 1.0 } else { -1.0 };
                    Ok(graph_lagrangian(&SymplecticMat::new(
                        n,
                        RMat::identity(m, m) * s,
                        tol,
                    )?))
                }
                other => Err(CliError::invalid(
                    "bc.name",
                    &format!("unknown boundary condition {other:?}"),
                )),
            },
            BcSpec::Canonical { r, a, basis } => {
                let cf = CanonicalForm {
                    r: *r,
                    a: complex_matrix(a, "bc.a")?,
                    basis: complex_matrix(basis, "bc.basis")?,
                };
                if cf.basis.nrows() != m || cf.basis.ncols() != m {
                    return Err(CliError::invalid(
                        "bc.basis",
                        &format!("expected a {m} x {m} matrix"),
                    ));
                }
                Ok(sl_maslov_core::lagrangian::frame_from_canonical(&cf, tol)?)
            }
            BcSpec::Frame { z } => Ok(validate_frame(&complex_matrix(z, "bc.z")?, m, tol)?),
            BcSpec::Graph { matrix } => {
                let g = real_matrix(matrix, "bc.matrix")?;
                if g.nrows() != m || g.ncols() != m {
                    return Err(CliError::invalid(
                        "bc.matrix",
                        &format!("expected a {m} x {m} matrix"),
                    ));
                }
                Ok(graph_lagrangian(&SymplecticMat::new(n, g, tol)?))
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            BcSpec::Named { name } => name.clone(),
            BcSpec::Canonical { r, .. } => format!("canonical(r={r})"),
            BcSpec::Frame { .. } => "frame".into(),
            BcSpec::Graph { .. } => "graph".into(),
        }
    }
}

/// Parses JSON and reports errors with the path of the offending field.
pub fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, origin: &str) -> Result<T, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        let location = format!("{origin}:{}:{}", inner.line(), inner.column());
        json_error(location, field, inner)
    })
}

fn from_value<T: for<'de> Deserialize<'de>>(
    v: serde_json::Value,
    origin: &str,
) -> Result<T, CliError> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let field = e.path().to_string();
        json_error(origin.to_string(), field, e.into_inner())
    })
}

fn json_error(location: String, field: String, e: serde_json::Error) -> CliError {
    let message = e.to_string();
    match message
        .strip_prefix("unknown field `")
        .and_then(|rest| rest.split('`').next())
    {
        Some(key) => CliError::UnknownKey {
            location,
            key: key.to_string(),
        },
        None => CliError::Parse {
            location,
            field,
            message,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_entries() {
        let m: ComplexMatrix = serde_json::from_str("[[[1.0, 2.0], 3], [0, [0, -1]]]").unwrap();
        assert_eq!(m[0][0], Complex([1.0, 2.0]));
        assert_eq!(m[0][1], Complex([3.0, 0.0]));
        assert_eq!(m[1][1], Complex([0.0, -1.0]));
    }

    #[test]
    fn malformed_complex_entry_names_the_field() {
        let text =
            r#"{"kind": "canonical", "r": 1, "a": [[[1.0, 2.0, 3.0]]], "basis": [[1, 0], [0, 1]]}"#;
        match BcSpec::parse(text, "bc.json") {
            Err(CliError::Parse { field, .. }) => assert_eq!(field, "a[0][0]"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bc_schema_and_kind() {
        let ok = r#"{"schema": "sl-maslov/bc/v1", "kind": "named", "name": "neumann"}"#;
        assert_eq!(
            BcSpec::parse(ok, "x").unwrap(),
            BcSpec::Named {
                name: "neumann".into()
            }
        );
        let wrong = r#"{"schema": "other", "kind": "named", "name": "neumann"}"#;
        assert!(matches!(
            BcSpec::parse(wrong, "x"),
            Err(CliError::Invalid { .. })
        ));
        let unknown = r#"{"kind": "graph", "matrix": [[1.0]], "extra": 1}"#;
        assert!(
            matches!(BcSpec::parse(unknown, "x"), Err(CliError::UnknownKey { ref key, .. }) if key == "extra")
        );
        assert!(
            matches!(BcSpec::parse(r#"{"kind": "robin"}"#, "x"), Err(CliError::Parse { ref field, .. }) if field == "kind")
        );
    }

    #[test]
    fn problem_defaults() {
        let p = ProblemFile::parse(r#"{"n": 1, "T": 2.0}"#, "inline")
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(p.n(), 1);
        assert_eq!(p.t_end(), 2.0);
        assert!(p.is_constant());
    }

    #[test]
    fn unknown_problem_key_is_rejected() {
        let r = ProblemFile::parse(r#"{"n": 1, "T": 2.0, "S": 1}"#, "inline");
        assert!(
            matches!(r, Err(CliError::UnknownKey { ref key, .. }) if key == "S"),
            "{r:?}"
        );
    }

    #[test]
    fn coefficient_kinds() {
        let text = r#"{"n": 1, "T": 3.0,
            "R": {"kind": "polynomial", "data": [[[1.0]], [[0.0]], [[-0.5]]]},
            "Q": {"kind": "piecewise_constant", "data": {"breaks": [1.5], "values": [[[0.0]], [[0.2]]]}}}"#;
        let p = ProblemFile::parse(text, "inline").unwrap().build().unwrap();
        assert!((p.r.eval(2.0)[(0, 0)] + 1.0).abs() < 1e-15);
        assert_eq!(p.q.eval(2.0)[(0, 0)], 0.2);
    }

    #[test]
    fn named_conditions() {
        let tol = Tolerances::default();
        for name in NAMED_BCS {
            let f = BcSpec::from_arg(name).unwrap().frame(2, &tol).unwrap();
            assert_eq!(f.m(), 4);
        }
    }

    #[test]
    fn graph_must_be_symplectic() {
        let bc = BcSpec::Graph {
            matrix: vec![vec![2.0, 0.0], vec![0.0, 2.0]],
        };
        assert!(bc.frame(1, &Tolerances::default()).is_err());
    }
}
