//! JSON file formats: matrices, systems, pole lists and assignment results.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::accumulator::ComplexBlockParams;
use crate::driver::{AssignmentResult, GroupStructure, SystemPair};
use crate::error::{AssignError, Result};
use crate::linalg::Mat;
use crate::metrics::RobustnessReport;

/// `{"rows": r, "cols": c, "data": [row-major entries]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatrixJson {
    pub fn from_mat(m: &Mat) -> Self {
        let (rows, cols) = m.shape();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(m[(i, j)]);
            }
        }
        MatrixJson { rows, cols, data }
    }

    /// Checks the entry count and finiteness.
    pub fn to_mat(&self, name: &str) -> Result<Mat> {
        if self.data.len() != self.rows * self.cols {
            return Err(AssignError::DimensionMismatch(format!(
                "{name}: {} entries for a {}×{} matrix",
                self.data.len(),
                self.rows,
                self.cols
            )));
        }
        if self.data.iter().any(|x| !x.is_finite()) {
            return Err(AssignError::NonFinite(name.into()));
        }
        Ok(Mat::from_row_slice(self.rows, self.cols, &self.data))
    }
}

/// `{"A": matrix, "B": matrix}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemFile {
    #[serde(rename = "A")]
    pub a: MatrixJson,
    #[serde(rename = "B")]
    pub b: MatrixJson,
}

impl SystemFile {
    pub fn from_system(sys: &SystemPair) -> Self {
        SystemFile {
            a: MatrixJson::from_mat(sys.a()),
            b: MatrixJson::from_mat(sys.b()),
        }
    }

    pub fn to_system(&self) -> Result<SystemPair> {
        SystemPair::new(self.a.to_mat("A")?, self.b.to_mat("B")?)
    }
}

/// `{"F", "X", "T", "metrics", "groups"}` plus the 2×2 block scalings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    #[serde(rename = "F")]
    pub f: MatrixJson,
    #[serde(rename = "X")]
    pub x: MatrixJson,
    #[serde(rename = "T")]
    pub t: MatrixJson,
    pub metrics: RobustnessReport,
    pub groups: Vec<GroupStructure>,
    #[serde(default)]
    pub complex_blocks: Vec<ComplexBlockParams>,
}

impl ResultFile {
    pub fn new(result: &AssignmentResult, metrics: RobustnessReport) -> Self {
        ResultFile {
            f: MatrixJson::from_mat(&result.f),
            x: MatrixJson::from_mat(&result.x),
            t: MatrixJson::from_mat(&result.t),
            metrics,
            groups: result.groups.clone(),
            complex_blocks: result.complex_blocks.clone(),
        }
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| AssignError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| AssignError::Input(format!("{}: {e}", path.display())))
}

pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    text
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| AssignError::Input(format!("{}: {e}", path.display())))
}

/// Serde adapters writing non-finite floats as the strings `"inf"`,
/// `"-inf"` and `"nan"`, which plain JSON numbers cannot hold.
pub mod lenient_f64 {
    use super::*;

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    fn to_repr(x: f64) -> Repr {
        if x.is_finite() {
            Repr::Num(x)
        } else if x.is_nan() {
            Repr::Text("nan".into())
        } else if x > 0.0 {
            Repr::Text("inf".into())
        } else {
            Repr::Text("-inf".into())
        }
    }

    fn from_repr<E: serde::de::Error>(r: Repr) -> std::result::Result<f64, E> {
        match r {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(E::custom(format!("expected a number, found {other:?}"))),
            },
        }
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        to_repr(*x).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        from_repr(Repr::deserialize(d)?)
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(xs: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
            let reprs: Vec<Repr> = xs.iter().map(|&x| to_repr(x)).collect();
            reprs.serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> std::result::Result<Vec<f64>, D::Error> {
            Vec::<Repr>::deserialize(d)?
                .into_iter()
                .map(from_repr)
                .collect()
        }
    }
}
