//! Covariance-matrix JSON files.
//!
//! ```json
//! {"n_modes": 1, "ordering": "x1,p1,...,xn,pn", "matrix": [1, 0, 0, 1],
//!  "mean": [0, 0], "partition": {"a": [1], "b": [2]}}
//! ```
//! `matrix` is row-major; `mean` and `partition` are optional; mode indices
//! are one-based. Writers emit every float with 17 significant digits.

use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::error::{Error, Result};
use crate::gaussian::{CovarianceMatrix, GaussianState, ModePartition};

pub const ORDERING: &str = "x1,p1,...,xn,pn";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionJson {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
}

impl From<&ModePartition> for PartitionJson {
    fn from(p: &ModePartition) -> Self {
        let (a, b) = p.to_one_based();
        PartitionJson { a, b }
    }
}

impl PartitionJson {
    pub fn to_partition(&self, n_modes: usize) -> Result<ModePartition> {
        ModePartition::from_one_based(&self.a, &self.b, n_modes).map_err(|e| Error::format("partition", e.to_string()))
    }
}

/// Serializes a float with 17 significant digits.
pub fn full_precision<S: Serializer>(value: &f64, serializer: S) -> std::result::Result<S::Ok, S::Error> {
    raw_float(*value).map_err(serde::ser::Error::custom)?.serialize(serializer)
}

pub fn full_precision_vec<S: Serializer>(values: &[f64], serializer: S) -> std::result::Result<S::Ok, S::Error> {
    let raw: std::result::Result<Vec<Box<RawValue>>, _> = values.iter().map(|&v| raw_float(v)).collect();
    raw.map_err(serde::ser::Error::custom)?.serialize(serializer)
}

pub fn full_precision_opt_vec<S: Serializer>(
    values: &Option<Vec<f64>>,
    serializer: S,
) -> std::result::Result<S::Ok, S::Error> {
    match values {
        Some(v) => full_precision_vec(v, serializer),
        None => serializer.serialize_none(),
    }
}

fn raw_float(v: f64) -> std::result::Result<Box<RawValue>, String> {
    if !v.is_finite() {
        return Err(format!("cannot write non-finite value {v}"));
    }
    RawValue::from_string(format!("{v:.16e}")).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovarianceFile {
    pub n_modes: usize,
    pub ordering: String,
    #[serde(serialize_with = "full_precision_vec")]
    pub matrix: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none", serialize_with = "full_precision_opt_vec")]
    pub mean: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<PartitionJson>,
}

impl CovarianceFile {
    pub fn from_state(state: &GaussianState, partition: Option<&ModePartition>) -> Self {
        CovarianceFile {
            n_modes: state.n_modes(),
            ordering: ORDERING.to_string(),
            matrix: state.cov.to_row_major(),
            mean: state.mean.as_ref().map(|d| d.iter().copied().collect()),
            partition: partition.map(PartitionJson::from),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: CovarianceFile = serde_json::from_str(text)?;
        file.validate()?;
        Ok(file)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if self.ordering != ORDERING {
            return Err(Error::format("ordering", format!("must be \"{ORDERING}\", got \"{}\"", self.ordering)));
        }
        if self.n_modes == 0 {
            return Err(Error::format("n_modes", "must be positive"));
        }
        let dim = 2 * self.n_modes;
        if self.matrix.len() != dim * dim {
            return Err(Error::format(
                "matrix",
                format!("expected {} entries for {} modes, got {}", dim * dim, self.n_modes, self.matrix.len()),
            ));
        }
        if let Some(mean) = &self.mean {
            if mean.len() != dim {
                return Err(Error::format("mean", format!("expected {dim} entries, got {}", mean.len())));
            }
        }
        if let Some(p) = &self.partition {
            p.to_partition(self.n_modes)?;
        }
        Ok(())
    }

    pub fn state(&self) -> Result<GaussianState> {
        let cov = CovarianceMatrix::from_row_major(self.n_modes, &self.matrix)
            .map_err(|e| Error::format("matrix", e.to_string()))?;
        match &self.mean {
            Some(m) => GaussianState::with_mean(cov, DVector::from_vec(m.clone())),
            None => Ok(GaussianState::new(cov)),
        }
    }

    pub fn partition(&self) -> Result<Option<ModePartition>> {
        self.partition.as_ref().map(|p| p.to_partition(self.n_modes)).transpose()
    }
}
