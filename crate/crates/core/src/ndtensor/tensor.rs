use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::TensorError;

/// Dense row-major matrix of `f64`. Scalars are 1x1, vectors are 1xn.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    data: Array2<f64>,
}

impl Tensor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            data: Array2::zeros((rows, cols)),
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            data: Array2::from_elem((rows, cols), value),
        }
    }

    pub fn scalar(value: f64) -> Self {
        Self::filled(1, 1, value)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            data: Array2::eye(n),
        }
    }

    pub fn from_vec(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self, TensorError> {
        if values.len() != rows * cols {
            return Err(TensorError::InvalidArgument(format!(
                "{} values cannot fill a {}x{} tensor",
                values.len(),
                rows,
                cols
            )));
        }
        let data = Array2::from_shape_vec((rows, cols), values)
            .map_err(|e| TensorError::InvalidArgument(e.to_string()))?;
        Ok(Self { data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, TensorError> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
            return Err(TensorError::InvalidArgument(format!(
                "row {} has {} entries, expected {}",
                bad,
                rows[bad].len(),
                cols
            )));
        }
        Self::from_vec(rows.len(), cols, rows.iter().flatten().copied().collect())
    }

    pub fn shape(&self) -> (usize, usize) {
        self.data.dim()
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[[row, col]]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[[row, col]] = value;
    }

    /// Values in row-major order.
    pub fn to_vec(&self) -> Vec<f64> {
        self.data.iter().copied().collect()
    }

    pub fn row(&self, row: usize) -> Vec<f64> {
        self.data.row(row).to_vec()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn as_array_mut(&mut self) -> &mut Array2<f64> {
        &mut self.data
    }

    pub fn into_array(self) -> Array2<f64> {
        self.data
    }

    pub fn max_abs_diff(&self, other: &Tensor) -> f64 {
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl From<Array2<f64>> for Tensor {
    fn from(data: Array2<f64>) -> Self {
        Self { data }
    }
}

#[derive(Serialize, Deserialize)]
struct TensorRepr {
    shape: [usize; 2],
    values: Vec<f64>,
}

impl Serialize for Tensor {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let (r, c) = self.shape();
        TensorRepr {
            shape: [r, c],
            values: self.to_vec(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Tensor {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = TensorRepr::deserialize(deserializer)?;
        let t = Tensor::from_vec(repr.shape[0], repr.shape[1], repr.values)
            .map_err(serde::de::Error::custom)?;
        if !t.is_finite() {
            return Err(serde::de::Error::custom("tensor contains non-finite values"));
        }
        Ok(t)
    }
}
