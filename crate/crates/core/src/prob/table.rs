use serde::{Deserialize, Serialize};

use super::{normalize_checked, Alphabet};
use crate::{Error, Result};

/// A column-stochastic `|X| x |C|` table holding `p(x|c)`.
///
/// Rows index observations, columns index labels. Serialized as a list of
/// rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<Vec<f64>>", try_from = "Vec<Vec<f64>>")]
pub struct ConditionalTable {
    x_size: usize,
    c_size: usize,
    probs: Vec<f64>,
}

/// Builds a conditional table for `alphabet` from rows indexed by observation.
///
/// With `normalize == false`, columns whose sums are off by more than `1e-6`
/// are rejected; smaller deviations are rescaled away.
pub fn make_conditional(alphabet: &Alphabet, rows: &[Vec<f64>], normalize: bool) -> Result<ConditionalTable> {
    let table = ConditionalTable::from_rows(rows, normalize)?;
    table.check_alphabet(alphabet)?;
    Ok(table)
}

impl ConditionalTable {
    pub fn from_rows(rows: &[Vec<f64>], normalize: bool) -> Result<Self> {
        let x_size = rows.len();
        let c_size = rows.first().map_or(0, Vec::len);
        if x_size == 0 || c_size == 0 {
            return Err(Error::ShapeMismatch("conditional table is empty".into()));
        }
        if let Some(x) = rows.iter().position(|r| r.len() != c_size) {
            return Err(Error::ShapeMismatch(format!("row {x} has {} entries, expected {c_size}", rows[x].len())));
        }
        let mut columns: Vec<Vec<f64>> = (0..c_size).map(|c| rows.iter().map(|r| r[c]).collect()).collect();
        for (c, col) in columns.iter_mut().enumerate() {
            for (x, &v) in col.iter().enumerate() {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::NegativeEntry { location: format!("row {x}, column {c}"), value: v });
                }
            }
            if col.iter().sum::<f64>() <= 0.0 {
                return Err(Error::ZeroColumn(c));
            }
            normalize_checked(&format!("column {c}"), col, normalize)?;
        }
        Ok(Self::from_columns_unchecked(&columns))
    }

    /// Builds a table from columns that are already probability vectors.
    pub(crate) fn from_columns_unchecked(columns: &[Vec<f64>]) -> Self {
        let c_size = columns.len();
        let x_size = columns[0].len();
        let mut probs = vec![0.0; x_size * c_size];
        for (c, col) in columns.iter().enumerate() {
            for (x, &v) in col.iter().enumerate() {
                probs[x * c_size + c] = v;
            }
        }
        Self { x_size, c_size, probs }
    }

    /// The table whose every column is uniform over observations.
    pub fn uniform(x_size: usize, c_size: usize) -> Self {
        Self { x_size, c_size, probs: vec![1.0 / x_size as f64; x_size * c_size] }
    }

    pub fn x_size(&self) -> usize {
        self.x_size
    }

    pub fn c_size(&self) -> usize {
        self.c_size
    }

    #[inline]
    pub fn get(&self, x: usize, c: usize) -> f64 {
        self.probs[x * self.c_size + c]
    }

    /// Row `x`: the vector `(p(x|c))_c`.
    pub fn row(&self, x: usize) -> &[f64] {
        &self.probs[x * self.c_size..(x + 1) * self.c_size]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.x_size).map(|x| self.get(x, c)).collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.x_size).map(|x| self.row(x).to_vec()).collect()
    }

    pub fn check_alphabet(&self, alphabet: &Alphabet) -> Result<()> {
        if self.x_size != alphabet.x_size() || self.c_size != alphabet.c_size() {
            return Err(Error::ShapeMismatch(format!(
                "conditional table is {}x{}, alphabet needs {}x{}",
                self.x_size,
                self.c_size,
                alphabet.x_size(),
                alphabet.c_size()
            )));
        }
        Ok(())
    }

    /// Convex combination `(1 - lambda) * self + lambda * other`.
    pub fn interpolate(&self, other: &Self, lambda: f64) -> Result<Self> {
        if self.x_size != other.x_size || self.c_size != other.c_size {
            return Err(Error::ShapeMismatch("cannot interpolate tables of different shape".into()));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidConfig(format!("interpolation weight {lambda} outside [0, 1]")));
        }
        let probs = self.probs.iter().zip(&other.probs).map(|(a, b)| (1.0 - lambda) * a + lambda * b).collect();
        Ok(Self { x_size: self.x_size, c_size: self.c_size, probs })
    }

    /// Largest absolute deviation of a column sum from 1.
    pub fn max_column_error(&self) -> f64 {
        (0..self.c_size).map(|c| (self.column(c).iter().sum::<f64>() - 1.0).abs()).fold(0.0, f64::max)
    }
}

impl From<ConditionalTable> for Vec<Vec<f64>> {
    fn from(t: ConditionalTable) -> Self {
        t.rows()
    }
}

impl TryFrom<Vec<Vec<f64>>> for ConditionalTable {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        ConditionalTable::from_rows(&rows, false)
    }
}
