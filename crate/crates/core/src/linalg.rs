//! Packed correlation matrices and their Cholesky log-determinant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Squared pivots at or below this are treated as a factorization failure.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// A symmetric matrix with unit diagonal, stored as its strict lower
/// triangle in row-major order: `(1,0), (2,0), (2,1), (3,0), ...`.
///
/// Off-diagonal entries always satisfy `|ρ| < 1`. Positive definiteness is
/// not enforced by construction; use [`is_positive_definite`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    d: usize,
    lower: Vec<f64>,
}

#[inline]
fn packed_index(i: usize, j: usize) -> usize {
    debug_assert!(i > j);
    i * (i - 1) / 2 + j
}

impl CorrelationMatrix {
    pub fn identity(d: usize) -> Self {
        Self {
            d,
            lower: vec![0.0; d * d.saturating_sub(1) / 2],
        }
    }

    /// Builds a matrix from `f(i, j)` evaluated for every `i > j`.
    pub fn from_fn(d: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut m = Self::identity(d);
        for i in 1..d {
            for j in 0..i {
                m.set(i, j, f(i, j))?;
            }
        }
        Ok(m)
    }

    /// Builds a matrix from full rows, checking unit diagonal and symmetry.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::InvalidMatrix(format!(
                    "row {i} has {} entries, expected {d}",
                    row.len()
                )));
            }
            if row[i] != 1.0 {
                return Err(Error::InvalidMatrix(format!(
                    "diagonal entry {i} is {}",
                    row[i]
                )));
            }
            for j in 0..i {
                if row[j] != rows[j][i] {
                    return Err(Error::InvalidMatrix(format!("not symmetric at ({i}, {j})")));
                }
            }
        }
        Self::from_fn(d, |i, j| rows[i][j])
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Entry `ρ_ij`; the diagonal is 1.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.d && j < self.d, "index ({i}, {j}) out of range");
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => 1.0,
            std::cmp::Ordering::Greater => self.lower[packed_index(i, j)],
            std::cmp::Ordering::Less => self.lower[packed_index(j, i)],
        }
    }

    /// Sets `ρ_ij = ρ_ji = value`.
    pub fn set(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        if i == j || i >= self.d || j >= self.d {
            return Err(Error::InvalidMatrix(format!(
                "cannot set entry ({i}, {j}) of a {0}x{0} correlation matrix",
                self.d
            )));
        }
        if !(value.abs() < 1.0) {
            return Err(Error::InvalidMatrix(format!(
                "entry ({i}, {j}) = {value} is outside (-1, 1)"
            )));
        }
        let (hi, lo) = if i > j { (i, j) } else { (j, i) };
        self.lower[packed_index(hi, lo)] = value;
        Ok(())
    }

    /// Strict lower triangle in packed order.
    pub fn lower_triangle(&self) -> &[f64] {
        &self.lower
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.d)
            .map(|i| (0..self.d).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.d, other.d, "dimension mismatch");
        self.lower
            .iter()
            .zip(&other.lower)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Lower-triangular Cholesky factor, packed including the diagonal.
fn cholesky_packed(r: &CorrelationMatrix) -> Result<Vec<f64>> {
    let d = r.dim();
    let idx = |i: usize, j: usize| i * (i + 1) / 2 + j;
    let mut l = vec![0.0; d * (d + 1) / 2];
    for i in 0..d {
        for j in 0..=i {
            let mut s = r.get(i, j);
            for k in 0..j {
                s -= l[idx(i, k)] * l[idx(j, k)];
            }
            if i == j {
                if !(s > PIVOT_TOLERANCE) {
                    return Err(Error::NotPositiveDefinite { row: i, pivot: s });
                }
                l[idx(i, i)] = s.sqrt();
            } else {
                l[idx(i, j)] = s / l[idx(j, j)];
            }
        }
    }
    Ok(l)
}

/// `ln det R = 2 Σ ln L_ii`.
pub fn cholesky_log_det(r: &CorrelationMatrix) -> Result<f64> {
    let l = cholesky_packed(r)?;
    Ok(2.0
        * (0..r.dim())
            .map(|i| l[i * (i + 1) / 2 + i].ln())
            .sum::<f64>())
}

pub fn is_positive_definite(r: &CorrelationMatrix) -> bool {
    cholesky_packed(r).is_ok()
}
