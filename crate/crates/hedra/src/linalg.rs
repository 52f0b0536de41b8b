//! Dense SVD utilities: minimum-norm solves and nullspace bases.
//!
//! Wide matrices are padded with zero rows to square before decomposition
//! so that the full set of right singular vectors is available; the padding
//! changes neither the singular values nor the right vectors.

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{Error, Result};

/// Relative singular value cutoff used by [`decompose`].
pub const DEFAULT_RANK_CUTOFF: f64 = 1e-10;

/// An SVD of a matrix, kept with the rank cutoff that was used to take it.
#[derive(Debug, Clone)]
pub struct SvdSystem {
    u: DMatrix<f64>,
    v_t: DMatrix<f64>,
    singular: DVector<f64>,
    rows: usize,
    cols: usize,
    cutoff: f64,
}

/// Decomposes with the default relative cutoff.
pub fn decompose(a: &DMatrix<f64>) -> Result<SvdSystem> {
    decompose_with(a, DEFAULT_RANK_CUTOFF)
}

/// Decomposes `a`, treating singular values at or below
/// `relative_cutoff · σ_max` as zero.
pub fn decompose_with(a: &DMatrix<f64>, relative_cutoff: f64) -> Result<SvdSystem> {
    let (rows, cols) = a.shape();
    if cols == 0 {
        return Ok(SvdSystem {
            u: DMatrix::zeros(rows, 0),
            v_t: DMatrix::zeros(0, 0),
            singular: DVector::zeros(0),
            rows,
            cols,
            cutoff: 0.0,
        });
    }
    let work = if rows >= cols {
        a.clone()
    } else {
        let mut padded = DMatrix::zeros(cols, cols);
        padded.rows_mut(0, rows).copy_from(a);
        padded
    };
    let svd = SVD::try_new(work, true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("singular value decomposition did not converge".into()))?;
    let u = svd.u.ok_or_else(|| Error::Numerical("svd produced no left vectors".into()))?;
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Numerical("svd produced no right vectors".into()))?;
    let singular = DVector::from_iterator(svd.singular_values.len(), svd.singular_values.iter().copied());
    if singular.iter().any(|s| !s.is_finite()) {
        return Err(Error::Numerical("non-finite singular values".into()));
    }
    let sigma_max = singular.iter().copied().fold(0.0f64, f64::max);
    Ok(SvdSystem {
        u,
        v_t,
        singular,
        rows,
        cols,
        cutoff: relative_cutoff * sigma_max,
    })
}

impl SvdSystem {
    pub fn rank(&self) -> usize {
        self.singular.iter().filter(|&&s| s > self.cutoff).count()
    }

    pub fn sigma_max(&self) -> f64 {
        self.singular.iter().copied().fold(0.0f64, f64::max)
    }

    /// The minimum-norm least-squares solution x = A⁺ b.
    pub fn solve_min_norm(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        if b.len() != self.rows {
            return Err(Error::DimensionMismatch {
                what: "right-hand side length",
                expected: self.rows,
                got: b.len(),
            });
        }
        let mut x = DVector::zeros(self.cols);
        for i in 0..self.singular.len() {
            let s = self.singular[i];
            if s <= self.cutoff {
                continue;
            }
            let mut dot = 0.0;
            for r in 0..self.rows {
                dot += self.u[(r, i)] * b[r];
            }
            let coeff = dot / s;
            for c in 0..self.cols {
                x[c] += coeff * self.v_t[(i, c)];
            }
        }
        Ok(x)
    }

    /// Orthonormal basis of the nullspace, one column per basis vector
    /// (possibly zero columns).
    pub fn nullspace(&self) -> DMatrix<f64> {
        self.right_vectors().1
    }

    /// Right singular vectors split by the cutoff: (row-space basis,
    /// nullspace basis), both orthonormal by columns.
    pub fn right_vectors(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let range_idx: Vec<usize> = (0..self.singular.len())
            .filter(|&i| self.singular[i] > self.cutoff)
            .collect();
        let null_idx: Vec<usize> = (0..self.singular.len())
            .filter(|&i| self.singular[i] <= self.cutoff)
            .collect();
        let pick = |idx: &[usize]| {
            let mut m = DMatrix::zeros(self.cols, idx.len());
            for (out_col, &i) in idx.iter().enumerate() {
                for c in 0..self.cols {
                    m[(c, out_col)] = self.v_t[(i, c)];
                }
            }
            m
        };
        (pick(&range_idx), pick(&null_idx))
    }
}
