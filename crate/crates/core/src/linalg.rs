//! Dense least-squares and matrix helpers shared by every estimator.
//!
//! All regressions in this crate funnel through [`lstsq`], which uses an SVD
//! so that near-collinear designs are detected rather than silently producing
//! noise. Rank deficiency is reported with the offending column indices; the
//! caller decides whether that is an error or a droppable situation.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative singular-value cutoff below which a direction counts as null.
pub const RANK_TOL: f64 = 1e-10;

/// Least-squares solution of `X b = y` with rank diagnostics.
pub struct Lstsq {
    /// Coefficient vector, length = number of columns of `X`.
    pub beta: DVector<f64>,
    /// Numerical rank of `X` at the relative tolerance [`RANK_TOL`].
    pub rank: usize,
    /// Indices of columns involved in a linear dependency (empty at full rank).
    pub dependent_cols: Vec<usize>,
}

/// Solve min ||X b − y||₂ by SVD with a relative rank tolerance.
///
/// When `X` is rank-deficient the minimum-norm solution is returned and
/// `dependent_cols` names the columns with meaningful weight in the null
/// space, so callers can report which regressors are collinear.
pub fn lstsq(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<Lstsq> {
    let (n, k) = (x.nrows(), x.ncols());
    if n < k {
        return Err(Error::validation(format!(
            "least squares needs at least as many rows ({n}) as columns ({k})"
        )));
    }
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let tol = RANK_TOL * smax;
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > tol)
        .count();
    let mut dependent_cols = Vec::new();
    if rank < k {
        // Null-space directions of X live in the right singular vectors for
        // small singular values; columns with non-trivial weight there are
        // the mutually dependent ones.
        let vt = svd.v_t.as_ref().expect("svd with v requested");
        for (si, &s) in svd.singular_values.iter().enumerate() {
            if s <= tol {
                for j in 0..k {
                    if vt[(si, j)].abs() > 1e-8 && !dependent_cols.contains(&j) {
                        dependent_cols.push(j);
                    }
                }
            }
        }
        // Zero singular values beyond the recorded ones (tall matrices store
        // min(n,k) values; columns past the rank are implicit).
        for j in svd.singular_values.len()..k {
            if !dependent_cols.contains(&j) {
                dependent_cols.push(j);
            }
        }
        dependent_cols.sort_unstable();
    }
    let beta = svd
        .solve(y, tol)
        .map_err(|e| Error::numerical(format!("svd solve failed: {e}")))?;
    Ok(Lstsq {
        beta,
        rank,
        dependent_cols,
    })
}

/// Inverse of a small symmetric positive-definite matrix via Cholesky,
/// falling back to LU for merely invertible inputs.
pub fn inv_spd(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    if let Some(ch) = m.clone().cholesky() {
        return Ok(ch.inverse());
    }
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::numerical(format!("{what} is singular")))
}

/// Moore–Penrose pseudo-inverse with the crate-wide rank tolerance.
///
/// Returns the pseudo-inverse together with the numerical rank, which the
/// Hausman test reports when the variance difference is singular.
pub fn pinv(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, usize)> {
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let tol = RANK_TOL * smax;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let p = svd
        .pseudo_inverse(tol)
        .map_err(|e| Error::numerical(format!("pseudo-inverse failed: {e}")))?;
    Ok((p, rank))
}

/// Columns of `m` that participate in a linear dependency (empty at full
/// rank). Used to name offending instrument columns when a moment matrix
/// turns out singular.
pub fn dependent_columns(m: &DMatrix<f64>) -> Vec<usize> {
    let k = m.ncols();
    let svd = m.clone().svd(false, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let tol = RANK_TOL * smax;
    let vt = svd.v_t.as_ref().expect("svd with v requested");
    let mut cols = Vec::new();
    for (si, &s) in svd.singular_values.iter().enumerate() {
        if s <= tol {
            for j in 0..k {
                if vt[(si, j)].abs() > 1e-8 && !cols.contains(&j) {
                    cols.push(j);
                }
            }
        }
    }
    for j in svd.singular_values.len()..k {
        if !cols.contains(&j) {
            cols.push(j);
        }
    }
    cols.sort_unstable();
    cols
}

/// Symmetrize in place: m ← (m + mᵀ)/2. Estimator covariances accumulate
/// floating-point asymmetry that downstream quadratic forms should not see.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}
