//! Small dense helpers: row-equilibrated determinants and one-dimensional nullspaces.

use nalgebra::{DMatrix, DVector};

use crate::error::{BeamError, Result};

/// Singular values below this fraction of the largest count toward the nullity.
pub const NULLITY_TOL: f64 = 1e-8;

/// Determinant of a row-equilibrated matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Determinant {
    pub value: f64,
    /// Rows that were identically zero and could not be scaled.
    pub zero_rows: Vec<usize>,
}

/// Divides every row by its largest absolute entry; returns the indices of zero rows.
pub fn equilibrate_rows(m: &mut DMatrix<f64>) -> Vec<usize> {
    let mut zero = Vec::new();
    for (r, mut row) in m.row_iter_mut().enumerate() {
        let s = row.amax();
        if s > 0.0 && s.is_finite() {
            row /= s;
        } else {
            zero.push(r);
        }
    }
    zero
}

/// Row-equilibrates `m` and returns its LU determinant.
pub fn equilibrated_det(mut m: DMatrix<f64>) -> Determinant {
    let zero_rows = equilibrate_rows(&mut m);
    let value = if zero_rows.is_empty() {
        m.lu().determinant()
    } else {
        0.0
    };
    Determinant { value, zero_rows }
}

/// Unit vector spanning the nullspace of `m`.
///
/// Uses the smallest right singular direction; when the SVD does not converge
/// it falls back to [`nullspace_by_elimination`]. Errors if the numerical
/// nullity (singular values below `NULLITY_TOL · σ_max`) is not one.
pub fn nullspace_vector(m: &DMatrix<f64>, lambda: f64) -> Result<DVector<f64>> {
    let mut scaled = m.clone();
    equilibrate_rows(&mut scaled);
    let n = scaled.ncols();
    match scaled.clone().try_svd(false, true, f64::EPSILON, 500) {
        Some(svd) => {
            let sv = &svd.singular_values;
            let smax = sv.max();
            let nullity = sv.iter().filter(|&&s| s <= NULLITY_TOL * smax).count();
            // Wide matrices have implicit zero singular values.
            let nullity = nullity + n.saturating_sub(sv.len());
            if nullity != 1 {
                return Err(BeamError::Degenerate {
                    lambda,
                    dimension: nullity,
                });
            }
            let imin = sv.imin();
            let v_t = svd.v_t.expect("requested V^T");
            Ok(v_t.row(imin).transpose().normalize())
        }
        None => nullspace_by_elimination(&scaled),
    }
}

/// Nullspace direction by Gaussian elimination with full pivoting.
///
/// The last pivot of an (numerically) rank-deficient matrix is dropped, which
/// discards the most linearly dependent row; the corresponding free variable is
/// set to one and the rest follow by back substitution.
pub fn nullspace_by_elimination(m: &DMatrix<f64>) -> Result<DVector<f64>> {
    let (rows, cols) = m.shape();
    let mut a = m.clone();
    let mut perm: Vec<usize> = (0..cols).collect();
    let rank_limit = rows.min(cols);
    let mut rank = 0;
    let scale = a.amax().max(f64::MIN_POSITIVE);

    for k in 0..rank_limit {
        // Full pivot search on the trailing block.
        let mut best = (k, k, 0.0);
        for r in k..rows {
            for c in k..cols {
                let v = a[(r, c)].abs();
                if v > best.2 {
                    best = (r, c, v);
                }
            }
        }
        if best.2 <= NULLITY_TOL * scale || k == cols - 1 {
            break;
        }
        a.swap_rows(k, best.0);
        a.swap_columns(k, best.1);
        perm.swap(k, best.1);
        for r in (k + 1)..rows {
            let factor = a[(r, k)] / a[(k, k)];
            if factor != 0.0 {
                for c in k..cols {
                    let v = a[(k, c)];
                    a[(r, c)] -= factor * v;
                }
            }
        }
        rank += 1;
    }
    if rank == 0 {
        return Err(BeamError::Degenerate {
            lambda: f64::NAN,
            dimension: cols,
        });
    }

    // Free variable is the first unpivoted column; further free ones are zero.
    let mut y = DVector::zeros(cols);
    y[rank] = 1.0;
    for k in (0..rank).rev() {
        let mut s = 0.0;
        for c in (k + 1)..=rank {
            s += a[(k, c)] * y[c];
        }
        y[k] = -s / a[(k, k)];
    }
    let mut x = DVector::zeros(cols);
    for (pos, &orig) in perm.iter().enumerate() {
        x[orig] = y[pos];
    }
    Ok(x.normalize())
}
