//! Dense linear algebra over [`Scalar`]: Gaussian elimination for determinants,
//! ranks and inverses, plus a spectral-norm helper for the floating side.
//!
//! Pivot choice differs by mode. Exact mode takes the first nonzero entry and
//! never rounds. Approximate mode uses partial pivoting and treats entries with
//! modulus at or below `tol` as zero.

use nalgebra::DMatrix;

use crate::scalar::{Scalar, C64};

/// Row-major square matrix as nested rows.
pub type Rows<S> = Vec<Vec<S>>;

fn pick_pivot<S: Scalar>(m: &Rows<S>, col: usize, from: usize, tol: f64) -> Option<usize> {
    if S::is_exact() {
        return (from..m.len()).find(|&r| !m[r][col].is_zero());
    }
    let (best, best_abs) = (from..m.len())
        .map(|r| (r, m[r][col].abs()))
        .fold((from, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
    if best_abs > tol {
        Some(best)
    } else {
        None
    }
}

pub fn determinant<S: Scalar>(matrix: &Rows<S>) -> S {
    let n = matrix.len();
    let mut m = matrix.clone();
    let mut det = S::one();
    for col in 0..n {
        // tol = 0: a determinant never rounds small pivots away.
        let Some(p) = pick_pivot(&m, col, col, 0.0) else {
            return S::zero();
        };
        if p != col {
            m.swap(p, col);
            det = -det;
        }
        let pivot = m[col][col].clone();
        det = det * pivot.clone();
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = m[r][col].clone() / pivot.clone();
            for c in col..n {
                let v = m[col][c].clone() * factor.clone();
                m[r][c] = m[r][c].clone() - v;
            }
        }
    }
    det
}

/// Rank of a (possibly rectangular) row set. In approximate mode every row is
/// first scaled to unit Euclidean length so `tol` is relative.
pub fn rank<S: Scalar>(rows: &[Vec<S>], tol: f64) -> usize {
    let mut m: Rows<S> = rows
        .iter()
        .filter_map(|row| {
            if S::is_exact() {
                return Some(row.clone());
            }
            let len = row.iter().map(|z| z.abs().powi(2)).sum::<f64>().sqrt();
            if len == 0.0 {
                None
            } else {
                let inv = S::from_real(1.0 / len);
                Some(row.iter().map(|z| z.clone() * inv.clone()).collect())
            }
        })
        .collect();
    if m.is_empty() {
        return 0;
    }
    let cols = m[0].len();
    let mut rank = 0;
    for col in 0..cols {
        if rank == m.len() {
            break;
        }
        let Some(p) = pick_pivot(&m, col, rank, tol) else {
            continue;
        };
        m.swap(p, rank);
        let pivot = m[rank][col].clone();
        for r in rank + 1..m.len() {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = m[r][col].clone() / pivot.clone();
            for c in col..cols {
                let v = m[rank][c].clone() * factor.clone();
                m[r][c] = m[r][c].clone() - v;
            }
        }
        rank += 1;
    }
    rank
}

/// True when the rows are linearly dependent (rank below row count).
pub fn rows_dependent<S: Scalar>(rows: &[Vec<S>], tol: f64) -> bool {
    rank(rows, tol) < rows.len()
}

/// Gauss-Jordan inverse; `None` for singular input.
pub fn inverse<S: Scalar>(matrix: &Rows<S>, tol: f64) -> Option<Rows<S>> {
    let n = matrix.len();
    let mut a = matrix.clone();
    let mut inv: Rows<S> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { S::one() } else { S::zero() }).collect())
        .collect();
    for col in 0..n {
        let p = pick_pivot(&a, col, col, tol)?;
        a.swap(p, col);
        inv.swap(p, col);
        let pivot = a[col][col].clone();
        for c in 0..n {
            a[col][c] = a[col][c].clone() / pivot.clone();
            inv[col][c] = inv[col][c].clone() / pivot.clone();
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone();
            for c in 0..n {
                let va = a[col][c].clone() * factor.clone();
                a[r][c] = a[r][c].clone() - va;
                let vi = inv[col][c].clone() * factor.clone();
                inv[r][c] = inv[r][c].clone() - vi;
            }
        }
    }
    Some(inv)
}

/// A nonzero vector `v` with `M v = 0`, if the matrix is singular.
pub fn kernel_vector<S: Scalar>(matrix: &Rows<S>, tol: f64) -> Option<Vec<S>> {
    let n = matrix.len();
    let mut a = matrix.clone();
    let mut pivot_cols = Vec::new();
    let mut row = 0;
    for col in 0..n {
        if row == n {
            break;
        }
        let Some(p) = pick_pivot(&a, col, row, tol) else {
            continue;
        };
        a.swap(p, row);
        let pivot = a[row][col].clone();
        for c in 0..n {
            a[row][c] = a[row][c].clone() / pivot.clone();
        }
        for r in 0..n {
            if r == row || a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone();
            for c in 0..n {
                let v = a[row][c].clone() * factor.clone();
                a[r][c] = a[r][c].clone() - v;
            }
        }
        pivot_cols.push(col);
        row += 1;
    }
    let free = (0..n).find(|c| !pivot_cols.contains(c))?;
    let mut v = vec![S::zero(); n];
    v[free] = S::one();
    for (r, &pc) in pivot_cols.iter().enumerate() {
        v[pc] = -a[r][free].clone();
    }
    Some(v)
}

pub fn transpose_conj<S: Scalar>(m: &Rows<S>) -> Rows<S> {
    let n = m.len();
    (0..n).map(|i| (0..n).map(|j| m[j][i].conj()).collect()).collect()
}

pub fn hermitian_inner<S: Scalar>(x: &[S], y: &[S]) -> S {
    x.iter()
        .zip(y)
        .fold(S::zero(), |acc, (a, b)| acc + a.clone() * b.conj())
}

pub fn to_dmatrix<S: Scalar>(rows: &Rows<S>) -> DMatrix<C64> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(r, c, |i, j| rows[i][j].to_c64())
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<C64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Orthonormal basis (columns) of the span of `vectors`, by modified
/// Gram-Schmidt in floating point. Vectors that add no new direction are skipped.
pub fn orthonormal_basis(vectors: &[Vec<C64>], tol: f64) -> Vec<Vec<C64>> {
    let mut basis: Vec<Vec<C64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let coef = hermitian_inner(&w, q);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= coef * qi;
                }
            }
        }
        let len = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if len > tol {
            basis.push(w.into_iter().map(|z| z / len).collect());
        }
    }
    basis
}
