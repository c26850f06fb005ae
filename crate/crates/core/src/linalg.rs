//! Small dense linear algebra, generic over the scalar type.
//!
//! Matrices are row-major `Vec<Vec<_>>`; everything here is sized for the
//! handful of variables a desk-scale problem has.

use std::collections::BTreeMap;

use num_traits::Float;

use crate::scalar::Field;

/// Eigenvalues of a symmetric matrix in ascending order (cyclic Jacobi).
pub fn symmetric_eigenvalues<F: Float>(a: &[Vec<F>]) -> Vec<F> {
    let n = a.len();
    let mut m: Vec<Vec<F>> = a.to_vec();
    let two = F::one() + F::one();
    for _sweep in 0..100 {
        let mut off = F::zero();
        let mut scale = F::zero();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off = off + m[i][j] * m[i][j];
                }
                scale = scale + m[i][j] * m[i][j];
            }
        }
        if off <= F::epsilon() * F::epsilon() * scale || off == F::zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q] == F::zero() {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (two * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + F::one()).sqrt());
                let c = F::one() / (t * t + F::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut eig: Vec<F> = (0..n).map(|i| m[i][i]).collect();
    eig.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    eig
}

/// Solve a square system with partial pivoting; `None` when numerically singular.
pub fn solve<F: Float>(a: &[Vec<F>], b: &[F]) -> Option<Vec<F>> {
    let n = a.len();
    let mut m: Vec<Vec<F>> = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            let mut r = row.clone();
            r.push(bi);
            r
        })
        .collect();
    let norm = a
        .iter()
        .flatten()
        .fold(F::zero(), |acc, v| acc.max(v.abs()));
    let tiny = norm * F::epsilon() * F::from(n.max(1) * 16).unwrap();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| {
            m[i][col]
                .abs()
                .partial_cmp(&m[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if !(m[piv][col].abs() > tiny) {
            return None;
        }
        m.swap(col, piv);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            if f == F::zero() {
                continue;
            }
            for k in col..=n {
                let v = m[col][k];
                m[row][k] = m[row][k] - f * v;
            }
        }
    }
    let mut x = vec![F::zero(); n];
    for i in (0..n).rev() {
        let mut acc = m[i][n];
        for k in i + 1..n {
            acc = acc - m[i][k] * x[k];
        }
        x[i] = acc / m[i][i];
    }
    Some(x)
}

/// Numerical rank by Gaussian elimination with complete pivoting.
///
/// Pivots below `rel_tol * max|a_ij|` count as zero.
pub fn numerical_rank<F: Float>(a: &[Vec<F>], rel_tol: F) -> usize {
    let rows = a.len();
    if rows == 0 {
        return 0;
    }
    let cols = a[0].len();
    let mut m = a.to_vec();
    let norm = a
        .iter()
        .flatten()
        .fold(F::zero(), |acc, v| acc.max(v.abs()));
    if norm == F::zero() {
        return 0;
    }
    let tol = rel_tol * norm;
    let mut rank = 0;
    let mut col_used = vec![false; cols];
    let mut row_used = vec![false; rows];
    loop {
        let mut best = (F::zero(), usize::MAX, usize::MAX);
        for i in (0..rows).filter(|&i| !row_used[i]) {
            for j in (0..cols).filter(|&j| !col_used[j]) {
                if m[i][j].abs() > best.0 {
                    best = (m[i][j].abs(), i, j);
                }
            }
        }
        let (val, pi, pj) = best;
        if !(val > tol) {
            return rank;
        }
        rank += 1;
        row_used[pi] = true;
        col_used[pj] = true;
        for i in (0..rows).filter(|&i| !row_used[i]) {
            let f = m[i][pj] / m[pi][pj];
            for j in 0..cols {
                let v = m[pi][j];
                m[i][j] = m[i][j] - f * v;
            }
        }
    }
}

/// Least-squares solution of `A c = b` for `A` (rows x cols) with full column
/// rank, via the normal equations.
pub fn least_squares<F: Float>(a: &[Vec<F>], b: &[F]) -> Option<Vec<F>> {
    let cols = a.first().map_or(0, |r| r.len());
    let mut ata = vec![vec![F::zero(); cols]; cols];
    let mut atb = vec![F::zero(); cols];
    for (row, &bi) in a.iter().zip(b) {
        for i in 0..cols {
            atb[i] = atb[i] + row[i] * bi;
            for j in 0..cols {
                ata[i][j] = ata[i][j] + row[i] * row[j];
            }
        }
    }
    solve(&ata, &atb)
}

/// A sparse column: row index to nonzero entry.
pub type SparseColumn<T> = BTreeMap<usize, T>;

/// Exact rank of a matrix given by sparse columns, over any exact field.
///
/// Column reduction keyed on the lowest nonzero row; entries are tested with
/// `is_zero`, so the field must be exact (rationals, GF(2), ...).
pub fn exact_rank<T: Field>(columns: Vec<SparseColumn<T>>) -> usize {
    let mut pivots: BTreeMap<usize, SparseColumn<T>> = BTreeMap::new();
    for mut col in columns {
        while let Some((&low, _)) = col.iter().next_back() {
            match pivots.get(&low) {
                Some(p) => {
                    let factor = col[&low].clone() / p[&low].clone();
                    for (r, v) in p {
                        let updated = col.get(r).cloned().unwrap_or_else(T::zero) - factor.clone() * v.clone();
                        if updated.is_zero() {
                            col.remove(r);
                        } else {
                            col.insert(*r, updated);
                        }
                    }
                }
                None => {
                    pivots.insert(low, col);
                    break;
                }
            }
        }
    }
    pivots.len()
}
