//! Tiny dense linear algebra for the n x n systems that show up here
//! (n is the system dimension, in practice at most a handful).

/// Gauss-Jordan inverse with partial pivoting. `None` when a pivot
/// underflows to zero.
pub(crate) fn invert(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot_row = (col..n).max_by(|&i, &j| {
            m[i][col]
                .abs()
                .partial_cmp(&m[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if m[pivot_row][col] == 0.0 {
            return None;
        }
        m.swap(col, pivot_row);
        let p = m[col][col];
        for v in m[col].iter_mut() {
            *v /= p;
        }
        for row in 0..n {
            if row != col {
                let factor = m[row][col];
                if factor != 0.0 {
                    let pivot = m[col].clone();
                    for (v, p) in m[row].iter_mut().zip(&pivot) {
                        *v -= factor * p;
                    }
                }
            }
        }
    }
    Some(m.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Maximum absolute column sum.
pub(crate) fn norm1(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    (0..n)
        .map(|j| a.iter().map(|row| row[j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub(crate) fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let m = b[0].len();
    let k = b.len();
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for l in 0..k {
            let ail = a[i][l];
            if ail != 0.0 {
                for j in 0..m {
                    out[i][j] += ail * b[l][j];
                }
            }
        }
    }
    out
}

pub(crate) fn transpose(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let m = a[0].len();
    (0..m).map(|j| (0..n).map(|i| a[i][j]).collect()).collect()
}

/// Determinant via LU with partial pivoting.
pub(crate) fn det(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    if n == 0 {
        return 1.0;
    }
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut sign = 1.0;
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| {
                m[i][col]
                    .abs()
                    .partial_cmp(&m[j][col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        if m[pivot_row][col] == 0.0 {
            return 0.0;
        }
        if pivot_row != col {
            m.swap(col, pivot_row);
            sign = -sign;
        }
        for row in col + 1..n {
            let factor = m[row][col] / m[col][col];
            if factor != 0.0 {
                let pivot: Vec<f64> = m[col][col..].to_vec();
                for (v, p) in m[row][col..].iter_mut().zip(&pivot) {
                    *v -= factor * p;
                }
            }
        }
    }
    sign * (0..n).map(|i| m[i][i]).product::<f64>()
}

/// Indices of rows that are (numerically) linear combinations of the rows
/// before them, by sequential Gram-Schmidt with a relative threshold.
pub(crate) fn dependent_rows(a: &[Vec<f64>], rel_tol: f64) -> Vec<usize> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut dependent = Vec::new();
    for (idx, row) in a.iter().enumerate() {
        let scale = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut r = row.clone();
        for b in &basis {
            let proj: f64 = r.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in r.iter_mut().zip(b) {
                *x -= proj * y;
            }
        }
        let rem = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rem <= rel_tol * scale.max(1e-300) {
            dependent.push(idx);
        } else {
            for x in r.iter_mut() {
                *x /= rem;
            }
            basis.push(r);
        }
    }
    dependent
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invert_two_by_two() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 1.0]];
        let inv = invert(&a).unwrap();
        let id = matmul(&a, &inv);
        for (i, row) in id.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn singular_matrix_returns_none() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(invert(&a).is_none());
        assert_eq!(det(&a), 0.0);
    }

    #[test]
    fn det_three_by_three() {
        let a = vec![
            vec![2.0, 0.0, 1.0],
            vec![1.0, 3.0, 2.0],
            vec![0.0, 1.0, 1.0],
        ];
        assert!((det(&a) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn dependent_row_detection() {
        let a = vec![vec![1.0, 0.0], vec![2.0, 0.0]];
        assert_eq!(dependent_rows(&a, 1e-10), vec![1]);
        let b = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!(dependent_rows(&b, 1e-10).is_empty());
    }
}
