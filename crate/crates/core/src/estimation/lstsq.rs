//! Dense least squares by Householder QR.

use crate::scalar::Real;

/// Minimises `||A x - b||` for a column-major-free row list `rows` (m x n, m >= n).
///
/// Returns `None` when `A` is numerically rank deficient.
pub fn solve_least_squares<T: Real>(rows: &[Vec<T>], rhs: &[T]) -> Option<Vec<T>> {
    let m = rows.len();
    let n = rows.first().map_or(0, Vec::len);
    if m < n || n == 0 || rhs.len() != m {
        return None;
    }
    let mut a: Vec<Vec<T>> = rows.to_vec();
    let mut b = rhs.to_vec();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(T::zero(), |acc, v| acc.max(v.abs()));
    let tiny = scale * T::epsilon() * T::from_usize(m.max(n) * 16).unwrap();
    let mut diag = vec![T::zero(); n];
    for k in 0..n {
        let norm = (k..m).fold(T::zero(), |acc, i| acc + a[i][k] * a[i][k]).sqrt();
        if norm <= tiny {
            return None;
        }
        let alpha = if a[k][k] > T::zero() { -norm } else { norm };
        // v = x - alpha e1, stored in place below the diagonal.
        a[k][k] = a[k][k] - alpha;
        let vnorm2 = (k..m).fold(T::zero(), |acc, i| acc + a[i][k] * a[i][k]);
        for j in k + 1..n {
            let dot = (k..m).fold(T::zero(), |acc, i| acc + a[i][k] * a[i][j]);
            let f = T::lit(2.0) * dot / vnorm2;
            for row in &mut a[k..m] {
                let vik = row[k];
                row[j] = row[j] - f * vik;
            }
        }
        let dot = (k..m).fold(T::zero(), |acc, i| acc + a[i][k] * b[i]);
        let f = T::lit(2.0) * dot / vnorm2;
        for i in k..m {
            b[i] = b[i] - f * a[i][k];
        }
        diag[k] = alpha;
    }
    let mut x = vec![T::zero(); n];
    for k in (0..n).rev() {
        let s = (k + 1..n).fold(b[k], |acc, j| acc - a[k][j] * x[j]);
        x[k] = s / diag[k];
    }
    Some(x)
}
