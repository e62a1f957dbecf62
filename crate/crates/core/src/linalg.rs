//! Small dense linear-algebra helpers on row-major `Vec<Vec<f64>>` data.

use nalgebra::DMatrix;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves the square system `rows · x = rhs` by Gaussian elimination with
/// partial pivoting. Rows are expected to be roughly unit scale; `None` when
/// a pivot falls below `pivot_tol`.
#[allow(clippy::needless_range_loop)]
pub(crate) fn solve_square(rows: &[&[f64]], rhs: &[f64], pivot_tol: f64) -> Option<Vec<f64>> {
    let n = rows.len();
    let mut m: Vec<Vec<f64>> = rows
        .iter()
        .zip(rhs)
        .map(|(r, &b)| {
            let mut v = r.to_vec();
            v.push(b);
            v
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() < pivot_tol {
            return None;
        }
        m.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            if f != 0.0 {
                for c in col..=n {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * x[c]).sum();
        x[r] = (m[r][n] - s) / m[r][r];
    }
    Some(x)
}

fn to_matrix(rows: &[Vec<f64>], cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j])
}

/// Orthonormal basis (as rows) of the row space of `rows`.
pub(crate) fn row_space_basis(rows: &[Vec<f64>], cols: usize, tol: f64) -> Vec<Vec<f64>> {
    if rows.is_empty() {
        return Vec::new();
    }
    let m = to_matrix(rows, cols);
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > tol * smax.max(1.0))
        .map(|(i, _)| vt.row(i).iter().cloned().collect())
        .collect()
}

/// Orthonormal basis (as rows) of the orthogonal complement of the row space.
pub(crate) fn complement_basis(rows: &[Vec<f64>], cols: usize, tol: f64) -> Vec<Vec<f64>> {
    let basis = row_space_basis(rows, cols, tol);
    let mut out: Vec<Vec<f64>> = basis.clone();
    let mut result = Vec::new();
    // Gram–Schmidt the standard basis against the row space.
    for j in 0..cols {
        if out.len() == cols {
            break;
        }
        let mut e = vec![0.0; cols];
        e[j] = 1.0;
        for _ in 0..2 {
            for q in &out {
                let c = dot(&e, q);
                for (x, y) in e.iter_mut().zip(q) {
                    *x -= c * y;
                }
            }
        }
        let n = norm2(&e);
        if n > 1e-8 {
            e.iter_mut().for_each(|x| *x /= n);
            out.push(e.clone());
            result.push(e);
        }
    }
    result
}

/// Affine parametrization `{x : A x = c} = {x0 + Nᵀ y}` with orthonormal rows
/// in `N`; `x0` is the least-norm solution. `None` if the system is inconsistent.
pub(crate) struct AffineChart {
    pub origin: Vec<f64>,
    pub directions: Vec<Vec<f64>>,
}

pub(crate) fn affine_chart(
    a: &[Vec<f64>],
    c: &[f64],
    cols: usize,
    tol: f64,
) -> Option<AffineChart> {
    if a.is_empty() {
        return Some(AffineChart {
            origin: vec![0.0; cols],
            directions: (0..cols)
                .map(|j| {
                    let mut e = vec![0.0; cols];
                    e[j] = 1.0;
                    e
                })
                .collect(),
        });
    }
    let m = to_matrix(a, cols);
    let b = nalgebra::DVector::from_column_slice(c);
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let eps = tol * smax.max(1.0);
    let x = svd.solve(&b, eps).ok()?;
    let resid = (&m * &x - &b).amax();
    if resid > 1e-7 * (1.0 + b.amax()) {
        return None;
    }
    Some(AffineChart {
        origin: x.iter().cloned().collect(),
        directions: complement_basis(a, cols, tol),
    })
}

impl AffineChart {
    pub fn dim(&self) -> usize {
        self.directions.len()
    }

    pub fn embed(&self, y: &[f64]) -> Vec<f64> {
        let mut x = self.origin.clone();
        for (yi, d) in y.iter().zip(&self.directions) {
            for (xj, dj) in x.iter_mut().zip(d) {
                *xj += yi * dj;
            }
        }
        x
    }

    /// Coordinates of the Euclidean projection of `x` onto the affine set.
    pub fn coordinates(&self, x: &[f64]) -> Vec<f64> {
        let shifted: Vec<f64> = x.iter().zip(&self.origin).map(|(a, b)| a - b).collect();
        self.directions.iter().map(|d| dot(d, &shifted)).collect()
    }
}
