//! Reference computations that share no linear algebra with the library.

use nalgebra::{DMatrix, SymmetricEigen};
use sgm::numerics::Matrix;

pub fn to_dense(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |a, b| m[(a, b)])
}

pub fn mean_distance_gamma(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len();
    let mut total = 0.0;
    for a in 0..n {
        for b in a + 1..n {
            let d2: f64 = rows[a].iter().zip(&rows[b]).map(|(x, y)| (x - y).powi(2)).sum();
            total += d2.sqrt();
        }
    }
    let mean = total / (n * (n - 1) / 2) as f64;
    1.0 / (mean * mean)
}

/// Centered Gaussian Gram matrix with the mean-distance bandwidth.
pub fn centered_gram(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    let gamma = mean_distance_gamma(rows);
    let k = DMatrix::from_fn(n, n, |a, b| {
        let d2: f64 = rows[a].iter().zip(&rows[b]).map(|(x, y)| (x - y).powi(2)).sum();
        (-gamma * d2).exp()
    });
    let q = DMatrix::<f64>::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64);
    &q * k * &q
}

/// Coordinates of the n centered feature vectors in an orthonormal basis of
/// their span: column `a` holds the coordinates of feature `a`.
pub fn feature_coordinates(g: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(g.clone());
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..g.nrows()).filter(|&k| eig.eigenvalues[k] > 1e-13 * top).collect();
    DMatrix::from_fn(keep.len(), g.ncols(), |r, a| {
        let k = keep[r];
        eig.eigenvalues[k].sqrt() * eig.eigenvectors[(a, k)]
    })
}

pub fn largest_eigenvalue(g: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(g.clone()).eigenvalues.iter().cloned().fold(f64::MIN, f64::max)
}

/// Hilbert–Schmidt norm of the empirical conjoined conditional covariance
/// operator, assembled from the four sample covariance operators written in
/// orthonormal coordinates.
///
/// `eps_rel` is relative to the largest eigenvalue of the conditioning Gram
/// matrix; the operator-level ridge is that value divided by n.
pub fn conditional_hs_norm(xi: &[f64], xj: &[f64], w: &[Vec<f64>], eps_rel: f64) -> f64 {
    let n = xi.len();
    let joined = |x: &[f64]| -> Vec<Vec<f64>> {
        x.iter()
            .zip(w)
            .map(|(v, row)| std::iter::once(*v).chain(row.iter().copied()).collect())
            .collect()
    };
    let g_a = centered_gram(&joined(xi));
    let g_b = centered_gram(&joined(xj));
    let g_w = centered_gram(w);
    let ridge = eps_rel * largest_eigenvalue(&g_w) / n as f64;

    let phi_a = feature_coordinates(&g_a);
    let phi_b = feature_coordinates(&g_b);
    let phi_w = feature_coordinates(&g_w);
    let scale = 1.0 / n as f64;
    let s_ab = &phi_a * phi_b.transpose() * scale;
    let s_aw = &phi_a * phi_w.transpose() * scale;
    let s_wb = &phi_w * phi_b.transpose() * scale;
    let s_ww = &phi_w * phi_w.transpose() * scale;
    let r = s_ww.nrows();
    let inv = (s_ww + DMatrix::<f64>::identity(r, r) * ridge)
        .try_inverse()
        .expect("ridge makes the covariance invertible");
    (s_ab - s_aw * inv * s_wb).norm()
}

/// Minimal numeric CSV reader: optional header row, comma separated.
pub fn read_numeric_csv(path: &std::path::Path) -> Vec<Vec<f64>> {
    let text = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .filter_map(|l| {
            l.split(',')
                .map(|c| c.trim().trim_matches('"').parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .ok()
        })
        .collect()
}
