//! Dense symmetric linear algebra shared by every estimation stage.
//!
//! All spectral operations go through [`eigh`], which returns eigenpairs in a
//! canonical order (descending values, sign-normalized vectors) so that the
//! whole pipeline is reproducible bit for bit.

use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Dense real matrix used throughout the crate.
pub type Matrix = Mat<f64>;

/// Absolute asymmetry tolerated by [`SymMatrix::new`].
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Default relative cutoff for [`pseudo_inverse`].
pub const PINV_REL_TOL: f64 = 1e-10;

/// Relative negative-eigenvalue slack accepted by [`psd_sqrt`].
pub const PSD_SLACK: f64 = 1e-8;

/// Square symmetric matrix, stored symmetrized as `(M + Mᵀ)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(Matrix);

impl SymMatrix {
    /// Validates squareness and symmetry (absolute tolerance [`SYMMETRY_TOL`]).
    pub fn new(m: Matrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::InvalidInput(format!(
                "expected a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        for a in 0..n {
            for b in (a + 1)..n {
                if (m[(a, b)] - m[(b, a)]).abs() > SYMMETRY_TOL {
                    return Err(Error::InvalidInput(format!(
                        "matrix is not symmetric at ({a}, {b}): {} vs {}",
                        m[(a, b)],
                        m[(b, a)]
                    )));
                }
            }
        }
        Ok(Self::symmetrize(m))
    }

    /// Symmetrizes without validation. For products that are symmetric in
    /// exact arithmetic.
    pub(crate) fn symmetrize(mut m: Matrix) -> Self {
        let n = m.nrows();
        debug_assert_eq!(n, m.ncols());
        for a in 0..n {
            for b in (a + 1)..n {
                let v = 0.5 * (m[(a, b)] + m[(b, a)]);
                m[(a, b)] = v;
                m[(b, a)] = v;
            }
        }
        SymMatrix(m)
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        Self::new(Matrix::from_fn(n, n, f))
    }

    pub fn zeros(n: usize) -> Self {
        SymMatrix(Matrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix(Matrix::identity(n, n))
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        SymMatrix(Matrix::from_fn(n, n, |a, b| if a == b { diag[a] } else { 0.0 }))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.0[(a, b)]
    }

    pub fn as_mat(&self) -> &Matrix {
        &self.0
    }

    pub fn into_mat(self) -> Matrix {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.0)
    }

    /// `self + c·other`.
    pub fn add_scaled(&self, c: f64, other: &SymMatrix) -> SymMatrix {
        let n = self.dim();
        SymMatrix(Matrix::from_fn(n, n, |a, b| self.0[(a, b)] + c * other.0[(a, b)]))
    }
}

/// Eigenpairs of a symmetric matrix in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomp {
    /// Eigenvalues, descending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, one per column, aligned with `values`.
    pub vectors: Matrix,
}

impl EigenDecomp {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn max_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn min_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn max_abs_value(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// `V · diag(f(λ)) · Vᵀ`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.dim();
        let weights: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        let kept: Vec<usize> = (0..n).filter(|&k| weights[k] != 0.0).collect();
        if kept.is_empty() {
            return SymMatrix::zeros(n);
        }
        let basis = Matrix::from_fn(n, kept.len(), |a, c| self.vectors[(a, kept[c])]);
        let scaled = Matrix::from_fn(n, kept.len(), |a, c| basis[(a, c)] * weights[kept[c]]);
        SymMatrix::symmetrize(&scaled * basis.transpose())
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.map(|v| v)
    }
}

pub(crate) fn all_finite(m: &Matrix) -> bool {
    (0..m.ncols()).all(|b| (0..m.nrows()).all(|a| m[(a, b)].is_finite()))
}

/// Full symmetric eigendecomposition.
///
/// Values are sorted descending; each eigenvector is flipped so that its
/// largest-magnitude entry is positive (lowest index wins ties).
pub fn eigh(m: &SymMatrix) -> Result<EigenDecomp> {
    if !m.is_finite() {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let n = m.dim();
    if n == 0 {
        return Ok(EigenDecomp {
            values: Vec::new(),
            vectors: Matrix::zeros(0, 0),
        });
    }
    let evd = m
        .as_mat()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::InvalidInput(format!("eigensolver failed: {e:?}")))?;
    let raw_values = evd.S().column_vector();
    let raw_vectors = evd.U();

    // faer returns ascending order
    let order: Vec<usize> = (0..n).rev().collect();
    let values: Vec<f64> = order.iter().map(|&k| raw_values[k]).collect();
    let mut vectors = Matrix::from_fn(n, n, |a, c| raw_vectors[(a, order[c])]);
    for c in 0..n {
        let mut pivot = 0;
        let mut best = -1.0;
        for a in 0..n {
            let mag = vectors[(a, c)].abs();
            if mag > best {
                best = mag;
                pivot = a;
            }
        }
        if vectors[(pivot, c)] < 0.0 {
            for a in 0..n {
                vectors[(a, c)] = -vectors[(a, c)];
            }
        }
    }
    Ok(EigenDecomp { values, vectors })
}

fn shifted_inverse(decomp: &EigenDecomp, eps: f64) -> Result<SymMatrix> {
    let min_shifted = decomp.min_value() + eps;
    if min_shifted <= 1e-14 {
        return Err(Error::NearSingular { min_shifted });
    }
    Ok(decomp.map(|v| 1.0 / (v + eps)))
}

/// Tikhonov-regularized inverse `(m + eps·I)⁻¹`.
pub fn reg_inverse(m: &SymMatrix, eps: f64) -> Result<SymMatrix> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "regularizer must be positive, got {eps}"
        )));
    }
    shifted_inverse(&eigh(m)?, eps)
}

/// Reuses an existing decomposition of `m` to form `(m + eps·I)⁻¹`.
pub(crate) fn reg_inverse_from(decomp: &EigenDecomp, eps: f64) -> Result<SymMatrix> {
    shifted_inverse(decomp, eps)
}

/// Moore–Penrose pseudo-inverse; eigenvalues with `|λ| ≤ rel_tol·max|λ|` are
/// treated as zero. A matrix with no eigenvalue above the cutoff maps to zero.
pub fn pseudo_inverse(m: &SymMatrix, rel_tol: f64) -> Result<SymMatrix> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::InvalidInput(format!(
            "relative tolerance must lie in (0, 1), got {rel_tol}"
        )));
    }
    let decomp = eigh(m)?;
    let cutoff = rel_tol * decomp.max_abs_value();
    Ok(decomp.map(|v| if v.abs() > cutoff { 1.0 / v } else { 0.0 }))
}

/// Square root of a numerically positive semidefinite matrix.
///
/// Negative eigenvalues down to `-PSD_SLACK·max|λ|` are clamped to zero.
pub fn psd_sqrt(m: &SymMatrix) -> Result<SymMatrix> {
    psd_sqrt_from(&eigh(m)?)
}

pub(crate) fn psd_sqrt_from(decomp: &EigenDecomp) -> Result<SymMatrix> {
    let scale = decomp.max_abs_value();
    let min_eig = decomp.min_value();
    if min_eig < -PSD_SLACK * scale {
        return Err(Error::NotPsd {
            min_eig,
            max_eig: decomp.max_value(),
        });
    }
    Ok(decomp.map(|v| v.max(0.0).sqrt()))
}

/// Frobenius norm.
pub fn fro_norm(m: &Matrix) -> f64 {
    let mut acc = 0.0;
    for b in 0..m.ncols() {
        for a in 0..m.nrows() {
            let v = m[(a, b)];
            acc += v * v;
        }
    }
    acc.sqrt()
}

/// `Q = I − 11ᵀ/n`.
pub fn centering_projector(n: usize) -> SymMatrix {
    let inv = if n == 0 { 0.0 } else { 1.0 / n as f64 };
    SymMatrix(Matrix::from_fn(n, n, |a, b| {
        if a == b {
            1.0 - inv
        } else {
            -inv
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn diff_norm(a: &Matrix, b: &Matrix) -> f64 {
        fro_norm(&(a - b))
    }

    fn random_sym(n: usize, seed: u64) -> SymMatrix {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        let raw = Matrix::from_fn(n, n, |_, _| next());
        SymMatrix::symmetrize(&raw + raw.transpose())
    }

    fn random_psd(n: usize, rank: usize, seed: u64) -> SymMatrix {
        let a = random_sym(n.max(rank), seed);
        let factor = Matrix::from_fn(n, rank, |i, j| a.get(i, j));
        SymMatrix::symmetrize(&factor * factor.transpose())
    }

    #[test]
    fn eigh_identity_and_diagonal() {
        let e = eigh(&SymMatrix::identity(3)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
        let vtv = e.vectors.transpose() * &e.vectors;
        assert!(diff_norm(&vtv, &Matrix::identity(3, 3)) < 1e-12);

        let e = eigh(&SymMatrix::from_diag(&[0.0, 2.0])).unwrap();
        assert_eq!(e.values, vec![2.0, 0.0]);
        assert!((e.vectors[(1, 0)] - 1.0).abs() < 1e-14);
        assert!((e.vectors[(0, 1)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eigh_rejects_non_finite() {
        let m = SymMatrix::from_diag(&[1.0, f64::NAN]);
        assert!(matches!(eigh(&m), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn eigh_sign_convention() {
        let m = random_sym(7, 3);
        let e = eigh(&m).unwrap();
        for c in 0..7 {
            let col: Vec<f64> = (0..7).map(|a| e.vectors[(a, c)]).collect();
            let pivot = col
                .iter()
                .enumerate()
                .fold((0, -1.0), |acc, (a, v)| if v.abs() > acc.1 { (a, v.abs()) } else { acc })
                .0;
            assert!(col[pivot] > 0.0);
        }
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn eigh_is_bitwise_deterministic() {
        let m = random_sym(12, 9);
        assert_eq!(eigh(&m).unwrap(), eigh(&m).unwrap());
    }

    #[test]
    fn symmetric_constructor_rejects_asymmetry() {
        let m = Matrix::from_fn(2, 2, |a, b| if a == 0 && b == 1 { 1.0 } else { 0.0 });
        assert!(SymMatrix::new(m).is_err());
        let rect = Matrix::zeros(2, 3);
        assert!(SymMatrix::new(rect).is_err());
    }

    #[test]
    fn reg_inverse_examples() {
        let r = reg_inverse(&SymMatrix::from_diag(&[1.0, 3.0]), 1.0).unwrap();
        assert!(diff_norm(r.as_mat(), SymMatrix::from_diag(&[0.5, 0.25]).as_mat()) < 1e-14);

        let r = reg_inverse(&SymMatrix::zeros(2), 0.5).unwrap();
        assert!(diff_norm(r.as_mat(), SymMatrix::from_diag(&[2.0, 2.0]).as_mat()) < 1e-14);

        let m = random_psd(6, 6, 4);
        let r = reg_inverse(&m, 1e-2).unwrap();
        let shifted = m.add_scaled(1e-2, &SymMatrix::identity(6));
        let prod = shifted.as_mat() * r.as_mat();
        assert!(diff_norm(&prod, &Matrix::identity(6, 6)) < 1e-8);
    }

    #[test]
    fn reg_inverse_errors() {
        assert!(matches!(
            reg_inverse(&SymMatrix::identity(2), 0.0),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            reg_inverse(&SymMatrix::from_diag(&[-1.0, 2.0]), 1.0),
            Err(Error::NearSingular { .. })
        ));
    }

    #[test]
    fn pseudo_inverse_examples() {
        let p = pseudo_inverse(&SymMatrix::from_diag(&[4.0, 0.0]), PINV_REL_TOL).unwrap();
        assert!(diff_norm(p.as_mat(), SymMatrix::from_diag(&[0.25, 0.0]).as_mat()) < 1e-14);

        let p = pseudo_inverse(&SymMatrix::identity(3), PINV_REL_TOL).unwrap();
        assert!(diff_norm(p.as_mat(), &Matrix::identity(3, 3)) < 1e-14);

        let p = pseudo_inverse(&SymMatrix::zeros(3), PINV_REL_TOL).unwrap();
        assert_eq!(fro_norm(p.as_mat()), 0.0);

        let m = random_psd(4, 2, 5);
        let p = pseudo_inverse(&m, PINV_REL_TOL).unwrap();
        let mpm = m.as_mat() * p.as_mat() * m.as_mat();
        assert!(diff_norm(&mpm, m.as_mat()) < 1e-8);
    }

    #[test]
    fn psd_sqrt_examples() {
        let s = psd_sqrt(&SymMatrix::from_diag(&[4.0, 9.0])).unwrap();
        assert!(diff_norm(s.as_mat(), SymMatrix::from_diag(&[2.0, 3.0]).as_mat()) < 1e-14);
        let s = psd_sqrt(&SymMatrix::zeros(3)).unwrap();
        assert_eq!(fro_norm(s.as_mat()), 0.0);
        assert!(matches!(
            psd_sqrt(&SymMatrix::from_diag(&[1.0, -0.1])),
            Err(Error::NotPsd { .. })
        ));
    }

    #[test]
    fn fro_norm_examples() {
        assert_eq!(fro_norm(&Matrix::zeros(3, 3)), 0.0);
        assert_eq!(fro_norm(&Matrix::identity(4, 4)), 2.0);
        let m = Matrix::from_fn(2, 2, |a, b| match (a, b) {
            (0, 0) => 3.0,
            (0, 1) => 4.0,
            _ => 0.0,
        });
        assert_eq!(fro_norm(&m), 5.0);
    }

    #[test]
    fn centering_projector_is_idempotent() {
        let q = centering_projector(9);
        let qq = q.as_mat() * q.as_mat();
        assert!(diff_norm(&qq, q.as_mat()) < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn eigh_reconstructs(seed in any::<u64>(), n in 1usize..9) {
            let m = random_sym(n, seed);
            let e = eigh(&m).unwrap();
            let vtv = e.vectors.transpose() * &e.vectors;
            prop_assert!(diff_norm(&vtv, &Matrix::identity(n, n)) < 1e-8);
            let rel = diff_norm(e.reconstruct().as_mat(), m.as_mat()) / fro_norm(m.as_mat()).max(1e-300);
            prop_assert!(rel < 1e-8);
        }

        #[test]
        fn reg_inverse_commutes(seed in any::<u64>(), n in 1usize..9, eps in 1e-3f64..10.0) {
            let m = random_psd(n, n, seed);
            let r = reg_inverse(&m, eps).unwrap();
            let lhs = m.as_mat() * r.as_mat();
            let rhs = r.as_mat() * m.as_mat();
            prop_assert!(diff_norm(&lhs, &rhs) < 1e-8);
        }

        #[test]
        fn pseudo_inverse_penrose(seed in any::<u64>(), n in 2usize..21, rank_frac in 0.1f64..0.9) {
            let rank = ((n as f64 * rank_frac) as usize).max(1);
            let m = random_psd(n, rank, seed);
            let p = pseudo_inverse(&m, PINV_REL_TOL).unwrap();
            let (a, x) = (m.as_mat(), p.as_mat());
            let scale = fro_norm(a).max(1.0);
            prop_assert!(diff_norm(&(a * x * a), a) < 1e-8 * scale);
            prop_assert!(diff_norm(&(x * a * x), x) < 1e-8 * fro_norm(x).max(1.0));
            let ax = a * x;
            let xa = x * a;
            prop_assert!(diff_norm(&ax, &ax.transpose().to_owned()) < 1e-8);
            prop_assert!(diff_norm(&xa, &xa.transpose().to_owned()) < 1e-8);
        }

        #[test]
        fn psd_sqrt_squares_back(seed in any::<u64>(), n in 1usize..12) {
            let m = random_psd(n, n, seed);
            let s = psd_sqrt(&m).unwrap();
            let ss = s.as_mat() * s.as_mat();
            prop_assert!(diff_norm(&ss, m.as_mat()) < 1e-7 * fro_norm(m.as_mat()).max(1e-300));
            let e = eigh(&s).unwrap();
            prop_assert!(e.min_value() >= -1e-12 * e.max_abs_value().max(1.0));
        }
    }
}
