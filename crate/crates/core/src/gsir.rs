//! Generalized sliced inverse regression: extracts the sufficient predictor
//! of a variable pair from the remaining variables.
//!
//! With centered Gram matrices `G₋` (complement block) and `G₊` (pair block)
//! the sample eigenproblem reduces to the symmetric matrix
//!
//! ```text
//! M = (G₋ + ηI)⁻¹ G₋ G₊ (G₊ + εI)⁻¹ G₋ (G₋ + ηI)⁻¹
//! ```
//!
//! whose leading eigenvectors `a^r` give coefficients `b^r = (G₋ + ηI)⁻¹ a^r`
//! of the eigenfunctions. Their values at the sample points, `G₋ b^r`, form
//! the predictor passed to the edge statistic.

use rayon::prelude::*;

use crate::data::SampleMatrix;
use crate::error::{Error, Result};
use crate::kernel::{block_rows, gram_auto, GramMatrix, VariableBlock};
use crate::numerics::{eigh, reg_inverse_from, EigenDecomp, Matrix, SymMatrix};

/// Eigenvalues of `M` at or below this fraction of the largest are unusable.
pub const RANK_REL_TOL: f64 = 1e-10;

/// Predictor dimension and Gram-level regularizers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GsirConfig {
    pub d: usize,
    /// `η`, added to `G₋`.
    pub eps_minus: f64,
    /// `ε`, added to `G₊`.
    pub eps_pair: f64,
}

impl GsirConfig {
    pub fn new(d: usize, eps_minus: f64, eps_pair: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidConfig("predictor dimension must be positive".into()));
        }
        for (name, v) in [("eps_minus", eps_minus), ("eps_pair", eps_pair)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self {
            d,
            eps_minus,
            eps_pair,
        })
    }
}

/// Sufficient predictor of one pair evaluated at the sample points.
#[derive(Debug, Clone, PartialEq)]
pub struct SufficientPredictor {
    /// n×d; row `a` is the predictor of observation `a`, columns scaled to
    /// unit variance (divisor n).
    pub values: Matrix,
    /// n×d; column `r` is `b^r`.
    pub coefficients: Matrix,
    /// Divisor applied to column `r` of `G₋·coefficients` to get `values`.
    pub column_scale: Vec<f64>,
    pub pair: (usize, usize),
    /// Leading `d` eigenvalues of `M`, descending.
    pub eigenvalues: Vec<f64>,
}

impl SufficientPredictor {
    pub fn d(&self) -> usize {
        self.values.ncols()
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n())
            .map(|a| (0..self.d()).map(|r| self.values[(a, r)]).collect())
            .collect()
    }
}

/// Bandwidths picked for the two step-one kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictorGammas {
    pub pair: f64,
    pub minus: f64,
}

fn check_dims(g_minus: &GramMatrix, g_pair: &GramMatrix, cfg: &GsirConfig) -> Result<()> {
    if g_minus.n != g_pair.n {
        return Err(Error::InvalidInput(format!(
            "Gram matrices disagree on sample size: {} vs {}",
            g_minus.n, g_pair.n
        )));
    }
    if cfg.d >= g_minus.n.max(1) {
        return Err(Error::InvalidConfig(format!(
            "predictor dimension {} must be below the sample size {}",
            cfg.d, g_minus.n
        )));
    }
    Ok(())
}

struct Parts {
    m: SymMatrix,
    inv_minus: SymMatrix,
}

fn assemble(
    g_minus: &SymMatrix,
    dec_minus: &EigenDecomp,
    g_pair: &SymMatrix,
    dec_pair: &EigenDecomp,
    eps_minus: f64,
    eps_pair: f64,
) -> Result<Parts> {
    let inv_minus = reg_inverse_from(dec_minus, eps_minus)?;
    let inv_pair = reg_inverse_from(dec_pair, eps_pair)?;
    // W = (G₋+ηI)⁻¹G₋ and S = G₊(G₊+εI)⁻¹ are symmetric (commuting factors)
    let w = SymMatrix::symmetrize(inv_minus.as_mat() * g_minus.as_mat());
    let s = SymMatrix::symmetrize(g_pair.as_mat() * inv_pair.as_mat());
    let ws = w.as_mat() * s.as_mat();
    let m = SymMatrix::symmetrize(&ws * w.as_mat().transpose());
    Ok(Parts { m, inv_minus })
}

/// The symmetric matrix whose leading eigenvectors define the predictor.
pub fn gsir_matrix(g_minus: &GramMatrix, g_pair: &GramMatrix, cfg: &GsirConfig) -> Result<SymMatrix> {
    check_dims(g_minus, g_pair, cfg)?;
    let dec_minus = eigh(&g_minus.centered)?;
    let dec_pair = eigh(&g_pair.centered)?;
    Ok(assemble(
        &g_minus.centered,
        &dec_minus,
        &g_pair.centered,
        &dec_pair,
        cfg.eps_minus,
        cfg.eps_pair,
    )?
    .m)
}

/// Extracts the d-dimensional predictor for `pair`.
pub fn extract_predictor(
    g_minus: &GramMatrix,
    g_pair: &GramMatrix,
    cfg: &GsirConfig,
    pair: (usize, usize),
) -> Result<SufficientPredictor> {
    check_dims(g_minus, g_pair, cfg)?;
    let dec_minus = eigh(&g_minus.centered)?;
    let dec_pair = eigh(&g_pair.centered)?;
    extract_with(
        &g_minus.centered,
        &dec_minus,
        &g_pair.centered,
        &dec_pair,
        cfg,
        pair,
    )
}

fn extract_with(
    g_minus: &SymMatrix,
    dec_minus: &EigenDecomp,
    g_pair: &SymMatrix,
    dec_pair: &EigenDecomp,
    cfg: &GsirConfig,
    pair: (usize, usize),
) -> Result<SufficientPredictor> {
    let parts = assemble(g_minus, dec_minus, g_pair, dec_pair, cfg.eps_minus, cfg.eps_pair)?;
    let dec_m = eigh(&parts.m)?;
    let top = dec_m.max_value();
    let available = if top > 0.0 {
        dec_m
            .values
            .iter()
            .take_while(|&&v| v > RANK_REL_TOL * top)
            .count()
    } else {
        0
    };
    if available < cfg.d {
        return Err(Error::RankDeficient {
            available,
            requested: cfg.d,
        });
    }
    let n = g_minus.dim();
    let leading = Matrix::from_fn(n, cfg.d, |a, r| dec_m.vectors[(a, r)]);
    let coefficients = parts.inv_minus.as_mat() * &leading;
    let raw = g_minus.as_mat() * &coefficients;

    let mut column_scale = Vec::with_capacity(cfg.d);
    for r in 0..cfg.d {
        let var = (0..n).map(|a| raw[(a, r)] * raw[(a, r)]).sum::<f64>() / n as f64;
        if !(var > 0.0) {
            return Err(Error::RankDeficient {
                available: r,
                requested: cfg.d,
            });
        }
        column_scale.push(var.sqrt());
    }
    let values = Matrix::from_fn(n, cfg.d, |a, r| raw[(a, r)] / column_scale[r]);
    Ok(SufficientPredictor {
        values,
        coefficients,
        column_scale,
        pair,
        eigenvalues: dec_m.values[..cfg.d].to_vec(),
    })
}

/// Scales a relative regularizer by the largest eigenvalue of its Gram matrix.
pub fn spectral_regularizer(relative: f64, decomp: &EigenDecomp) -> f64 {
    let top = decomp.max_value();
    if top > 0.0 {
        relative * top
    } else {
        relative
    }
}

/// Step-one Gram matrices of a pair, with their bandwidths.
pub struct PairGrams {
    pub minus: GramMatrix,
    pub pair: GramMatrix,
    pub gammas: PredictorGammas,
}

pub fn pair_grams(data: &SampleMatrix, (i, j): (usize, usize)) -> Result<PairGrams> {
    let p = data.p();
    let complement = VariableBlock::complement(i, j, p)?;
    if complement.columns().is_empty() {
        return Err(Error::InvalidInput(
            "at least 3 variables are needed to condition on the rest".into(),
        ));
    }
    let (minus, gamma_minus) = gram_auto(&block_rows(data, &complement)?)?;
    let (pair, gamma_pair) = gram_auto(&block_rows(data, &VariableBlock::pair(i, j, p)?)?)?;
    Ok(PairGrams {
        minus,
        pair,
        gammas: PredictorGammas {
            pair: gamma_pair,
            minus: gamma_minus,
        },
    })
}

/// Pipeline entry: builds both Gram matrices with heuristic bandwidths and
/// extracts the predictor. `eps_minus` and `eps_pair` are relative to the
/// largest eigenvalue of the Gram matrix they regularize.
pub fn pair_predictor(
    data: &SampleMatrix,
    pair: (usize, usize),
    d: usize,
    eps_minus: f64,
    eps_pair: f64,
) -> Result<(SufficientPredictor, PredictorGammas)> {
    let grams = pair_grams(data, pair)?;
    let dec_minus = eigh(&grams.minus.centered)?;
    let dec_pair = eigh(&grams.pair.centered)?;
    let cfg = GsirConfig::new(
        d,
        spectral_regularizer(eps_minus, &dec_minus),
        spectral_regularizer(eps_pair, &dec_pair),
    )?;
    check_dims(&grams.minus, &grams.pair, &cfg)?;
    let predictor = extract_with(
        &grams.minus.centered,
        &dec_minus,
        &grams.pair.centered,
        &dec_pair,
        &cfg,
        pair,
    )?;
    Ok((predictor, grams.gammas))
}

/// Batch form of [`pair_predictor`]; pairs are processed independently on the
/// current rayon pool and results come back in input order.
pub fn pair_predictors(
    data: &SampleMatrix,
    pairs: &[(usize, usize)],
    d: usize,
    eps_minus: f64,
    eps_pair: f64,
) -> Vec<Result<(SufficientPredictor, PredictorGammas)>> {
    pairs
        .par_iter()
        .map(|&pair| pair_predictor(data, pair, d, eps_minus, eps_pair))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{gram, KernelConfig};
    use crate::numerics::fro_norm;
    use crate::simgen;

    fn random_grams(n: usize, seed: u64) -> (GramMatrix, GramMatrix) {
        let (data, _) = simgen::gen_model_1(n, seed);
        let g = pair_grams(&data, (3, 0)).unwrap();
        (g.minus, g.pair)
    }

    #[test]
    fn zero_complement_gives_zero_matrix() {
        let (_, g_pair) = random_grams(6, 1);
        let g_minus = gram(&vec![vec![1.0]; 6], KernelConfig::new(1.0).unwrap()).unwrap();
        let cfg = GsirConfig::new(1, 0.1, 0.1).unwrap();
        let m = gsir_matrix(&g_minus, &g_pair, &cfg).unwrap();
        assert_eq!(fro_norm(m.as_mat()), 0.0);
        assert_eq!(
            extract_predictor(&g_minus, &g_pair, &cfg, (0, 1)),
            Err(Error::RankDeficient {
                available: 0,
                requested: 1
            })
        );
    }

    #[test]
    fn matrix_matches_solve_based_product() {
        let (g_minus, g_pair) = random_grams(4, 7);
        let cfg = GsirConfig::new(1, 0.05, 0.2).unwrap();
        let m = gsir_matrix(&g_minus, &g_pair, &cfg).unwrap();

        let gm = g_minus.centered.as_mat();
        let gp = g_pair.centered.as_mat();
        let eye = Matrix::identity(4, 4);
        let lu_minus = (gm + &eye * cfg.eps_minus).partial_piv_lu();
        let lu_pair = (gp + &eye * cfg.eps_pair).partial_piv_lu();
        use faer::linalg::solvers::Solve;
        // (G₋+ηI)⁻¹ G₋ G₊ (G₊+εI)⁻¹ G₋ (G₋+ηI)⁻¹, right factors via transposed solves
        let right = lu_minus.solve(&eye);
        let inner = lu_pair.solve(gm * &right);
        let oracle = lu_minus.solve(gm * gp * inner);
        assert!(fro_norm(&(m.as_mat() - &oracle)) < 1e-8 * fro_norm(&oracle).max(1.0));
    }

    #[test]
    fn matrix_is_psd() {
        for seed in 0..5 {
            let (g_minus, g_pair) = random_grams(30, seed);
            let cfg = GsirConfig::new(2, 0.1, 0.1).unwrap();
            let e = eigh(&gsir_matrix(&g_minus, &g_pair, &cfg).unwrap()).unwrap();
            assert!(e.min_value() >= -1e-8 * e.max_value());
        }
    }

    #[test]
    fn predictor_invariants() {
        let (g_minus, g_pair) = random_grams(40, 3);
        let cfg = GsirConfig::new(2, 0.5, 0.5).unwrap();
        let u = extract_predictor(&g_minus, &g_pair, &cfg, (3, 0)).unwrap();
        assert_eq!((u.n(), u.d()), (40, 2));
        assert!(u.eigenvalues[0] >= u.eigenvalues[1] && u.eigenvalues[1] >= 0.0);
        let raw = g_minus.centered.as_mat() * &u.coefficients;
        for r in 0..2 {
            let mean: f64 = (0..40).map(|a| u.values[(a, r)]).sum::<f64>() / 40.0;
            let var: f64 = (0..40).map(|a| u.values[(a, r)].powi(2)).sum::<f64>() / 40.0;
            assert!(mean.abs() < 1e-8);
            assert!((var - 1.0).abs() < 1e-8);
            for a in 0..40 {
                assert_eq!(u.values[(a, r)], raw[(a, r)] / u.column_scale[r]);
            }
        }
    }

    #[test]
    fn pair_order_does_not_change_eigenvalues() {
        let (data, _) = simgen::gen_model_1(50, 11);
        let (u, _) = pair_predictor(&data, (3, 1), 2, 0.1, 0.1).unwrap();
        let (v, _) = pair_predictor(&data, (1, 3), 2, 0.1, 0.1).unwrap();
        assert_eq!(u.eigenvalues, v.eigenvalues);
    }

    #[test]
    fn deterministic_and_batch_consistent() {
        let (data, _) = simgen::gen_model_1(40, 5);
        let pairs = [(1, 0), (4, 2), (3, 1)];
        let batch = pair_predictors(&data, &pairs, 2, 0.1, 0.1);
        for (k, &pair) in pairs.iter().enumerate() {
            let single = pair_predictor(&data, pair, 2, 0.1, 0.1).unwrap();
            assert_eq!(batch[k].as_ref().unwrap(), &single);
        }
    }

    #[test]
    fn permutation_equivariance() {
        let (data, _) = simgen::gen_model_1(30, 8);
        let order: Vec<usize> = (0..30).map(|a| (a * 7) % 30).collect();
        let permuted = data.permute_rows(&order);
        let (u, _) = pair_predictor(&data, (2, 0), 2, 0.1, 0.1).unwrap();
        let (v, _) = pair_predictor(&permuted, (2, 0), 2, 0.1, 0.1).unwrap();
        for r in 0..2 {
            let same = (0..30).all(|a| (v.values[(a, r)] - u.values[(order[a], r)]).abs() < 1e-6);
            let flipped = (0..30).all(|a| (v.values[(a, r)] + u.values[(order[a], r)]).abs() < 1e-6);
            assert!(same || flipped, "column {r} not equivariant");
        }
    }

    #[test]
    fn rejects_oversized_dimension() {
        let (g_minus, g_pair) = random_grams(4, 2);
        let cfg = GsirConfig::new(4, 0.1, 0.1).unwrap();
        assert!(matches!(
            gsir_matrix(&g_minus, &g_pair, &cfg),
            Err(Error::InvalidConfig(_))
        ));
        assert!(GsirConfig::new(0, 0.1, 0.1).is_err());
        assert!(GsirConfig::new(1, 0.0, 0.1).is_err());
    }
}
