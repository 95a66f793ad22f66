//! Edge statistic: Hilbert–Schmidt norm of the estimated conjoined
//! conditional covariance operator of `X^i` and `X^j` given a conditioning
//! block `W` (the sufficient predictor, or the raw complement for the naive
//! variant).
//!
//! With centered Gram matrices `A` on `(X^i, W)`, `B` on `(X^j, W)` and `G_W`
//! on `W`, the norm is
//!
//! ```text
//! (1/n)·‖A^{1/2} B^{1/2} − A^{1/2} G_W (G_W + εQ)^† B^{1/2}‖_F
//! ```
//!
//! The `1/n` makes the value the Hilbert–Schmidt norm of the sample operator
//! itself (covariances are empirical means), so scores stay on a fixed scale
//! as `n` grows.

use serde::{Deserialize, Serialize};

use crate::data::SampleMatrix;
use crate::error::{Error, Result};
use crate::gsir::{self, spectral_regularizer, SufficientPredictor};
use crate::kernel::{block_rows, gram_auto, join_rows, GramMatrix, VariableBlock};
use crate::numerics::{eigh, EigenDecomp};
use crate::tuning::Regularizers;

/// Which conditioning block the edge statistic uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Condition on the sufficient predictor.
    Sgm,
    /// Condition on all remaining variables.
    Naive,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Sgm => "sgm",
            Method::Naive => "naive",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sgm" => Ok(Method::Sgm),
            "naive" => Ok(Method::Naive),
            other => Err(Error::InvalidConfig(format!("unknown method '{other}'"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct CccoInput {
    /// Kernel on `(X^i, W)`.
    pub g_iu: GramMatrix,
    /// Kernel on `(X^j, W)`.
    pub g_ju: GramMatrix,
    /// Kernel on `W`.
    pub g_u: GramMatrix,
    /// Gram-level regularizer added as `ε·Q`.
    pub eps_u: f64,
}

impl CccoInput {
    fn validate(&self) -> Result<usize> {
        let n = self.g_u.n;
        if self.g_iu.n != n || self.g_ju.n != n {
            return Err(Error::InvalidInput(format!(
                "Gram matrices disagree on sample size: {}, {}, {}",
                self.g_iu.n, self.g_ju.n, n
            )));
        }
        if !(self.eps_u.is_finite() && self.eps_u > 0.0) {
            return Err(Error::InvalidInput(format!(
                "conditioning regularizer must be positive, got {}",
                self.eps_u
            )));
        }
        Ok(n)
    }
}

/// Edge score of pair `(i, j)`, stored with `i > j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeScore {
    pub pair: (usize, usize),
    pub value: f64,
}

impl EdgeScore {
    pub fn new(i: usize, j: usize, value: f64) -> Self {
        Self {
            pair: (i.max(j), i.min(j)),
            value,
        }
    }
}

/// Hilbert–Schmidt norm of the estimated conjoined conditional covariance
/// operator.
pub fn ccco_norm(input: &CccoInput) -> Result<f64> {
    input.validate()?;
    ccco_norm_from(input, &eigh(&input.g_u.centered)?)
}

/// Same statistic from a decomposition of the conditioning kernel. With
/// `R = I − G_W (G_W + εQ)^†` the squared norm is `tr(A R B R) / n²`, and
/// `G_W (G_W + εQ)^†` is `Σ λ/(λ+ε) v vᵀ` over the eigenpairs of `G_W`
/// (the constant direction has `λ = 0`).
fn ccco_norm_from(input: &CccoInput, g_u: &EigenDecomp) -> Result<f64> {
    let n = input.validate()?;
    if n == 0 {
        return Ok(0.0);
    }
    let eps = input.eps_u;
    let correction = g_u.map(|v| {
        let v = v.max(0.0);
        v / (v + eps)
    });
    let a = input.g_iu.centered.as_mat();
    let b = input.g_ju.centered.as_mat();
    let ar = a - a * correction.as_mat();
    let br = b - b * correction.as_mat();
    let mut trace = 0.0;
    for c in 0..n {
        for r in 0..n {
            trace += ar[(r, c)] * br[(c, r)];
        }
    }
    let value = trace.max(0.0).sqrt() / n as f64;
    if !value.is_finite() {
        return Err(Error::InvalidInput("edge statistic is not finite".into()));
    }
    Ok(value)
}

/// Bandwidths of the three step-two kernels, plus the step-one ones when the
/// predictor was extracted.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PairGammas {
    pub pair: Option<f64>,
    pub minus: Option<f64>,
    pub iu: f64,
    pub ju: f64,
    pub u: f64,
}

/// Everything computed for one pair.
#[derive(Debug, Clone)]
pub struct PairDetail {
    pub score: EdgeScore,
    pub gammas: PairGammas,
    /// Leading eigenvalues of the predictor problem (empty for naive).
    pub gsir_eigenvalues: Vec<f64>,
    /// Gram-level regularizer actually used in the statistic.
    pub eps_u_effective: f64,
    /// Rows of the conditioning block, one per observation.
    pub conditioning: Vec<Vec<f64>>,
}

fn check_pair(data: &SampleMatrix, i: usize, j: usize) -> Result<()> {
    if data.p() < 3 {
        return Err(Error::InvalidInput(format!(
            "need at least 3 variables, got {}",
            data.p()
        )));
    }
    if data.n() < 4 {
        return Err(Error::InvalidInput(format!(
            "need at least 4 observations, got {}",
            data.n()
        )));
    }
    VariableBlock::pair(i, j, data.p())?;
    Ok(())
}

struct Conditioned {
    value: f64,
    gamma_iu: f64,
    gamma_ju: f64,
    gamma_u: f64,
    eps_u_effective: f64,
}

fn conditioned_score(
    data: &SampleMatrix,
    i: usize,
    j: usize,
    conditioning: &[Vec<f64>],
    eps_u: f64,
) -> Result<Conditioned> {
    let p = data.p();
    let xi = block_rows(data, &VariableBlock::single(i, p)?)?;
    let xj = block_rows(data, &VariableBlock::single(j, p)?)?;
    let (g_iu, gamma_iu) = gram_auto(&join_rows(&xi, conditioning))?;
    let (g_ju, gamma_ju) = gram_auto(&join_rows(&xj, conditioning))?;
    let (g_u, gamma_u) = gram_auto(conditioning)?;
    let decomp = eigh(&g_u.centered)?;
    let eps_u_effective = spectral_regularizer(eps_u, &decomp);
    let input = CccoInput {
        g_iu,
        g_ju,
        g_u,
        eps_u: eps_u_effective,
    };
    let value = ccco_norm_from(&input, &decomp)?;
    Ok(Conditioned {
        value,
        gamma_iu,
        gamma_ju,
        gamma_u,
        eps_u_effective,
    })
}

/// Scores a pair from an already extracted predictor. `eps_u` is relative to
/// the largest eigenvalue of the predictor's Gram matrix.
pub fn score_with_predictor(
    data: &SampleMatrix,
    (i, j): (usize, usize),
    predictor: &SufficientPredictor,
    step_one: gsir::PredictorGammas,
    eps_u: f64,
) -> Result<PairDetail> {
    check_pair(data, i, j)?;
    let conditioning = predictor.rows();
    let c = conditioned_score(data, i, j, &conditioning, eps_u)?;
    Ok(PairDetail {
        score: EdgeScore::new(i, j, c.value),
        gammas: PairGammas {
            pair: Some(step_one.pair),
            minus: Some(step_one.minus),
            iu: c.gamma_iu,
            ju: c.gamma_ju,
            u: c.gamma_u,
        },
        gsir_eigenvalues: predictor.eigenvalues.clone(),
        eps_u_effective: c.eps_u_effective,
        conditioning,
    })
}

/// Full two-step score of pair `(i, j)`: extract the predictor from the
/// remaining variables, then measure conditional dependence given it.
/// Regularizers are relative to the largest eigenvalue of their Gram matrix.
pub fn pair_score_detailed(
    data: &SampleMatrix,
    (i, j): (usize, usize),
    d: usize,
    regs: &Regularizers,
) -> Result<PairDetail> {
    check_pair(data, i, j)?;
    let (predictor, gammas) = gsir::pair_predictor(data, (i, j), d, regs.minus, regs.pair)?;
    score_with_predictor(data, (i, j), &predictor, gammas, regs.u)
}

pub fn pair_score(
    data: &SampleMatrix,
    pair: (usize, usize),
    d: usize,
    regs: &Regularizers,
) -> Result<EdgeScore> {
    pair_score_detailed(data, pair, d, regs).map(|detail| detail.score)
}

/// Same statistic conditioned on the raw complement block.
pub fn naive_pair_score_detailed(
    data: &SampleMatrix,
    (i, j): (usize, usize),
    eps_u: f64,
) -> Result<PairDetail> {
    check_pair(data, i, j)?;
    let conditioning = block_rows(data, &VariableBlock::complement(i, j, data.p())?)?;
    let c = conditioned_score(data, i, j, &conditioning, eps_u)?;
    Ok(PairDetail {
        score: EdgeScore::new(i, j, c.value),
        gammas: PairGammas {
            pair: None,
            minus: None,
            iu: c.gamma_iu,
            ju: c.gamma_ju,
            u: c.gamma_u,
        },
        gsir_eigenvalues: Vec::new(),
        eps_u_effective: c.eps_u_effective,
        conditioning,
    })
}

pub fn naive_pair_score(data: &SampleMatrix, pair: (usize, usize), eps_u: f64) -> Result<EdgeScore> {
    naive_pair_score_detailed(data, pair, eps_u).map(|detail| detail.score)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{gram, KernelConfig};
    use crate::numerics::{centering_projector, fro_norm, psd_sqrt};
    use crate::simgen;

    fn normal_rows(n: usize, seed: u64) -> Vec<Vec<f64>> {
        let (data, _) = simgen::gen_model_1(n, seed);
        (0..n).map(|a| vec![data.get(a, 0), data.get(a, 4)]).collect()
    }

    fn gaussian_gram(rows: &[Vec<f64>]) -> GramMatrix {
        gram_auto(rows).unwrap().0
    }

    #[test]
    fn constant_x_reduces_to_conditioning_kernel() {
        let u = normal_rows(20, 1);
        let g_u = gaussian_gram(&u);
        let stat = |eps: f64| {
            ccco_norm(&CccoInput {
                g_iu: g_u.clone(),
                g_ju: g_u.clone(),
                g_u: g_u.clone(),
                eps_u: eps,
            })
            .unwrap()
        };
        let coarse = stat(1e-1);
        let fine = stat(1e-3);
        assert!(coarse > 0.0 && fine > 0.0);
        assert!(fine < coarse);
    }

    #[test]
    fn zero_grams_score_zero() {
        let zero = gram(&vec![vec![0.5]; 6], KernelConfig::new(1.0).unwrap()).unwrap();
        let v = ccco_norm(&CccoInput {
            g_iu: zero.clone(),
            g_ju: zero.clone(),
            g_u: zero,
            eps_u: 0.1,
        })
        .unwrap();
        assert_eq!(v, 0.0);
        let single = gram(&[vec![1.0]], KernelConfig::new(1.0).unwrap()).unwrap();
        let v = ccco_norm(&CccoInput {
            g_iu: single.clone(),
            g_ju: single.clone(),
            g_u: single,
            eps_u: 0.1,
        })
        .unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn matches_square_root_form() {
        let (data, _) = simgen::gen_model_2(30, 2);
        let rows = |k: usize| -> Vec<Vec<f64>> { (0..30).map(|a| vec![data.get(a, k)]).collect() };
        let u: Vec<Vec<f64>> = (0..30).map(|a| vec![data.get(a, 3), data.get(a, 4)]).collect();
        let g_iu = gaussian_gram(&join_rows(&rows(0), &u));
        let g_ju = gaussian_gram(&join_rows(&rows(1), &u));
        let g_u = gaussian_gram(&u);
        for eps in [1e-3, 0.05, 2.0] {
            let a = psd_sqrt(&g_iu.centered).unwrap();
            let b = psd_sqrt(&g_ju.centered).unwrap();
            let shifted = g_u.centered.add_scaled(eps, &centering_projector(30));
            let pinv = crate::numerics::pseudo_inverse(&shifted, crate::numerics::PINV_REL_TOL).unwrap();
            let corr = g_u.centered.as_mat() * pinv.as_mat();
            let direct = fro_norm(&(a.as_mat() * b.as_mat() - a.as_mat() * &corr * b.as_mat())) / 30.0;
            let v = ccco_norm(&CccoInput {
                g_iu: g_iu.clone(),
                g_ju: g_ju.clone(),
                g_u: g_u.clone(),
                eps_u: eps,
            })
            .unwrap();
            assert!((v - direct).abs() <= 1e-9 * direct.max(1e-12), "{v} vs {direct}");
        }
    }

    #[test]
    fn huge_regularizer_leaves_cross_term() {
        let (data, _) = simgen::gen_model_1(25, 4);
        let u: Vec<Vec<f64>> = (0..25).map(|a| vec![data.get(a, 4)]).collect();
        let xi: Vec<Vec<f64>> = (0..25).map(|a| vec![data.get(a, 0)]).collect();
        let xj: Vec<Vec<f64>> = (0..25).map(|a| vec![data.get(a, 2)]).collect();
        let g_iu = gaussian_gram(&join_rows(&xi, &u));
        let g_ju = gaussian_gram(&join_rows(&xj, &u));
        let g_u = gaussian_gram(&u);
        let a = psd_sqrt(&g_iu.centered).unwrap();
        let b = psd_sqrt(&g_ju.centered).unwrap();
        let direct = fro_norm(&(a.as_mat() * b.as_mat())) / 25.0;
        let v = ccco_norm(&CccoInput {
            g_iu,
            g_ju,
            g_u,
            eps_u: 1e6,
        })
        .unwrap();
        assert!((v - direct).abs() / direct < 1e-3);
    }

    #[test]
    fn swapping_blocks_is_symmetric() {
        let (data, _) = simgen::gen_model_1(30, 2);
        let u: Vec<Vec<f64>> = (0..30).map(|a| vec![data.get(a, 3)]).collect();
        let xi: Vec<Vec<f64>> = (0..30).map(|a| vec![data.get(a, 0)]).collect();
        let xj: Vec<Vec<f64>> = (0..30).map(|a| vec![data.get(a, 1)]).collect();
        let g_iu = gaussian_gram(&join_rows(&xi, &u));
        let g_ju = gaussian_gram(&join_rows(&xj, &u));
        let g_u = gaussian_gram(&u);
        let forward = ccco_norm(&CccoInput {
            g_iu: g_iu.clone(),
            g_ju: g_ju.clone(),
            g_u: g_u.clone(),
            eps_u: 0.05,
        })
        .unwrap();
        let backward = ccco_norm(&CccoInput {
            g_iu: g_ju,
            g_ju: g_iu,
            g_u,
            eps_u: 0.05,
        })
        .unwrap();
        assert!((forward - backward).abs() < 1e-10);
    }

    #[test]
    fn pair_scores_are_symmetric_and_permutation_invariant() {
        let (data, _) = simgen::gen_model_2(60, 9);
        let regs = Regularizers::default();
        let a = pair_score(&data, (3, 0), 2, &regs).unwrap();
        let b = pair_score(&data, (0, 3), 2, &regs).unwrap();
        assert_eq!(a.pair, (3, 0));
        assert_eq!(b.pair, (3, 0));
        assert!((a.value - b.value).abs() < 1e-9);

        let order: Vec<usize> = (0..60).rev().collect();
        let c = pair_score(&data.permute_rows(&order), (3, 0), 2, &regs).unwrap();
        assert!((a.value - c.value).abs() < 1e-10);
    }

    #[test]
    fn naive_and_sgm_are_finite_for_three_variables() {
        let (full, _) = simgen::gen_model_1(40, 3);
        let data = full.permute_columns(&[0, 2, 4]);
        for pair in [(1, 0), (2, 0), (2, 1)] {
            let s = pair_score(&data, pair, 2, &Regularizers::default()).unwrap();
            let n = naive_pair_score(&data, pair, 1e-2).unwrap();
            assert!(s.value.is_finite() && s.value >= 0.0);
            assert!(n.value.is_finite() && n.value >= 0.0);
        }
    }

    #[test]
    fn constant_complement_is_degenerate() {
        let rows: Vec<Vec<f64>> = (0..10).map(|a| vec![a as f64, (a * a) as f64 % 7.0, 2.0]).collect();
        let data = SampleMatrix::from_rows(rows).unwrap();
        assert_eq!(naive_pair_score(&data, (1, 0), 1e-2), Err(Error::DegenerateSample));
        assert_eq!(
            pair_score(&data, (1, 0), 2, &Regularizers::default()),
            Err(Error::DegenerateSample)
        );
    }

    #[test]
    fn rejects_small_inputs() {
        let data = SampleMatrix::from_rows(vec![vec![1.0, 2.0, 3.0]; 3]).unwrap();
        assert!(matches!(
            naive_pair_score(&data, (1, 0), 1e-2),
            Err(Error::InvalidInput(_))
        ));
        let two = SampleMatrix::from_rows(vec![vec![1.0, 2.0]; 6]).unwrap();
        assert!(matches!(
            pair_score(&two, (1, 0), 1, &Regularizers::default()),
            Err(Error::InvalidInput(_))
        ));
    }
}
