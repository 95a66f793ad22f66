//! Grid selection of the regularizers and of the edge threshold by
//! generalized cross validation.
//!
//! Every regularizer here is relative: the value actually added to a Gram
//! matrix `G` is `ε·λ_max(G)`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::SampleMatrix;
use crate::error::{Error, Result};
use crate::graph::EdgeScoreMatrix;
use crate::kernel::{block_rows, gram_auto, VariableBlock};
use crate::numerics::{eigh, fro_norm, EigenDecomp, SymMatrix};

pub const DEFAULT_EPS_GRID: [f64; 6] = [10.0, 1.0, 1e-1, 1e-2, 1e-3, 1e-4];
pub const DEFAULT_RHO_GRID: [f64; 6] = [0.02, 0.03, 0.04, 0.05, 0.06, 0.07];
/// Used whenever a criterion cannot be evaluated.
pub const FALLBACK_REGULARIZER: f64 = 1e-2;
/// Threshold used when the threshold criterion cannot be evaluated.
pub const FALLBACK_RHO: f64 = 0.04;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcvGrid {
    eps_values: Vec<f64>,
    rho_values: Vec<f64>,
}

impl Default for GcvGrid {
    fn default() -> Self {
        Self {
            eps_values: DEFAULT_EPS_GRID.to_vec(),
            rho_values: DEFAULT_RHO_GRID.to_vec(),
        }
    }
}

impl GcvGrid {
    pub fn new(eps_values: Vec<f64>, rho_values: Vec<f64>) -> Result<Self> {
        check_grid("eps", &eps_values, |a, b| a > b, "descending")?;
        check_grid("rho", &rho_values, |a, b| a < b, "ascending")?;
        Ok(Self {
            eps_values,
            rho_values,
        })
    }

    pub fn eps_values(&self) -> &[f64] {
        &self.eps_values
    }

    pub fn rho_values(&self) -> &[f64] {
        &self.rho_values
    }
}

fn check_grid(name: &str, values: &[f64], ordered: fn(f64, f64) -> bool, order: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidConfig(format!("{name} grid is empty")));
    }
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::InvalidConfig(format!(
            "{name} grid values must be positive and finite, got {v}"
        )));
    }
    if values.windows(2).any(|w| !ordered(w[0], w[1])) {
        return Err(Error::InvalidConfig(format!(
            "{name} grid must be strictly {order}"
        )));
    }
    Ok(())
}

/// Relative regularizers of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regularizers {
    /// On the pair kernel `G_{X^{(i,j)}}`.
    pub pair: f64,
    /// On the complement kernel `G_{X^{-(i,j)}}`.
    pub minus: f64,
    /// On the conditioning kernel.
    pub u: f64,
}

impl Default for Regularizers {
    fn default() -> Self {
        Self::uniform(FALLBACK_REGULARIZER)
    }
}

impl Regularizers {
    pub fn new(pair: f64, minus: f64, u: f64) -> Result<Self> {
        for (name, v) in [("pair", pair), ("minus", minus), ("u", u)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "regularizer '{name}' must be positive, got {v}"
                )));
            }
        }
        Ok(Self { pair, minus, u })
    }

    pub fn uniform(eps: f64) -> Self {
        Self {
            pair: eps,
            minus: eps,
            u: eps,
        }
    }

    /// Componentwise arithmetic mean.
    pub fn mean(all: &[Regularizers]) -> Option<Self> {
        if all.is_empty() {
            return None;
        }
        let k = all.len() as f64;
        Some(Self {
            pair: all.iter().map(|r| r.pair).sum::<f64>() / k,
            minus: all.iter().map(|r| r.minus).sum::<f64>() / k,
            u: all.iter().map(|r| r.u).sum::<f64>() / k,
        })
    }
}

/// Criterion values of regressing `g1` on `g2` at each relative
/// regularizer; `+∞` where the denominator trace is not positive.
///
/// With `g2 = V diag(λ) Vᵀ` the hat matrix is `V diag(h) Vᵀ`,
/// `h_k = λ_k / (λ_k + ε λ_max)`, so one decomposition serves the whole grid.
pub fn gcv_curve_from(g1: &SymMatrix, g2: &EigenDecomp, grid: &[f64]) -> Vec<f64> {
    let n = g2.dim();
    let top = g2.max_value();
    if n == 0 || top <= 0.0 {
        return vec![f64::INFINITY; grid.len()];
    }
    // rows of Vᵀ G₁ and their squared norms
    let proj = g2.vectors.transpose() * g1.as_mat();
    let row_sq: Vec<f64> = (0..n)
        .map(|k| (0..n).map(|c| proj[(k, c)] * proj[(k, c)]).sum())
        .collect();
    grid.iter()
        .map(|&eps| {
            let shift = eps * top;
            let mut resid = 0.0;
            let mut trace = 0.0;
            for (k, &lam) in g2.values.iter().enumerate() {
                let lam = lam.max(0.0);
                let keep = 1.0 - lam / (lam + shift);
                resid += keep * keep * row_sq[k];
                trace += keep;
            }
            let denom = trace / n as f64;
            if denom > 0.0 {
                resid.sqrt() / denom
            } else {
                f64::INFINITY
            }
        })
        .collect()
}

pub fn gcv_eps_curve(g1: &SymMatrix, g2: &SymMatrix, grid: &[f64]) -> Result<Vec<f64>> {
    if g1.dim() != g2.dim() {
        return Err(Error::InvalidInput(format!(
            "GCV matrices disagree on dimension: {} vs {}",
            g1.dim(),
            g2.dim()
        )));
    }
    Ok(gcv_curve_from(g1, &eigh(g2)?, grid))
}

/// Minimizing grid value of one assignment.
pub fn gcv_eps(g1: &SymMatrix, g2: &SymMatrix, grid: &[f64]) -> Result<f64> {
    argmin_eps(&gcv_eps_curve(g1, g2, grid)?, grid)
}

/// Minimizer of a (possibly pair-summed) criterion; the smallest ε wins ties.
pub fn argmin_eps(curve: &[f64], grid: &[f64]) -> Result<f64> {
    argmin_by(curve, grid, |candidate, best| candidate < best)
}

fn argmin_by(curve: &[f64], grid: &[f64], prefer_on_tie: fn(f64, f64) -> bool) -> Result<f64> {
    let mut best: Option<(f64, f64)> = None;
    for (&value, &x) in curve.iter().zip(grid) {
        if !value.is_finite() {
            continue;
        }
        best = match best {
            None => Some((value, x)),
            Some((bv, bx)) if value < bv || (value == bv && prefer_on_tie(x, bx)) => {
                Some((value, x))
            }
            keep => keep,
        };
    }
    best.map(|(_, x)| x).ok_or(Error::GcvDegenerate)
}

/// Elementwise sum of per-pair curves.
pub fn sum_curves<'a>(curves: impl IntoIterator<Item = &'a Vec<f64>>, len: usize) -> Vec<f64> {
    let mut total = vec![0.0; len];
    for curve in curves {
        for (t, v) in total.iter_mut().zip(curve) {
            *t += v;
        }
    }
    total
}

/// Criterion of the threshold grid, one value per `ρ`.
pub fn gcv_rho_curve(
    data: &SampleMatrix,
    scores: &EdgeScoreMatrix,
    grid: &[f64],
    eps: f64,
) -> Result<Vec<f64>> {
    let p = data.p();
    if scores.p() != p {
        return Err(Error::InvalidInput(format!(
            "score matrix has {} nodes, data has {p} columns",
            scores.p()
        )));
    }
    if grid.is_empty() {
        return Err(Error::InvalidConfig("rho grid is empty".into()));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "neighborhood regularizer must be positive, got {eps}"
        )));
    }

    let neighborhoods: Vec<Vec<Vec<usize>>> = grid
        .iter()
        .map(|&rho| {
            (0..p)
                .map(|i| (0..p).filter(|&j| j != i && scores.get(i, j) > rho).collect())
                .collect()
        })
        .collect();
    if neighborhoods.iter().flatten().all(Vec::is_empty) {
        return Err(Error::GcvDegenerate);
    }

    let node_grams: Vec<SymMatrix> = (0..p)
        .into_par_iter()
        .map(|i| {
            let rows = block_rows(data, &VariableBlock::single(i, p)?)?;
            Ok(match gram_auto(&rows) {
                Ok((g, _)) => g.centered,
                Err(Error::DegenerateSample) => SymMatrix::zeros(data.n()),
                Err(e) => return Err(e),
            })
        })
        .collect::<Result<_>>()?;

    let mut distinct: BTreeMap<(usize, Vec<usize>), ()> = BTreeMap::new();
    for per_rho in &neighborhoods {
        for (i, nb) in per_rho.iter().enumerate() {
            if !nb.is_empty() {
                distinct.insert((i, nb.clone()), ());
            }
        }
    }
    let keys: Vec<(usize, Vec<usize>)> = distinct.into_keys().collect();
    let terms: Vec<f64> = keys
        .par_iter()
        .map(|(i, nb)| neighborhood_term(data, *i, &node_grams[*i], nb, eps))
        .collect::<Result<_>>()?;
    let lookup: BTreeMap<&(usize, Vec<usize>), f64> = keys.iter().zip(terms).collect();

    Ok(neighborhoods
        .into_iter()
        .map(|per_rho| {
            per_rho
                .into_iter()
                .enumerate()
                .map(|(i, nb)| {
                    if nb.is_empty() {
                        fro_norm(node_grams[i].as_mat())
                    } else {
                        lookup[&(i, nb)]
                    }
                })
                .sum()
        })
        .collect())
}

fn neighborhood_term(
    data: &SampleMatrix,
    node: usize,
    g_node: &SymMatrix,
    nb: &[usize],
    eps: f64,
) -> Result<f64> {
    let rows = block_rows(data, &VariableBlock::neighborhood(node, nb.to_vec(), data.p())?)?;
    let curve = match gram_auto(&rows) {
        Ok((g, _)) => gcv_curve_from(g_node, &eigh(&g.centered)?, &[eps])[0],
        // constant neighborhood: zero kernel, zero hat matrix
        Err(Error::DegenerateSample) => fro_norm(g_node.as_mat()),
        Err(e) => return Err(e),
    };
    Ok(if curve.is_finite() {
        curve
    } else {
        fro_norm(g_node.as_mat())
    })
}

/// Threshold minimizing the neighborhood-regression criterion; the smallest
/// `ρ` wins ties.
pub fn gcv_rho(data: &SampleMatrix, scores: &EdgeScoreMatrix, grid: &[f64], eps: f64) -> Result<f64> {
    let curve = gcv_rho_curve(data, scores, grid, eps)?;
    argmin_by(&curve, grid, |candidate, best| candidate < best)
}
