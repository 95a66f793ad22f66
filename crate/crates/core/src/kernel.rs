//! Gaussian radial-basis Gram matrices over variable blocks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::data::SampleMatrix;
use crate::error::{Error, Result};
use crate::numerics::{Matrix, SymMatrix};

/// Above this sample size the bandwidth heuristic subsamples pairs.
pub const EXACT_PAIRS_MAX_N: usize = 2000;
/// Number of random pairs drawn when subsampling.
pub const SUBSAMPLED_PAIRS: usize = 2_000_000;
const SUBSAMPLE_SEED: u64 = 0x5347_4d5f_6761_6d6d;

/// What a set of columns stands for in the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    Single(usize),
    Pair(usize, usize),
    /// All columns except the pair.
    Complement(usize, usize),
    /// Neighbors of a node in an estimated graph.
    Neighborhood(usize),
}

/// Ordered, distinct column indices of a data matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableBlock {
    columns: Vec<usize>,
    kind: BlockKind,
}

impl VariableBlock {
    pub fn single(i: usize, p: usize) -> Result<Self> {
        check_index(i, p)?;
        Ok(Self {
            columns: vec![i],
            kind: BlockKind::Single(i),
        })
    }

    pub fn pair(i: usize, j: usize, p: usize) -> Result<Self> {
        check_pair(i, j, p)?;
        Ok(Self {
            columns: vec![i, j],
            kind: BlockKind::Pair(i, j),
        })
    }

    pub fn complement(i: usize, j: usize, p: usize) -> Result<Self> {
        check_pair(i, j, p)?;
        Ok(Self {
            columns: (0..p).filter(|&c| c != i && c != j).collect(),
            kind: BlockKind::Complement(i, j),
        })
    }

    pub fn neighborhood(node: usize, neighbors: Vec<usize>, p: usize) -> Result<Self> {
        check_index(node, p)?;
        let mut seen = vec![false; p];
        for &c in &neighbors {
            check_index(c, p)?;
            if c == node || seen[c] {
                return Err(Error::InvalidBlock(format!(
                    "neighborhood of {node} repeats or contains column {c}"
                )));
            }
            seen[c] = true;
        }
        Ok(Self {
            columns: neighbors,
            kind: BlockKind::Neighborhood(node),
        })
    }

    pub fn columns(&self) -> &[usize] {
        &self.columns
    }

    pub fn kind(&self) -> BlockKind {
        self.kind
    }
}

fn check_index(i: usize, p: usize) -> Result<()> {
    if i >= p {
        return Err(Error::InvalidBlock(format!(
            "column {i} out of range for {p} columns"
        )));
    }
    Ok(())
}

fn check_pair(i: usize, j: usize, p: usize) -> Result<()> {
    check_index(i, p)?;
    check_index(j, p)?;
    if i == j {
        return Err(Error::InvalidBlock(format!("pair ({i}, {j}) repeats a column")));
    }
    Ok(())
}

/// Gaussian kernel `exp(−γ‖u − v‖²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConfig {
    gamma: f64,
}

impl KernelConfig {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "kernel gamma must be finite and positive, got {gamma}"
            )));
        }
        Ok(Self { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn eval(&self, u: &[f64], v: &[f64]) -> f64 {
        (-self.gamma * sq_dist(u, v)).exp()
    }
}

/// Raw and doubly centered Gram matrices of one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    /// `K`
    pub raw: SymMatrix,
    /// `G = QKQ`
    pub centered: SymMatrix,
    pub n: usize,
}

impl GramMatrix {
    /// Gram matrix whose centered part is `centered` and whose raw part is
    /// unavailable (set equal to it). Used for tests and synthetic inputs.
    pub fn from_centered(centered: SymMatrix) -> Self {
        let n = centered.dim();
        Self {
            raw: centered.clone(),
            centered,
            n,
        }
    }
}

fn sq_dist(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Inverse squared mean pairwise distance:
/// `1/√γ = mean over a<b of ‖s_a − s_b‖`.
///
/// Exact for up to [`EXACT_PAIRS_MAX_N`] rows; above that the mean is taken
/// over [`SUBSAMPLED_PAIRS`] pairs drawn with a fixed seed.
pub fn gamma_heuristic(rows: &[Vec<f64>]) -> Result<f64> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "bandwidth heuristic needs at least 2 rows, got {n}"
        )));
    }
    let mean = if n <= EXACT_PAIRS_MAX_N {
        let mut total = 0.0;
        for a in 0..n {
            for b in (a + 1)..n {
                total += sq_dist(&rows[a], &rows[b]).sqrt();
            }
        }
        total / (n * (n - 1) / 2) as f64
    } else {
        let mut rng = ChaCha20Rng::seed_from_u64(SUBSAMPLE_SEED);
        let mut total = 0.0;
        for _ in 0..SUBSAMPLED_PAIRS {
            let a = rng.random_range(0..n);
            let mut b = rng.random_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            total += sq_dist(&rows[a], &rows[b]).sqrt();
        }
        total / SUBSAMPLED_PAIRS as f64
    };
    if !mean.is_finite() {
        return Err(Error::InvalidInput("non-finite pairwise distance".into()));
    }
    if mean <= 0.0 {
        return Err(Error::DegenerateSample);
    }
    Ok(1.0 / (mean * mean))
}

/// Builds `K_ab = exp(−γ‖s_a − s_b‖²)` and `G = QKQ`.
pub fn gram(rows: &[Vec<f64>], cfg: KernelConfig) -> Result<GramMatrix> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::InvalidInput("Gram matrix of an empty sample".into()));
    }
    let dim = rows[0].len();
    if rows.iter().any(|r| r.len() != dim) {
        return Err(Error::InvalidInput("rows have unequal lengths".into()));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite value in kernel input".into()));
    }
    let mut k = Matrix::zeros(n, n);
    for a in 0..n {
        k[(a, a)] = 1.0;
        for b in (a + 1)..n {
            let v = cfg.eval(&rows[a], &rows[b]);
            k[(a, b)] = v;
            k[(b, a)] = v;
        }
    }
    let centered = double_center(&k);
    Ok(GramMatrix {
        raw: SymMatrix::symmetrize(k),
        centered: SymMatrix::symmetrize(centered),
        n,
    })
}

/// Gram matrix with the bandwidth picked by [`gamma_heuristic`].
pub fn gram_auto(rows: &[Vec<f64>]) -> Result<(GramMatrix, f64)> {
    let gamma = gamma_heuristic(rows)?;
    Ok((gram(rows, KernelConfig::new(gamma)?)?, gamma))
}

/// `QKQ` entrywise: `K_ab − r_a − r_b + m`.
fn double_center(k: &Matrix) -> Matrix {
    let n = k.nrows();
    let nf = n as f64;
    let row_means: Vec<f64> = (0..n)
        .map(|a| (0..n).map(|b| k[(a, b)]).sum::<f64>() / nf)
        .collect();
    let grand = row_means.iter().sum::<f64>() / nf;
    Matrix::from_fn(n, n, |a, b| k[(a, b)] - row_means[a] - row_means[b] + grand)
}

/// Restricts each observation to the block's columns, in sample order.
pub fn block_rows(data: &SampleMatrix, block: &VariableBlock) -> Result<Vec<Vec<f64>>> {
    if let Some(&c) = block.columns().iter().find(|&&c| c >= data.p()) {
        return Err(Error::InvalidBlock(format!(
            "column {c} out of range for {} columns",
            data.p()
        )));
    }
    Ok((0..data.n())
        .map(|a| block.columns().iter().map(|&c| data.get(a, c)).collect())
        .collect())
}

/// Concatenates rows side by side: `(left_a, right_a)`.
pub fn join_rows(left: &[Vec<f64>], right: &[Vec<f64>]) -> Vec<Vec<f64>> {
    left.iter()
        .zip(right)
        .map(|(l, r)| l.iter().chain(r).copied().collect())
        .collect()
}
