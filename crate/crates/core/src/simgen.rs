//! Simulation models with known graphs.
//!
//! Every generator is a pure function of its parameters and seed. Noise for
//! column `k` comes from ChaCha20 stream `k`, so adding columns never changes
//! the draws of earlier ones.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use faer::linalg::solvers::DenseSolveCore;
use faer::Side;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::SampleMatrix;
use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Stream reserved for structural randomness (hub layout).
const LAYOUT_STREAM: u64 = u64::MAX;

/// True edge set; pairs are stored 0-based with `i > j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    pub p: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl GroundTruth {
    pub fn new(p: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b || a >= p || b >= p {
                return Err(Error::InvalidTruth(format!(
                    "edge ({a}, {b}) is not valid for {p} nodes"
                )));
            }
            set.insert((a.max(b), a.min(b)));
        }
        Ok(Self { p, edges: set })
    }

    /// Builds from 1-based labels.
    pub fn from_one_based(p: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if edges.iter().any(|&(a, b)| a == 0 || b == 0) {
            return Err(Error::InvalidTruth("labels are 1-based".into()));
        }
        Self::new(p, edges.iter().map(|&(a, b)| (a - 1, b - 1)))
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.max(j), i.min(j)))
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelTag {
    I,
    II,
    III,
    IV,
    V,
}

impl ModelTag {
    pub fn number(self) -> u8 {
        match self {
            ModelTag::I => 1,
            ModelTag::II => 2,
            ModelTag::III => 3,
            ModelTag::IV => 4,
            ModelTag::V => 5,
        }
    }
}

impl fmt::Display for ModelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

impl FromStr for ModelTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "1" | "I" => Ok(ModelTag::I),
            "2" | "II" => Ok(ModelTag::II),
            "3" | "III" => Ok(ModelTag::III),
            "4" | "IV" => Ok(ModelTag::IV),
            "5" | "V" => Ok(ModelTag::V),
            other => Err(Error::InvalidConfig(format!("unknown model '{other}'"))),
        }
    }
}

/// A fully specified simulation model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimModel {
    pub tag: ModelTag,
    pub p: usize,
    /// Hub count; only used by models III and IV.
    pub n_hubs: usize,
    pub seed: u64,
}

impl SimModel {
    pub fn model_1(seed: u64) -> Self {
        Self { tag: ModelTag::I, p: 5, n_hubs: 0, seed }
    }

    pub fn model_2(seed: u64) -> Self {
        Self { tag: ModelTag::II, p: 6, n_hubs: 0, seed }
    }

    pub fn model_5(seed: u64) -> Self {
        Self { tag: ModelTag::V, p: 20, n_hubs: 0, seed }
    }

    pub fn hub(tag: ModelTag, p: usize, n_hubs: usize, seed: u64) -> Result<Self> {
        if !matches!(tag, ModelTag::III | ModelTag::IV) {
            return Err(Error::InvalidConfig(format!("model {tag} has no hub structure")));
        }
        check_hub_layout(p, n_hubs)?;
        Ok(Self { tag, p, n_hubs, seed })
    }

    /// Full-size hub configuration: 200 nodes, 10 hubs.
    pub fn hub_full_scale(tag: ModelTag, seed: u64) -> Result<Self> {
        Self::hub(tag, 200, 10, seed)
    }

    /// Desk-scale hub configuration: 50 nodes, 5 hubs.
    pub fn hub_desk_scale(tag: ModelTag, seed: u64) -> Result<Self> {
        Self::hub(tag, 50, 5, seed)
    }

    /// Default configuration for a tag; `p` overrides the hub models' size.
    pub fn for_tag(tag: ModelTag, p: Option<usize>, seed: u64) -> Result<Self> {
        match tag {
            ModelTag::I => fixed_p(Self::model_1(seed), p),
            ModelTag::II => fixed_p(Self::model_2(seed), p),
            ModelTag::V => fixed_p(Self::model_5(seed), p),
            ModelTag::III | ModelTag::IV => {
                let p = p.unwrap_or(50);
                let n_hubs = if p == 200 { 10 } else { 5 };
                Self::hub(tag, p, n_hubs, seed)
            }
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn generate(&self, n: usize) -> Result<(SampleMatrix, GroundTruth)> {
        self.generate_with_seed(n, self.seed)
    }

    pub fn generate_with_seed(&self, n: usize, seed: u64) -> Result<(SampleMatrix, GroundTruth)> {
        match self.tag {
            ModelTag::I => Ok(gen_model_1(n, seed)),
            ModelTag::II => Ok(gen_model_2(n, seed)),
            ModelTag::III | ModelTag::IV => gen_hub_model(n, self.p, self.n_hubs, self.tag, seed),
            ModelTag::V => gen_model_5(n, seed),
        }
    }
}

fn fixed_p(model: SimModel, p: Option<usize>) -> Result<SimModel> {
    match p {
        Some(p) if p != model.p => Err(Error::InvalidConfig(format!(
            "model {} has a fixed dimension of {}",
            model.tag, model.p
        ))),
        _ => Ok(model),
    }
}

fn check_hub_layout(p: usize, n_hubs: usize) -> Result<()> {
    if n_hubs == 0 || p % n_hubs != 0 || p / n_hubs < 2 {
        return Err(Error::InvalidConfig(format!(
            "{p} nodes cannot be split into {n_hubs} hub groups of equal size ≥ 2"
        )));
    }
    Ok(())
}

pub fn noise_column(n: usize, seed: u64, column: usize) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(column as u64);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

fn noise(n: usize, p: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..p).map(|k| noise_column(n, seed, k)).collect()
}

fn assemble(columns: Vec<Vec<f64>>, truth: GroundTruth) -> (SampleMatrix, GroundTruth) {
    let data = SampleMatrix::from_columns(&columns).expect("generated columns are rectangular and finite");
    (data, truth)
}

/// Model I: X¹, X², X⁵ noise; X³ = sin(2X¹) + ε₃; X⁴ = (X¹)² + (X²)² + ε₄.
pub fn gen_model_1(n: usize, seed: u64) -> (SampleMatrix, GroundTruth) {
    let e = noise(n, 5, seed);
    let x1 = e[0].clone();
    let x2 = e[1].clone();
    let x3: Vec<f64> = (0..n).map(|a| (2.0 * x1[a]).sin() + e[2][a]).collect();
    let x4: Vec<f64> = (0..n).map(|a| x1[a] * x1[a] + x2[a] * x2[a] + e[3][a]).collect();
    let x5 = e[4].clone();
    let truth = GroundTruth::from_one_based(5, &[(1, 3), (1, 4), (2, 4), (1, 2)]).unwrap();
    assemble(vec![x1, x2, x3, x4, x5], truth)
}

/// Model II: X² = X¹ + ε₂, X⁴ = (X¹ + X³)² + ε₄, X⁵ = cos(2X²X³) + ε₅,
/// X⁶ = X⁴ + ε₆.
pub fn gen_model_2(n: usize, seed: u64) -> (SampleMatrix, GroundTruth) {
    let e = noise(n, 6, seed);
    let x1 = e[0].clone();
    let x2: Vec<f64> = (0..n).map(|a| x1[a] + e[1][a]).collect();
    let x3 = e[2].clone();
    let x4: Vec<f64> = (0..n).map(|a| (x1[a] + x3[a]).powi(2) + e[3][a]).collect();
    let x5: Vec<f64> = (0..n).map(|a| (2.0 * x2[a] * x3[a]).cos() + e[4][a]).collect();
    let x6: Vec<f64> = (0..n).map(|a| x4[a] + e[5][a]).collect();
    let truth = GroundTruth::from_one_based(
        6,
        &[(1, 2), (1, 4), (3, 4), (1, 3), (2, 5), (3, 5), (2, 3), (4, 6)],
    )
    .unwrap();
    assemble(vec![x1, x2, x3, x4, x5, x6], truth)
}

/// Partition of the nodes into hub groups; the first node of each group is
/// its hub.
pub fn hub_groups(p: usize, n_hubs: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    check_hub_layout(p, n_hubs)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(LAYOUT_STREAM);
    let mut nodes: Vec<usize> = (0..p).collect();
    nodes.shuffle(&mut rng);
    Ok(nodes.chunks(p / n_hubs).map(<[usize]>::to_vec).collect())
}

/// Models III and IV on a random hub partition.
///
/// III: `X^i = 1 + |X^h|² + ε_i`; IV: `X^i = sin((X^h)³)·ε_i`, for every
/// non-hub `i` in the group of hub `h`. Hubs are standard normal.
pub fn gen_hub_model(
    n: usize,
    p: usize,
    n_hubs: usize,
    tag: ModelTag,
    seed: u64,
) -> Result<(SampleMatrix, GroundTruth)> {
    if !matches!(tag, ModelTag::III | ModelTag::IV) {
        return Err(Error::InvalidConfig(format!("model {tag} has no hub structure")));
    }
    let groups = hub_groups(p, n_hubs, seed)?;
    let mut columns = noise(n, p, seed);
    let mut edges = Vec::with_capacity(p - n_hubs);
    for group in &groups {
        let hub = group[0];
        let hub_values = columns[hub].clone();
        for &i in &group[1..] {
            let eps = &columns[i];
            let generated: Vec<f64> = match tag {
                ModelTag::III => (0..n).map(|a| 1.0 + hub_values[a].powi(2) + eps[a]).collect(),
                _ => (0..n).map(|a| hub_values[a].powi(3).sin() * eps[a]).collect(),
            };
            columns[i] = generated;
            edges.push((hub, i));
        }
    }
    let truth = GroundTruth::new(p, edges)?;
    Ok(assemble(columns, truth))
}

const MODEL_5_DIAG: [f64; 20] = [
    1.0, 1.0, 1.0, 1.333, 3.010, 3.203, 1.543, 1.270, 1.544, 3.0, 1.0, 1.0, 1.2, 1.0, 1.0, 1.0,
    1.0, 3.0, 2.0, 1.0,
];

/// Nonzero off-diagonal precision entries, 1-based.
const MODEL_5_OFF_DIAG: [(usize, usize, f64); 7] = [
    (3, 5, 1.418),
    (4, 10, -0.744),
    (5, 9, 0.519),
    (5, 10, -0.577),
    (13, 17, 0.287),
    (17, 20, 0.542),
    (14, 15, 0.998),
];

/// The 20×20 precision matrix of Model V.
pub fn model_5_precision() -> Matrix {
    let mut theta = Matrix::from_fn(20, 20, |a, b| if a == b { MODEL_5_DIAG[a] } else { 0.0 });
    for &(a, b, v) in &MODEL_5_OFF_DIAG {
        theta[(a - 1, b - 1)] = v;
        theta[(b - 1, a - 1)] = v;
    }
    theta
}

/// Model V: `X ~ N(0, Θ⁻¹)` with the fixed sparse precision matrix.
pub fn gen_model_5(n: usize, seed: u64) -> Result<(SampleMatrix, GroundTruth)> {
    let theta = model_5_precision();
    let not_pd = |_| Error::InvalidConfig("model V precision matrix is not positive definite".into());
    let sigma = theta.llt(Side::Lower).map_err(not_pd)?.inverse();
    let sigma = Matrix::from_fn(20, 20, |a, b| 0.5 * (sigma[(a, b)] + sigma[(b, a)]));
    let chol = sigma.llt(Side::Lower).map_err(not_pd)?;
    let lower = chol.L();
    let z = noise(n, 20, seed);
    let columns: Vec<Vec<f64>> = (0..20)
        .map(|c| {
            (0..n)
                .map(|a| (0..=c).map(|k| lower[(c, k)] * z[k][a]).sum())
                .collect()
        })
        .collect();
    let edges: Vec<(usize, usize)> = MODEL_5_OFF_DIAG.iter().map(|&(a, b, _)| (a, b)).collect();
    let truth = GroundTruth::from_one_based(20, &edges)?;
    Ok(assemble(columns, truth))
}
