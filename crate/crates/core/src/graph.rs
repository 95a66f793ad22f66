//! All-pairs scoring, regularizer tuning and thresholding into a graph.

use std::collections::{BTreeMap, BTreeSet};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ccco::{
    naive_pair_score_detailed, pair_score_detailed, score_with_predictor, EdgeScore, Method,
    PairDetail, PairGammas,
};
use crate::data::SampleMatrix;
use crate::error::{Error, Result};
use crate::gsir::{pair_grams, pair_predictor, PredictorGammas, SufficientPredictor};
use crate::kernel::{block_rows, gram_auto, join_rows, VariableBlock};
use crate::numerics::{eigh, Matrix};
use crate::tuning::{
    argmin_eps, gcv_curve_from, gcv_rho, sum_curves, GcvGrid, Regularizers, FALLBACK_REGULARIZER,
    FALLBACK_RHO,
};

/// Symmetric p×p matrix of edge scores with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeScoreMatrix {
    scores: Matrix,
}

impl EdgeScoreMatrix {
    pub fn new(scores: Matrix) -> Result<Self> {
        let p = scores.nrows();
        if scores.ncols() != p {
            return Err(Error::InvalidInput(format!(
                "score matrix must be square, got {}x{}",
                p,
                scores.ncols()
            )));
        }
        for i in 0..p {
            if scores[(i, i)] != 0.0 {
                return Err(Error::InvalidInput(format!("nonzero diagonal score at {i}")));
            }
            for j in 0..i {
                let v = scores[(i, j)];
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "score ({i}, {j}) must be finite and nonnegative, got {v}"
                    )));
                }
                if v != scores[(j, i)] {
                    return Err(Error::InvalidInput(format!("score matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { scores })
    }

    pub fn from_pairs(p: usize, pairs: &[EdgeScore]) -> Result<Self> {
        let mut m = Matrix::zeros(p, p);
        for s in pairs {
            let (i, j) = s.pair;
            if i >= p || i == j {
                return Err(Error::InvalidInput(format!("invalid pair ({i}, {j}) for p = {p}")));
            }
            m[(i, j)] = s.value;
            m[(j, i)] = s.value;
        }
        Self::new(m)
    }

    pub fn p(&self) -> usize {
        self.scores.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.scores[(i, j)]
    }

    pub fn as_mat(&self) -> &Matrix {
        &self.scores
    }

    /// Scores of all pairs `i > j`, ordered by `i` then `j`.
    pub fn pairs(&self) -> Vec<EdgeScore> {
        all_pairs(self.p())
            .into_iter()
            .map(|(i, j)| EdgeScore::new(i, j, self.scores[(i, j)]))
            .collect()
    }
}

/// Every pair `(i, j)` with `i > j`, ordered by `i` then `j`.
pub fn all_pairs(p: usize) -> Vec<(usize, usize)> {
    (0..p).flat_map(|i| (0..i).map(move |j| (i, j))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailurePolicy {
    /// A pair that cannot be scored gets the largest finite score.
    KeepEdge,
    /// A pair that cannot be scored gets zero.
    DropEdge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EpsSetting {
    Auto,
    Fixed(Regularizers),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RhoSetting {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub method: Method,
    /// Dimension of every sufficient predictor.
    pub d: usize,
    pub eps: EpsSetting,
    pub rho: RhoSetting,
    pub grid: GcvGrid,
    pub failure_policy: FailurePolicy,
    pub workers: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            method: Method::Sgm,
            d: 2,
            eps: EpsSetting::Auto,
            rho: RhoSetting::Auto,
            grid: GcvGrid::default(),
            failure_policy: FailurePolicy::KeepEdge,
            workers: default_workers(),
            seed: 0,
        }
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidConfig("predictor dimension must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidConfig("workers must be at least 1".into()));
        }
        if let EpsSetting::Fixed(r) = self.eps {
            Regularizers::new(r.pair, r.minus, r.u)?;
        }
        if let RhoSetting::Fixed(rho) = self.rho {
            if !rho.is_finite() {
                return Err(Error::InvalidConfig(format!("threshold must be finite, got {rho}")));
            }
        }
        GcvGrid::new(self.grid.eps_values().to_vec(), self.grid.rho_values().to_vec())?;
        Ok(())
    }
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Per-pair record kept for the run snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRecord {
    pub pair: (usize, usize),
    pub score: f64,
    pub gammas: PairGammas,
    pub eps_u_effective: f64,
    pub gsir_eigenvalues: Vec<f64>,
}

impl From<&PairDetail> for PairRecord {
    fn from(d: &PairDetail) -> Self {
        Self {
            pair: d.score.pair,
            score: d.score.value,
            gammas: d.gammas,
            eps_u_effective: d.eps_u_effective,
            gsir_eigenvalues: d.gsir_eigenvalues.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairFailure {
    pub pair: (usize, usize),
    pub error: Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub scores: EdgeScoreMatrix,
    pub regularizers: Regularizers,
    /// Successful pairs, in pair order.
    pub records: Vec<PairRecord>,
    pub failures: Vec<PairFailure>,
    pub warnings: Vec<String>,
}

fn is_pair_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::DegenerateSample
            | Error::RankDeficient { .. }
            | Error::NearSingular { .. }
            | Error::NotPsd { .. }
    )
}

fn check_shape(data: &SampleMatrix) -> Result<()> {
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
    Ok(())
}

fn pick_or_fallback(curve: &[f64], grid: &[f64], what: &str, warnings: &mut Vec<String>) -> f64 {
    match argmin_eps(curve, grid) {
        Ok(eps) => eps,
        Err(_) => {
            let msg = format!("GCV for {what} is degenerate; using {FALLBACK_REGULARIZER}");
            warn!("{msg}");
            warnings.push(msg);
            FALLBACK_REGULARIZER
        }
    }
}

/// Centered Gram of `(X^k, W)` for each end `k` of the pair.
fn conjoined_kernels(
    data: &SampleMatrix,
    (i, j): (usize, usize),
    conditioning: &[Vec<f64>],
) -> Result<[crate::numerics::SymMatrix; 2]> {
    let p = data.p();
    let gram_with = |k: usize| -> Result<crate::numerics::SymMatrix> {
        let xk = block_rows(data, &VariableBlock::single(k, p)?)?;
        Ok(gram_auto(&join_rows(&xk, conditioning))?.0.centered)
    };
    Ok([gram_with(i)?, gram_with(j)?])
}

/// Absorbs per-pair failures into `None`; anything else aborts.
fn tolerate<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e) if is_pair_failure(&e) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Summed step-one criteria: `(ε_pair, ε_minus)` curves.
fn step_one_curves(data: &SampleMatrix, pairs: &[(usize, usize)], grid: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let per_pair: Vec<Option<(Vec<f64>, Vec<f64>)>> = pairs
        .par_iter()
        .map(|&pair| {
            tolerate((|| {
                let g = pair_grams(data, pair)?;
                let dec_minus = eigh(&g.minus.centered)?;
                let dec_pair = eigh(&g.pair.centered)?;
                Ok((
                    gcv_curve_from(&g.minus.centered, &dec_pair, grid),
                    gcv_curve_from(&g.pair.centered, &dec_minus, grid),
                ))
            })())
        })
        .collect::<Result<_>>()?;
    let ok: Vec<&(Vec<f64>, Vec<f64>)> = per_pair.iter().flatten().collect();
    Ok((
        sum_curves(ok.iter().map(|c| &c.0), grid.len()),
        sum_curves(ok.iter().map(|c| &c.1), grid.len()),
    ))
}

// The conditioning regularizer has to strip W out of the conjoined kernels,
// so its criterion regresses those on G_W rather than the pair kernel.
fn conditioning_curve(data: &SampleMatrix, pair: (usize, usize), conditioning: &[Vec<f64>], grid: &[f64]) -> Result<Vec<f64>> {
    let g_u = gram_auto(conditioning)?.0;
    let dec = eigh(&g_u.centered)?;
    let [g_iu, g_ju] = conjoined_kernels(data, pair, conditioning)?;
    Ok(sum_curves(
        [gcv_curve_from(&g_iu, &dec, grid), gcv_curve_from(&g_ju, &dec, grid)].iter(),
        grid.len(),
    ))
}

type Predicted = Option<(SufficientPredictor, PredictorGammas)>;

/// Tunes the regularizers of one dataset. For the two-step method the
/// predictors extracted on the way are returned so they need not be
/// recomputed.
fn tune(
    data: &SampleMatrix,
    pairs: &[(usize, usize)],
    method: Method,
    d: usize,
    grid: &[f64],
    warnings: &mut Vec<String>,
) -> Result<(Regularizers, Option<Vec<Predicted>>)> {
    match method {
        Method::Sgm => {
            let (pair_curve, minus_curve) = step_one_curves(data, pairs, grid)?;
            let eps_pair = pick_or_fallback(&pair_curve, grid, "the pair regularizer", warnings);
            let eps_minus = pick_or_fallback(&minus_curve, grid, "the complement regularizer", warnings);
            let predicted: Vec<Predicted> = pairs
                .par_iter()
                .map(|&pair| tolerate(pair_predictor(data, pair, d, eps_minus, eps_pair)))
                .collect::<Result<_>>()?;
            let curves: Vec<Option<Vec<f64>>> = pairs
                .par_iter()
                .zip(&predicted)
                .map(|(&pair, pred)| match pred {
                    Some((predictor, _)) => tolerate(conditioning_curve(data, pair, &predictor.rows(), grid)),
                    None => Ok(None),
                })
                .collect::<Result<_>>()?;
            let u_curve = sum_curves(curves.iter().flatten(), grid.len());
            let eps_u = pick_or_fallback(&u_curve, grid, "the conditioning regularizer", warnings);
            Ok((
                Regularizers {
                    pair: eps_pair,
                    minus: eps_minus,
                    u: eps_u,
                },
                Some(predicted),
            ))
        }
        Method::Naive => {
            let curves: Vec<Option<Vec<f64>>> = pairs
                .par_iter()
                .map(|&(i, j)| {
                    tolerate((|| {
                        let rows = block_rows(data, &VariableBlock::complement(i, j, data.p())?)?;
                        conditioning_curve(data, (i, j), &rows, grid)
                    })())
                })
                .collect::<Result<_>>()?;
            let u_curve = sum_curves(curves.iter().flatten(), grid.len());
            let eps_u = pick_or_fallback(&u_curve, grid, "the conditioning regularizer", warnings);
            Ok((Regularizers::uniform(FALLBACK_REGULARIZER).with_u(eps_u), None))
        }
    }
}

impl Regularizers {
    fn with_u(mut self, u: f64) -> Self {
        self.u = u;
        self
    }
}

/// Tunes the regularizers of one dataset on the current thread pool.
pub fn tune_regularizers(data: &SampleMatrix, method: Method, d: usize, grid: &GcvGrid) -> Result<Regularizers> {
    check_shape(data)?;
    let mut warnings = Vec::new();
    Ok(tune(data, &all_pairs(data.p()), method, d, grid.eps_values(), &mut warnings)?.0)
}

/// Scores every pair on the current thread pool.
pub fn score_pairs(data: &SampleMatrix, cfg: &PipelineConfig) -> Result<ScoreReport> {
    cfg.validate()?;
    check_shape(data)?;
    let p = data.p();
    let pairs = all_pairs(p);
    let mut warnings = Vec::new();

    let (regs, cached) = match cfg.eps {
        EpsSetting::Fixed(r) => (r, None),
        EpsSetting::Auto => tune(data, &pairs, cfg.method, cfg.d, cfg.grid.eps_values(), &mut warnings)?,
    };

    let details: Vec<Result<PairDetail>> = match (cfg.method, cached) {
        (Method::Sgm, Some(predicted)) => pairs
            .par_iter()
            .zip(predicted)
            .map(|(&pair, pred)| match pred {
                Some((predictor, gammas)) => score_with_predictor(data, pair, &predictor, gammas, regs.u),
                // redo the extraction so the failure carries its error
                None => pair_score_detailed(data, pair, cfg.d, &regs),
            })
            .collect(),
        (Method::Sgm, None) => pairs
            .par_iter()
            .map(|&pair| pair_score_detailed(data, pair, cfg.d, &regs))
            .collect(),
        (Method::Naive, _) => pairs
            .par_iter()
            .map(|&pair| naive_pair_score_detailed(data, pair, regs.u))
            .collect(),
    };

    let mut records = Vec::with_capacity(pairs.len());
    let mut failures = Vec::new();
    for (&pair, detail) in pairs.iter().zip(details) {
        match detail {
            Ok(d) => records.push(PairRecord::from(&d)),
            Err(e) if is_pair_failure(&e) => failures.push(PairFailure { pair, error: e }),
            Err(e) => return Err(e),
        }
    }
    if records.is_empty() {
        return Err(Error::InvalidInput("no pair could be scored".into()));
    }

    let fill = match cfg.failure_policy {
        FailurePolicy::KeepEdge => records.iter().map(|r| r.score).fold(0.0, f64::max),
        FailurePolicy::DropEdge => 0.0,
    };
    let mut scored: Vec<EdgeScore> = records
        .iter()
        .map(|r| EdgeScore::new(r.pair.0, r.pair.1, r.score))
        .collect();
    for f in &failures {
        let msg = format!(
            "pair ({}, {}) could not be scored ({}); score set to {fill}",
            f.pair.0 + 1,
            f.pair.1 + 1,
            f.error
        );
        warn!("{msg}");
        warnings.push(msg);
        scored.push(EdgeScore::new(f.pair.0, f.pair.1, fill));
    }

    Ok(ScoreReport {
        scores: EdgeScoreMatrix::from_pairs(p, &scored)?,
        regularizers: regs,
        records,
        failures,
        warnings,
    })
}

/// [`score_pairs`] on a pool of `cfg.workers` threads.
pub fn score_all_pairs_report(data: &SampleMatrix, cfg: &PipelineConfig) -> Result<ScoreReport> {
    cfg.validate()?;
    with_workers(cfg.workers, || score_pairs(data, cfg))?
}

pub fn score_all_pairs(data: &SampleMatrix, cfg: &PipelineConfig) -> Result<EdgeScoreMatrix> {
    score_all_pairs_report(data, cfg).map(|r| r.scores)
}

/// One value of the run snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SnapshotValue {
    Bool(bool),
    Int(u64),
    Float(f64),
    Text(String),
}

impl From<f64> for SnapshotValue {
    fn from(v: f64) -> Self {
        SnapshotValue::Float(v)
    }
}

impl From<u64> for SnapshotValue {
    fn from(v: u64) -> Self {
        SnapshotValue::Int(v)
    }
}

impl From<usize> for SnapshotValue {
    fn from(v: usize) -> Self {
        SnapshotValue::Int(v as u64)
    }
}

impl From<bool> for SnapshotValue {
    fn from(v: bool) -> Self {
        SnapshotValue::Bool(v)
    }
}

impl From<&str> for SnapshotValue {
    fn from(v: &str) -> Self {
        SnapshotValue::Text(v.to_string())
    }
}

impl From<String> for SnapshotValue {
    fn from(v: String) -> Self {
        SnapshotValue::Text(v)
    }
}

/// Flat record of every constant a run used.
pub type Snapshot = BTreeMap<String, SnapshotValue>;

fn join_grid(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("bad grid value '{v}'")))
        })
        .collect()
}

impl PipelineConfig {
    /// Snapshot keys describing this configuration.
    pub fn snapshot(&self) -> Snapshot {
        let mut s = Snapshot::new();
        s.insert("version".into(), env!("CARGO_PKG_VERSION").into());
        s.insert("method".into(), self.method.name().into());
        s.insert("d".into(), self.d.into());
        s.insert("seed".into(), self.seed.into());
        s.insert("workers".into(), self.workers.into());
        s.insert(
            "failure_policy".into(),
            match self.failure_policy {
                FailurePolicy::KeepEdge => "keep_edge",
                FailurePolicy::DropEdge => "drop_edge",
            }
            .into(),
        );
        s.insert("eps_grid".into(), join_grid(self.grid.eps_values()).into());
        s.insert("rho_grid".into(), join_grid(self.grid.rho_values()).into());
        match self.eps {
            EpsSetting::Auto => {
                s.insert("eps_mode".into(), "auto".into());
            }
            EpsSetting::Fixed(r) => {
                s.insert("eps_mode".into(), "fixed".into());
                insert_regularizers(&mut s, &r);
            }
        }
        match self.rho {
            RhoSetting::Auto => {
                s.insert("rho_mode".into(), "auto".into());
            }
            RhoSetting::Fixed(rho) => {
                s.insert("rho_mode".into(), "fixed".into());
                s.insert("rho".into(), rho.into());
            }
        }
        s
    }

    /// Configuration that repeats a recorded run: tuned values become fixed.
    pub fn from_snapshot(s: &Snapshot) -> Result<Self> {
        let text = |k: &str| match s.get(k) {
            Some(SnapshotValue::Text(t)) => Ok(t.clone()),
            _ => Err(Error::InvalidConfig(format!("snapshot lacks text field '{k}'"))),
        };
        let int = |k: &str| match s.get(k) {
            Some(SnapshotValue::Int(v)) => Ok(*v),
            _ => Err(Error::InvalidConfig(format!("snapshot lacks integer field '{k}'"))),
        };
        let float = |k: &str| match s.get(k) {
            Some(SnapshotValue::Float(v)) => Ok(*v),
            Some(SnapshotValue::Int(v)) => Ok(*v as f64),
            _ => Err(Error::InvalidConfig(format!("snapshot lacks numeric field '{k}'"))),
        };
        let failure_policy = match text("failure_policy")?.as_str() {
            "keep_edge" => FailurePolicy::KeepEdge,
            "drop_edge" => FailurePolicy::DropEdge,
            other => return Err(Error::InvalidConfig(format!("unknown failure policy '{other}'"))),
        };
        let cfg = Self {
            method: text("method")?.parse()?,
            d: int("d")? as usize,
            eps: EpsSetting::Fixed(Regularizers::new(
                float("eps_pair")?,
                float("eps_minus")?,
                float("eps_u")?,
            )?),
            rho: RhoSetting::Fixed(float("rho")?),
            grid: GcvGrid::new(parse_grid(&text("eps_grid")?)?, parse_grid(&text("rho_grid")?)?)?,
            failure_policy,
            workers: int("workers").map_or(1, |w| w as usize),
            seed: int("seed")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn insert_regularizers(s: &mut Snapshot, r: &Regularizers) {
    s.insert("eps_pair".into(), r.pair.into());
    s.insert("eps_minus".into(), r.minus.into());
    s.insert("eps_u".into(), r.u.into());
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphEstimate {
    pub p: usize,
    /// Pairs `(i, j)` with `i > j`.
    pub edges: BTreeSet<(usize, usize)>,
    pub threshold: f64,
    pub score_matrix: EdgeScoreMatrix,
    pub config_snapshot: Snapshot,
    /// Set when the threshold criterion was degenerate and the fallback used.
    pub rho_fallback: bool,
    pub warnings: Vec<String>,
}

/// Edges whose score strictly exceeds `rho`.
pub fn threshold_graph(scores: &EdgeScoreMatrix, rho: f64) -> GraphEstimate {
    let p = scores.p();
    let edges = all_pairs(p)
        .into_iter()
        .filter(|&(i, j)| scores.get(i, j) > rho)
        .collect();
    let mut config_snapshot = Snapshot::new();
    config_snapshot.insert("rho".into(), rho.into());
    GraphEstimate {
        p,
        edges,
        threshold: rho,
        score_matrix: scores.clone(),
        config_snapshot,
        rho_fallback: false,
        warnings: Vec::new(),
    }
}

/// Threshold for a scored dataset: fixed, or by GCV with a fallback.
fn choose_rho(data: &SampleMatrix, report: &ScoreReport, cfg: &PipelineConfig, warnings: &mut Vec<String>) -> Result<(f64, bool)> {
    match cfg.rho {
        RhoSetting::Fixed(rho) => Ok((rho, false)),
        RhoSetting::Auto => match gcv_rho(data, &report.scores, cfg.grid.rho_values(), report.regularizers.u) {
            Ok(rho) => Ok((rho, false)),
            Err(Error::GcvDegenerate) => {
                let msg = format!("threshold GCV is degenerate; using rho = {FALLBACK_RHO}");
                warn!("{msg}");
                warnings.push(msg);
                Ok((FALLBACK_RHO, true))
            }
            Err(e) => Err(e),
        },
    }
}

/// Full pipeline on the current thread pool.
pub fn estimate_in_pool(data: &SampleMatrix, cfg: &PipelineConfig) -> Result<GraphEstimate> {
    let report = score_pairs(data, cfg)?;
    let mut warnings = report.warnings.clone();
    let (rho, rho_fallback) = choose_rho(data, &report, cfg, &mut warnings)?;

    let mut est = threshold_graph(&report.scores, rho);
    let mut snap = cfg.snapshot();
    snap.insert("eps_mode".into(), "fixed".into());
    snap.insert("rho_mode".into(), "fixed".into());
    insert_regularizers(&mut snap, &report.regularizers);
    snap.insert("rho".into(), rho.into());
    snap.insert("rho_fallback".into(), rho_fallback.into());
    snap.insert("n".into(), data.n().into());
    snap.insert("p".into(), data.p().into());
    snap.insert("failed_pairs".into(), report.failures.len().into());
    for r in &report.records {
        let key = |name: &str| format!("{name}.{}_{}", data.label(r.pair.0), data.label(r.pair.1));
        if let Some(g) = r.gammas.pair {
            snap.insert(key("gamma_pair"), g.into());
        }
        if let Some(g) = r.gammas.minus {
            snap.insert(key("gamma_minus"), g.into());
        }
        snap.insert(key("gamma_iu"), r.gammas.iu.into());
        snap.insert(key("gamma_ju"), r.gammas.ju.into());
        snap.insert(key("gamma_u"), r.gammas.u.into());
        snap.insert(key("eps_u_gram"), r.eps_u_effective.into());
    }
    est.config_snapshot = snap;
    est.rho_fallback = rho_fallback;
    est.warnings = warnings;
    Ok(est)
}

/// Scores every pair, picks the threshold and returns the graph.
pub fn estimate(data: &SampleMatrix, cfg: &PipelineConfig) -> Result<GraphEstimate> {
    cfg.validate()?;
    with_workers(cfg.workers, || estimate_in_pool(data, cfg))?
}
