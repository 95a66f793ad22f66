//! ROC/AUC against a known edge set, and replication over simulated data.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ccco::Method;
use crate::error::{Error, Result};
use crate::graph::{all_pairs, score_pairs, tune_regularizers, with_workers, EdgeScoreMatrix, EpsSetting, PipelineConfig};
use crate::simgen::{GroundTruth, ModelTag, SimModel};
use crate::tuning::Regularizers;

/// Number of leading replicates whose tuned regularizers are averaged and
/// then reused for every replicate.
pub const TUNING_REPS: usize = 5;

/// Step of the false-positive-rate grid used for averaged curves.
pub const FPR_STEP: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(fpr, tpr)` from the highest threshold down, starting at `(0, 0)`
    /// and ending at `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// Curve of `(score, is_true_edge)` observations.
pub fn roc_from_labeled(scored: &[(f64, bool)]) -> Result<RocCurve> {
    let positives = scored.iter().filter(|s| s.1).count();
    let negatives = scored.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::InvalidTruth(format!(
            "need both edges and non-edges, got {positives} and {negatives}"
        )));
    }
    if let Some(s) = scored.iter().find(|s| s.0.is_nan()) {
        return Err(Error::InvalidInput(format!("score {} is not a number", s.0)));
    }
    let mut sorted = scored.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));

    let (pos, neg) = (positives as f64, negatives as f64);
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    // trapezoids over tie groups give the Mann–Whitney statistic exactly
    let mut area = 0.0;
    let mut k = 0;
    while k < sorted.len() {
        let level = sorted[k].0;
        let (tp0, fp0) = (tp, fp);
        while k < sorted.len() && sorted[k].0 == level {
            if sorted[k].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        area += (fp - fp0) as f64 * (tp + tp0) as f64 / 2.0;
        points.push((fp as f64 / neg, tp as f64 / pos));
    }
    Ok(RocCurve {
        points,
        auc: area / (pos * neg),
    })
}

pub fn roc(scores: &EdgeScoreMatrix, truth: &GroundTruth) -> Result<RocCurve> {
    if scores.p() != truth.p {
        return Err(Error::InvalidTruth(format!(
            "truth has {} nodes, scores have {}",
            truth.p,
            scores.p()
        )));
    }
    let scored: Vec<(f64, bool)> = all_pairs(scores.p())
        .into_iter()
        .map(|(i, j)| (scores.get(i, j), truth.contains(i, j)))
        .collect();
    roc_from_labeled(&scored)
}

/// `{0, 0.01, …, 1}`.
pub fn fpr_grid() -> Vec<f64> {
    let steps = (1.0 / FPR_STEP).round() as usize;
    (0..=steps).map(|k| k as f64 / steps as f64).collect()
}

/// True positive rate of the curve at `fpr`, interpolating linearly within
/// a tie segment and taking the top of a vertical jump.
pub fn tpr_at(curve: &RocCurve, fpr: f64) -> f64 {
    let pts = &curve.points;
    let last_le = pts.iter().rposition(|&(x, _)| x <= fpr).unwrap_or(0);
    let (x0, y0) = pts[last_le];
    if x0 == fpr || last_le + 1 == pts.len() {
        return y0;
    }
    let (x1, y1) = pts[last_le + 1];
    y0 + (y1 - y0) * (fpr - x0) / (x1 - x0)
}

/// Mean tpr over curves at each point of [`fpr_grid`].
pub fn vertical_average(curves: &[RocCurve]) -> Vec<(f64, f64)> {
    let k = curves.len().max(1) as f64;
    fpr_grid()
        .into_iter()
        .map(|x| (x, curves.iter().map(|c| tpr_at(c, x)).sum::<f64>() / k))
        .collect()
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replicate `rep` under a master seed.
pub fn rep_seed(master: u64, rep: usize) -> u64 {
    splitmix64(master ^ splitmix64(rep as u64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepOutcome {
    pub seed: u64,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSummary {
    pub model: ModelTag,
    pub method: Method,
    pub n: usize,
    pub mean_auc: f64,
    /// Sample standard deviation; zero for a single replicate.
    pub sd_auc: f64,
    pub mean_curve: Vec<(f64, f64)>,
    pub runs: Vec<RepOutcome>,
    pub regularizers: Regularizers,
}

fn wrap(seed: u64) -> impl Fn(Error) -> Error {
    move |e| Error::Replication {
        seed,
        source: Box::new(e),
    }
}

fn replicate_in_pool(model: &SimModel, n: usize, reps: usize, cfg: &PipelineConfig) -> Result<ReplicateSummary> {
    let seeds: Vec<u64> = (0..reps).map(|r| rep_seed(model.seed, r)).collect();

    let regularizers = match cfg.eps {
        EpsSetting::Fixed(r) => r,
        EpsSetting::Auto => {
            let tuned: Vec<Regularizers> = seeds
                .par_iter()
                .take(TUNING_REPS)
                .map(|&seed| {
                    let (data, _) = model.generate_with_seed(n, seed).map_err(wrap(seed))?;
                    tune_regularizers(&data, cfg.method, cfg.d, &cfg.grid).map_err(wrap(seed))
                })
                .collect::<Result<_>>()?;
            Regularizers::mean(&tuned).unwrap_or_default()
        }
    };
    let fixed = PipelineConfig {
        eps: EpsSetting::Fixed(regularizers),
        ..cfg.clone()
    };

    let curves: Vec<RocCurve> = seeds
        .par_iter()
        .map(|&seed| {
            let (data, truth) = model.generate_with_seed(n, seed).map_err(wrap(seed))?;
            let report = score_pairs(&data, &fixed).map_err(wrap(seed))?;
            roc(&report.scores, &truth).map_err(wrap(seed))
        })
        .collect::<Result<_>>()?;

    let aucs: Vec<f64> = curves.iter().map(|c| c.auc).collect();
    let mean_auc = aucs.iter().sum::<f64>() / reps as f64;
    let sd_auc = if reps > 1 {
        (aucs.iter().map(|a| (a - mean_auc).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(ReplicateSummary {
        model: model.tag,
        method: cfg.method,
        n,
        mean_auc,
        sd_auc,
        mean_curve: vertical_average(&curves),
        runs: seeds
            .into_iter()
            .zip(aucs)
            .map(|(seed, auc)| RepOutcome { seed, auc })
            .collect(),
        regularizers,
    })
}

/// Scores `reps` datasets drawn from `model` with sub-seeds of `model.seed`.
///
/// With automatic regularizers the GCV choices of the first
/// [`TUNING_REPS`] datasets are averaged and used for all of them.
pub fn replicate(model: &SimModel, n: usize, reps: usize, method: Method, cfg: &PipelineConfig) -> Result<ReplicateSummary> {
    if reps == 0 {
        return Err(Error::InvalidConfig("reps must be at least 1".into()));
    }
    let cfg = PipelineConfig {
        method,
        ..cfg.clone()
    };
    cfg.validate()?;
    with_workers(cfg.workers, || replicate_in_pool(model, n, reps, &cfg))?
}

/// One summary per method, same datasets for each.
pub fn compare(model: &SimModel, n: usize, reps: usize, methods: &[Method], cfg: &PipelineConfig) -> Result<Vec<ReplicateSummary>> {
    methods
        .iter()
        .map(|&m| replicate(model, n, reps, m, cfg))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// Hub models with p = 50 and 5 hubs, 10 replicates.
    Desk,
    /// Hub models with p = 200 and 10 hubs, 50 replicates.
    Full,
}

/// Model and replicate count of a named preset.
pub fn preset(tag: ModelTag, scale: Scale, seed: u64) -> Result<(SimModel, usize)> {
    let hub = matches!(tag, ModelTag::III | ModelTag::IV);
    let (model, reps) = match scale {
        Scale::Desk if hub => (SimModel::hub_desk_scale(tag, seed)?, 10),
        Scale::Full if hub => (SimModel::hub_full_scale(tag, seed)?, 50),
        Scale::Desk => (SimModel::for_tag(tag, None, seed)?, 10),
        Scale::Full => (SimModel::for_tag(tag, None, seed)?, 50),
    };
    Ok((model, reps))
}

/// Shortest decimal form of `v` rounded to `digits` significant digits.
pub fn format_significant(v: f64, digits: usize) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let rounded: f64 = format!("{:.*e}", digits.max(1) - 1, v)
        .parse()
        .unwrap_or(v);
    rounded.to_string()
}

pub fn write_auc_csv<W: Write>(mut w: W, summaries: &[ReplicateSummary]) -> io::Result<()> {
    writeln!(w, "seed,method,auc")?;
    for s in summaries {
        for run in &s.runs {
            writeln!(w, "{},{},{}", run.seed, s.method, format_significant(run.auc, 12))?;
        }
    }
    Ok(())
}

/// Long format; one block of rows per method.
pub fn write_roc_csv<W: Write>(mut w: W, summaries: &[ReplicateSummary]) -> io::Result<()> {
    writeln!(w, "fpr,mean_tpr,method")?;
    for s in summaries {
        for &(x, y) in &s.mean_curve {
            writeln!(w, "{},{},{}", format_significant(x, 12), format_significant(y, 12), s.method)?;
        }
    }
    Ok(())
}

const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Line chart of the mean curves.
pub fn roc_svg(summaries: &[ReplicateSummary]) -> String {
    let (size, pad) = (400.0, 40.0);
    let span = size - 2.0 * pad;
    let px = |x: f64| pad + x * span;
    let py = |y: f64| size - pad - y * span;
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{size}\" viewBox=\"0 0 {size} {size}\">\n"
    );
    out.push_str(&format!(
        "<rect x=\"{pad}\" y=\"{pad}\" width=\"{span}\" height=\"{span}\" fill=\"none\" stroke=\"black\"/>\n"
    ));
    out.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#999\" stroke-dasharray=\"4 4\"/>\n",
        px(0.0),
        py(0.0),
        px(1.0),
        py(1.0)
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\">false positive rate</text>\n",
        size / 2.0,
        size - 10.0
    ));
    out.push_str(&format!(
        "<text x=\"12\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 12 {})\">true positive rate</text>\n",
        size / 2.0,
        size / 2.0
    ));
    for (k, s) in summaries.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = s
            .mean_curve
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        out.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n",
            pts.join(" ")
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"{color}\">{} (AUC {:.3})</text>\n",
            px(0.55),
            py(0.1) + 16.0 * k as f64,
            s.method,
            s.mean_auc
        ));
    }
    out.push_str("</svg>\n");
    out
}
