use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::info;
use sgm::ccco::{naive_pair_score_detailed, pair_score_detailed};
use sgm::eval::{self, format_significant, ReplicateSummary};
use sgm::graph::{self, with_workers, Snapshot, SnapshotValue};
use sgm::{EpsSetting, Method, ModelTag, PipelineConfig, Regularizers, RhoSetting, SampleMatrix, SimModel};

use crate::ingest::ingest_csv;
use crate::{Cli, CliError, Command, EstimateArgs, EvaluateArgs, ScoreArgs, SimulateArgs, TuningArgs};

/// Significant digits of every score written to disk.
const SCORE_DIGITS: usize = 12;

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Estimate(args) => estimate(args),
        Command::Simulate(args) => simulate(args),
        Command::Evaluate(args) => evaluate(args),
        Command::Score(args) => score(args),
    }
}

fn parse_eps(text: &str) -> Result<EpsSetting, CliError> {
    if text.eq_ignore_ascii_case("auto") {
        return Ok(EpsSetting::Auto);
    }
    let v: f64 = text
        .parse()
        .map_err(|_| CliError::Usage(format!("--eps expects 'auto' or a number, got '{text}'")))?;
    Ok(EpsSetting::Fixed(Regularizers::new(v, v, v)?))
}

fn parse_rho(text: &str) -> Result<RhoSetting, CliError> {
    if text.eq_ignore_ascii_case("auto") {
        return Ok(RhoSetting::Auto);
    }
    text.parse()
        .map(RhoSetting::Fixed)
        .map_err(|_| CliError::Usage(format!("--rho expects 'auto' or a number, got '{text}'")))
}

fn parse_methods(text: &str) -> Result<Vec<Method>, CliError> {
    let methods = text
        .split(',')
        .map(|m| m.trim().parse::<Method>())
        .collect::<Result<Vec<_>, _>>()?;
    if methods.is_empty() {
        return Err(CliError::Usage("no method given".into()));
    }
    Ok(methods)
}

fn base_config(method: Method, rho: RhoSetting, t: &TuningArgs) -> Result<PipelineConfig, CliError> {
    let cfg = PipelineConfig {
        method,
        d: t.d,
        eps: parse_eps(&t.eps)?,
        rho,
        seed: t.seed,
        workers: t.workers.unwrap_or_else(graph::default_workers),
        ..PipelineConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn create(dir: &Path, name: &str) -> Result<(BufWriter<File>, PathBuf), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
    Ok((BufWriter::new(file), path))
}

fn write_file(dir: &Path, name: &str, fill: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), CliError> {
    let (mut w, path) = create(dir, name)?;
    fill(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(&path, e))
}

fn write_snapshot(dir: &Path, snap: &Snapshot) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(snap).map_err(|e| CliError::Replay(e.to_string()))?;
    write_file(dir, "run.json", |w| writeln!(w, "{text}"))
}

pub(crate) fn load_snapshot(path: &Path) -> Result<Snapshot, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Replay(format!("{}: {e}", path.display())))
}

fn snap_text(s: &Snapshot, key: &str) -> Result<String, CliError> {
    match s.get(key) {
        Some(SnapshotValue::Text(t)) => Ok(t.clone()),
        Some(SnapshotValue::Int(v)) => Ok(v.to_string()),
        _ => Err(CliError::Replay(format!("missing field '{key}'"))),
    }
}

fn snap_int(s: &Snapshot, key: &str) -> Result<u64, CliError> {
    match s.get(key) {
        Some(SnapshotValue::Int(v)) => Ok(*v),
        _ => Err(CliError::Replay(format!("missing integer field '{key}'"))),
    }
}

fn check_command(s: &Snapshot, expected: &str) -> Result<(), CliError> {
    let found = snap_text(s, "command")?;
    if found != expected {
        return Err(CliError::Replay(format!("recorded a '{found}' run, not '{expected}'")));
    }
    Ok(())
}

/// Labels of a pair, lower index first.
fn labels(data: &SampleMatrix, i: usize, j: usize) -> (String, String) {
    (data.label(i.min(j)), data.label(i.max(j)))
}

fn estimate(args: EstimateArgs) -> Result<(), CliError> {
    let (cfg, data_path) = match &args.replay {
        Some(path) => {
            let snap = load_snapshot(path)?;
            check_command(&snap, "estimate")?;
            let mut cfg = PipelineConfig::from_snapshot(&snap)?;
            if let Some(w) = args.tuning.workers {
                cfg.workers = w;
            }
            let data = match args.data.clone() {
                Some(d) => d,
                None => PathBuf::from(snap_text(&snap, "data")?),
            };
            (cfg, data)
        }
        None => {
            let method = args.method.parse::<Method>()?;
            let cfg = base_config(method, parse_rho(&args.rho)?, &args.tuning)?;
            let data = args
                .data
                .clone()
                .ok_or_else(|| CliError::Usage("--data is required".into()))?;
            (cfg, data)
        }
    };
    let data = ingest_csv(&data_path)?;
    info!("read {} rows and {} columns from {}", data.n(), data.p(), data_path.display());

    let est = sgm::estimate(&data, &cfg)?;
    write_file(&args.out, "edges.csv", |w| {
        writeln!(w, "i,j,score")?;
        for &(i, j) in &est.edges {
            let (a, b) = labels(&data, i, j);
            writeln!(w, "{a},{b},{}", format_significant(est.score_matrix.get(i, j), SCORE_DIGITS))?;
        }
        Ok(())
    })?;
    write_file(&args.out, "scores.csv", |w| {
        writeln!(w, "i,j,score")?;
        for j in 0..data.p() {
            for i in j + 1..data.p() {
                let (a, b) = labels(&data, i, j);
                writeln!(w, "{a},{b},{}", format_significant(est.score_matrix.get(i, j), SCORE_DIGITS))?;
            }
        }
        Ok(())
    })?;
    let mut snap = est.config_snapshot.clone();
    snap.insert("command".into(), "estimate".into());
    snap.insert("data".into(), data_path.display().to_string().into());
    write_snapshot(&args.out, &snap)?;

    println!(
        "{} edges among {} variables at threshold {}{}",
        est.edges.len(),
        est.p,
        est.threshold,
        if est.rho_fallback { " (fallback)" } else { "" }
    );
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let (tag, n, p, seed) = match &args.replay {
        Some(path) => {
            let snap = load_snapshot(path)?;
            check_command(&snap, "simulate")?;
            (
                snap_text(&snap, "model")?.parse::<ModelTag>()?,
                snap_int(&snap, "n")? as usize,
                Some(snap_int(&snap, "p")? as usize),
                snap_int(&snap, "seed")?,
            )
        }
        None => (
            args.model
                .as_deref()
                .ok_or_else(|| CliError::Usage("--model is required".into()))?
                .parse::<ModelTag>()?,
            args.n.ok_or_else(|| CliError::Usage("--n is required".into()))?,
            args.p,
            args.seed,
        ),
    };
    let model = SimModel::for_tag(tag, p, seed)?;
    let (data, truth) = model.generate(n)?;

    write_file(&args.out, "data.csv", |w| {
        let header: Vec<String> = (1..=data.p()).map(|c| format!("x{c}")).collect();
        writeln!(w, "{}", header.join(","))?;
        for a in 0..data.n() {
            let row: Vec<String> = data.row(a).iter().map(f64::to_string).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    })?;
    write_file(&args.out, "truth.csv", |w| {
        writeln!(w, "i,j")?;
        for &(i, j) in truth.edges() {
            writeln!(w, "{},{}", j + 1, i + 1)?;
        }
        Ok(())
    })?;
    let mut snap = Snapshot::new();
    snap.insert("command".into(), "simulate".into());
    snap.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    snap.insert("model".into(), tag.to_string().into());
    snap.insert("n".into(), n.into());
    snap.insert("p".into(), model.p.into());
    snap.insert("n_hubs".into(), model.n_hubs.into());
    snap.insert("seed".into(), seed.into());
    write_snapshot(&args.out, &snap)?;
    println!("model {tag}: {} rows, {} variables, {} true edges", n, model.p, truth.len());
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let (model, n, reps, configs) = match &args.replay {
        Some(path) => replay_evaluate(path, args.tuning.workers)?,
        None => {
            let tag = args
                .model
                .as_deref()
                .ok_or_else(|| CliError::Usage("--model is required".into()))?
                .parse::<ModelTag>()?;
            let n = args.n.ok_or_else(|| CliError::Usage("--n is required".into()))?;
            let model = SimModel::for_tag(tag, args.p, args.tuning.seed)?;
            let configs = parse_methods(&args.method)?
                .into_iter()
                .map(|m| base_config(m, RhoSetting::Auto, &args.tuning))
                .collect::<Result<Vec<_>, _>>()?;
            (model, n, args.reps, configs)
        }
    };

    let mut summaries: Vec<ReplicateSummary> = Vec::new();
    for cfg in &configs {
        info!("model {} n={n} reps={reps} method {}", model.tag, cfg.method);
        summaries.push(eval::replicate(&model, n, reps, cfg.method, cfg)?);
    }

    write_file(&args.out, "auc.csv", |w| eval::write_auc_csv(w, &summaries))?;
    write_file(&args.out, "roc.csv", |w| eval::write_roc_csv(w, &summaries))?;
    write_file(&args.out, "roc.svg", |w| w.write_all(eval::roc_svg(&summaries).as_bytes()))?;

    let mut snap = configs[0].snapshot();
    snap.remove("method");
    snap.insert("command".into(), "evaluate".into());
    snap.insert("model".into(), model.tag.to_string().into());
    snap.insert("n".into(), n.into());
    snap.insert("p".into(), model.p.into());
    snap.insert("n_hubs".into(), model.n_hubs.into());
    snap.insert("reps".into(), reps.into());
    snap.insert("eps_mode".into(), "fixed".into());
    snap.remove("eps_pair");
    snap.remove("eps_minus");
    snap.remove("eps_u");
    let names: Vec<&str> = summaries.iter().map(|s| s.method.name()).collect();
    snap.insert("methods".into(), names.join(",").into());
    for s in &summaries {
        let m = s.method.name();
        snap.insert(format!("{m}.eps_pair"), s.regularizers.pair.into());
        snap.insert(format!("{m}.eps_minus"), s.regularizers.minus.into());
        snap.insert(format!("{m}.eps_u"), s.regularizers.u.into());
        snap.insert(format!("{m}.mean_auc"), s.mean_auc.into());
    }
    write_snapshot(&args.out, &snap)?;

    println!("model {} n={n} reps={reps}", model.tag);
    for s in &summaries {
        println!("  {:<6} mean AUC {:.4} (sd {:.4})", s.method.name(), s.mean_auc, s.sd_auc);
    }
    Ok(())
}

type EvaluatePlan = (SimModel, usize, usize, Vec<PipelineConfig>);

fn replay_evaluate(path: &Path, workers: Option<usize>) -> Result<EvaluatePlan, CliError> {
    let snap = load_snapshot(path)?;
    check_command(&snap, "evaluate")?;
    let tag = snap_text(&snap, "model")?.parse::<ModelTag>()?;
    let seed = snap_int(&snap, "seed")?;
    let p = snap_int(&snap, "p")? as usize;
    let model = match tag {
        ModelTag::III | ModelTag::IV => SimModel::hub(tag, p, snap_int(&snap, "n_hubs")? as usize, seed)?,
        _ => SimModel::for_tag(tag, Some(p), seed)?,
    };
    let mut configs = Vec::new();
    for m in parse_methods(&snap_text(&snap, "methods")?)? {
        let mut per = snap.clone();
        per.insert("method".into(), m.name().into());
        for key in ["eps_pair", "eps_minus", "eps_u"] {
            let v = snap
                .get(&format!("{}.{key}", m.name()))
                .cloned()
                .ok_or_else(|| CliError::Replay(format!("missing field '{}.{key}'", m.name())))?;
            per.insert(key.into(), v);
        }
        // the threshold plays no part in ROC evaluation
        per.entry("rho".into()).or_insert(SnapshotValue::Float(sgm::tuning::FALLBACK_RHO));
        let mut cfg = PipelineConfig::from_snapshot(&per)?;
        if let Some(w) = workers {
            cfg.workers = w;
        }
        configs.push(cfg);
    }
    Ok((
        model,
        snap_int(&snap, "n")? as usize,
        snap_int(&snap, "reps")? as usize,
        configs,
    ))
}

fn score(args: ScoreArgs) -> Result<(), CliError> {
    let data = ingest_csv(&args.data)?;
    let p = data.p();
    for v in [args.i, args.j] {
        if v == 0 || v > p {
            return Err(CliError::Usage(format!("variable {v} is outside 1..={p}")));
        }
    }
    if args.i == args.j {
        return Err(CliError::Usage("--i and --j must differ".into()));
    }
    let pair = (args.i - 1, args.j - 1);
    let method = args.method.parse::<Method>()?;
    let cfg = base_config(method, RhoSetting::Auto, &args.tuning)?;

    let regs = match cfg.eps {
        EpsSetting::Fixed(r) => r,
        EpsSetting::Auto => with_workers(cfg.workers, || graph::tune_regularizers(&data, method, cfg.d, &cfg.grid))??,
    };
    let detail = match method {
        Method::Sgm => pair_score_detailed(&data, pair, cfg.d, &regs)?,
        Method::Naive => naive_pair_score_detailed(&data, pair, regs.u)?,
    };

    let (a, b) = labels(&data, pair.0, pair.1);
    let fmt = |v: f64| format_significant(v, SCORE_DIGITS);
    let mut lines = vec![format!("pair: {a},{b}"), format!("method: {method}")];
    if let Some(g) = detail.gammas.pair {
        lines.push(format!("gamma_pair: {}", fmt(g)));
    }
    if let Some(g) = detail.gammas.minus {
        lines.push(format!("gamma_minus: {}", fmt(g)));
    }
    lines.push(format!("gamma_iu: {}", fmt(detail.gammas.iu)));
    lines.push(format!("gamma_ju: {}", fmt(detail.gammas.ju)));
    lines.push(format!("gamma_u: {}", fmt(detail.gammas.u)));
    if method == Method::Sgm {
        let eig: Vec<String> = detail.gsir_eigenvalues.iter().map(|&v| fmt(v)).collect();
        lines.push(format!("gsir_eigenvalues: {}", eig.join(",")));
        lines.push(format!("eps_pair: {}", regs.pair));
        lines.push(format!("eps_minus: {}", regs.minus));
    }
    lines.push(format!("eps_u: {}", regs.u));
    lines.push(format!("eps_u_gram: {}", fmt(detail.eps_u_effective)));
    lines.push(format!("score: {}", fmt(detail.score.value)));
    println!("{}", lines.join("\n"));

    if let Some(out) = &args.out {
        let mut snap = PipelineConfig {
            eps: EpsSetting::Fixed(regs),
            ..cfg
        }
        .snapshot();
        snap.insert("command".into(), "score".into());
        snap.insert("data".into(), args.data.display().to_string().into());
        snap.insert("i".into(), args.i.into());
        snap.insert("j".into(), args.j.into());
        snap.insert("score".into(), detail.score.value.into());
        write_snapshot(out, &snap)?;
    }
    Ok(())
}
