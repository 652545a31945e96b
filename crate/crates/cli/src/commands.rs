use crate::config::RunConfig;
use crate::{runtime, validation, CliError};
use hiermol::dataprep::{
    clean_all, lines_with, load_pairs_file, load_smiles_file, read_sidecar, text_embed_stub,
    LoadError, Loaded, PairRecord, PairText, SidecarError,
};
use hiermol::encoder::{encode, LevelFeatures};
use hiermol::featfile::{read_features, write_features, FeatureFileError};
use hiermol::fusion::{
    align_projector, export_tokens as write_tokens, matched_pair_rate, project,
    reduce as reduce_one, AlignConfig, ProjectorParams, TokenBundle,
};
use hiermol::hierseg::{fragment_bonds, rules_by_name, segment as segment_mol, HierGraph};
use hiermol::metrics::{evaluate_corpus, CorpusError, TaskMode};
use hiermol::molgraph::parse_smiles;
use hiermol::paramfile::ParamFileError;
use hiermol::pretrain::{load_checkpoint, save_checkpoint, train, PretrainError, TrainItem};
use hiermol::selfcheck;
use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde_json::json;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

fn load_err(path: &Path) -> impl Fn(LoadError) -> CliError + '_ {
    move |e| {
        let msg = format!("{}: {e}", path.display());
        match e {
            LoadError::Io(_) => CliError::Runtime(msg),
            LoadError::Malformed { .. } => CliError::Validation(msg),
        }
    }
}

fn param_err(path: &Path, e: ParamFileError) -> CliError {
    let msg = format!("{}: {e}", path.display());
    match e {
        ParamFileError::Io(_) => CliError::Runtime(msg),
        _ => CliError::Validation(msg),
    }
}

fn feat_err(path: &Path, e: FeatureFileError) -> CliError {
    let msg = format!("{}: {e}", path.display());
    match e {
        FeatureFileError::Io(_) => CliError::Runtime(msg),
        _ => CliError::Validation(msg),
    }
}

fn sidecar_err(path: &Path, e: SidecarError) -> CliError {
    let msg = format!("{}: {e}", path.display());
    match e {
        SidecarError::Io(_) => CliError::Runtime(msg),
        _ => CliError::Validation(msg),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn summary(v: serde_json::Value) {
    println!("{v}");
}

fn skipped_json(skipped: &[(usize, String)]) -> serde_json::Value {
    json!(skipped
        .iter()
        .map(|(l, r)| json!({"line": l, "reason": r}))
        .collect::<Vec<_>>())
}

fn segment_all(cfg: &RunConfig, smiles: &[String]) -> Vec<HierGraph> {
    let rules = rules_by_name(&cfg.rules).expect("validated rule set");
    smiles
        .par_iter()
        .map(|s| segment_mol(&parse_smiles(s).expect("loader checked"), rules.as_ref()))
        .collect()
}

pub fn clean(
    cfg: &RunConfig,
    input: &Path,
    output: &Path,
    rejects: Option<&Path>,
) -> Result<(), CliError> {
    let file = File::open(input).map_err(|e| runtime(format!("{}: {e}", input.display())))?;
    let lines: Vec<(usize, String)> =
        lines_with(BufReader::new(file), |l| Ok::<_, String>(l.to_string()))
            .map(|r| r.map(|(n, s)| (n, s.expect("infallible"))))
            .collect::<Result<_, _>>()
            .map_err(|e| runtime(format!("{}: {e}", input.display())))?;
    let inputs: Vec<String> = lines.iter().map(|(_, s)| s.clone()).collect();
    let (outcomes, report) = clean_all(&inputs, &cfg.clean);
    let mut out = String::new();
    let mut rej = String::new();
    for ((line, raw), o) in lines.iter().zip(&outcomes) {
        match o {
            Ok(s) => writeln!(out, "{s}").unwrap(),
            Err(r) => writeln!(rej, "{line}\t{}\t{raw}", r.reason()).unwrap(),
        }
    }
    write_file(output, out.as_bytes())?;
    if let Some(p) = rejects {
        write_file(p, rej.as_bytes())?;
    }
    summary(
        json!({"accepted": report.accepted, "rejected": report.rejected, "total": report.total()}),
    );
    Ok(())
}

pub fn segment(cfg: &RunConfig, input: &Path, output: Option<&Path>) -> Result<(), CliError> {
    let loaded = load_smiles_file(input, cfg.on_error).map_err(load_err(input))?;
    let rules = rules_by_name(&cfg.rules).expect("validated rule set");
    let graphs = segment_all(cfg, &loaded.records);
    if let Some(path) = output {
        let mut out = String::new();
        for (i, (s, hg)) in loaded.records.iter().zip(&graphs).enumerate() {
            let cuts = fragment_bonds(&hg.mol, rules.as_ref());
            let rec = json!({
                "index": i,
                "smiles": s,
                "atoms": hg.a(),
                "motifs": hg.b(),
                "motif_id": hg.partition.motif_id,
                "cut_bonds": cuts,
            });
            writeln!(out, "{rec}").unwrap();
        }
        write_file(path, out.as_bytes())?;
    }
    summary(json!({
        "records": graphs.len(),
        "skipped": skipped_json(&loaded.skipped),
        "counts": graphs.iter().map(|g| [g.a(), g.b()]).collect::<Vec<_>>(),
    }));
    Ok(())
}

fn text_vectors(
    records: &[PairRecord],
    sidecar: Option<&Path>,
    d: usize,
    seed: u64,
) -> Result<Vec<Vec<f32>>, CliError> {
    if let Some(path) = sidecar {
        let (sd, vecs) = read_sidecar(path).map_err(|e| sidecar_err(path, e))?;
        if sd != d {
            return Err(validation(format!("sidecar width {sd} does not match {d}")));
        }
        if vecs.len() != records.len() {
            return Err(validation(format!(
                "sidecar has {} vectors for {} records",
                vecs.len(),
                records.len()
            )));
        }
        return Ok(vecs);
    }
    records
        .iter()
        .map(|r| match &r.text {
            PairText::Description(t) => text_embed_stub(t, d, seed).map_err(validation),
            PairText::Vector(v) => Ok(v.clone()),
        })
        .collect()
}

fn load_pairs(cfg: &RunConfig, path: &Path) -> Result<Loaded<PairRecord>, CliError> {
    load_pairs_file(path, cfg.on_error).map_err(load_err(path))
}

pub fn pretrain(
    cfg: &RunConfig,
    input: &Path,
    pairs: bool,
    sidecar: Option<&Path>,
    output: &Path,
    log: Option<&Path>,
) -> Result<(), CliError> {
    let mut tcfg = cfg.train.clone();
    let (smiles, texts, skipped) = if pairs {
        let loaded = load_pairs(cfg, input)?;
        let texts = text_vectors(&loaded.records, sidecar, tcfg.d_text, tcfg.seed)?;
        let smiles = loaded
            .records
            .into_iter()
            .map(|r| r.molecule)
            .collect::<Vec<_>>();
        (smiles, Some(texts), loaded.skipped)
    } else {
        if sidecar.is_some() {
            return Err(validation("--sidecar requires --pairs"));
        }
        let loaded = load_smiles_file(input, cfg.on_error).map_err(load_err(input))?;
        (loaded.records, None, loaded.skipped)
    };
    let contrastive_disabled = texts.is_none() && tcfg.weights.contrastive != 0.0;
    if texts.is_none() {
        tcfg.weights.contrastive = 0.0;
    }
    let graphs = segment_all(cfg, &smiles);
    let items: Vec<TrainItem> = graphs
        .into_iter()
        .enumerate()
        .map(|(i, graph)| TrainItem {
            graph,
            text: texts.as_ref().map(|t| t[i].clone()),
        })
        .collect();
    let mut losses = Vec::new();
    let outcome = train(&items, &tcfg, |step, r| losses.push((step, *r))).map_err(|e| match e {
        PretrainError::Diverged(_) | PretrainError::NonFinite => runtime(e),
        other => validation(other),
    })?;
    save_checkpoint(&outcome.checkpoint.model, output).map_err(|e| param_err(output, e))?;
    if let Some(path) = log {
        let mut out = String::new();
        for (step, r) in &losses {
            writeln!(out, "{}", json!({"step": step, "loss": r})).unwrap();
        }
        write_file(path, out.as_bytes())?;
    }
    summary(json!({
        "molecules": items.len(),
        "skipped": skipped_json(&skipped),
        "steps": outcome.steps,
        "first_total": losses.first().map(|l| l.1.total),
        "last_total": losses.last().map(|l| l.1.total),
        "contrastive": if contrastive_disabled { "disabled: no text" } else if tcfg.weights.contrastive == 0.0 { "off" } else { "on" },
    }));
    Ok(())
}

fn encode_all(
    cfg: &RunConfig,
    checkpoint: &Path,
    smiles: &[String],
) -> Result<(usize, Vec<LevelFeatures<f32>>), CliError> {
    let model = load_checkpoint(checkpoint).map_err(|e| param_err(checkpoint, e))?;
    let graphs = segment_all(cfg, smiles);
    let feats = graphs.par_iter().map(|g| encode(g, &model.gnn)).collect();
    Ok((model.gnn.dims.d, feats))
}

pub fn embed(
    cfg: &RunConfig,
    checkpoint: &Path,
    input: &Path,
    output: &Path,
) -> Result<(), CliError> {
    let loaded = load_smiles_file(input, cfg.on_error).map_err(load_err(input))?;
    let (d, feats) = encode_all(cfg, checkpoint, &loaded.records)?;
    write_features(output, &feats, d).map_err(|e| feat_err(output, e))?;
    summary(
        json!({"molecules": feats.len(), "d_gnn": d, "skipped": skipped_json(&loaded.skipped)}),
    );
    Ok(())
}

fn projected_bundles(
    cfg: &RunConfig,
    features: &Path,
    projector: Option<&Path>,
) -> Result<Vec<TokenBundle<f32>>, CliError> {
    let (d, feats) = read_features(features).map_err(|e| feat_err(features, e))?;
    let proj = match projector {
        Some(p) => ProjectorParams::<f32>::load(p).map_err(|e| param_err(p, e))?,
        None => ProjectorParams::init(cfg.seed(), d, cfg.d_llm),
    };
    feats
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            let p = project(f, &proj).map_err(validation)?;
            reduce_one(&p, cfg.reduction).map_err(|e| validation(format!("record {i}: {e}")))
        })
        .collect()
}

pub fn reduce(
    cfg: &RunConfig,
    features: &Path,
    projector: Option<&Path>,
    output: &Path,
) -> Result<(), CliError> {
    let bundles = projected_bundles(cfg, features, projector)?;
    let file = File::create(output).map_err(|e| runtime(format!("{}: {e}", output.display())))?;
    let mut w = BufWriter::new(file);
    for (i, b) in bundles.iter().enumerate() {
        let rec = json!({
            "index": i,
            "reduction": b.reduction.to_string(),
            "k": b.k(),
            "levels": b.level_ids.iter().map(|l| format!("{l:?}").to_lowercase()).collect::<Vec<_>>(),
            "tokens": b.tokens.outer_iter().map(|r| r.to_vec()).collect::<Vec<_>>(),
        });
        writeln!(w, "{rec}").map_err(runtime)?;
    }
    w.flush().map_err(runtime)?;
    summary(json!({"records": bundles.len(), "reduction": cfg.reduction.to_string()}));
    Ok(())
}

pub fn export_tokens(
    cfg: &RunConfig,
    features: &Path,
    projector: Option<&Path>,
    dir: &Path,
) -> Result<(), CliError> {
    let bundles = projected_bundles(cfg, features, projector)?;
    std::fs::create_dir_all(dir).map_err(|e| runtime(format!("{}: {e}", dir.display())))?;
    for (i, b) in bundles.iter().enumerate() {
        let path = dir.join(format!("tokens_{i:06}.bin"));
        write_tokens(b, &path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    }
    summary(
        json!({"files": bundles.len(), "reduction": cfg.reduction.to_string(), "dir": dir.display().to_string()}),
    );
    Ok(())
}

pub fn align(
    cfg: &RunConfig,
    checkpoint: &Path,
    pairs: &Path,
    sidecar: Option<&Path>,
    output: &Path,
) -> Result<(), CliError> {
    let loaded = load_pairs(cfg, pairs)?;
    let texts = text_vectors(&loaded.records, sidecar, cfg.d_llm, cfg.seed())?;
    let smiles: Vec<String> = loaded.records.iter().map(|r| r.molecule.clone()).collect();
    let (_, feats) = encode_all(cfg, checkpoint, &smiles)?;
    let data: Vec<(LevelFeatures<f32>, Array1<f32>)> = feats
        .into_iter()
        .zip(texts)
        .map(|(f, t)| (f, Array1::from(t)))
        .collect();
    let acfg = AlignConfig {
        seed: cfg.seed(),
        lr: cfg.align_lr,
        steps: cfg.align_steps,
    };
    let rate = |p: &ProjectorParams<f32>| {
        let n = data.len();
        let mut tok = Array2::zeros((n, cfg.d_llm));
        let mut txt = Array2::zeros((n, cfg.d_llm));
        for (i, (f, t)) in data.iter().enumerate() {
            let b = reduce_one(
                &project(f, p).expect("widths match"),
                hiermol::fusion::Reduction::All,
            )
            .unwrap();
            tok.row_mut(i).assign(&b.tokens.row(0));
            txt.row_mut(i).assign(t);
        }
        matched_pair_rate(&tok, &txt)
    };
    let proj = align_projector(&data, cfg.d_llm, &acfg).map_err(|e| match e {
        hiermol::fusion::FusionError::Diverged(_) => runtime(e),
        other => validation(other),
    })?;
    let before = rate(&ProjectorParams::init(cfg.seed(), proj.d_gnn(), cfg.d_llm));
    proj.save(output).map_err(|e| param_err(output, e))?;
    summary(json!({
        "pairs": data.len(),
        "steps": acfg.steps,
        "matched_rate_before": before,
        "matched_rate_after": rate(&proj),
    }));
    Ok(())
}

pub fn eval(
    mode: TaskMode,
    pred: &Path,
    gt: &Path,
    records: Option<&Path>,
    summary_path: Option<&Path>,
) -> Result<(), CliError> {
    let report = evaluate_corpus(pred, gt, mode).map_err(|e| match e {
        CorpusError::Io(_) => runtime(e),
        other => validation(other),
    })?;
    if let Some(p) = records {
        write_file(p, report.records_jsonl().as_bytes())?;
    }
    let csv = report.summary_csv();
    if let Some(p) = summary_path {
        write_file(p, csv.as_bytes())?;
    }
    print!("{csv}");
    Ok(())
}

pub fn selfcheck(cfg: &RunConfig) -> Result<(), CliError> {
    let reports = selfcheck::run_all(cfg.seed());
    for r in &reports {
        println!("{}", serde_json::to_string(r).unwrap());
    }
    let failed: Vec<&str> = reports
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.name)
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(validation(format!(
            "selfcheck failed: {}",
            failed.join(", ")
        )))
    }
}
