use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use blmix::corpus::LABELS_FILE;
use blmix::{
    coherence_report, evaluate_clustering, load_dtm, preprocess as preprocess_texts, sample_corpus, save_dtm,
    Algorithm, BetaSlot, ClusteringEval, CoherenceReport, DocLengthLaw, DocumentTermMatrix, FitConfig, FitResult,
    MixtureHyperparams, PhiAlphaRule, PreprocessConfig, Stemmer,
};
use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::output::{write_atomic, write_json};
use crate::{
    AlgorithmArg, BetaSlotArg, CliError, EvalArgs, FitArgs, LengthLaw, ModelArgs, PhiAlphaArg, PreprocessArgs,
    PriorArg, SweepArgs, SynthArgs,
};

pub const FIT_FILE: &str = "fit.json";
pub const TRACE_FILE: &str = "elbo.csv";
pub const EVAL_FILE: &str = "eval.json";
pub const TRUTH_FILE: &str = "truth.json";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const SUMMARY_HEADER: &str = "delta,best_elbo,accuracy,ari,mean_coherence,mean_runtime_seconds";

type CliResult<T> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn require_readable(path: &Path, what: &str) -> CliResult<()> {
    match fs::metadata(path) {
        Ok(_) => Ok(()),
        Err(e) => Err(usage(format!("cannot read {what} {}: {e}", path.display()))),
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read(path)
        .map(|b| String::from_utf8_lossy(&b).into_owned())
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn read_label_file(path: &Path) -> CliResult<Vec<String>> {
    Ok(read_text(path)?.lines().map(|l| l.trim().to_owned()).collect())
}

fn sorted_entries(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let rd = fs::read_dir(dir).map_err(|e| usage(format!("cannot read {}: {e}", dir.display())))?;
    let mut out = Vec::new();
    for entry in rd {
        let entry = entry.map_err(|e| usage(format!("cannot read {}: {e}", dir.display())))?;
        if !entry.file_name().to_string_lossy().starts_with('.') {
            out.push(entry.path());
        }
    }
    out.sort();
    Ok(out)
}

fn rel_name(path: &Path, root: &Path) -> String {
    path.strip_prefix(root).unwrap_or(path).to_string_lossy().into_owned()
}

struct RawCorpus {
    texts: Vec<String>,
    ids: Vec<String>,
    labels: Option<Vec<String>>,
}

/// Documents from a directory (one per file; category subdirectories give
/// labels) or from a file with one document per non-empty line.
fn read_corpus(input: &Path) -> CliResult<RawCorpus> {
    require_readable(input, "input")?;
    if input.is_file() {
        let text = read_text(input)?;
        let (ids, texts): (Vec<String>, Vec<String>) = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(k, l)| ((k + 1).to_string(), l.to_owned()))
            .unzip();
        return Ok(RawCorpus {
            texts,
            ids,
            labels: None,
        });
    }
    let entries = sorted_entries(input)?;
    let (dirs, files): (Vec<PathBuf>, Vec<PathBuf>) = entries.into_iter().partition(|p| p.is_dir());
    let mut raw = RawCorpus {
        texts: Vec::new(),
        ids: Vec::new(),
        labels: None,
    };
    if dirs.is_empty() {
        for f in files {
            raw.texts.push(read_text(&f)?);
            raw.ids.push(rel_name(&f, input));
        }
        return Ok(raw);
    }
    if !files.is_empty() {
        warn!("ignoring {} files outside category directories", files.len());
    }
    let mut labels = Vec::new();
    for d in dirs {
        let category = rel_name(&d, input);
        for f in sorted_entries(&d)?.into_iter().filter(|p| p.is_file()) {
            raw.texts.push(read_text(&f)?);
            raw.ids.push(rel_name(&f, input));
            labels.push(category.clone());
        }
    }
    raw.labels = Some(labels);
    Ok(raw)
}

#[derive(Serialize)]
struct PreprocessReport<'a> {
    input: &'a Path,
    labels: Option<&'a Path>,
    config: &'a PreprocessConfig,
    stats: blmix::CorpusStats,
}

pub fn preprocess(args: &PreprocessArgs) -> CliResult<()> {
    if !(0.0..1.0).contains(&args.min_doc_freq) {
        return Err(usage(format!("--min-doc-freq must lie in [0, 1), got {}", args.min_doc_freq)));
    }
    if args.min_token_len == 0 || args.min_token_len > args.max_token_len {
        return Err(usage("token lengths must satisfy 0 < --min-token-len <= --max-token-len"));
    }
    let raw = read_corpus(&args.input)?;
    if raw.texts.is_empty() {
        return Err(CliError::Runtime(format!("no documents found in {}", args.input.display())));
    }
    let labels = match &args.labels {
        Some(path) => {
            let l = read_label_file(path)?;
            if l.len() != raw.texts.len() {
                return Err(usage(format!(
                    "{} has {} labels for {} documents",
                    path.display(),
                    l.len(),
                    raw.texts.len()
                )));
            }
            Some(l)
        }
        None => raw.labels,
    };
    let config = PreprocessConfig {
        min_token_len: args.min_token_len,
        max_token_len: args.max_token_len,
        stemmer: if args.no_stem { Stemmer::None } else { Stemmer::EnglishSnowball },
        min_doc_freq: args.min_doc_freq,
        ..PreprocessConfig::default()
    };
    let mut dtm = preprocess_texts(&raw.texts, &config)?.with_doc_ids(raw.ids)?;
    if let Some(l) = labels {
        dtm = dtm.with_labels(l)?;
    }
    let stats = dtm.stats()?;
    save_dtm(&dtm, &args.out)?;
    let report = PreprocessReport {
        input: &args.input,
        labels: args.labels.as_deref(),
        config: &config,
        stats,
    };
    write_json(&args.out.join("preprocess.json"), &report)?;
    println!("{}", serde_json::to_string(&stats).expect("stats serialize"));
    Ok(())
}

#[derive(Serialize)]
struct SynthConfig {
    groups: usize,
    vocab_size: usize,
    docs: usize,
    doc_length: usize,
    length_law: LengthLaw,
    delta: f64,
    seed: u64,
}

#[derive(Serialize)]
struct Truth {
    config: SynthConfig,
    hyperparams: MixtureHyperparams<f64>,
    true_labels: Vec<usize>,
    true_weights: Vec<f64>,
    true_topics: blmix::Matrix<f64>,
}

pub fn synth(args: &SynthArgs) -> CliResult<()> {
    if args.docs == 0 {
        return Err(usage("--docs must be at least 1"));
    }
    if args.doc_length == 0 {
        return Err(usage("--doc-length must be at least 1"));
    }
    let hyper = MixtureHyperparams::<f64>::beta_liouville(args.groups, args.vocab_size, args.delta)
        .map_err(|e| usage(e.to_string()))?;
    let law = match args.length_law {
        LengthLaw::Poisson => DocLengthLaw::Poisson(args.doc_length as f64),
        LengthLaw::Fixed => DocLengthLaw::Fixed(args.doc_length),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let corpus = sample_corpus(&hyper, args.docs, law, &mut rng)?;
    save_dtm(&corpus.dtm, &args.out)?;
    let truth = Truth {
        config: SynthConfig {
            groups: args.groups,
            vocab_size: args.vocab_size,
            docs: args.docs,
            doc_length: args.doc_length,
            length_law: args.length_law,
            delta: args.delta,
            seed: args.seed,
        },
        hyperparams: hyper,
        true_labels: corpus.true_labels,
        true_weights: corpus.true_weights,
        true_topics: corpus.true_topics,
    };
    write_json(&args.out.join(TRUTH_FILE), &truth)?;
    println!("{}", serde_json::to_string(&corpus.dtm.stats()?).expect("stats serialize"));
    Ok(())
}

fn hyperparams(model: &ModelArgs, p: usize, delta: Option<f64>) -> CliResult<MixtureHyperparams<f64>> {
    let h = match (model.prior, delta) {
        (PriorArg::Dirichlet, Some(_)) => return Err(usage("--delta applies only to --prior bl")),
        (PriorArg::Dirichlet, None) => MixtureHyperparams::dirichlet(model.groups, p),
        (PriorArg::Bl, d) => MixtureHyperparams::beta_liouville(model.groups, p, d.unwrap_or(0.0)),
    };
    h.map_err(|e| usage(e.to_string()))
}

fn fit_config(model: &ModelArgs) -> CliResult<FitConfig> {
    let config = FitConfig {
        algorithm: match model.algorithm {
            AlgorithmArg::Svi => Algorithm::Svi,
            AlgorithmArg::Cavi => Algorithm::Cavi,
        },
        max_iter: model.iters,
        kappa: model.kappa,
        restarts: model.restarts,
        seed: model.seed,
        elbo_every: model.elbo_every,
        tol: model.tol,
        phi_alpha_rule: match model.phi_alpha {
            PhiAlphaArg::Conjugate => PhiAlphaRule::Conjugate,
            PhiAlphaArg::Fixed => PhiAlphaRule::Fixed,
        },
        beta_slot: match model.beta_slot {
            BetaSlotArg::Last => BetaSlot::Last,
            BetaSlotArg::LeastFrequent => BetaSlot::LeastFrequent,
        },
    };
    config.validate().map_err(|e| usage(e.to_string()))?;
    Ok(config)
}

fn load_matrix(dir: &Path) -> CliResult<DocumentTermMatrix> {
    require_readable(dir, "matrix directory")?;
    Ok(load_dtm(dir)?)
}

/// Fits and writes `fit.json` and `elbo.csv` into `out`.
fn run_fit(dtm: &DocumentTermMatrix, model: &ModelArgs, delta: Option<f64>, out: &Path) -> CliResult<FitResult<f64>> {
    let hyper = hyperparams(model, dtm.n_terms(), delta)?;
    let config = fit_config(model)?;
    let result = blmix::fit(dtm, &hyper, &config)?;
    write_json(&out.join(FIT_FILE), &result)?;
    write_atomic(&out.join(TRACE_FILE), result.elbo_csv().as_bytes())?;
    Ok(result)
}

pub fn fit(args: &FitArgs) -> CliResult<()> {
    // Flag checks come before any file is read.
    hyperparams(&args.model, 2, args.delta)?;
    fit_config(&args.model)?;
    let dtm = load_matrix(&args.dtm)?;
    let result = run_fit(&dtm, &args.model, args.delta, &args.out)?;
    println!(
        "best restart {} of {}: final ELBO {:.6}, mean {:.3} s per restart",
        result.best_restart + 1,
        result.restarts.len(),
        result.final_elbo(),
        result.runtime_seconds
    );
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct EvalConfig {
    fit: PathBuf,
    dtm: PathBuf,
    labels: Option<PathBuf>,
    top: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EvalReport {
    config: EvalConfig,
    n_docs: usize,
    groups: usize,
    /// Category names; label `k` in the accuracy computation is entry `k - 1`.
    label_names: Option<Vec<String>>,
    clustering: Option<ClusteringEval>,
    coherence: CoherenceReport,
}

/// Scores `fit` against `dtm` (the matrix it was fitted on, before dropping
/// empty documents) and optional per-document labels.
fn run_eval(
    fit: &FitResult<f64>,
    dtm: &DocumentTermMatrix,
    labels: Option<Vec<String>>,
    top: usize,
    config: EvalConfig,
) -> CliResult<EvalReport> {
    let n_fit = fit.assignments.len();
    if dtm.n_terms() != fit.topic_estimates.cols() {
        return Err(CliError::Runtime(format!(
            "the matrix has {} terms but the fit has {}",
            dtm.n_terms(),
            fit.topic_estimates.cols()
        )));
    }
    if top < 2 || top > dtm.n_terms() {
        return Err(usage(format!("--top must lie in 2..={}", dtm.n_terms())));
    }
    let dropped: BTreeSet<usize> = fit.dropped_docs.iter().copied().collect();
    if dtm.n_docs() != n_fit + dropped.len() {
        return Err(CliError::Runtime(format!(
            "the matrix has {} documents but the fit covers {n_fit} plus {} dropped",
            dtm.n_docs(),
            dropped.len()
        )));
    }
    let keep: Vec<usize> = (0..dtm.n_docs()).filter(|i| !dropped.contains(i)).collect();
    let kept = dtm.select_rows(&keep)?;

    let labels = match labels {
        Some(l) if l.len() == dtm.n_docs() => Some(keep.iter().map(|&i| l[i].clone()).collect::<Vec<_>>()),
        Some(l) if l.len() == n_fit => Some(l),
        Some(l) => {
            return Err(CliError::Runtime(format!(
                "{} labels for {n_fit} fitted documents; dropped document indices (0-based): {:?}",
                l.len(),
                fit.dropped_docs
            )))
        }
        None => None,
    };
    let groups = fit.weight_estimates.len();
    let (label_names, clustering) = match labels {
        Some(l) => {
            let names: Vec<String> = l.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
            let truth: Vec<usize> = l
                .iter()
                .map(|x| names.binary_search(x).expect("name present") + 1)
                .collect();
            let k = groups.max(names.len());
            let eval = if truth.len() >= 2 {
                Some(evaluate_clustering(&truth, &fit.assignments, k)?)
            } else {
                warn!("fewer than two labeled documents; skipping accuracy and ARI");
                None
            };
            (Some(names), eval)
        }
        None => {
            info!("no labels available; reporting coherence only");
            (None, None)
        }
    };
    let coherence = coherence_report(&kept, &fit.topic_estimates, &fit.weight_estimates, top)?;
    Ok(EvalReport {
        config,
        n_docs: n_fit,
        groups,
        label_names,
        clustering,
        coherence,
    })
}

fn load_fit(path: &Path) -> CliResult<FitResult<f64>> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn labels_for(dtm: &DocumentTermMatrix, explicit: Option<&Path>) -> CliResult<Option<Vec<String>>> {
    match explicit {
        Some(p) => read_label_file(p).map(Some),
        None => Ok(dtm.labels().map(<[String]>::to_vec)),
    }
}

pub fn eval(args: &EvalArgs) -> CliResult<()> {
    let fit = load_fit(&args.fit)?;
    let dtm = load_matrix(&args.dtm)?;
    let labels = labels_for(&dtm, args.labels.as_deref())?;
    let labels_path = args
        .labels
        .clone()
        .or_else(|| dtm.labels().map(|_| args.dtm.join(LABELS_FILE)));
    let config = EvalConfig {
        fit: args.fit.clone(),
        dtm: args.dtm.clone(),
        labels: labels_path,
        top: args.top,
    };
    let report = run_eval(&fit, &dtm, labels, args.top, config)?;
    write_json(&args.out, &report)?;
    match &report.clustering {
        Some(c) => println!(
            "accuracy {:.4}, ARI {:.4}, mean coherence {:.4}",
            c.accuracy, c.ari, report.coherence.mean_coherence
        ),
        None => println!("mean coherence {:.4}", report.coherence.mean_coherence),
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct SweepRow {
    delta: f64,
    best_elbo: Option<f64>,
    accuracy: Option<f64>,
    ari: Option<f64>,
    mean_coherence: Option<f64>,
    mean_runtime_seconds: Option<f64>,
    directory: PathBuf,
    error: Option<String>,
}

#[derive(Serialize)]
struct SweepReport<'a> {
    dtm: &'a Path,
    labels: Option<&'a Path>,
    top: usize,
    fit_config: FitConfig,
    groups: usize,
    deltas: &'a [f64],
    rows: &'a [SweepRow],
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn sweep(args: &SweepArgs) -> CliResult<()> {
    if args.model.prior != PriorArg::Bl {
        return Err(usage("sweep varies δ and needs --prior bl"));
    }
    if args.deltas.is_empty() {
        return Err(usage("--deltas is empty"));
    }
    if let Some(d) = args.deltas.iter().find(|d| !(d.is_finite() && **d > -1.0)) {
        return Err(usage(format!("every δ must exceed -1, got {d}")));
    }
    let fit_cfg = fit_config(&args.model)?;
    let dtm = load_matrix(&args.dtm)?;
    let labels = labels_for(&dtm, args.labels.as_deref())?;

    let rows: Vec<SweepRow> = args
        .deltas
        .par_iter()
        .map(|&delta| {
            let dir = args.out.join(format!("delta_{delta:+.3}"));
            let outcome = run_fit(&dtm, &args.model, Some(delta), &dir).and_then(|fit| {
                let config = EvalConfig {
                    fit: dir.join(FIT_FILE),
                    dtm: args.dtm.clone(),
                    labels: args.labels.clone(),
                    top: args.top,
                };
                let report = run_eval(&fit, &dtm, labels.clone(), args.top, config)?;
                write_json(&dir.join(EVAL_FILE), &report)?;
                Ok((fit, report))
            });
            match outcome {
                Ok((fit, report)) => SweepRow {
                    delta,
                    best_elbo: Some(fit.final_elbo()),
                    accuracy: report.clustering.as_ref().map(|c| c.accuracy),
                    ari: report.clustering.as_ref().map(|c| c.ari),
                    mean_coherence: Some(report.coherence.mean_coherence),
                    mean_runtime_seconds: Some(fit.runtime_seconds),
                    directory: dir,
                    error: None,
                },
                Err(CliError::Usage(e) | CliError::Runtime(e)) => {
                    warn!("δ = {delta} failed: {e}");
                    SweepRow {
                        delta,
                        best_elbo: None,
                        accuracy: None,
                        ari: None,
                        mean_coherence: None,
                        mean_runtime_seconds: None,
                        directory: dir,
                        error: Some(e),
                    }
                }
            }
        })
        .collect();

    let mut csv = String::from(SUMMARY_HEADER);
    csv.push('\n');
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.delta,
            cell(r.best_elbo),
            cell(r.accuracy),
            cell(r.ari),
            cell(r.mean_coherence),
            cell(r.mean_runtime_seconds)
        ));
    }
    write_atomic(&args.out.join(SUMMARY_FILE), csv.as_bytes())?;
    let report = SweepReport {
        dtm: &args.dtm,
        labels: args.labels.as_deref(),
        top: args.top,
        fit_config: fit_cfg,
        groups: args.model.groups,
        deltas: &args.deltas,
        rows: &rows,
    };
    write_json(&args.out.join("sweep.json"), &report)?;
    print!("{csv}");
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        return Err(CliError::Runtime(format!("{failed} of {} δ values failed", rows.len())));
    }
    Ok(())
}
