//! Command-line entry points.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use lyricnet_core::data::{clean_corpus, normalize_popularity, synth_dataset, Corpus, ModalityMask, SynthConfig};
use lyricnet_core::eval::{compute_metrics, residual_report, run_ablation, run_scv, MetricsReport, ScvOutcome};
use lyricnet_core::fusion::{plan_split, ModelKind, PipelineConfig, TrainedPipeline};
use lyricnet_core::pooling::Pooling;
use serde::Serialize;

use crate::checkpoint::{
    check_corpus, checkpoint_to_pipeline, pipeline_to_checkpoint, CheckpointContainer, CheckpointManifest,
};
use crate::config::{load_config, print_config, set};
use crate::corpus_io::{load_corpus, save_corpus, CorpusFormat};
use crate::error::{Error, Result};
use crate::manifest::RunManifest;
use crate::report::{self, AblationRow, MetricsSummary};
use crate::sidecar::{attach_embeddings, read_ltok, EmbeddingSidecar};

#[derive(Debug, Parser)]
#[command(name = "lyricnet", version, about = "Multimodal music-popularity regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic corpus with planted per-modality signal.
    Synth(SynthArgs),
    /// Cross-validate a pipeline and save the selected fold's model.
    Train(TrainArgs),
    /// Score a checkpoint on a corpus.
    Eval(EvalArgs),
    /// Cross-validate every modality mask of a list over one shared split.
    Ablate(AblateArgs),
    /// Residual, calibration, artist-segment and year-wise error tables.
    Report(EvalArgs),
    /// Pool `LTOK` token matrices into an `LEMB` sidecar.
    Pool(PoolArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub embedding_dim: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// jsonl or binary; inferred from the extension (`.bin`, `.lnc`) when omitted.
    #[arg(long)]
    pub format: Option<String>,
    /// Add the six stylometric columns.
    #[arg(long)]
    pub stylometrics: bool,
    /// Drop release years from every record.
    #[arg(long)]
    pub no_release_year: bool,
    /// Write embeddings to this `LEMB` sidecar instead of inline.
    #[arg(long)]
    pub embeddings_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// jsonl or binary; detected from the file when omitted.
    #[arg(long)]
    pub corpus_format: Option<String>,
    /// Abort on the first invalid record instead of skipping it.
    #[arg(long)]
    pub strict: bool,
    /// `LEMB` sidecar providing every track's lyric embedding.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Source label recorded for sidecar embeddings (default: the sidecar file name).
    #[arg(long)]
    pub embedding_source: Option<String>,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Train the single-autoencoder baseline.
    #[arg(long, conflicts_with = "full")]
    pub baseline: bool,
    /// Train the fusion pipeline (default).
    #[arg(long)]
    pub full: bool,
    /// Modality mask, e.g. `HH,LL,LR,M`.
    #[arg(long)]
    pub mask: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_folds: Option<usize>,
    /// Override one config key (`key=value`); repeatable, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    pub print_config: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Repeat with root seeds seed, seed+1, ... and report mean and std.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub seeds: u64,
    /// Independent runs to execute in parallel.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: u64,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Accept a corpus other than the training one and score all of its records.
    #[arg(long)]
    pub any_corpus: bool,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Semicolon-separated masks, e.g. `HH,LL,LR,M;HH,LL,M;LR,M` (default: all 15).
    #[arg(long)]
    pub masks: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub seeds: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: u64,
}

#[derive(Debug, Args)]
pub struct PoolArgs {
    /// One `LTOK` file per track; the file stem is the track id.
    #[arg(required = true)]
    pub tokens: Vec<PathBuf>,
    /// mean, max or concat (max block then CLS row).
    #[arg(long, default_value = "mean")]
    pub strategy: String,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (program name first), runs the command and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => cmd_synth(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Ablate(a) => cmd_ablate(&a),
        Command::Report(a) => cmd_report(&a),
        Command::Pool(a) => cmd_pool(&a),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn format_for(path: &Path, explicit: Option<&str>) -> Result<CorpusFormat> {
    if let Some(f) = explicit {
        return f.parse();
    }
    Ok(match path.extension().and_then(|e| e.to_str()) {
        Some("bin" | "lnc" | "lnc1") => CorpusFormat::Binary,
        _ => CorpusFormat::Jsonl,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LabelStats {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

/// Summary of normalised popularity labels.
pub fn label_stats(corpus: &Corpus) -> LabelStats {
    let y: Vec<f64> = corpus.records.iter().map(|r| r.popularity_raw as f64 / 100.0).collect();
    let s = report::MeanStd::of(&y);
    LabelStats {
        n: y.len(),
        mean: s.mean,
        std: s.std,
        min: y.iter().copied().fold(f64::INFINITY, f64::min),
        max: y.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        with_stylometrics: a.stylometrics,
        ..SynthConfig::new(a.n as usize, a.seed, a.embedding_dim)
    };
    let mut corpus = synth_dataset(&cfg);
    if a.no_release_year {
        for r in &mut corpus.records {
            r.release_year = None;
        }
    }
    if let Some(side) = &a.embeddings_out {
        if a.embedding_dim == 0 {
            return Err(Error::Usage("--embeddings-out needs --embedding-dim > 0".into()));
        }
        EmbeddingSidecar::from_corpus(&corpus).write(side)?;
        corpus.header.embedding_dim = 0;
        corpus.header.embedding_source.clear();
        for r in &mut corpus.records {
            r.lyric_embedding = None;
        }
    }
    save_corpus(&a.out, &corpus, format_for(&a.out, a.format.as_deref())?)?;
    let s = label_stats(&corpus);
    println!("wrote {} tracks to {}", s.n, a.out.display());
    println!(
        "popularity (normalised): mean {:.4}  std {:.4}  min {:.2}  max {:.2}  (generator mean {:.4})",
        s.mean, s.std, s.min, s.max, cfg.label_mean
    );
    let mut langs = std::collections::BTreeMap::<&str, usize>::new();
    for r in &corpus.records {
        *langs.entry(r.language.as_str()).or_default() += 1;
    }
    let langs: Vec<String> = langs.iter().map(|(l, c)| format!("{l} {c}")).collect();
    println!("languages: {}", langs.join(", "));
    println!("embedding dim: {}", a.embedding_dim);
    Ok(())
}

/// Loads, attaches sidecar embeddings and cleans a corpus, reporting skipped records.
pub fn prepare_corpus(a: &CorpusArgs) -> Result<Corpus> {
    let format = a.corpus_format.as_deref().map(str::parse).transpose()?;
    let loaded = load_corpus(&a.corpus, format, a.strict)?;
    for issue in &loaded.issues {
        eprintln!(
            "warning: {}: {}: skipped{}: {}",
            a.corpus.display(),
            issue.location,
            issue.track_id.as_ref().map(|id| format!(" `{id}`")).unwrap_or_default(),
            issue.detail
        );
    }
    let mut corpus = loaded.corpus;
    if let Some(side) = &a.embeddings {
        let sidecar = EmbeddingSidecar::read(side)?;
        let label = a.embedding_source.clone().unwrap_or_else(|| {
            side.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default()
        });
        attach_embeddings(&mut corpus, &sidecar, &label)?;
    }
    let (records, tally) = clean_corpus(std::mem::take(&mut corpus.records));
    if tally.rejected() > 0 {
        eprintln!(
            "cleaning: kept {}, dropped {} too short, {} too long, {} language",
            tally.kept, tally.too_short, tally.too_long, tally.language
        );
    }
    corpus.records = records;
    Ok(corpus)
}

/// Defaults, then the config file, then dedicated flags, then `--set` overrides.
pub fn resolve_config(a: &ConfigArgs) -> Result<PipelineConfig> {
    let mut c = match &a.config {
        Some(p) => load_config(p, PipelineConfig::default())?,
        None => PipelineConfig::default(),
    };
    if a.baseline {
        c.model = ModelKind::Baseline;
    }
    if a.full {
        c.model = ModelKind::Full;
    }
    if let Some(m) = &a.mask {
        c.modality_mask = m.parse()?;
    }
    if let Some(s) = a.seed {
        c.seed = s;
    }
    if let Some(k) = a.max_folds {
        c.max_folds = Some(k);
    }
    for kv in &a.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        set(&mut c, k, v)?;
    }
    c.validate().map_err(|e| Error::Usage(format!("config: {e}")))?;
    Ok(c)
}

/// Runs `f` over `items` on up to `jobs` threads, keeping input order.
fn parallel_map<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    if jobs <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    let chunk = items.len().div_ceil(jobs);
    std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|c| {
                let f = &f;
                s.spawn(move || c.iter().map(f).collect::<Vec<R>>())
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    })
}

fn seed_configs(base: &PipelineConfig, seeds: u64) -> Vec<PipelineConfig> {
    (0..seeds)
        .map(|i| PipelineConfig {
            seed: base.seed.wrapping_add(i),
            ..base.clone()
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedRun {
    pub seed: u64,
    pub manifest_hash: String,
    pub report: MetricsReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainSummary {
    pub manifest_hash: String,
    pub fusion_input_width: usize,
    pub report: MetricsReport,
    pub runs: Vec<SeedRun>,
    pub summary: Option<MetricsSummary>,
}

fn cmd_train(a: &TrainArgs) -> Result<()> {
    let config = resolve_config(&a.config)?;
    if a.config.print_config {
        print!("{}", print_config(&config));
        return Ok(());
    }
    let out = a.out.as_ref().ok_or_else(|| Error::Usage("--out is required".into()))?;
    let corpus = prepare_corpus(&a.corpus)?;
    let configs = seed_configs(&config, a.seeds);
    let results = parallel_map(&configs, a.jobs as usize, |c| -> Result<(RunManifest, ScvOutcome)> {
        let split = plan_split(&corpus, c)?;
        Ok((RunManifest::new(c, &corpus, &split), run_scv(&corpus, c)?))
    });
    let results: Vec<(RunManifest, ScvOutcome)> = results.into_iter().collect::<Result<_>>()?;
    ensure_dir(out)?;
    let runs: Vec<SeedRun> = results
        .iter()
        .map(|(m, o)| SeedRun {
            seed: m.config.seed,
            manifest_hash: m.hash(),
            report: o.report.clone(),
        })
        .collect();
    let (manifest, outcome) = &results[0];
    let hash = manifest.hash();
    let short = manifest.short_hash();
    let p = &outcome.pipeline;
    pipeline_to_checkpoint(p, manifest, Some(&outcome.report))?.save(&out.join("model.lnckpt"))?;
    report::write_json(
        &out.join("manifest.json"),
        &serde_json::json!({ "hash": hash, "manifest": manifest }),
    )?;
    report::metrics_csv(&out.join("metrics.csv"), &outcome.report, &hash)?;
    report::folds_csv(&out.join("folds.csv"), &outcome.report, &hash)?;
    report::fusion_history_csv(&out.join("fusion_history.csv"), &p.history, &hash)?;
    for (name, ae) in [
        ("audio_ae", &p.audio_ae),
        ("lyrics_ae", &p.lyrics_ae),
        ("baseline_ae", &p.baseline_ae),
    ] {
        if let Some(ae) = ae {
            report::ae_history_csv(&out.join(format!("{name}_history.csv")), &ae.loss_history, &hash)?;
        }
    }
    let summary = (runs.len() > 1).then(|| MetricsSummary::of(&runs.iter().map(|r| &r.report).collect::<Vec<_>>()));
    let r = &outcome.report;
    let mut log = String::new();
    log.push_str(&format!(
        "model {} mask {} fold {} input width {} [manifest {short}]\n",
        manifest.config.model,
        manifest.config.modality_mask,
        outcome.report.selected_fold,
        p.regressor.input_dim()
    ));
    log.push_str(&format!(
        "MAE train {:.6} val {:.6} test {:.6} [manifest {short}]\n",
        r.mae_train, r.mae_val, r.mae_test
    ));
    log.push_str(&format!(
        "MSE train {:.6} val {:.6} test {:.6} [manifest {short}]\n",
        r.mse_train, r.mse_val, r.mse_test
    ));
    log.push_str(&format!("test MAE exact {:?} [manifest {short}]\n", r.mae_test));
    if let Some(s) = &summary {
        log.push_str(&format!(
            "over {} seeds: test MAE {:.6} ± {:.6}, test MSE {:.6} ± {:.6}\n",
            runs.len(),
            s.mae_test.mean,
            s.mae_test.std,
            s.mse_test.mean,
            s.mse_test.std
        ));
    }
    print!("{log}");
    std::fs::write(out.join("train.log"), &log).map_err(|e| Error::io(out, e))?;
    report::write_json(
        &out.join("metrics.json"),
        &TrainSummary {
            manifest_hash: hash.clone(),
            fusion_input_width: p.regressor.input_dim(),
            report: outcome.report.clone(),
            runs,
            summary,
        },
    )?;
    Ok(())
}

/// Loaded checkpoint, prepared corpus and the records to score with their targets.
struct Scored {
    manifest: CheckpointManifest,
    ids: Vec<String>,
    preds: Vec<f32>,
    targets: Vec<f32>,
    rows: Vec<usize>,
    corpus: Corpus,
    subset: &'static str,
}

fn score(a: &EvalArgs) -> Result<Scored> {
    let container = CheckpointContainer::load(&a.checkpoint)?;
    let (pipeline, manifest) = checkpoint_to_pipeline(&container)?;
    let corpus = prepare_corpus(&a.corpus)?;
    check_corpus(&manifest, &corpus, a.any_corpus)?;
    let preds_all = predict_all(&pipeline, &corpus)?;
    let same = !a.any_corpus || crate::manifest::corpus_fingerprint(&corpus) == manifest.run.corpus_fingerprint;
    let (rows, subset): (Vec<usize>, _) = if same {
        let split = plan_split(&corpus, &pipeline.config)?;
        if split.fingerprint() != manifest.run.split_fingerprint {
            return Err(Error::Integrity(format!(
                "split fingerprint mismatch: checkpoint {}, rebuilt {}",
                manifest.run.split_fingerprint,
                split.fingerprint()
            )));
        }
        let rows = corpus
            .records
            .iter()
            .enumerate()
            .filter(|(_, r)| split.test_ids.contains(&r.track_id))
            .map(|(i, _)| i)
            .collect();
        (rows, "test")
    } else {
        ((0..corpus.records.len()).collect(), "all")
    };
    Ok(Scored {
        ids: rows.iter().map(|&i| corpus.records[i].track_id.clone()).collect(),
        preds: rows.iter().map(|&i| preds_all[i]).collect(),
        targets: rows
            .iter()
            .map(|&i| normalize_popularity(corpus.records[i].popularity_raw as f32))
            .collect::<std::result::Result<_, _>>()?,
        rows,
        manifest,
        corpus,
        subset,
    })
}

/// Whole-corpus prediction, the same computation cross-validation scores.
fn predict_all(p: &TrainedPipeline, corpus: &Corpus) -> Result<Vec<f32>> {
    Ok(p.predict_batch(&corpus.records)?)
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let s = score(a)?;
    let m = compute_metrics(&s.preds, &s.targets)?;
    let short = &s.manifest.run_hash[..12];
    println!(
        "{} set: n {}  MAE {:.6}  MSE {:.6} [manifest {short}]",
        s.subset,
        s.preds.len(),
        m.mae,
        m.mse
    );
    println!("{} MAE exact {:?} [manifest {short}]", s.subset, m.mae);
    if let Some(logged) = &s.manifest.metrics {
        if s.subset == "test" {
            println!("logged test MAE {:?}", logged.mae_test);
        }
    }
    if let Some(out) = &a.out {
        ensure_dir(out)?;
        report::write_json(
            &out.join("eval.json"),
            &serde_json::json!({
                "manifest_hash": s.manifest.run_hash,
                "subset": s.subset,
                "n": s.preds.len(),
                "metrics": m,
            }),
        )?;
    }
    Ok(())
}

fn cmd_report(a: &EvalArgs) -> Result<()> {
    let s = score(a)?;
    let records: Vec<_> = s.rows.iter().map(|&i| s.corpus.records[i].clone()).collect();
    let r = residual_report(&s.preds, &s.targets, &records)?;
    let hash = &s.manifest.run_hash;
    let short = &hash[..12];
    println!(
        "{} set: n {}  MAE {:.6}  MSE {:.6}  mean actual {:.4}  mean predicted {:.4} [manifest {short}]",
        s.subset, r.n, r.metrics.mae, r.metrics.mse, r.mean_actual, r.mean_predicted
    );
    println!(
        "tails: predicted <{} {:.3} >{} {:.3}; actual <{} {:.3} >{} {:.3} [manifest {short}]",
        lyricnet_core::eval::TAIL_LOW,
        r.tail_fractions.predicted_below,
        lyricnet_core::eval::TAIL_HIGH,
        r.tail_fractions.predicted_above,
        lyricnet_core::eval::TAIL_LOW,
        r.tail_fractions.actual_below,
        lyricnet_core::eval::TAIL_HIGH,
        r.tail_fractions.actual_above
    );
    if let Some(seg) = &r.segment_mae {
        for g in seg {
            println!(
                "segment {:<4} n {:>5}  MAE {:.6} [manifest {short}]",
                g.segment, g.count, g.mae
            );
        }
    }
    match &r.yearwise {
        Some(y) => println!("year-wise: {} years reported", y.len()),
        None => println!("year-wise: absent"),
    }
    for n in &r.notices {
        println!("notice: {n}");
    }
    if let Some(out) = &a.out {
        ensure_dir(out)?;
        report::write_json(
            &out.join("residual_report.json"),
            &serde_json::json!({ "manifest_hash": hash, "subset": s.subset, "report": r }),
        )?;
        report::residual_csvs(out, &s.ids, &s.preds, &s.targets, &r, hash)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationOutput {
    pub manifest_hash: String,
    pub seeds: Vec<u64>,
    pub masks: Vec<AblationEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationEntry {
    pub modality_mask: ModalityMask,
    pub summary: MetricsSummary,
    pub runs: Vec<SeedRun>,
}

fn cmd_ablate(a: &AblateArgs) -> Result<()> {
    let config = resolve_config(&a.config)?;
    if a.config.print_config {
        print!("{}", print_config(&config));
        return Ok(());
    }
    let masks = match &a.masks {
        Some(s) => ModalityMask::parse_list(s)?,
        None => ModalityMask::all_nonempty(),
    };
    let corpus = prepare_corpus(&a.corpus)?;
    let configs = seed_configs(&config, a.seeds);
    let results = parallel_map(&configs, a.jobs as usize, |c| -> Result<(RunManifest, Vec<_>)> {
        let split = plan_split(&corpus, c)?;
        Ok((RunManifest::new(c, &corpus, &split), run_ablation(&corpus, &masks, c)?))
    });
    let results: Vec<_> = results.into_iter().collect::<Result<_>>()?;
    let root_hash = results[0].0.hash();
    let short = &root_hash[..12];
    let mut entries = Vec::new();
    for (i, &mask) in masks.iter().enumerate() {
        let runs: Vec<SeedRun> = results
            .iter()
            .map(|(m, cells)| SeedRun {
                seed: m.config.seed,
                manifest_hash: m.hash(),
                report: cells[i].report.clone(),
            })
            .collect();
        let summary = MetricsSummary::of(&runs.iter().map(|r| &r.report).collect::<Vec<_>>());
        entries.push(AblationEntry {
            modality_mask: mask,
            summary,
            runs,
        });
    }
    println!("{:<12} {:>10} {:>10} {:>10}", "mask", "val MAE", "test MAE", "± std");
    for e in &entries {
        println!(
            "{:<12} {:>10.6} {:>10.6} {:>10.6} [manifest {short}]",
            e.modality_mask.to_string(),
            e.summary.mae_val.mean,
            e.summary.mae_test.mean,
            e.summary.mae_test.std
        );
    }
    if let Some(out) = &a.out {
        ensure_dir(out)?;
        let rows: Vec<AblationRow> = entries
            .iter()
            .map(|e| AblationRow {
                modality_mask: e.modality_mask.to_string(),
                seeds: e.runs.len(),
                mae_train_mean: e.summary.mae_train.mean,
                mae_val_mean: e.summary.mae_val.mean,
                mae_test_mean: e.summary.mae_test.mean,
                mae_test_std: e.summary.mae_test.std,
                mse_test_mean: e.summary.mse_test.mean,
                mse_test_std: e.summary.mse_test.std,
                manifest_hash: root_hash.clone(),
            })
            .collect();
        report::write_csv(&out.join("ablation.csv"), &rows)?;
        let manifests: Vec<&RunManifest> = results.iter().map(|(m, _)| m).collect();
        report::write_json(&out.join("manifests.json"), &manifests)?;
        report::write_json(
            &out.join("ablation.json"),
            &AblationOutput {
                manifest_hash: root_hash.clone(),
                seeds: configs.iter().map(|c| c.seed).collect(),
                masks: entries,
            },
        )?;
    }
    Ok(())
}

fn cmd_pool(a: &PoolArgs) -> Result<()> {
    let strategy = match a.strategy.to_ascii_lowercase().as_str() {
        "mean" => Pooling::Mean,
        "max" => Pooling::Max,
        "concat" | "concat_max_cls" => Pooling::ConcatMaxCls,
        s => return Err(Error::Usage(format!("unknown pooling `{s}` (mean, max or concat)"))),
    };
    let mut entries = Vec::new();
    for path in &a.tokens {
        let m = read_ltok(path)?;
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .ok_or_else(|| Error::Usage(format!("{}: no file name", path.display())))?;
        entries.push((id, strategy.apply(&m)?));
    }
    let dim = entries[0].1.len();
    if let Some((id, v)) = entries.iter().find(|(_, v)| v.len() != dim) {
        return Err(Error::data(
            None,
            id.as_str(),
            format!("pooled width {} differs from {dim}", v.len()),
        ));
    }
    EmbeddingSidecar { dim, entries }.write(&a.out)?;
    println!(
        "pooled {} token matrices to width {dim} into {}",
        a.tokens.len(),
        a.out.display()
    );
    Ok(())
}
