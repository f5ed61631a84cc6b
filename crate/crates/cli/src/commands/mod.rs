//! Subcommand implementations and the flag groups they share.

pub mod evaluate;
pub mod ingest;
pub mod inspect;
pub mod predict;
pub mod simulate;
pub mod sweep;
pub mod train;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use clap::Args;
use rand::Rng;

use routemix::corpus::Corpus;
use routemix::eval::{Aggregation, EvalConfig};
use routemix::model::{Components, ModelConfig, PersistMode, SavedModel};

use crate::config::{parse_list, FileConfig};
use crate::manifest::Manifest;
use crate::{CliError, CliResult};

/// Fixed-precision float formatting shared by all report writers, so the
/// same numbers render identically everywhere.
pub fn fmt6(x: f64) -> String {
    format!("{x:.6}")
}

/// Resolve the run seed: flag, then config file, then a generated seed
/// (recorded in the manifest either way).
pub fn effective_seed(flag: Option<u64>, file: &FileConfig) -> CliResult<u64> {
    match file.resolve_opt(flag, "seed")? {
        Some(seed) => Ok(seed),
        None => Ok(rand::rng().random()),
    }
}

pub fn read_corpus_file(path: &Path) -> CliResult<Corpus> {
    let file = File::open(path)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
    Ok(routemix::corpus::read_corpus(
        BufReader::new(file),
        &path.display().to_string(),
    )?)
}

pub fn read_model_file(path: &Path) -> CliResult<SavedModel> {
    let file = File::open(path)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
    Ok(routemix::model::read_params(
        BufReader::new(file),
        &path.display().to_string(),
    )?)
}

pub fn write_model_file(path: &Path, model: &SavedModel, mode: PersistMode) -> CliResult<()> {
    let file = File::create(path)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    routemix::model::write_params(&mut w, model, mode)?;
    w.flush()?;
    Ok(())
}

pub fn parse_mode(raw: &str) -> CliResult<PersistMode> {
    match raw {
        "text" => Ok(PersistMode::Text),
        "binary" => Ok(PersistMode::Binary),
        other => Err(CliError::Usage(format!(
            "unknown mode {other:?} (expected text or binary)"
        ))),
    }
}

/// Model hyperparameter flags shared by train, evaluate, simulate, and
/// sweep. All priors are symmetric per entry; `alpha` defaults to 50/k.
#[derive(Args, Clone, Debug, Default)]
pub struct ModelFlags {
    /// Number of latent factors (default 40).
    #[arg(long)]
    pub k: Option<usize>,
    /// Per-factor mixture prior (default 50/k).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Per-sequence prior (default 0.01).
    #[arg(long)]
    pub beta: Option<f64>,
    /// Per-object prior (default 0.01).
    #[arg(long)]
    pub eta: Option<f64>,
    /// Per-bin prior (default 0.01).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Active components: seq[,obj][,time] (default all three).
    #[arg(long)]
    pub components: Option<String>,
}

impl ModelFlags {
    pub fn build(&self, file: &FileConfig, order: usize) -> CliResult<ModelConfig> {
        let k = file.resolve(self.k, "k", 40)?;
        if k < 1 {
            return Err(CliError::Usage("k must be >= 1".into()));
        }
        let mut cfg = ModelConfig::new(k);
        cfg.order = order;
        if let Some(alpha) = file.resolve_opt(self.alpha, "alpha")? {
            cfg.alpha = vec![alpha; k];
        }
        cfg.beta = file.resolve(self.beta, "beta", cfg.beta)?;
        cfg.eta = file.resolve(self.eta, "eta", cfg.eta)?;
        cfg.gamma = file.resolve(self.gamma, "gamma", cfg.gamma)?;
        if let Some(raw) = file.resolve_opt(self.components.clone(), "components")? {
            cfg.components = Components::parse(&raw)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn record(manifest: &mut Manifest, cfg: &ModelConfig) {
        manifest.set("k", cfg.k);
        manifest.set("alpha", cfg.alpha[0]);
        manifest.set("beta", cfg.beta);
        manifest.set("eta", cfg.eta);
        manifest.set("gamma", cfg.gamma);
        manifest.set("components", cfg.components);
    }
}

/// Evaluation flags shared by evaluate and sweep.
#[derive(Args, Clone, Debug, Default)]
pub struct EvalFlags {
    /// Cross-validation folds (default 10, minimum 2).
    #[arg(long)]
    pub folds: Option<usize>,
    /// Gibbs sweeps per fold (default 100).
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Fold-in sweeps per test trajectory (default 20).
    #[arg(long = "fold-in-iterations")]
    pub fold_in_iterations: Option<usize>,
    /// Average the estimates of the last N sweeps (default 1).
    #[arg(long = "average-last")]
    pub average_last: Option<usize>,
    /// Comma-separated average-precision cutoffs (default 1,5).
    #[arg(long)]
    pub topn: Option<String>,
    /// Top sequences per factor for PMI (default 10).
    #[arg(long)]
    pub q: Option<usize>,
    /// PMI joint-count smoothing (default 1).
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Location score aggregation over candidate sequences: max or sum.
    #[arg(long)]
    pub aggregation: Option<String>,
}

impl EvalFlags {
    pub fn build(&self, file: &FileConfig, seed: u64) -> CliResult<EvalConfig> {
        let mut cfg = EvalConfig::new(seed);
        cfg.folds = file.resolve(self.folds, "folds", cfg.folds)?;
        cfg.iterations = file.resolve(self.iterations, "iterations", cfg.iterations)?;
        cfg.fold_in_iterations = file.resolve(
            self.fold_in_iterations,
            "fold-in-iterations",
            cfg.fold_in_iterations,
        )?;
        cfg.average_last = file.resolve(self.average_last, "average-last", cfg.average_last)?;
        if let Some(raw) = file.resolve_opt(self.topn.clone(), "topn")? {
            cfg.topns = parse_list(&raw)?;
        }
        cfg.q = file.resolve(self.q, "q", cfg.q)?;
        cfg.epsilon = file.resolve(self.epsilon, "epsilon", cfg.epsilon)?;
        if let Some(raw) = file.resolve_opt(self.aggregation.clone(), "aggregation")? {
            cfg.aggregation = Aggregation::parse(&raw)?;
        }
        Ok(cfg)
    }

    pub fn record(manifest: &mut Manifest, cfg: &EvalConfig) {
        manifest.set("folds", cfg.folds);
        manifest.set("iterations", cfg.iterations);
        manifest.set("fold-in-iterations", cfg.fold_in_iterations);
        manifest.set("average-last", cfg.average_last);
        let topn: Vec<String> = cfg.topns.iter().map(|n| n.to_string()).collect();
        manifest.set("topn", topn.join(","));
        manifest.set("q", cfg.q);
        manifest.set("epsilon", cfg.epsilon);
        manifest.set(
            "aggregation",
            match cfg.aggregation {
                Aggregation::Max => "max",
                Aggregation::Sum => "sum",
            },
        );
    }
}

/// Write an evaluation report as tab-separated text: one row per fold and
/// mean/stddev summary rows.
pub fn write_eval_report(path: &Path, report: &routemix::eval::EvalReport) -> CliResult<()> {
    let file = File::create(path)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);

    let mut header = vec!["fold".to_owned(), "instances".to_owned()];
    for n in &report.topns {
        header.push(format!("top{n}_ap"));
    }
    for n in &report.topns {
        header.push(format!("baseline_top{n}_ap"));
    }
    header.push("pmi".to_owned());
    writeln!(w, "{}", header.join("\t"))?;

    for fold in &report.folds {
        let mut row = vec![fold.fold.to_string(), fold.instances.to_string()];
        row.extend(fold.ap.iter().map(|&x| fmt6(x)));
        row.extend(fold.baseline_ap.iter().map(|&x| fmt6(x)));
        row.push(fmt6(fold.pmi));
        writeln!(w, "{}", row.join("\t"))?;
    }

    let (mean, std) = report.summary();
    let total: usize = report.folds.iter().map(|f| f.instances).sum();
    let mut row = vec!["mean".to_owned(), total.to_string()];
    row.extend(mean.ap.iter().map(|&x| fmt6(x)));
    row.extend(mean.baseline_ap.iter().map(|&x| fmt6(x)));
    row.push(fmt6(mean.pmi));
    writeln!(w, "{}", row.join("\t"))?;
    let mut row = vec!["stddev".to_owned(), "-".to_owned()];
    row.extend(std.ap.iter().map(|&x| fmt6(x)));
    row.extend(std.baseline_ap.iter().map(|&x| fmt6(x)));
    row.push(fmt6(std.pmi));
    writeln!(w, "{}", row.join("\t"))?;
    w.flush()?;
    Ok(())
}
