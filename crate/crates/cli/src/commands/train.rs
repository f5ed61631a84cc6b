//! `routemix train`: fit a model to a corpus and persist it.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::Args;

use routemix::eval::location_frequency;
use routemix::model::SavedModel;
use routemix::sampler::train;

use crate::config::FileConfig;
use crate::manifest::Manifest;
use crate::{CliError, CliResult};

use super::{effective_seed, parse_mode, read_corpus_file, write_model_file, ModelFlags};

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Corpus file from `ingest` or `simulate`.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Output model file.
    #[arg(long)]
    pub out: PathBuf,
    /// Gibbs sweeps (default 100).
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Average the estimates of the last N sweeps (default 1).
    #[arg(long = "average-last")]
    pub average_last: Option<usize>,
    /// RNG seed; generated and recorded when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub model: ModelFlags,
    /// Matrix encoding: binary (default) or text.
    #[arg(long)]
    pub mode: Option<String>,
    /// Write the per-iteration log-joint trace to this file.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Optional key = value config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn run(args: TrainArgs) -> CliResult<()> {
    let file_cfg = FileConfig::load(args.config.as_deref())?;
    let corpus = read_corpus_file(&args.corpus)?;
    let cfg = args.model.build(&file_cfg, corpus.vocab.order)?;
    let iterations = file_cfg.resolve(args.iterations, "iterations", 100)?;
    let average_last = file_cfg.resolve(args.average_last, "average-last", 1)?;
    let seed = effective_seed(args.seed, &file_cfg)?;
    let mode = parse_mode(&file_cfg.resolve(args.mode.clone(), "mode", "binary".to_owned())?)?;

    let (params, sampler) = train(&corpus, &cfg, iterations, average_last, seed)?;

    if let Some(trace_path) = &args.trace {
        let file = File::create(trace_path).map_err(|e| {
            CliError::Data(format!("cannot create {}: {e}", trace_path.display()))
        })?;
        let mut w = BufWriter::new(file);
        writeln!(w, "iteration\tlog_joint")?;
        for (i, lj) in sampler.log_joint_trace().iter().enumerate() {
            writeln!(w, "{}\t{}", i + 1, lj)?;
        }
        w.flush()?;
    }

    let loc_freq = location_frequency(&corpus.trajectories, &corpus.vocab);
    let model = SavedModel {
        cfg: cfg.clone(),
        vocab: corpus.vocab.clone(),
        scheme: corpus.scheme,
        tz_offset_secs: corpus.tz_offset_secs,
        params,
        loc_freq,
    };
    write_model_file(&args.out, &model, mode)?;

    eprintln!(
        "trained k={} on {} trajectories ({} units), {} sweeps, final log-joint {}",
        cfg.k,
        corpus.num_trajectories(),
        corpus.total_units(),
        iterations,
        sampler
            .log_joint_trace()
            .last()
            .map(|x| x.to_string())
            .unwrap_or_else(|| "n/a".into()),
    );

    let mut manifest = Manifest::new("train");
    manifest.set_file("corpus", &args.corpus)?;
    ModelFlags::record(&mut manifest, &cfg);
    manifest.set("iterations", iterations);
    manifest.set("average-last", average_last);
    manifest.set("seed", seed);
    manifest.set(
        "mode",
        match mode {
            routemix::model::PersistMode::Text => "text",
            routemix::model::PersistMode::Binary => "binary",
        },
    );
    if let Some(trace_path) = &args.trace {
        manifest.set_file("trace", trace_path)?;
    }
    manifest.set_file("out", &args.out)?;
    manifest.write_beside(&args.out)?;
    Ok(())
}
