//! `routemix evaluate`: cross-validated prediction and coherence scores.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::Args;

use routemix::eval::{bin_display, evaluate, inspect_factor, sequence_display};
use routemix::sampler::train;

use crate::config::FileConfig;
use crate::manifest::Manifest;
use crate::{CliError, CliResult};

use super::{
    effective_seed, fmt6, read_corpus_file, write_eval_report, EvalFlags, ModelFlags,
};

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Corpus file from `ingest` or `simulate`.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Output report (tab-separated text).
    #[arg(long)]
    pub report: PathBuf,
    /// RNG seed; generated and recorded when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub model: ModelFlags,
    #[command(flatten)]
    pub eval: EvalFlags,
    /// Also train on the full corpus and dump per-factor top lists here.
    #[arg(long = "inspect-out")]
    pub inspect_out: Option<PathBuf>,
    /// Optional key = value config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn run(args: EvaluateArgs) -> CliResult<()> {
    let file_cfg = FileConfig::load(args.config.as_deref())?;
    let corpus = read_corpus_file(&args.corpus)?;
    let model_cfg = args.model.build(&file_cfg, corpus.vocab.order)?;
    let seed = effective_seed(args.seed, &file_cfg)?;
    let eval_cfg = args.eval.build(&file_cfg, seed)?;

    let report = evaluate(&corpus, &model_cfg, &eval_cfg)?;
    write_eval_report(&args.report, &report)?;

    let (mean, std) = report.summary();
    eprintln!(
        "evaluated {} folds: top-{} AP {} ± {}, PMI {} ± {}",
        eval_cfg.folds,
        report.topns[0],
        fmt6(mean.ap[0]),
        fmt6(std.ap[0]),
        fmt6(mean.pmi),
        fmt6(std.pmi),
    );

    if let Some(inspect_path) = &args.inspect_out {
        let (params, _) = train(
            &corpus,
            &model_cfg,
            eval_cfg.iterations,
            eval_cfg.average_last,
            seed,
        )?;
        let file = File::create(inspect_path).map_err(|e| {
            CliError::Data(format!("cannot create {}: {e}", inspect_path.display()))
        })?;
        let mut w = BufWriter::new(file);
        writeln!(
            w,
            "factor\trank\tsequence\tseq_prob\tobject\tobj_prob\ttime_bin\tbin_prob"
        )?;
        for k in 0..model_cfg.k {
            let view = inspect_factor(&params, k, eval_cfg.q)?;
            for rank in 0..view.sequences.len() {
                let (seq, seq_p) = view.sequences[rank];
                let obj = view.objects.get(rank);
                let bin = view.bins.get(rank);
                writeln!(
                    w,
                    "{k}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    rank + 1,
                    sequence_display(&corpus.vocab, seq),
                    fmt6(seq_p),
                    obj.map(|&(o, _)| corpus.vocab.objects.decode(o).to_owned())
                        .unwrap_or_else(|| "-".into()),
                    obj.map(|&(_, p)| fmt6(p)).unwrap_or_else(|| "-".into()),
                    bin.map(|&(b, _)| bin_display(corpus.scheme, b))
                        .unwrap_or_else(|| "-".into()),
                    bin.map(|&(_, p)| fmt6(p)).unwrap_or_else(|| "-".into()),
                )?;
            }
        }
        w.flush()?;
    }

    let mut manifest = Manifest::new("evaluate");
    manifest.set_file("corpus", &args.corpus)?;
    ModelFlags::record(&mut manifest, &model_cfg);
    EvalFlags::record(&mut manifest, &eval_cfg);
    manifest.set("seed", seed);
    if let Some(p) = &args.inspect_out {
        manifest.set_file("inspect-out", p)?;
    }
    manifest.set_file("report", &args.report)?;
    manifest.write_beside(&args.report)?;
    Ok(())
}
