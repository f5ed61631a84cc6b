//! `routemix predict`: rank next locations for one object's recent records.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;

use clap::Args;

use routemix::corpus::{extract_units, parse_records, Trajectory};
use routemix::eval::{frequency_ranking, Predictor, Ranking};
use routemix::sampler::FoldInGlobals;

use crate::config::FileConfig;
use crate::manifest::Manifest;
use crate::{CliError, CliResult};

use super::{effective_seed, fmt6, read_model_file};

#[derive(Args, Debug)]
pub struct PredictArgs {
    /// Trained model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Records of a single object's recent trajectory, same format as
    /// `ingest` input; the last r locations form the prediction context.
    #[arg(long)]
    pub input: PathBuf,
    /// Number of locations to return (default 5).
    #[arg(long)]
    pub topn: Option<usize>,
    /// Fold-in sweeps (default 20).
    #[arg(long = "fold-in-iterations")]
    pub fold_in_iterations: Option<usize>,
    /// RNG seed; generated and recorded when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Location score aggregation: max (default) or sum.
    #[arg(long)]
    pub aggregation: Option<String>,
    /// Write the ranking here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional key = value config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn run(args: PredictArgs) -> CliResult<()> {
    let file_cfg = FileConfig::load(args.config.as_deref())?;
    let model = read_model_file(&args.model)?;
    let topn = file_cfg.resolve(args.topn, "topn", 5)?;
    let fold_in_iterations =
        file_cfg.resolve(args.fold_in_iterations, "fold-in-iterations", 20)?;
    let seed = effective_seed(args.seed, &file_cfg)?;
    let aggregation = match file_cfg.resolve_opt(args.aggregation.clone(), "aggregation")? {
        Some(raw) => routemix::eval::Aggregation::parse(&raw)?,
        None => routemix::eval::Aggregation::Max,
    };

    let file = File::open(&args.input)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", args.input.display())))?;
    let records = parse_records(BufReader::new(file), model.tz_offset_secs)?;
    if records.is_empty() {
        return Err(CliError::Data("no records in input".into()));
    }
    let object_name = records[0].object.clone();
    if records.iter().any(|r| r.object != object_name) {
        return Err(CliError::Data(
            "prediction input must contain a single object".into(),
        ));
    }
    let mut points: Vec<(String, i64)> = records
        .into_iter()
        .map(|r| (r.location, r.timestamp))
        .collect();
    points.sort_by(|a, b| (a.1, &a.0).cmp(&(b.1, &b.0)));

    let order = model.vocab.order;
    if points.len() < order {
        return Err(CliError::Data(format!(
            "prefix supplies {} locations, prediction needs at least the last {order}",
            points.len()
        )));
    }

    // Units of the prefix (empty when the prefix is exactly r long).
    let traj = Trajectory {
        object: object_name.clone(),
        points: points.clone(),
    };
    let mut vocab_view = model.vocab.clone();
    let prefix_units = if points.len() > order {
        extract_units(&traj, model.scheme, model.tz_offset_secs, &mut vocab_view, true)?.units
    } else {
        Vec::new()
    };

    // Query bin: the last unit's bin, or the bin of the mean of the last r
    // timestamps when the prefix has no full window.
    let bin = match prefix_units.last() {
        Some(u) => u.bin,
        None => {
            let tail = &points[points.len() - order..];
            let mean = tail.iter().map(|p| p.1).sum::<i64>().div_euclid(tail.len() as i64);
            model.scheme.bin(mean, model.tz_offset_secs)
        }
    };
    let object = model.vocab.objects.get(&object_name);

    // Context: the last r locations, if all are known to the vocabulary.
    let context: Option<Vec<u32>> = points[points.len() - order..]
        .iter()
        .map(|(l, _)| model.vocab.locations.get(l))
        .collect();

    let predictor = Predictor::new(
        &model.params,
        FoldInGlobals::Params(&model.params),
        &model.vocab,
        &model.cfg,
        model.loc_freq.clone(),
    );
    let ranking: Ranking = match context {
        Some(ctx) => {
            let mut p = predictor;
            p.aggregation = aggregation;
            p.fold_in_iterations = fold_in_iterations;
            p.predict(&prefix_units, &ctx, object, bin, topn, seed)?
        }
        None => frequency_ranking(&model.loc_freq, topn),
    };
    if ranking.frequency_fallback {
        eprintln!("context unseen in training; falling back to popularity ranking");
    }

    let mut table = String::from("rank\tlocation\tscore\n");
    for (rank, (loc, score)) in ranking.entries.iter().enumerate() {
        table.push_str(&format!(
            "{}\t{}\t{}\n",
            rank + 1,
            model.vocab.locations.decode(*loc),
            fmt6(*score)
        ));
    }
    match &args.out {
        Some(path) => {
            let file = File::create(path)
                .map_err(|e| CliError::Data(format!("cannot create {}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            w.write_all(table.as_bytes())?;
            w.flush()?;

            let mut manifest = Manifest::new("predict");
            manifest.set_file("model", &args.model)?;
            manifest.set_file("input", &args.input)?;
            manifest.set("topn", topn);
            manifest.set("fold-in-iterations", fold_in_iterations);
            manifest.set("seed", seed);
            manifest.set("fallback", ranking.frequency_fallback);
            manifest.set_file("out", path)?;
            manifest.write_beside(path)?;
        }
        None => print!("{table}"),
    }
    Ok(())
}
