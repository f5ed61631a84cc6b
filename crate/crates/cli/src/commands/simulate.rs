//! `routemix simulate`: sample a synthetic corpus from the generative
//! process, optionally persisting the generating parameters.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::Args;

use routemix::eval::location_frequency;
use routemix::model::{simulate, PersistMode, SavedModel};

use crate::config::FileConfig;
use crate::manifest::Manifest;
use crate::{CliError, CliResult};

use super::{effective_seed, write_model_file, ModelFlags};

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Output corpus file.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the generating model here.
    #[arg(long = "truth-out")]
    pub truth_out: Option<PathBuf>,
    /// Vocabulary size: number of distinct sequences (default 200).
    #[arg(long)]
    pub sequences: Option<usize>,
    /// Number of distinct objects (default 20).
    #[arg(long)]
    pub objects: Option<usize>,
    /// Total time bins; 48 / bins must divide 24 (default 24).
    #[arg(long)]
    pub bins: Option<u32>,
    /// Number of trajectories (default 2000).
    #[arg(long)]
    pub trajectories: Option<usize>,
    /// Units per trajectory (default 10).
    #[arg(long = "units-per-traj")]
    pub units_per_traj: Option<usize>,
    /// Sequences sharing each synthetic context (default 4).
    #[arg(long)]
    pub fanout: Option<usize>,
    /// Sequence order r of the synthetic locations (default 2).
    #[arg(long)]
    pub order: Option<usize>,
    /// RNG seed; generated and recorded when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub model: ModelFlags,
    /// Optional key = value config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn run(args: SimulateArgs) -> CliResult<()> {
    let file_cfg = FileConfig::load(args.config.as_deref())?;
    let order = file_cfg.resolve(args.order, "order", 2)?;
    let cfg = args.model.build(&file_cfg, order)?;
    let sequences = file_cfg.resolve(args.sequences, "sequences", 200)?;
    let objects = file_cfg.resolve(args.objects, "objects", 20)?;
    let bins = file_cfg.resolve(args.bins, "bins", 24)?;
    let trajectories = file_cfg.resolve(args.trajectories, "trajectories", 2000)?;
    let units_per_traj = file_cfg.resolve(args.units_per_traj, "units-per-traj", 10)?;
    let fanout = file_cfg.resolve(args.fanout, "fanout", 4)?;
    let seed = effective_seed(args.seed, &file_cfg)?;

    let sim = simulate(
        &cfg,
        sequences,
        objects,
        bins,
        trajectories,
        units_per_traj,
        fanout,
        seed,
    )?;

    let out = File::create(&args.out)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", args.out.display())))?;
    let mut w = BufWriter::new(out);
    routemix::corpus::write_corpus(&mut w, &sim.corpus)?;
    w.flush()?;

    if let Some(truth_path) = &args.truth_out {
        let loc_freq = location_frequency(&sim.corpus.trajectories, &sim.corpus.vocab);
        let truth = SavedModel {
            cfg: cfg.clone(),
            vocab: sim.corpus.vocab.clone(),
            scheme: sim.corpus.scheme,
            tz_offset_secs: sim.corpus.tz_offset_secs,
            params: sim.truth.clone(),
            loc_freq,
        };
        write_model_file(truth_path, &truth, PersistMode::Binary)?;
    }

    eprintln!(
        "simulated {} trajectories x {} units (k={}, S={}, O={}, B={})",
        trajectories, units_per_traj, cfg.k, sequences, objects, bins
    );

    let mut manifest = Manifest::new("simulate");
    ModelFlags::record(&mut manifest, &cfg);
    manifest.set("order", order);
    manifest.set("sequences", sequences);
    manifest.set("objects", objects);
    manifest.set("bins", bins);
    manifest.set("trajectories", trajectories);
    manifest.set("units-per-traj", units_per_traj);
    manifest.set("fanout", fanout);
    manifest.set("seed", seed);
    if let Some(truth_path) = &args.truth_out {
        manifest.set_file("truth-out", truth_path)?;
    }
    manifest.set_file("out", &args.out)?;
    manifest.write_beside(&args.out)?;
    Ok(())
}
