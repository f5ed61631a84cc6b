//! `routemix inspect`: print a model's top sequences, objects, and time bins
//! per latent factor.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::Args;

use routemix::eval::{bin_display, inspect_factor, sequence_display};

use crate::config::FileConfig;
use crate::{CliError, CliResult};

use super::{fmt6, read_model_file};

#[derive(Args, Debug)]
pub struct InspectArgs {
    /// Trained model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Inspect a single factor (default: all).
    #[arg(long)]
    pub factor: Option<usize>,
    /// Entries per list (default 10).
    #[arg(long)]
    pub q: Option<usize>,
    /// Write the tables here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional key = value config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn run(args: InspectArgs) -> CliResult<()> {
    let file_cfg = FileConfig::load(args.config.as_deref())?;
    let model = read_model_file(&args.model)?;
    let q = file_cfg.resolve(args.q, "q", 10)?;

    let factors: Vec<usize> = match args.factor {
        Some(f) => vec![f],
        None => (0..model.cfg.k).collect(),
    };

    let mut text = String::new();
    for &k in &factors {
        let view = inspect_factor(&model.params, k, q)?;
        text.push_str(&format!("latent factor {k}\n"));
        text.push_str("  top sequences\n");
        for (seq, p) in &view.sequences {
            text.push_str(&format!(
                "    {}  {}\n",
                fmt6(*p),
                sequence_display(&model.vocab, *seq)
            ));
        }
        text.push_str("  top objects\n");
        for (obj, p) in &view.objects {
            text.push_str(&format!(
                "    {}  {}\n",
                fmt6(*p),
                model.vocab.objects.decode(*obj)
            ));
        }
        text.push_str("  top time bins\n");
        for (bin, p) in &view.bins {
            text.push_str(&format!(
                "    {}  {}\n",
                fmt6(*p),
                bin_display(model.scheme, *bin)
            ));
        }
    }

    match &args.out {
        Some(path) => {
            let file = File::create(path)
                .map_err(|e| CliError::Data(format!("cannot create {}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            w.write_all(text.as_bytes())?;
            w.flush()?;
        }
        None => print!("{text}"),
    }
    Ok(())
}
