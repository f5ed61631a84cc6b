//! `routemix ingest`: raw records to a corpus file.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;

use clap::Args;

use routemix::corpus::{parse_records, segment, Corpus, TimeBinScheme};

use crate::config::{hours_to_secs, FileConfig};
use crate::manifest::Manifest;
use crate::{CliError, CliResult};

#[derive(Args, Debug)]
pub struct IngestArgs {
    /// Input records, one object,location,timestamp per line.
    #[arg(long)]
    pub input: PathBuf,
    /// Output corpus file.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub settings: IngestFlags,
    /// Optional key = value config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Preprocessing flags, shared with sweep.
#[derive(Args, Clone, Debug, Default)]
pub struct IngestFlags {
    /// Split a trajectory when neighbors are further apart than this
    /// (default 3600 seconds).
    #[arg(long = "gap-seconds")]
    pub gap_seconds: Option<i64>,
    /// Drop segments shorter than this many locations (default 3).
    #[arg(long = "min-len")]
    pub min_len: Option<usize>,
    /// Sequence order r (default 2).
    #[arg(long)]
    pub order: Option<usize>,
    /// Time bin size in hours; must divide 24 (default 2).
    #[arg(long = "bin-hours")]
    pub bin_hours: Option<u32>,
    /// Local-time offset from UTC in hours (default 0).
    #[arg(long = "tz-offset")]
    pub tz_offset: Option<f64>,
}

pub struct IngestSettings {
    pub gap_seconds: i64,
    pub min_len: usize,
    pub order: usize,
    pub scheme: TimeBinScheme,
    pub tz_offset_secs: i64,
}

impl IngestFlags {
    pub fn build(&self, file: &FileConfig) -> CliResult<IngestSettings> {
        let gap_seconds = file.resolve(self.gap_seconds, "gap-seconds", 3600)?;
        let min_len = file.resolve(self.min_len, "min-len", 3)?;
        let order = file.resolve(self.order, "order", 2)?;
        let bin_hours = file.resolve(self.bin_hours, "bin-hours", 2)?;
        let tz_offset = file.resolve(self.tz_offset, "tz-offset", 0.0)?;
        if gap_seconds <= 0 {
            return Err(CliError::Usage("gap-seconds must be positive".into()));
        }
        if order < 1 {
            return Err(CliError::Usage("order must be >= 1".into()));
        }
        Ok(IngestSettings {
            gap_seconds,
            min_len,
            order,
            scheme: TimeBinScheme::new(bin_hours)?,
            tz_offset_secs: hours_to_secs(tz_offset),
        })
    }

    pub fn record(manifest: &mut Manifest, s: &IngestSettings) {
        manifest.set("gap-seconds", s.gap_seconds);
        manifest.set("min-len", s.min_len);
        manifest.set("order", s.order);
        manifest.set("bin-hours", s.scheme.bin_hours());
        manifest.set("tz-offset", s.tz_offset_secs as f64 / 3600.0);
    }
}

/// Shared by ingest and sweep: parse, segment, and build in one go.
pub fn ingest_corpus(input: &PathBuf, settings: &IngestSettings) -> CliResult<Corpus> {
    let file = File::open(input)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", input.display())))?;
    let records = parse_records(BufReader::new(file), settings.tz_offset_secs)?;
    let trajectories = segment(&records, settings.gap_seconds, settings.min_len);
    Ok(Corpus::build(
        &trajectories,
        settings.order,
        settings.scheme,
        settings.tz_offset_secs,
    )?)
}

pub fn run(args: IngestArgs) -> CliResult<()> {
    let file_cfg = FileConfig::load(args.config.as_deref())?;
    let settings = args.settings.build(&file_cfg)?;
    let corpus = ingest_corpus(&args.input, &settings)?;

    let out = File::create(&args.out)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", args.out.display())))?;
    let mut w = BufWriter::new(out);
    routemix::corpus::write_corpus(&mut w, &corpus)?;
    w.flush()?;

    eprintln!(
        "ingested {} trajectories, {} units, {} sequences, {} objects, {} locations",
        corpus.num_trajectories(),
        corpus.total_units(),
        corpus.num_sequences(),
        corpus.num_objects(),
        corpus.vocab.num_locations(),
    );

    let mut manifest = Manifest::new("ingest");
    manifest.set_file("input", &args.input)?;
    IngestFlags::record(&mut manifest, &settings);
    manifest.set_file("out", &args.out)?;
    manifest.write_beside(&args.out)?;
    Ok(())
}
