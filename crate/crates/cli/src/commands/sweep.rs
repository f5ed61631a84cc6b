//! `routemix sweep`: evaluate across a list of values for one parameter,
//! holding everything else fixed.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use clap::Args;

use routemix::corpus::TimeBinScheme;
use routemix::eval::evaluate;

use crate::config::{parse_list, FileConfig};
use crate::manifest::Manifest;
use crate::{CliError, CliResult};

use super::ingest::{ingest_corpus, IngestFlags};
use super::{effective_seed, fmt6, write_eval_report, EvalFlags, ModelFlags};

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Raw records file; each run re-ingests with the swept settings.
    #[arg(long)]
    pub input: PathBuf,
    /// Parameter to sweep: k, order, or bin-hours.
    #[arg(long)]
    pub param: String,
    /// Comma-separated values to sweep over.
    #[arg(long)]
    pub values: String,
    /// Output table (tab-separated text).
    #[arg(long)]
    pub report: PathBuf,
    /// Concurrent runs (default 1).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// RNG seed shared by every run; generated and recorded when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub ingest: IngestFlags,
    #[command(flatten)]
    pub model: ModelFlags,
    #[command(flatten)]
    pub eval: EvalFlags,
    /// Also write each run's full evaluation report beside the table.
    #[arg(long = "per-run-reports")]
    pub per_run_reports: bool,
    /// Optional key = value config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Param {
    K,
    Order,
    BinHours,
}

impl Param {
    fn parse(raw: &str) -> CliResult<Self> {
        match raw {
            "k" => Ok(Param::K),
            "order" => Ok(Param::Order),
            "bin-hours" => Ok(Param::BinHours),
            other => Err(CliError::Usage(format!(
                "unknown sweep parameter {other:?} (expected k, order, or bin-hours)"
            ))),
        }
    }
}

struct Row {
    value: usize,
    top1: f64,
    top5: f64,
    pmi: f64,
    wall_secs: f64,
}

pub fn run(args: SweepArgs) -> CliResult<()> {
    let file_cfg = FileConfig::load(args.config.as_deref())?;
    let param = Param::parse(&args.param)?;
    let values = parse_list(&args.values)?;
    let jobs = file_cfg.resolve(args.jobs, "jobs", 1)?.max(1);
    let seed = effective_seed(args.seed, &file_cfg)?;

    // Reject invalid values before any run starts.
    for &v in &values {
        match param {
            Param::K if v < 1 => {
                return Err(CliError::Usage(format!("k value {v} must be >= 1")))
            }
            Param::Order if v < 1 => {
                return Err(CliError::Usage(format!("order value {v} must be >= 1")))
            }
            Param::BinHours => {
                TimeBinScheme::new(v as u32)?;
            }
            _ => {}
        }
    }

    // The sweep always reports top-1 and top-5 average precision.
    let run_one = |value: usize| -> CliResult<Row> {
        let mut ingest_flags = args.ingest.clone();
        match param {
            Param::Order => ingest_flags.order = Some(value),
            Param::BinHours => ingest_flags.bin_hours = Some(value as u32),
            Param::K => {}
        }
        let settings = ingest_flags.build(&file_cfg)?;
        let corpus = ingest_corpus(&args.input, &settings)?;

        let mut model_flags = args.model.clone();
        if param == Param::K {
            model_flags.k = Some(value);
        }
        let model_cfg = model_flags.build(&file_cfg, corpus.vocab.order)?;
        let mut eval_cfg = args.eval.build(&file_cfg, seed)?;
        eval_cfg.topns = vec![1, 5];

        let start = Instant::now();
        let report = evaluate(&corpus, &model_cfg, &eval_cfg)?;
        let wall_secs = start.elapsed().as_secs_f64();

        if args.per_run_reports {
            let mut name = args.report.file_name().unwrap_or_default().to_owned();
            name.push(format!(".{}-{}", args.param, value));
            write_eval_report(&args.report.with_file_name(name), &report)?;
        }

        let (mean, _) = report.summary();
        Ok(Row {
            value,
            top1: mean.ap[0],
            top5: mean.ap[1],
            pmi: mean.pmi,
            wall_secs,
        })
    };

    let rows: Vec<Row> = if jobs == 1 {
        let mut rows = Vec::with_capacity(values.len());
        for &v in &values {
            rows.push(run_one(v)?);
        }
        rows
    } else {
        let next = AtomicUsize::new(0);
        let slots: Mutex<Vec<Option<CliResult<Row>>>> =
            Mutex::new((0..values.len()).map(|_| None).collect());
        std::thread::scope(|scope| {
            for _ in 0..jobs.min(values.len()) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= values.len() {
                        break;
                    }
                    let row = run_one(values[i]);
                    slots.lock().unwrap()[i] = Some(row);
                });
            }
        });
        let mut rows = Vec::with_capacity(values.len());
        for slot in slots.into_inner().unwrap() {
            rows.push(slot.expect("worker finished every slot")?);
        }
        rows
    };

    let file = File::create(&args.report)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", args.report.display())))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{}\ttop1_ap\ttop5_ap\tpmi\twall_secs", args.param)?;
    for row in &rows {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}",
            row.value,
            fmt6(row.top1),
            fmt6(row.top5),
            fmt6(row.pmi),
            format_args!("{:.3}", row.wall_secs),
        )?;
    }
    w.flush()?;

    let mut manifest = Manifest::new("sweep");
    manifest.set_file("input", &args.input)?;
    manifest.set("param", &args.param);
    let values_text: Vec<String> = values.iter().map(|v| v.to_string()).collect();
    manifest.set("values", values_text.join(","));
    manifest.set("jobs", jobs);
    manifest.set("seed", seed);
    manifest.set_file("report", &args.report)?;
    manifest.write_beside(&args.report)?;
    Ok(())
}
