//! `idscodec`: error-rate sweeps, per-position histograms and training-set
//! export driven by a JSON experiment config.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use idscodec_core::pipeline::{
    generate_training_set, per_position_histogram, run_experiment, write_histogram_csv,
    DatasetKind, DatasetOptions, ExperimentConfig, PipelineError,
};

#[derive(Parser)]
#[command(
    name = "idscodec",
    version,
    about = "Concatenated coding over insertion/deletion/substitution channels"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sweep the channel grid and report BER/SER per point.
    Run(RunArgs),
    /// Write a training dataset built from the configured pipeline.
    Dataset(DatasetArgs),
    /// Per-position symbol error rates for a fixed codeword.
    Hist(HistArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    allow_rare: bool,
    #[arg(long)]
    exclude_markers: bool,
    /// Output prefix, overriding the config.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Marker,
    MarkerMulti,
    Conv,
    Ecct,
}

#[derive(Args)]
struct DatasetArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "train")]
    name: String,
    /// Items to write; defaults to the config's trial count.
    #[arg(long)]
    count: Option<usize>,
    #[arg(long, value_enum)]
    kind: Option<KindArg>,
    #[arg(long)]
    aggregated: bool,
    #[arg(long)]
    drop_emission_factor: bool,
}

#[derive(Args)]
struct HistArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    allow_rare: bool,
    /// CSV path; printed to stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn load(c: &Common) -> Result<ExperimentConfig, PipelineError> {
    let mut cfg = ExperimentConfig::from_file(&c.config)?;
    if let Some(t) = c.trials {
        cfg.trials = t;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if c.threads.is_some() {
        cfg.threads = c.threads;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.cmd {
        Cmd::Run(a) => {
            let mut cfg = load(&a.common)?;
            cfg.allow_rare |= a.allow_rare;
            cfg.exclude_markers |= a.exclude_markers;
            if let Some(o) = a.output {
                // command-line paths are relative to the working directory
                cfg.output = Some(std::env::current_dir().map(|d| d.join(&o)).unwrap_or(o));
            }
            let rows = run_experiment(&cfg)?;
            println!("p_ins,p_del,p_sub,copies,trials,ber,ser,failures,wall_time_s");
            for r in rows {
                println!(
                    "{},{},{},{},{},{:.6e},{:.6e},{},{:.2}",
                    r.p_ins,
                    r.p_del,
                    r.p_sub,
                    r.copies,
                    r.trials,
                    r.ber,
                    r.ser,
                    r.failures,
                    r.wall_time_s
                );
            }
        }
        Cmd::Dataset(a) => {
            let cfg = load(&a.common)?;
            let opts = DatasetOptions {
                dir: a.out,
                name: a.name,
                count: a.count.unwrap_or(cfg.trials as usize),
                kind: a.kind.map(|k| match k {
                    KindArg::Marker => DatasetKind::Marker,
                    KindArg::MarkerMulti => DatasetKind::MarkerMulti,
                    KindArg::Conv => DatasetKind::Conv,
                    KindArg::Ecct => DatasetKind::Ecct,
                }),
                aggregated: a.aggregated,
                drop_emission_factor: a.drop_emission_factor,
            };
            let m = generate_training_set(&cfg, &opts)?;
            println!(
                "wrote {} items of kind {} to {}",
                m.count,
                m.header.kind,
                opts.dir.display()
            );
        }
        Cmd::Hist(a) => {
            let mut cfg = load(&a.common)?;
            cfg.allow_rare |= a.allow_rare;
            let hists = per_position_histogram(&cfg)?;
            match a.output {
                Some(p) => write_histogram_csv(&hists, &p)?,
                None => {
                    println!("p_ins,p_del,p_sub,position,marker_distance,ser");
                    for h in &hists {
                        for (i, s) in h.ser.iter().enumerate() {
                            let d = h
                                .marker_distance
                                .as_ref()
                                .map(|v| v[i].to_string())
                                .unwrap_or_default();
                            println!("{},{},{},{i},{d},{s:.6e}", h.p_ins, h.p_del, h.p_sub);
                        }
                    }
                }
            }
            for h in &hists {
                eprintln!(
                    "mean ser {:.6e} +- {:.2e} at p_ins={} p_del={}",
                    h.mean_ser, h.mean_ser_stderr, h.p_ins, h.p_del
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
