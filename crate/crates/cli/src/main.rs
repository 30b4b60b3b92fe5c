use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use twlga_core::experiment::{
    run_compare, run_gen_instance, run_pipeline, run_scaling, run_single, ExperimentConfig,
    GenerateSpec, InstanceSource, PipelineConfig, COMPARE_CSV, SCALING_CSV, TRACE_CSV,
};
use twlga_core::sensor_pipeline::Calibration;

/// Genetic task scheduling experiments.
#[derive(Parser, Debug)]
#[command(name = "twlga", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON experiment manifest.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Comma-separated seeds; replaces the manifest's seed list.
    #[arg(long, global = true, value_delimiter = ',', num_args = 1..)]
    seed: Option<Vec<u64>>,
    /// Output directory; replaces the manifest's `out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every scheduler on every instance and seed.
    Compare,
    /// Simulate the size x node-count grid and check its orderings.
    Scaling {
        /// Use the manifest's overhead model as is instead of fitting one.
        #[arg(long)]
        no_calibrate: bool,
        /// CSV of measured `size_mb,nodes,makespan_s` rows.
        #[arg(long)]
        observations: Option<PathBuf>,
    },
    /// Merge sensor traces by year and extract temperatures.
    Pipeline {
        /// Directory of trace files.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, requires_all = ["slope", "t0"])]
        lambda0: Option<f64>,
        #[arg(long, requires_all = ["lambda0", "t0"])]
        slope: Option<f64>,
        #[arg(long, requires_all = ["lambda0", "slope"])]
        t0: Option<f64>,
        /// Keep the day column in the extracted CSV.
        #[arg(long)]
        keep_day: bool,
    },
    /// Write generated instances as JSON; one per seed when seeds are given.
    GenInstance {
        #[arg(long)]
        tasks: Option<usize>,
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long)]
        heterogeneity: Option<f64>,
        #[arg(long)]
        count: Option<usize>,
    },
    /// Evolve one instance and write the per-generation trace.
    Run,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let common = cli.common.clone();
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seeds) = &common.seed {
        cfg.seeds = seeds.clone();
    }
    if let Some(out) = &common.out {
        cfg.out = Some(out.clone());
    }

    match cli.command {
        Command::Compare => {
            let report = run_compare(&cfg)?;
            println!(
                "{} rows -> {}",
                report.rows.len(),
                out_path(&cfg, COMPARE_CSV).display()
            );
            for s in &report.summary {
                println!(
                    "{:<12} mean makespan {:>10.3}  median {:>10.3}  optimal {}/{}",
                    s.scheduler.name(),
                    s.mean_makespan,
                    s.median_makespan,
                    s.optimal_runs,
                    s.runs
                );
            }
        }
        Command::Scaling {
            no_calibrate,
            observations,
        } => {
            let mut scaling = cfg.scaling.clone().unwrap_or_default();
            if no_calibrate {
                scaling.calibrate = false;
            }
            if observations.is_some() {
                scaling.observations = observations;
            }
            cfg.scaling = Some(scaling);
            let outcome = run_scaling(&cfg)?;
            println!("{}", outcome.verdict_line());
            println!("grid -> {}", out_path(&cfg, SCALING_CSV).display());
        }
        Command::Pipeline {
            input,
            lambda0,
            slope,
            t0,
            keep_day,
        } => {
            let calibration = match (lambda0, slope, t0) {
                (Some(l), Some(s), Some(t)) => Some(Calibration::new(l, s, t)?),
                _ => cfg.pipeline.as_ref().map(|p| p.calibration),
            };
            let input_dir = input.or_else(|| cfg.pipeline.as_ref().map(|p| p.input_dir.clone()));
            let (Some(calibration), Some(input_dir)) = (calibration, input_dir) else {
                bail!("pipeline needs an input directory and a calibration (manifest or flags)");
            };
            let keep_day = keep_day || cfg.pipeline.as_ref().is_some_and(|p| p.keep_day);
            cfg.pipeline = Some(PipelineConfig {
                input_dir,
                calibration,
                keep_day,
            });
            let s = run_pipeline(&cfg)?;
            println!(
                "{} files, {} records in; {} files, {} records out",
                s.files_in, s.records_in, s.files_out, s.records_out
            );
        }
        Command::GenInstance {
            tasks,
            nodes,
            heterogeneity,
            count,
        } => {
            let mut shape = match cfg.instances.take() {
                Some(InstanceSource::Generate(g)) => g,
                Some(InstanceSource::Files(_)) => {
                    bail!("gen-instance needs a `generate` instance source")
                }
                None => GenerateSpec {
                    count: 1,
                    tasks: tasks.context("--tasks is required without a manifest")?,
                    nodes: nodes.context("--nodes is required without a manifest")?,
                    heterogeneity: 4.0,
                    seed: 0,
                    usage: None,
                },
            };
            shape.tasks = tasks.unwrap_or(shape.tasks);
            shape.nodes = nodes.unwrap_or(shape.nodes);
            shape.heterogeneity = heterogeneity.unwrap_or(shape.heterogeneity);
            shape.count = count.unwrap_or(shape.count);
            let shapes: Vec<GenerateSpec> = match &common.seed {
                Some(seeds) => seeds
                    .iter()
                    .map(|&seed| GenerateSpec {
                        seed,
                        count: 1,
                        ..shape.clone()
                    })
                    .collect(),
                None => vec![shape],
            };
            for shape in shapes {
                cfg.instances = Some(InstanceSource::Generate(shape));
                for p in run_gen_instance(&cfg)? {
                    println!("{}", p.display());
                }
            }
        }
        Command::Run => {
            let trace = run_single(&cfg)?;
            println!(
                "best makespan {} after {} generations -> {}",
                trace.best_makespan(),
                trace.generations.len() - 1,
                out_path(&cfg, TRACE_CSV).display()
            );
            println!("best schedule: {}", trace.best);
        }
    }
    Ok(())
}

fn out_path(cfg: &ExperimentConfig, file: &str) -> PathBuf {
    cfg.out.clone().unwrap_or_default().join(file)
}
