//! Experiment manifests and the runs behind the command-line driver.
//!
//! Every run computes its full result in memory before touching the output
//! directory, so a failed run leaves no partial CSVs behind.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster_sim::{
    calibrate, compare_orderings, hadoop_scaling_observations, read_scaling_csv,
    scaling_experiment, write_scaling_csv, CalibrationReport, OverheadModel, RowVerdict,
    ScalingRow,
};
use crate::engine::{
    brute_force_optimum, evolve, fitness, schedule_fifo, schedule_random, schedule_round_robin,
    Chromosome, EvolutionTrace, FitnessMode, GaParams, BRUTE_FORCE_LIMIT,
};
use crate::error::{Error, Result};
use crate::sensor_pipeline::{
    extract, merge_by_year, write_extracted_csv, Calibration, ExtractedRow,
};
use crate::task_model::{generate_instance, Instance, ResourceUsage};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Compare,
    Scaling,
    Pipeline,
    SingleRun,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheduler {
    Twlga,
    TimeOnly,
    Fifo,
    Random,
    RoundRobin,
}

impl Scheduler {
    pub const ALL: [Scheduler; 5] = [
        Scheduler::Twlga,
        Scheduler::TimeOnly,
        Scheduler::Fifo,
        Scheduler::Random,
        Scheduler::RoundRobin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheduler::Twlga => "twlga",
            Scheduler::TimeOnly => "time_only",
            Scheduler::Fifo => "fifo",
            Scheduler::Random => "random",
            Scheduler::RoundRobin => "round_robin",
        }
    }
}

fn all_schedulers() -> Vec<Scheduler> {
    Scheduler::ALL.to_vec()
}

fn yes() -> bool {
    true
}

/// Parameters for a batch of generated instances. Instance `i` uses seed
/// `seed + i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateSpec {
    #[serde(default = "one")]
    pub count: usize,
    pub tasks: usize,
    pub nodes: usize,
    #[serde(default = "default_heterogeneity")]
    pub heterogeneity: f64,
    #[serde(default)]
    pub seed: u64,
    /// Replaces the generated resource usage of every node.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usage: Option<Vec<ResourceUsage>>,
}

fn one() -> usize {
    1
}

fn default_heterogeneity() -> f64 {
    4.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceSource {
    Generate(GenerateSpec),
    /// Instance JSON files, relative to the working directory.
    Files(Vec<PathBuf>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    #[serde(default = "default_sizes")]
    pub sizes_mb: Vec<f64>,
    #[serde(default = "default_node_counts")]
    pub node_counts: Vec<usize>,
    /// Used as is when `calibrate` is false, otherwise only its
    /// `data_node` is kept.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overhead: Option<OverheadModel>,
    #[serde(default = "yes")]
    pub calibrate: bool,
    /// CSV with `size_mb,nodes,makespan_s` to fit and judge against. The
    /// built-in Hadoop measurements are used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observations: Option<PathBuf>,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig {
            sizes_mb: default_sizes(),
            node_counts: default_node_counts(),
            overhead: None,
            calibrate: true,
            observations: None,
        }
    }
}

fn default_sizes() -> Vec<f64> {
    vec![160.0, 320.0, 640.0, 1300.0, 2600.0]
}

fn default_node_counts() -> Vec<usize> {
    vec![1, 2, 3]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub input_dir: PathBuf,
    pub calibration: Calibration,
    #[serde(default)]
    pub keep_day: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instances: Option<InstanceSource>,
    #[serde(default)]
    pub ga: GaParams,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default = "all_schedulers")]
    pub schedulers: Vec<Scheduler>,
    /// Adds the exhaustive optimum wherever the search space allows it.
    #[serde(default = "yes")]
    pub oracle: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pipeline: Option<PipelineConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mode: None,
            instances: None,
            ga: GaParams::default(),
            seeds: Vec::new(),
            schedulers: all_schedulers(),
            oracle: true,
            scaling: None,
            pipeline: None,
            out: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config {
            field: path.display().to_string(),
            message: e.to_string(),
        })
    }

    /// Checks the fields `mode` needs. A config that names a different mode
    /// than the one requested is rejected.
    pub fn validate_for(&self, mode: Mode) -> Result<()> {
        if let Some(m) = self.mode {
            if m != mode {
                return Err(Error::config(
                    "mode",
                    format!("config is for {m:?}, not {mode:?}"),
                ));
            }
        }
        self.ga
            .validate()
            .map_err(|e| Error::config("ga", e.to_string()))?;
        match mode {
            Mode::Compare | Mode::SingleRun => {
                if self.instances.is_none() {
                    return Err(Error::config("instances", "required"));
                }
                if self.seeds.is_empty() {
                    return Err(Error::config("seeds", "at least one seed is required"));
                }
                if mode == Mode::Compare && self.schedulers.is_empty() {
                    return Err(Error::config(
                        "schedulers",
                        "at least one scheduler is required",
                    ));
                }
                let mut unique = self.schedulers.clone();
                unique.sort();
                unique.dedup();
                if unique.len() != self.schedulers.len() {
                    return Err(Error::config("schedulers", "listed more than once"));
                }
                let mut seeds = self.seeds.clone();
                seeds.sort_unstable();
                seeds.dedup();
                if seeds.len() != self.seeds.len() {
                    return Err(Error::config("seeds", "listed more than once"));
                }
            }
            Mode::Scaling => {
                let s = self.scaling.clone().unwrap_or_default();
                if s.sizes_mb.is_empty() || s.sizes_mb.iter().any(|v| !(v.is_finite() && *v > 0.0))
                {
                    return Err(Error::config("scaling.sizes_mb", "need positive sizes"));
                }
                if s.node_counts.is_empty() || s.node_counts.contains(&0) {
                    return Err(Error::config(
                        "scaling.node_counts",
                        "need positive node counts",
                    ));
                }
                if !s.calibrate && s.overhead.is_none() {
                    return Err(Error::config(
                        "scaling.overhead",
                        "required when calibrate is false",
                    ));
                }
                if let Some(m) = &s.overhead {
                    m.validate()
                        .map_err(|e| Error::config("scaling.overhead", e.to_string()))?;
                }
            }
            Mode::Pipeline => {
                let p = self
                    .pipeline
                    .as_ref()
                    .ok_or_else(|| Error::config("pipeline", "required"))?;
                p.calibration
                    .validate()
                    .map_err(|e| Error::config("pipeline.calibration", e.to_string()))?;
            }
        }
        if self.out.is_none() {
            return Err(Error::config(
                "out",
                "no output directory (set `out` or pass --out)",
            ));
        }
        Ok(())
    }

    fn out_dir(&self) -> &Path {
        self.out.as_deref().expect("validated")
    }
}

/// Instances named by `source`, labelled for reports.
pub fn load_instances(source: &InstanceSource) -> Result<Vec<(String, Instance)>> {
    match source {
        InstanceSource::Generate(g) => {
            if g.count == 0 {
                return Err(Error::config(
                    "instances.generate.count",
                    "must be at least 1",
                ));
            }
            (0..g.count)
                .map(|i| {
                    let seed = g.seed.wrapping_add(i as u64);
                    let mut inst = generate_instance(g.tasks, g.nodes, g.heterogeneity, seed)
                        .map_err(|e| Error::config("instances.generate", e.to_string()))?;
                    if let Some(usage) = &g.usage {
                        inst = inst.with_usage(usage.clone()).map_err(|e| {
                            Error::config("instances.generate.usage", e.to_string())
                        })?;
                    }
                    Ok((format!("gen-{seed}"), inst))
                })
                .collect()
        }
        InstanceSource::Files(paths) => {
            if paths.is_empty() {
                return Err(Error::config("instances.files", "no files listed"));
            }
            paths
                .iter()
                .map(|p| {
                    let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                    let inst = Instance::from_json(&text).map_err(|e| Error::Config {
                        field: p.display().to_string(),
                        message: e.to_string(),
                    })?;
                    let label = p
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_else(|| p.display().to_string());
                    Ok((label, inst))
                })
                .collect()
        }
    }
}

/// One scheduler's result on one instance for one seed. Nodes are
/// zero-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub instance: String,
    pub seed: u64,
    pub scheduler: Scheduler,
    pub makespan: f64,
    pub bottleneck_node: usize,
    pub bottleneck_workload: f64,
    pub oracle_makespan: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchedulerSummary {
    pub scheduler: Scheduler,
    pub runs: usize,
    pub mean_makespan: f64,
    pub median_makespan: f64,
    pub mean_bottleneck_workload: f64,
    /// Runs that reached the exhaustive optimum, among runs that have one.
    pub optimal_runs: usize,
    pub mean_wall_time_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<CompareRow>,
    /// Wall time of each row's scheduler call, aligned with `rows`.
    pub wall_time_s: Vec<f64>,
    pub summary: Vec<SchedulerSummary>,
}

pub const COMPARE_CSV: &str = "compare.csv";
pub const SUMMARY_JSON: &str = "summary.json";

fn run_scheduler(
    scheduler: Scheduler,
    inst: &Instance,
    ga: &GaParams,
    seed: u64,
) -> Result<Chromosome> {
    let ga_with = |mode| GaParams {
        fitness_mode: mode,
        seed,
        ..ga.clone()
    };
    Ok(match scheduler {
        Scheduler::Twlga => evolve(inst, &ga_with(FitnessMode::Twlga))?.best,
        Scheduler::TimeOnly => evolve(inst, &ga_with(FitnessMode::TimeOnly))?.best,
        Scheduler::Fifo => schedule_fifo(inst),
        Scheduler::Random => schedule_random(inst, seed),
        Scheduler::RoundRobin => schedule_round_robin(inst),
    })
}

fn oracle_fits(inst: &Instance) -> bool {
    (inst.n_nodes() as f64).powi(inst.n_tasks() as i32) <= BRUTE_FORCE_LIMIT as f64
}

/// Runs every scheduler on every instance for every seed. Rows come out in
/// (instance, seed, scheduler) order regardless of thread scheduling.
pub fn compare(cfg: &ExperimentConfig) -> Result<ComparisonReport> {
    cfg.validate_for(Mode::Compare)?;
    let instances = load_instances(cfg.instances.as_ref().expect("validated"))?;

    let oracles: Vec<Option<f64>> = instances
        .par_iter()
        .map(|(_, inst)| {
            if cfg.oracle && oracle_fits(inst) {
                brute_force_optimum(inst).map(|(_, m)| Some(m))
            } else {
                Ok(None)
            }
        })
        .collect::<Result<_>>()?;

    let mut jobs = Vec::new();
    for i in 0..instances.len() {
        for &seed in &cfg.seeds {
            for &s in &cfg.schedulers {
                jobs.push((i, seed, s));
            }
        }
    }
    let results: Vec<(CompareRow, f64)> = jobs
        .par_iter()
        .map(|&(i, seed, scheduler)| {
            let (label, inst) = &instances[i];
            let start = Instant::now();
            let best = run_scheduler(scheduler, inst, &cfg.ga, seed)?;
            let wall = start.elapsed().as_secs_f64();
            let report = fitness(&best, inst, FitnessMode::TimeOnly)?;
            Ok((
                CompareRow {
                    instance: label.clone(),
                    seed,
                    scheduler,
                    makespan: report.job_final_time,
                    bottleneck_node: report.bottleneck_node,
                    bottleneck_workload: report.bottleneck_workload,
                    oracle_makespan: oracles[i],
                },
                wall,
            ))
        })
        .collect::<Result<_>>()?;
    let (rows, wall_time_s): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let summary = summarize(&rows, &wall_time_s, &cfg.schedulers);
    Ok(ComparisonReport {
        rows,
        wall_time_s,
        summary,
    })
}

fn summarize(rows: &[CompareRow], wall: &[f64], schedulers: &[Scheduler]) -> Vec<SchedulerSummary> {
    schedulers
        .iter()
        .copied()
        .map(|s| {
            let picked: Vec<(&CompareRow, f64)> = rows
                .iter()
                .zip(wall)
                .filter(|(r, _)| r.scheduler == s)
                .map(|(r, w)| (r, *w))
                .collect();
            let n = picked.len().max(1) as f64;
            let mut spans: Vec<f64> = picked.iter().map(|(r, _)| r.makespan).collect();
            spans.sort_by(f64::total_cmp);
            SchedulerSummary {
                scheduler: s,
                runs: picked.len(),
                mean_makespan: spans.iter().sum::<f64>() / n,
                median_makespan: median(&spans),
                mean_bottleneck_workload: picked
                    .iter()
                    .map(|(r, _)| r.bottleneck_workload)
                    .sum::<f64>()
                    / n,
                optimal_runs: picked
                    .iter()
                    .filter(|(r, _)| r.oracle_makespan == Some(r.makespan))
                    .count(),
                mean_wall_time_s: picked.iter().map(|(_, w)| w).sum::<f64>() / n,
            }
        })
        .collect()
}

fn median(sorted: &[f64]) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => sorted[n / 2],
        n => (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0,
    }
}

/// Header `instance,seed,scheduler,makespan,bottleneck_node,bottleneck_workload,oracle_makespan`.
/// The oracle column is empty where no optimum was computed.
pub fn write_compare_csv<W: std::io::Write>(rows: &[CompareRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<compare csv>", e))?;
    Ok(())
}

fn create_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

/// Runs [`compare`] and writes `compare.csv` and `summary.json`.
pub fn run_compare(cfg: &ExperimentConfig) -> Result<ComparisonReport> {
    let report = compare(cfg)?;
    let mut csv = Vec::new();
    write_compare_csv(&report.rows, &mut csv)?;
    let dir = cfg.out_dir();
    create_out_dir(dir)?;
    write_file(&dir.join(COMPARE_CSV), &csv)?;
    write_json(
        &dir.join(SUMMARY_JSON),
        &serde_json::json!({
            "mode": Mode::Compare,
            "instances": report.rows.iter().map(|r| &r.instance).collect::<std::collections::BTreeSet<_>>().len(),
            "seeds": cfg.seeds,
            "rows": report.rows.len(),
            "total_wall_time_s": report.wall_time_s.iter().sum::<f64>(),
            "schedulers": report.summary,
        }),
    )?;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingOutcome {
    pub model: OverheadModel,
    pub calibration: Option<CalibrationReport>,
    pub rows: Vec<ScalingRow>,
    pub verdicts: Vec<RowVerdict>,
}

impl ScalingOutcome {
    pub fn matching_rows(&self) -> usize {
        self.verdicts.iter().filter(|v| v.matches).count()
    }

    pub fn verdict_line(&self) -> String {
        format!(
            "{}/{} rows match",
            self.matching_rows(),
            self.verdicts.len()
        )
    }
}

pub const SCALING_CSV: &str = "scaling.csv";
pub const CALIBRATION_JSON: &str = "calibration.json";

pub fn scaling(cfg: &ExperimentConfig) -> Result<ScalingOutcome> {
    cfg.validate_for(Mode::Scaling)?;
    let s = cfg.scaling.clone().unwrap_or_default();
    let observations = match &s.observations {
        Some(p) => {
            let f = fs::File::open(p).map_err(|e| Error::io(p, e))?;
            read_scaling_csv(f)?
        }
        None => hadoop_scaling_observations(),
    };
    let (model, calibration) = if s.calibrate {
        let template = s.overhead.unwrap_or(OverheadModel {
            data_node: Some(0),
            ..OverheadModel::zero()
        });
        let report = calibrate(&template, &observations)?;
        (report.model, Some(report))
    } else {
        (s.overhead.expect("validated"), None)
    };
    let rows = scaling_experiment(&s.sizes_mb, &s.node_counts, &model)?;
    let verdicts = compare_orderings(&rows, &observations);
    Ok(ScalingOutcome {
        model,
        calibration,
        rows,
        verdicts,
    })
}

/// Runs [`scaling`] and writes `scaling.csv`, `summary.json` and, when the
/// model was fitted, `calibration.json`.
pub fn run_scaling(cfg: &ExperimentConfig) -> Result<ScalingOutcome> {
    let outcome = scaling(cfg)?;
    let mut csv = Vec::new();
    write_scaling_csv(&outcome.rows, &mut csv)?;
    let dir = cfg.out_dir();
    create_out_dir(dir)?;
    write_file(&dir.join(SCALING_CSV), &csv)?;
    if let Some(c) = &outcome.calibration {
        write_json(&dir.join(CALIBRATION_JSON), c)?;
    }
    write_json(
        &dir.join(SUMMARY_JSON),
        &serde_json::json!({
            "mode": Mode::Scaling,
            "model": outcome.model,
            "verdict": outcome.verdict_line(),
            "rows": outcome.verdicts,
        }),
    )?;
    Ok(outcome)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub files_in: usize,
    pub files_out: usize,
    pub records_in: usize,
    pub records_out: usize,
    pub records_per_year: BTreeMap<u16, usize>,
}

pub const MERGED_DIR: &str = "merged";
pub const EXTRACTED_CSV: &str = "extracted.csv";

/// Regular, non-hidden files directly inside `dir`, sorted by name.
fn trace_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let hidden = entry.file_name().to_string_lossy().starts_with('.');
        let is_file = entry
            .file_type()
            .map_err(|e| Error::io(entry.path(), e))?
            .is_file();
        if is_file && !hidden {
            files.push(entry.path());
        }
    }
    files.sort();
    Ok(files)
}

/// Merges every trace in `pipeline.input_dir` into `out/merged/{year}.txt`
/// and writes the temperature readings of all years to
/// `out/extracted.csv`.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<PipelineSummary> {
    cfg.validate_for(Mode::Pipeline)?;
    let p = cfg.pipeline.as_ref().expect("validated");
    let inputs = trace_files(&p.input_dir)?;
    let records_in = inputs
        .par_iter()
        .map(|f| crate::sensor_pipeline::read_trace(f).map(|r| r.len()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();

    let dir = cfg.out_dir();
    let merged = merge_by_year(&inputs, &dir.join(MERGED_DIR))?;
    let mut rows: Vec<ExtractedRow> = Vec::new();
    let mut per_year = BTreeMap::new();
    for (year, path) in &merged {
        let extracted = if p.keep_day {
            crate::sensor_pipeline::extract_records(
                &crate::sensor_pipeline::read_trace(path)?,
                &p.calibration,
                true,
            )
        } else {
            extract(path, &p.calibration)?
        };
        per_year.insert(*year, extracted.len());
        rows.extend(extracted);
    }
    let mut csv = Vec::new();
    write_extracted_csv(&rows, p.keep_day, &mut csv)?;
    write_file(&dir.join(EXTRACTED_CSV), &csv)?;

    let summary = PipelineSummary {
        files_in: inputs.len(),
        files_out: merged.len(),
        records_in,
        records_out: rows.len(),
        records_per_year: per_year,
    };
    write_json(&dir.join(SUMMARY_JSON), &summary)?;
    Ok(summary)
}

pub const TRACE_CSV: &str = "trace.csv";

/// Evolves the first configured instance with the first seed and writes
/// the per-generation trace plus the best schedule.
pub fn run_single(cfg: &ExperimentConfig) -> Result<EvolutionTrace> {
    cfg.validate_for(Mode::SingleRun)?;
    let instances = load_instances(cfg.instances.as_ref().expect("validated"))?;
    let (label, inst) = &instances[0];
    let params = GaParams {
        seed: cfg.seeds[0],
        ..cfg.ga.clone()
    };
    let trace = evolve(inst, &params)?;
    let mut csv = Vec::new();
    trace.write_csv(&mut csv)?;
    let dir = cfg.out_dir();
    create_out_dir(dir)?;
    write_file(&dir.join(TRACE_CSV), &csv)?;
    write_json(
        &dir.join(SUMMARY_JSON),
        &serde_json::json!({
            "mode": Mode::SingleRun,
            "instance": label,
            "seed": params.seed,
            "fitness_mode": params.fitness_mode,
            "best": trace.best,
            "report": trace.best_report,
        }),
    )?;
    Ok(trace)
}

/// Writes one `{label}.json` per configured instance into the output
/// directory and returns the paths.
pub fn run_gen_instance(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let source = cfg
        .instances
        .as_ref()
        .ok_or_else(|| Error::config("instances", "required"))?;
    let dir = cfg
        .out
        .as_deref()
        .ok_or_else(|| Error::config("out", "no output directory (set `out` or pass --out)"))?;
    let instances = load_instances(source)?;
    let texts: Vec<(PathBuf, String)> = instances
        .iter()
        .map(|(label, inst)| Ok((dir.join(format!("{label}.json")), inst.to_json()?)))
        .collect::<Result<_>>()?;
    create_out_dir(dir)?;
    for (path, text) in &texts {
        write_file(path, format!("{text}\n").as_bytes())?;
    }
    Ok(texts.into_iter().map(|(p, _)| p).collect())
}
