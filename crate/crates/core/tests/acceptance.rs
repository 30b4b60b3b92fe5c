//! End-to-end acceptance checks. Each test writes one `PASS`/`FAIL` line to
//! stderr (bypassing libtest's capture) before asserting.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use twlga_core::cluster_sim::{
    calibrate, compare_orderings, hadoop_scaling_observations, scaling_experiment, OverheadModel,
};
use twlga_core::engine::{
    adaptive_crossover_rate, adaptive_mutation_rate, raw_adaptive_rate, PopulationStats,
    RateFormula,
};
use twlga_core::experiment::{
    run_compare, ExperimentConfig, GenerateSpec, InstanceSource, COMPARE_CSV,
};
use twlga_core::sensor_pipeline::{
    extract, merge_by_year, parse_record, read_trace, synthetic_records, write_trace, Calibration,
    SensorRecord,
};
use twlga_core::{
    brute_force_optimum, decode, evolve, fitness, generate_instance, job_final_time, Chromosome,
    EtcMatrix, FitnessMode, GaParams, Instance, ResourceUsage,
};

fn report(criterion: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("criterion {criterion} [{name}]: {verdict} ({detail})\n");
    let _ = std::io::stderr().lock().write_all(line.as_bytes());
}

#[test]
fn criterion_1_ga_reaches_exhaustive_optimum() {
    const INSTANCES: u64 = 200;
    const SEEDS: u64 = 100;
    let start = Instant::now();
    let per_instance: Vec<(usize, u64)> = (0..INSTANCES)
        .into_par_iter()
        .map(|i| {
            let n = 1 + (i % 8) as usize;
            let r = 1 + ((i / 8) % 3) as usize;
            let inst = generate_instance(n, r, 4.0, 1000 + i).unwrap();
            let (_, optimum) = brute_force_optimum(&inst).unwrap();
            let hits = (0..SEEDS)
                .into_par_iter()
                .filter(|s| {
                    let params = GaParams {
                        fitness_mode: FitnessMode::TimeOnly,
                        population: 30,
                        generations: 100,
                        seed: i * 1000 + s,
                        ..GaParams::default()
                    };
                    evolve(&inst, &params).unwrap().best_makespan() == optimum
                })
                .count();
            (hits, i)
        })
        .collect();
    let elapsed = start.elapsed();
    let hits: usize = per_instance.iter().map(|(h, _)| h).sum();
    let runs = (INSTANCES * SEEDS) as usize;
    let rate = hits as f64 / runs as f64;
    let pass = rate >= 0.95 && elapsed < Duration::from_secs(60);
    report(
        1,
        "oracle optimality",
        pass,
        &format!(
            "{hits}/{runs} = {:.2}% exact, {:.1}s",
            rate * 100.0,
            elapsed.as_secs_f64()
        ),
    );
    assert!(rate >= 0.95, "optimum reached in {rate}");
    assert!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
}

#[test]
fn criterion_2_zero_workload_reduces_to_time_only() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=20);
        let r = rng.gen_range(1..=6);
        let inst = generate_instance(n, r, 8.0, rng.gen())
            .unwrap()
            .with_usage(vec![ResourceUsage::IDLE; r])
            .unwrap();
        let population: Vec<Chromosome> = (0..30)
            .map(|_| Chromosome::random(n, r, &mut rng).unwrap())
            .collect();
        let score = |mode| -> Vec<f64> {
            population
                .iter()
                .map(|c| fitness(c, &inst, mode).unwrap().optimum)
                .collect()
        };
        let (twlga, time) = (score(FitnessMode::Twlga), score(FitnessMode::TimeOnly));
        for a in 0..population.len() {
            for b in 0..population.len() {
                if twlga[a].total_cmp(&twlga[b]) != time[a].total_cmp(&time[b]) {
                    mismatches += 1;
                }
            }
        }
    }
    report(
        2,
        "zero-workload reduction",
        mismatches == 0,
        &format!("1000 populations of 30, {mismatches} ordering mismatches"),
    );
    assert_eq!(mismatches, 0);
}

#[test]
fn criterion_3_workload_aversion() {
    const SEEDS: u64 = 100;
    let counts: Vec<(bool, bool)> = (0..SEEDS)
        .into_par_iter()
        .map(|seed| {
            let (n, r) = (12, 4);
            let base = generate_instance(n, r, 4.0, 5000 + seed).unwrap();
            // The busy node is the fastest one, so a time-only search likes it most.
            let heavy = (0..r)
                .min_by(|&a, &b| {
                    let col = |k| (0..n).map(|t| base.etc().get(t, k)).sum::<f64>();
                    col(a).total_cmp(&col(b))
                })
                .unwrap();
            let usage = (0..r)
                .map(|k| ResourceUsage::uniform(if k == heavy { 0.9 } else { 0.1 }).unwrap())
                .collect();
            let inst = base.with_usage(usage).unwrap();
            let bottleneck_is_heavy = |mode| {
                let params = GaParams {
                    fitness_mode: mode,
                    seed,
                    ..GaParams::default()
                };
                let best = evolve(&inst, &params).unwrap().best;
                fitness(&best, &inst, FitnessMode::TimeOnly)
                    .unwrap()
                    .bottleneck_node
                    == heavy
            };
            (
                bottleneck_is_heavy(FitnessMode::Twlga),
                bottleneck_is_heavy(FitnessMode::TimeOnly),
            )
        })
        .collect();
    let twlga = counts.iter().filter(|c| c.0).count();
    let time_only = counts.iter().filter(|c| c.1).count();
    report(
        3,
        "workload aversion",
        twlga < time_only,
        &format!("busy node is bottleneck in {twlga}/100 workload-aware vs {time_only}/100 time-only runs"),
    );
    assert!(twlga < time_only);
}

#[test]
fn criterion_4_adaptive_rate_contract() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut violations = Vec::new();
    for i in 0..100_000 {
        let f_mean = rng.gen_range(1e-6..10.0);
        let f_max = if i % 10 == 0 {
            f_mean
        } else {
            f_mean + rng.gen_range(0.0..10.0)
        };
        let stats = PopulationStats::new(f_max, f_mean).unwrap();
        let f = rng.gen_range(0.0..=f_max);
        let p_c1 = rng.gen_range(1e-3..=1.0);
        let p_m1 = rng.gen_range(1e-3..=1.0);
        let params = GaParams {
            p_c1,
            p_c2: rng.gen_range(0.0..=p_c1),
            p_m1,
            p_m2: rng.gen_range(0.0..=p_m1),
            rate_formula: if i % 2 == 0 {
                RateFormula::Scaled
            } else {
                RateFormula::Interpolated
            },
            ..GaParams::default()
        };
        let pc = adaptive_crossover_rate(&stats, f, &params).unwrap();
        let pm = adaptive_mutation_rate(&stats, f, &params).unwrap();
        if !(params.p_c2..=params.p_c1).contains(&pc) || !(params.p_m2..=params.p_m1).contains(&pm)
        {
            violations.push(format!("band {i}"));
        }
        if f_max == f_mean && (pc != params.p_c1 || pm != params.p_m1) {
            violations.push(format!("degenerate {i}"));
        }
        if f_max > f_mean {
            let a = rng.gen_range(f_mean..=f_max);
            let b = rng.gen_range(a..=f_max);
            let ra = raw_adaptive_rate(params.p_c1, params.p_c2, &stats, a);
            let rb = raw_adaptive_rate(params.p_c1, params.p_c2, &stats, b);
            if rb > ra {
                violations.push(format!("monotone {i}"));
            }
        }
    }
    report(
        4,
        "adaptive-rate contract",
        violations.is_empty(),
        &format!("100000 triples, {} violations", violations.len()),
    );
    assert!(
        violations.is_empty(),
        "{:?}",
        &violations[..violations.len().min(10)]
    );
}

#[test]
fn criterion_5_scaling_trend_after_calibration() {
    let start = Instant::now();
    let observations = hadoop_scaling_observations();
    let template = OverheadModel {
        data_node: Some(0),
        ..OverheadModel::zero()
    };
    let fit = calibrate(&template, &observations).unwrap();
    let sizes = [160.0, 320.0, 640.0, 1300.0, 2600.0];
    let rows = scaling_experiment(&sizes, &[1, 2, 3], &fit.model).unwrap();
    let verdicts = compare_orderings(&rows, &observations);
    let elapsed = start.elapsed();

    let at = |size: f64, k: usize| {
        rows.iter()
            .find(|r| r.size_mb == size && r.nodes == k)
            .unwrap()
            .makespan_s
    };
    let small_ascending = at(160.0, 1) < at(160.0, 2) && at(160.0, 2) < at(160.0, 3);
    let large_descending = at(2600.0, 1) > at(2600.0, 2) && at(2600.0, 2) > at(2600.0, 3);
    let matched = verdicts.iter().filter(|v| v.matches).count();
    let pass = verdicts.len() == 5
        && matched == 5
        && small_ascending
        && large_descending
        && elapsed < Duration::from_secs(10);
    report(
        5,
        "scaling trend",
        pass,
        &format!(
            "{matched}/{} rows match, 160 MB ascending {small_ascending}, 2600 MB descending {large_descending}, {:.3}s",
            verdicts.len(),
            elapsed.as_secs_f64()
        ),
    );
    assert!(pass, "{verdicts:?} {fit:?}");
}

// Straightforward per-node scan over the gene string.
fn naive_makespan(genes: &[u32], etc: &[Vec<f64>], n_nodes: usize) -> f64 {
    let mut makespan = 0.0f64;
    for node in 0..n_nodes {
        let mut busy = 0.0;
        for (task, &g) in genes.iter().enumerate() {
            if g as usize == node + 1 {
                busy += etc[task][node];
            }
        }
        if busy > makespan {
            makespan = busy;
        }
    }
    makespan
}

#[test]
fn criterion_6_makespan_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=40);
        let r = rng.gen_range(1..=10);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..r).map(|_| rng.gen_range(0.01..1000.0)).collect())
            .collect();
        let inst = Instance::from_etc(EtcMatrix::from_rows(rows.clone()).unwrap()).unwrap();
        let c = Chromosome::random(n, r, &mut rng).unwrap();
        let got = job_final_time(&decode(&c, r).unwrap(), inst.etc()).unwrap();
        if got != naive_makespan(c.genes(), &rows, r) {
            mismatches += 1;
        }
    }
    report(
        6,
        "makespan identity",
        mismatches == 0,
        &format!("1000 pairs, {mismatches} mismatches"),
    );
    assert_eq!(mismatches, 0);
}

#[test]
fn criterion_7_pipeline_conservation() {
    let dir = tempfile::tempdir().unwrap();
    let years = [2019, 2020, 2021];
    let mut inputs = Vec::new();
    let mut all: Vec<SensorRecord> = Vec::new();
    for i in 0..10u64 {
        let records = synthetic_records(1000, &years, 70 + i);
        let path = dir.path().join(format!("trace-{i:02}.txt"));
        write_trace(&records, fs::File::create(&path).unwrap()).unwrap();
        inputs.push(path);
        all.extend(records);
    }
    let merged = merge_by_year(&inputs, &dir.path().join("merged")).unwrap();
    let cal = Calibration::new(154574.0, 10.0, 25.0).unwrap();

    let mut want_per_year: BTreeMap<u16, usize> = BTreeMap::new();
    for r in &all {
        *want_per_year.entry(r.year).or_default() += 1;
    }
    let mut got_per_year = BTreeMap::new();
    let mut extracted_per_year = BTreeMap::new();
    let mut reparsed: Vec<SensorRecord> = Vec::new();
    for (year, path) in &merged {
        let records = read_trace(path).unwrap();
        got_per_year.insert(*year, records.len());
        extracted_per_year.insert(*year, extract(path, &cal).unwrap().len());
        reparsed.extend(records);
    }
    reparsed.sort();
    all.sort();
    let counts_ok =
        merged.len() == 3 && got_per_year == want_per_year && extracted_per_year == want_per_year;
    let multiset_ok = reparsed == all;

    let table_rows = [
        ("2021\t03\t01\t08\t30\t154574", (2021, 3, 1, 8, 30, 154574)),
        ("2021\t03\t01\t08\t30\t154577", (2021, 3, 1, 8, 30, 154577)),
        ("2021\t03\t01\t08\t31\t154575", (2021, 3, 1, 8, 31, 154575)),
        ("2021\t03\t01\t08\t31\t154579", (2021, 3, 1, 8, 31, 154579)),
        ("2021\t03\t01\t11\t20\t154593", (2021, 3, 1, 11, 20, 154593)),
    ];
    let rows_ok = table_rows.iter().all(|(line, (y, mo, d, h, mi, w))| {
        let r = parse_record(line).unwrap();
        (r.year, r.month, r.day, r.hour, r.minute, r.wavelength) == (*y, *mo, *d, *h, *mi, *w)
    });
    let pass = counts_ok && multiset_ok && rows_ok;
    report(
        7,
        "pipeline conservation",
        pass,
        &format!(
            "10 files, {} records, per-year counts {:?}, multiset {multiset_ok}, reference rows {rows_ok}",
            all.len(),
            got_per_year
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_8_compare_is_deterministic() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let outputs: Vec<Vec<u8>> = dirs
        .iter()
        .map(|d| {
            let cfg = ExperimentConfig {
                instances: Some(InstanceSource::Generate(GenerateSpec {
                    count: 4,
                    tasks: 8,
                    nodes: 3,
                    heterogeneity: 4.0,
                    seed: 80,
                    usage: None,
                })),
                seeds: vec![1, 2, 3, 4, 5],
                out: Some(d.path().to_path_buf()),
                ..ExperimentConfig::default()
            };
            run_compare(&cfg).unwrap();
            fs::read(d.path().join(COMPARE_CSV)).unwrap()
        })
        .collect();
    let identical = outputs[0] == outputs[1];
    report(
        8,
        "determinism",
        identical,
        &format!(
            "two compare runs, {} bytes each, identical {identical}",
            outputs[0].len()
        ),
    );
    assert!(identical);
}
