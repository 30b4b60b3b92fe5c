use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::chromosome::{crossover, mutate_in_place, Chromosome};
use super::fitness::{fitness, Evaluator, FitnessMode, FitnessReport, Score};
use super::rates::{adaptive_crossover_rate, adaptive_mutation_rate, PopulationStats, RateFormula};
use crate::error::{Error, Result};
use crate::task_model::Instance;

/// Genetic algorithm settings. Defaults: population 30, 100 generations,
/// crossover band [0.6, 0.9], mutation band [0.01, 0.1], one elite,
/// binary tournaments, duplicate offspring re-mutated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaParams {
    pub population: usize,
    pub generations: usize,
    pub p_c1: f64,
    pub p_c2: f64,
    pub p_m1: f64,
    pub p_m2: f64,
    pub elitism: usize,
    pub tournament_size: usize,
    pub fitness_mode: FitnessMode,
    pub rate_formula: RateFormula,
    /// Re-mutate a child that duplicates a member of the next generation
    /// (up to a bounded number of retries).
    pub unique_offspring: bool,
    pub seed: u64,
}

impl Default for GaParams {
    fn default() -> Self {
        GaParams {
            population: 30,
            generations: 100,
            p_c1: 0.9,
            p_c2: 0.6,
            p_m1: 0.1,
            p_m2: 0.01,
            elitism: 1,
            tournament_size: 2,
            fitness_mode: FitnessMode::Twlga,
            rate_formula: RateFormula::Scaled,
            unique_offspring: true,
            seed: 0,
        }
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidParams(m));
        if self.population < 2 {
            return fail(format!("population must be >= 2, got {}", self.population));
        }
        if self.elitism >= self.population {
            return fail(format!(
                "elitism {} must be below population {}",
                self.elitism, self.population
            ));
        }
        if self.tournament_size == 0 {
            return fail("tournament size must be >= 1".into());
        }
        for (name, p1, p2) in [
            ("crossover", self.p_c1, self.p_c2),
            ("mutation", self.p_m1, self.p_m2),
        ] {
            if !(0.0..=1.0).contains(&p1) || !(0.0..=p1).contains(&p2) {
                return fail(format!(
                    "{name} bounds must satisfy 0 <= p2 <= p1 <= 1, got p1 {p1} p2 {p2}"
                ));
            }
            if self.rate_formula == RateFormula::Scaled && p1 == 0.0 {
                return fail(format!("{name} upper bound must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    /// 0 is the initial population.
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    /// Makespan of the fittest individual of this generation.
    pub best_makespan: f64,
    /// Mean crossover/mutation probabilities applied while breeding the
    /// next generation; `None` for the last one.
    pub mean_crossover_rate: Option<f64>,
    pub mean_mutation_rate: Option<f64>,
    pub crossovers: usize,
    pub mutations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionTrace {
    pub mode: FitnessMode,
    pub generations: Vec<GenerationRecord>,
    /// Fittest chromosome seen in any generation (earliest on ties).
    pub best: Chromosome,
    pub best_report: FitnessReport,
}

impl EvolutionTrace {
    pub fn best_makespan(&self) -> f64 {
        self.best_report.job_final_time
    }

    /// One row per generation: `generation,best_fitness,mean_fitness,best_makespan`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "generation",
            "best_fitness",
            "mean_fitness",
            "best_makespan",
        ])?;
        for g in &self.generations {
            w.write_record([
                g.generation.to_string(),
                g.best_fitness.to_string(),
                g.mean_fitness.to_string(),
                g.best_makespan.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<trace csv>", e))?;
        Ok(())
    }
}

/// Small search spaces cannot always supply `population` distinct members.
const MAX_DUPLICATE_RETRIES: usize = 20;

struct Individual {
    chromosome: Chromosome,
    score: Score,
}

fn tournament<R: Rng>(pop: &[Individual], size: usize, rng: &mut R) -> usize {
    let mut best = rng.gen_range(0..pop.len());
    for _ in 1..size {
        let i = rng.gen_range(0..pop.len());
        let (fi, fb) = (pop[i].score.fitness, pop[best].score.fitness);
        if fi > fb || (fi == fb && i < best) {
            best = i;
        }
    }
    best
}

/// Runs the genetic search. The result is a pure function of the instance
/// and `params` (including `params.seed`).
pub fn evolve(inst: &Instance, params: &GaParams) -> Result<EvolutionTrace> {
    params.validate()?;
    let n_tasks = inst.n_tasks();
    let n_nodes = inst.n_nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut eval = Evaluator::new(inst, params.fitness_mode);

    let mut pop: Vec<Individual> = (0..params.population)
        .map(|_| {
            let chromosome = Chromosome::random(n_tasks, n_nodes, &mut rng)?;
            let score = eval.score(&chromosome);
            Ok(Individual { chromosome, score })
        })
        .collect::<Result<_>>()?;

    let mut records = Vec::with_capacity(params.generations + 1);
    let mut best: Option<(Chromosome, f64)> = None;
    let mut order: Vec<usize> = Vec::with_capacity(params.population);
    // Once the next generation is this large a new child cannot be unique.
    let distinct_chromosomes = (n_nodes as f64).powi(n_tasks as i32);

    for generation in 0..=params.generations {
        let fit: Vec<f64> = pop.iter().map(|i| i.score.fitness).collect();
        let stats = PopulationStats::from_fitness(&fit)?;

        order.clear();
        order.extend(0..pop.len());
        order.sort_by(|&a, &b| fit[b].total_cmp(&fit[a]).then(a.cmp(&b)));
        let leader = &pop[order[0]];
        if best.as_ref().is_none_or(|(_, f)| leader.score.fitness > *f) {
            best = Some((leader.chromosome.clone(), leader.score.fitness));
        }

        let mut record = GenerationRecord {
            generation,
            best_fitness: stats.f_max,
            mean_fitness: stats.f_mean,
            best_makespan: leader.score.makespan,
            mean_crossover_rate: None,
            mean_mutation_rate: None,
            crossovers: 0,
            mutations: 0,
        };
        if generation == params.generations {
            records.push(record);
            break;
        }

        let mut next: Vec<Individual> = Vec::with_capacity(params.population);
        for &i in order.iter().take(params.elitism) {
            next.push(Individual {
                chromosome: pop[i].chromosome.clone(),
                score: pop[i].score,
            });
        }

        let (mut pc_sum, mut pc_n, mut pm_sum, mut pm_n) = (0.0, 0usize, 0.0, 0usize);
        while next.len() < params.population {
            let a = tournament(&pop, params.tournament_size, &mut rng);
            let b = tournament(&pop, params.tournament_size, &mut rng);
            let f_prime = pop[a].score.fitness.max(pop[b].score.fitness);
            let pc = adaptive_crossover_rate(&stats, f_prime, params)?;
            pc_sum += pc;
            pc_n += 1;
            let (x, y, crossed) = if rng.gen::<f64>() < pc {
                record.crossovers += 1;
                let (x, y) = crossover(&pop[a].chromosome, &pop[b].chromosome, &mut rng)?;
                (x, y, true)
            } else {
                (pop[a].chromosome.clone(), pop[b].chromosome.clone(), false)
            };

            for (mut child, parent) in [(x, a), (y, b)] {
                if next.len() == params.population {
                    break;
                }
                let mut score = if crossed {
                    eval.score(&child)
                } else {
                    pop[parent].score
                };
                let pm = adaptive_mutation_rate(&stats, score.fitness, params)?;
                pm_sum += pm;
                pm_n += 1;
                if rng.gen::<f64>() < pm {
                    record.mutations += 1;
                    mutate_in_place(&mut child, n_nodes, &mut rng);
                    score = eval.score(&child);
                }
                if params.unique_offspring && (next.len() as f64) < distinct_chromosomes {
                    let mut tries = 0;
                    // Equal chromosomes have equal fitness, so compare that first.
                    while tries < MAX_DUPLICATE_RETRIES
                        && next
                            .iter()
                            .any(|i| i.score.fitness == score.fitness && i.chromosome == child)
                    {
                        mutate_in_place(&mut child, n_nodes, &mut rng);
                        score = eval.score(&child);
                        tries += 1;
                    }
                    record.mutations += tries;
                }
                next.push(Individual {
                    chromosome: child,
                    score,
                });
            }
        }
        record.mean_crossover_rate = (pc_n > 0).then(|| pc_sum / pc_n as f64);
        record.mean_mutation_rate = (pm_n > 0).then(|| pm_sum / pm_n as f64);
        records.push(record);
        pop = next;
    }

    let (best, _) = best.expect("population is never empty");
    let best_report = fitness(&best, inst, params.fitness_mode)?;
    Ok(EvolutionTrace {
        mode: params.fitness_mode,
        generations: records,
        best,
        best_report,
    })
}
