//! Genetic task-to-node scheduling.
//!
//! A schedule is a [`Chromosome`]: gene `j` names the node running task `j`.
//! Decoding yields per-node task lists, whose ETC sums give each node's busy
//! time; the largest is the makespan. Selection uses either inverse makespan
//! or inverse makespan divided by `1 + workload` of the bottleneck node,
//! which steers work away from already-busy machines.

mod baselines;
mod chromosome;
mod evolve;
mod fitness;
mod oracle;
mod rates;

pub use baselines::{schedule_fifo, schedule_random, schedule_round_robin};
pub use chromosome::{crossover, crossover_at, decode, mutate, Assignment, Chromosome};
pub use evolve::{evolve, EvolutionTrace, GaParams, GenerationRecord};
pub use fitness::{each_resource_time, fitness, job_final_time, FitnessMode, FitnessReport};
pub use oracle::{brute_force_optimum, brute_force_with_limit, BRUTE_FORCE_LIMIT};
pub use rates::{
    adaptive_crossover_rate, adaptive_mutation_rate, raw_adaptive_rate, PopulationStats,
    RateFormula,
};
