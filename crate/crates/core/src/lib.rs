//! Genetic task scheduling for heterogeneous clusters.
//!
//! * [`task_model`]: tasks, nodes, ETC matrices and node workload.
//! * [`engine`]: the time-and-workload genetic scheduler, baselines and an
//!   exhaustive oracle.
//! * [`cluster_sim`]: discrete-event execution with startup, coordination
//!   and transfer overheads, plus calibration against measured runs.
//! * [`sensor_pipeline`]: sensor trace parsing, per-year merging and
//!   temperature extraction.
//! * [`experiment`]: JSON manifests and the compare, scaling, pipeline and
//!   single-run drivers.

pub mod cluster_sim;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod sensor_pipeline;
pub mod task_model;

pub use cluster_sim::{simulate, OverheadModel, ScalingRow, SimResult};
pub use engine::{
    brute_force_optimum, decode, evolve, fitness, job_final_time, schedule_fifo, Assignment,
    Chromosome, EvolutionTrace, FitnessMode, FitnessReport, GaParams,
};
pub use error::{Error, Result};
pub use task_model::{
    generate_instance, node_workload, EtcMatrix, Instance, NodeSet, ResourceUsage, TaskSet,
    WorkloadWeights,
};
