//! Shared inputs for the Criterion benchmarks under `benches/`.

use twlga_core::cluster_sim::{even_split, OverheadModel};
use twlga_core::{generate_instance, Assignment, Chromosome, Instance};

/// Generated instance with task sizes, so it can also be simulated.
pub fn sized_instance(n_tasks: usize, n_nodes: usize, seed: u64) -> Instance {
    let inst = generate_instance(n_tasks, n_nodes, 4.0, seed).expect("valid shape");
    let sizes = (0..n_tasks).map(|t| 10.0 + (t % 17) as f64 * 7.5).collect();
    inst.with_task_sizes(sizes).expect("positive sizes")
}

/// Round-robin gene string, a cheap deterministic schedule.
pub fn striped(n_tasks: usize, n_nodes: usize) -> Chromosome {
    Chromosome::new((0..n_tasks).map(|t| (t % n_nodes) as u32 + 1).collect())
}

pub fn reference_model() -> OverheadModel {
    OverheadModel {
        startup: 20.0,
        coordination: 30.0,
        transfer_rate: 8.0,
        compute_rate: 4.0,
        data_node: Some(0),
    }
}

pub fn split_job(size_mb: f64, nodes: usize) -> (Instance, Assignment) {
    even_split(size_mb, nodes, &reference_model()).expect("valid job")
}
