//! Non-evolutionary reference schedulers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::chromosome::Chromosome;
use crate::task_model::Instance;

/// Queue-order dispatch: each task, in index order, goes to the node that
/// becomes free earliest (lowest index on ties), regardless of how fast
/// that node runs the task.
pub fn schedule_fifo(inst: &Instance) -> Chromosome {
    let etc = inst.etc();
    let mut free_at = vec![0.0f64; inst.n_nodes()];
    let genes = (0..inst.n_tasks())
        .map(|task| {
            let mut node = 0;
            for (i, &t) in free_at.iter().enumerate() {
                if t < free_at[node] {
                    node = i;
                }
            }
            free_at[node] += etc.get(task, node);
            node as u32 + 1
        })
        .collect();
    Chromosome::new(genes)
}

/// Task `j` goes to node `j mod R`.
pub fn schedule_round_robin(inst: &Instance) -> Chromosome {
    let r = inst.n_nodes();
    Chromosome::new((0..inst.n_tasks()).map(|j| (j % r) as u32 + 1).collect())
}

pub fn schedule_random(inst: &Instance, seed: u64) -> Chromosome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Chromosome::random(inst.n_tasks(), inst.n_nodes(), &mut rng)
        .expect("instances have at least one task and node")
}
