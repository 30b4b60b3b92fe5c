use super::chromosome::Chromosome;
use crate::error::{Error, Result};
use crate::task_model::Instance;

/// Largest search space `R^N` the exhaustive search accepts.
pub const BRUTE_FORCE_LIMIT: u64 = 10_000_000;

/// Exhaustive minimum-makespan search.
///
/// Returns the lexicographically smallest gene string among all minimizers.
/// Node loads accumulate in ascending task order, so the returned makespan
/// is bit-identical to [`job_final_time`](super::job_final_time) of the
/// returned chromosome.
pub fn brute_force_optimum(inst: &Instance) -> Result<(Chromosome, f64)> {
    brute_force_with_limit(inst, BRUTE_FORCE_LIMIT)
}

pub fn brute_force_with_limit(inst: &Instance, limit: u64) -> Result<(Chromosome, f64)> {
    let n = inst.n_tasks();
    let r = inst.n_nodes();
    let size = (r as f64).powi(n as i32);
    if size > limit as f64 {
        return Err(Error::SearchSpaceTooLarge { size, limit });
    }
    let mut search = Search {
        inst,
        loads: vec![0.0; r],
        genes: vec![0; n],
        best_genes: vec![0; n],
        best: f64::INFINITY,
    };
    search.descend(0, 0.0);
    Ok((Chromosome::new(search.best_genes), search.best))
}

struct Search<'a> {
    inst: &'a Instance,
    loads: Vec<f64>,
    genes: Vec<u32>,
    best_genes: Vec<u32>,
    best: f64,
}

impl Search<'_> {
    // Visits assignments in lexicographic order and only accepts strict
    // improvements, so the first minimizer found is kept.
    fn descend(&mut self, task: usize, current_max: f64) {
        if task == self.genes.len() {
            if current_max < self.best {
                self.best = current_max;
                self.best_genes.copy_from_slice(&self.genes);
            }
            return;
        }
        for node in 0..self.loads.len() {
            let before = self.loads[node];
            let after = before + self.inst.etc().get(task, node);
            let new_max = current_max.max(after);
            // Loads only grow, so this branch cannot strictly improve.
            if new_max >= self.best {
                continue;
            }
            self.loads[node] = after;
            self.genes[task] = node as u32 + 1;
            self.descend(task + 1, new_max);
            self.loads[node] = before;
        }
    }
}
