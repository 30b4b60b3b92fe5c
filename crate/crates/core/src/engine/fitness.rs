use serde::{Deserialize, Serialize};

use super::chromosome::{decode, Assignment, Chromosome};
use crate::error::{Error, Result};
use crate::task_model::{EtcMatrix, Instance};

/// Which fitness drives selection.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum FitnessMode {
    /// `1 / makespan`.
    TimeOnly,
    /// `1 / (makespan * (1 + workload of the bottleneck node))`.
    #[default]
    Twlga,
}

impl std::fmt::Display for FitnessMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FitnessMode::TimeOnly => "time_only",
            FitnessMode::Twlga => "twlga",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitnessReport {
    /// Busy seconds of every node.
    pub each_resource_time: Vec<f64>,
    /// Makespan: the largest entry of `each_resource_time`.
    pub job_final_time: f64,
    pub p_time: f64,
    /// Fitness under the requested mode; equals `p_time` in time-only mode.
    pub optimum: f64,
    /// Zero-based node attaining the makespan, lowest index on ties.
    pub bottleneck_node: usize,
    pub bottleneck_workload: f64,
}

/// Total busy time of each node: the sum of ETC entries of its tasks.
pub fn each_resource_time(a: &Assignment, etc: &EtcMatrix) -> Result<Vec<f64>> {
    if a.n_nodes() != etc.n_nodes() || a.n_tasks() != etc.n_tasks() {
        return Err(Error::invalid(format!(
            "assignment covers {} tasks on {} nodes, ETC matrix is {}x{}",
            a.n_tasks(),
            a.n_nodes(),
            etc.n_tasks(),
            etc.n_nodes()
        )));
    }
    Ok(a.lists()
        .iter()
        .enumerate()
        .map(|(node, tasks)| tasks.iter().map(|&t| etc.get(t, node)).sum())
        .collect())
}

pub fn job_final_time(a: &Assignment, etc: &EtcMatrix) -> Result<f64> {
    let times = each_resource_time(a, etc)?;
    Ok(argmax(&times).1)
}

/// First index of the maximum, and the maximum.
pub(crate) fn argmax(xs: &[f64]) -> (usize, f64) {
    let mut best = (0, xs[0]);
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > best.1 {
            best = (i, x);
        }
    }
    best
}

pub fn fitness(c: &Chromosome, inst: &Instance, mode: FitnessMode) -> Result<FitnessReport> {
    c.validate_for(inst.n_tasks(), inst.n_nodes())?;
    let assignment = decode(c, inst.n_nodes())?;
    let times = each_resource_time(&assignment, inst.etc())?;
    let (bottleneck, makespan) = argmax(&times);
    let workload = inst.workload(bottleneck);
    let p_time = 1.0 / makespan;
    Ok(FitnessReport {
        each_resource_time: times,
        job_final_time: makespan,
        p_time,
        optimum: mode_fitness(mode, makespan, workload),
        bottleneck_node: bottleneck,
        bottleneck_workload: workload,
    })
}

#[inline]
fn mode_fitness(mode: FitnessMode, makespan: f64, bottleneck_workload: f64) -> f64 {
    match mode {
        FitnessMode::TimeOnly => 1.0 / makespan,
        FitnessMode::Twlga => 1.0 / (makespan * (1.0 + bottleneck_workload)),
    }
}

/// Allocation-free evaluation used inside the evolution loop. Produces the
/// same numbers as [`fitness`] because node loads accumulate in ascending
/// task order in both.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Score {
    pub fitness: f64,
    pub makespan: f64,
    pub bottleneck: usize,
}

pub(crate) struct Evaluator<'a> {
    inst: &'a Instance,
    mode: FitnessMode,
    loads: Vec<f64>,
}

impl<'a> Evaluator<'a> {
    pub fn new(inst: &'a Instance, mode: FitnessMode) -> Self {
        Evaluator {
            inst,
            mode,
            loads: vec![0.0; inst.n_nodes()],
        }
    }

    pub fn score(&mut self, c: &Chromosome) -> Score {
        self.loads.iter_mut().for_each(|l| *l = 0.0);
        let etc = self.inst.etc();
        for (task, _) in c.genes().iter().enumerate() {
            let node = c.node_of(task);
            self.loads[node] += etc.get(task, node);
        }
        let (bottleneck, makespan) = argmax(&self.loads);
        Score {
            fitness: mode_fitness(self.mode, makespan, self.inst.workload(bottleneck)),
            makespan,
            bottleneck,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task_model::{generate_instance, ResourceUsage};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_by_two() -> EtcMatrix {
        EtcMatrix::from_rows(vec![vec![2.0, 4.0], vec![3.0, 1.0]]).unwrap()
    }

    #[test]
    fn per_node_times() {
        let etc = two_by_two();
        let split = decode(&Chromosome::new(vec![1, 2]), 2).unwrap();
        assert_eq!(each_resource_time(&split, &etc).unwrap(), vec![2.0, 1.0]);
        assert_eq!(job_final_time(&split, &etc).unwrap(), 2.0);
        let packed = decode(&Chromosome::new(vec![1, 1]), 2).unwrap();
        assert_eq!(each_resource_time(&packed, &etc).unwrap(), vec![5.0, 0.0]);
    }

    #[test]
    fn single_node_makespan_is_its_total() {
        let etc = EtcMatrix::from_rows(vec![vec![1.5], vec![2.5], vec![3.0]]).unwrap();
        let a = decode(&Chromosome::new(vec![1, 1, 1]), 1).unwrap();
        assert_eq!(job_final_time(&a, &etc).unwrap(), 7.0);
    }

    #[test]
    fn enumerated_minimum_of_two_by_two() {
        // All R^N = 4 assignments: (1,1)->5, (1,2)->2, (2,1)->4, (2,2)->5.
        let etc = two_by_two();
        let mut all = Vec::new();
        for g1 in 1..=2 {
            for g2 in 1..=2 {
                let a = decode(&Chromosome::new(vec![g1, g2]), 2).unwrap();
                all.push(((g1, g2), job_final_time(&a, &etc).unwrap()));
            }
        }
        assert_eq!(
            all,
            vec![((1, 1), 5.0), ((1, 2), 2.0), ((2, 1), 4.0), ((2, 2), 5.0)]
        );
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let a = decode(&Chromosome::new(vec![1, 2, 1]), 2).unwrap();
        assert!(each_resource_time(&a, &two_by_two()).is_err());
        let inst = Instance::from_etc(two_by_two()).unwrap();
        assert!(fitness(&Chromosome::new(vec![1]), &inst, FitnessMode::Twlga).is_err());
    }

    #[test]
    fn random_oracle_four_tasks_two_nodes() {
        let inst = generate_instance(4, 2, 3.0, 99).unwrap();
        let c = Chromosome::new(vec![2, 1, 1, 2]);
        let a = decode(&c, 2).unwrap();
        let got = each_resource_time(&a, inst.etc()).unwrap();
        let mut want = [0.0; 2];
        for node in 0..2 {
            for task in 0..4 {
                if c.genes()[task] as usize == node + 1 {
                    want[node] += inst.etc().get(task, node);
                }
            }
        }
        assert_eq!(got, want.to_vec());
    }

    #[test]
    fn fitness_examples() {
        // makespan 2 on node 1 in both examples.
        let etc = two_by_two();
        let idle = Instance::from_etc(etc.clone()).unwrap();
        let c = Chromosome::new(vec![1, 2]);
        let r = fitness(&c, &idle, FitnessMode::Twlga).unwrap();
        assert_eq!(r.job_final_time, 2.0);
        assert_eq!(r.p_time, 0.5);
        assert_eq!(r.optimum, 0.5);
        assert_eq!(r.bottleneck_node, 0);

        let busy = idle
            .with_usage(vec![
                ResourceUsage::new(0.8, 0.6, 0.4, 0.2).unwrap(),
                ResourceUsage::IDLE,
            ])
            .unwrap();
        let r = fitness(&c, &busy, FitnessMode::Twlga).unwrap();
        assert!((r.bottleneck_workload - 0.6).abs() < 1e-12);
        assert!((r.optimum - 0.3125).abs() < 1e-12);
        let r = fitness(&c, &busy, FitnessMode::TimeOnly).unwrap();
        assert_eq!(r.optimum, r.p_time);
    }

    #[test]
    fn equal_makespan_prefers_lighter_bottleneck() {
        // Unit tasks on identical nodes: packing both onto either node gives
        // makespan 2, with the bottleneck on the heavy or the light node.
        let etc = EtcMatrix::from_rows(vec![vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let inst = Instance::from_etc(etc)
            .unwrap()
            .with_usage(vec![
                ResourceUsage::uniform(0.9).unwrap(),
                ResourceUsage::uniform(0.1).unwrap(),
            ])
            .unwrap();
        let on_heavy = Chromosome::new(vec![1, 1]);
        let on_light = Chromosome::new(vec![2, 2]);
        let heavy = fitness(&on_heavy, &inst, FitnessMode::Twlga).unwrap();
        let light = fitness(&on_light, &inst, FitnessMode::Twlga).unwrap();
        assert_eq!(heavy.job_final_time, light.job_final_time);
        assert!(light.optimum > heavy.optimum);
        let heavy_t = fitness(&on_heavy, &inst, FitnessMode::TimeOnly).unwrap();
        let light_t = fitness(&on_light, &inst, FitnessMode::TimeOnly).unwrap();
        assert_eq!(heavy_t.optimum, light_t.optimum);
    }

    #[test]
    fn evaluator_matches_report() {
        let inst = generate_instance(12, 4, 5.0, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for mode in [FitnessMode::TimeOnly, FitnessMode::Twlga] {
            let mut ev = Evaluator::new(&inst, mode);
            for _ in 0..200 {
                let c = Chromosome::random(12, 4, &mut rng).unwrap();
                let s = ev.score(&c);
                let r = fitness(&c, &inst, mode).unwrap();
                assert_eq!(s.fitness, r.optimum);
                assert_eq!(s.makespan, r.job_final_time);
                assert_eq!(s.bottleneck, r.bottleneck_node);
            }
        }
    }

    proptest! {
        #[test]
        fn report_invariants(seed in any::<u64>(), n in 1usize..15, r in 1usize..5) {
            let inst = generate_instance(n, r, 4.0, seed).unwrap();
            let c = Chromosome::random(n, r, &mut ChaCha8Rng::seed_from_u64(seed ^ 1)).unwrap();
            let rep = fitness(&c, &inst, FitnessMode::Twlga).unwrap();
            let max = rep.each_resource_time.iter().cloned().fold(f64::MIN, f64::max);
            prop_assert_eq!(rep.job_final_time, max);
            prop_assert_eq!(rep.p_time, 1.0 / rep.job_final_time);
            prop_assert!(rep.optimum <= rep.p_time);

            // Sum conservation.
            let total: f64 = rep.each_resource_time.iter().sum();
            let direct: f64 = (0..n).map(|t| inst.etc().get(t, c.node_of(t))).sum();
            prop_assert!((total - direct).abs() <= 1e-9 * direct);

            // Lower bound: the best-case work spread perfectly over R nodes.
            let lb: f64 = inst.etc().rows()
                .map(|row| row.iter().cloned().fold(f64::INFINITY, f64::min))
                .sum::<f64>() / r as f64;
            prop_assert!(rep.job_final_time >= lb * (1.0 - 1e-12));
        }

        #[test]
        fn scaling_etc_scales_makespan(seed in any::<u64>(), k in 0.01..100.0f64) {
            let inst = generate_instance(6, 3, 3.0, seed).unwrap();
            let scaled = inst.clone().with_etc(inst.etc().scaled(k).unwrap()).unwrap();
            let c = Chromosome::random(6, 3, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let a = fitness(&c, &inst, FitnessMode::Twlga).unwrap();
            let b = fitness(&c, &scaled, FitnessMode::Twlga).unwrap();
            prop_assert!((b.job_final_time - k * a.job_final_time).abs() <= 1e-9 * b.job_final_time);
        }
    }
}
