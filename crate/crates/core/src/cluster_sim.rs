//! Discrete-event execution of a schedule on a modelled cluster.
//!
//! Every participating node pays a fixed startup cost plus a coordination
//! cost that grows linearly with the number of participating nodes. It then
//! runs its tasks back to back, each one first pulling its input over the
//! network (unless the node already holds the data) and then computing on
//! it. Small jobs spread over many nodes lose to the fixed costs; large jobs
//! win from parallel compute.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::engine::Assignment;
use crate::error::{Error, Result};
use crate::task_model::{EtcMatrix, Instance, NodeSet, TaskSet, WorkloadWeights};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverheadModel {
    /// Seconds each participating node spends before its first task.
    pub startup: f64,
    /// Seconds per participating node, charged to every participant.
    pub coordination: f64,
    /// Network bandwidth in MB/s for pulling task input. Zero disables the
    /// transfer phase entirely.
    pub transfer_rate: f64,
    /// Processing throughput in MB/s.
    pub compute_rate: f64,
    /// Zero-based node that already stores all task input and never
    /// transfers. `None` means every node pulls its input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_node: Option<usize>,
}

impl OverheadModel {
    /// No fixed costs, free transfers, 1 MB/s compute.
    pub fn zero() -> Self {
        OverheadModel {
            startup: 0.0,
            coordination: 0.0,
            transfer_rate: 0.0,
            compute_rate: 1.0,
            data_node: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("startup", self.startup),
            ("coordination", self.coordination),
            ("transfer_rate", self.transfer_rate),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if !(self.compute_rate.is_finite() && self.compute_rate > 0.0) {
            return Err(Error::invalid(format!(
                "compute_rate must be positive, got {}",
                self.compute_rate
            )));
        }
        Ok(())
    }

    fn transfer_time(&self, size_mb: f64) -> Option<f64> {
        (self.transfer_rate > 0.0).then(|| size_mb / self.transfer_rate)
    }

    fn pulls_data(&self, node: usize) -> bool {
        self.data_node != Some(node)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Overhead,
    Transfer,
    Compute,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BusyInterval {
    pub phase: Phase,
    /// Zero-based task, absent for the overhead interval.
    pub task: Option<usize>,
    pub start: f64,
    pub end: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub compute: f64,
    pub transfer: f64,
    pub overhead: f64,
}

impl Breakdown {
    pub fn total(&self) -> f64 {
        self.compute + self.transfer + self.overhead
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    /// Busy intervals of each node in time order; empty for idle nodes.
    pub busy: Vec<Vec<BusyInterval>>,
    /// Completion time of each node; 0 for idle nodes.
    pub completion: Vec<f64>,
    pub makespan: f64,
    pub breakdown: Breakdown,
}

struct NodeQueue<'a> {
    tasks: &'a [usize],
    next_task: usize,
    // The transfer of `next_task` has finished and its compute is pending.
    transferred: bool,
}

/// Runs `assignment` on the modelled cluster.
pub fn simulate(
    assignment: &Assignment,
    inst: &Instance,
    model: &OverheadModel,
) -> Result<SimResult> {
    model.validate()?;
    let sizes = inst
        .tasks()
        .sizes
        .as_deref()
        .ok_or_else(|| Error::invalid("simulation needs task sizes"))?;
    if assignment.n_tasks() != inst.n_tasks() || assignment.n_nodes() != inst.n_nodes() {
        return Err(Error::invalid(format!(
            "assignment covers {} tasks on {} nodes, instance has {} tasks on {} nodes",
            assignment.n_tasks(),
            assignment.n_nodes(),
            inst.n_tasks(),
            inst.n_nodes()
        )));
    }

    let n_nodes = assignment.n_nodes();
    let active = assignment.active_nodes();
    let fixed = model.startup + model.coordination * active as f64;

    let mut busy = vec![Vec::new(); n_nodes];
    let mut completion = vec![0.0; n_nodes];
    let mut breakdown = Breakdown::default();
    let mut queues: Vec<NodeQueue> = assignment
        .lists()
        .iter()
        .map(|tasks| NodeQueue {
            tasks,
            next_task: 0,
            transferred: false,
        })
        .collect();

    // Events are "node becomes free at time t"; ties pop lowest node first.
    let mut events: BinaryHeap<Reverse<(OrderedTime, usize)>> = BinaryHeap::new();
    for node in 0..n_nodes {
        if !queues[node].tasks.is_empty() {
            busy[node].push(BusyInterval {
                phase: Phase::Overhead,
                task: None,
                start: 0.0,
                end: fixed,
            });
            breakdown.overhead += fixed;
            events.push(Reverse((OrderedTime(fixed), node)));
        }
    }

    while let Some(Reverse((OrderedTime(now), node))) = events.pop() {
        let q = &mut queues[node];
        let Some(&task) = q.tasks.get(q.next_task) else {
            completion[node] = now;
            continue;
        };
        let size = sizes[task];
        let (phase, duration) = match model.transfer_time(size) {
            Some(t) if !q.transferred && model.pulls_data(node) => {
                q.transferred = true;
                (Phase::Transfer, t)
            }
            _ => {
                q.transferred = false;
                q.next_task += 1;
                (Phase::Compute, size / model.compute_rate)
            }
        };
        let end = now + duration;
        match phase {
            Phase::Transfer => breakdown.transfer += duration,
            Phase::Compute => breakdown.compute += duration,
            Phase::Overhead => unreachable!(),
        }
        busy[node].push(BusyInterval {
            phase,
            task: Some(task),
            start: now,
            end,
        });
        events.push(Reverse((OrderedTime(end), node)));
    }

    let makespan = completion.iter().cloned().fold(0.0, f64::max);
    Ok(SimResult {
        busy,
        completion,
        makespan,
        breakdown,
    })
}

/// Total order on finite simulation times.
#[derive(Clone, Copy, Debug, PartialEq)]
struct OrderedTime(f64);

impl Eq for OrderedTime {}

impl PartialOrd for OrderedTime {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrderedTime {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// One cell of a scaling grid, also used for measured observations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub size_mb: f64,
    pub nodes: usize,
    pub makespan_s: f64,
}

/// Measured MapReduce wall-clock seconds for five input sizes on one, two
/// and three nodes of a small Hadoop cluster.
pub fn hadoop_scaling_observations() -> Vec<ScalingRow> {
    const SIZES: [f64; 5] = [160.0, 320.0, 640.0, 1300.0, 2600.0];
    const SECONDS: [[f64; 5]; 3] = [
        [29.0, 64.0, 408.0, 548.0, 1213.0],
        [38.0, 90.0, 359.0, 487.0, 1054.0],
        [55.0, 116.0, 352.0, 453.0, 901.0],
    ];
    let mut rows = Vec::with_capacity(15);
    for (i, &size_mb) in SIZES.iter().enumerate() {
        for (k, row) in SECONDS.iter().enumerate() {
            rows.push(ScalingRow {
                size_mb,
                nodes: k + 1,
                makespan_s: row[i],
            });
        }
    }
    rows
}

/// Job of `size_mb` split evenly over `nodes` nodes, one task per node.
pub fn even_split(
    size_mb: f64,
    nodes: usize,
    model: &OverheadModel,
) -> Result<(Instance, Assignment)> {
    if !(size_mb.is_finite() && size_mb > 0.0) {
        return Err(Error::invalid(format!(
            "job size must be positive, got {size_mb}"
        )));
    }
    if nodes == 0 {
        return Err(Error::invalid("node count must be at least 1"));
    }
    let share = size_mb / nodes as f64;
    let etc = EtcMatrix::from_flat(
        nodes,
        nodes,
        vec![share / model.compute_rate; nodes * nodes],
    )?;
    let inst = Instance::new(
        TaskSet::with_sizes(vec![share; nodes])?,
        NodeSet::idle(nodes)?,
        etc,
        WorkloadWeights::default(),
    )?;
    let assignment = Assignment::from_lists((0..nodes).map(|i| vec![i]).collect())?;
    Ok((inst, assignment))
}

/// Simulates every `(size, node count)` pair with the job split evenly.
pub fn scaling_experiment(
    sizes_mb: &[f64],
    node_counts: &[usize],
    model: &OverheadModel,
) -> Result<Vec<ScalingRow>> {
    model.validate()?;
    if sizes_mb.is_empty() || node_counts.is_empty() {
        return Err(Error::invalid(
            "scaling experiment needs sizes and node counts",
        ));
    }
    let mut rows = Vec::with_capacity(sizes_mb.len() * node_counts.len());
    for &size_mb in sizes_mb {
        for &nodes in node_counts {
            let (inst, assignment) = even_split(size_mb, nodes, model)?;
            let sim = simulate(&assignment, &inst, model)?;
            rows.push(ScalingRow {
                size_mb,
                nodes,
                makespan_s: sim.makespan,
            });
        }
    }
    Ok(rows)
}

pub fn write_scaling_csv<W: Write>(rows: &[ScalingRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<scaling csv>", e))?;
    Ok(())
}

pub fn read_scaling_csv<R: std::io::Read>(input: R) -> Result<Vec<ScalingRow>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub model: OverheadModel,
    /// Residual sum of squares of the fitted node-count deltas.
    pub delta_rss: f64,
    /// Residual sum of squares of the fitted makespans themselves.
    pub residual: f64,
    pub sweeps: usize,
}

const MAX_SWEEPS: usize = 1_000_000;
const SWEEP_TOLERANCE: f64 = 1e-14;

/// Makespan of an even split, as a linear function of
/// `(startup, coordination, 1/compute_rate, 1/transfer_rate)`.
///
/// Every node gets the same share, so the makespan is that of a node that
/// pulls its data whenever such a node exists.
fn split_features(size_mb: f64, nodes: usize, data_node: Option<usize>) -> [f64; 4] {
    let share = size_mb / nodes as f64;
    let any_remote = (0..nodes).any(|i| Some(i) != data_node);
    [
        1.0,
        nodes as f64,
        share,
        if any_remote { share } else { 0.0 },
    ]
}

/// Fits the four overhead parameters to measured scaling observations.
///
/// The fit targets how makespan changes with node count: for each size, the
/// observation with the fewest nodes is the baseline, and the least-squares
/// objective is over `makespan(size, k) - makespan(size, k_min)`, where the
/// startup term cancels. Coordination and the two per-MB costs come from a
/// nonnegative cyclic coordinate descent on that objective; startup is then
/// the mean remaining offset, floored at zero. `template.data_node` is kept.
pub fn calibrate(
    template: &OverheadModel,
    observations: &[ScalingRow],
) -> Result<CalibrationReport> {
    if observations.len() < 4 {
        return Err(Error::IllPosed(format!(
            "need at least 4 observations for 4 parameters, got {}",
            observations.len()
        )));
    }
    for o in observations {
        if !(o.size_mb > 0.0 && o.nodes > 0 && o.makespan_s.is_finite() && o.makespan_s >= 0.0) {
            return Err(Error::IllPosed(format!("invalid observation {o:?}")));
        }
    }
    if observations.iter().all(|o| o == &observations[0]) {
        return Err(Error::IllPosed("all observations are identical".into()));
    }

    let data_node = template.data_node;
    let mut deltas: Vec<([f64; 3], f64)> = Vec::new();
    let mut sizes: Vec<f64> = observations.iter().map(|o| o.size_mb).collect();
    sizes.sort_by(f64::total_cmp);
    sizes.dedup();
    for size in sizes {
        let group: Vec<&ScalingRow> = observations.iter().filter(|o| o.size_mb == size).collect();
        let base = group
            .iter()
            .min_by_key(|o| o.nodes)
            .expect("nonempty group");
        let fb = split_features(size, base.nodes, data_node);
        for o in group.iter().filter(|o| o.nodes != base.nodes) {
            let f = split_features(size, o.nodes, data_node);
            deltas.push((
                [f[1] - fb[1], f[2] - fb[2], f[3] - fb[3]],
                o.makespan_s - base.makespan_s,
            ));
        }
    }
    if deltas.is_empty() {
        return Err(Error::IllPosed(
            "no input size was observed at two different node counts".into(),
        ));
    }

    // Normal equations of the delta objective.
    let mut gram = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for (x, y) in &deltas {
        for i in 0..3 {
            rhs[i] += x[i] * y;
            for j in 0..3 {
                gram[i][j] += x[i] * x[j];
            }
        }
    }
    let mut theta = [0.0f64; 3];
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        let mut max_step = 0.0f64;
        for j in 0..3 {
            if gram[j][j] <= 0.0 {
                theta[j] = 0.0;
                continue;
            }
            let others: f64 = (0..3)
                .filter(|&i| i != j)
                .map(|i| gram[j][i] * theta[i])
                .sum();
            let updated = ((rhs[j] - others) / gram[j][j]).max(0.0);
            max_step = max_step.max((updated - theta[j]).abs() * gram[j][j].sqrt());
            theta[j] = updated;
        }
        let scale = rhs.iter().map(|v| v.abs()).fold(1.0, f64::max).sqrt();
        if max_step <= SWEEP_TOLERANCE * scale {
            break;
        }
    }
    let [coordination, compute_cost, transfer_cost] = theta;
    if compute_cost <= 0.0 {
        return Err(Error::IllPosed(
            "observations imply no per-megabyte compute cost".into(),
        ));
    }

    let predict_variable = |o: &ScalingRow| {
        let f = split_features(o.size_mb, o.nodes, data_node);
        f[1] * coordination + f[2] * compute_cost + f[3] * transfer_cost
    };
    let startup = (observations
        .iter()
        .map(|o| o.makespan_s - predict_variable(o))
        .sum::<f64>()
        / observations.len() as f64)
        .max(0.0);

    let model = OverheadModel {
        startup,
        coordination,
        transfer_rate: if transfer_cost > 0.0 {
            1.0 / transfer_cost
        } else {
            0.0
        },
        compute_rate: 1.0 / compute_cost,
        data_node,
    };
    let delta_rss = deltas
        .iter()
        .map(|(x, y)| {
            let p = x[0] * coordination + x[1] * compute_cost + x[2] * transfer_cost;
            (p - y).powi(2)
        })
        .sum();
    let residual = observations
        .iter()
        .map(|o| (startup + predict_variable(o) - o.makespan_s).powi(2))
        .sum();
    Ok(CalibrationReport {
        model,
        delta_rss,
        residual,
        sweeps,
    })
}

/// Whether one input size orders its node counts the same way in the
/// simulation as in the reference measurements.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowVerdict {
    pub size_mb: f64,
    /// Node counts present in both grids, ascending.
    pub nodes: Vec<usize>,
    pub matches: bool,
}

/// Compares every pair of node counts within each size: the sign of the
/// makespan difference must agree between `simulated` and `reference`.
/// Sizes absent from the reference are skipped.
pub fn compare_orderings(simulated: &[ScalingRow], reference: &[ScalingRow]) -> Vec<RowVerdict> {
    let mut sizes: Vec<f64> = simulated.iter().map(|r| r.size_mb).collect();
    sizes.sort_by(f64::total_cmp);
    sizes.dedup();
    let lookup = |rows: &[ScalingRow], size: f64, k: usize| {
        rows.iter()
            .find(|r| r.size_mb == size && r.nodes == k)
            .map(|r| r.makespan_s)
    };
    let mut out = Vec::new();
    for size in sizes {
        let mut nodes: Vec<usize> = simulated
            .iter()
            .filter(|r| r.size_mb == size && lookup(reference, size, r.nodes).is_some())
            .map(|r| r.nodes)
            .collect();
        nodes.sort_unstable();
        nodes.dedup();
        if nodes.is_empty() {
            continue;
        }
        let mut matches = true;
        for (i, &a) in nodes.iter().enumerate() {
            for &b in &nodes[i + 1..] {
                let sim = lookup(simulated, size, b).unwrap() - lookup(simulated, size, a).unwrap();
                let obs = lookup(reference, size, b).unwrap() - lookup(reference, size, a).unwrap();
                if sim.total_cmp(&0.0) != obs.total_cmp(&0.0) {
                    matches = false;
                }
            }
        }
        out.push(RowVerdict {
            size_mb: size,
            nodes,
            matches,
        });
    }
    out
}
