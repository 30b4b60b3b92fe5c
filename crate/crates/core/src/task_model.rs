//! Tasks, nodes, the expected-time-to-complete (ETC) matrix and node workload.
//!
//! An [`Instance`] bundles everything a scheduler needs: `N` subtasks, `R`
//! heterogeneous nodes with a utilization snapshot each, the `N x R` ETC
//! matrix and the weights that fold a utilization snapshot into one workload
//! figure. Instances are validated on construction and immutable afterwards.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// Utilization of the four resources that make up a node's workload.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct ResourceUsage {
    pub cpu: f64,
    pub mem: f64,
    pub disk: f64,
    pub net: f64,
}

impl ResourceUsage {
    pub const IDLE: ResourceUsage = ResourceUsage {
        cpu: 0.0,
        mem: 0.0,
        disk: 0.0,
        net: 0.0,
    };

    pub fn new(cpu: f64, mem: f64, disk: f64, net: f64) -> Result<Self> {
        let usage = ResourceUsage {
            cpu,
            mem,
            disk,
            net,
        };
        usage.validate()?;
        Ok(usage)
    }

    /// Same utilization on every resource.
    pub fn uniform(level: f64) -> Result<Self> {
        Self::new(level, level, level, level)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.named() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!(
                    "{name} utilization {v} is outside [0, 1]"
                )));
            }
        }
        Ok(())
    }

    fn named(&self) -> [(&'static str, f64); 4] {
        [
            ("cpu", self.cpu),
            ("mem", self.mem),
            ("disk", self.disk),
            ("net", self.net),
        ]
    }
}

impl TryFrom<[f64; 4]> for ResourceUsage {
    type Error = Error;

    fn try_from(v: [f64; 4]) -> Result<Self> {
        ResourceUsage::new(v[0], v[1], v[2], v[3])
    }
}

impl From<ResourceUsage> for [f64; 4] {
    fn from(u: ResourceUsage) -> Self {
        [u.cpu, u.mem, u.disk, u.net]
    }
}

/// Share of each resource in a node's overall workload. Must sum to one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WeightsRepr", into = "WeightsRepr")]
pub struct WorkloadWeights {
    pub cpu: f64,
    pub mem: f64,
    pub disk: f64,
    pub net: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsRepr {
    cpu: f64,
    mem: f64,
    disk: f64,
    net: f64,
}

impl TryFrom<WeightsRepr> for WorkloadWeights {
    type Error = Error;

    fn try_from(r: WeightsRepr) -> Result<Self> {
        WorkloadWeights::new(r.cpu, r.mem, r.disk, r.net)
    }
}

impl From<WorkloadWeights> for WeightsRepr {
    fn from(w: WorkloadWeights) -> Self {
        WeightsRepr {
            cpu: w.cpu,
            mem: w.mem,
            disk: w.disk,
            net: w.net,
        }
    }
}

impl WorkloadWeights {
    pub fn new(cpu: f64, mem: f64, disk: f64, net: f64) -> Result<Self> {
        let w = WorkloadWeights {
            cpu,
            mem,
            disk,
            net,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.cpu, self.mem, self.disk, self.net];
        if parts.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid(format!(
                "workload weights must be finite and nonnegative, got {parts:?}"
            )));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::invalid(format!(
                "workload weights must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }
}

impl Default for WorkloadWeights {
    /// (cpu, mem, disk, net) = (0.4, 0.3, 0.2, 0.1). An arbitrary but fixed
    /// choice; override it whenever real proportions are known.
    fn default() -> Self {
        WorkloadWeights {
            cpu: 0.4,
            mem: 0.3,
            disk: 0.2,
            net: 0.1,
        }
    }
}

/// Weighted sum of a node's resource utilizations, in `[0, 1]`.
pub fn node_workload(usage: &ResourceUsage, weights: &WorkloadWeights) -> Result<f64> {
    usage.validate()?;
    weights.validate()?;
    Ok(workload_unchecked(usage, weights))
}

fn workload_unchecked(u: &ResourceUsage, w: &WorkloadWeights) -> f64 {
    let raw = w.cpu * u.cpu + w.mem * u.mem + w.disk * u.disk + w.net * u.net;
    // Weights may sum to 1 + 1e-9.
    raw.clamp(0.0, 1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSet {
    pub count: usize,
    /// Nominal input size of each task in megabytes. Only the cluster
    /// simulator reads these.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<f64>>,
}

impl TaskSet {
    pub fn new(count: usize) -> Result<Self> {
        let t = TaskSet { count, sizes: None };
        t.validate()?;
        Ok(t)
    }

    pub fn with_sizes(sizes: Vec<f64>) -> Result<Self> {
        let t = TaskSet {
            count: sizes.len(),
            sizes: Some(sizes),
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::invalid("task count must be at least 1"));
        }
        if let Some(sizes) = &self.sizes {
            if sizes.len() != self.count {
                return Err(Error::invalid(format!(
                    "{} task sizes given for {} tasks",
                    sizes.len(),
                    self.count
                )));
            }
            if let Some(bad) = sizes.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
                return Err(Error::invalid(format!("task size {bad} is not positive")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSet {
    pub count: usize,
    pub usage: Vec<ResourceUsage>,
}

impl NodeSet {
    pub fn new(usage: Vec<ResourceUsage>) -> Result<Self> {
        let n = NodeSet {
            count: usage.len(),
            usage,
        };
        n.validate()?;
        Ok(n)
    }

    pub fn idle(count: usize) -> Result<Self> {
        Self::new(vec![ResourceUsage::IDLE; count])
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::invalid("node count must be at least 1"));
        }
        if self.usage.len() != self.count {
            return Err(Error::invalid(format!(
                "{} usage snapshots given for {} nodes",
                self.usage.len(),
                self.count
            )));
        }
        self.usage.iter().try_for_each(ResourceUsage::validate)
    }
}

/// Expected time to complete each task on each node, stored task-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct EtcMatrix {
    n_tasks: usize,
    n_nodes: usize,
    entries: Vec<f64>,
}

impl EtcMatrix {
    /// Builds the matrix from one row per task, one column per node.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_tasks = rows.len();
        let n_nodes = rows.first().map_or(0, Vec::len);
        if n_tasks == 0 || n_nodes == 0 {
            return Err(Error::invalid("ETC matrix must be at least 1x1"));
        }
        let mut entries = Vec::with_capacity(n_tasks * n_nodes);
        for (t, row) in rows.into_iter().enumerate() {
            if row.len() != n_nodes {
                return Err(Error::invalid(format!(
                    "ETC row {t} has {} columns, expected {n_nodes}",
                    row.len()
                )));
            }
            entries.extend(row);
        }
        Self::from_flat(n_tasks, n_nodes, entries)
    }

    pub fn from_flat(n_tasks: usize, n_nodes: usize, entries: Vec<f64>) -> Result<Self> {
        if n_tasks == 0 || n_nodes == 0 || entries.len() != n_tasks * n_nodes {
            return Err(Error::invalid(format!(
                "ETC matrix of {} entries does not match {n_tasks}x{n_nodes}",
                entries.len()
            )));
        }
        if let Some(pos) = entries.iter().position(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(Error::invalid(format!(
                "ETC entry (task {}, node {}) = {} must be positive and finite",
                pos / n_nodes,
                pos % n_nodes,
                entries[pos]
            )));
        }
        Ok(EtcMatrix {
            n_tasks,
            n_nodes,
            entries,
        })
    }

    pub fn n_tasks(&self) -> usize {
        self.n_tasks
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Seconds for `node` to run `task`, both zero-based.
    #[inline]
    pub fn get(&self, task: usize, node: usize) -> f64 {
        self.entries[task * self.n_nodes + node]
    }

    pub fn row(&self, task: usize) -> &[f64] {
        &self.entries[task * self.n_nodes..(task + 1) * self.n_nodes]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.chunks_exact(self.n_nodes)
    }

    /// Every entry multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        Self::from_flat(
            self.n_tasks,
            self.n_nodes,
            self.entries.iter().map(|e| e * k).collect(),
        )
    }
}

impl TryFrom<Vec<Vec<f64>>> for EtcMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        EtcMatrix::from_rows(rows)
    }
}

impl From<EtcMatrix> for Vec<Vec<f64>> {
    fn from(m: EtcMatrix) -> Self {
        m.rows().map(<[f64]>::to_vec).collect()
    }
}

/// A complete scheduling problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceRepr", into = "InstanceRepr")]
pub struct Instance {
    tasks: TaskSet,
    nodes: NodeSet,
    etc: EtcMatrix,
    weights: WorkloadWeights,
    workloads: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceRepr {
    tasks: TaskSet,
    nodes: NodeSet,
    etc: EtcMatrix,
    #[serde(default)]
    weights: WorkloadWeights,
}

impl TryFrom<InstanceRepr> for Instance {
    type Error = Error;

    fn try_from(r: InstanceRepr) -> Result<Self> {
        Instance::new(r.tasks, r.nodes, r.etc, r.weights)
    }
}

impl From<Instance> for InstanceRepr {
    fn from(i: Instance) -> Self {
        InstanceRepr {
            tasks: i.tasks,
            nodes: i.nodes,
            etc: i.etc,
            weights: i.weights,
        }
    }
}

impl Instance {
    pub fn new(
        tasks: TaskSet,
        nodes: NodeSet,
        etc: EtcMatrix,
        weights: WorkloadWeights,
    ) -> Result<Self> {
        tasks.validate()?;
        nodes.validate()?;
        weights.validate()?;
        if etc.n_tasks() != tasks.count || etc.n_nodes() != nodes.count {
            return Err(Error::invalid(format!(
                "ETC matrix is {}x{} but instance has {} tasks and {} nodes",
                etc.n_tasks(),
                etc.n_nodes(),
                tasks.count,
                nodes.count
            )));
        }
        let workloads = nodes
            .usage
            .iter()
            .map(|u| workload_unchecked(u, &weights))
            .collect();
        Ok(Instance {
            tasks,
            nodes,
            etc,
            weights,
            workloads,
        })
    }

    /// Instance with idle nodes, default weights and no task sizes.
    pub fn from_etc(etc: EtcMatrix) -> Result<Self> {
        Self::new(
            TaskSet::new(etc.n_tasks())?,
            NodeSet::idle(etc.n_nodes())?,
            etc,
            WorkloadWeights::default(),
        )
    }

    pub fn n_tasks(&self) -> usize {
        self.tasks.count
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.count
    }

    pub fn tasks(&self) -> &TaskSet {
        &self.tasks
    }

    pub fn nodes(&self) -> &NodeSet {
        &self.nodes
    }

    pub fn etc(&self) -> &EtcMatrix {
        &self.etc
    }

    pub fn weights(&self) -> &WorkloadWeights {
        &self.weights
    }

    /// Workload of every node under the instance weights.
    pub fn workloads(&self) -> &[f64] {
        &self.workloads
    }

    pub fn workload(&self, node: usize) -> f64 {
        self.workloads[node]
    }

    pub fn with_usage(self, usage: Vec<ResourceUsage>) -> Result<Self> {
        Self::new(self.tasks, NodeSet::new(usage)?, self.etc, self.weights)
    }

    pub fn with_weights(self, weights: WorkloadWeights) -> Result<Self> {
        Self::new(self.tasks, self.nodes, self.etc, weights)
    }

    pub fn with_task_sizes(self, sizes: Vec<f64>) -> Result<Self> {
        Self::new(
            TaskSet::with_sizes(sizes)?,
            self.nodes,
            self.etc,
            self.weights,
        )
    }

    pub fn with_etc(self, etc: EtcMatrix) -> Result<Self> {
        Self::new(self.tasks, self.nodes, etc, self.weights)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Draws a synthetic instance.
///
/// Each task gets a base time uniform in `[1, 100]` s and each node a
/// slowdown factor uniform in `[1, heterogeneity]`; the ETC entry is their
/// product. Utilizations are uniform in `[0, 1]`. The result depends only on
/// the arguments.
pub fn generate_instance(
    n_tasks: usize,
    n_nodes: usize,
    heterogeneity: f64,
    seed: u64,
) -> Result<Instance> {
    if n_tasks == 0 || n_nodes == 0 {
        return Err(Error::invalid(format!(
            "instance needs at least one task and one node, got {n_tasks}x{n_nodes}"
        )));
    }
    if !(heterogeneity.is_finite() && heterogeneity >= 1.0) {
        return Err(Error::invalid(format!(
            "heterogeneity must be >= 1, got {heterogeneity}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base: Vec<f64> = (0..n_tasks).map(|_| rng.gen_range(1.0..=100.0)).collect();
    let speed: Vec<f64> = (0..n_nodes)
        .map(|_| {
            if heterogeneity == 1.0 {
                1.0
            } else {
                rng.gen_range(1.0..=heterogeneity)
            }
        })
        .collect();
    let usage = (0..n_nodes)
        .map(|_| ResourceUsage {
            cpu: rng.gen_range(0.0..=1.0),
            mem: rng.gen_range(0.0..=1.0),
            disk: rng.gen_range(0.0..=1.0),
            net: rng.gen_range(0.0..=1.0),
        })
        .collect();
    let entries = base
        .iter()
        .flat_map(|b| speed.iter().map(move |s| b * s))
        .collect();
    Instance::new(
        TaskSet::new(n_tasks)?,
        NodeSet::new(usage)?,
        EtcMatrix::from_flat(n_tasks, n_nodes, entries)?,
        WorkloadWeights::default(),
    )
}
