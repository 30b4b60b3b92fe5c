use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Indirect task-to-node encoding: gene `j` holds the one-based index of the
/// node that runs task `j`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Chromosome {
    genes: Vec<u32>,
}

impl Chromosome {
    /// Wraps a gene string without checking it; see [`Chromosome::validate`].
    pub fn new(genes: Vec<u32>) -> Self {
        Chromosome { genes }
    }

    pub fn checked(genes: Vec<u32>, n_nodes: usize) -> Result<Self> {
        let c = Chromosome { genes };
        c.validate(n_nodes)?;
        Ok(c)
    }

    /// Each gene drawn independently and uniformly from `[1, n_nodes]`.
    pub fn random<R: Rng + ?Sized>(n_tasks: usize, n_nodes: usize, rng: &mut R) -> Result<Self> {
        if n_tasks == 0 || n_nodes == 0 {
            return Err(Error::invalid(format!(
                "cannot draw a chromosome for {n_tasks} tasks on {n_nodes} nodes"
            )));
        }
        let hi = n_nodes as u32;
        Ok(Chromosome {
            genes: (0..n_tasks).map(|_| rng.gen_range(1..=hi)).collect(),
        })
    }

    /// Inverse of [`decode`].
    pub fn from_assignment(a: &Assignment) -> Self {
        let mut genes = vec![0u32; a.n_tasks()];
        for (node, tasks) in a.lists().iter().enumerate() {
            for &t in tasks {
                genes[t] = node as u32 + 1;
            }
        }
        Chromosome { genes }
    }

    pub fn genes(&self) -> &[u32] {
        &self.genes
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    /// Zero-based node running `task`.
    #[inline]
    pub fn node_of(&self, task: usize) -> usize {
        self.genes[task] as usize - 1
    }

    pub fn validate(&self, n_nodes: usize) -> Result<()> {
        match self
            .genes
            .iter()
            .position(|&g| g == 0 || g as usize > n_nodes)
        {
            Some(position) => Err(Error::CorruptChromosome {
                position,
                gene: self.genes[position],
                n_nodes,
            }),
            None => Ok(()),
        }
    }

    /// Validates length and gene range against an instance shape.
    pub fn validate_for(&self, n_tasks: usize, n_nodes: usize) -> Result<()> {
        if self.genes.len() != n_tasks {
            return Err(Error::invalid(format!(
                "chromosome has {} genes, instance has {n_tasks} tasks",
                self.genes.len()
            )));
        }
        self.validate(n_nodes)
    }
}

impl std::fmt::Display for Chromosome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut first = true;
        for g in &self.genes {
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{g}")?;
            first = false;
        }
        Ok(())
    }
}

/// Decoded task-resource table: for each node, the zero-based indices of the
/// tasks it runs in ascending order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    lists: Vec<Vec<usize>>,
    n_tasks: usize,
}

impl Assignment {
    /// Builds an assignment from explicit per-node lists. The lists must
    /// partition `0..n_tasks`.
    pub fn from_lists(mut lists: Vec<Vec<usize>>) -> Result<Self> {
        let n_tasks: usize = lists.iter().map(Vec::len).sum();
        let mut seen = vec![false; n_tasks];
        for list in &mut lists {
            list.sort_unstable();
            for &t in list.iter() {
                if t >= n_tasks || std::mem::replace(&mut seen[t], true) {
                    return Err(Error::invalid(format!(
                        "task lists do not partition 0..{n_tasks} (task {t})"
                    )));
                }
            }
        }
        if lists.is_empty() {
            return Err(Error::invalid("assignment needs at least one node"));
        }
        Ok(Assignment { lists, n_tasks })
    }

    pub fn lists(&self) -> &[Vec<usize>] {
        &self.lists
    }

    pub fn tasks_on(&self, node: usize) -> &[usize] {
        &self.lists[node]
    }

    pub fn n_nodes(&self) -> usize {
        self.lists.len()
    }

    pub fn n_tasks(&self) -> usize {
        self.n_tasks
    }

    /// Number of nodes with at least one task.
    pub fn active_nodes(&self) -> usize {
        self.lists.iter().filter(|l| !l.is_empty()).count()
    }
}

/// Expands a chromosome into per-node task lists.
pub fn decode(c: &Chromosome, n_nodes: usize) -> Result<Assignment> {
    c.validate(n_nodes)?;
    let mut lists = vec![Vec::new(); n_nodes];
    for (task, _) in c.genes.iter().enumerate() {
        lists[c.node_of(task)].push(task);
    }
    Ok(Assignment {
        lists,
        n_tasks: c.len(),
    })
}

/// Single-point crossover at `cut`: the children swap suffixes from `cut` on.
pub fn crossover_at(
    a: &Chromosome,
    b: &Chromosome,
    cut: usize,
) -> Result<(Chromosome, Chromosome)> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "crossover parents differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if cut > a.len() {
        return Err(Error::invalid(format!(
            "cut {cut} beyond chromosome length {}",
            a.len()
        )));
    }
    let mut x = a.genes[..cut].to_vec();
    x.extend_from_slice(&b.genes[cut..]);
    let mut y = b.genes[..cut].to_vec();
    y.extend_from_slice(&a.genes[cut..]);
    Ok((Chromosome { genes: x }, Chromosome { genes: y }))
}

/// Single-point crossover with the cut drawn uniformly from `[1, N-1]`.
/// Parents of length one are returned unchanged.
pub fn crossover<R: Rng + ?Sized>(
    a: &Chromosome,
    b: &Chromosome,
    rng: &mut R,
) -> Result<(Chromosome, Chromosome)> {
    if a.len() != b.len() {
        return crossover_at(a, b, 0);
    }
    if a.len() < 2 {
        return Ok((a.clone(), b.clone()));
    }
    let cut = rng.gen_range(1..a.len());
    crossover_at(a, b, cut)
}

/// Reassigns one uniformly chosen gene to a uniformly chosen node. The new
/// node may equal the old one.
pub fn mutate<R: Rng + ?Sized>(c: &Chromosome, n_nodes: usize, rng: &mut R) -> Chromosome {
    let mut out = c.clone();
    mutate_in_place(&mut out, n_nodes, rng);
    out
}

pub(crate) fn mutate_in_place<R: Rng + ?Sized>(c: &mut Chromosome, n_nodes: usize, rng: &mut R) {
    if c.genes.is_empty() || n_nodes == 0 {
        return;
    }
    let pos = rng.gen_range(0..c.genes.len());
    c.genes[pos] = rng.gen_range(1..=n_nodes as u32);
}
