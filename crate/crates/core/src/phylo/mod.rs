//! Trees over labels: Ward clustering, flat cuts, Newick I/O and
//! leaf-path comparison against a reference tree.

mod flat;
mod newick;
mod ward;

use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

pub use flat::{
    flat_clusters, inconsistency, write_clusters_tsv, FlatCluster, DEFAULT_FLAT_DEPTH,
    DEFAULT_FLAT_THRESHOLD,
};
pub use newick::{parse_newick, to_newick};
pub use ward::{ward_linkage, Linkage, Merge};

use crate::distance::DistanceMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub label: Option<String>,
    pub children: Vec<usize>,
    pub parent: Option<usize>,
    /// Distance above the deepest leaf; leaves of an ultrametric tree sit at 0.
    pub height: f64,
    /// Length of the edge to the parent.
    pub length: Option<f64>,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Rooted tree stored as an arena of nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PhyloTree {
    nodes: Vec<Node>,
    root: usize,
}

impl PhyloTree {
    /// Validates labels and derives heights from branch lengths (missing
    /// lengths count as 1).
    pub(crate) fn from_nodes(mut nodes: Vec<Node>, root: usize) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for n in &nodes {
            if n.is_leaf() {
                let Some(l) = &n.label else {
                    return Err(Error::Validation("unlabeled leaf".into()));
                };
                if !seen.insert(l.clone()) {
                    return Err(Error::Validation(format!("duplicate leaf label {l:?}")));
                }
            }
        }
        let mut depth = vec![0.0; nodes.len()];
        let mut stack = vec![root];
        let mut max_depth: f64 = 0.0;
        while let Some(id) = stack.pop() {
            for &c in &nodes[id].children {
                depth[c] = depth[id] + nodes[c].length.unwrap_or(1.0);
                max_depth = max_depth.max(depth[c]);
                stack.push(c);
            }
        }
        for (n, d) in nodes.iter_mut().zip(&depth) {
            n.height = max_depth - d;
        }
        Ok(PhyloTree { nodes, root })
    }

    /// Tree of a linkage over `labels`; heights are merge heights and branch
    /// lengths their differences.
    pub fn from_linkage(labels: &[String], merges: &[Merge]) -> Result<Self> {
        let n = labels.len();
        if merges.len() + 1 != n {
            return Err(Error::Validation(format!(
                "{} merges for {n} leaves",
                merges.len()
            )));
        }
        let mut nodes: Vec<Node> = labels
            .iter()
            .map(|l| Node {
                label: Some(l.clone()),
                children: Vec::new(),
                parent: None,
                height: 0.0,
                length: None,
            })
            .collect();
        for (k, m) in merges.iter().enumerate() {
            let id = n + k;
            if m.left >= id
                || m.right >= id
                || nodes[m.left].parent.is_some()
                || nodes[m.right].parent.is_some()
            {
                return Err(Error::Validation(format!(
                    "merge {k} refers to an unavailable cluster"
                )));
            }
            for c in [m.left, m.right] {
                nodes[c].parent = Some(id);
                nodes[c].length = Some(m.height - nodes[c].height);
            }
            nodes.push(Node {
                label: None,
                children: vec![m.left, m.right],
                parent: None,
                height: m.height,
                length: None,
            });
        }
        let root = nodes.len() - 1;
        Ok(PhyloTree { nodes, root })
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Node ids in depth-first pre-order, children left to right.
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            out.push(id);
            stack.extend(self.nodes[id].children.iter().rev());
        }
        out
    }

    /// Leaf labels in left-to-right order.
    pub fn leaf_labels(&self) -> Vec<&str> {
        self.preorder()
            .into_iter()
            .filter_map(|id| {
                let n = &self.nodes[id];
                if n.is_leaf() {
                    n.label.as_deref()
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn leaves_under(&self, id: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(x) = stack.pop() {
            let n = &self.nodes[x];
            if n.is_leaf() {
                out.push(x);
            } else {
                stack.extend(n.children.iter().rev());
            }
        }
        out
    }

    /// Restricts the tree to the leaves in `keep`. Internal nodes left with
    /// one child are spliced out and their branch lengths summed.
    pub fn prune(&self, keep: &BTreeSet<String>) -> Result<PhyloTree> {
        let sub = self
            .pruned(self.root, keep)
            .ok_or_else(|| Error::Empty("pruning removed every leaf".into()))?;
        let mut nodes = Vec::new();
        let root = sub.flatten(None, &mut nodes);
        nodes[root].length = None;
        PhyloTree::from_nodes(nodes, root)
    }

    fn pruned(&self, id: usize, keep: &BTreeSet<String>) -> Option<Subtree> {
        let n = &self.nodes[id];
        if n.is_leaf() {
            return n
                .label
                .as_ref()
                .filter(|l| keep.contains(*l))
                .map(|l| Subtree {
                    label: Some(l.clone()),
                    length: n.length,
                    children: Vec::new(),
                });
        }
        let mut kids: Vec<Subtree> = n
            .children
            .iter()
            .filter_map(|&c| self.pruned(c, keep))
            .collect();
        match kids.len() {
            0 => None,
            1 => {
                let mut only = kids.pop().expect("one child");
                only.length = match (n.length, only.length) {
                    (None, None) => None,
                    (a, b) => Some(a.unwrap_or(1.0) + b.unwrap_or(1.0)),
                };
                Some(only)
            }
            _ => Some(Subtree {
                label: n.label.clone(),
                length: n.length,
                children: kids,
            }),
        }
    }
}

struct Subtree {
    label: Option<String>,
    length: Option<f64>,
    children: Vec<Subtree>,
}

impl Subtree {
    fn flatten(self, parent: Option<usize>, out: &mut Vec<Node>) -> usize {
        let id = out.len();
        out.push(Node {
            label: self.label,
            children: Vec::new(),
            parent,
            height: 0.0,
            length: self.length,
        });
        let kids: Vec<usize> = self
            .children
            .into_iter()
            .map(|c| c.flatten(Some(id), out))
            .collect();
        out[id].children = kids;
        id
    }
}

/// Ward clustering of a distance matrix.
pub fn ward_cluster(m: &DistanceMatrix, linkage: Linkage) -> Result<PhyloTree> {
    let merges = ward_linkage(m, linkage)?;
    PhyloTree::from_linkage(m.labels(), &merges)
}

/// Edge counts of the paths between every pair of leaves, labels sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeafPathProfile {
    pub labels: Vec<String>,
    pub d: Vec<Vec<u32>>,
}

pub fn leaf_paths(t: &PhyloTree) -> LeafPathProfile {
    let mut depth = vec![0u32; t.len()];
    for id in t.preorder() {
        for &c in &t.node(id).children {
            depth[c] = depth[id] + 1;
        }
    }
    let mut leaves: Vec<(String, usize)> = t
        .preorder()
        .into_iter()
        .filter(|&id| t.node(id).is_leaf())
        .map(|id| (t.node(id).label.clone().unwrap_or_default(), id))
        .collect();
    leaves.sort();
    let ancestors = |mut x: usize| {
        let mut v = vec![x];
        while let Some(p) = t.node(x).parent {
            v.push(p);
            x = p;
        }
        v
    };
    let chains: Vec<Vec<usize>> = leaves.iter().map(|&(_, id)| ancestors(id)).collect();
    let n = leaves.len();
    let mut d = vec![vec![0u32; n]; n];
    for i in 0..n {
        let on_path: std::collections::HashSet<usize> = chains[i].iter().copied().collect();
        for j in i + 1..n {
            let lca = *chains[j]
                .iter()
                .find(|a| on_path.contains(a))
                .expect("common root");
            let v = depth[leaves[i].1] + depth[leaves[j].1] - 2 * depth[lca];
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    LeafPathProfile {
        labels: leaves.into_iter().map(|(l, _)| l).collect(),
        d,
    }
}

fn label_mismatch(a: &[String], b: &[String]) -> Option<Error> {
    let (sa, sb): (BTreeSet<&String>, BTreeSet<&String>) = (a.iter().collect(), b.iter().collect());
    if sa == sb {
        return None;
    }
    Some(Error::LabelMismatch {
        only_first: sa.difference(&sb).map(|s| s.to_string()).collect(),
        only_second: sb.difference(&sa).map(|s| s.to_string()).collect(),
    })
}

/// Sum over unordered leaf pairs of squared leaf-path length differences.
pub fn tree_distance(tau: &PhyloTree, gold: &PhyloTree) -> Result<f64> {
    let (a, b) = (leaf_paths(tau), leaf_paths(gold));
    if let Some(e) = label_mismatch(&a.labels, &b.labels) {
        return Err(e);
    }
    let n = a.labels.len();
    let mut sum = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let diff = a.d[i][j] as f64 - b.d[i][j] as f64;
            sum += diff * diff;
        }
    }
    Ok(sum)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub raw: f64,
    pub normalized: f64,
    pub random_mean: f64,
    pub n_random: usize,
    pub seed: u64,
}

/// Symmetric matrix with uniform(0, 1) off-diagonal entries.
pub fn random_matrix(labels: &[String], rng: &mut impl Rng) -> DistanceMatrix {
    let n = labels.len();
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let x: f64 = rng.random();
            m[i][j] = x;
            m[j][i] = x;
        }
    }
    DistanceMatrix::new(labels.to_vec(), m).expect("valid random matrix")
}

/// Raw tree distance of `tau` from `gold`, divided by the mean distance of
/// Ward trees built from `n_random` random matrices. Sample `s` draws from
/// stream `s` of a generator seeded with `seed`.
pub fn normalized_tree_distance(
    tau: &PhyloTree,
    gold: &PhyloTree,
    n_random: usize,
    seed: u64,
    linkage: Linkage,
) -> Result<Evaluation> {
    if n_random == 0 {
        return Err(Error::Parameter("n_random must be at least 1".into()));
    }
    let raw = tree_distance(tau, gold)?;
    let labels = leaf_paths(tau).labels;
    let samples: Vec<f64> = (0..n_random)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s as u64);
            let t = ward_cluster(&random_matrix(&labels, &mut rng), linkage)?;
            tree_distance(&t, gold)
        })
        .collect::<Result<_>>()?;
    let random_mean = samples.iter().sum::<f64>() / n_random as f64;
    let normalized = if raw == 0.0 {
        0.0
    } else if random_mean > 0.0 {
        (raw / random_mean).max(0.0)
    } else {
        return Err(Error::Validation(
            "random baseline distance is zero; too few leaves to normalize".into(),
        ));
    };
    Ok(Evaluation {
        raw,
        normalized,
        random_mean,
        n_random,
        seed,
    })
}

/// Groups of labels that share a cluster id.
pub fn partition(clusters: &[FlatCluster]) -> BTreeSet<BTreeSet<String>> {
    let mut by_id: HashMap<usize, BTreeSet<String>> = HashMap::new();
    for c in clusters {
        by_id.entry(c.cluster).or_default().insert(c.label.clone());
    }
    by_id.into_values().collect()
}
