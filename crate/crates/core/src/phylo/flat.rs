use std::io::Write;

use serde::Serialize;

use super::PhyloTree;

pub const DEFAULT_FLAT_DEPTH: usize = 2;
pub const DEFAULT_FLAT_THRESHOLD: f64 = 1.15;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FlatCluster {
    pub label: String,
    pub cluster: usize,
}

/// Inconsistency coefficient of every internal node, indexed by node id
/// (leaves get `None`). Each node is compared with the merge heights of the
/// internal nodes at most `depth - 1` levels below it, itself included, using
/// the sample standard deviation. A zero deviation gives coefficient 0.
pub fn inconsistency(t: &PhyloTree, depth: usize) -> Vec<Option<f64>> {
    let mut out = vec![None; t.len()];
    for id in 0..t.len() {
        if t.node(id).is_leaf() {
            continue;
        }
        let mut heights = Vec::new();
        let mut frontier = vec![id];
        for _ in 0..depth {
            let mut next = Vec::new();
            for x in frontier {
                let n = t.node(x);
                if n.is_leaf() {
                    continue;
                }
                heights.push(n.height);
                next.extend(n.children.iter().copied());
            }
            frontier = next;
        }
        let k = heights.len() as f64;
        let mean = heights.iter().sum::<f64>() / k;
        let var = if heights.len() < 2 {
            0.0
        } else {
            heights.iter().map(|h| (h - mean) * (h - mean)).sum::<f64>() / (k - 1.0)
        };
        let coef = if var > 0.0 {
            (t.node(id).height - mean) / var.sqrt()
        } else {
            0.0
        };
        out[id] = Some(coef);
    }
    out
}

/// Flat clusters by the inconsistency criterion: the highest nodes whose
/// subtree has no coefficient above `threshold` become clusters. Ids start at
/// 1 and follow the left-to-right leaf order; output is sorted by label.
pub fn flat_clusters(t: &PhyloTree, depth: usize, threshold: f64) -> Vec<FlatCluster> {
    let coef = inconsistency(t, depth);
    let mut max_below = vec![f64::NEG_INFINITY; t.len()];
    for &id in t.preorder().iter().rev() {
        let n = t.node(id);
        let mut m = coef[id].unwrap_or(f64::NEG_INFINITY);
        for &c in &n.children {
            m = m.max(max_below[c]);
        }
        max_below[id] = m;
    }
    let mut out = Vec::new();
    let mut next_id = 1;
    let mut stack = vec![t.root()];
    while let Some(id) = stack.pop() {
        let n = t.node(id);
        if n.is_leaf() || max_below[id] <= threshold {
            for leaf in t.leaves_under(id) {
                out.push(FlatCluster {
                    label: t.node(leaf).label.clone().unwrap_or_default(),
                    cluster: next_id,
                });
            }
            next_id += 1;
        } else {
            stack.extend(n.children.iter().rev());
        }
    }
    out.sort_by(|a, b| a.label.cmp(&b.label));
    out
}

/// `label<TAB>cluster_id` lines.
pub fn write_clusters_tsv(clusters: &[FlatCluster], mut w: impl Write) -> std::io::Result<()> {
    for c in clusters {
        writeln!(w, "{}\t{}", c.label, c.cluster)?;
    }
    Ok(())
}
