//! Reference implementations shared by the integration tests. They are
//! written for clarity, not speed, and share no code with the library.

#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::{BTreeMap, VecDeque};

use lexphylo::embed::{SgnsParams, TrainingPair};
use lexphylo::phylo::PhyloTree;
use rand::seq::SliceRandom;
use rand::Rng;

/// Agglomerative Ward clustering by exhaustive closest-pair search and the
/// Lance-Williams update on (unsquared) distances. Returns
/// `(smaller id, larger id, height)` with leaves `0..n` and merge `k` creating
/// cluster `n + k`.
pub fn naive_ward(d: &[Vec<f64>]) -> Vec<(usize, usize, f64)> {
    let n = d.len();
    let mut dist: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for i in 0..n {
        for j in i + 1..n {
            dist.insert((i, j), d[i][j]);
        }
    }
    let key = |a: usize, b: usize| if a < b { (a, b) } else { (b, a) };
    let mut size: BTreeMap<usize, f64> = (0..n).map(|i| (i, 1.0)).collect();
    let mut out = Vec::new();
    for k in 0..n - 1 {
        let (&(a, b), &h) = dist.iter().min_by(|x, y| x.1.total_cmp(y.1)).unwrap();
        let new = n + k;
        let (na, nb) = (size[&a], size[&b]);
        let others: Vec<usize> = size.keys().copied().filter(|&c| c != a && c != b).collect();
        for c in others {
            let nc = size[&c];
            let dac = dist[&key(a, c)];
            let dbc = dist[&key(b, c)];
            let v = (((na + nc) * dac * dac + (nb + nc) * dbc * dbc - nc * h * h) / (na + nb + nc))
                .sqrt();
            dist.insert(key(c, new), v);
        }
        dist.retain(|&(x, y), _| x != a && x != b && y != a && y != b);
        size.remove(&a);
        size.remove(&b);
        size.insert(new, na + nb);
        out.push((a.min(b), a.max(b), h));
    }
    out
}

pub fn euclidean_rows(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|a| {
            rows.iter()
                .map(|b| {
                    a.iter()
                        .zip(b)
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum::<f64>()
                        .sqrt()
                })
                .collect()
        })
        .collect()
}

pub fn random_symmetric(n: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let x: f64 = rng.random();
            m[i][j] = x;
            m[j][i] = x;
        }
    }
    m
}

/// Random rooted binary tree over `labels` in Newick, built by joining
/// random pairs of subtrees; children order is random too.
pub fn random_newick(labels: &[String], rng: &mut impl Rng) -> String {
    let mut parts: Vec<String> = labels.to_vec();
    while parts.len() > 1 {
        parts.shuffle(rng);
        let a = parts.pop().unwrap();
        let b = parts.pop().unwrap();
        let len: f64 = rng.random_range(0.1..2.0);
        parts.push(format!("({a}:{len:.3},{b}:{len:.3})"));
    }
    format!("{};", parts[0])
}

/// The same tree with the children of every internal node listed in a random
/// order.
pub fn shuffled_newick(t: &PhyloTree, rng: &mut impl Rng) -> String {
    fn go(t: &PhyloTree, id: usize, rng: &mut impl Rng) -> String {
        let n = t.node(id);
        if n.children.is_empty() {
            return n.label.clone().unwrap();
        }
        let mut kids: Vec<String> = n.children.iter().map(|&c| go(t, c, rng)).collect();
        kids.shuffle(rng);
        format!("({})", kids.join(","))
    }
    format!("{};", go(t, t.root(), rng))
}

/// Leaf-to-leaf edge counts by breadth-first search over the undirected tree
/// graph, keyed by sorted label pair.
pub fn bfs_leaf_paths(t: &PhyloTree) -> BTreeMap<(String, String), u32> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); t.len()];
    for id in 0..t.len() {
        for &c in &t.node(id).children {
            adj[id].push(c);
            adj[c].push(id);
        }
    }
    let leaves: Vec<usize> = (0..t.len())
        .filter(|&i| t.node(i).children.is_empty())
        .collect();
    let mut out = BTreeMap::new();
    for &s in &leaves {
        let mut dist = vec![u32::MAX; t.len()];
        dist[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(x) = q.pop_front() {
            for &y in &adj[x] {
                if dist[y] == u32::MAX {
                    dist[y] = dist[x] + 1;
                    q.push_back(y);
                }
            }
        }
        for &e in &leaves {
            let (a, b) = (
                t.node(s).label.clone().unwrap(),
                t.node(e).label.clone().unwrap(),
            );
            if a < b {
                out.insert((a, b), dist[e]);
            }
        }
    }
    out
}

fn log_sigmoid(x: f64) -> f64 {
    -(1.0 + (-x).exp()).ln()
}

/// Negative-sampling objective written out directly from its definition.
pub fn sgns_loss(p: &SgnsParams, pairs: &[TrainingPair]) -> f64 {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut loss = 0.0;
    for pair in pairs {
        let u: Vec<f64> = p
            .base_row(pair.word)
            .iter()
            .zip(p.offset_row(pair.label, pair.word))
            .map(|(b, o)| b + o)
            .collect();
        loss -= log_sigmoid(dot(&u, p.context_row(pair.context)));
        for &n in &pair.negatives {
            loss -= log_sigmoid(-dot(&u, p.context_row(n)));
        }
    }
    loss
}

/// Largest relative error between the analytic gradient and central
/// differences of [`sgns_loss`], over every parameter the batch touches.
pub fn gradient_check(params: &SgnsParams, pairs: &[TrainingPair], h: f64) -> (f64, usize) {
    let analytic = params.batch_gradient(pairs).unwrap().1.flat();
    let n = params.flat().len();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for k in 0..n {
        let mut plus = params.clone();
        *plus.flat_mut().nth(k).unwrap() += h;
        let mut minus = params.clone();
        *minus.flat_mut().nth(k).unwrap() -= h;
        let numeric = (sgns_loss(&plus, pairs) - sgns_loss(&minus, pairs)) / (2.0 * h);
        let a = analytic[k];
        if a == 0.0 && numeric.abs() < 1e-12 {
            continue;
        }
        checked += 1;
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    (worst, checked)
}

/// A frozen batch: random parameters and ten pairs over a small vocabulary.
pub fn frozen_batch(rng: &mut impl Rng) -> (SgnsParams, Vec<TrainingPair>) {
    let (dim, vocab, labels) = (6, 9, 3);
    let mut gen = |k: usize| {
        (0..k)
            .map(|_| rng.random_range(-0.5..0.5))
            .collect::<Vec<f64>>()
    };
    let params = SgnsParams::from_parts(
        dim,
        vocab,
        labels,
        gen(vocab * dim),
        gen(labels * vocab * dim),
        gen(vocab * dim),
    )
    .unwrap();
    let pairs = (0..10)
        .map(|i| TrainingPair {
            word: i % vocab,
            label: i % labels,
            context: (i * 4 + 1) % vocab,
            negatives: vec![(i + 3) % vocab, (i * 7 + 2) % vocab],
        })
        .collect();
    (params, pairs)
}

/// Writes straight to the process stdout so the line survives test capture.
pub fn report(line: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}
