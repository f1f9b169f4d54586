use serde::{Deserialize, Serialize};

use crate::distance::DistanceMatrix;
use crate::error::{Error, Result};

/// One agglomeration step. Leaves are `0..n`; the cluster created by merge
/// `k` has id `n + k`. `left < right`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

/// How the matrix is turned into dissimilarities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Linkage {
    /// Rows are feature vectors compared by Euclidean distance.
    #[default]
    Rows,
    /// Entries are used directly as dissimilarities.
    Precomputed,
}

impl std::str::FromStr for Linkage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rows" => Ok(Linkage::Rows),
            "precomputed" => Ok(Linkage::Precomputed),
            _ => Err(Error::Parameter(format!("unknown linkage input {s:?}"))),
        }
    }
}

/// Condensed upper-triangle dissimilarity storage.
#[derive(Debug, Clone)]
pub(crate) struct Condensed {
    n: usize,
    d: Vec<f64>,
}

impl Condensed {
    fn idx(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        self.n * i - i * (i + 1) / 2 + (j - i - 1)
    }

    pub(crate) fn get(&self, i: usize, j: usize) -> f64 {
        self.d[self.idx(i, j)]
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.d[k] = v;
    }

    pub(crate) fn from_matrix(m: &DistanceMatrix, linkage: Linkage) -> Self {
        let n = m.len();
        let rows = m.rows();
        let mut c = Condensed {
            n,
            d: vec![0.0; n * n.saturating_sub(1) / 2],
        };
        for i in 0..n {
            for j in i + 1..n {
                let v = match linkage {
                    Linkage::Precomputed => rows[i][j],
                    Linkage::Rows => rows[i]
                        .iter()
                        .zip(&rows[j])
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt(),
                };
                c.set(i, j, v);
            }
        }
        c
    }
}

/// Lance-Williams update for Ward's criterion after merging `i` and `j`
/// (sizes `ni`, `nj`, distance `dij`) as seen from `k` of size `nk`.
pub(crate) fn ward_update(dki: f64, dkj: f64, dij: f64, ni: f64, nj: f64, nk: f64) -> f64 {
    let t = ni + nj + nk;
    (((ni + nk) * dki * dki + (nj + nk) * dkj * dkj - nk * dij * dij) / t)
        .max(0.0)
        .sqrt()
}

/// Ward agglomerative clustering by nearest-neighbor chains. Merges are
/// returned in order of non-decreasing height.
pub fn ward_linkage(m: &DistanceMatrix, linkage: Linkage) -> Result<Vec<Merge>> {
    let n = m.len();
    if n < 2 {
        return Err(Error::Validation(
            "clustering needs at least two labels".into(),
        ));
    }
    let mut d = Condensed::from_matrix(m, linkage);
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    // raw merges in slot ids: the merged cluster lives on in slot `j`
    let mut raw: Vec<(usize, usize, f64)> = Vec::with_capacity(n - 1);
    let mut chain: Vec<usize> = Vec::with_capacity(n);
    for _ in 0..n - 1 {
        if chain.is_empty() {
            chain.push(active.iter().position(|&a| a).expect("an active cluster"));
        }
        let (a, b, dist) = loop {
            let x = *chain.last().expect("non-empty chain");
            let prev = if chain.len() >= 2 {
                Some(chain[chain.len() - 2])
            } else {
                None
            };
            let mut best = prev;
            let mut best_d = prev.map_or(f64::INFINITY, |p| d.get(x, p));
            for y in 0..n {
                if y == x || !active[y] {
                    continue;
                }
                let dy = d.get(x, y);
                if dy < best_d {
                    best_d = dy;
                    best = Some(y);
                }
            }
            let y = best.expect("another active cluster");
            if Some(y) == prev {
                chain.pop();
                chain.pop();
                break (x, y, best_d);
            }
            chain.push(y);
        };
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        let (ni, nj) = (size[i] as f64, size[j] as f64);
        for k in 0..n {
            if !active[k] || k == i || k == j {
                continue;
            }
            let v = ward_update(d.get(k, i), d.get(k, j), dist, ni, nj, size[k] as f64);
            d.set(k, j, v);
        }
        active[i] = false;
        size[j] += size[i];
        raw.push((i, j, dist));
    }
    Ok(relabel(n, raw))
}

/// Sorts raw slot merges by height and renames clusters to linkage ids.
fn relabel(n: usize, mut raw: Vec<(usize, usize, f64)>) -> Vec<Merge> {
    raw.sort_by(|a, b| a.2.total_cmp(&b.2));
    let mut parent: Vec<usize> = (0..2 * n - 1).collect();
    let mut size = vec![1usize; 2 * n - 1];
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    raw.into_iter()
        .enumerate()
        .map(|(k, (a, b, h))| {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            let id = n + k;
            parent[ra] = id;
            parent[rb] = id;
            size[id] = size[ra] + size[rb];
            Merge {
                left: ra.min(rb),
                right: ra.max(rb),
                height: h,
                size: size[id],
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(m: Vec<Vec<f64>>) -> DistanceMatrix {
        let labels = (0..m.len()).map(|i| format!("L{i}")).collect();
        DistanceMatrix::new(labels, m).unwrap()
    }

    #[test]
    fn two_labels() {
        let m = matrix(vec![vec![0.0, 3.0], vec![3.0, 0.0]]);
        let z = ward_linkage(&m, Linkage::Rows).unwrap();
        assert_eq!(z.len(), 1);
        assert!((z[0].height - 18f64.sqrt()).abs() < 1e-12);
        let z = ward_linkage(&m, Linkage::Precomputed).unwrap();
        assert_eq!(z[0].height, 3.0);
        assert_eq!((z[0].left, z[0].right, z[0].size), (0, 1, 2));
    }

    #[test]
    fn nearest_pair_first() {
        let m = matrix(vec![
            vec![0.0, 5.0, 5.1],
            vec![5.0, 0.0, 0.1],
            vec![5.1, 0.1, 0.0],
        ]);
        let z = ward_linkage(&m, Linkage::Rows).unwrap();
        assert_eq!((z[0].left, z[0].right), (1, 2));
        assert_eq!((z[1].left, z[1].right), (0, 3));
        assert!(z[1].height >= z[0].height);
    }

    #[test]
    fn precomputed_matches_hand_recurrence() {
        // d(01)=1 merges first; then d(2,{01}) = sqrt((2*4 + 2*9 - 1)/3)
        let m = matrix(vec![
            vec![0.0, 1.0, 2.0],
            vec![1.0, 0.0, 3.0],
            vec![2.0, 3.0, 0.0],
        ]);
        let z = ward_linkage(&m, Linkage::Precomputed).unwrap();
        assert_eq!(z[0].height, 1.0);
        assert!((z[1].height - (25.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn single_label_rejected() {
        let m = matrix(vec![vec![0.0]]);
        assert!(ward_linkage(&m, Linkage::Rows).is_err());
    }
}
