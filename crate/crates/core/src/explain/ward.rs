use std::cmp::Ordering;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One agglomeration step. Leaves are clusters `0..n`; the cluster created
/// at step `s` gets id `n + s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    /// Smaller of the two merged cluster ids.
    pub a: usize,
    pub b: usize,
    pub distance: f64,
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub n_leaves: usize,
    pub merges: Vec<Merge>,
    /// Leaves in display order.
    pub leaf_order: Vec<usize>,
}

impl Dendrogram {
    /// Dendrogram over a single leaf, or the identity order when a matrix
    /// axis is not clustered.
    pub fn identity(n: usize) -> Self {
        Dendrogram {
            n_leaves: n,
            merges: Vec::new(),
            leaf_order: (0..n).collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}

/// Index into the condensed upper-triangular distance array.
fn tri(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// Merge candidates order by squared distance, then by the smaller and the
/// larger cluster id.
fn key_cmp(a: (f64, usize, usize), b: (f64, usize, usize)) -> Ordering {
    a.0.total_cmp(&b.0)
        .then(a.1.cmp(&b.1))
        .then(a.2.cmp(&b.2))
}

fn pair_key(d: f64, x: usize, y: usize) -> (f64, usize, usize) {
    (d, x.min(y), x.max(y))
}

/// Left-subtree-first traversal; the smaller id is the left child.
pub(crate) fn leaf_order(n: usize, merges: &[Merge]) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    let root = if merges.is_empty() { 0 } else { n + merges.len() - 1 };
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![root];
    while let Some(c) = stack.pop() {
        if c < n {
            order.push(c);
        } else {
            let m = &merges[c - n];
            stack.push(m.b);
            stack.push(m.a);
        }
    }
    order
}

/// Ward agglomerative clustering of the rows of a row-major `rows × cols`
/// matrix. Reported distances are `sqrt` of the Lance-Williams updated
/// squared Euclidean Ward distance.
pub fn ward_cluster(data: &[f64], rows: usize, cols: usize) -> Result<Dendrogram> {
    if data.len() != rows * cols {
        return Err(Error::DimensionMismatch {
            expected: rows * cols,
            got: data.len(),
        });
    }
    if rows < 2 {
        return Err(Error::InvalidArgument(
            "clustering needs at least 2 rows".into(),
        ));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("clustering input".into()));
    }
    let n = rows;
    let row = |i: usize| &data[i * cols..(i + 1) * cols];
    let mut dist = vec![0.0; n * (n - 1) / 2];
    for i in 0..n {
        for j in i + 1..n {
            dist[tri(n, i, j)] = row(i)
                .iter()
                .zip(row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
        }
    }

    // slot s holds cluster ids[s] of size sizes[s] while active[s]
    let mut ids: Vec<usize> = (0..n).collect();
    let mut sizes = vec![1usize; n];
    let mut active = vec![true; n];
    let nearest_of = |s: usize, dist: &[f64], ids: &[usize], active: &[bool]| {
        let mut best: Option<(f64, usize, usize)> = None;
        let mut best_slot = usize::MAX;
        for t in 0..n {
            if t == s || !active[t] {
                continue;
            }
            let k = pair_key(dist[tri(n, s, t)], ids[s], ids[t]);
            if best.is_none_or(|b| key_cmp(k, b) == Ordering::Less) {
                best = Some(k);
                best_slot = t;
            }
        }
        (best.expect("at least two active clusters"), best_slot)
    };
    let mut nearest: Vec<((f64, usize, usize), usize)> =
        (0..n).map(|s| nearest_of(s, &dist, &ids, &active)).collect();

    let mut merges = Vec::with_capacity(n - 1);
    for step in 0..n - 1 {
        let s = (0..n)
            .filter(|&s| active[s])
            .min_by(|&x, &y| key_cmp(nearest[x].0, nearest[y].0).then(x.cmp(&y)))
            .expect("active clusters remain");
        let (key, t) = nearest[s];
        let (keep, gone) = (s.min(t), s.max(t));
        let (ni, nj) = (sizes[keep] as f64, sizes[gone] as f64);
        let dij = key.0;
        for k in 0..n {
            if !active[k] || k == keep || k == gone {
                continue;
            }
            let nk = sizes[k] as f64;
            let dik = dist[tri(n, keep, k)];
            let djk = dist[tri(n, gone, k)];
            dist[tri(n, keep, k)] =
                ((ni + nk) * dik + (nj + nk) * djk - nk * dij) / (ni + nj + nk);
        }
        merges.push(Merge {
            a: key.1,
            b: key.2,
            distance: dij.max(0.0).sqrt(),
            size: sizes[keep] + sizes[gone],
        });
        active[gone] = false;
        sizes[keep] += sizes[gone];
        ids[keep] = n + step;
        if step == n - 2 {
            break;
        }
        for k in 0..n {
            if !active[k] {
                continue;
            }
            if k == keep || nearest[k].1 == keep || nearest[k].1 == gone {
                nearest[k] = nearest_of(k, &dist, &ids, &active);
            } else {
                let cand = pair_key(dist[tri(n, k, keep)], ids[k], ids[keep]);
                if key_cmp(cand, nearest[k].0) == Ordering::Less {
                    nearest[k] = (cand, keep);
                }
            }
        }
    }
    let leaf_order = leaf_order(n, &merges);
    Ok(Dendrogram {
        n_leaves: n,
        merges,
        leaf_order,
    })
}
