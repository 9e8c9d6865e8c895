use crate::error::{Error, Result};
use crate::gbt::{Forest, Node, Tree};

#[derive(Clone, Copy, Debug)]
struct PathElement {
    feature: Option<usize>,
    zero_fraction: f64,
    one_fraction: f64,
    weight: f64,
}

fn extend(path: &mut Vec<PathElement>, zero: f64, one: f64, feature: Option<usize>) {
    let l = path.len();
    path.push(PathElement {
        feature,
        zero_fraction: zero,
        one_fraction: one,
        weight: if l == 0 { 1.0 } else { 0.0 },
    });
    for i in (0..l).rev() {
        path[i + 1].weight += one * path[i].weight * (i + 1) as f64 / (l + 1) as f64;
        path[i].weight = zero * path[i].weight * (l - i) as f64 / (l + 1) as f64;
    }
}

fn unwind(path: &mut Vec<PathElement>, index: usize) {
    let l = path.len() - 1;
    let one = path[index].one_fraction;
    let zero = path[index].zero_fraction;
    let mut next = path[l].weight;
    for j in (0..l).rev() {
        if one != 0.0 {
            let tmp = path[j].weight;
            path[j].weight = next * (l + 1) as f64 / ((j + 1) as f64 * one);
            next = tmp - path[j].weight * zero * (l - j) as f64 / (l + 1) as f64;
        } else {
            path[j].weight = path[j].weight * (l + 1) as f64 / (zero * (l - j) as f64);
        }
    }
    // weights were recomputed in place; only the other fields shift down
    for j in index..l {
        path[j].feature = path[j + 1].feature;
        path[j].zero_fraction = path[j + 1].zero_fraction;
        path[j].one_fraction = path[j + 1].one_fraction;
    }
    path.pop();
}

/// Total weight the path would have with element `index` removed.
fn unwound_sum(path: &[PathElement], index: usize) -> f64 {
    let l = path.len() - 1;
    let one = path[index].one_fraction;
    let zero = path[index].zero_fraction;
    let mut next = path[l].weight;
    let mut total = 0.0;
    for j in (0..l).rev() {
        if one != 0.0 {
            let tmp = next * (l + 1) as f64 / ((j + 1) as f64 * one);
            total += tmp;
            next = path[j].weight - tmp * zero * (l - j) as f64 / (l + 1) as f64;
        } else {
            total += path[j].weight / zero * (l + 1) as f64 / (l - j) as f64;
        }
    }
    total
}

fn cover_of(node: &Node) -> Result<f64> {
    node.cover().ok_or(Error::MissingCover)
}

/// Share of a split's training cover sent to each child. An empty split
/// divides evenly.
pub(crate) fn child_fractions(tree: &Tree, left: usize, right: usize) -> Result<(f64, f64)> {
    let cl = cover_of(&tree.nodes[left])?;
    let cr = cover_of(&tree.nodes[right])?;
    let total = cl + cr;
    Ok(if total > 0.0 {
        (cl / total, cr / total)
    } else {
        (0.5, 0.5)
    })
}

pub(crate) fn goes_left(row: &[f64], feature: usize, threshold: f64, default_left: bool) -> bool {
    let v = row[feature];
    if v.is_nan() {
        default_left
    } else {
        v < threshold
    }
}

struct Walker<'a> {
    tree: &'a Tree,
    row: &'a [f64],
    scale: f64,
    phi: &'a mut [f64],
}

impl Walker<'_> {
    fn recurse(
        &mut self,
        node: usize,
        mut path: Vec<PathElement>,
        zero: f64,
        one: f64,
        feature: Option<usize>,
    ) -> Result<()> {
        extend(&mut path, zero, one, feature);
        match self.tree.nodes[node] {
            Node::Leaf { weight, .. } => {
                for i in 1..path.len() {
                    let w = unwound_sum(&path, i);
                    let e = path[i];
                    let f = e.feature.expect("only the root element lacks a feature");
                    self.phi[f] += w * (e.one_fraction - e.zero_fraction) * weight * self.scale;
                }
            }
            Node::Split {
                feature: split,
                threshold,
                default_left,
                left,
                right,
                ..
            } => {
                let (fl, fr) = child_fractions(self.tree, left, right)?;
                let (hot, cold, f_hot, f_cold) = if goes_left(self.row, split, threshold, default_left)
                {
                    (left, right, fl, fr)
                } else {
                    (right, left, fr, fl)
                };
                let (mut inc_zero, mut inc_one) = (1.0, 1.0);
                if let Some(k) = (1..path.len()).find(|&k| path[k].feature == Some(split)) {
                    inc_zero = path[k].zero_fraction;
                    inc_one = path[k].one_fraction;
                    unwind(&mut path, k);
                }
                // a branch no coalition can reach contributes nothing
                let (z_hot, z_cold) = (inc_zero * f_hot, inc_zero * f_cold);
                if z_hot > 0.0 || inc_one > 0.0 {
                    self.recurse(hot, path.clone(), z_hot, inc_one, Some(split))?;
                }
                if z_cold > 0.0 {
                    self.recurse(cold, path, z_cold, 0.0, Some(split))?;
                }
            }
        }
        Ok(())
    }
}

/// Cover-weighted mean leaf value of a tree.
pub(crate) fn expected_value(tree: &Tree) -> Result<f64> {
    fn walk(tree: &Tree, i: usize) -> Result<f64> {
        match tree.nodes[i] {
            Node::Leaf { weight, .. } => Ok(weight),
            Node::Split { left, right, .. } => {
                let (fl, fr) = child_fractions(tree, left, right)?;
                Ok(fl * walk(tree, left)? + fr * walk(tree, right)?)
            }
        }
    }
    walk(tree, 0)
}

fn check_covers(forest: &Forest) -> Result<()> {
    let complete = forest.trees.iter().all(|t| {
        t.nodes.len() == 1 || t.nodes.iter().all(|n| n.cover().is_some())
    });
    if complete {
        Ok(())
    } else {
        Err(Error::MissingCover)
    }
}

/// Margin of an empty coalition: `base_score + η·Σ` expected tree values.
pub fn base_value(forest: &Forest) -> Result<f64> {
    check_covers(forest)?;
    let mut total = 0.0;
    for t in &forest.trees {
        total += expected_value(t)?;
    }
    Ok(forest.base_score + forest.config.eta * total)
}

/// Path-dependent TreeSHAP attributions of one row (`NaN` = missing) in
/// log-odds units, plus the base value they are measured from.
pub fn tree_shap(forest: &Forest, row: &[f64]) -> Result<(Vec<f64>, f64)> {
    if row.len() != forest.n_features() {
        return Err(Error::DimensionMismatch {
            expected: forest.n_features(),
            got: row.len(),
        });
    }
    let base = base_value(forest)?;
    let mut phi = vec![0.0; row.len()];
    for tree in &forest.trees {
        if tree.nodes.len() == 1 {
            continue;
        }
        let mut walker = Walker {
            tree,
            row,
            scale: forest.config.eta,
            phi: &mut phi,
        };
        walker.recurse(0, Vec::with_capacity(tree.depth() + 2), 1.0, 1.0, None)?;
    }
    Ok((phi, base))
}
