use super::tree::{Node, Tree, MAX_LEAF_WEIGHT};
use super::BoostConfig;

/// Splits must improve the objective by more than this.
pub(crate) const MIN_GAIN: f64 = 1e-12;

/// Row-major feature matrix with `NaN` at missing cells, plus per-feature
/// row orders sorted by value (missing rows omitted).
pub(crate) struct Presorted<'a> {
    pub x: &'a [f64],
    pub n_rows: usize,
    pub n_cols: usize,
    sorted: Vec<Vec<u32>>,
}

impl<'a> Presorted<'a> {
    pub fn new(x: &'a [f64], n_rows: usize, n_cols: usize) -> Self {
        let sorted = (0..n_cols)
            .map(|f| {
                let mut rows: Vec<u32> = (0..n_rows as u32)
                    .filter(|&r| !x[r as usize * n_cols + f].is_nan())
                    .collect();
                rows.sort_by(|&a, &b| {
                    x[a as usize * n_cols + f].total_cmp(&x[b as usize * n_cols + f])
                });
                rows
            })
            .collect();
        Presorted {
            x,
            n_rows,
            n_cols,
            sorted,
        }
    }

    fn value(&self, row: usize, f: usize) -> f64 {
        self.x[row * self.n_cols + f]
    }
}

#[derive(Clone, Copy, Default)]
struct Stats {
    g: f64,
    h: f64,
    n: f64,
}

impl Stats {
    fn add(&mut self, g: f64, h: f64) {
        self.g += g;
        self.h += h;
        self.n += 1.0;
    }

    fn minus(self, o: Stats) -> Stats {
        Stats {
            g: self.g - o.g,
            h: self.h - o.h,
            n: self.n - o.n,
        }
    }

    fn plus(self, o: Stats) -> Stats {
        Stats {
            g: self.g + o.g,
            h: self.h + o.h,
            n: self.n + o.n,
        }
    }
}

fn score(s: Stats, lambda: f64) -> f64 {
    s.g * s.g / (s.h + lambda)
}

pub(crate) fn leaf_weight(g: f64, h: f64, lambda: f64) -> f64 {
    let w = -g / (h + lambda);
    if w.is_nan() {
        0.0
    } else {
        w.clamp(-MAX_LEAF_WEIGHT, MAX_LEAF_WEIGHT)
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    default_left: bool,
    gain: f64,
}

/// Cut between adjacent distinct values `lo < hi`; falls back to `hi` when
/// the midpoint rounds onto `lo`.
fn cut_point(lo: f64, hi: f64) -> f64 {
    let mid = lo / 2.0 + hi / 2.0;
    if mid > lo && mid <= hi {
        mid
    } else {
        hi
    }
}

/// Grows one tree level by level with exact greedy split search.
pub(crate) fn build_tree(data: &Presorted, grad: &[f64], hess: &[f64], cfg: &BoostConfig) -> Tree {
    let lambda = cfg.lambda;
    let mut nodes: Vec<Node> = vec![Node::Leaf {
        weight: 0.0,
        cover: None,
    }];
    // per row: index into `active`, or None once the row sits in a finished leaf
    let mut slot: Vec<Option<u32>> = vec![Some(0); data.n_rows];
    let mut active: Vec<usize> = vec![0];

    for depth in 0..=cfg.max_depth {
        let k = active.len();
        if k == 0 {
            break;
        }
        let mut totals = vec![Stats::default(); k];
        for r in 0..data.n_rows {
            if let Some(s) = slot[r] {
                totals[s as usize].add(grad[r], hess[r]);
            }
        }

        let mut best: Vec<Option<Candidate>> = vec![None; k];
        if depth < cfg.max_depth {
            let mut observed = vec![Stats::default(); k];
            let mut acc = vec![Stats::default(); k];
            let mut last = vec![f64::NAN; k];
            for f in 0..data.n_cols {
                let order = &data.sorted[f];
                observed.fill(Stats::default());
                for &r in order {
                    if let Some(s) = slot[r as usize] {
                        observed[s as usize].add(grad[r as usize], hess[r as usize]);
                    }
                }
                acc.fill(Stats::default());
                last.fill(f64::NAN);
                for &r in order {
                    let r = r as usize;
                    let Some(s) = slot[r] else { continue };
                    let s = s as usize;
                    let v = data.value(r, f);
                    if acc[s].n > 0.0 && v > last[s] {
                        let total = totals[s];
                        let missing = total.minus(observed[s]);
                        let right_obs = observed[s].minus(acc[s]);
                        let parent = score(total, lambda);
                        let mut consider = |left: Stats, right: Stats, default_left: bool| {
                            if left.h < cfg.min_child_weight || right.h < cfg.min_child_weight {
                                return;
                            }
                            let gain =
                                0.5 * (score(left, lambda) + score(right, lambda) - parent);
                            if gain > MIN_GAIN && best[s].is_none_or(|b| gain > b.gain) {
                                best[s] = Some(Candidate {
                                    feature: f,
                                    threshold: cut_point(last[s], v),
                                    default_left,
                                    gain,
                                });
                            }
                        };
                        consider(acc[s], right_obs.plus(missing), false);
                        if missing.n > 0.0 {
                            consider(acc[s].plus(missing), right_obs, true);
                        }
                    }
                    acc[s].add(grad[r], hess[r]);
                    last[s] = v;
                }
            }
        }

        let mut next_slot: Vec<Option<u32>> = vec![None; k * 2];
        let mut next_active = Vec::new();
        for s in 0..k {
            let node = active[s];
            let t = totals[s];
            match best[s] {
                Some(c) => {
                    let left = nodes.len();
                    nodes.push(Node::Leaf { weight: 0.0, cover: None });
                    nodes.push(Node::Leaf { weight: 0.0, cover: None });
                    nodes[node] = Node::Split {
                        feature: c.feature,
                        threshold: c.threshold,
                        default_left: c.default_left,
                        left,
                        right: left + 1,
                        gain: c.gain,
                        cover: Some(t.n),
                    };
                    next_slot[2 * s] = Some(next_active.len() as u32);
                    next_active.push(left);
                    next_slot[2 * s + 1] = Some(next_active.len() as u32);
                    next_active.push(left + 1);
                }
                None => {
                    nodes[node] = Node::Leaf {
                        weight: leaf_weight(t.g, t.h, lambda),
                        cover: Some(t.n),
                    };
                }
            }
        }
        for r in 0..data.n_rows {
            let Some(s) = slot[r] else { continue };
            let s = s as usize;
            slot[r] = match best[s] {
                None => None,
                Some(c) => {
                    let v = data.value(r, c.feature);
                    let go_left = if v.is_nan() { c.default_left } else { v < c.threshold };
                    next_slot[2 * s + usize::from(!go_left)]
                }
            };
        }
        active = next_active;
    }
    Tree { nodes }
}
