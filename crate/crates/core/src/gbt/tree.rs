use serde::{Deserialize, Serialize};

/// Leaf weights are clipped to this magnitude.
pub const MAX_LEAF_WEIGHT: f64 = 30.0;

/// One node of a regression tree. Children are indices into [`Tree::nodes`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        /// Rows with `x < threshold` go left.
        threshold: f64,
        /// Route taken by a missing value.
        default_left: bool,
        left: usize,
        right: usize,
        gain: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cover: Option<f64>,
    },
    Leaf {
        weight: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cover: Option<f64>,
    },
}

impl Node {
    pub fn cover(&self) -> Option<f64> {
        match self {
            Node::Split { cover, .. } | Node::Leaf { cover, .. } => *cover,
        }
    }
}

/// A tree rooted at `nodes[0]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(weight: f64) -> Self {
        Tree {
            nodes: vec![Node::Leaf {
                weight,
                cover: None,
            }],
        }
    }

    /// Raw leaf weight reached by `row`. `NaN` marks a missing value.
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { weight, .. } => return *weight,
                Node::Split {
                    feature,
                    threshold,
                    default_left,
                    left,
                    right,
                    ..
                } => {
                    let v = row[*feature];
                    let go_left = if v.is_nan() { *default_left } else { v < *threshold };
                    i = if go_left { *left } else { *right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Checks child references and finiteness.
    pub(crate) fn is_well_formed(&self, n_features: usize) -> bool {
        let n = self.nodes.len();
        n > 0
            && self.nodes.iter().enumerate().all(|(i, node)| match node {
                Node::Leaf { weight, .. } => weight.is_finite(),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    *feature < n_features
                        && !threshold.is_nan()
                        && *left > i
                        && *right > i
                        && *left < n
                        && *right < n
                }
            })
    }
}
