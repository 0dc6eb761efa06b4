use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Graph, GraphError, Result};

const TRAIN_FRACTION: f64 = 0.7;
const VAL_FRACTION: f64 = 0.1;
const MIN_ITEMS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    #[serde(rename = "link")]
    LinkPrediction,
    #[serde(rename = "node")]
    NodePrediction,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::LinkPrediction => "link",
            Task::NodePrediction => "node",
        }
    }
}

impl std::str::FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "link" => Ok(Task::LinkPrediction),
            "node" => Ok(Task::NodePrediction),
            other => Err(format!("unknown task '{other}' (expected link or node)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SplitItems {
    Edges {
        train: Vec<(usize, usize)>,
        val: Vec<(usize, usize)>,
        test: Vec<(usize, usize)>,
    },
    Nodes {
        train: Vec<usize>,
        val: Vec<usize>,
        test: Vec<usize>,
    },
}

/// Seeded 70/10/20 partition of undirected edges or of nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub seed: u64,
    pub items: SplitItems,
}

impl SplitPlan {
    pub fn task(&self) -> Task {
        match self.items {
            SplitItems::Edges { .. } => Task::LinkPrediction,
            SplitItems::Nodes { .. } => Task::NodePrediction,
        }
    }
}

/// `(train, val, test)` sizes for `total` items.
pub fn split_counts(total: usize) -> (usize, usize, usize) {
    let train = (TRAIN_FRACTION * total as f64).round() as usize;
    let val = ((VAL_FRACTION * total as f64).round() as usize).min(total - train);
    (train, val, total - train - val)
}

/// Holds out 30% of the undirected non-loop edges. The training graph keeps
/// every node, every self-loop and the features.
pub fn split_edges(g: &Graph, seed: u64) -> Result<(Graph, SplitPlan)> {
    let mut edges = g.edges();
    if edges.len() < MIN_ITEMS {
        return Err(GraphError::TooFewEdges {
            required: MIN_ITEMS,
            found: edges.len(),
        });
    }
    edges.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (n_train, n_val, _) = split_counts(edges.len());
    let mut train = edges[..n_train].to_vec();
    let mut val = edges[n_train..n_train + n_val].to_vec();
    let mut test = edges[n_train + n_val..].to_vec();
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    let train_graph = Graph::from_edge_list(&train, g.n(), g.features().cloned())?;
    Ok((
        train_graph,
        SplitPlan {
            seed,
            items: SplitItems::Edges { train, val, test },
        },
    ))
}

/// Holds out 30% of the nodes; the training graph is the subgraph induced on
/// the remaining 70% (in increasing id order), with matching feature rows.
pub fn split_nodes(g: &Graph, seed: u64) -> Result<(Graph, SplitPlan)> {
    if g.n() < MIN_ITEMS {
        return Err(GraphError::TooFewNodes {
            required: MIN_ITEMS,
            found: g.n(),
        });
    }
    let mut nodes: Vec<usize> = (0..g.n()).collect();
    nodes.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (n_train, n_val, _) = split_counts(nodes.len());
    let mut train = nodes[..n_train].to_vec();
    let mut val = nodes[n_train..n_train + n_val].to_vec();
    let mut test = nodes[n_train + n_val..].to_vec();
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    let train_graph = g.induced_subgraph(&train)?;
    Ok((
        train_graph,
        SplitPlan {
            seed,
            items: SplitItems::Nodes { train, val, test },
        },
    ))
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use rand::Rng;

    use super::*;
    use crate::graph::identity_features;
    use crate::linalg::DenseMatrix;

    fn ring(n: usize) -> Graph {
        let pairs: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::from_edge_list(&pairs, n, None).unwrap()
    }

    #[test]
    fn ten_edges_split_7_1_2() {
        let (train, plan) = split_edges(&ring(10), 3).unwrap();
        let SplitItems::Edges { train: tr, val, test } = &plan.items else {
            panic!("edge plan expected");
        };
        assert_eq!((tr.len(), val.len(), test.len()), (7, 1, 2));
        assert!(train.adjacency().is_symmetric());
        assert_eq!(train.edge_count(), 7);
        assert!((0..10).all(|i| train.has_edge(i, i)));
        assert_eq!(plan.task(), Task::LinkPrediction);
    }

    #[test]
    fn same_seed_same_plan() {
        let g = ring(30);
        assert_eq!(split_edges(&g, 9).unwrap().1, split_edges(&g, 9).unwrap().1);
        assert_eq!(split_nodes(&g, 9).unwrap().1, split_nodes(&g, 9).unwrap().1);
        assert_ne!(split_edges(&g, 9).unwrap().1, split_edges(&g, 10).unwrap().1);
    }

    #[test]
    fn edge_split_partitions_the_edge_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut pairs = BTreeSet::new();
        while pairs.len() < 100 {
            let (i, j) = (rng.random_range(0..40), rng.random_range(0..40));
            if i != j {
                pairs.insert((i.min(j), i.max(j)));
            }
        }
        let g = Graph::from_edge_list(&pairs.iter().copied().collect::<Vec<_>>(), 40, None).unwrap();
        let (_, plan) = split_edges(&g, 5).unwrap();
        let SplitItems::Edges { train, val, test } = plan.items else {
            panic!()
        };
        let mut union = BTreeSet::new();
        for e in train.iter().chain(&val).chain(&test) {
            assert!(union.insert(*e), "edge {e:?} in two splits");
        }
        assert_eq!(union, pairs);
    }

    #[test]
    fn too_few_items() {
        assert!(matches!(
            split_edges(&ring(5), 0),
            Err(GraphError::TooFewEdges { found: 5, .. })
        ));
        assert!(matches!(
            split_nodes(&ring(9), 0),
            Err(GraphError::TooFewNodes { found: 9, .. })
        ));
    }

    #[test]
    fn node_split_induces_subgraph() {
        let g = ring(10)
            .with_features(Some(DenseMatrix::from_fn(10, 3, |i, j| (i + j) as f64)))
            .unwrap();
        let (train, plan) = split_nodes(&g, 4).unwrap();
        let SplitItems::Nodes {
            train: nodes,
            val,
            test,
        } = &plan.items
        else {
            panic!()
        };
        assert_eq!((nodes.len(), val.len(), test.len()), (7, 1, 2));
        assert_eq!(train.n(), 7);
        for (a, &u) in nodes.iter().enumerate() {
            for (b, &v) in nodes.iter().enumerate() {
                assert_eq!(train.has_edge(a, b), g.has_edge(u, v));
            }
            assert_eq!(train.features().unwrap().row(a), g.features().unwrap().row(u));
        }
        assert!(train.adjacency().is_symmetric());
    }

    #[test]
    fn featureless_node_split_uses_train_sized_identity() {
        let (train, _) = split_nodes(&ring(10), 2).unwrap();
        assert!(train.is_featureless());
        assert_eq!(identity_features(&train), DenseMatrix::identity(7));
    }
}
