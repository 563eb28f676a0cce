//! Undirected communication graphs and doubly stochastic weights.

use std::collections::{BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{arg, Result};

pub type NodeId = usize;

/// Undirected, connected, loop-free graph on `n >= 3` nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphRepr", into = "GraphRepr")]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(NodeId, NodeId)>,
    neighbors: Vec<BTreeSet<NodeId>>,
}

#[derive(Serialize, Deserialize)]
struct GraphRepr {
    n: usize,
    edges: Vec<(NodeId, NodeId)>,
}

impl TryFrom<GraphRepr> for Graph {
    type Error = crate::Error;

    fn try_from(r: GraphRepr) -> Result<Self> {
        Graph::new(r.n, r.edges)
    }
}

impl From<Graph> for GraphRepr {
    fn from(g: Graph) -> Self {
        GraphRepr {
            n: g.n,
            edges: g.edges.into_iter().collect(),
        }
    }
}

impl Graph {
    /// Validates and builds a graph from an edge list; duplicate and
    /// reversed pairs collapse.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> Result<Self> {
        if n < 3 {
            return arg(format!("graph needs at least 3 nodes, got {n}"));
        }
        let mut set = BTreeSet::new();
        let mut neighbors = vec![BTreeSet::new(); n];
        for (a, b) in edges {
            if a >= n || b >= n {
                return arg(format!("edge ({a}, {b}) references a node outside 0..{n}"));
            }
            if a == b {
                return arg(format!("self-loop at node {a}"));
            }
            set.insert((a.min(b), a.max(b)));
            neighbors[a].insert(b);
            neighbors[b].insert(a);
        }
        let g = Graph {
            n,
            edges: set,
            neighbors,
        };
        if !g.is_connected() {
            return arg("graph is not connected");
        }
        Ok(g)
    }

    pub fn complete(n: usize) -> Result<Self> {
        Self::new(n, (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))))
    }

    pub fn triangle() -> Self {
        Self::complete(3).expect("triangle is valid")
    }

    pub fn path(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|b| (b - 1, b)))
    }

    pub fn cycle(n: usize) -> Result<Self> {
        Self::new(n, (0..n).map(|a| (a, (a + 1) % n)))
    }

    /// Node 0 is the hub.
    pub fn star(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|b| (0, b)))
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(a, b)` with `a < b`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.edges.iter().copied()
    }

    pub fn neighbors(&self, i: NodeId) -> &BTreeSet<NodeId> {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: NodeId) -> usize {
        self.neighbors[i].len()
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    /// Common neighbours `N_i ∩ N_j`.
    pub fn common_neighbors(&self, i: NodeId, j: NodeId) -> BTreeSet<NodeId> {
        self.neighbors[i]
            .intersection(&self.neighbors[j])
            .copied()
            .collect()
    }

    /// Neighbours of `i` that `j` can neither be nor hear: `N_i \ (N_j ∪ {j})`.
    pub fn hidden_neighbors(&self, i: NodeId, j: NodeId) -> Vec<NodeId> {
        self.neighbors[i]
            .iter()
            .copied()
            .filter(|&l| l != j && !self.neighbors[j].contains(&l))
            .collect()
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &self.neighbors[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Random connected graph: a uniformly shuffled random spanning tree, then
/// every remaining pair independently with probability `p`.
pub fn random_connected_graph<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<Graph> {
    if n < 3 {
        return arg(format!("graph needs at least 3 nodes, got {n}"));
    }
    if !(0.0..=1.0).contains(&p) {
        return arg(format!("edge probability must lie in [0, 1], got {p}"));
    }
    let mut order: Vec<NodeId> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = BTreeSet::new();
    for k in 1..n {
        let parent = order[rng.random_range(0..k)];
        let child = order[k];
        edges.insert((parent.min(child), parent.max(child)));
    }
    for a in 0..n {
        for b in a + 1..n {
            if !edges.contains(&(a, b)) && rng.random_bool(p) {
                edges.insert((a, b));
            }
        }
    }
    Graph::new(n, edges)
}

/// Dense row-major `n x n` weight matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl WeightMatrix {
    /// Checks the doubly stochastic and sparsity constraints against `graph`.
    pub fn from_rows(graph: &Graph, rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = graph.node_count();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return arg(format!("weight matrix must be {n} x {n}"));
        }
        let w = WeightMatrix {
            n,
            entries: rows.into_iter().flatten().collect(),
        };
        w.validate(graph)?;
        Ok(w)
    }

    pub fn validate(&self, graph: &Graph) -> Result<()> {
        const TOL: f64 = 1e-12;
        let n = self.n;
        if graph.node_count() != n {
            return arg("weight matrix and graph disagree on node count");
        }
        for i in 0..n {
            let row: f64 = self.row(i).iter().sum();
            let col: f64 = (0..n).map(|r| self.get(r, i)).sum();
            if (row - 1.0).abs() > TOL || (col - 1.0).abs() > TOL {
                return arg(format!("row/column {i} does not sum to 1"));
            }
            if self.get(i, i).is_nan() || self.get(i, i) <= 0.0 {
                return arg(format!("diagonal entry {i} must be positive"));
            }
            for j in 0..n {
                let w = self.get(i, j);
                if w.is_nan() || w < 0.0 {
                    return arg(format!("negative weight at ({i}, {j})"));
                }
                if i != j && (w > 0.0) != graph.has_edge(i, j) {
                    return arg(format!("weight at ({i}, {j}) disagrees with the edge set"));
                }
            }
        }
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: NodeId, j: NodeId) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: NodeId) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(x).map(|(w, v)| w * v).sum())
            .collect()
    }
}

/// Metropolis–Hastings weights: `1 / (1 + max(deg_i, deg_j))` on edges and
/// the remainder on the diagonal. Symmetric, hence doubly stochastic.
pub fn metropolis_weights(graph: &Graph) -> WeightMatrix {
    let n = graph.node_count();
    let mut entries = vec![0.0; n * n];
    for (a, b) in graph.edges() {
        let w = 1.0 / (1.0 + graph.degree(a).max(graph.degree(b)) as f64);
        entries[a * n + b] = w;
        entries[b * n + a] = w;
    }
    for i in 0..n {
        let off: f64 = graph.neighbors(i).iter().map(|&j| entries[i * n + j]).sum();
        entries[i * n + i] = 1.0 - off;
    }
    WeightMatrix { n, entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn rejects_small_or_disconnected() {
        assert!(Graph::new(2, [(0, 1)]).is_err());
        assert!(Graph::new(4, [(0, 1), (2, 3)]).is_err());
        assert!(Graph::new(3, [(0, 0), (0, 1), (1, 2)]).is_err());
        assert!(random_connected_graph(2, 0.5, &mut rng::stream(0, 0)).is_err());
        assert!(random_connected_graph(5, 1.5, &mut rng::stream(0, 0)).is_err());
    }

    #[test]
    fn random_graph_extremes() {
        let g = random_connected_graph(3, 1.0, &mut rng::stream(3, 0)).unwrap();
        assert_eq!(g.edge_count(), 3);
        let g = random_connected_graph(3, 0.0, &mut rng::stream(3, 0)).unwrap();
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn random_graph_is_reproducible() {
        let a = random_connected_graph(20, 0.2, &mut rng::stream(7, 0)).unwrap();
        let b = random_connected_graph(20, 0.2, &mut rng::stream(7, 0)).unwrap();
        assert_eq!(a, b);
        let c = random_connected_graph(20, 0.2, &mut rng::stream(8, 0)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn metropolis_on_path() {
        let w = metropolis_weights(&Graph::path(3).unwrap());
        let third = 1.0 / 3.0;
        assert!((w.get(0, 1) - third).abs() < 1e-15);
        assert!((w.get(1, 2) - third).abs() < 1e-15);
        assert!((w.get(0, 0) - 2.0 * third).abs() < 1e-15);
        assert!((w.get(2, 2) - 2.0 * third).abs() < 1e-15);
        assert!((w.get(1, 1) - third).abs() < 1e-15);
        assert_eq!(w.get(0, 2), 0.0);
    }

    #[test]
    fn metropolis_on_triangle() {
        let w = metropolis_weights(&Graph::triangle());
        for i in 0..3 {
            for j in 0..3 {
                assert!((w.get(i, j) - 1.0 / 3.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn metropolis_satisfies_constraints_on_random_graphs() {
        for seed in 0..20 {
            let g = random_connected_graph(15, 0.25, &mut rng::stream(seed, 1)).unwrap();
            metropolis_weights(&g).validate(&g).unwrap();
        }
    }

    #[test]
    fn hidden_neighbors_on_path() {
        let g = Graph::path(4).unwrap();
        assert_eq!(g.hidden_neighbors(1, 0), vec![2]);
        assert!(Graph::triangle().hidden_neighbors(0, 1).is_empty());
        assert!(Graph::star(6).unwrap().hidden_neighbors(4, 0).is_empty());
    }

    #[test]
    fn weight_matrix_validation() {
        let g = Graph::triangle();
        let bad = vec![vec![0.5, 0.5, 0.0], vec![0.5, 0.5, 0.0], vec![0.0, 0.0, 1.0]];
        assert!(WeightMatrix::from_rows(&g, bad).is_err());
    }
}
