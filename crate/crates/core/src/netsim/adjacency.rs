use rand::Rng;

use crate::seed;

/// Symmetric, hollow 0/1 adjacency matrix with cached neighbour lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    n: usize,
    entries: Vec<bool>,
    neighbors: Vec<Vec<usize>>,
}

impl AdjacencyMatrix {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            entries: vec![false; n * n],
            neighbors: vec![Vec::new(); n],
        }
    }

    /// Builds from an undirected edge list; self-loops and duplicates are
    /// ignored.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut a = Self::empty(n);
        for (i, j) in edges {
            assert!(i < n && j < n, "edge ({i}, {j}) out of range for n = {n}");
            if i != j {
                a.entries[i * n + j] = true;
                a.entries[j * n + i] = true;
            }
        }
        a.rebuild_neighbors();
        a
    }

    pub fn complete(n: usize) -> Self {
        Self::from_edges(n, (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))))
    }

    fn rebuild_neighbors(&mut self) {
        let n = self.n;
        self.neighbors = (0..n)
            .map(|i| (0..n).filter(|&j| self.entries[i * n + j]).collect())
            .collect();
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.entries[i * self.n + j]
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn is_hollow(&self) -> bool {
        (0..self.n).all(|i| !self.get(i, i))
    }
}

/// Erdős–Rényi graph: each unordered pair joins independently with
/// probability `p`. Pairs are visited in row-major upper-triangular order.
pub fn build_er_adjacency(n: usize, p: f64, seed: u64) -> AdjacencyMatrix {
    assert!(n >= 1, "node count must be positive");
    assert!((0.0..=1.0).contains(&p), "edge probability {p} outside [0, 1]");
    let mut rng = seed::rng(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    AdjacencyMatrix::from_edges(n, edges)
}
