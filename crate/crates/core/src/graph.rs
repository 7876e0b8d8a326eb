//! Static undirected communication topology and its algebraic views.
//!
//! Agent indices are 1-based at every external boundary (scenario files,
//! error messages) and 0-based inside the library.

use std::collections::{BTreeSet, VecDeque};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("a communication graph needs at least two agents, got {0}")]
    TooFewAgents(usize),
    #[error("self-loop on agent {0} is not allowed")]
    SelfLoop(usize),
    #[error("edge ({i}, {j}) references an agent outside 1..={n}")]
    IndexOutOfRange { i: usize, j: usize, n: usize },
    #[error("graph is not connected: agent {unreachable} cannot be reached from agent 1")]
    NotConnected { unreachable: usize },
    #[error("invalid generator parameter: {0}")]
    Generator(String),
}

/// Connected, undirected, self-loop-free graph over agents `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from 1-based agent pairs. Duplicate and reversed pairs
    /// collapse to a single undirected edge.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::TooFewAgents(n));
        }
        let mut zero_based = Vec::with_capacity(edges.len());
        for &(i, j) in edges {
            if i == 0 || j == 0 || i > n || j > n {
                return Err(GraphError::IndexOutOfRange { i, j, n });
            }
            if i == j {
                return Err(GraphError::SelfLoop(i));
            }
            zero_based.push((i - 1, j - 1));
        }
        Self::from_zero_based(n, zero_based)
    }

    fn from_zero_based(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::TooFewAgents(n));
        }
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(GraphError::IndexOutOfRange { i: i + 1, j: j + 1, n });
            }
            if i == j {
                return Err(GraphError::SelfLoop(i + 1));
            }
            set.insert((i.min(j), i.max(j)));
        }
        let mut neighbors = vec![Vec::new(); n];
        for &(i, j) in &set {
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        let graph = Graph {
            n,
            edges: set,
            neighbors,
        };
        if let Some(unreachable) = graph.first_unreachable() {
            return Err(GraphError::NotConnected {
                unreachable: unreachable + 1,
            });
        }
        Ok(graph)
    }

    pub fn complete(n: usize) -> Result<Self, GraphError> {
        Self::from_zero_based(
            n,
            (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))),
        )
    }

    pub fn path(n: usize) -> Result<Self, GraphError> {
        Self::from_zero_based(n, (1..n).map(|i| (i - 1, i)))
    }

    pub fn ring(n: usize) -> Result<Self, GraphError> {
        if n < 3 {
            return Self::path(n);
        }
        Self::from_zero_based(n, (0..n).map(|i| (i, (i + 1) % n)))
    }

    /// Ring over all agents plus chords `(i, i + stride mod n)`.
    pub fn ring_plus_chords(n: usize, stride: usize) -> Result<Self, GraphError> {
        if stride == 0 || stride >= n {
            return Err(GraphError::Generator(format!(
                "chord stride must lie in 1..{n}, got {stride}"
            )));
        }
        if n < 3 {
            return Self::path(n);
        }
        let ring = (0..n).map(|i| (i, (i + 1) % n));
        let chords = (0..n)
            .map(|i| (i, (i + stride) % n))
            .filter(|(i, j)| i != j);
        Self::from_zero_based(n, ring.chain(chords))
    }

    /// Random connected graph: a random spanning tree plus each remaining
    /// pair independently with probability `p`.
    pub fn random_connected(n: usize, p: f64, seed: u64) -> Result<Self, GraphError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(GraphError::Generator(format!(
                "edge probability must lie in [0, 1], got {p}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        let mut edges = BTreeSet::new();
        for idx in 1..n {
            let parent = order[rng.random_range(0..idx)];
            let child = order[idx];
            edges.insert((parent.min(child), parent.max(child)));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < p {
                    edges.insert((i, j));
                }
            }
        }
        Self::from_zero_based(n, edges)
    }

    pub fn agent_count(&self) -> usize {
        self.n
    }

    /// Undirected edges as 0-based pairs with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Sorted 0-based neighbors of agent `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n).map(|i| self.degree(i)).max().unwrap_or(0)
    }

    /// Closed neighborhood test: `i == j` or `(i, j)` is an edge.
    pub fn in_closed_neighborhood(&self, i: usize, j: usize) -> bool {
        i == j || self.has_edge(i, j)
    }

    pub fn matrices(&self) -> GraphMatrices {
        GraphMatrices::new(self)
    }

    fn first_unreachable(&self) -> Option<usize> {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for &j in &self.neighbors[i] {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen.iter().position(|&s| !s)
    }
}

/// Adjacency `H`, degree `Δ`, Laplacian `L = Δ − H`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphMatrices {
    pub adjacency: DMatrix<f64>,
    pub degree: DMatrix<f64>,
    pub laplacian: DMatrix<f64>,
    pub max_degree: usize,
}

impl GraphMatrices {
    fn new(g: &Graph) -> Self {
        let n = g.agent_count();
        let adjacency = DMatrix::from_fn(n, n, |i, j| if g.has_edge(i, j) { 1.0 } else { 0.0 });
        let degree = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |i, _| {
            adjacency.row(i).sum()
        }));
        let laplacian = &degree - &adjacency;
        GraphMatrices {
            adjacency,
            degree,
            laplacian,
            max_degree: g.max_degree(),
        }
    }

    /// `Z = H + I`, the closed-neighborhood mask.
    pub fn closed_neighborhood(&self) -> DMatrix<f64> {
        let n = self.adjacency.nrows();
        &self.adjacency + DMatrix::identity(n, n)
    }

    /// `H̃ = J − Z`, ones exactly where agents do not communicate.
    pub fn complement(&self) -> DMatrix<f64> {
        let n = self.adjacency.nrows();
        DMatrix::from_element(n, n, 1.0) - self.closed_neighborhood()
    }
}
