//! Directed weighted multigraphs and their incidence / adjacency matrices.
//!
//! Edges carry material from their tail to their head. Vertex indices are
//! 0-based here; scenario files use 1-based indices and convert on load.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::matrix::PositiveMatrix;
use crate::{Error, Result};

const KIRCHHOFF_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
    pub weight: f64,
}

impl Edge {
    pub fn new(tail: usize, head: usize, weight: f64) -> Self {
        Self { tail, head, weight }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkGraph {
    n_vertices: usize,
    edges: Vec<Edge>,
}

/// Outgoing, incoming and weighted outgoing incidence matrices (all `N x M`).
#[derive(Clone, Debug)]
pub struct Incidence {
    pub out: PositiveMatrix,
    pub inn: PositiveMatrix,
    pub out_weighted: PositiveMatrix,
}

impl NetworkGraph {
    pub fn new(n_vertices: usize, edges: Vec<Edge>) -> Result<Self> {
        if n_vertices == 0 {
            return Err(Error::Graph("graph needs at least one vertex".into()));
        }
        if edges.is_empty() {
            return Err(Error::Graph("graph needs at least one edge".into()));
        }
        for (j, e) in edges.iter().enumerate() {
            if e.tail >= n_vertices || e.head >= n_vertices {
                return Err(Error::Graph(format!(
                    "edge {j} references a vertex outside 0..{n_vertices}"
                )));
            }
            if !(0.0..=1.0).contains(&e.weight) {
                return Err(Error::Graph(format!(
                    "edge {j} weight {} outside [0, 1]",
                    e.weight
                )));
            }
        }
        Ok(Self { n_vertices, edges })
    }

    /// Like [`NetworkGraph::new`] but additionally enforces that every vertex
    /// has an outgoing edge and that outgoing weights sum to one.
    pub fn kirchhoff(n_vertices: usize, edges: Vec<Edge>) -> Result<Self> {
        let g = Self::new(n_vertices, edges)?;
        g.check_kirchhoff()?;
        Ok(g)
    }

    /// Directed cycle `v_0 -> v_1 -> ... -> v_{n-1} -> v_0` with unit weights.
    /// Edge `j` leaves vertex `j`.
    pub fn cycle(n: usize) -> Result<Self> {
        let edges = (0..n).map(|i| Edge::new(i, (i + 1) % n, 1.0)).collect();
        Self::kirchhoff(n, edges)
    }

    pub fn check_kirchhoff(&self) -> Result<()> {
        let mut sums = vec![0.0; self.n_vertices];
        let mut outdeg = vec![0usize; self.n_vertices];
        for e in &self.edges {
            sums[e.tail] += e.weight;
            outdeg[e.tail] += 1;
        }
        for i in 0..self.n_vertices {
            if outdeg[i] == 0 {
                return Err(Error::Graph(format!("vertex {i} has no outgoing edge")));
            }
            if (sums[i] - 1.0).abs() > KIRCHHOFF_TOL {
                return Err(Error::Graph(format!(
                    "outgoing weights of vertex {i} sum to {} instead of 1",
                    sums[i]
                )));
            }
        }
        Ok(())
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn incidence_matrices(&self) -> Incidence {
        let (n, m) = (self.n_vertices, self.edges.len());
        let mut out = DMatrix::zeros(n, m);
        let mut inn = DMatrix::zeros(n, m);
        let mut out_w = DMatrix::zeros(n, m);
        for (j, e) in self.edges.iter().enumerate() {
            out[(e.tail, j)] = 1.0;
            inn[(e.head, j)] = 1.0;
            out_w[(e.tail, j)] = e.weight;
        }
        // Entries are 0, 1 or validated weights.
        Incidence {
            out: PositiveMatrix::new(out).expect("incidence entries are nonnegative"),
            inn: PositiveMatrix::new(inn).expect("incidence entries are nonnegative"),
            out_weighted: PositiveMatrix::new(out_w).expect("weights are nonnegative"),
        }
    }

    /// Weighted transposed adjacency `I_in * (I_out_w)^T`: entry `(i, k)` is
    /// the weight of the edge(s) from `k` into `i`.
    pub fn adjacency(&self) -> PositiveMatrix {
        let inc = self.incidence_matrices();
        let a = inc.inn.as_matrix() * inc.out_weighted.as_matrix().transpose();
        PositiveMatrix::new(a).expect("product of nonnegative matrices")
    }

    /// Reachability from vertex 0 in the graph and in its reverse.
    pub fn is_strongly_connected(&self) -> bool {
        let n = self.n_vertices;
        let mut fwd = vec![Vec::new(); n];
        let mut rev = vec![Vec::new(); n];
        for e in &self.edges {
            fwd[e.tail].push(e.head);
            rev[e.head].push(e.tail);
        }
        reaches_all(&fwd) && reaches_all(&rev)
    }
}

fn reaches_all(adj: &[Vec<usize>]) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen.into_iter().all(|s| s)
}
