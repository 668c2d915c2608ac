//! Sensor-network topologies, Metropolis weights and Laplacian spectra.
//!
//! Nodes are indexed from 0 internally. The edge-list text format and every
//! printed report use 1-based indices.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// Row sums of a weight matrix must be within this of one.
pub const STOCHASTIC_TOL: f64 = 1e-12;
/// Eigenvalues below this are treated as zero.
pub const ZERO_EIGEN_TOL: f64 = 1e-12;

/// An undirected simple graph on `n` nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    n: usize,
    /// Unordered pairs stored as `(lo, hi)` with `lo < hi`.
    edges: BTreeSet<(usize, usize)>,
}

impl Topology {
    /// Builds a topology from 0-based edges. Duplicates (in either
    /// orientation) collapse to one edge.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("topology needs at least one node".into()));
        }
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::Invalid(format!(
                    "edge ({}, {}) has an endpoint outside 1..={n}",
                    i + 1,
                    j + 1
                )));
            }
            if i == j {
                return Err(Error::Invalid(format!("self-loop at node {}", i + 1)));
            }
            set.insert((i.min(j), i.max(j)));
        }
        Ok(Self { n, edges: set })
    }

    pub fn isolated(n: usize) -> Result<Self> {
        Self::new(n, std::iter::empty())
    }

    pub fn path(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|i| (i - 1, i)))
    }

    pub fn ring(n: usize) -> Result<Self> {
        Self::ring_with_chords(n, &[])
    }

    pub fn complete(n: usize) -> Result<Self> {
        Self::new(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
    }

    /// Circulant graph: ring edges `(i, i+1)` plus `(i, i+s mod n)` for each
    /// stride `s`.
    pub fn ring_with_chords(n: usize, strides: &[usize]) -> Result<Self> {
        let mut edges = Vec::new();
        if n >= 2 {
            for i in 0..n {
                let next = (i + 1) % n;
                if next != i {
                    edges.push((i, next));
                }
                for &s in strides {
                    let j = (i + s) % n;
                    if j != i {
                        edges.push((i, j));
                    }
                }
            }
        }
        Self::new(n, edges)
    }

    /// The shipped 28-node stand-in network: a ring with chords `(i, i+7)`.
    pub fn ring28plus() -> Self {
        Self::ring_with_chords(28, &[7]).expect("preset is well formed")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges as 0-based `(lo, hi)` pairs, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(i, j) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    /// Adjacency lists without self entries.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        adj
    }

    /// Parses the edge-list format: one `i j` pair per line, 1-based,
    /// `#` starts a comment. The node count is the largest index seen.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        let mut n = 0;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| -> Result<usize> {
                s.parse::<usize>().map_err(|_| {
                    Error::Parse(format!("edge list line {}: `{s}` is not a node index", lineno + 1))
                })
            };
            if fields.len() != 2 {
                return Err(Error::Parse(format!(
                    "edge list line {}: expected `i j`, got `{line}`",
                    lineno + 1
                )));
            }
            let (i, j) = (parse(fields[0])?, parse(fields[1])?);
            if i == 0 || j == 0 {
                return Err(Error::Parse(format!(
                    "edge list line {}: node indices are 1-based",
                    lineno + 1
                )));
            }
            n = n.max(i).max(j);
            edges.push((i - 1, j - 1));
        }
        if n == 0 {
            return Err(Error::Parse("edge list contains no edges".into()));
        }
        Self::new(n, edges)
    }

    pub fn read_edge_list(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_edge_list(&text)
    }

    /// Serializes to the 1-based edge-list format.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("# {} nodes, {} edges\n", self.n, self.edges.len());
        for &(i, j) in &self.edges {
            out.push_str(&format!("{} {}\n", i + 1, j + 1));
        }
        out
    }
}

/// Connectivity and diameter of a topology, computed by BFS from every node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Connectivity {
    pub connected: bool,
    /// Longest shortest path; `None` when disconnected.
    pub diameter: Option<usize>,
}

pub fn connectivity_and_diameter(topology: &Topology) -> Connectivity {
    let adj = topology.adjacency();
    let n = topology.n();
    let mut diameter = 0;
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for source in 0..n {
        dist.iter_mut().for_each(|d| *d = usize::MAX);
        dist[source] = 0;
        queue.clear();
        queue.push_back(source);
        let mut reached = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    diameter = diameter.max(dist[v]);
                    reached += 1;
                    queue.push_back(v);
                }
            }
        }
        if reached < n {
            return Connectivity { connected: false, diameter: None };
        }
    }
    Connectivity { connected: true, diameter: Some(diameter) }
}

/// A symmetric, row-stochastic, nonnegative weight matrix together with its
/// sparse neighbor lists (which include the node itself when `a_ii > 0`).
#[derive(Debug, Clone)]
pub struct WeightMatrix {
    a: DMatrix<f64>,
    neighbors: Vec<Vec<(usize, f64)>>,
    warnings: Vec<String>,
}

impl WeightMatrix {
    /// Validates a raw matrix against a topology. Support must equal the edge
    /// set plus the diagonal; a zero diagonal is accepted but recorded as a
    /// warning.
    pub fn from_raw(a: DMatrix<f64>, topology: &Topology) -> Result<Self> {
        let n = topology.n();
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::Dimension(format!(
                "weight matrix is {}x{} but topology has {n} nodes",
                a.nrows(),
                a.ncols()
            )));
        }
        let mut warnings = Vec::new();
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                let v = a[(i, j)];
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("weight a[{}][{}]", i + 1, j + 1)));
                }
                if v < 0.0 {
                    return Err(Error::Invalid(format!("negative weight a[{}][{}] = {v}", i + 1, j + 1)));
                }
                if v != a[(j, i)] {
                    return Err(Error::Invalid(format!(
                        "weight matrix not symmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
                if i != j && (v > 0.0) != topology.has_edge(i, j) {
                    return Err(Error::Invalid(format!(
                        "weight a[{}][{}] = {v} disagrees with the edge set",
                        i + 1,
                        j + 1
                    )));
                }
                row += v;
            }
            if (row - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::Invalid(format!("row {} sums to {row}, not 1", i + 1)));
            }
            if a[(i, i)] == 0.0 {
                warnings.push(format!("node {}: diagonal weight is exactly zero", i + 1));
            }
        }
        Ok(Self::assemble(a, warnings))
    }

    fn assemble(a: DMatrix<f64>, warnings: Vec<String>) -> Self {
        let n = a.nrows();
        let neighbors = (0..n)
            .map(|i| (0..n).filter(|&j| a[(i, j)] > 0.0).map(|j| (j, a[(i, j)])).collect())
            .collect();
        Self { a, neighbors, warnings }
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[(i, j)]
    }

    /// `(j, a_ij)` for every `j` with `a_ij > 0`, including `i` itself.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.neighbors[i]
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// `L = I - A`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        DMatrix::identity(self.n(), self.n()) - &self.a
    }

    /// One weighted-averaging round, `A x`, over the sparse neighbor lists.
    pub fn average(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.neighbors[i].iter().map(|&(j, a)| a * x[j]).sum();
        }
    }

    /// Dense `A^q`.
    pub fn power(&self, q: usize) -> DMatrix<f64> {
        let mut p = DMatrix::identity(self.n(), self.n());
        for _ in 0..q {
            p = &self.a * p;
        }
        p
    }
}

/// Metropolis weights: `a_ij = 1 / (1 + max(deg_i, deg_j))` on edges, with the
/// diagonal absorbing the remaining row mass.
pub fn build_metropolis(topology: &Topology) -> WeightMatrix {
    let n = topology.n();
    let deg = topology.degrees();
    let mut a = DMatrix::zeros(n, n);
    for (i, j) in topology.edges() {
        let w = 1.0 / (1.0 + deg[i].max(deg[j]) as f64);
        a[(i, j)] = w;
        a[(j, i)] = w;
    }
    let mut warnings = Vec::new();
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| a[(i, j)]).sum();
        let diag = 1.0 - off;
        a[(i, i)] = diag.max(0.0);
        if a[(i, i)] == 0.0 {
            warnings.push(format!("node {}: Metropolis diagonal is exactly zero", i + 1));
        }
    }
    WeightMatrix::assemble(a, warnings)
}

/// Eigenvalues of `L = I - A`, sorted, with the algebraic connectivity and
/// diameter.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianSpectrum {
    pub eigenvalues: Vec<f64>,
    /// Second-smallest eigenvalue; 0 for a single node. Also the
    /// `(m+1)`-th eigenvalue of `L ⊗ I_m`.
    pub l2: f64,
    pub connected: bool,
    pub diameter: Option<usize>,
}

impl LaplacianSpectrum {
    pub fn zero_eigenvalue_count(&self) -> usize {
        self.eigenvalues.iter().filter(|v| v.abs() < ZERO_EIGEN_TOL).count()
    }
}

pub fn laplacian_spectrum(w: &WeightMatrix, topology: &Topology) -> Result<LaplacianSpectrum> {
    if w.n() != topology.n() {
        return Err(Error::Dimension(format!(
            "weights for {} nodes, topology with {}",
            w.n(),
            topology.n()
        )));
    }
    let eigenvalues = linalg::sym_eigenvalues(&w.laplacian())?;
    let conn = connectivity_and_diameter(topology);
    let l2 = eigenvalues.get(1).copied().unwrap_or(0.0);
    Ok(LaplacianSpectrum { eigenvalues, l2, connected: conn.connected, diameter: conn.diameter })
}

impl fmt::Display for LaplacianSpectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "nodes: {}", self.eigenvalues.len())?;
        writeln!(f, "connected: {}", self.connected)?;
        match self.diameter {
            Some(d) => writeln!(f, "diameter: {d}")?,
            None => writeln!(f, "diameter: undefined (disconnected)")?,
        }
        writeln!(f, "l2: {}", self.l2)?;
        let list: Vec<String> = self.eigenvalues.iter().map(|v| format!("{v:.12}")).collect();
        writeln!(f, "laplacian eigenvalues: {}", list.join(" "))
    }
}

/// Eigenvalues of the lifted Laplacian `L ⊗ I_m`, computed by direct
/// construction.
pub fn lifted_laplacian_eigenvalues(w: &WeightMatrix, m: usize) -> Result<Vec<f64>> {
    linalg::sym_eigenvalues(&linalg::kron_identity(&w.laplacian(), m))
}

/// `A^q x0` by `q` successive neighbor averages.
pub(crate) fn repeated_average(w: &WeightMatrix, x0: &[f64], q: usize) -> Vec<f64> {
    let mut cur = x0.to_vec();
    let mut next = vec![0.0; x0.len()];
    for _ in 0..q {
        w.average(&cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    cur
}

/// Dense reference for [`repeated_average`], used by tests.
pub fn dense_power_apply(w: &WeightMatrix, x0: &[f64], q: usize) -> Vec<f64> {
    (w.power(q) * DVector::from_column_slice(x0)).iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metropolis_single_node_is_identity() {
        let t = Topology::isolated(1).unwrap();
        let w = build_metropolis(&t);
        assert_eq!(w.matrix(), &DMatrix::from_element(1, 1, 1.0));
    }

    #[test]
    fn metropolis_complete_three() {
        let w = build_metropolis(&Topology::complete(3).unwrap());
        for i in 0..3 {
            for j in 0..3 {
                assert!((w.get(i, j) - 1.0 / 3.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn metropolis_path_three() {
        let w = build_metropolis(&Topology::path(3).unwrap());
        let third = 1.0 / 3.0;
        assert_eq!(w.get(0, 1), third);
        assert_eq!(w.get(1, 2), third);
        assert!((w.get(0, 0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((w.get(2, 2) - 2.0 / 3.0).abs() < 1e-15);
        assert!((w.get(1, 1) - third).abs() < 1e-15);
        assert_eq!(w.get(0, 2), 0.0);
    }

    #[test]
    fn isolated_nodes_keep_full_self_weight() {
        let w = build_metropolis(&Topology::isolated(3).unwrap());
        assert_eq!(w.matrix(), &DMatrix::identity(3, 3));
        assert!(w.warnings().is_empty());
    }

    #[test]
    fn diameter_examples() {
        let single = connectivity_and_diameter(&Topology::isolated(1).unwrap());
        assert_eq!(single, Connectivity { connected: true, diameter: Some(0) });
        let path = connectivity_and_diameter(&Topology::path(3).unwrap());
        assert_eq!(path, Connectivity { connected: true, diameter: Some(2) });
        let two = connectivity_and_diameter(&Topology::isolated(2).unwrap());
        assert_eq!(two, Connectivity { connected: false, diameter: None });
    }

    #[test]
    fn spectrum_complete_three() {
        let t = Topology::complete(3).unwrap();
        let s = laplacian_spectrum(&build_metropolis(&t), &t).unwrap();
        let expect = [0.0, 1.0, 1.0];
        for (v, e) in s.eigenvalues.iter().zip(expect) {
            assert!((v - e).abs() < 1e-12, "{v} vs {e}");
        }
        assert!((s.l2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spectrum_single_node() {
        let t = Topology::isolated(1).unwrap();
        let s = laplacian_spectrum(&build_metropolis(&t), &t).unwrap();
        assert_eq!(s.eigenvalues.len(), 1);
        assert!(s.eigenvalues[0].abs() < 1e-15);
        assert_eq!(s.l2, 0.0);
        assert_eq!(s.diameter, Some(0));
    }

    #[test]
    fn ring28plus_has_one_zero_eigenvalue() {
        let t = Topology::ring28plus();
        assert_eq!(t.n(), 28);
        let s = laplacian_spectrum(&build_metropolis(&t), &t).unwrap();
        assert!(s.connected);
        assert!(s.diameter.unwrap() <= 7);
        assert_eq!(s.zero_eigenvalue_count(), 1);
        assert!(s.eigenvalues.iter().all(|&v| v > -1e-12 && v <= 2.0 + 1e-12));
        assert!(s.l2 > 1e-12);
    }

    #[test]
    fn disconnected_graph_has_repeated_zero() {
        let t = Topology::new(4, [(0, 1), (2, 3)]).unwrap();
        let s = laplacian_spectrum(&build_metropolis(&t), &t).unwrap();
        assert_eq!(s.zero_eigenvalue_count(), 2);
        assert!(!s.connected);
    }

    #[test]
    fn edge_list_round_trip_and_comments() {
        let text = "# path\n1 2\n2 3 # trailing\n\n3 2\n";
        let t = Topology::parse_edge_list(text).unwrap();
        assert_eq!(t, Topology::path(3).unwrap());
        assert_eq!(Topology::parse_edge_list(&t.to_edge_list()).unwrap(), t);
    }

    #[test]
    fn edge_list_errors() {
        assert!(Topology::parse_edge_list("0 1\n").is_err());
        assert!(Topology::parse_edge_list("1 1\n").is_err());
        assert!(Topology::parse_edge_list("1 2 3\n").is_err());
        assert!(Topology::parse_edge_list("a b\n").is_err());
        assert!(Topology::parse_edge_list("# nothing\n").is_err());
    }

    #[test]
    fn raw_loader_validates() {
        let t = Topology::path(2).unwrap();
        let ok = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]);
        assert!(WeightMatrix::from_raw(ok, &t).unwrap().warnings().is_empty());

        let zero_diag = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let w = WeightMatrix::from_raw(zero_diag, &t).unwrap();
        assert_eq!(w.warnings().len(), 2);

        let asym = DMatrix::from_row_slice(2, 2, &[0.4, 0.6, 0.5, 0.5]);
        assert!(WeightMatrix::from_raw(asym, &t).is_err());
        let off_support = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        assert!(WeightMatrix::from_raw(off_support, &t).is_err());
        let not_stochastic = DMatrix::from_row_slice(2, 2, &[0.6, 0.5, 0.5, 0.6]);
        assert!(WeightMatrix::from_raw(not_stochastic, &t).is_err());
    }

    #[test]
    fn sparse_average_matches_dense_power() {
        let t = Topology::ring28plus();
        let w = build_metropolis(&t);
        let x0: Vec<f64> = (0..28).map(|i| (i as f64 * 0.37).sin().abs()).collect();
        let sparse = repeated_average(&w, &x0, 5);
        let dense = dense_power_apply(&w, &x0, 5);
        for (s, d) in sparse.iter().zip(dense) {
            assert!((s - d).abs() < 1e-14);
        }
    }
}
