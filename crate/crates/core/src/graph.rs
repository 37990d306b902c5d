//! Undirected communication graphs, their Laplacians, and orthonormal
//! spectral decompositions.
//!
//! Agent IDs are 1-based throughout, both in the API and in the text format.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Undirected simple graph on agents `1..=n`.
///
/// Edges are stored as ordered pairs `(i, j)` with `i < j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

/// A random geometric graph together with the node positions that produced it.
#[derive(Clone, Debug)]
pub struct GeometricGraph {
    pub graph: Graph,
    pub positions: Vec<[f64; 2]>,
}

impl Graph {
    /// Graph with `n` agents and no edges.
    pub fn empty(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSize("graph needs at least one agent".into()));
        }
        Ok(Graph { n, edges: BTreeSet::new() })
    }

    pub fn path(n: usize) -> Result<Self> {
        let mut g = Self::empty(n)?;
        for i in 1..n {
            g.edges.insert((i, i + 1));
        }
        Ok(g)
    }

    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidSize(format!("cycle needs n >= 3, got {n}")));
        }
        let mut g = Self::path(n)?;
        g.edges.insert((1, n));
        Ok(g)
    }

    /// Graph from an explicit edge list. Rejects self-loops, out-of-range IDs
    /// and duplicates (in either orientation).
    pub fn explicit(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(n)?;
        for &(i, j) in edges {
            if i == j {
                return Err(Error::InvalidEdge(i, j, "self-loop"));
            }
            if i < 1 || i > n || j < 1 || j > n {
                return Err(Error::InvalidEdge(i, j, "agent id out of range"));
            }
            if !g.edges.insert((i.min(j), i.max(j))) {
                return Err(Error::InvalidEdge(i, j, "duplicate edge"));
            }
        }
        Ok(g)
    }

    /// Nodes placed i.i.d. uniformly in `[0, width]^2`; an edge joins every
    /// pair at Euclidean distance `<= radius`. Does not retry for connectivity.
    pub fn random_geometric(n: usize, width: f64, radius: f64, seed: u64) -> Result<GeometricGraph> {
        if !(width > 0.0 && width.is_finite()) || !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "width and radius must be positive, got {width} and {radius}"
            )));
        }
        let mut g = Self::empty(n)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let positions: Vec<[f64; 2]> = (0..n)
            .map(|_| [rng.random::<f64>() * width, rng.random::<f64>() * width])
            .collect();
        for i in 0..n {
            for j in i + 1..n {
                let dx = positions[i][0] - positions[j][0];
                let dy = positions[i][1] - positions[j][1];
                if (dx * dx + dy * dy).sqrt() <= radius {
                    g.edges.insert((i + 1, j + 1));
                }
            }
        }
        Ok(GeometricGraph { graph: g, positions })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    /// Degrees of agents `1..=n`, returned in ID order.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(i, j) in &self.edges {
            deg[i - 1] += 1;
            deg[j - 1] += 1;
        }
        deg
    }

    pub fn degree(&self, id: usize) -> usize {
        self.degrees()[id - 1]
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    pub fn neighbors(&self, id: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(i, j)| {
                if i == id {
                    Some(j)
                } else if j == id {
                    Some(i)
                } else {
                    None
                }
            })
            .collect()
    }

    /// `L = D - V`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.n, self.n);
        for &(i, j) in &self.edges {
            let (a, b) = (i - 1, j - 1);
            l[(a, a)] += 1.0;
            l[(b, b)] += 1.0;
            l[(a, b)] -= 1.0;
            l[(b, a)] -= 1.0;
        }
        l
    }

    pub fn is_connected(&self) -> bool {
        let adj = self.adjacency_lists();
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.n
    }

    fn adjacency_lists(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j) in &self.edges {
            adj[i - 1].push(j - 1);
            adj[j - 1].push(i - 1);
        }
        adj
    }

    /// Text form: `n=<int>` on the first line, then one `i j` pair per line.
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n={}", self.n)?;
        for (i, j) in self.edges() {
            writeln!(f, "{i} {j}")?;
        }
        Ok(())
    }
}

impl FromStr for Graph {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Config("empty graph text".into()))?;
        let n: usize = header
            .strip_prefix("n=")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| Error::Config(format!("bad graph header {header:?}, expected n=<int>")))?;
        let mut edges = Vec::new();
        for line in lines {
            let ids: Vec<usize> = line
                .split_whitespace()
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Config(format!("bad edge line {line:?}")))?;
            if ids.len() != 2 {
                return Err(Error::Config(format!("edge line {line:?} must hold two ids")));
            }
            edges.push((ids[0], ids[1]));
        }
        Graph::explicit(n, &edges)
    }
}

/// Ascending eigenvalues and matching orthonormal eigenvectors (columns) of a
/// symmetric matrix, so that `L = U diag(λ) Uᵀ`.
#[derive(Clone, Debug)]
pub struct SpectralData {
    pub eigenvalues: DVector<f64>,
    pub eigvecs: DMatrix<f64>,
}

impl SpectralData {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `U diag(λ) Uᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let u = &self.eigvecs;
        u * DMatrix::from_diagonal(&self.eigenvalues) * u.transpose()
    }
}

const SYMMETRY_TOL: f64 = 1e-10;

/// Orthonormal eigendecomposition with ascending eigenvalues.
///
/// Sign convention: in each eigenvector the first entry of largest magnitude
/// is non-negative. Magnitudes within 1e-12 of the column maximum count as
/// ties so mirror-symmetric eigenvectors resolve to the lowest index.
pub fn spectral_decompose(l: &DMatrix<f64>) -> Result<SpectralData> {
    if !l.is_square() {
        return Err(Error::Dimension(format!("{}x{} matrix is not square", l.nrows(), l.ncols())));
    }
    if l.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let asym = (l - l.transpose()).amax();
    if asym > SYMMETRY_TOL {
        return Err(Error::Asymmetric(asym));
    }
    let n = l.nrows();
    let sym = (l + l.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut eigvecs = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(k).into_owned();
        let peak = v.amax();
        if let Some(lead) = v.iter().position(|x| x.abs() >= peak - 1e-12) {
            if v[lead] < 0.0 {
                v.neg_mut();
            }
        }
        eigvecs.set_column(col, &v);
    }
    Ok(SpectralData { eigenvalues, eigvecs })
}
