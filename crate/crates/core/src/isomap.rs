//! Isomap over a precomputed distance matrix: k-nearest-neighbour graph,
//! all-pairs geodesics by Dijkstra, then classical multidimensional scaling.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::linalg::jacobi_eigen;
use crate::metricspace::DistanceMatrix;

/// Undirected weighted graph; `adjacency[i]` is sorted by neighbour index.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    pub adjacency: Vec<Vec<(usize, f64)>>,
}

impl NeighborGraph {
    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search_by_key(&j, |e| e.0).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    fn add_edge(&mut self, i: usize, j: usize, w: f64) {
        for (a, b) in [(i, j), (j, i)] {
            if let Err(pos) = self.adjacency[a].binary_search_by_key(&b, |e| e.0) {
                self.adjacency[a].insert(pos, (b, w));
            }
        }
    }

    /// Component label per node (labels are the smallest node index in each component).
    pub fn components(&self) -> Vec<usize> {
        let n = self.len();
        let mut label = vec![usize::MAX; n];
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            let mut stack = vec![start];
            label[start] = start;
            while let Some(u) = stack.pop() {
                for &(v, _) in &self.adjacency[u] {
                    if label[v] == usize::MAX {
                        label[v] = start;
                        stack.push(v);
                    }
                }
            }
        }
        label
    }

    /// Joins components by repeatedly adding the shortest edge of `dist`
    /// that crosses between two components.
    pub fn bridge(&mut self, dist: &DistanceMatrix) {
        loop {
            let label = self.components();
            let mut best: Option<(f64, usize, usize)> = None;
            for i in 0..self.len() {
                for j in i + 1..self.len() {
                    if label[i] != label[j] {
                        let d = dist.get(i, j);
                        if best.is_none_or(|(bd, _, _)| d < bd) {
                            best = Some((d, i, j));
                        }
                    }
                }
            }
            match best {
                Some((d, i, j)) => self.add_edge(i, j, d),
                None => return,
            }
        }
    }
}

/// Each node links to its `k_iso` nearest others (ties toward the lower
/// index); the edge set is the union over nodes.
pub fn knn_graph(dist: &DistanceMatrix, k_iso: usize) -> Result<NeighborGraph> {
    let n = dist.len();
    if k_iso == 0 || k_iso >= n {
        return Err(Error::OutOfRange(format!("k_iso = {k_iso} for {n} points")));
    }
    let mut graph = NeighborGraph {
        adjacency: vec![Vec::new(); n],
    };
    for i in 0..n {
        let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        others.sort_by(|&a, &b| dist.get(i, a).total_cmp(&dist.get(i, b)).then(a.cmp(&b)));
        for &j in &others[..k_iso] {
            graph.add_edge(i, j, dist.get(i, j));
        }
    }
    Ok(graph)
}

#[derive(PartialEq)]
struct Frontier(f64, usize);

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(graph: &NeighborGraph, source: usize) -> Vec<f64> {
    let mut best = vec![f64::INFINITY; graph.len()];
    best[source] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(Frontier(0.0, source));
    while let Some(Frontier(d, u)) = heap.pop() {
        if d > best[u] {
            continue;
        }
        for &(v, w) in &graph.adjacency[u] {
            let nd = d + w;
            if nd < best[v] {
                best[v] = nd;
                heap.push(Frontier(nd, v));
            }
        }
    }
    best
}

/// All-pairs shortest paths. A disconnected graph is first bridged with
/// the cheapest cross-component edges taken from `dist`.
pub fn geodesic_distances(graph: &NeighborGraph, dist: &DistanceMatrix) -> Result<DistanceMatrix> {
    if graph.len() != dist.len() {
        return Err(Error::DimensionMismatch(format!(
            "graph has {} nodes, distance matrix {}",
            graph.len(),
            dist.len()
        )));
    }
    let mut bridged;
    let graph = if graph.components().iter().any(|&c| c != 0) {
        bridged = graph.clone();
        bridged.bridge(dist);
        &bridged
    } else {
        graph
    };
    let n = graph.len();
    let mut values = Array2::zeros((n, n));
    for i in 0..n {
        let row = dijkstra(graph, i);
        for j in i + 1..n {
            values[[i, j]] = row[j];
            values[[j, i]] = row[j];
        }
    }
    DistanceMatrix::new(values)
}

/// Low-dimensional coordinates with the spectral values that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    /// `n x d_out`.
    pub coords: Array2<f64>,
    /// Leading eigenvalues of the double-centred Gram matrix, non-increasing.
    pub eigenvalues: Array1<f64>,
}

/// Classical MDS. Each eigenvector's sign is chosen so its largest-magnitude
/// entry (first one on ties) is positive.
pub fn classical_mds(dist: &DistanceMatrix, d_out: usize) -> Result<Embedding> {
    let n = dist.len();
    if d_out == 0 || n < d_out {
        return Err(Error::OutOfRange(format!("d_out = {d_out} for {n} points")));
    }
    let sq = dist.values().mapv(|d| d * d);
    let row_mean: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
    let grand = row_mean.iter().sum::<f64>() / n as f64;
    let mut gram = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let b = -0.5 * (sq[[i, j]] - row_mean[i] - row_mean[j] + grand);
            gram[[i, j]] = b;
            gram[[j, i]] = b;
        }
    }
    let eig = jacobi_eigen(&gram)?;
    let mut coords = Array2::zeros((n, d_out));
    for c in 0..d_out {
        let col = eig.vectors.column(c);
        let pivot = col
            .iter()
            .enumerate()
            .fold(0, |best, (i, x)| if x.abs() > col[best].abs() { i } else { best });
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        let scale = eig.values[c].max(0.0).sqrt();
        for i in 0..n {
            coords[[i, c]] = sign * col[i] * scale;
        }
    }
    Ok(Embedding {
        coords,
        eigenvalues: eig.values.slice(ndarray::s![..d_out]).to_owned(),
    })
}

pub fn isomap(dist: &DistanceMatrix, k_iso: usize, d_out: usize) -> Result<Embedding> {
    let graph = knn_graph(dist, k_iso)?;
    let geodesics = geodesic_distances(&graph, dist)?;
    classical_mds(&geodesics, d_out)
}
