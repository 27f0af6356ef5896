//! Trustworthiness and continuity of a chart against ground-truth positions.
//!
//! With `r(i, j)` the rank of `j` among the neighbours of `i` (nearest is 1,
//! ties to the lower index):
//!
//! * `TW(K) = 1 − 2/(nK(2n−3K−1)) Σ_i Σ_{j ∈ U_K(i)} (r_pos(i,j) − K)` where
//!   `U_K(i)` are the chart's K nearest neighbours of `i` that are not among
//!   its K nearest true neighbours;
//! * `CT(K)` swaps the roles of the chart and the positions.

use ndarray::{Array2, ArrayView1};
use num_complex::Complex64;
use serde::Serialize;

use crate::encoder::Encoder;
use crate::error::{Error, Result};

/// Neighbourhood fractions of the evaluation set.
pub const DEFAULT_K_GRID: [f64; 8] = [0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.08, 0.10];

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Neighbour order of every point: `order[i]` lists the other points from
/// nearest to farthest.
fn neighbour_order(points: &Array2<f64>) -> Vec<Vec<usize>> {
    let n = points.nrows();
    (0..n)
        .map(|i| {
            let d: Vec<f64> = (0..n).map(|j| sq_dist(points.row(i), points.row(j))).collect();
            let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            others.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
            others
        })
        .collect()
}

fn ranks_from_order(order: &[Vec<usize>]) -> Array2<usize> {
    let n = order.len();
    let mut ranks = Array2::zeros((n, n));
    for (i, row) in order.iter().enumerate() {
        for (r, &j) in row.iter().enumerate() {
            ranks[[i, j]] = r + 1;
        }
    }
    ranks
}

/// Entry `(i, j)` is the rank of `j` by Euclidean distance from `i`;
/// the diagonal is left at 0.
pub fn rank_matrix(points: &Array2<f64>) -> Array2<usize> {
    ranks_from_order(&neighbour_order(points))
}

/// Largest admissible neighbourhood size for `n` points.
pub fn max_k(n: usize) -> usize {
    (2 * n).saturating_sub(2) / 3
}

/// Rank structure of one (positions, chart) pair, reusable across K.
#[derive(Debug, Clone)]
pub struct NeighborhoodRanks {
    n: usize,
    true_order: Vec<Vec<usize>>,
    true_ranks: Array2<usize>,
    chart_order: Vec<Vec<usize>>,
    chart_ranks: Array2<usize>,
}

impl NeighborhoodRanks {
    pub fn new(positions: &Array2<f64>, chart: &Array2<f64>) -> Result<Self> {
        let n = positions.nrows();
        if chart.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} positions but {} chart points",
                n,
                chart.nrows()
            )));
        }
        let true_order = neighbour_order(positions);
        let chart_order = neighbour_order(chart);
        Ok(Self {
            n,
            true_ranks: ranks_from_order(&true_order),
            chart_ranks: ranks_from_order(&chart_order),
            true_order,
            chart_order,
        })
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if k == 0 || k > max_k(self.n) {
            return Err(Error::OutOfRange(format!("K = {k} for {} points", self.n)));
        }
        Ok(())
    }

    fn penalty(order: &[Vec<usize>], ranks: &Array2<usize>, k: usize) -> usize {
        order
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row[..k]
                    .iter()
                    .map(|&j| ranks[[i, j]])
                    .filter(|&r| r > k)
                    .map(|r| r - k)
                    .sum::<usize>()
            })
            .sum()
    }

    fn score(&self, penalty: usize, k: usize) -> f64 {
        let (n, k) = (self.n as f64, k as f64);
        1.0 - 2.0 / (n * k * (2.0 * n - 3.0 * k - 1.0)) * penalty as f64
    }

    pub fn trustworthiness(&self, k: usize) -> Result<f64> {
        self.check_k(k)?;
        Ok(self.score(Self::penalty(&self.chart_order, &self.true_ranks, k), k))
    }

    pub fn continuity(&self, k: usize) -> Result<f64> {
        self.check_k(k)?;
        Ok(self.score(Self::penalty(&self.true_order, &self.chart_ranks, k), k))
    }
}

pub fn trustworthiness(positions: &Array2<f64>, chart: &Array2<f64>, k: usize) -> Result<f64> {
    NeighborhoodRanks::new(positions, chart)?.trustworthiness(k)
}

pub fn continuity(positions: &Array2<f64>, chart: &Array2<f64>, k: usize) -> Result<f64> {
    NeighborhoodRanks::new(positions, chart)?.continuity(k)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "K_frac")]
    pub k_frac: f64,
    pub trustworthiness: f64,
    pub continuity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub rows: Vec<MetricsRow>,
    /// Samples that were charted and scored.
    pub n_eval: usize,
    /// Samples the chart function rejected.
    pub skipped: usize,
}

impl MetricsReport {
    pub fn at_fraction(&self, frac: f64) -> Option<&MetricsRow> {
        self.rows.iter().find(|r| (r.k_frac - frac).abs() < 1e-12)
    }
}

/// Scores a chart already computed for `positions`, at `K = max(1, round(frac·n))`.
pub fn score_chart(positions: &Array2<f64>, chart: &Array2<f64>, k_grid: &[f64]) -> Result<Vec<MetricsRow>> {
    let ranks = NeighborhoodRanks::new(positions, chart)?;
    let n = positions.nrows();
    k_grid
        .iter()
        .map(|&frac| {
            let k = ((frac * n as f64).round() as usize).max(1);
            Ok(MetricsRow {
                k,
                k_frac: frac,
                trustworthiness: ranks.trustworthiness(k)?,
                continuity: ranks.continuity(k)?,
            })
        })
        .collect()
}

/// Charts the samples `indices` of `cs` with `chart` (called with the sample
/// index and its channel) and scores the result against their positions.
pub fn evaluate_with<F>(
    mut chart: F,
    channels: &Array2<Complex64>,
    positions: &Array2<f64>,
    indices: &[usize],
    k_grid: &[f64],
) -> Result<MetricsReport>
where
    F: FnMut(usize, &[Complex64]) -> Result<Vec<f64>>,
{
    let mut points = Vec::with_capacity(indices.len());
    let mut truth = Vec::with_capacity(indices.len());
    let mut skipped = 0;
    let mut dim = None;
    for &i in indices {
        if i >= channels.nrows() {
            return Err(Error::OutOfRange(format!("sample index {i}")));
        }
        let h = channels.row(i);
        match chart(i, h.as_slice().expect("channel rows are contiguous")) {
            Ok(z) => {
                if *dim.get_or_insert(z.len()) != z.len() {
                    return Err(Error::DimensionMismatch("chart dimension changed".into()));
                }
                points.push(z);
                truth.push(positions.row(i).to_vec());
            }
            Err(_) => skipped += 1,
        }
    }
    let n = points.len();
    if n < 3 {
        return Err(Error::TooFewSamples(n));
    }
    let to_matrix = |rows: &[Vec<f64>]| {
        Array2::from_shape_fn((rows.len(), rows[0].len()), |(i, j)| rows[i][j])
    };
    let rows = score_chart(&to_matrix(&truth), &to_matrix(&points), k_grid)?;
    Ok(MetricsReport { rows, n_eval: n, skipped })
}

pub fn evaluate<E: Encoder>(
    model: &E,
    cs: &crate::synthgen::ChannelSet,
    indices: &[usize],
    k_grid: &[f64],
) -> Result<MetricsReport> {
    if model.input_dim() != cs.dim() {
        return Err(Error::DimensionMismatch(format!(
            "model expects {} entries, channels have {}",
            model.input_dim(),
            cs.dim()
        )));
    }
    evaluate_with(|_, h| model.chart(h), &cs.channels, &cs.positions, indices, k_grid)
}
