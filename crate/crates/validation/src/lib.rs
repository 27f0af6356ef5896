//! Slow, literal reference implementations used to check the optimized
//! library code.

use ndarray::{Array2, ArrayView1};

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `ranks[[i, j]]`: 1-based position of `j` when the other points are sorted
/// by distance from `i`; the diagonal is 0.
pub fn brute_ranks(points: &Array2<f64>) -> Array2<usize> {
    let n = points.nrows();
    let mut ranks = Array2::zeros((n, n));
    for i in 0..n {
        let mut others: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (sq_dist(points.row(i), points.row(j)), j))
            .collect();
        others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (r, &(_, j)) in others.iter().enumerate() {
            ranks[[i, j]] = r + 1;
        }
    }
    ranks
}

/// `1 − 2/(nK(2n−3K−1)) · Σ_i Σ_{j∈U_K(i)} (r(i,j) − K)`, where `U_K(i)` are
/// the `K` nearest neighbors of `i` in `low` that are not among its `K`
/// nearest in `high` and `r` ranks in `high`.
pub fn brute_trustworthiness(high: &Array2<f64>, low: &Array2<f64>, k: usize) -> f64 {
    let n = high.nrows();
    let (rh, rl) = (brute_ranks(high), brute_ranks(low));
    let mut penalty = 0usize;
    for i in 0..n {
        for j in 0..n {
            if j != i && rl[[i, j]] <= k && rh[[i, j]] > k {
                penalty += rh[[i, j]] - k;
            }
        }
    }
    let (nf, kf) = (n as f64, k as f64);
    1.0 - 2.0 / (nf * kf * (2.0 * nf - 3.0 * kf - 1.0)) * penalty as f64
}

/// Trustworthiness with the roles of the two spaces exchanged.
pub fn brute_continuity(high: &Array2<f64>, low: &Array2<f64>, k: usize) -> f64 {
    brute_trustworthiness(low, high, k)
}

/// Squared residual of the best similarity transform (rotation or
/// reflection, uniform scale, translation) of `y` onto `x`, over the total
/// squared deviation of `x` from its centroid. Both are `n x 2`.
pub fn procrustes_residual(x: &Array2<f64>, y: &Array2<f64>) -> f64 {
    assert_eq!(x.dim(), y.dim());
    assert_eq!(x.ncols(), 2);
    let center = |a: &Array2<f64>| {
        let mean = a.mean_axis(ndarray::Axis(0)).unwrap();
        a - &mean
    };
    let (x, y) = (center(x), center(y));
    let total: f64 = x.iter().map(|v| v * v).sum();
    let yy: f64 = y.iter().map(|v| v * v).sum();
    // c[a][b] = Σ x_a y_b
    let mut c = [[0.0; 2]; 2];
    for (xr, yr) in x.rows().into_iter().zip(y.rows()) {
        for a in 0..2 {
            for b in 0..2 {
                c[a][b] += xr[a] * yr[b];
            }
        }
    }
    // For a rotation the best alignment Σ⟨x, R y⟩ is the norm of
    // (c00 + c11, c10 − c01); for a reflection, of (c00 − c11, c10 + c01).
    let rotation = (c[0][0] + c[1][1]).hypot(c[1][0] - c[0][1]);
    let reflection = (c[0][0] - c[1][1]).hypot(c[1][0] + c[0][1]);
    let best = rotation.max(reflection);
    // With the optimal scale s = best / yy the residual is total − best²/yy.
    ((total - best * best / yy) / total).max(0.0)
}
