//! Phase- and scale-invariant channel pseudo-distance.
//!
//! `d(h_i, h_j)^2 = 2 - 2 |h_i^H h_j| / (‖h_i‖ ‖h_j‖)`. Evaluating that
//! expression directly loses every digit when the two channels are nearly
//! collinear (`sqrt` of a rounding residue near `1e-16` is `1e-8`), so the
//! distance is computed through the equivalent form
//! `d = min_φ ‖u − e^{jφ} v‖` on the unit-normalized channels `u`, `v`,
//! whose minimizer is the phase of `u^H v`.

use ndarray::Array2;
use num_complex::Complex64;
use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Symmetric matrix of pairwise distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    values: Array2<f64>,
}

impl DistanceMatrix {
    /// Wraps a square matrix, checking symmetry and the zero diagonal.
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let n = values.nrows();
        if values.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "distance matrix is {}x{}",
                n,
                values.ncols()
            )));
        }
        for i in 0..n {
            if values[[i, i]] != 0.0 {
                return Err(Error::InvalidConfig(format!("nonzero diagonal at {i}")));
            }
            for j in 0..i {
                if values[[i, j]] != values[[j, i]] || values[[i, j]].is_nan() || values[[i, j]] < 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "entry ({i}, {j}) breaks symmetry or non-negativity"
                    )));
                }
            }
        }
        Ok(Self { values })
    }

    /// Euclidean distances between the rows of `points`.
    pub fn euclidean(points: &Array2<f64>) -> Self {
        let n = points.nrows();
        let mut values = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..i {
                let d = points
                    .row(i)
                    .iter()
                    .zip(points.row(j))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                values[[i, j]] = d;
                values[[j, i]] = d;
            }
        }
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[[i, j]]
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.values
    }
}

fn normalized(h: &[Complex64]) -> Result<Vec<Complex64>> {
    let norm = h.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::ZeroNorm);
    }
    Ok(h.iter().map(|c| c / norm).collect())
}

fn bitwise_order(a: &[Complex64], b: &[Complex64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            (x.re.to_bits(), x.im.to_bits()).cmp(&(y.re.to_bits(), y.im.to_bits()))
        })
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Distance between unit-norm vectors. Arguments are put in a canonical
/// order first so `(a, b)` and `(b, a)` evaluate the same expression.
fn unit_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    let (u, v) = match bitwise_order(a, b) {
        Ordering::Equal => return 0.0,
        Ordering::Less => (a, b),
        Ordering::Greater => (b, a),
    };
    // c = u^H v
    let (mut cr, mut ci) = (0.0, 0.0);
    for (x, y) in u.iter().zip(v) {
        cr += x.re * y.re + x.im * y.im;
        ci += x.re * y.im - x.im * y.re;
    }
    let mag = cr.hypot(ci);
    // Rotate v by conj(c)/|c| so that u^H (w v) = |c| is real and positive.
    let w = if mag > 0.0 {
        Complex64::new(cr / mag, -ci / mag)
    } else {
        Complex64::new(1.0, 0.0)
    };
    let residual: f64 = u.iter().zip(v).map(|(x, y)| (x - w * y).norm_sqr()).sum();
    // The minimum of ‖u − e^{jφ}v‖² over φ, i.e. 2 − 2|c|, capped at its
    // theoretical maximum.
    residual.sqrt().min(std::f64::consts::SQRT_2)
}

/// Pseudo-distance between two channel vectors; invariant to global phase
/// and to positive scaling of either argument.
pub fn pseudo_distance(h_i: &[Complex64], h_j: &[Complex64]) -> Result<f64> {
    if h_i.len() != h_j.len() {
        return Err(Error::DimensionMismatch(format!(
            "channel lengths {} and {}",
            h_i.len(),
            h_j.len()
        )));
    }
    let u = normalized(h_i)?;
    let v = normalized(h_j)?;
    Ok(unit_distance(&u, &v))
}

/// All pairwise pseudo-distances between `rows`.
pub fn distance_matrix<R: AsRef<[Complex64]>>(rows: &[R]) -> Result<DistanceMatrix> {
    let n = rows.len();
    let m = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
    let units = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let r = r.as_ref();
            if r.len() != m {
                return Err(Error::at(
                    i,
                    Error::DimensionMismatch(format!("length {} != {}", r.len(), m)),
                ));
            }
            normalized(r).map_err(|e| Error::at(i, e))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut values = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..i {
            let d = unit_distance(&units[i], &units[j]);
            values[[i, j]] = d;
            values[[j, i]] = d;
        }
    }
    Ok(DistanceMatrix { values })
}
