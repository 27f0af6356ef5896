//! Triplets mined from the temporal order of channel collection, and the
//! margin loss that trains on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Anchor, close and far sample indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TripletIndex {
    pub anchor: usize,
    pub close: usize,
    pub far: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MiningConfig {
    /// Close-window half width, seconds.
    pub t_close: f64,
    /// Far-window outer half width, seconds.
    pub t_far: f64,
    /// Samples per second.
    pub sample_rate: f64,
    pub per_anchor: usize,
    pub seed: u64,
}

impl Default for MiningConfig {
    fn default() -> Self {
        Self {
            t_close: 100.0,
            t_far: 290.0,
            sample_rate: 7.0,
            per_anchor: 5,
            seed: 0,
        }
    }
}

impl MiningConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_close > 0.0 && self.t_close < self.t_far) {
            return Err(Error::InvalidConfig("mining needs 0 < t_close < t_far".into()));
        }
        if !(self.sample_rate > 0.0) {
            return Err(Error::InvalidConfig("sample rate must be positive".into()));
        }
        if self.per_anchor == 0 {
            return Err(Error::InvalidConfig("per_anchor must be at least 1".into()));
        }
        Ok(())
    }

    /// Close window half width in samples.
    pub fn close_window(&self) -> usize {
        (self.t_close * self.sample_rate).round() as usize
    }

    /// Far window outer half width in samples.
    pub fn far_window(&self) -> usize {
        (self.t_far * self.sample_rate).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinedTriplets {
    pub triplets: Vec<TripletIndex>,
    /// Anchors without any far candidate inside the sequence.
    pub skipped_anchors: usize,
}

/// For every anchor `i`, draws `per_anchor` independent pairs
/// `j ~ U([i-S_c, i+S_c] \ {i})` and `k ~ U([i-S_f, i-S_c) ∪ (i+S_c, i+S_f])`,
/// both clipped to `[0, n-1]`. Per draw the close index is sampled first.
pub fn mine_triplets(n: usize, cfg: &MiningConfig) -> Result<MinedTriplets> {
    cfg.validate()?;
    let s_c = cfg.close_window();
    let s_f = cfg.far_window();
    if s_c == 0 || n < 2 {
        return Err(Error::InvalidConfig(format!(
            "empty close window (S_c = {s_c}, n = {n})"
        )));
    }
    let mut rng = SplitMix64::new(cfg.seed);
    let mut triplets = Vec::with_capacity(n * cfg.per_anchor);
    let mut skipped_anchors = 0;
    for i in 0..n {
        let close_lo = i.saturating_sub(s_c);
        let close_hi = (i + s_c).min(n - 1);
        let close_count = close_hi - close_lo;

        let left = if i > s_c {
            Some((i.saturating_sub(s_f), i - s_c - 1))
        } else {
            None
        };
        let right = if i + s_c < n - 1 {
            Some((i + s_c + 1, (i + s_f).min(n - 1)))
        } else {
            None
        };
        let left_count = left.map_or(0, |(a, b)| b + 1 - a);
        let right_count = right.map_or(0, |(a, b)| b + 1 - a);
        if left_count + right_count == 0 {
            skipped_anchors += 1;
            continue;
        }
        for _ in 0..cfg.per_anchor {
            let mut close = close_lo + rng.below(close_count as u64) as usize;
            if close >= i {
                close += 1;
            }
            let r = rng.below((left_count + right_count) as u64) as usize;
            let far = match (left, right) {
                (Some((a, _)), _) if r < left_count => a + r,
                (_, Some((a, _))) => a + r - left_count,
                _ => unreachable!("far draw outside both windows"),
            };
            triplets.push(TripletIndex {
                anchor: i,
                close,
                far,
            });
        }
    }
    Ok(MinedTriplets {
        triplets,
        skipped_anchors,
    })
}

/// Value of the margin loss with the two distances it compares.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripletLoss {
    pub loss: f64,
    pub d_plus: f64,
    pub d_minus: f64,
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `max(0, ‖z − z⁺‖ − ‖z − z⁻‖ + margin)`.
pub fn triplet_loss(z: &[f64], z_plus: &[f64], z_minus: &[f64], margin: f64) -> TripletLoss {
    let d_plus = euclid(z, z_plus);
    let d_minus = euclid(z, z_minus);
    TripletLoss {
        loss: (d_plus - d_minus + margin).max(0.0),
        d_plus,
        d_minus,
    }
}

/// Subgradients of [`triplet_loss`] for the anchor, close and far outputs.
/// A zero distance contributes nothing to its branch.
pub fn triplet_loss_grad(
    z: &[f64],
    z_plus: &[f64],
    z_minus: &[f64],
    margin: f64,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let dim = z.len();
    let t = triplet_loss(z, z_plus, z_minus, margin);
    let mut gz = vec![0.0; dim];
    let mut g_plus = vec![0.0; dim];
    let mut g_minus = vec![0.0; dim];
    if t.loss <= 0.0 {
        return (gz, g_plus, g_minus);
    }
    for c in 0..dim {
        if t.d_plus > 0.0 {
            let u = (z[c] - z_plus[c]) / t.d_plus;
            gz[c] += u;
            g_plus[c] = -u;
        }
        if t.d_minus > 0.0 {
            let u = (z[c] - z_minus[c]) / t.d_minus;
            gz[c] -= u;
            g_minus[c] = u;
        }
    }
    (gz, g_plus, g_minus)
}
