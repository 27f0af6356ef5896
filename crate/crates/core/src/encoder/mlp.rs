//! Bias-free ReLU multilayer perceptron over `[Re h; Im h] / ‖h‖`.

use ndarray::{Array2, Axis};
use num_complex::Complex64;

use super::Encoder;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Hidden widths of the reference baseline.
pub const BASELINE_HIDDEN: [usize; 5] = [1024, 512, 256, 128, 64];

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    /// Weight matrices, each `out x in`, from input to output.
    pub layers: Vec<Array2<f64>>,
}

/// Activations of one forward pass over a batch (rows are samples).
#[derive(Debug, Clone)]
pub struct MlpCache {
    /// `inputs[l]` feeds layer `l`; `inputs[0]` is the normalized channel.
    pub inputs: Vec<Array2<f64>>,
    /// Rows of the batch that could be normalized.
    pub valid: Vec<bool>,
}

fn real_input(h: &[Complex64]) -> Option<Vec<f64>> {
    let norm = h.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return None;
    }
    let mut x = Vec::with_capacity(2 * h.len());
    x.extend(h.iter().map(|c| c.re / norm));
    x.extend(h.iter().map(|c| c.im / norm));
    Some(x)
}

impl MlpParams {
    /// Xavier-uniform weights for the given widths, drawn layer by layer in
    /// row-major order.
    pub fn xavier(dims: &[usize], seed: u64) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::InvalidConfig(format!("bad layer widths {dims:?}")));
        }
        let mut rng = SplitMix64::new(seed);
        let layers = dims
            .windows(2)
            .map(|w| {
                let bound = (6.0 / (w[0] + w[1]) as f64).sqrt();
                Array2::from_shape_simple_fn((w[1], w[0]), || rng.uniform_range(-bound, bound))
            })
            .collect();
        Ok(Self { layers })
    }

    /// The reference baseline: `2M → 1024 → 512 → 256 → 128 → 64 → d_out`.
    pub fn baseline(m: usize, d_out: usize, seed: u64) -> Result<Self> {
        let mut dims = vec![2 * m];
        dims.extend_from_slice(&BASELINE_HIDDEN);
        dims.push(d_out);
        Self::xavier(&dims, seed)
    }

    pub fn from_layers(layers: Vec<Array2<f64>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidConfig("an MLP needs at least one layer".into()));
        }
        for w in layers.windows(2) {
            if w[1].ncols() != w[0].nrows() {
                return Err(Error::DimensionMismatch(format!(
                    "layer {:?} cannot follow {:?}",
                    w[1].dim(),
                    w[0].dim()
                )));
            }
        }
        Ok(Self {
            layers: layers
                .into_iter()
                .map(|l| l.as_standard_layout().into_owned())
                .collect(),
        })
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.layers[0].ncols()];
        dims.extend(self.layers.iter().map(|l| l.nrows()));
        dims
    }

    /// Forward pass over a batch of real inputs (rows).
    fn forward_rows(&self, x: Array2<f64>, valid: Vec<bool>) -> (Array2<f64>, MlpCache) {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut act = x;
        let last = self.layers.len() - 1;
        for (l, w) in self.layers.iter().enumerate() {
            let mut next = act.dot(&w.t());
            if l < last {
                next.mapv_inplace(|v| v.max(0.0));
            }
            inputs.push(act);
            act = next;
        }
        (act, MlpCache { inputs, valid })
    }

    fn batch_input(&self, inputs: &[&[Complex64]]) -> Result<(Array2<f64>, Vec<bool>)> {
        let width = self.layers[0].ncols();
        let mut x = Array2::zeros((inputs.len(), width));
        let mut valid = Vec::with_capacity(inputs.len());
        for (row, h) in inputs.iter().enumerate() {
            if 2 * h.len() != width {
                return Err(Error::DimensionMismatch(format!(
                    "channel length {} for an MLP with {} inputs",
                    h.len(),
                    width
                )));
            }
            match real_input(h) {
                Some(v) => {
                    x.row_mut(row).assign(&ndarray::ArrayView1::from(&v));
                    valid.push(true);
                }
                None => valid.push(false),
            }
        }
        Ok((x, valid))
    }

    /// Charts one channel, keeping the activations for [`MlpParams::backward`].
    pub fn forward(&self, h: &[Complex64]) -> Result<(Vec<f64>, MlpCache)> {
        let (x, valid) = self.batch_input(&[h])?;
        if !valid[0] {
            return Err(Error::ZeroNorm);
        }
        let (out, cache) = self.forward_rows(x, valid);
        Ok((out.row(0).to_vec(), cache))
    }

    /// Gradients of `Σ_rows ⟨gz_row, z_row⟩` for every layer, given the
    /// upstream gradient as a `batch x d_out` matrix.
    pub fn backward(&self, cache: &MlpCache, gz: &Array2<f64>) -> Vec<Array2<f64>> {
        let mut grads: Vec<Array2<f64>> = Vec::with_capacity(self.layers.len());
        let mut g = gz.clone();
        for l in (0..self.layers.len()).rev() {
            let input = &cache.inputs[l];
            grads.push(g.t().dot(input));
            if l > 0 {
                let mut prev = g.dot(&self.layers[l]);
                // `input` is the ReLU output of layer l-1: zero exactly where
                // the pre-activation was non-positive.
                prev.zip_mut_with(input, |gp, &a| {
                    if a <= 0.0 {
                        *gp = 0.0
                    }
                });
                g = prev;
            }
        }
        grads.reverse();
        grads
    }
}

impl Encoder for MlpParams {
    type Tape = MlpCache;

    fn input_dim(&self) -> usize {
        self.layers[0].ncols() / 2
    }

    fn output_dim(&self) -> usize {
        self.layers.last().map(|l| l.nrows()).unwrap_or(0)
    }

    fn chart(&self, h: &[Complex64]) -> Result<Vec<f64>> {
        self.forward(h).map(|(z, _)| z)
    }

    fn forward_batch(&self, inputs: &[&[Complex64]]) -> (Vec<Option<Vec<f64>>>, Self::Tape) {
        let (x, valid) = match self.batch_input(inputs) {
            Ok(v) => v,
            Err(_) => {
                let x = Array2::zeros((inputs.len(), self.layers[0].ncols()));
                (x, vec![false; inputs.len()])
            }
        };
        let (out, cache) = self.forward_rows(x, valid);
        let charts = out
            .axis_iter(Axis(0))
            .zip(&cache.valid)
            .map(|(row, &ok)| ok.then(|| row.to_vec()))
            .collect();
        (charts, cache)
    }

    fn backward_batch(
        &self,
        tape: &Self::Tape,
        _inputs: &[&[Complex64]],
        gz: &[Option<Vec<f64>>],
    ) -> Vec<Vec<f64>> {
        let mut g = Array2::zeros((gz.len(), self.output_dim()));
        for (row, gi) in gz.iter().enumerate() {
            if let (Some(gi), true) = (gi, tape.valid[row]) {
                g.row_mut(row).assign(&ndarray::ArrayView1::from(gi));
            }
        }
        self.backward(tape, &g)
            .into_iter()
            .map(|a| a.into_raw_vec_and_offset().0)
            .collect()
    }

    fn tensors(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .map(|l| l.as_slice().expect("standard layout"))
            .collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .map(|l| l.as_slice_mut().expect("standard layout"))
            .collect()
    }
}
