//! Charting functions: the sparse correlation ("hybrid") encoder and a
//! bias-free MLP baseline, behind a common batch interface used for training.

pub mod hybrid;
pub mod mlp;

use num_complex::Complex64;

use crate::error::Result;

pub use hybrid::{hard_threshold, EncoderParams, ForwardCache, HybridGrads};
pub use mlp::{MlpCache, MlpParams, BASELINE_HIDDEN};

/// A differentiable map from channel vectors to chart coordinates.
///
/// Parameters are exposed as flat tensors in a fixed order so optimizers
/// and checksums can treat every model alike.
pub trait Encoder {
    /// Per-batch forward state needed by [`Encoder::backward_batch`].
    type Tape;

    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;

    fn chart(&self, h: &[Complex64]) -> Result<Vec<f64>>;

    /// Charts every input against the same parameter snapshot. Inputs that
    /// cannot be charted yield `None`.
    fn forward_batch(&self, inputs: &[&[Complex64]]) -> (Vec<Option<Vec<f64>>>, Self::Tape);

    /// Gradient of `Σ_i ⟨gz_i, z_i⟩` with respect to every tensor; entries
    /// with `gz_i = None` contribute nothing.
    fn backward_batch(
        &self,
        tape: &Self::Tape,
        inputs: &[&[Complex64]],
        gz: &[Option<Vec<f64>>],
    ) -> Vec<Vec<f64>>;

    fn tensors(&self) -> Vec<&[f64]>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;

    fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }
}

/// Architecture description for parameter counting.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    /// Dense layer widths from input to output, no biases.
    Mlp { dims: Vec<usize> },
    Hybrid { m: usize, n_init: usize, d_out: usize },
}

impl ModelSpec {
    /// The baseline MLP over `[Re h; Im h]` with the reference hidden widths.
    pub fn baseline_mlp(m: usize, d_out: usize) -> Self {
        let mut dims = vec![2 * m];
        dims.extend_from_slice(&BASELINE_HIDDEN);
        dims.push(d_out);
        ModelSpec::Mlp { dims }
    }
}

/// Number of trainable real scalars.
pub fn count_params(spec: &ModelSpec) -> usize {
    match spec {
        ModelSpec::Mlp { dims } => dims.windows(2).map(|w| w[0] * w[1]).sum(),
        ModelSpec::Hybrid { m, n_init, d_out } => 2 * m * n_init + d_out * n_init,
    }
}
