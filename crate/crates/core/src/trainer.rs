//! Minibatch triplet training with Adam.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::encoder::Encoder;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::synthgen::ChannelSet;
use crate::triplet::{mine_triplets, triplet_loss, triplet_loss_grad, MiningConfig, TripletIndex};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub margin: f64,
    /// Fraction of samples used for training; the rest is held out.
    pub split_ratio: f64,
    /// Root seed; the split and the per-epoch shuffles draw from streams
    /// seeded by its first and second outputs.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 64,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            margin: 1.0,
            split_ratio: 0.7,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::InvalidConfig("split_ratio must lie in (0, 1)".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0) || !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig("learning rate and epsilon must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::InvalidConfig("Adam betas must lie in [0, 1)".into()));
        }
        if !(self.margin >= 0.0) {
            return Err(Error::InvalidConfig("margin must be non-negative".into()));
        }
        Ok(())
    }

    fn seeds(&self) -> (u64, u64) {
        let mut root = SplitMix64::new(self.seed);
        (root.next_u64(), root.next_u64())
    }

    /// The train/eval split this configuration trains on.
    pub fn split(&self, n: usize) -> Result<(Vec<usize>, Vec<usize>)> {
        split_dataset(n, self.split_ratio, self.seeds().0)
    }
}

/// Seeded random split. The train part has `round(ratio * n)` samples
/// (kept within `1..n`); both parts come back sorted so temporal order
/// survives inside each.
pub fn split_dataset(n: usize, ratio: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 2 || !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidConfig(format!("cannot split {n} samples at ratio {ratio}")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    SplitMix64::new(seed).shuffle(&mut perm);
    let n_train = ((ratio * n as f64).round() as usize).clamp(1, n - 1);
    let mut train = perm[..n_train].to_vec();
    let mut eval = perm[n_train..].to_vec();
    train.sort_unstable();
    eval.sort_unstable();
    Ok((train, eval))
}

/// Adam moments, one buffer per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub first: Vec<Vec<f64>>,
    pub second: Vec<Vec<f64>>,
    pub step: u64,
}

impl OptimizerState {
    pub fn for_model<E: Encoder>(model: &E) -> Self {
        let shapes: Vec<usize> = model.tensors().iter().map(|t| t.len()).collect();
        Self::with_shapes(&shapes)
    }

    pub fn with_shapes(lens: &[usize]) -> Self {
        Self {
            first: lens.iter().map(|&l| vec![0.0; l]).collect(),
            second: lens.iter().map(|&l| vec![0.0; l]).collect(),
            step: 0,
        }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(
    state: &mut OptimizerState,
    params: &mut [&mut [f64]],
    grads: &[Vec<f64>],
    cfg: &TrainConfig,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.first.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} tensors, {} gradients, {} moment buffers",
            params.len(),
            grads.len(),
            state.first.len()
        )));
    }
    for ((p, g), m) in params.iter().zip(grads).zip(&state.first) {
        if p.len() != g.len() || p.len() != m.len() {
            return Err(Error::DimensionMismatch(format!(
                "tensor of {} entries with gradient of {} and moments of {}",
                p.len(),
                g.len(),
                m.len()
            )));
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    for (((p, g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(&mut state.first)
        .zip(&mut state.second)
    {
        for i in 0..p.len() {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            p[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
    Ok(())
}

/// Totals from one optimizer step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepOutcome {
    pub loss_sum: f64,
    pub processed: usize,
    pub skipped: usize,
}

/// Runs the three members of every triplet through the same parameter
/// snapshot, averages the loss gradient over the chartable triplets and
/// applies one Adam update. Indices refer to rows of `cs`.
pub fn train_step<E: Encoder>(
    model: &mut E,
    state: &mut OptimizerState,
    cs: &ChannelSet,
    batch: &[TripletIndex],
    cfg: &TrainConfig,
) -> Result<StepOutcome> {
    let row = |i: usize| -> &[Complex64] {
        cs.channels
            .row(i)
            .to_slice()
            .expect("channel rows are contiguous")
    };
    let inputs: Vec<&[Complex64]> = batch
        .iter()
        .flat_map(|t| [row(t.anchor), row(t.close), row(t.far)])
        .collect();
    let (charts, tape) = model.forward_batch(&inputs);

    let mut gz: Vec<Option<Vec<f64>>> = vec![None; inputs.len()];
    let mut out = StepOutcome::default();
    for (t, z) in charts.chunks(3).enumerate() {
        let (Some(a), Some(p), Some(f)) = (&z[0], &z[1], &z[2]) else {
            out.skipped += 1;
            continue;
        };
        out.loss_sum += triplet_loss(a, p, f, cfg.margin).loss;
        out.processed += 1;
        let (ga, gp, gf) = triplet_loss_grad(a, p, f, cfg.margin);
        gz[3 * t] = Some(ga);
        gz[3 * t + 1] = Some(gp);
        gz[3 * t + 2] = Some(gf);
    }
    if out.processed == 0 {
        return Ok(out);
    }
    let scale = 1.0 / out.processed as f64;
    for g in gz.iter_mut().flatten() {
        g.iter_mut().for_each(|x| *x *= scale);
    }
    let grads = model.backward_batch(&tape, &inputs, &gz);
    drop(tape);
    adam_step(state, &mut model.tensors_mut(), &grads, cfg)?;
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct TrainReport<E> {
    /// Mean triplet loss of each epoch, measured during the epoch.
    pub epoch_losses: Vec<f64>,
    pub model: E,
    /// Triplet evaluations skipped because a member could not be charted.
    pub skipped: usize,
    pub steps: u64,
    pub triplet_count: usize,
    pub train_indices: Vec<usize>,
    pub eval_indices: Vec<usize>,
}

/// Splits `cs`, mines triplets over the ordered training subset and trains
/// `model` for `cfg.epochs` epochs.
pub fn train<E: Encoder>(
    model: E,
    cs: &ChannelSet,
    cfg: &TrainConfig,
    mining: &MiningConfig,
) -> Result<TrainReport<E>> {
    cfg.validate()?;
    if model.input_dim() != cs.dim() {
        return Err(Error::DimensionMismatch(format!(
            "model expects {} entries, channels have {}",
            model.input_dim(),
            cs.dim()
        )));
    }
    let (train_indices, eval_indices) = cfg.split(cs.len())?;
    let mined = mine_triplets(train_indices.len(), mining)?;
    let triplets: Vec<TripletIndex> = mined
        .triplets
        .iter()
        .map(|t| TripletIndex {
            anchor: train_indices[t.anchor],
            close: train_indices[t.close],
            far: train_indices[t.far],
        })
        .collect();
    if triplets.is_empty() {
        return Err(Error::InvalidConfig("mining produced no triplets".into()));
    }

    let mut model = model;
    let mut state = OptimizerState::for_model(&model);
    let mut rng = SplitMix64::new(cfg.seeds().1);
    let mut order: Vec<usize> = (0..triplets.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut skipped = 0;
    let mut batch = Vec::with_capacity(cfg.batch_size);
    for _ in 0..cfg.epochs {
        rng.shuffle(&mut order);
        let (mut loss_sum, mut processed) = (0.0, 0);
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| triplets[i]));
            let out = train_step(&mut model, &mut state, cs, &batch, cfg)?;
            loss_sum += out.loss_sum;
            processed += out.processed;
            skipped += out.skipped;
        }
        if processed == 0 {
            return Err(Error::AllDegenerate);
        }
        epoch_losses.push(loss_sum / processed as f64);
    }
    Ok(TrainReport {
        epoch_losses,
        model,
        skipped,
        steps: state.step,
        triplet_count: triplets.len(),
        train_indices,
        eval_indices,
    })
}
