use channel_charting::encoder::{Encoder, EncoderParams, MlpParams};
use channel_charting::evalmetrics::{evaluate, MetricsReport};
use channel_charting::synthgen::ChannelSet;
use channel_charting::trainer::{train, TrainConfig, TrainReport};
use channel_charting::triplet::MiningConfig;
use num_complex::Complex64;

use crate::error::{CliError, Result};

/// Either charting function, as stored in a model file.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Hybrid(EncoderParams),
    Mlp(MlpParams),
}

/// Training outcome without the model itself.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub epoch_losses: Vec<f64>,
    pub triplet_count: usize,
    pub skipped: usize,
    pub steps: u64,
}

impl Model {
    pub fn input_dim(&self) -> usize {
        match self {
            Model::Hybrid(p) => p.input_dim(),
            Model::Mlp(p) => p.input_dim(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Model::Hybrid(p) => p.output_dim(),
            Model::Mlp(p) => p.output_dim(),
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Model::Hybrid(p) => p.param_count(),
            Model::Mlp(p) => p.param_count(),
        }
    }

    pub fn chart(&self, h: &[Complex64]) -> channel_charting::Result<Vec<f64>> {
        match self {
            Model::Hybrid(p) => p.chart(h),
            Model::Mlp(p) => p.chart(h),
        }
    }

    pub fn check_input(&self, cs: &ChannelSet) -> Result<()> {
        if self.input_dim() != cs.dim() {
            return Err(CliError::Dimension(format!(
                "model expects {} entries per channel, dataset has {}",
                self.input_dim(),
                cs.dim()
            )));
        }
        Ok(())
    }

    pub fn train(self, cs: &ChannelSet, cfg: &TrainConfig, mining: &MiningConfig) -> Result<(Model, TrainSummary)> {
        self.check_input(cs)?;
        fn summary<E>(r: &TrainReport<E>) -> TrainSummary {
            TrainSummary {
                epoch_losses: r.epoch_losses.clone(),
                triplet_count: r.triplet_count,
                skipped: r.skipped,
                steps: r.steps,
            }
        }
        Ok(match self {
            Model::Hybrid(p) => {
                let r = train(p, cs, cfg, mining)?;
                let s = summary(&r);
                (Model::Hybrid(r.model), s)
            }
            Model::Mlp(p) => {
                let r = train(p, cs, cfg, mining)?;
                let s = summary(&r);
                (Model::Mlp(r.model), s)
            }
        })
    }

    pub fn evaluate(&self, cs: &ChannelSet, indices: &[usize], k_grid: &[f64]) -> Result<MetricsReport> {
        self.check_input(cs)?;
        Ok(match self {
            Model::Hybrid(p) => evaluate(p, cs, indices, k_grid)?,
            Model::Mlp(p) => evaluate(p, cs, indices, k_grid)?,
        })
    }
}
