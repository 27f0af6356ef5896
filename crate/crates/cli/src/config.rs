//! The JSON experiment document: every constant of a run lives here.

use std::fs;
use std::path::Path;

use channel_charting::encoder::BASELINE_HIDDEN;
use channel_charting::evalmetrics::DEFAULT_K_GRID;
use channel_charting::synthgen::{RadioConfig, ScattererSet, Scenario, TrajectoryConfig, DEFAULT_SAMPLES};
use channel_charting::trainer::TrainConfig;
use channel_charting::triplet::MiningConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioSection,
    pub encoder: EncoderSection,
    pub mining: MiningSection,
    pub training: TrainingSection,
    pub eval: EvalSection,
    pub seeds: Seeds,
    pub baseline: BaselineSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub trajectory: TrajectorySection,
    pub radio: RadioConfig,
    pub scatterers: ScattererSet,
}

/// Trajectory parameters; the jitter seed comes from `seeds.trajectory`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySection {
    pub waypoints: Vec<[f64; 2]>,
    pub speed: f64,
    pub sample_rate: f64,
    pub jitter_sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    Smart,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncoderSection {
    pub n_init: usize,
    pub k: usize,
    pub k_iso: usize,
    pub d_out: usize,
    pub init: InitKind,
}

/// Temporal windows in seconds; the sample rate is the trajectory's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MiningSection {
    pub t_close: f64,
    pub t_far: f64,
    pub per_anchor: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub margin: f64,
    pub split_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    /// Neighborhood sizes as fractions of the evaluation set.
    pub k_grid: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub trajectory: u64,
    /// Dictionary sampling (smart) or weight draws (random).
    pub init: u64,
    pub mining: u64,
    /// Train/eval split and epoch shuffles.
    pub training: u64,
    /// MLP weight draws.
    pub baseline: u64,
}

impl Seeds {
    /// Every stage seed derived from one number: `s, s+1, ..., s+4`.
    pub fn from_root(s: u64) -> Self {
        Seeds {
            trajectory: s,
            init: s.wrapping_add(1),
            mining: s.wrapping_add(2),
            training: s.wrapping_add(3),
            baseline: s.wrapping_add(4),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineSection {
    pub mlp: bool,
    /// Hidden widths of the MLP baseline.
    #[serde(default = "baseline_hidden")]
    pub hidden: Vec<usize>,
}

fn baseline_hidden() -> Vec<usize> {
    BASELINE_HIDDEN.to_vec()
}

pub const PRESETS: [&str; 2] = ["default", "desk"];

/// Number of samples of the `desk` preset.
pub const DESK_SAMPLES: usize = 2000;

impl ExperimentConfig {
    /// The full-size campaign scaled to `n` samples. Temporal windows shrink
    /// with the walk so that they cover the same fraction of the loop.
    pub fn scaled(n: usize) -> Self {
        let scenario = Scenario::default_with_samples(n);
        let t = scenario.trajectory;
        let ratio = n as f64 / DEFAULT_SAMPLES as f64;
        let full = n == DEFAULT_SAMPLES;
        ExperimentConfig {
            scenario: ScenarioSection {
                trajectory: TrajectorySection {
                    waypoints: t.waypoints,
                    speed: t.speed,
                    sample_rate: t.sample_rate,
                    jitter_sigma: t.jitter_sigma,
                },
                radio: scenario.radio,
                scatterers: scenario.scatterers,
            },
            encoder: EncoderSection {
                n_init: 100,
                k: 5,
                k_iso: 5,
                d_out: 2,
                init: InitKind::Smart,
            },
            mining: MiningSection {
                t_close: if full { 100.0 } else { 100.0 * ratio },
                t_far: if full { 290.0 } else { 290.0 * ratio },
                per_anchor: if full { 5 } else { 1 },
            },
            training: TrainingSection::from(&TrainConfig::default()),
            eval: EvalSection {
                k_grid: DEFAULT_K_GRID.to_vec(),
            },
            seeds: Seeds {
                trajectory: t.seed,
                ..Seeds::from_root(1)
            },
            baseline: BaselineSection {
                mlp: true,
                hidden: baseline_hidden(),
            },
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "default" => Some(Self::scaled(DEFAULT_SAMPLES)),
            "desk" => Some(Self::scaled(DESK_SAMPLES)),
            _ => None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("config serializes");
        text.push('\n');
        text
    }

    pub fn with_seed_override(mut self, root: Option<u64>) -> Self {
        if let Some(s) = root {
            self.seeds = Seeds::from_root(s);
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |e: channel_charting::Error| CliError::Config(e.to_string());
        self.trajectory().validate().map_err(invalid)?;
        self.scenario.radio.validate().map_err(invalid)?;
        self.scenario.scatterers.validate().map_err(invalid)?;
        self.mining_config().validate().map_err(invalid)?;
        self.train_config().validate().map_err(invalid)?;
        let e = &self.encoder;
        if e.n_init == 0 || e.d_out == 0 || e.k_iso == 0 {
            return Err(CliError::Config("encoder n_init, d_out and k_iso must be positive".into()));
        }
        if e.k == 0 || e.k > e.n_init {
            return Err(CliError::Config(format!("encoder k = {} outside 1..={}", e.k, e.n_init)));
        }
        if self.eval.k_grid.is_empty() || self.eval.k_grid.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
            return Err(CliError::Config("eval k_grid needs fractions in (0, 1)".into()));
        }
        if self.baseline.hidden.contains(&0) {
            return Err(CliError::Config("baseline hidden widths must be positive".into()));
        }
        Ok(())
    }

    pub fn trajectory(&self) -> TrajectoryConfig {
        let t = &self.scenario.trajectory;
        TrajectoryConfig {
            waypoints: t.waypoints.clone(),
            speed: t.speed,
            sample_rate: t.sample_rate,
            jitter_sigma: t.jitter_sigma,
            seed: self.seeds.trajectory,
        }
    }

    pub fn scenario(&self) -> Scenario {
        Scenario {
            trajectory: self.trajectory(),
            radio: self.scenario.radio.clone(),
            scatterers: self.scenario.scatterers.clone(),
        }
    }

    pub fn mining_config(&self) -> MiningConfig {
        MiningConfig {
            t_close: self.mining.t_close,
            t_far: self.mining.t_far,
            sample_rate: self.scenario.trajectory.sample_rate,
            per_anchor: self.mining.per_anchor,
            seed: self.seeds.mining,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.training;
        TrainConfig {
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            beta1: t.beta1,
            beta2: t.beta2,
            epsilon: t.epsilon,
            margin: t.margin,
            split_ratio: t.split_ratio,
            seed: self.seeds.training,
        }
    }

    /// Layer widths of the MLP baseline for `m`-entry channels.
    pub fn mlp_dims(&self, m: usize) -> Vec<usize> {
        let mut dims = vec![2 * m];
        dims.extend_from_slice(&self.baseline.hidden);
        dims.push(self.encoder.d_out);
        dims
    }
}

impl From<&TrainConfig> for TrainingSection {
    fn from(t: &TrainConfig) -> Self {
        TrainingSection {
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            beta1: t.beta1,
            beta2: t.beta2,
            epsilon: t.epsilon,
            margin: t.margin,
            split_ratio: t.split_ratio,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_round_trip_through_json() {
        for name in PRESETS {
            let cfg = ExperimentConfig::preset(name).unwrap();
            assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        }
    }

    #[test]
    fn default_preset_uses_reference_windows() {
        let cfg = ExperimentConfig::preset("default").unwrap();
        let m = cfg.mining_config();
        assert_eq!((m.close_window(), m.far_window()), (700, 2030));
        assert_eq!(cfg.mining.per_anchor, 5);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(&ExperimentConfig::scaled(50).to_json()).unwrap();
        v["training"]["momentum"] = 0.5.into();
        let err = ExperimentConfig::from_json(&v.to_string()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn seed_override_replaces_every_stage() {
        let cfg = ExperimentConfig::scaled(50).with_seed_override(Some(10));
        assert_eq!(cfg.seeds, Seeds::from_root(10));
        assert_eq!(cfg.scenario().trajectory.seed, 10);
        assert_eq!(cfg.train_config().seed, 13);
    }

    #[test]
    fn k_larger_than_dictionary_is_a_config_error() {
        let mut cfg = ExperimentConfig::scaled(50);
        cfg.encoder.k = 101;
        assert_eq!(cfg.validate().unwrap_err().exit_code(), 2);
    }
}
