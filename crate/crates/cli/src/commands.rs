//! The pipeline verbs. Each reads its inputs from files, writes its outputs
//! to files and also returns what it computed.

use std::fs;
use std::path::Path;

use channel_charting::encoder::{EncoderParams, MlpParams};
use channel_charting::evalmetrics::MetricsReport;
use channel_charting::synthgen::ChannelSet;
use num_complex::Complex64;
use serde_json::json;

use crate::chart::{path_segments, scatter_svg};
use crate::config::{ExperimentConfig, InitKind};
use crate::error::{CliError, Result};
use crate::formats::{
    chart_csv, load_dataset, load_model, loss_csv, metrics_csv, save_dataset, save_model, write_text,
    ChartPoint, METRICS_HEADER,
};
use crate::model::{Model, TrainSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Arm {
    Smart,
    Random,
    Mlp,
}

impl Arm {
    pub fn name(self) -> &'static str {
        match self {
            Arm::Smart => "smart",
            Arm::Random => "random",
            Arm::Mlp => "mlp",
        }
    }
}

impl From<InitKind> for Arm {
    fn from(kind: InitKind) -> Self {
        match kind {
            InitKind::Smart => Arm::Smart,
            InitKind::Random => Arm::Random,
        }
    }
}

/// Reads a dataset file and attaches the configured radio.
pub fn load_channels(cfg: &ExperimentConfig, path: &Path) -> Result<ChannelSet> {
    load_dataset(path)?.into_channel_set(cfg.scenario.radio.clone(), cfg.scenario.trajectory.sample_rate)
}

pub fn init_model(cfg: &ExperimentConfig, cs: &ChannelSet, arm: Arm) -> Result<Model> {
    let e = &cfg.encoder;
    Ok(match arm {
        Arm::Smart => Model::Hybrid(EncoderParams::init_smart(cs, e.n_init, e.k_iso, e.k, e.d_out, cfg.seeds.init)?),
        Arm::Random => Model::Hybrid(EncoderParams::init_random(cs.dim(), e.n_init, e.k, e.d_out, cfg.seeds.init)?),
        Arm::Mlp => Model::Mlp(MlpParams::xavier(&cfg.mlp_dims(cs.dim()), cfg.seeds.baseline)?),
    })
}

/// Held-out sample indices under the configured split.
pub fn eval_indices(cfg: &ExperimentConfig, n: usize) -> Result<Vec<usize>> {
    Ok(cfg.train_config().split(n)?.1)
}

pub fn cmd_generate(cfg: &ExperimentConfig, out: &Path) -> Result<ChannelSet> {
    let cs = cfg.scenario().generate()?;
    save_dataset(out, &cs)?;
    Ok(cs)
}

pub fn cmd_init(cfg: &ExperimentConfig, dataset: &Path, out: &Path, arm: Option<Arm>) -> Result<Model> {
    let cs = load_channels(cfg, dataset)?;
    let model = init_model(cfg, &cs, arm.unwrap_or(cfg.encoder.init.into()))?;
    save_model(out, &model)?;
    Ok(model)
}

pub fn cmd_train(
    cfg: &ExperimentConfig,
    dataset: &Path,
    model_in: &Path,
    model_out: &Path,
    report: &Path,
) -> Result<TrainSummary> {
    let cs = load_channels(cfg, dataset)?;
    let model = load_model(model_in)?;
    let (model, summary) = model.train(&cs, &cfg.train_config(), &cfg.mining_config())?;
    save_model(model_out, &model)?;
    write_text(report, &loss_csv(&summary.epoch_losses))?;
    Ok(summary)
}

pub fn cmd_eval(cfg: &ExperimentConfig, dataset: &Path, model: &Path, out: &Path) -> Result<MetricsReport> {
    let cs = load_channels(cfg, dataset)?;
    let model = load_model(model)?;
    let report = model.evaluate(&cs, &eval_indices(cfg, cs.len())?, &cfg.eval.k_grid)?;
    write_text(out, &metrics_csv(&report.rows))?;
    Ok(report)
}

/// Charts `indices` with `chart`; samples that cannot be charted are left out.
pub fn chart_points<F>(mut chart: F, cs: &ChannelSet, indices: &[usize]) -> Result<Vec<ChartPoint>>
where
    F: FnMut(usize, &[Complex64]) -> channel_charting::Result<Vec<f64>>,
{
    let mut points = Vec::with_capacity(indices.len());
    for &i in indices {
        if i >= cs.len() {
            return Err(channel_charting::Error::OutOfRange(format!("sample index {i}")).into());
        }
        let h = cs.channel(i);
        if let Ok(z) = chart(i, h.as_slice().expect("channel rows are contiguous")) {
            points.push(ChartPoint {
                index: i,
                chart: z,
                truth: [cs.positions[[i, 0]], cs.positions[[i, 1]]],
            });
        }
    }
    Ok(points)
}

/// Writes the chart CSV and an SVG of the first two chart coordinates.
pub fn export_chart(cfg: &ExperimentConfig, points: &[ChartPoint], csv: &Path, svg: &Path, title: &str) -> Result<()> {
    if let Some(p) = points.iter().find(|p| p.chart.len() < 2) {
        return Err(CliError::Dimension(format!("cannot plot a {}-D chart", p.chart.len())));
    }
    let indices: Vec<usize> = points.iter().map(|p| p.index).collect();
    let xy: Vec<[f64; 2]> = points.iter().map(|p| [p.chart[0], p.chart[1]]).collect();
    write_text(csv, &chart_csv(points))?;
    write_text(svg, &scatter_svg(&xy, &path_segments(&cfg.trajectory(), &indices), title))
}

/// Charts every sample of the dataset.
pub fn cmd_chart(cfg: &ExperimentConfig, dataset: &Path, model: &Path, csv: &Path, svg: &Path) -> Result<Vec<ChartPoint>> {
    let cs = load_channels(cfg, dataset)?;
    let model = load_model(model)?;
    model.check_input(&cs)?;
    let all: Vec<usize> = (0..cs.len()).collect();
    let points = chart_points(|_, h| model.chart(h), &cs, &all)?;
    export_chart(cfg, &points, csv, svg, "channel chart")?;
    Ok(points)
}

#[derive(Debug, Clone)]
pub struct ArmResult {
    pub arm: Arm,
    pub param_count: usize,
    pub untrained: MetricsReport,
    pub trained: MetricsReport,
    pub training: TrainSummary,
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub samples: usize,
    pub channel_dim: usize,
    pub eval_samples: usize,
    pub arms: Vec<ArmResult>,
}

impl CompareReport {
    pub fn arm(&self, arm: Arm) -> Option<&ArmResult> {
        self.arms.iter().find(|a| a.arm == arm)
    }
}

/// Note printed with parameter counts: the hybrid encoder holds
/// `2·M·N_init + D_out·N_init` weights.
pub const PARAM_COUNT_NOTE: &str = "hybrid parameters = 2*M*N_init + D_out*N_init: 205000 at \
    N_init=100 and 410000 at N_init=200 (M=1024, D_out=2); the published figure of 409800 for \
    N_init=200 is 200 short of this formula";

/// Runs the smart-init, random-init and (if enabled) MLP arms on one shared
/// dataset, split and triplet set. Writes `metrics.csv` with untrained and
/// trained scores of every arm, `loss_<arm>.csv`, `chart_<arm>.csv/.svg`
/// of the trained models over all samples, and `summary.json`.
pub fn cmd_compare(cfg: &ExperimentConfig, out_dir: &Path) -> Result<CompareReport> {
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let cs = cfg.scenario().generate()?;
    let eval = eval_indices(cfg, cs.len())?;
    let all: Vec<usize> = (0..cs.len()).collect();
    let (train_cfg, mining) = (cfg.train_config(), cfg.mining_config());

    let mut arms = vec![Arm::Smart, Arm::Random];
    if cfg.baseline.mlp {
        arms.push(Arm::Mlp);
    }
    let mut metrics = format!("arm,stage,{METRICS_HEADER}\n");
    let mut results = Vec::new();
    for arm in arms {
        let model = init_model(cfg, &cs, arm)?;
        let untrained = model.evaluate(&cs, &eval, &cfg.eval.k_grid)?;
        let param_count = model.param_count();
        let (model, training) = model.train(&cs, &train_cfg, &mining)?;
        let trained = model.evaluate(&cs, &eval, &cfg.eval.k_grid)?;
        for (stage, report) in [("untrained", &untrained), ("trained", &trained)] {
            for line in metrics_csv(&report.rows).lines().skip(1) {
                metrics.push_str(&format!("{},{stage},{line}\n", arm.name()));
            }
        }
        let name = arm.name();
        write_text(&out_dir.join(format!("loss_{name}.csv")), &loss_csv(&training.epoch_losses))?;
        let points = chart_points(|_, h| model.chart(h), &cs, &all)?;
        export_chart(
            cfg,
            &points,
            &out_dir.join(format!("chart_{name}.csv")),
            &out_dir.join(format!("chart_{name}.svg")),
            &format!("{name} (trained)"),
        )?;
        results.push(ArmResult {
            arm,
            param_count,
            untrained,
            trained,
            training,
        });
    }
    write_text(&out_dir.join("metrics.csv"), &metrics)?;

    let report = CompareReport {
        samples: cs.len(),
        channel_dim: cs.dim(),
        eval_samples: eval.len(),
        arms: results,
    };
    let summary = json!({
        "samples": report.samples,
        "channel_dim": report.channel_dim,
        "eval_samples": report.eval_samples,
        "param_count_note": PARAM_COUNT_NOTE,
        "arms": report.arms.iter().map(|a| json!({
            "arm": a.arm.name(),
            "param_count": a.param_count,
            "triplets": a.training.triplet_count,
            "optimizer_steps": a.training.steps,
            "skipped_triplets": a.training.skipped,
            "skipped_eval_samples": a.trained.skipped,
            "first_epoch_loss": a.training.epoch_losses.first(),
            "last_epoch_loss": a.training.epoch_losses.last(),
        })).collect::<Vec<_>>(),
    });
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    write_text(&out_dir.join("summary.json"), &text)?;
    Ok(report)
}
