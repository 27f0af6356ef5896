//! On-disk formats: binary dataset and model files, CSV reports.
//!
//! Both binary formats are little-endian. A dataset file is the magic `CCD1`,
//! then `u64` N, M and P, then the N·P positions (sample-major), then the
//! N·M channel entries as (re, im) pairs (sample-major). A model file is the
//! magic `CCM1` and a `u64` kind: 0 for the hybrid encoder followed by `u64`
//! M, N_init, D_out, k and the row-major `d_re`, `d_im`, `z`; 1 for an MLP
//! followed by a `u64` layer count and, per layer, `u64` rows and columns
//! (outputs, inputs) and the row-major weights.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use channel_charting::encoder::{EncoderParams, MlpParams};
use channel_charting::evalmetrics::MetricsRow;
use channel_charting::synthgen::{ChannelSet, RadioConfig};
use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{CliError, Result};
use crate::model::Model;

pub const DATASET_MAGIC: [u8; 4] = *b"CCD1";
pub const MODEL_MAGIC: [u8; 4] = *b"CCM1";

const KIND_HYBRID: u64 = 0;
const KIND_MLP: u64 = 1;

/// Raw contents of a dataset file.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetFile {
    pub positions: Array2<f64>,
    pub channels: Array2<Complex64>,
}

impl DatasetFile {
    /// Attaches the radio description, which must match the channel length.
    pub fn into_channel_set(self, radio: RadioConfig, sample_rate: f64) -> Result<ChannelSet> {
        if self.channels.ncols() != radio.m() {
            return Err(CliError::Dimension(format!(
                "dataset has {} entries per channel, radio config implies {}",
                self.channels.ncols(),
                radio.m()
            )));
        }
        Ok(ChannelSet {
            channels: self.channels,
            positions: self.positions,
            radio,
            sample_rate,
        })
    }
}

fn write_u64(w: &mut impl Write, v: u64) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn write_f64s<'a>(w: &mut impl Write, values: impl IntoIterator<Item = &'a f64>) -> io::Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_u64(r: &mut impl Read) -> io::Result<u64> {
    let mut b = [0; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64s(r: &mut impl Read, n: usize) -> io::Result<Vec<f64>> {
    // Grow as data arrives so a corrupt header cannot trigger a huge allocation.
    let mut out = Vec::with_capacity(n.min(1 << 20));
    let mut b = [0; 8];
    for _ in 0..n {
        r.read_exact(&mut b)?;
        out.push(f64::from_le_bytes(b));
    }
    Ok(out)
}

fn read_magic(r: &mut impl Read, magic: [u8; 4]) -> io::Result<()> {
    let mut b = [0; 4];
    r.read_exact(&mut b)?;
    if b != magic {
        return Err(io::Error::new(io::ErrorKind::InvalidData, format!("bad magic {b:?}")));
    }
    Ok(())
}

fn product(dims: &[u64]) -> io::Result<usize> {
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(usize::try_from(d).ok()?))
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, format!("sizes {dims:?} overflow")))
}

pub fn write_dataset(w: &mut impl Write, positions: &Array2<f64>, channels: &Array2<Complex64>) -> io::Result<()> {
    if positions.nrows() != channels.nrows() {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "positions and channels disagree on N"));
    }
    w.write_all(&DATASET_MAGIC)?;
    for d in [channels.nrows(), channels.ncols(), positions.ncols()] {
        write_u64(w, d as u64)?;
    }
    write_f64s(w, positions.iter())?;
    for c in channels.iter() {
        write_f64s(w, [&c.re, &c.im])?;
    }
    Ok(())
}

pub fn read_dataset(r: &mut impl Read) -> io::Result<DatasetFile> {
    read_magic(r, DATASET_MAGIC)?;
    let (n, m, p) = (read_u64(r)?, read_u64(r)?, read_u64(r)?);
    let positions = read_matrix(r, n, p)?;
    let raw = read_f64s(r, product(&[n, m, 2])?)?;
    let channels: Vec<Complex64> = raw.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
    Ok(DatasetFile {
        positions,
        channels: Array2::from_shape_vec((n as usize, m as usize), channels).map_err(shape_error)?,
    })
}

fn shape_error(e: ndarray::ShapeError) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, e.to_string())
}

fn read_matrix(r: &mut impl Read, rows: u64, cols: u64) -> io::Result<Array2<f64>> {
    let data = read_f64s(r, product(&[rows, cols])?)?;
    // `product` succeeded, so both sizes fit in usize.
    Array2::from_shape_vec((rows as usize, cols as usize), data).map_err(shape_error)
}

pub fn write_model(w: &mut impl Write, model: &Model) -> io::Result<()> {
    w.write_all(&MODEL_MAGIC)?;
    match model {
        Model::Hybrid(p) => {
            write_u64(w, KIND_HYBRID)?;
            for d in [p.m(), p.n_init(), p.d_out(), p.k] {
                write_u64(w, d as u64)?;
            }
            for t in [&p.d_re, &p.d_im, &p.z] {
                write_f64s(w, t.iter())?;
            }
        }
        Model::Mlp(p) => {
            write_u64(w, KIND_MLP)?;
            write_u64(w, p.layers.len() as u64)?;
            for l in &p.layers {
                write_u64(w, l.nrows() as u64)?;
                write_u64(w, l.ncols() as u64)?;
                write_f64s(w, l.iter())?;
            }
        }
    }
    Ok(())
}

pub fn read_model(r: &mut impl Read) -> io::Result<Model> {
    read_magic(r, MODEL_MAGIC)?;
    let invalid = |msg: String| io::Error::new(io::ErrorKind::InvalidData, msg);
    match read_u64(r)? {
        KIND_HYBRID => {
            let (m, n_init, d_out, k) = (read_u64(r)?, read_u64(r)?, read_u64(r)?, read_u64(r)?);
            let d_re = read_matrix(r, m, n_init)?;
            let d_im = read_matrix(r, m, n_init)?;
            let z = read_matrix(r, d_out, n_init)?;
            EncoderParams::new(d_re, d_im, z, k as usize)
                .map(Model::Hybrid)
                .map_err(|e| invalid(e.to_string()))
        }
        KIND_MLP => {
            let count = read_u64(r)?;
            let mut layers = Vec::new();
            for _ in 0..count {
                let (rows, cols) = (read_u64(r)?, read_u64(r)?);
                layers.push(read_matrix(r, rows, cols)?);
            }
            MlpParams::from_layers(layers)
                .map(Model::Mlp)
                .map_err(|e| invalid(e.to_string()))
        }
        kind => Err(invalid(format!("unknown model kind {kind}"))),
    }
}

fn malformed(path: &Path, what: &'static str, e: io::Error) -> CliError {
    match e.kind() {
        io::ErrorKind::InvalidData | io::ErrorKind::UnexpectedEof => CliError::Format {
            path: path.to_path_buf(),
            what,
            reason: e.to_string(),
        },
        _ => CliError::io(path, e),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::io(path, e))
}

pub fn save_dataset(path: &Path, cs: &ChannelSet) -> Result<()> {
    let mut w = create(path)?;
    write_dataset(&mut w, &cs.positions, &cs.channels)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(path, e))
}

pub fn load_dataset(path: &Path) -> Result<DatasetFile> {
    read_dataset(&mut open(path)?).map_err(|e| malformed(path, "dataset", e))
}

pub fn save_model(path: &Path, model: &Model) -> Result<()> {
    let mut w = create(path)?;
    write_model(&mut w, model)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(path, e))
}

pub fn load_model(path: &Path) -> Result<Model> {
    read_model(&mut open(path)?).map_err(|e| malformed(path, "model", e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// `epoch,mean_loss`, epochs numbered from 1.
pub fn loss_csv(epoch_losses: &[f64]) -> String {
    let mut out = String::from("epoch,mean_loss\n");
    for (e, l) in epoch_losses.iter().enumerate() {
        writeln!(out, "{},{}", e + 1, l).unwrap();
    }
    out
}

pub const METRICS_HEADER: &str = "K,K_frac,trustworthiness,continuity";

pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut out = format!("{METRICS_HEADER}\n");
    for r in rows {
        writeln!(out, "{},{},{},{}", r.k, r.k_frac, r.trustworthiness, r.continuity).unwrap();
    }
    out
}

/// One chart point with the sample it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartPoint {
    pub index: usize,
    pub chart: Vec<f64>,
    pub truth: [f64; 2],
}

/// `index,chart_x,chart_y,true_x,true_y`; charts with more than two
/// coordinates get extra `chart_<i>` columns.
pub fn chart_csv(points: &[ChartPoint]) -> String {
    let dim = points.first().map_or(2, |p| p.chart.len());
    let mut out = String::from("index");
    for c in 0..dim {
        match c {
            0 => out.push_str(",chart_x"),
            1 => out.push_str(",chart_y"),
            _ => write!(out, ",chart_{c}").unwrap(),
        }
    }
    out.push_str(",true_x,true_y\n");
    for p in points {
        write!(out, "{}", p.index).unwrap();
        for v in &p.chart {
            write!(out, ",{v}").unwrap();
        }
        writeln!(out, ",{},{}", p.truth[0], p.truth[1]).unwrap();
    }
    out
}
