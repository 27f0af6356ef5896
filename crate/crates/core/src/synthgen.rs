//! Geometric multipath channel synthesis along a pedestrian trajectory.
//!
//! Channels follow a deterministic line-of-sight plus single-bounce model,
//! so `h` is a smooth function of the transmitter position. The base
//! station carries a uniform planar array lying in the vertical x–z plane
//! (broadside +y) centred on `bs_position`. Antenna `n = row * n_cols + col`
//! sits at offset `((col - (n_cols-1)/2) δ, 0, (row - (n_rows-1)/2) δ)`.
//! Channel vectors are flattened antenna-major: entry `n * S + s`.

use ndarray::{Array2, ArrayView1};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioConfig {
    pub n_rows: usize,
    pub n_cols: usize,
    pub n_subcarriers: usize,
    /// Carrier frequency in Hz.
    pub f_c: f64,
    /// Occupied bandwidth in Hz; subcarriers span it inclusively.
    pub bandwidth: f64,
    /// Element spacing in meters; half a carrier wavelength when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub antenna_spacing: Option<f64>,
    pub bs_position: [f64; 3],
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            n_rows: 8,
            n_cols: 8,
            n_subcarriers: 16,
            f_c: 3.5e9,
            bandwidth: 20e6,
            antenna_spacing: None,
            bs_position: [0.0, 0.0, 10.0],
        }
    }
}

impl RadioConfig {
    pub fn n_antennas(&self) -> usize {
        self.n_rows * self.n_cols
    }

    /// Channel dimension `M = N_r * S`.
    pub fn m(&self) -> usize {
        self.n_antennas() * self.n_subcarriers
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.f_c
    }

    pub fn spacing(&self) -> f64 {
        self.antenna_spacing.unwrap_or_else(|| self.wavelength() / 2.0)
    }

    pub fn subcarrier_frequency(&self, s: usize) -> f64 {
        if self.n_subcarriers == 1 {
            return self.f_c;
        }
        self.f_c - self.bandwidth / 2.0
            + s as f64 * self.bandwidth / (self.n_subcarriers - 1) as f64
    }

    /// Antenna offset from the array centre.
    pub fn antenna_offset(&self, n: usize) -> [f64; 3] {
        let (row, col) = (n / self.n_cols, n % self.n_cols);
        let delta = self.spacing();
        [
            (col as f64 - (self.n_cols as f64 - 1.0) / 2.0) * delta,
            0.0,
            (row as f64 - (self.n_rows as f64 - 1.0) / 2.0) * delta,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if self.m() == 0 {
            return Err(Error::InvalidConfig(
                "radio needs at least one antenna and one subcarrier".into(),
            ));
        }
        if !(self.f_c > 0.0) || !(self.bandwidth > 0.0) {
            return Err(Error::InvalidConfig(
                "carrier frequency and bandwidth must be positive".into(),
            ));
        }
        if let Some(d) = self.antenna_spacing {
            if !(d > 0.0) {
                return Err(Error::InvalidConfig("antenna spacing must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryConfig {
    /// Piecewise-linear path, meters.
    pub waypoints: Vec<[f64; 2]>,
    /// Walking speed, m/s.
    pub speed: f64,
    /// Samples per second.
    pub sample_rate: f64,
    /// Std of the perpendicular position noise, meters.
    pub jitter_sigma: f64,
    pub seed: u64,
}

impl TrajectoryConfig {
    pub fn validate(&self) -> Result<()> {
        if self.waypoints.len() < 2 {
            return Err(Error::InvalidConfig("trajectory needs at least 2 waypoints".into()));
        }
        if !(self.speed > 0.0) || !(self.sample_rate > 0.0) {
            return Err(Error::InvalidConfig("speed and sample rate must be positive".into()));
        }
        if !(self.jitter_sigma >= 0.0) {
            return Err(Error::InvalidConfig("jitter sigma must be non-negative".into()));
        }
        Ok(())
    }

    pub fn path_length(&self) -> f64 {
        self.waypoints
            .windows(2)
            .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
            .sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScattererSet {
    pub points: Vec<[f64; 3]>,
    /// Reflection attenuation per scatterer, in (0, 1].
    pub gains: Vec<f64>,
}

impl ScattererSet {
    pub fn validate(&self) -> Result<()> {
        if self.points.len() != self.gains.len() {
            return Err(Error::InvalidConfig(format!(
                "{} scatterer points but {} gains",
                self.points.len(),
                self.gains.len()
            )));
        }
        if let Some(g) = self.gains.iter().find(|g| !(**g > 0.0 && **g <= 1.0)) {
            return Err(Error::InvalidConfig(format!("scatterer gain {g} outside (0, 1]")));
        }
        Ok(())
    }
}

/// Channel vectors in temporal order with their ground-truth positions.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// `N x M`, row `i` is `h_i`.
    pub channels: Array2<Complex64>,
    /// `N x P` ground-truth positions.
    pub positions: Array2<f64>,
    pub radio: RadioConfig,
    pub sample_rate: f64,
}

impl ChannelSet {
    pub fn len(&self) -> usize {
        self.channels.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.channels.ncols()
    }

    pub fn channel(&self, i: usize) -> ArrayView1<'_, Complex64> {
        self.channels.row(i)
    }
}

/// Sample positions along the path every `speed / sample_rate` meters of
/// arc length, each pushed sideways by Gaussian jitter.
pub fn generate_trajectory(cfg: &TrajectoryConfig) -> Result<Vec<[f64; 2]>> {
    cfg.validate()?;
    let seg_len: Vec<f64> = cfg
        .waypoints
        .windows(2)
        .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
        .collect();
    let total: f64 = seg_len.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegeneratePath);
    }
    let step = cfg.speed / cfg.sample_rate;
    // Tolerance keeps exact multiples of the step (e.g. 14 m at 0.2 m) from
    // losing their final sample to rounding.
    let count = (total * cfg.sample_rate / cfg.speed + 1e-9).floor() as usize + 1;

    let mut rng = SplitMix64::new(cfg.seed);
    let mut out = Vec::with_capacity(count);
    let mut seg = 0;
    let mut seg_start = 0.0;
    for i in 0..count {
        let t = (i as f64 * step).min(total);
        while seg + 1 < seg_len.len() && (seg_len[seg] == 0.0 || t > seg_start + seg_len[seg]) {
            seg_start += seg_len[seg];
            seg += 1;
        }
        let (a, b) = (cfg.waypoints[seg], cfg.waypoints[seg + 1]);
        let len = seg_len[seg];
        let (ux, uy) = if len > 0.0 {
            ((b[0] - a[0]) / len, (b[1] - a[1]) / len)
        } else {
            (0.0, 0.0)
        };
        let along = (t - seg_start).clamp(0.0, len);
        let offset = rng.normal() * cfg.jitter_sigma;
        out.push([
            a[0] + ux * along - uy * offset,
            a[1] + uy * along + ux * offset,
        ]);
    }
    Ok(out)
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

struct Path {
    gain: f64,
    delay: f64,
    arrival: [f64; 3],
}

fn propagation_paths(
    position: [f64; 3],
    radio: &RadioConfig,
    scatterers: &ScattererSet,
) -> Result<Vec<Path>> {
    let bs = radio.bs_position;
    let los = sub(position, bs);
    let los_len = norm(los);
    if los_len == 0.0 {
        return Err(Error::CoincidentGeometry("transmitter at the base station".into()));
    }
    let mut paths = Vec::with_capacity(1 + scatterers.points.len());
    paths.push(Path {
        gain: 1.0 / los_len,
        delay: los_len / SPEED_OF_LIGHT,
        arrival: los.map(|c| c / los_len),
    });
    for (&p, &att) in scatterers.points.iter().zip(&scatterers.gains) {
        let first = norm(sub(position, p));
        let to_bs = sub(p, bs);
        let second = norm(to_bs);
        if first == 0.0 || second == 0.0 {
            return Err(Error::CoincidentGeometry("scatterer coincides with an endpoint".into()));
        }
        let len = first + second;
        paths.push(Path {
            gain: att / len,
            delay: len / SPEED_OF_LIGHT,
            arrival: to_bs.map(|c| c / second),
        });
    }
    Ok(paths)
}

/// Uplink channel seen by the array from a transmitter at `position`.
pub fn channel_vector(
    position: [f64; 3],
    radio: &RadioConfig,
    scatterers: &ScattererSet,
) -> Result<Vec<Complex64>> {
    let paths = propagation_paths(position, radio, scatterers)?;
    Ok(superpose(&paths, radio))
}

fn superpose(paths: &[Path], radio: &RadioConfig) -> Vec<Complex64> {
    let n_ant = radio.n_antennas();
    let n_sub = radio.n_subcarriers;
    let wavenumber = 2.0 * std::f64::consts::PI / radio.wavelength();
    let offsets: Vec<[f64; 3]> = (0..n_ant).map(|n| radio.antenna_offset(n)).collect();
    let freqs: Vec<f64> = (0..n_sub).map(|s| radio.subcarrier_frequency(s)).collect();

    let mut h = vec![Complex64::new(0.0, 0.0); n_ant * n_sub];
    let mut spectral = vec![Complex64::new(0.0, 0.0); n_sub];
    for path in paths {
        for (s, f) in freqs.iter().enumerate() {
            spectral[s] = Complex64::from_polar(
                path.gain,
                -2.0 * std::f64::consts::PI * f * path.delay,
            );
        }
        for (n, r) in offsets.iter().enumerate() {
            let u = path.arrival;
            let steer =
                Complex64::from_polar(1.0, wavenumber * (u[0] * r[0] + u[1] * r[1] + u[2] * r[2]));
            for (hs, sp) in h[n * n_sub..(n + 1) * n_sub].iter_mut().zip(&spectral) {
                *hs += steer * sp;
            }
        }
    }
    h
}

/// Channels for every track position, in track order. 2-D positions lie on
/// the `z = 0` plane.
pub fn synthesize_channels(
    track: &[[f64; 2]],
    radio: &RadioConfig,
    scatterers: &ScattererSet,
    sample_rate: f64,
) -> Result<ChannelSet> {
    radio.validate()?;
    scatterers.validate()?;
    if track.is_empty() {
        return Err(Error::InvalidConfig("empty track".into()));
    }
    let m = radio.m();
    let mut channels = Array2::zeros((track.len(), m));
    let mut positions = Array2::zeros((track.len(), 2));
    for (i, p) in track.iter().enumerate() {
        let h = channel_vector([p[0], p[1], 0.0], radio, scatterers).map_err(|e| Error::at(i, e))?;
        if h.iter().all(|c| c.norm_sqr() == 0.0) {
            return Err(Error::at(i, Error::ZeroNorm));
        }
        channels.row_mut(i).assign(&ArrayView1::from(&h));
        positions[[i, 0]] = p[0];
        positions[[i, 1]] = p[1];
    }
    Ok(ChannelSet {
        channels,
        positions,
        radio: radio.clone(),
        sample_rate,
    })
}

/// Trajectory, radio and scatterers describing one synthetic measurement campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub trajectory: TrajectoryConfig,
    pub radio: RadioConfig,
    pub scatterers: ScattererSet,
}

/// Number of samples in the full-size default campaign.
pub const DEFAULT_SAMPLES: usize = 5910;

impl Scenario {
    /// Rectangular pedestrian loop sized to yield `n` samples at 1.4 m/s and
    /// 7 samples/s, walked counterclockwise from the lower-right corner. The
    /// 8x8 array sits 10 m up, south of the loop; six scatterers at 5 m height
    /// sit outside the loop, 100 m away at full size.
    pub fn default_with_samples(n: usize) -> Self {
        let speed = 1.4;
        let sample_rate = 7.0;
        let step = speed / sample_rate;
        // Half a step of slack so rounding cannot drop the last sample.
        let length = (n.max(2) - 1) as f64 * step + step / 2.0;
        let scale = length / 1181.9;
        let (w, h) = (400.0 * scale, 190.95 * scale);
        let waypoints = vec![[w, 0.0], [w, h], [0.0, h], [0.0, 0.0], [w, 0.0]];
        let off = 100.0 * scale;
        let points = vec![
            [0.25 * w, -off, 5.0],
            [0.75 * w, -off, 5.0],
            [w + off, 0.5 * h, 5.0],
            [0.75 * w, h + off, 5.0],
            [0.25 * w, h + off, 5.0],
            [-off, 0.5 * h, 5.0],
        ];
        Scenario {
            trajectory: TrajectoryConfig {
                waypoints,
                speed,
                sample_rate,
                jitter_sigma: 0.05,
                seed: 0x5EED_0001,
            },
            radio: RadioConfig {
                bs_position: [0.5 * w, -40.0 * scale, 10.0],
                ..RadioConfig::default()
            },
            scatterers: ScattererSet {
                gains: vec![0.5; points.len()],
                points,
            },
        }
    }

    pub fn generate(&self) -> Result<ChannelSet> {
        let track = generate_trajectory(&self.trajectory)?;
        synthesize_channels(&track, &self.radio, &self.scatterers, self.trajectory.sample_rate)
    }
}

impl Default for Scenario {
    fn default() -> Self {
        Self::default_with_samples(DEFAULT_SAMPLES)
    }
}
