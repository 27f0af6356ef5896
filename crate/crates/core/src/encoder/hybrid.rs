//! Sparse correlation encoder.
//!
//! `a = D^H h`, `b = |a|`, `c = HT_k(b)`, `d = c / ‖c‖₁`, `z = Z d`: the
//! output is a convex combination of the chart anchors whose dictionary
//! atoms correlate best with the input.

use ndarray::Array2;
use num_complex::Complex64;

use super::Encoder;
use crate::error::{Error, Result};
use crate::isomap::isomap;
use crate::metricspace::distance_matrix;
use crate::rng::SplitMix64;
use crate::synthgen::ChannelSet;

/// Trainable dictionary and chart anchors.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    /// Real part of the `M x N_init` dictionary.
    pub d_re: Array2<f64>,
    /// Imaginary part of the dictionary.
    pub d_im: Array2<f64>,
    /// `D_out x N_init` chart anchors.
    pub z: Array2<f64>,
    /// Number of atoms kept by hard thresholding.
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    pub a_re: Vec<f64>,
    pub a_im: Vec<f64>,
    pub b: Vec<f64>,
    /// Thresholded atoms with nonzero correlation, ascending.
    pub kept: Vec<usize>,
    /// L1 normalizer `Σ_{kept} b`.
    pub s: f64,
    /// Normalized weights (zero outside `kept`).
    pub d: Vec<f64>,
    pub z_out: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridGrads {
    pub d_re: Array2<f64>,
    pub d_im: Array2<f64>,
    pub z: Array2<f64>,
}

/// Keeps the `k` largest entries (lower index wins ties) and zeroes the rest.
/// Returns the kept indices in ascending order.
pub fn hard_threshold(v: &[f64], k: usize) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&i, &j| v[j].total_cmp(&v[i]).then(i.cmp(&j)));
    let mut kept: Vec<usize> = order.into_iter().take(k).collect();
    kept.sort_unstable();
    let mut out = vec![0.0; v.len()];
    for &i in &kept {
        out[i] = v[i];
    }
    (out, kept)
}

impl EncoderParams {
    pub fn new(d_re: Array2<f64>, d_im: Array2<f64>, z: Array2<f64>, k: usize) -> Result<Self> {
        let (m, n) = d_re.dim();
        if d_im.dim() != (m, n) || z.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "dictionary {:?}/{:?} vs anchors {:?}",
                d_re.dim(),
                d_im.dim(),
                z.dim()
            )));
        }
        if k == 0 || k > n {
            return Err(Error::OutOfRange(format!("k = {k} with {n} atoms")));
        }
        Ok(Self {
            d_re: d_re.as_standard_layout().into_owned(),
            d_im: d_im.as_standard_layout().into_owned(),
            z: z.as_standard_layout().into_owned(),
            k,
        })
    }

    pub fn m(&self) -> usize {
        self.d_re.nrows()
    }

    pub fn n_init(&self) -> usize {
        self.d_re.ncols()
    }

    pub fn d_out(&self) -> usize {
        self.z.nrows()
    }

    pub fn forward(&self, h: &[Complex64]) -> Result<(Vec<f64>, ForwardCache)> {
        if h.len() != self.m() {
            return Err(Error::DimensionMismatch(format!(
                "input length {} for a {}-dimensional encoder",
                h.len(),
                self.m()
            )));
        }
        let n = self.n_init();
        let (mut a_re, mut a_im) = (vec![0.0; n], vec![0.0; n]);
        let dr = self.d_re.as_slice().expect("standard layout");
        let di = self.d_im.as_slice().expect("standard layout");
        for (mi, x) in h.iter().enumerate() {
            let row_re = &dr[mi * n..(mi + 1) * n];
            let row_im = &di[mi * n..(mi + 1) * n];
            for j in 0..n {
                a_re[j] += row_re[j] * x.re + row_im[j] * x.im;
                a_im[j] += row_re[j] * x.im - row_im[j] * x.re;
            }
        }
        let b: Vec<f64> = a_re.iter().zip(&a_im).map(|(r, i)| r.hypot(*i)).collect();
        let (c, kept) = hard_threshold(&b, self.k);
        let kept: Vec<usize> = kept.into_iter().filter(|&i| c[i] > 0.0).collect();
        let s: f64 = kept.iter().map(|&i| c[i]).sum();
        if !(s > 0.0) {
            return Err(Error::DegenerateCorrelation);
        }
        let mut d = vec![0.0; n];
        for &i in &kept {
            d[i] = c[i] / s;
        }
        let z_out: Vec<f64> = (0..self.d_out())
            .map(|r| kept.iter().map(|&i| self.z[[r, i]] * d[i]).sum())
            .collect();
        let cache = ForwardCache {
            a_re,
            a_im,
            b,
            kept,
            s,
            d,
            z_out: z_out.clone(),
        };
        Ok((z_out, cache))
    }

    pub fn zero_grads(&self) -> HybridGrads {
        HybridGrads {
            d_re: Array2::zeros(self.d_re.dim()),
            d_im: Array2::zeros(self.d_im.dim()),
            z: Array2::zeros(self.z.dim()),
        }
    }

    /// Gradient of `⟨gz, z⟩` through the cached forward pass.
    pub fn backward(&self, cache: &ForwardCache, h: &[Complex64], gz: &[f64]) -> HybridGrads {
        let mut grads = self.zero_grads();
        self.backward_into(cache, h, gz, &mut grads);
        grads
    }

    /// Adds the gradient of `⟨gz, z⟩` into `grads`.
    pub fn backward_into(
        &self,
        cache: &ForwardCache,
        h: &[Complex64],
        gz: &[f64],
        grads: &mut HybridGrads,
    ) {
        // z = Z d
        let gd: Vec<f64> = cache
            .kept
            .iter()
            .map(|&i| {
                let mut acc = 0.0;
                for (r, g) in gz.iter().enumerate() {
                    grads.z[[r, i]] += g * cache.d[i];
                    acc += self.z[[r, i]] * g;
                }
                acc
            })
            .collect();
        // d = c / s with s = Σ c over the kept set
        let mean: f64 = cache.kept.iter().zip(&gd).map(|(&i, g)| g * cache.d[i]).sum();
        for (&i, g) in cache.kept.iter().zip(&gd) {
            let gb = (g - mean) / cache.s;
            let b = cache.b[i];
            if b == 0.0 {
                continue;
            }
            let ga_re = gb * cache.a_re[i] / b;
            let ga_im = gb * cache.a_im[i] / b;
            if ga_re == 0.0 && ga_im == 0.0 {
                continue;
            }
            for (mi, x) in h.iter().enumerate() {
                grads.d_re[[mi, i]] += ga_re * x.re + ga_im * x.im;
                grads.d_im[[mi, i]] += ga_re * x.im - ga_im * x.re;
            }
        }
    }

    /// Dictionary from `n_init` channels drawn without replacement, anchors
    /// from their Isomap embedding under the channel pseudo-distance.
    pub fn init_smart(
        cs: &ChannelSet,
        n_init: usize,
        k_iso: usize,
        k: usize,
        d_out: usize,
        seed: u64,
    ) -> Result<Self> {
        if n_init == 0 || n_init > cs.len() {
            return Err(Error::OutOfRange(format!(
                "n_init = {n_init} with {} channels",
                cs.len()
            )));
        }
        let mut picks = SplitMix64::new(seed).sample_indices(cs.len(), n_init);
        picks.sort_unstable();
        Self::from_atoms(cs, &picks, k_iso, k, d_out)
    }

    /// Smart initialization on an explicit choice of dictionary samples.
    pub fn from_atoms(
        cs: &ChannelSet,
        picks: &[usize],
        k_iso: usize,
        k: usize,
        d_out: usize,
    ) -> Result<Self> {
        let m = cs.dim();
        let n_init = picks.len();
        let mut d_re = Array2::zeros((m, n_init));
        let mut d_im = Array2::zeros((m, n_init));
        let mut rows = Vec::with_capacity(n_init);
        for (col, &idx) in picks.iter().enumerate() {
            let h = cs.channel(idx);
            for (mi, x) in h.iter().enumerate() {
                d_re[[mi, col]] = x.re;
                d_im[[mi, col]] = x.im;
            }
            rows.push(h.to_vec());
        }
        let embedding = isomap(&distance_matrix(&rows)?, k_iso, d_out)?;
        Self::new(d_re, d_im, embedding.coords.t().to_owned(), k)
    }

    /// Xavier-uniform initialization. The dictionary is a correlation layer
    /// with `M` inputs and `N_init` outputs; the anchors map `N_init` inputs
    /// to `D_out` outputs. Draw order: `d_re`, `d_im`, then `z`, row-major.
    pub fn init_random(m: usize, n_init: usize, k: usize, d_out: usize, seed: u64) -> Result<Self> {
        if m == 0 || n_init == 0 || d_out == 0 {
            return Err(Error::OutOfRange("encoder dimensions must be positive".into()));
        }
        let mut rng = SplitMix64::new(seed);
        let dict_bound = (6.0 / (m + n_init) as f64).sqrt();
        let anchor_bound = (6.0 / (n_init + d_out) as f64).sqrt();
        let mut draw = |rows, cols, bound: f64| {
            Array2::from_shape_simple_fn((rows, cols), || rng.uniform_range(-bound, bound))
        };
        let d_re = draw(m, n_init, dict_bound);
        let d_im = draw(m, n_init, dict_bound);
        let z = draw(d_out, n_init, anchor_bound);
        Self::new(d_re, d_im, z, k)
    }

    pub fn grads_from_flat(&self, flat: &[Vec<f64>]) -> HybridGrads {
        let shape = |a: &Array2<f64>, v: &Vec<f64>| {
            Array2::from_shape_vec(a.dim(), v.clone()).expect("gradient shape")
        };
        HybridGrads {
            d_re: shape(&self.d_re, &flat[0]),
            d_im: shape(&self.d_im, &flat[1]),
            z: shape(&self.z, &flat[2]),
        }
    }
}

impl Encoder for EncoderParams {
    type Tape = Vec<Option<ForwardCache>>;

    fn input_dim(&self) -> usize {
        self.m()
    }

    fn output_dim(&self) -> usize {
        self.d_out()
    }

    fn chart(&self, h: &[Complex64]) -> Result<Vec<f64>> {
        self.forward(h).map(|(z, _)| z)
    }

    fn forward_batch(&self, inputs: &[&[Complex64]]) -> (Vec<Option<Vec<f64>>>, Self::Tape) {
        inputs
            .iter()
            .map(|h| match self.forward(h) {
                Ok((z, cache)) => (Some(z), Some(cache)),
                Err(_) => (None, None),
            })
            .unzip()
    }

    fn backward_batch(
        &self,
        tape: &Self::Tape,
        inputs: &[&[Complex64]],
        gz: &[Option<Vec<f64>>],
    ) -> Vec<Vec<f64>> {
        let mut grads = self.zero_grads();
        for ((cache, h), g) in tape.iter().zip(inputs).zip(gz) {
            if let (Some(cache), Some(g)) = (cache, g) {
                self.backward_into(cache, h, g, &mut grads);
            }
        }
        vec![
            grads.d_re.into_raw_vec_and_offset().0,
            grads.d_im.into_raw_vec_and_offset().0,
            grads.z.into_raw_vec_and_offset().0,
        ]
    }

    fn tensors(&self) -> Vec<&[f64]> {
        vec![
            self.d_re.as_slice().expect("standard layout"),
            self.d_im.as_slice().expect("standard layout"),
            self.z.as_slice().expect("standard layout"),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.d_re.as_slice_mut().expect("standard layout"),
            self.d_im.as_slice_mut().expect("standard layout"),
            self.z.as_slice_mut().expect("standard layout"),
        ]
    }
}
