use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::FeatureEncoding;
use crate::error::{Error, Result};
use crate::numcore::{RealTensor, Tape, Var};
use crate::scalar::Real;

/// Architecture hyperparameters of the coordinate network.
#[derive(Debug, Clone, PartialEq)]
pub struct SirenConfig {
    pub hidden: usize,
    pub layers: usize,
    pub omega0: f64,
    pub n_freqs: usize,
    pub sigma_k: f64,
    pub sigma_t: f64,
    pub seed: u64,
}

impl Default for SirenConfig {
    fn default() -> Self {
        Self {
            hidden: 512,
            layers: 4,
            omega0: 30.0,
            n_freqs: 128,
            sigma_k: 32.0,
            sigma_t: 4.0,
            seed: 0,
        }
    }
}

/// Sine-activated MLP mapping `(k_x, k_y, t)` to `N_c` complex coil values.
///
/// Parameters are stored as `[W₀, b₀, W₁, b₁, …]` with `Wₗ` of shape
/// `fan_in × fan_out`; hidden layers apply `sin(ω₀·(x·W + b))`, the last layer
/// is linear and its `2·N_c` outputs are read as interleaved complex pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct SirenModel<T> {
    encoding: FeatureEncoding,
    params: Vec<RealTensor<T>>,
    omega0: f64,
    n_coils: usize,
    seed: u64,
    /// Multiplies network outputs to recover physical k-space units.
    pub output_scale: f64,
}

impl<T: Real> SirenModel<T> {
    pub fn new(cfg: &SirenConfig, n_coils: usize) -> Result<Self> {
        if cfg.layers == 0 || cfg.hidden == 0 || n_coils == 0 {
            return Err(Error::InvalidArgument(format!(
                "network needs layers, width and coils >= 1, got {}, {}, {n_coils}",
                cfg.layers, cfg.hidden
            )));
        }
        let encoding = FeatureEncoding::new(cfg.n_freqs, cfg.sigma_k, cfg.sigma_t, cfg.seed)?;
        let mut dims = vec![encoding.n_features()];
        dims.extend(std::iter::repeat_n(cfg.hidden, cfg.layers));
        dims.push(2 * n_coils);
        let params = dims
            .windows(2)
            .flat_map(|w| [RealTensor::zeros(vec![w[0], w[1]]), RealTensor::zeros(vec![w[1]])])
            .collect();
        let mut model = Self {
            encoding,
            params,
            omega0: cfg.omega0,
            n_coils,
            seed: cfg.seed,
            output_scale: 1.0,
        };
        model.siren_init(cfg.seed, cfg.omega0)?;
        Ok(model)
    }

    /// Reassembles a model from stored parts.
    pub fn from_parts(
        encoding: FeatureEncoding,
        params: Vec<RealTensor<T>>,
        omega0: f64,
        n_coils: usize,
        seed: u64,
        output_scale: f64,
    ) -> Result<Self> {
        if params.len() < 4 || !params.len().is_multiple_of(2) {
            return Err(Error::ShapeMismatch(format!("{} parameter tensors", params.len())));
        }
        let mut fan_in = encoding.n_features();
        for pair in params.chunks_exact(2) {
            let (i, o) = pair[0].dims2()?;
            if i != fan_in || pair[1].len() != o {
                return Err(Error::ShapeMismatch(format!(
                    "layer {i}x{o} with bias {:?} after width {fan_in}",
                    pair[1].shape()
                )));
            }
            fan_in = o;
        }
        if fan_in != 2 * n_coils {
            return Err(Error::ShapeMismatch(format!("output width {fan_in} for {n_coils} coils")));
        }
        Ok(Self {
            encoding,
            params,
            omega0,
            n_coils,
            seed,
            output_scale,
        })
    }

    /// SIREN initialization: first layer `U(±1/fan_in)`, later layers
    /// `U(±√(6/fan_in)/ω₀)`; biases share their layer's bound.
    pub fn siren_init(&mut self, seed: u64, omega0: f64) -> Result<()> {
        if !(omega0 > 0.0) {
            return Err(Error::InvalidArgument(format!("omega0 must be > 0, got {omega0}")));
        }
        self.omega0 = omega0;
        self.seed = seed;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_1a7e);
        for (l, pair) in self.params.chunks_exact_mut(2).enumerate() {
            let fan_in = pair[0].shape()[0] as f64;
            let bound = if l == 0 { 1.0 / fan_in } else { (6.0 / fan_in).sqrt() / omega0 };
            for p in pair.iter_mut() {
                p.data_mut()
                    .iter_mut()
                    .for_each(|w| *w = T::lit(rng.gen_range(-bound..=bound)));
            }
        }
        Ok(())
    }

    pub fn encoding(&self) -> &FeatureEncoding {
        &self.encoding
    }

    pub fn params(&self) -> &[RealTensor<T>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [RealTensor<T>] {
        &mut self.params
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn n_coils(&self) -> usize {
        self.n_coils
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_layers(&self) -> usize {
        self.params.len() / 2
    }

    pub fn n_params(&self) -> usize {
        self.params.iter().map(RealTensor::len).sum()
    }

    /// Adds every parameter tensor as a differentiable leaf.
    pub fn register(&self, tape: &mut Tape<T>) -> Vec<Var> {
        self.params.iter().map(|p| tape.leaf(p.clone())).collect()
    }

    /// Adds every parameter tensor as a constant.
    pub fn register_frozen(&self, tape: &mut Tape<T>) -> Vec<Var> {
        self.params.iter().map(|p| tape.constant(p.clone())).collect()
    }

    /// Network output (`M × 2·N_c`, interleaved complex) on the tape.
    pub fn forward_tape(&self, tape: &mut Tape<T>, params: &[Var], coords: &[[f64; 3]]) -> Result<Var> {
        if params.len() != self.params.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} parameter handles for {} tensors",
                params.len(),
                self.params.len()
            )));
        }
        let omega = T::lit(self.omega0);
        let mut h = tape.constant(self.encoding.encode(coords));
        let n_layers = params.len() / 2;
        for (l, pair) in params.chunks_exact(2).enumerate() {
            let z = tape.matmul(h, pair[0])?;
            let z = tape.add_row(z, pair[1])?;
            h = if l + 1 < n_layers { tape.sin(z, omega) } else { z };
        }
        Ok(h)
    }

    /// Network output without gradient tracking, processed in chunks.
    pub fn forward(&self, coords: &[[f64; 3]]) -> Result<RealTensor<T>> {
        let width = 2 * self.n_coils;
        let mut out = Vec::with_capacity(coords.len() * width);
        for chunk in coords.chunks(4096) {
            let mut tape = Tape::new();
            let vars = self.register_frozen(&mut tape);
            let y = self.forward_tape(&mut tape, &vars, chunk)?;
            out.extend_from_slice(tape.value(y).data());
        }
        RealTensor::new(vec![coords.len(), width], out)
    }

    /// Complex coil values `M × N_c` in physical units (times `output_scale`).
    pub fn predict(&self, coords: &[[f64; 3]]) -> Result<Vec<Complex<f64>>> {
        let y = self.forward(coords)?;
        Ok(y.data()
            .chunks_exact(2)
            .map(|p| Complex::new(p[0].as_f64(), p[1].as_f64()) * self.output_scale)
            .collect())
    }
}
