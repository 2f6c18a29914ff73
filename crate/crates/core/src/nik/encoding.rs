use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::numcore::RealTensor;
use crate::scalar::Real;

/// Gaussian Fourier features `[sin(2π·k·Bᵀ), cos(2π·k·Bᵀ)]` of spatio-temporal
/// coordinates. `B` is drawn once with per-axis scales `(σ_k, σ_k, σ_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureEncoding {
    freqs: Vec<[f64; 3]>,
    sigma_k: f64,
    sigma_t: f64,
}

impl FeatureEncoding {
    pub fn new(n_freqs: usize, sigma_k: f64, sigma_t: f64, seed: u64) -> Result<Self> {
        if n_freqs == 0 || !(sigma_k >= 0.0) || !(sigma_t >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "encoding needs n_freqs >= 1 and non-negative scales, got {n_freqs}, {sigma_k}, {sigma_t}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let freqs = (0..n_freqs)
            .map(|_| {
                let z: [f64; 3] = [
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                ];
                [z[0] * sigma_k, z[1] * sigma_k, z[2] * sigma_t]
            })
            .collect();
        Ok(Self {
            freqs,
            sigma_k,
            sigma_t,
        })
    }

    /// Rebuilds an encoding from a stored frequency matrix.
    pub fn from_matrix(freqs: Vec<[f64; 3]>, sigma_k: f64, sigma_t: f64) -> Result<Self> {
        if freqs.is_empty() {
            return Err(Error::InvalidArgument("empty frequency matrix".into()));
        }
        Ok(Self {
            freqs,
            sigma_k,
            sigma_t,
        })
    }

    pub fn freqs(&self) -> &[[f64; 3]] {
        &self.freqs
    }

    pub fn sigmas(&self) -> (f64, f64) {
        (self.sigma_k, self.sigma_t)
    }

    pub fn n_features(&self) -> usize {
        2 * self.freqs.len()
    }

    /// `M × n_features` feature matrix, sines first.
    pub fn encode<T: Real>(&self, coords: &[[f64; 3]]) -> RealTensor<T> {
        let nf = self.freqs.len();
        let mut data = Vec::with_capacity(coords.len() * 2 * nf);
        let mut cosines = vec![T::zero(); nf];
        for c in coords {
            for (j, b) in self.freqs.iter().enumerate() {
                let phase = 2.0 * PI * (c[0] * b[0] + c[1] * b[1] + c[2] * b[2]);
                let (s, co) = phase.sin_cos();
                data.push(T::lit(s));
                cosines[j] = T::lit(co);
            }
            data.extend_from_slice(&cosines);
        }
        RealTensor::new(vec![coords.len(), 2 * nf], data).expect("consistent shape")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_maps_to_zero_sines_and_unit_cosines() {
        let enc = FeatureEncoding::new(16, 32.0, 4.0, 1).unwrap();
        let f = enc.encode::<f64>(&[[0.0, 0.0, 0.0]]);
        assert_eq!(f.shape(), &[1, 32]);
        assert!(f.data()[..16].iter().all(|&x| x == 0.0));
        assert!(f.data()[16..].iter().all(|&x| x == 1.0));
    }

    #[test]
    fn frozen_frequencies_give_identical_features() {
        let enc = FeatureEncoding::new(8, 10.0, 2.0, 5).unwrap();
        let c = [[0.1, -0.2, 0.3], [0.4, 0.0, 0.1]];
        assert_eq!(enc.encode::<f64>(&c), enc.encode::<f64>(&c));
        assert_eq!(enc, FeatureEncoding::new(8, 10.0, 2.0, 5).unwrap());
        assert_eq!(enc.n_features(), 16);
    }
}
