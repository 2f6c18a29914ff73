use std::f64::consts::PI;

use crate::error::{Error, Result};

/// 2-D radial trajectory in normalized k-space units.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    n_spokes: usize,
    n_fe: usize,
    angles: Vec<f64>,
    coords: Vec<[f64; 2]>,
}

impl Trajectory {
    pub fn n_spokes(&self) -> usize {
        self.n_spokes
    }

    pub fn n_fe(&self) -> usize {
        self.n_fe
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// All samples, spoke-major.
    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn spoke(&self, n: usize) -> &[[f64; 2]] {
        &self.coords[n * self.n_fe..(n + 1) * self.n_fe]
    }
}

/// Golden-angle increment `π/φ` with `φ = (1 + √5)/2`.
pub fn golden_angle() -> f64 {
    PI / ((1.0 + 5f64.sqrt()) / 2.0)
}

/// Spoke `n` at `θ_n = mod(n·π/φ, π)`; readout sample `m` at radius
/// `(m − N_FE/2)/N_FE` along `(cos θ_n, sin θ_n)`.
pub fn golden_angle_radial(n_spokes: usize, n_fe: usize) -> Result<Trajectory> {
    if n_fe < 8 || !n_fe.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "readout length must be even and >= 8, got {n_fe}"
        )));
    }
    let ga = golden_angle();
    let angles: Vec<f64> = (0..n_spokes).map(|n| (n as f64 * ga) % PI).collect();
    let mut coords = Vec::with_capacity(n_spokes * n_fe);
    for &theta in &angles {
        let (s, c) = theta.sin_cos();
        for m in 0..n_fe {
            let r = (m as f64 - (n_fe / 2) as f64) / n_fe as f64;
            coords.push([r * c, r * s]);
        }
    }
    Ok(Trajectory {
        n_spokes,
        n_fe,
        angles,
        coords,
    })
}
