//! Parametric dynamic phantom: moving ellipses, a synthetic respiratory
//! navigator and smooth complex coil sensitivities.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{normalized_coord, pixel_coord, ComplexImage};

/// One ellipse of the phantom. Positions and axes are in normalized image
/// units; `kappa` is the vertical displacement per unit navigator value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ellipse {
    pub cx: f64,
    pub cy: f64,
    pub a: f64,
    pub b: f64,
    #[serde(default)]
    pub angle: f64,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
    #[serde(default)]
    pub kappa: f64,
}

impl Ellipse {
    pub fn amplitude(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.b > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "ellipse semi-axes must be positive, got ({}, {})",
                self.a, self.b
            )));
        }
        if !(self.amplitude().norm() <= 10.0) {
            return Err(Error::InvalidArgument(format!(
                "ellipse amplitude |{}| exceeds 10",
                self.amplitude()
            )));
        }
        let finite = [self.cx, self.cy, self.angle, self.kappa]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("non-finite ellipse parameter".into()));
        }
        Ok(())
    }

    /// Inside test at normalized position `(x, y)` for navigator value `t`.
    pub fn contains(&self, x: f64, y: f64, t: f64) -> bool {
        let dx = x - self.cx;
        let dy = y - (self.cy + self.kappa * t);
        let (s, c) = self.angle.sin_cos();
        let u = c * dx + s * dy;
        let v = -s * dx + c * dy;
        (u / self.a).powi(2) + (v / self.b).powi(2) <= 1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicPhantom {
    ellipses: Vec<Ellipse>,
    nx: usize,
    ny: usize,
}

impl DynamicPhantom {
    pub fn new(ellipses: Vec<Ellipse>, nx: usize, ny: usize) -> Result<Self> {
        for n in [nx, ny] {
            if n < 8 || n % 2 != 0 {
                return Err(Error::InvalidArgument(format!(
                    "grid dimensions must be even and >= 8, got {nx}x{ny}"
                )));
            }
        }
        for e in &ellipses {
            e.validate()?;
        }
        Ok(Self { ellipses, nx, ny })
    }

    /// Abdomen-like scene: static body outline, a liver-like region and a
    /// few structures that move with the navigator.
    pub fn abdominal(nx: usize, ny: usize) -> Result<Self> {
        Self::new(default_ellipses(), nx, ny)
    }

    pub fn ellipses(&self) -> &[Ellipse] {
        &self.ellipses
    }

    pub fn grid(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    /// Image at navigator value `t`: each pixel is the sum of the amplitudes
    /// of all ellipses covering its center.
    pub fn render_frame(&self, t: f64) -> ComplexImage {
        let mut img = ComplexImage::zeros(self.nx, self.ny);
        for ix in 0..self.nx {
            let x = normalized_coord(ix, self.nx);
            for iy in 0..self.ny {
                let y = normalized_coord(iy, self.ny);
                let v: Complex64 = self
                    .ellipses
                    .iter()
                    .filter(|e| e.contains(x, y, t))
                    .map(Ellipse::amplitude)
                    .sum();
                img.set(ix, iy, v);
            }
        }
        img
    }
}

pub fn default_ellipses() -> Vec<Ellipse> {
    let e = |cx, cy, a, b, angle, re, im, kappa| Ellipse {
        cx,
        cy,
        a,
        b,
        angle,
        re,
        im,
        kappa,
    };
    vec![
        // body
        e(0.0, 0.0, 0.42, 0.34, 0.0, 0.6, 0.1, 0.0),
        // liver, moves with breathing
        e(-0.08, -0.12, 0.22, 0.16, 0.3, 0.5, -0.2, 0.16),
        // kidney-like structures
        e(0.2, 0.1, 0.07, 0.05, -0.4, 0.7, 0.3, 0.06),
        e(-0.22, 0.14, 0.06, 0.05, 0.5, 0.4, 0.4, 0.06),
        // vessel inside the liver
        e(-0.05, -0.1, 0.03, 0.03, 0.0, 0.6, 0.0, 0.16),
        // spine, static
        e(0.0, 0.26, 0.05, 0.05, 0.0, -0.3, 0.2, 0.0),
    ]
}

/// Respiratory surrogate sampled once per spoke.
#[derive(Debug, Clone, PartialEq)]
pub struct Navigator {
    /// Acquisition time of each spoke, in spoke units.
    pub times: Vec<f64>,
    /// Navigator value of each spoke, in `[0, 0.5]`.
    pub values: Vec<f64>,
}

impl Navigator {
    pub fn constant(n_spokes: usize, value: f64) -> Self {
        Self {
            times: (0..n_spokes).map(|i| i as f64).collect(),
            values: vec![value; n_spokes],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `t_i = 0.25·(1 − cos(2π·i/period))`; spokes are acquired at uniformly
/// increasing times. There is no drift, so drift correction is the identity.
pub fn navigator_signal(n_spokes: usize, period: f64) -> Result<Navigator> {
    if n_spokes < 1 || !(period >= 2.0) {
        return Err(Error::InvalidArgument(format!(
            "navigator needs n_spokes >= 1 and period >= 2, got {n_spokes}, {period}"
        )));
    }
    let times: Vec<f64> = (0..n_spokes).map(|i| i as f64).collect();
    let values = times
        .iter()
        .map(|&i| (0.25 * (1.0 - (2.0 * PI * i / period).cos())).clamp(0.0, 0.5))
        .collect();
    Ok(Navigator { times, values })
}

/// Construction parameters for [`coil_maps`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoilMapParams {
    /// Radius of the circle carrying the coil centers.
    pub radius: f64,
    /// Standard deviation of the Gaussian magnitude.
    pub width: f64,
    /// Phase-ramp magnitude in cycles per field of view (at most 2).
    pub ramp: f64,
}

impl Default for CoilMapParams {
    fn default() -> Self {
        Self {
            radius: 0.4,
            width: 0.3,
            ramp: 1.0,
        }
    }
}

/// Complex coil sensitivities, stored coil-major `(c, ix, iy)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoilMaps {
    n_coils: usize,
    nx: usize,
    ny: usize,
    data: Vec<Complex64>,
}

impl CoilMaps {
    pub fn new(n_coils: usize, nx: usize, ny: usize, data: Vec<Complex64>) -> Result<Self> {
        if n_coils == 0 || n_coils * nx * ny != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "{n_coils} coil maps of {nx}x{ny} from {} values",
                data.len()
            )));
        }
        Ok(Self {
            n_coils,
            nx,
            ny,
            data,
        })
    }

    /// Pure phase ramps: coil `c` sees `exp(i2π·c·(sx·x/nx + sy·y/ny))`, so
    /// its k-space is the first coil's shifted by `c·(sx/nx, sy/ny)`.
    pub fn phase_ramps(n_coils: usize, nx: usize, ny: usize, step: (i32, i32)) -> Result<Self> {
        let mut data = Vec::with_capacity(n_coils * nx * ny);
        for c in 0..n_coils {
            for ix in 0..nx {
                for iy in 0..ny {
                    let phase = 2.0
                        * PI
                        * c as f64
                        * (step.0 as f64 * pixel_coord(ix, nx) / nx as f64
                            + step.1 as f64 * pixel_coord(iy, ny) / ny as f64);
                    data.push(Complex64::from_polar(1.0, phase));
                }
            }
        }
        Self::new(n_coils, nx, ny, data)
    }

    pub fn n_coils(&self) -> usize {
        self.n_coils
    }

    pub fn grid(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn coil(&self, c: usize) -> &[Complex64] {
        let n = self.nx * self.ny;
        &self.data[c * n..(c + 1) * n]
    }

    /// `Σ_c |s_c|²` per pixel.
    pub fn sum_of_squares(&self) -> Vec<f64> {
        let n = self.nx * self.ny;
        (0..n)
            .map(|p| (0..self.n_coils).map(|c| self.data[c * n + p].norm_sqr()).sum())
            .collect()
    }

    /// Coil image `s_c · x`.
    pub fn apply(&self, c: usize, img: &ComplexImage) -> Result<ComplexImage> {
        if img.dims() != (self.nx, self.ny) {
            return Err(Error::DimensionMismatch(format!(
                "image {:?} vs maps {:?}",
                img.dims(),
                (self.nx, self.ny)
            )));
        }
        let data = self.coil(c).iter().zip(img.data()).map(|(s, x)| s * x).collect();
        ComplexImage::new(self.nx, self.ny, data)
    }
}

pub fn coil_maps(n_coils: usize, grid: (usize, usize)) -> Result<CoilMaps> {
    coil_maps_with(n_coils, grid, CoilMapParams::default())
}

/// Gaussian-magnitude coils centered on a circle with linear phase ramps.
pub fn coil_maps_with(n_coils: usize, grid: (usize, usize), params: CoilMapParams) -> Result<CoilMaps> {
    if n_coils < 1 {
        return Err(Error::InvalidArgument("need at least one coil".into()));
    }
    if !(params.ramp.abs() <= 2.0) || !(params.width > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "coil ramp must be <= 2 cycles/FOV and width > 0, got {params:?}"
        )));
    }
    let (nx, ny) = grid;
    let mut data = Vec::with_capacity(n_coils * nx * ny);
    for c in 0..n_coils {
        let phi = 2.0 * PI * c as f64 / n_coils as f64;
        let (cx, cy) = (params.radius * phi.cos(), params.radius * phi.sin());
        // Ramp direction rotates with the coil.
        let (u, v) = (params.ramp * (phi + 0.5).cos(), params.ramp * (phi + 0.5).sin());
        for ix in 0..nx {
            let x = normalized_coord(ix, nx);
            for iy in 0..ny {
                let y = normalized_coord(iy, ny);
                let d2 = (x - cx).powi(2) + (y - cy).powi(2);
                let mag = (-d2 / (2.0 * params.width * params.width)).exp();
                data.push(Complex64::from_polar(mag, 2.0 * PI * (u * x + v * y)));
            }
        }
    }
    CoilMaps::new(n_coils, nx, ny, data)
}
