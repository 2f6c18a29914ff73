use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex image on an `nx × ny` grid, row-major with `x` as the slow axis.
///
/// Pixel `(ix, iy)` sits at integer position `(ix − nx/2, iy − ny/2)` and at
/// normalized position `((ix − nx/2)/nx, (iy − ny/2)/ny)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexImage {
    nx: usize,
    ny: usize,
    data: Vec<Complex64>,
}

impl ComplexImage {
    pub fn new(nx: usize, ny: usize, data: Vec<Complex64>) -> Result<Self> {
        if nx * ny != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "{nx}x{ny} image from {} pixels",
                data.len()
            )));
        }
        Ok(Self { nx, ny, data })
    }

    pub fn zeros(nx: usize, ny: usize) -> Self {
        Self {
            nx,
            ny,
            data: vec![Complex64::new(0.0, 0.0); nx * ny],
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    #[inline]
    pub fn get(&self, ix: usize, iy: usize) -> Complex64 {
        self.data[ix * self.ny + iy]
    }

    #[inline]
    pub fn set(&mut self, ix: usize, iy: usize, v: Complex64) {
        self.data[ix * self.ny + iy] = v;
    }

    pub fn magnitude(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.norm()).collect()
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self {
            nx: self.nx,
            ny: self.ny,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }
}

/// Integer pixel coordinate of index `i` on an axis of length `n`.
#[inline]
pub fn pixel_coord(i: usize, n: usize) -> f64 {
    i as f64 - (n / 2) as f64
}

/// Normalized pixel-center position of index `i` on an axis of length `n`.
#[inline]
pub fn normalized_coord(i: usize, n: usize) -> f64 {
    pixel_coord(i, n) / n as f64
}
