//! Centered 2-D DFT on the image grid. Index `m` corresponds to frequency
//! `(m − N/2)/N` and pixel `i` to position `i − N/2`, matching the NUDFT.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::image::ComplexImage;

fn transform(img: &ComplexImage, inverse: bool) -> ComplexImage {
    let (nx, ny) = img.dims();
    let mut planner = FftPlanner::<f64>::new();
    let plan = |n: usize, p: &mut FftPlanner<f64>| -> Arc<dyn Fft<f64>> {
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    };
    let (fx, fy) = (plan(nx, &mut planner), plan(ny, &mut planner));
    // ifftshift on the way in, fftshift on the way out; both are a roll by N/2
    // for even N
    let mut data = vec![Complex64::default(); nx * ny];
    for x in 0..nx {
        for y in 0..ny {
            data[((x + nx / 2) % nx) * ny + (y + ny / 2) % ny] = img.get(x, y);
        }
    }
    for row in data.chunks_exact_mut(ny) {
        fy.process(row);
    }
    let mut col = vec![Complex64::default(); nx];
    for y in 0..ny {
        for x in 0..nx {
            col[x] = data[x * ny + y];
        }
        fx.process(&mut col);
        for x in 0..nx {
            data[x * ny + y] = col[x];
        }
    }
    let scale = if inverse { 1.0 / (nx * ny) as f64 } else { 1.0 };
    let mut out = ComplexImage::zeros(nx, ny);
    for x in 0..nx {
        for y in 0..ny {
            out.set((x + nx / 2) % nx, (y + ny / 2) % ny, data[x * ny + y] * scale);
        }
    }
    out
}

/// Centered forward DFT, unnormalized.
pub fn fft2c(img: &ComplexImage) -> ComplexImage {
    transform(img, false)
}

/// Centered inverse DFT with `1/(N_x·N_y)`, so `ifft2c(fft2c(x)) == x`.
pub fn ifft2c(kspace: &ComplexImage) -> ComplexImage {
    transform(kspace, true)
}
