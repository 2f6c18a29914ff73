//! Exact non-uniform discrete Fourier transform.
//!
//! `y(k) = Σ_r x(r)·exp(−2πi(k_x·r_x + k_y·r_y))` with `r` in integer pixel
//! units and `k` in normalized units. The kernel factorizes over axes, so each
//! sample costs `N_x + N_y` complex exponentials and `N_x·N_y` multiply-adds.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::image::{pixel_coord, ComplexImage};

fn axis_phasors(k: f64, n: usize, sign: f64, out: &mut [Complex64]) {
    for (i, o) in out.iter_mut().enumerate().take(n) {
        *o = Complex64::from_polar(1.0, sign * 2.0 * PI * k * pixel_coord(i, n));
    }
}

fn check_finite_coords(coords: &[[f64; 2]]) -> Result<()> {
    if coords.iter().any(|k| !k[0].is_finite() || !k[1].is_finite()) {
        return Err(Error::InvalidArgument("non-finite k-space coordinate".into()));
    }
    Ok(())
}

/// Forward transform of one image at arbitrary coordinates.
pub fn nudft_forward(image: &ComplexImage, coords: &[[f64; 2]]) -> Result<Vec<Complex64>> {
    let out = nudft_forward_multi(std::slice::from_ref(image), coords)?;
    Ok(out.into_iter().next().unwrap_or_default())
}

/// Forward transform of several same-size images sharing one coordinate set.
/// Returns one sample vector per image.
pub fn nudft_forward_multi(images: &[ComplexImage], coords: &[[f64; 2]]) -> Result<Vec<Vec<Complex64>>> {
    check_finite_coords(coords)?;
    let Some(first) = images.first() else {
        return Ok(Vec::new());
    };
    let (nx, ny) = first.dims();
    if images.iter().any(|im| im.dims() != (nx, ny)) {
        return Err(Error::DimensionMismatch("images differ in size".into()));
    }
    let mut out = vec![Vec::with_capacity(coords.len()); images.len()];
    let mut ex = vec![Complex64::default(); nx];
    let mut ey = vec![Complex64::default(); ny];
    for k in coords {
        axis_phasors(k[0], nx, -1.0, &mut ex);
        axis_phasors(k[1], ny, -1.0, &mut ey);
        for (img, o) in images.iter().zip(out.iter_mut()) {
            let mut acc = Complex64::default();
            for (ix, row) in img.data().chunks_exact(ny).enumerate() {
                let inner: Complex64 = row.iter().zip(&ey).map(|(x, e)| x * e).sum();
                acc += ex[ix] * inner;
            }
            o.push(acc);
        }
    }
    Ok(out)
}

/// Adjoint transform: `x(r) = Σ_m y_m·exp(+2πi·k_m·r)`.
pub fn nudft_adjoint(samples: &[Complex64], coords: &[[f64; 2]], grid: (usize, usize)) -> Result<ComplexImage> {
    if samples.len() != coords.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} samples for {} coordinates",
            samples.len(),
            coords.len()
        )));
    }
    check_finite_coords(coords)?;
    let (nx, ny) = grid;
    let mut img = ComplexImage::zeros(nx, ny);
    let mut ex = vec![Complex64::default(); nx];
    let mut ey = vec![Complex64::default(); ny];
    for (y, k) in samples.iter().zip(coords) {
        if y.re == 0.0 && y.im == 0.0 {
            continue;
        }
        axis_phasors(k[0], nx, 1.0, &mut ex);
        axis_phasors(k[1], ny, 1.0, &mut ey);
        for (ix, row) in img.data_mut().chunks_exact_mut(ny).enumerate() {
            let a = y * ex[ix];
            row.iter_mut().zip(&ey).for_each(|(p, e)| *p += a * e);
        }
    }
    Ok(img)
}
