//! Calibration-based parallel imaging on Cartesian k-space, using the same
//! `T = P·W` row convention as the regularizer.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{fft2c, ifft2c};
use crate::image::ComplexImage;
use crate::neighborhood::{KernelGeometry, SubsetSystem};
use crate::numcore::{solve_tikhonov_factored, ComplexMatrix};
use crate::pisco::WeightSet;

/// Multi-coil Cartesian k-space, coil-major, `x` slow. Unsampled entries are
/// exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CartesianKSpace {
    n_coils: usize,
    nx: usize,
    ny: usize,
    data: Vec<Complex64>,
    mask: Vec<bool>,
}

impl CartesianKSpace {
    pub fn new(n_coils: usize, nx: usize, ny: usize, data: Vec<Complex64>, mask: Vec<bool>) -> Result<Self> {
        if n_coils == 0 || nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument(format!("empty k-space {n_coils}x{nx}x{ny}")));
        }
        if data.len() != n_coils * nx * ny || mask.len() != nx * ny {
            return Err(Error::ShapeMismatch(format!(
                "{} values and {} mask entries for {n_coils}x{nx}x{ny}",
                data.len(),
                mask.len()
            )));
        }
        let k = Self { n_coils, nx, ny, data, mask };
        for c in 0..n_coils {
            for x in 0..nx {
                for y in 0..ny {
                    if !k.is_sampled(x, y) && k.get(c, x, y) != Complex64::default() {
                        return Err(Error::InvalidArgument(format!("unsampled entry ({c}, {x}, {y}) is nonzero")));
                    }
                }
            }
        }
        Ok(k)
    }

    pub fn fully_sampled(n_coils: usize, nx: usize, ny: usize, data: Vec<Complex64>) -> Result<Self> {
        Self::new(n_coils, nx, ny, data, vec![true; nx * ny])
    }

    /// Per-coil centered FFT of coil images.
    pub fn from_coil_images(images: &[ComplexImage]) -> Result<Self> {
        let first = images.first().ok_or_else(|| Error::InvalidArgument("no coil images".into()))?;
        let (nx, ny) = first.dims();
        let mut data = Vec::with_capacity(images.len() * nx * ny);
        for img in images {
            if img.dims() != (nx, ny) {
                return Err(Error::ShapeMismatch(format!("coil image {:?} vs {:?}", img.dims(), (nx, ny))));
            }
            data.extend(fft2c(img).into_data());
        }
        Self::fully_sampled(images.len(), nx, ny, data)
    }

    /// Keeps only entries where `mask` is set.
    pub fn undersample(&self, mask: &[bool]) -> Result<Self> {
        if mask.len() != self.mask.len() {
            return Err(Error::ShapeMismatch(format!("mask of {} for {} locations", mask.len(), self.mask.len())));
        }
        let mask: Vec<bool> = mask.iter().zip(&self.mask).map(|(&a, &b)| a && b).collect();
        let mut data = self.data.clone();
        for (i, v) in data.iter_mut().enumerate() {
            if !mask[i % (self.nx * self.ny)] {
                *v = Complex64::default();
            }
        }
        Self::new(self.n_coils, self.nx, self.ny, data, mask)
    }

    /// Sub-block `x0..x0+w` by `y0..y0+h`.
    pub fn block(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Self> {
        if x0 + w > self.nx || y0 + h > self.ny {
            return Err(Error::InvalidArgument(format!(
                "block {w}x{h} at ({x0}, {y0}) exceeds {}x{}",
                self.nx, self.ny
            )));
        }
        let mut data = Vec::with_capacity(self.n_coils * w * h);
        for c in 0..self.n_coils {
            for x in x0..x0 + w {
                for y in y0..y0 + h {
                    data.push(self.get(c, x, y));
                }
            }
        }
        let mask = (x0..x0 + w).flat_map(|x| (y0..y0 + h).map(move |y| (x, y))).map(|(x, y)| self.is_sampled(x, y)).collect();
        Self::new(self.n_coils, w, h, data, mask)
    }

    pub fn n_coils(&self) -> usize {
        self.n_coils
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    #[inline]
    pub fn get(&self, c: usize, x: usize, y: usize) -> Complex64 {
        self.data[(c * self.nx + x) * self.ny + y]
    }

    #[inline]
    pub fn is_sampled(&self, x: usize, y: usize) -> bool {
        self.mask[x * self.ny + y]
    }

    pub fn n_sampled(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Centered inverse FFT of each coil.
    pub fn coil_images(&self) -> Vec<ComplexImage> {
        self.data
            .chunks_exact(self.nx * self.ny)
            .map(|d| ifft2c(&ComplexImage::new(self.nx, self.ny, d.to_vec()).expect("coil block has grid size")))
            .collect()
    }
}

/// Sampling mask keeping every `r`-th `y` line plus a central band of
/// `acs_lines` lines.
pub fn uniform_mask(nx: usize, ny: usize, r: usize, acs_lines: usize) -> Result<Vec<bool>> {
    if r == 0 {
        return Err(Error::InvalidArgument("acceleration must be >= 1".into()));
    }
    let lo = (ny / 2).saturating_sub(acs_lines / 2);
    let hi = (lo + acs_lines).min(ny);
    Ok((0..nx)
        .flat_map(|_| (0..ny).map(move |y| y % r == 0 || (lo..hi).contains(&y)))
        .collect())
}

/// Kernel offsets in grid steps; normalized offsets are scaled by the grid
/// size of each axis.
fn grid_offsets(kernel: &KernelGeometry, nx: usize, ny: usize) -> Result<Vec<(isize, isize)>> {
    kernel
        .offsets()
        .iter()
        .map(|o| {
            let (fx, fy) = (o[0] * nx as f64, o[1] * ny as f64);
            let (dx, dy) = (fx.round(), fy.round());
            if (fx - dx).abs() > 1e-9 || (fy - dy).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "offset ({}, {}) is not on the {nx}x{ny} grid",
                    o[0], o[1]
                )));
            }
            Ok((dx as isize, dy as isize))
        })
        .collect()
}

/// Kernels for uniform acceleration `r` along `y`: for each missing-line phase
/// `p` in `1..r`, the sampled lines at `y − p` and `y + r − p` over
/// `x − 1..=x + 1`.
pub fn grappa_kernels(r: usize, nx: usize, ny: usize) -> Result<Vec<KernelGeometry>> {
    if r < 2 {
        return Err(Error::InvalidArgument(format!("GRAPPA kernels need acceleration >= 2, got {r}")));
    }
    (1..r)
        .map(|p| {
            let mut offsets = Vec::with_capacity(6);
            for dx in -1i32..=1 {
                for dy in [-(p as i32), (r - p) as i32] {
                    offsets.push([dx as f64 / nx as f64, dy as f64 / ny as f64]);
                }
            }
            KernelGeometry::from_offsets(offsets)
        })
        .collect()
}

fn patch_row(k: &CartesianKSpace, offsets: &[(isize, isize)], x: usize, y: usize) -> Option<Vec<Complex64>> {
    let (nx, ny) = (k.nx as isize, k.ny as isize);
    let mut row = Vec::with_capacity(offsets.len() * k.n_coils);
    for &(dx, dy) in offsets {
        let (px, py) = (x as isize + dx, y as isize + dy);
        if px < 0 || py < 0 || px >= nx || py >= ny || !k.is_sampled(px as usize, py as usize) {
            return None;
        }
        row.extend((0..k.n_coils).map(|c| k.get(c, px as usize, py as usize)));
    }
    Some(row)
}

/// Every sampled location whose full patch is sampled becomes one row.
pub fn calibration_system(acs: &CartesianKSpace, kernel: &KernelGeometry) -> Result<SubsetSystem<f64>> {
    let offsets = grid_offsets(kernel, acs.nx, acs.ny)?;
    let ext = |f: fn(&(isize, isize)) -> isize| 2 * offsets.iter().map(|o| f(o).unsigned_abs()).max().unwrap_or(0) + 1;
    let (kh, kw) = (ext(|o| o.0), ext(|o| o.1));
    if acs.nx < kh + 2 || acs.ny < kw + 2 {
        return Err(Error::AcsTooSmall {
            rows: acs.nx,
            cols: acs.ny,
            need_rows: kh + 2,
            need_cols: kw + 2,
        });
    }
    let n_c = acs.n_coils;
    let (mut p, mut t) = (Vec::new(), Vec::new());
    let mut rows = 0;
    for x in 0..acs.nx {
        for y in 0..acs.ny {
            if !acs.is_sampled(x, y) {
                continue;
            }
            if let Some(row) = patch_row(acs, &offsets, x, y) {
                p.extend(row);
                t.extend((0..n_c).map(|c| acs.get(c, x, y)));
                rows += 1;
            }
        }
    }
    if rows < offsets.len() * n_c {
        return Err(Error::TooFewSamples {
            needed: offsets.len() * n_c,
            available: rows,
        });
    }
    Ok(SubsetSystem {
        p: ComplexMatrix::new(rows, offsets.len() * n_c, p)?,
        t: ComplexMatrix::new(rows, n_c, t)?,
        t_range: (0.0, 0.0),
    })
}

pub fn calibrate(acs: &CartesianKSpace, kernel: &KernelGeometry, alpha: f64) -> Result<WeightSet<f64>> {
    let sys = calibration_system(acs, kernel)?;
    let (w, factor) = solve_tikhonov_factored(&sys.p, &sys.t, alpha)?;
    Ok(WeightSet {
        w,
        subset: 0,
        min_pivot_sq: Some(factor.min_pivot_sq()),
    })
}

/// Fills each unsampled location whose whole patch is sampled with
/// `y_T = y_P·W`. Filled locations are marked sampled in the result.
pub fn apply(weights: &WeightSet<f64>, kernel: &KernelGeometry, undersampled: &CartesianKSpace) -> Result<CartesianKSpace> {
    let k = undersampled;
    let offsets = grid_offsets(kernel, k.nx, k.ny)?;
    let n_c = k.n_coils;
    if weights.w.rows() != offsets.len() * n_c || weights.w.cols() != n_c {
        return Err(Error::ShapeMismatch(format!(
            "weights {}x{} for kernel of {} and {n_c} coils",
            weights.w.rows(),
            weights.w.cols(),
            offsets.len()
        )));
    }
    let mut out = k.clone();
    for x in 0..k.nx {
        for y in 0..k.ny {
            if k.is_sampled(x, y) {
                continue;
            }
            if let Some(row) = patch_row(k, &offsets, x, y) {
                for c in 0..n_c {
                    let v: Complex64 = row.iter().enumerate().map(|(j, p)| p * weights.w.get(j, c)).sum();
                    out.data[(c * k.nx + x) * k.ny + y] = v;
                }
                out.mask[x * k.ny + y] = true;
            }
        }
    }
    Ok(out)
}

/// Calibrates one kernel per missing-line phase on the ACS block and applies
/// each to the undersampled data; the first kernel to reach a location fills
/// it.
pub fn grappa_reconstruct(
    undersampled: &CartesianKSpace,
    acs: &CartesianKSpace,
    r: usize,
    alpha: f64,
) -> Result<CartesianKSpace> {
    let (nx, ny) = undersampled.dims();
    let mut out = undersampled.clone();
    for kernel in grappa_kernels(r, nx, ny)? {
        let (ax, ay) = acs.dims();
        // offsets are defined on the full grid; rescale for the ACS block
        let scaled = KernelGeometry::from_offsets(
            kernel
                .offsets()
                .iter()
                .map(|o| [o[0] * nx as f64 / ax as f64, o[1] * ny as f64 / ay as f64])
                .collect(),
        )?;
        let w = calibrate(acs, &scaled, alpha)?;
        let filled = apply(&w, &kernel, undersampled)?;
        for x in 0..nx {
            for y in 0..ny {
                if !out.is_sampled(x, y) && filled.is_sampled(x, y) {
                    for c in 0..out.n_coils {
                        out.data[(c * nx + x) * ny + y] = filled.get(c, x, y);
                    }
                    out.mask[x * ny + y] = true;
                }
            }
        }
    }
    Ok(out)
}

/// Root-sum-of-squares magnitude over coil images.
pub fn rss(images: &[ComplexImage]) -> Vec<f64> {
    let n = images.first().map_or(0, |i| i.data().len());
    (0..n)
        .map(|i| images.iter().map(|img| img.data()[i].norm_sqr()).sum::<f64>().sqrt())
        .collect()
}
