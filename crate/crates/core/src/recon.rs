//! Inference on the Cartesian grid, coil combination, the gridding baseline
//! and image-quality metrics.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::ifft2c;
use crate::image::{normalized_coord, ComplexImage};
use crate::kspace::{bin_by_navigator, nudft_adjoint, KSampleSet, NdArray};
use crate::nik::SirenModel;
use crate::phantom::CoilMaps;
use crate::scalar::Real;

/// Images over time, all on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameStack {
    times: Vec<f64>,
    frames: Vec<ComplexImage>,
}

impl FrameStack {
    pub fn new(times: Vec<f64>, frames: Vec<ComplexImage>) -> Result<Self> {
        if times.len() != frames.len() || frames.is_empty() {
            return Err(Error::ShapeMismatch(format!("{} times for {} frames", times.len(), frames.len())));
        }
        let dims = frames[0].dims();
        if frames.iter().any(|f| f.dims() != dims) {
            return Err(Error::ShapeMismatch("frames differ in size".into()));
        }
        if times.iter().any(|t| !(0.0..=0.5).contains(t)) || times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidArgument("frame times must ascend within [0, 0.5]".into()));
        }
        Ok(Self { times, frames })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn frames(&self) -> &[ComplexImage] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.frames[0].dims()
    }

    pub fn magnitudes(&self) -> Vec<Vec<f64>> {
        self.frames.iter().map(ComplexImage::magnitude).collect()
    }

    /// `N_t × N_x × N_y` complex array plus the time vector.
    pub fn to_nda(&self) -> Result<(NdArray, NdArray)> {
        let (nx, ny) = self.dims();
        let data = self.frames.iter().flat_map(|f| f.data().iter().copied()).collect();
        Ok((
            NdArray::c128(vec![self.len(), nx, ny], data)?,
            NdArray::f64(vec![self.len()], self.times.clone())?,
        ))
    }

    pub fn from_nda(frames: NdArray, times: NdArray) -> Result<Self> {
        let dims = frames.dims().to_vec();
        if dims.len() != 3 {
            return Err(Error::ShapeMismatch(format!("frame array has dims {dims:?}")));
        }
        let (nx, ny) = (dims[1], dims[2]);
        let data = frames.into_c128()?;
        let images = data
            .chunks_exact(nx * ny)
            .map(|c| ComplexImage::new(nx, ny, c.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(times.into_f64()?, images)
    }
}

/// `n` equally spaced times covering `[0, 0.5]`.
pub fn frame_times(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.25],
        _ => (0..n).map(|i| 0.5 * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Cartesian coordinates of the grid at time `t`, `x` slow.
pub fn grid_coords(grid: (usize, usize), t: f64) -> Vec<[f64; 3]> {
    let (nx, ny) = grid;
    (0..nx)
        .flat_map(|x| (0..ny).map(move |y| [normalized_coord(x, nx), normalized_coord(y, ny), t]))
        .collect()
}

/// Model k-space on the full grid at time `t`, one image per coil.
pub fn infer_grid<T: Real>(model: &SirenModel<T>, t: f64, grid: (usize, usize)) -> Result<Vec<ComplexImage>> {
    if !(0.0..=0.5).contains(&t) {
        return Err(Error::InvalidArgument(format!("t = {t} outside [0, 0.5]")));
    }
    let (nx, ny) = grid;
    let n_c = model.n_coils();
    let values = model.predict(&grid_coords(grid, t))?;
    (0..n_c)
        .map(|c| ComplexImage::new(nx, ny, values.iter().skip(c).step_by(n_c).copied().collect()))
        .collect()
}

/// `Σ conj(s_c)·x_c / Σ |s_c|²`; pixels without sensitivity are set to zero.
pub fn coil_combine(coil_images: &[ComplexImage], maps: &CoilMaps) -> Result<ComplexImage> {
    if coil_images.len() != maps.n_coils() {
        return Err(Error::ShapeMismatch(format!(
            "{} coil images for {} maps",
            coil_images.len(),
            maps.n_coils()
        )));
    }
    let (nx, ny) = maps.grid();
    if coil_images.iter().any(|c| c.dims() != (nx, ny)) {
        return Err(Error::ShapeMismatch(format!("coil images must be {nx}x{ny}")));
    }
    let sos = maps.sum_of_squares();
    let floor = 1e-12 * sos.iter().copied().fold(0.0, f64::max);
    if !(floor > 0.0) {
        return Err(Error::ZeroSensitivity { pixels: nx * ny });
    }
    let mut out = ComplexImage::zeros(nx, ny);
    for (i, v) in out.data_mut().iter_mut().enumerate() {
        if sos[i] > floor {
            let acc: Complex64 = coil_images.iter().enumerate().map(|(c, img)| maps.coil(c)[i].conj() * img.data()[i]).sum();
            *v = acc / sos[i];
        }
    }
    Ok(out)
}

/// Per-coil inverse FFT followed by coil combination.
pub fn kspace_to_image(kspace: &[ComplexImage], maps: &CoilMaps) -> Result<ComplexImage> {
    let coil_images: Vec<ComplexImage> = kspace.iter().map(ifft2c).collect();
    coil_combine(&coil_images, maps)
}

/// Reconstructed frames at `times` from a trained model.
pub fn reconstruct_frames<T: Real>(model: &SirenModel<T>, maps: &CoilMaps, times: &[f64]) -> Result<FrameStack> {
    let frames = times
        .iter()
        .map(|&t| kspace_to_image(&infer_grid(model, t, maps.grid())?, maps))
        .collect::<Result<Vec<_>>>()?;
    FrameStack::new(times.to_vec(), frames)
}

/// Gridding baseline output; empty bins yield zero frames.
#[derive(Debug, Clone, PartialEq)]
pub struct InufftOutput {
    pub frames: FrameStack,
    pub empty_bins: Vec<usize>,
}

/// Radial ramp `|k|` with `1/(2·N_FE)` at the center, scaled by the area one
/// sample covers on `n_spokes` diameters.
pub fn radial_density(k: [f64; 2], n_fe: usize, n_spokes: usize) -> f64 {
    let r = k[0].hypot(k[1]);
    let ramp = if r < 0.25 / n_fe as f64 { 0.5 / n_fe as f64 } else { r };
    ramp * std::f64::consts::PI / (n_fe * n_spokes) as f64
}

/// Density-compensated adjoint per motion-state bin, one frame per bin at
/// the bin center.
pub fn inufft_recon(samples: &KSampleSet, maps: &CoilMaps, n_fe: usize, n_ms: usize) -> Result<InufftOutput> {
    if n_ms == 0 {
        return Err(Error::InvalidArgument("need at least one motion state".into()));
    }
    if samples.n_coils() != maps.n_coils() {
        return Err(Error::ShapeMismatch(format!(
            "{} sample coils vs {} maps",
            samples.n_coils(),
            maps.n_coils()
        )));
    }
    let grid = maps.grid();
    let mut frames = Vec::with_capacity(n_ms);
    let mut empty_bins = Vec::new();
    for (b, bin) in bin_by_navigator(samples, n_ms)?.iter().enumerate() {
        if bin.is_empty() {
            empty_bins.push(b);
            frames.push(ComplexImage::zeros(grid.0, grid.1));
            continue;
        }
        let spatial = bin.spatial_coords();
        let n_spokes = bin.n_distinct_spokes();
        let w: Vec<f64> = spatial.iter().map(|&k| radial_density(k, n_fe, n_spokes)).collect();
        let coil_images = (0..bin.n_coils())
            .map(|c| {
                let y: Vec<Complex64> = bin.coil_values(c).iter().zip(&w).map(|(v, w)| v * w).collect();
                nudft_adjoint(&y, &spatial, grid)
            })
            .collect::<Result<Vec<_>>>()?;
        frames.push(coil_combine(&coil_images, maps)?);
    }
    let times = (0..n_ms).map(|b| 0.5 * (b as f64 + 0.5) / n_ms as f64).collect();
    Ok(InufftOutput {
        frames: FrameStack::new(times, frames)?,
        empty_bins,
    })
}

fn check_pair(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::ShapeMismatch(format!("images of {} and {} pixels", a.len(), b.len())));
    }
    Ok(())
}

pub const PSNR_CAP_DB: f64 = 99.0;

/// `10·log10(max(ref)² / MSE)`, capped at 99 dB.
pub fn psnr(reference: &[f64], test: &[f64]) -> Result<f64> {
    check_pair(reference, test)?;
    let peak = reference.iter().copied().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::InvalidArgument("reference image has no positive values".into()));
    }
    let mse = reference.iter().zip(test).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / reference.len() as f64;
    if mse == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * (peak * peak / mse).log10()).min(PSNR_CAP_DB))
}

/// `‖test − ref‖ / ‖ref‖`.
pub fn nrmse(reference: &[f64], test: &[f64]) -> Result<f64> {
    check_pair(reference, test)?;
    let num: f64 = reference.iter().zip(test).map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = reference.iter().map(|a| a * a).sum();
    if den == 0.0 {
        return Err(Error::InvalidArgument("reference image is zero".into()));
    }
    Ok((num / den).sqrt())
}

pub const SSIM_WINDOW: usize = 8;

/// Summed-area table with a zero first row and column.
fn integral(v: &[f64], nx: usize, ny: usize) -> Vec<f64> {
    let mut s = vec![0.0; (nx + 1) * (ny + 1)];
    for x in 0..nx {
        let mut row = 0.0;
        for y in 0..ny {
            row += v[x * ny + y];
            s[(x + 1) * (ny + 1) + y + 1] = s[x * (ny + 1) + y + 1] + row;
        }
    }
    s
}

/// Mean structural similarity over all `8×8` windows, `x` slow. The dynamic
/// range is `max(ref)`.
pub fn ssim(reference: &[f64], test: &[f64], nx: usize, ny: usize) -> Result<f64> {
    check_pair(reference, test)?;
    if reference.len() != nx * ny {
        return Err(Error::ShapeMismatch(format!("{} pixels for {nx}x{ny}", reference.len())));
    }
    if nx < SSIM_WINDOW || ny < SSIM_WINDOW {
        return Err(Error::ShapeMismatch(format!("SSIM needs at least 8x8, got {nx}x{ny}")));
    }
    let l = reference.iter().copied().fold(0.0, f64::max);
    let (c1, c2) = ((0.01 * l).powi(2), (0.03 * l).powi(2));
    let prod = |f: fn(f64, f64) -> f64| -> Vec<f64> { reference.iter().zip(test).map(|(&a, &b)| f(a, b)).collect() };
    let sa = integral(reference, nx, ny);
    let sb = integral(test, nx, ny);
    let saa = integral(&prod(|a, _| a * a), nx, ny);
    let sbb = integral(&prod(|_, b| b * b), nx, ny);
    let sab = integral(&prod(|a, b| a * b), nx, ny);
    let w = SSIM_WINDOW;
    let n = (w * w) as f64;
    let stride = ny + 1;
    let window = |s: &[f64], x: usize, y: usize| s[(x + w) * stride + y + w] - s[x * stride + y + w] - s[(x + w) * stride + y] + s[x * stride + y];
    let mut total = 0.0;
    let mut count = 0usize;
    for x in 0..=nx - w {
        for y in 0..=ny - w {
            let (ma, mb) = (window(&sa, x, y) / n, window(&sb, x, y) / n);
            let va = (window(&saa, x, y) / n - ma * ma).max(0.0);
            let vb = (window(&sbb, x, y) / n - mb * mb).max(0.0);
            let cov = window(&sab, x, y) / n - ma * mb;
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    Ok((total / count as f64).clamp(-1.0, 1.0))
}

/// Per-frame image-quality numbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameMetrics {
    pub psnr: f64,
    pub ssim: f64,
    pub nrmse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub frames: Vec<FrameMetrics>,
    /// SSIM on the `y`–`t` slice through the center `x` column, when there
    /// are at least 8 frames.
    pub ssim_yt: Option<f64>,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// `y`–`t` slice at column `x`: an `N_y × N_t` image.
fn yt_slice(mags: &[Vec<f64>], nx: usize, ny: usize) -> Vec<f64> {
    let x = nx / 2;
    let nt = mags.len();
    let mut out = vec![0.0; ny * nt];
    for (t, m) in mags.iter().enumerate() {
        for y in 0..ny {
            out[y * nt + t] = m[x * ny + y];
        }
    }
    out
}

impl MetricReport {
    /// Compares magnitude images frame by frame.
    pub fn compare(reference: &FrameStack, test: &FrameStack) -> Result<Self> {
        if reference.len() != test.len() || reference.dims() != test.dims() {
            return Err(Error::ShapeMismatch(format!(
                "reference {} frames of {:?}, test {} frames of {:?}",
                reference.len(),
                reference.dims(),
                test.len(),
                test.dims()
            )));
        }
        let (nx, ny) = reference.dims();
        let (rm, tm) = (reference.magnitudes(), test.magnitudes());
        let frames = rm
            .iter()
            .zip(&tm)
            .map(|(r, t)| {
                Ok(FrameMetrics {
                    psnr: psnr(r, t)?,
                    ssim: ssim(r, t, nx, ny)?,
                    nrmse: nrmse(r, t)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let ssim_yt = if rm.len() >= SSIM_WINDOW && ny >= SSIM_WINDOW {
            Some(ssim(&yt_slice(&rm, nx, ny), &yt_slice(&tm, nx, ny), ny, rm.len())?)
        } else {
            None
        };
        Ok(Self { frames, ssim_yt })
    }

    fn column(&self, f: fn(&FrameMetrics) -> f64) -> Vec<f64> {
        self.frames.iter().map(f).collect()
    }

    pub fn mean_psnr(&self) -> f64 {
        let v = self.column(|m| m.psnr);
        v.iter().sum::<f64>() / v.len() as f64
    }

    pub fn mean_ssim(&self) -> f64 {
        let v = self.column(|m| m.ssim);
        v.iter().sum::<f64>() / v.len() as f64
    }

    /// CSV with header `metric,frame,value`; aggregate rows use `mean` and
    /// `median` in the frame column.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("metric,frame,value\n");
        let cols: [(&str, fn(&FrameMetrics) -> f64); 3] = [("psnr", |m| m.psnr), ("ssim", |m| m.ssim), ("nrmse", |m| m.nrmse)];
        for (name, f) in cols {
            for (i, m) in self.frames.iter().enumerate() {
                s.push_str(&format!("{name},{i},{}\n", f(m)));
            }
        }
        for (name, f) in cols {
            let v = self.column(f);
            s.push_str(&format!("{name},mean,{}\n", v.iter().sum::<f64>() / v.len() as f64));
            s.push_str(&format!("{name},median,{}\n", median(v)));
        }
        if let Some(v) = self.ssim_yt {
            s.push_str(&format!("ssim_yt,all,{v}\n"));
        }
        s
    }
}

/// 8-bit binary PGM of a magnitude image scaled so `max` maps to 255.
pub fn write_pgm(path: impl AsRef<Path>, magnitude: &[f64], nx: usize, ny: usize, max: f64) -> Result<()> {
    if magnitude.len() != nx * ny {
        return Err(Error::ShapeMismatch(format!("{} pixels for {nx}x{ny}", magnitude.len())));
    }
    let path = path.as_ref();
    let scale = if max > 0.0 { 255.0 / max } else { 0.0 };
    let mut bytes = format!("P5\n{ny} {nx}\n255\n").into_bytes();
    bytes.extend(magnitude.iter().map(|v| (v * scale).round().clamp(0.0, 255.0) as u8));
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    f.write_all(&bytes).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}
