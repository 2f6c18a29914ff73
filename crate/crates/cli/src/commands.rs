//! Subcommand implementations. Each one reads and writes plain files so the
//! stages can run as separate processes.

use std::path::{Path, PathBuf};

use pisco_core::grappa::{grappa_reconstruct, CartesianKSpace};
use pisco_core::kspace::{
    accelerate, golden_angle_radial, motion_state, read_nda, simulate_acquisition, write_nda, KSampleSet, NdArray,
};
use pisco_core::nik::{load_checkpoint, save_checkpoint};
use pisco_core::phantom::{coil_maps, navigator_signal, CoilMaps, DynamicPhantom};
use pisco_core::recon::{frame_times, inufft_recon, reconstruct_frames, write_pgm, FrameStack, MetricReport};
use pisco_core::trainer::train_with;
use pisco_core::Siren;

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const CONFIG_FILE: &str = "config.toml";
pub const KSPACE_FILE: &str = "kspace.nda";
pub const COORDS_FILE: &str = "coords.nda";
pub const SPOKES_FILE: &str = "spokes.nda";
pub const MAPS_FILE: &str = "maps.nda";
pub const NAV_FILE: &str = "nav.nda";
pub const REF_FRAMES_FILE: &str = "ref_frames.nda";
pub const TRAIN_LOG_FILE: &str = "trainlog.csv";

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn maps_to_nda(maps: &CoilMaps) -> Result<NdArray, CliError> {
    let (nx, ny) = maps.grid();
    Ok(NdArray::c128(vec![maps.n_coils(), nx, ny], maps.data().to_vec())?)
}

pub fn read_maps(path: &Path) -> Result<CoilMaps, CliError> {
    let a = read_nda(path)?;
    let d = a.dims().to_vec();
    if d.len() != 3 {
        return Err(CliError::Core(pisco_core::Error::ShapeMismatch(format!(
            "coil maps must be 3-D, got {d:?}"
        ))));
    }
    Ok(CoilMaps::new(d[0], d[1], d[2], a.into_c128()?)?)
}

/// Frame array `N_t × N_x × N_y`; times follow the reconstruction grid.
pub fn read_frames(path: &Path) -> Result<FrameStack, CliError> {
    let a = read_nda(path)?;
    let n = a.dims().first().copied().unwrap_or(0);
    Ok(FrameStack::from_nda(a, NdArray::f64(vec![n], frame_times(n))?)?)
}

pub fn write_frames(path: &Path, frames: &FrameStack) -> Result<(), CliError> {
    Ok(write_nda(path, &frames.to_nda()?.0)?)
}

pub fn write_samples(dir: &Path, s: &KSampleSet) -> Result<(), CliError> {
    let m = s.len();
    write_nda(dir.join(KSPACE_FILE), &NdArray::c128(vec![m, s.n_coils()], s.values().to_vec())?)?;
    let coords = s.coords().iter().flat_map(|c| c.iter().copied()).collect();
    write_nda(dir.join(COORDS_FILE), &NdArray::f64(vec![m, 3], coords)?)?;
    let spokes = s.spokes().iter().map(|&i| i as f64).collect();
    write_nda(dir.join(SPOKES_FILE), &NdArray::f64(vec![m], spokes)?)?;
    Ok(())
}

pub fn read_samples(dir: &Path) -> Result<KSampleSet, CliError> {
    let k = read_nda(dir.join(KSPACE_FILE))?;
    let kd = k.dims().to_vec();
    let c = read_nda(dir.join(COORDS_FILE))?;
    let cd = c.dims().to_vec();
    let s = read_nda(dir.join(SPOKES_FILE))?.into_f64()?;
    if kd.len() != 2 || cd != [kd[0], 3] {
        return Err(CliError::Core(pisco_core::Error::ShapeMismatch(format!(
            "k-space {kd:?} with coordinates {cd:?}"
        ))));
    }
    let coords = c.into_f64()?.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    let spokes = s.iter().map(|&v| v as usize).collect();
    Ok(KSampleSet::new(kd[1], coords, k.into_c128()?, spokes)?)
}

/// Renders the phantom, simulates the acquisition and writes everything the
/// later stages need into `out`.
pub fn simulate(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    create_dir(out)?;
    let g = cfg.phantom.grid;
    let phantom = DynamicPhantom::new(cfg.phantom.ellipses.clone(), g, g)?;
    let maps = coil_maps(cfg.phantom.n_coils, (g, g))?;
    let nav = navigator_signal(cfg.trajectory.n_spokes, cfg.phantom.period)?;
    let traj = golden_angle_radial(cfg.trajectory.n_spokes, cfg.n_fe())?;
    let full = simulate_acquisition(&phantom, &maps, &traj, &nav)?;
    let samples = accelerate(&full, cfg.trajectory.r)?;
    write_samples(out, &samples)?;
    write_nda(out.join(MAPS_FILE), &maps_to_nda(&maps)?)?;
    write_nda(out.join(NAV_FILE), &NdArray::f64(vec![nav.len()], nav.values.clone())?)?;
    let times = frame_times(cfg.eval.frames);
    let frames = times.iter().map(|&t| phantom.render_frame(t)).collect();
    write_frames(&out.join(REF_FRAMES_FILE), &FrameStack::new(times, frames)?)?;
    write_text(&out.join(CONFIG_FILE), &cfg.to_toml())
}

#[derive(Debug, Clone, Default)]
pub struct TrainOptions {
    pub pisco: bool,
    /// Record per-step wall time in the log; makes the log non-reproducible.
    pub log_time: bool,
    pub quiet: bool,
}

/// Trains a network on the data in `data_dir` and writes the checkpoint,
/// the coil maps and the training log into `out`.
pub fn train(data_dir: &Path, cfg: &ExperimentConfig, out: &Path, opts: &TrainOptions) -> Result<(), CliError> {
    let samples = read_samples(data_dir)?;
    let maps = read_maps(&data_dir.join(MAPS_FILE))?;
    let tcfg = cfg.training(opts.pisco)?;
    let mut model = Siren::new(&cfg.siren(), samples.n_coils())?;
    let mut last_epoch = 0;
    let (log, _) = train_with(&samples, &mut model, &tcfg, |r| {
        if !opts.quiet && r.epoch != last_epoch {
            last_epoch = r.epoch;
            eprintln!("epoch {} l_dc {:.6e}", r.epoch, r.l_dc);
        }
    })?;
    create_dir(out)?;
    save_checkpoint(&model, out)?;
    write_nda(out.join(MAPS_FILE), &maps_to_nda(&maps)?)?;
    write_text(&out.join(TRAIN_LOG_FILE), &log.to_csv(opts.log_time))
}

/// Reconstructs `n_frames` frames evenly spread over the navigator range.
pub fn reconstruct(model_dir: &Path, n_frames: usize, out: &Path, pgm_dir: Option<&Path>) -> Result<(), CliError> {
    if n_frames == 0 {
        return Err(CliError::Config("--frames must be >= 1".into()));
    }
    let model: Siren = load_checkpoint(model_dir)?;
    let maps = read_maps(&model_dir.join(MAPS_FILE))?;
    let frames = reconstruct_frames(&model, &maps, &frame_times(n_frames))?;
    write_frames(out, &frames)?;
    if let Some(dir) = pgm_dir {
        write_pgms(dir, &frames)?;
    }
    Ok(())
}

/// One PGM per frame, sharing one intensity scale.
pub fn write_pgms(dir: &Path, frames: &FrameStack) -> Result<(), CliError> {
    create_dir(dir)?;
    let (nx, ny) = frames.dims();
    let mags = frames.magnitudes();
    let max = mags.iter().flatten().copied().fold(0.0, f64::max);
    for (i, m) in mags.iter().enumerate() {
        write_pgm(dir.join(format!("frame_{i:03}.pgm")), m, nx, ny, max)?;
    }
    Ok(())
}

/// Binned gridding baseline on the same frame grid as `reconstruct`: frame
/// `j` shows the motion state containing its time.
pub fn inufft(data_dir: &Path, cfg: &ExperimentConfig, n_ms: usize, n_frames: usize, out: &Path) -> Result<Vec<usize>, CliError> {
    if n_frames == 0 || n_ms == 0 {
        return Err(CliError::Config("--frames and --ms must be >= 1".into()));
    }
    let samples = read_samples(data_dir)?;
    let maps = read_maps(&data_dir.join(MAPS_FILE))?;
    let res = inufft_recon(&samples, &maps, cfg.n_fe(), n_ms)?;
    let times = frame_times(n_frames);
    let frames = times
        .iter()
        .map(|&t| res.frames.frames()[motion_state(t, n_ms)].clone())
        .collect();
    write_frames(out, &FrameStack::new(times, frames)?)?;
    Ok(res.empty_bins)
}

pub fn evaluate(reference: &Path, test: &Path, out: &Path) -> Result<MetricReport, CliError> {
    let report = MetricReport::compare(&read_frames(reference)?, &read_frames(test)?)?;
    write_text(out, &report.to_csv())?;
    Ok(report)
}

fn sampled_lines(mask: &[bool], nx: usize, ny: usize) -> Vec<usize> {
    (0..ny).filter(|&y| (0..nx).any(|x| mask[x * ny + y])).collect()
}

/// Acceleration factor implied by the sampled lines outside the ACS band.
pub fn infer_acceleration(mask: &[bool], nx: usize, ny: usize, acs: (usize, usize)) -> usize {
    let lines: Vec<usize> = sampled_lines(mask, nx, ny)
        .into_iter()
        .filter(|&y| y < acs.0 || y >= acs.1)
        .collect();
    lines.windows(2).map(|w| w[1] - w[0]).filter(|&d| d > 0).min().unwrap_or(1)
}

/// Fills the unsampled lines of a Cartesian multi-coil k-space
/// (`N_c × N_x × N_y`) with kernels calibrated on the central `acs_rows`
/// lines.
pub fn grappa(kspace: &Path, mask: &Path, acs_rows: usize, r: Option<usize>, alpha: f64, out: &Path) -> Result<usize, CliError> {
    let k = read_nda(kspace)?;
    let kd = k.dims().to_vec();
    let m = read_nda(mask)?;
    let md = m.dims().to_vec();
    if kd.len() != 3 || md != kd[1..] {
        return Err(CliError::Core(pisco_core::Error::ShapeMismatch(format!(
            "k-space {kd:?} with mask {md:?}"
        ))));
    }
    let (nc, nx, ny) = (kd[0], kd[1], kd[2]);
    let mask: Vec<bool> = m.into_f64()?.iter().map(|&v| v != 0.0).collect();
    if acs_rows == 0 || acs_rows > ny {
        return Err(CliError::Config(format!("--acs-rows must be in 1..={ny}")));
    }
    let lo = (ny / 2).saturating_sub(acs_rows / 2);
    let band = (lo, lo + acs_rows);
    if (0..nx).any(|x| (band.0..band.1).any(|y| !mask[x * ny + y])) {
        return Err(CliError::Config("the calibration band is not fully sampled".into()));
    }
    let data = k.into_c128()?;
    let us = CartesianKSpace::new(nc, nx, ny, data, mask.clone())?;
    let r = r.unwrap_or_else(|| infer_acceleration(&mask, nx, ny, band));
    let filled = if r <= 1 {
        us
    } else {
        let acs = us.block(0, band.0, nx, acs_rows)?;
        grappa_reconstruct(&us, &acs, r, alpha)?
    };
    let n_filled = filled.n_sampled() - mask.iter().filter(|&&b| b).count();
    write_nda(out, &NdArray::c128(vec![nc, nx, ny], filled.data().to_vec())?)?;
    Ok(n_filled)
}

pub fn default_config_path(data_dir: &Path) -> PathBuf {
    data_dir.join(CONFIG_FILE)
}
