use num_complex::Complex64;

use super::nudft::nudft_forward_multi;
use super::Trajectory;
use crate::error::{Error, Result};
use crate::phantom::{CoilMaps, DynamicPhantom, Navigator};

/// Multi-coil k-space samples at spatio-temporal coordinates `(k_x, k_y, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KSampleSet {
    n_coils: usize,
    coords: Vec<[f64; 3]>,
    values: Vec<Complex64>,
    spokes: Vec<usize>,
}

impl KSampleSet {
    /// `values` is `M × n_coils` row-major; `spokes` labels the readout each
    /// sample belongs to.
    pub fn new(n_coils: usize, coords: Vec<[f64; 3]>, values: Vec<Complex64>, spokes: Vec<usize>) -> Result<Self> {
        if n_coils == 0 || values.len() != coords.len() * n_coils || spokes.len() != coords.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} coordinates, {} values, {} spoke labels for {n_coils} coils",
                coords.len(),
                values.len(),
                spokes.len()
            )));
        }
        if let Some(c) = coords.iter().find(|c| !(0.0..=0.5).contains(&c[2]) || !c[0].is_finite() || !c[1].is_finite()) {
            return Err(Error::InvalidArgument(format!("coordinate {c:?} outside the valid range")));
        }
        Ok(Self {
            n_coils,
            coords,
            values,
            spokes,
        })
    }

    pub fn empty(n_coils: usize) -> Self {
        Self {
            n_coils,
            coords: Vec::new(),
            values: Vec::new(),
            spokes: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn n_coils(&self) -> usize {
        self.n_coils
    }

    pub fn coords(&self) -> &[[f64; 3]] {
        &self.coords
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn spokes(&self) -> &[usize] {
        &self.spokes
    }

    /// Coil vector of sample `i`.
    pub fn sample(&self, i: usize) -> &[Complex64] {
        &self.values[i * self.n_coils..(i + 1) * self.n_coils]
    }

    /// Spatial part of the coordinates.
    pub fn spatial_coords(&self) -> Vec<[f64; 2]> {
        self.coords.iter().map(|c| [c[0], c[1]]).collect()
    }

    /// Samples of coil `c`.
    pub fn coil_values(&self, c: usize) -> Vec<Complex64> {
        (0..self.len()).map(|i| self.values[i * self.n_coils + c]).collect()
    }

    pub fn n_distinct_spokes(&self) -> usize {
        let mut s = self.spokes.clone();
        s.sort_unstable();
        s.dedup();
        s.len()
    }

    /// Subset of samples in the given order.
    pub fn select(&self, idx: &[usize]) -> Self {
        let mut values = Vec::with_capacity(idx.len() * self.n_coils);
        for &i in idx {
            values.extend_from_slice(self.sample(i));
        }
        Self {
            n_coils: self.n_coils,
            coords: idx.iter().map(|&i| self.coords[i]).collect(),
            values,
            spokes: idx.iter().map(|&i| self.spokes[i]).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * s).collect(),
            ..self.clone()
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Motion-affected acquisition: spoke `i` samples the scene at navigator
/// value `t_i`, through every coil sensitivity.
pub fn simulate_acquisition(
    phantom: &DynamicPhantom,
    maps: &CoilMaps,
    traj: &Trajectory,
    nav: &Navigator,
) -> Result<KSampleSet> {
    if nav.len() != traj.n_spokes() {
        return Err(Error::DimensionMismatch(format!(
            "navigator has {} values for {} spokes",
            nav.len(),
            traj.n_spokes()
        )));
    }
    if maps.grid() != phantom.grid() {
        return Err(Error::DimensionMismatch(format!(
            "coil maps {:?} vs phantom {:?}",
            maps.grid(),
            phantom.grid()
        )));
    }
    let n_coils = maps.n_coils();
    let n_fe = traj.n_fe();
    let m = traj.n_spokes() * n_fe;
    let mut coords = Vec::with_capacity(m);
    let mut values = Vec::with_capacity(m * n_coils);
    let mut spokes = Vec::with_capacity(m);
    for (i, &t) in nav.values.iter().enumerate() {
        let frame = phantom.render_frame(t);
        let coil_images = (0..n_coils)
            .map(|c| maps.apply(c, &frame))
            .collect::<Result<Vec<_>>>()?;
        let per_coil = nudft_forward_multi(&coil_images, traj.spoke(i))?;
        for (j, k) in traj.spoke(i).iter().enumerate() {
            coords.push([k[0], k[1], t]);
            spokes.push(i);
            values.extend(per_coil.iter().map(|v| v[j]));
        }
    }
    KSampleSet::new(n_coils, coords, values, spokes)
}

/// Keeps spokes whose index is a multiple of `r`.
pub fn accelerate(samples: &KSampleSet, r: usize) -> Result<KSampleSet> {
    if r == 0 {
        return Err(Error::InvalidArgument("acceleration factor must be >= 1".into()));
    }
    if r == 1 {
        return Ok(samples.clone());
    }
    let idx: Vec<usize> = (0..samples.len()).filter(|&i| samples.spokes[i].is_multiple_of(r)).collect();
    Ok(samples.select(&idx))
}

/// Motion-state bin of navigator value `t` among `n_ms` equal-width bins.
pub fn motion_state(t: f64, n_ms: usize) -> usize {
    let width = 0.5 / n_ms as f64;
    ((t / width).floor().max(0.0) as usize).min(n_ms - 1)
}

/// Partitions samples into `n_ms` bins by navigator value.
pub fn bin_by_navigator(samples: &KSampleSet, n_ms: usize) -> Result<Vec<KSampleSet>> {
    if n_ms == 0 {
        return Err(Error::InvalidArgument("need at least one motion state".into()));
    }
    let mut bins: Vec<Vec<usize>> = vec![Vec::new(); n_ms];
    for (i, c) in samples.coords.iter().enumerate() {
        bins[motion_state(c[2], n_ms)].push(i);
    }
    Ok(bins.iter().map(|idx| samples.select(idx)).collect())
}
