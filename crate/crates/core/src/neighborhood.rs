//! Neighborhood geometry: kernel offsets, coordinate patches around targets and
//! the partition of a batch into subset systems `(P_s, T_s)`.

use num_complex::Complex;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numcore::ComplexMatrix;
use crate::scalar::Real;

/// Neighbor offsets `(δk_x, δk_y)` around a target, center excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelGeometry {
    offsets: Vec<[f64; 2]>,
}

impl KernelGeometry {
    /// Arbitrary offset pattern; rejects duplicates and the center.
    pub fn from_offsets(offsets: Vec<[f64; 2]>) -> Result<Self> {
        if offsets.is_empty() {
            return Err(Error::InvalidArgument("kernel needs at least one offset".into()));
        }
        for (i, o) in offsets.iter().enumerate() {
            if o[0] == 0.0 && o[1] == 0.0 {
                return Err(Error::InvalidArgument("kernel must not contain the center".into()));
            }
            if !o[0].is_finite() || !o[1].is_finite() {
                return Err(Error::InvalidArgument("non-finite kernel offset".into()));
            }
            if offsets[..i].contains(o) {
                return Err(Error::InvalidArgument(format!("duplicate kernel offset {o:?}")));
            }
        }
        Ok(Self { offsets })
    }

    pub fn offsets(&self) -> &[[f64; 2]] {
        &self.offsets
    }

    /// Number of neighbors `N_n`.
    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }
}

/// Rectangular `h × w` kernel with spacing `delta`, row-major over
/// `(i, j) ∈ [−(h−1)/2, (h−1)/2] × [−(w−1)/2, (w−1)/2]`, center removed.
pub fn kernel_offsets(size: (usize, usize), delta: f64) -> Result<KernelGeometry> {
    let (h, w) = size;
    if h < 3 || w < 3 || h % 2 == 0 || w % 2 == 0 {
        return Err(Error::EvenKernel { h, w });
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidArgument(format!("kernel spacing must be > 0, got {delta}")));
    }
    let (hh, hw) = ((h / 2) as i64, (w / 2) as i64);
    let mut offsets = Vec::with_capacity(h * w - 1);
    for i in -hh..=hh {
        for j in -hw..=hw {
            if i != 0 || j != 0 {
                offsets.push([i as f64 * delta, j as f64 * delta]);
            }
        }
    }
    KernelGeometry::from_offsets(offsets)
}

/// Neighbor coordinates for every target, target-major (`M × N_n`). Neighbors
/// keep the target's time coordinate and may leave `[−0.5, 0.5)`.
pub fn build_patches(targets: &[[f64; 3]], kernel: &KernelGeometry) -> Vec<[f64; 3]> {
    let mut out = Vec::with_capacity(targets.len() * kernel.len());
    for t in targets {
        for o in kernel.offsets() {
            out.push([t[0] + o[0], t[1] + o[1], t[2]]);
        }
    }
    out
}

/// `(N_w, N_m)` with `N_w = N_n·N_c_in·N_c_out` and `N_m = ⌈f_od·N_w⌉`.
pub fn overdetermination(n_n: usize, c_in: usize, c_out: usize, f_od: f64) -> Result<(usize, usize)> {
    if !(f_od > 1.0) || !f_od.is_finite() {
        return Err(Error::InvalidArgument(format!("f_od must be > 1, got {f_od}")));
    }
    let n_w = n_n * c_in * c_out;
    Ok((n_w, (f_od * n_w as f64).ceil() as usize))
}

/// How batch rows are grouped into subsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SubsetOrder {
    /// Sorted by time, consecutive blocks.
    #[default]
    Temporal,
    /// Shuffled with the given seed, consecutive blocks.
    Random(u64),
}

/// Row indices of one subset and the time span they cover.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetRows {
    pub rows: Vec<usize>,
    pub t_range: (f64, f64),
}

/// Groups `t.len()` rows into `⌊M / N_m⌋` blocks of `N_m` rows; the remainder
/// is dropped.
pub fn subset_rows(t: &[f64], n_m: usize, order: SubsetOrder) -> Result<Vec<SubsetRows>> {
    if n_m == 0 {
        return Err(Error::InvalidArgument("subset size must be >= 1".into()));
    }
    if t.len() < n_m {
        return Err(Error::TooFewSamples {
            needed: n_m,
            available: t.len(),
        });
    }
    let mut idx: Vec<usize> = (0..t.len()).collect();
    match order {
        SubsetOrder::Temporal => idx.sort_by(|&a, &b| t[a].total_cmp(&t[b]).then(a.cmp(&b))),
        SubsetOrder::Random(seed) => idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed)),
    }
    let n_s = t.len() / n_m;
    Ok(idx
        .chunks_exact(n_m)
        .take(n_s)
        .map(|rows| {
            let lo = rows.iter().map(|&r| t[r]).fold(f64::INFINITY, f64::min);
            let hi = rows.iter().map(|&r| t[r]).fold(f64::NEG_INFINITY, f64::max);
            SubsetRows {
                rows: rows.to_vec(),
                t_range: (lo, hi),
            }
        })
        .collect())
}

/// One linear system `T_s ≈ P_s·W`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetSystem<T> {
    pub p: ComplexMatrix<T>,
    pub t: ComplexMatrix<T>,
    pub t_range: (f64, f64),
}

/// Temporally sorted subset systems from per-row target values
/// (`M × N_c_out`) and patch values (`M × N_n·N_c_in`).
pub fn partition_subsets<T: Real>(
    t: &[f64],
    values_t: &ComplexMatrix<T>,
    values_p: &ComplexMatrix<T>,
    n_m: usize,
) -> Result<Vec<SubsetSystem<T>>> {
    partition_subsets_with(t, values_t, values_p, n_m, SubsetOrder::Temporal)
}

pub fn partition_subsets_with<T: Real>(
    t: &[f64],
    values_t: &ComplexMatrix<T>,
    values_p: &ComplexMatrix<T>,
    n_m: usize,
    order: SubsetOrder,
) -> Result<Vec<SubsetSystem<T>>> {
    if values_t.rows() != t.len() || values_p.rows() != t.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} time values, T has {} rows, P has {}",
            t.len(),
            values_t.rows(),
            values_p.rows()
        )));
    }
    let take = |m: &ComplexMatrix<T>, rows: &[usize]| -> ComplexMatrix<T> {
        let data: Vec<Complex<T>> = rows.iter().flat_map(|&r| m.row(r).iter().copied()).collect();
        ComplexMatrix::new(rows.len(), m.cols(), data).expect("row selection keeps shape")
    };
    Ok(subset_rows(t, n_m, order)?
        .into_iter()
        .map(|s| SubsetSystem {
            p: take(values_p, &s.rows),
            t: take(values_t, &s.rows),
            t_range: s.t_range,
        })
        .collect())
}
