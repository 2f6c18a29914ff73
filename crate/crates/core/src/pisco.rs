//! Self-consistency regularizer: neighborhood weights solved per subset of
//! k-space samples should agree with each other.

use crate::error::{Error, Result};
use crate::neighborhood::{build_patches, overdetermination, subset_rows, KernelGeometry, SubsetOrder, SubsetSystem};
use crate::nik::{SirenModel, SMOOTH_ABS_EPS};
use crate::numcore::{solve_tikhonov_factored, ComplexMatrix, RealTensor, Tape, Var};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiscoConfig {
    pub alpha: f64,
    pub f_od: f64,
    pub lambda: f64,
    /// Output coils used for `T` per step; `None` means all.
    pub coils_out_per_iter: Option<usize>,
    pub order: SubsetOrder,
    /// When false, `P` is treated as a constant and gradients reach the
    /// network only through the targets.
    pub grad_through_p: bool,
}

impl Default for PiscoConfig {
    fn default() -> Self {
        Self {
            alpha: 1e-4,
            f_od: 1.1,
            lambda: 0.01,
            coils_out_per_iter: None,
            order: SubsetOrder::Temporal,
            grad_through_p: true,
        }
    }
}

impl PiscoConfig {
    pub fn validate(&self, n_coils: usize) -> Result<()> {
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidArgument(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if !(self.f_od > 1.0) || !self.f_od.is_finite() {
            return Err(Error::InvalidArgument(format!("f_od must be > 1, got {}", self.f_od)));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if let Some(c) = self.coils_out_per_iter {
            if c == 0 || c > n_coils {
                return Err(Error::InvalidArgument(format!(
                    "coils_out_per_iter must be in 1..={n_coils}, got {c}"
                )));
            }
        }
        Ok(())
    }

    pub fn coils_out(&self, n_coils: usize) -> usize {
        self.coils_out_per_iter.unwrap_or(n_coils)
    }
}

/// Weights of one subset, `N_n·N_c_in × N_c_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet<T> {
    pub w: ComplexMatrix<T>,
    pub subset: usize,
    /// Smallest pivot² of the normal-matrix factor when known.
    pub min_pivot_sq: Option<f64>,
}

pub fn solve_subset_weights<T: Real>(systems: &[SubsetSystem<T>], alpha: f64) -> Result<Vec<WeightSet<T>>> {
    if systems.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            available: systems.len(),
        });
    }
    systems
        .iter()
        .enumerate()
        .map(|(subset, s)| {
            if s.p.rows() < s.p.cols() {
                return Err(Error::TooFewSamples {
                    needed: s.p.cols(),
                    available: s.p.rows(),
                });
            }
            let (w, factor) = solve_tikhonov_factored(&s.p, &s.t, T::lit(alpha))?;
            Ok(WeightSet {
                w,
                subset,
                min_pivot_sq: Some(factor.min_pivot_sq().as_f64()),
            })
        })
        .collect()
}

/// `(1/N_s²)·Σᵢ Σⱼ ‖Re(Wᵢ − Wⱼ)‖₁ + ‖Im(Wᵢ − Wⱼ)‖₁` over all ordered pairs.
pub fn pisco_loss<T: Real>(weights: &[WeightSet<T>]) -> Result<T> {
    if weights.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            available: weights.len(),
        });
    }
    let shape = (weights[0].w.rows(), weights[0].w.cols());
    if let Some(bad) = weights.iter().find(|w| (w.w.rows(), w.w.cols()) != shape) {
        return Err(Error::ShapeMismatch(format!(
            "weight set {} is {}x{}, expected {}x{}",
            bad.subset,
            bad.w.rows(),
            bad.w.cols(),
            shape.0,
            shape.1
        )));
    }
    let mut tape = Tape::new();
    let vars: Vec<Var> = weights.iter().map(|w| tape.constant(w.w.to_interleaved())).collect();
    let l = tape.mean_pairwise_l1(&vars, T::lit(SMOOTH_ABS_EPS))?;
    Ok(tape.value(l).data()[0])
}

/// Contiguous output-coil window for step `step`, advancing round-robin.
pub fn coil_window(n_coils: usize, c_out: usize, step: usize) -> Vec<usize> {
    let start = (step * c_out) % n_coils;
    (0..c_out).map(|i| (start + i) % n_coils).collect()
}

/// Layout of network outputs feeding one regularizer evaluation.
#[derive(Debug, Clone)]
pub struct PiscoBatch<'a> {
    /// Time coordinate of each target row.
    pub times: &'a [f64],
    pub n_neighbors: usize,
    pub n_coils: usize,
    /// Output coils forming `T`.
    pub coils_out: &'a [usize],
}

/// Unscaled regularizer on the tape.
///
/// `y` is interleaved `(M + M·N_n) × 2·N_c`: the `M` target rows first, then
/// the neighbors of each target in order. Returns the loss and `N_s`.
pub fn pisco_loss_tape<T: Real>(tape: &mut Tape<T>, y: Var, batch: &PiscoBatch<'_>, cfg: &PiscoConfig) -> Result<(Var, usize)> {
    let m = batch.times.len();
    let (n_n, n_c) = (batch.n_neighbors, batch.n_coils);
    let width = 2 * n_c;
    if tape.value(y).shape() != [m * (1 + n_n), width] {
        return Err(Error::ShapeMismatch(format!(
            "network output {:?}, expected [{}, {width}]",
            tape.value(y).shape(),
            m * (1 + n_n)
        )));
    }
    if let Some(&c) = batch.coils_out.iter().find(|&&c| c >= n_c) {
        return Err(Error::InvalidArgument(format!("output coil {c} out of range for {n_c} coils")));
    }
    let c_out = batch.coils_out.len();
    let (_, n_m) = overdetermination(n_n, n_c, c_out, cfg.f_od)?;
    if m < 2 * n_m {
        return Err(Error::TooFewSamples {
            needed: 2 * n_m,
            available: m,
        });
    }
    let subsets = subset_rows(batch.times, n_m, cfg.order)?;
    let p_width = n_n * width;
    let mut weights = Vec::with_capacity(subsets.len());
    for s in &subsets {
        let mut t_idx = Vec::with_capacity(n_m * 2 * c_out);
        let mut p_idx = Vec::with_capacity(n_m * p_width);
        for &r in &s.rows {
            for &c in batch.coils_out {
                t_idx.push(r * width + 2 * c);
                t_idx.push(r * width + 2 * c + 1);
            }
            let base = (m + r * n_n) * width;
            p_idx.extend(base..base + p_width);
        }
        let t = tape.gather(y, t_idx, vec![n_m, 2 * c_out])?;
        let mut p = tape.gather(y, p_idx, vec![n_m, p_width])?;
        if !cfg.grad_through_p {
            p = tape.detach(p);
        }
        weights.push(tape.tikhonov_solve(p, t, T::lit(cfg.alpha))?);
    }
    let l = tape.mean_pairwise_l1(&weights, T::lit(SMOOTH_ABS_EPS))?;
    Ok((l, subsets.len()))
}

/// Result of one regularizer evaluation.
#[derive(Debug, Clone)]
pub struct PiscoStep<T> {
    /// `λ·L`.
    pub loss: T,
    /// `L` before weighting.
    pub raw: T,
    pub n_subsets: usize,
    /// One tensor per model parameter.
    pub grads: Vec<RealTensor<T>>,
}

/// Queries the model at `targets` and their kernel neighbors, solves the
/// subset weights and differentiates `λ·L` with respect to the parameters.
pub fn pisco_step<T: Real>(
    model: &SirenModel<T>,
    targets: &[[f64; 3]],
    kernel: &KernelGeometry,
    cfg: &PiscoConfig,
    step: usize,
) -> Result<PiscoStep<T>> {
    let n_c = model.n_coils();
    cfg.validate(n_c)?;
    let coils_out = coil_window(n_c, cfg.coils_out(n_c), step);
    let mut coords = targets.to_vec();
    coords.extend(build_patches(targets, kernel));
    let times: Vec<f64> = targets.iter().map(|c| c[2]).collect();
    let mut tape = Tape::new();
    let params = model.register(&mut tape);
    let y = model.forward_tape(&mut tape, &params, &coords)?;
    let batch = PiscoBatch {
        times: &times,
        n_neighbors: kernel.len(),
        n_coils: n_c,
        coils_out: &coils_out,
    };
    let (raw, n_subsets) = pisco_loss_tape(&mut tape, y, &batch, cfg)?;
    let loss = tape.scale(raw, T::lit(cfg.lambda));
    let mut grads = tape.backward(loss)?;
    let grads = params
        .iter()
        .zip(model.params())
        .map(|(&v, p)| grads.take(v).unwrap_or_else(|| RealTensor::zeros(p.shape().to_vec())))
        .collect();
    Ok(PiscoStep {
        loss: tape.value(loss).data()[0],
        raw: tape.value(raw).data()[0],
        n_subsets,
        grads,
    })
}
