//! Batched data-consistency training with the regularizer switched on after
//! a pretraining phase. Each regularized iteration is two optimizer steps
//! with independent Adam states.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kspace::KSampleSet;
use crate::neighborhood::{kernel_offsets, overdetermination, KernelGeometry};
use crate::nik::{dc_loss_tape, DcLossConfig, SirenModel};
use crate::numcore::{RealTensor, Tape};
use crate::pisco::{pisco_step, PiscoConfig};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 3e-5,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moments plus the step count.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    m: Vec<RealTensor<T>>,
    v: Vec<RealTensor<T>>,
    t: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(params: &[RealTensor<T>]) -> Self {
        let zeros = || params.iter().map(|p| RealTensor::zeros(p.shape().to_vec())).collect();
        Self { m: zeros(), v: zeros(), t: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn first_moments(&self) -> &[RealTensor<T>] {
        &self.m
    }

    pub fn second_moments(&self) -> &[RealTensor<T>] {
        &self.v
    }
}

/// One bias-corrected Adam update in place.
pub fn adam_step<T: Real>(
    params: &mut [RealTensor<T>],
    grads: &[RealTensor<T>],
    state: &mut AdamState<T>,
    cfg: &AdamConfig,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} parameters, {} gradients, {} moment slots",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    for ((p, g), m) in params.iter().zip(grads).zip(&state.m) {
        if p.shape() != g.shape() || p.shape() != m.shape() {
            return Err(Error::ShapeMismatch(format!(
                "parameter {:?}, gradient {:?}, moment {:?}",
                p.shape(),
                g.shape(),
                m.shape()
            )));
        }
    }
    state.t += 1;
    let (b1, b2) = (T::lit(cfg.beta1), T::lit(cfg.beta2));
    let one = T::one();
    let c1 = one - T::lit(cfg.beta1.powi(state.t as i32));
    let c2 = one - T::lit(cfg.beta2.powi(state.t as i32));
    let (lr, eps) = (T::lit(cfg.lr), T::lit(cfg.eps));
    for (i, p) in params.iter_mut().enumerate() {
        let g = grads[i].data();
        let m = state.m[i].data_mut();
        let v = state.v[i].data_mut();
        for (j, w) in p.data_mut().iter_mut().enumerate() {
            m[j] = b1 * m[j] + (one - b1) * g[j];
            v[j] = b2 * v[j] + (one - b2) * g[j] * g[j];
            let mh = m[j] / c1;
            let vh = v[j] / c2;
            *w -= lr * mh / (vh.sqrt() + eps);
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Regularization starts after this many epochs.
    pub e_pre: usize,
    pub batch: usize,
    pub adam: AdamConfig,
    /// Learning rate of the regularizer's optimizer; `None` uses `adam.lr`.
    pub pisco_lr: Option<f64>,
    pub seed: u64,
    pub pisco_enabled: bool,
    pub pisco: PiscoConfig,
    pub kernel_size: (usize, usize),
    /// Kernel spacing in normalized k units; `None` uses one readout sample.
    pub kernel_delta: Option<f64>,
    pub dc: DcLossConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 1000,
            e_pre: 200,
            batch: 10_000,
            adam: AdamConfig::default(),
            pisco_lr: None,
            seed: 0,
            pisco_enabled: true,
            pisco: PiscoConfig::default(),
            kernel_size: (3, 3),
            kernel_delta: None,
            dc: DcLossConfig::default(),
        }
    }
}

impl TrainConfig {
    fn regularized(&self) -> bool {
        self.pisco_enabled && self.epochs > self.e_pre
    }

    pub fn validate(&self, n_coils: usize) -> Result<()> {
        if self.epochs == 0 || self.batch == 0 {
            return Err(Error::InvalidArgument("epochs and batch must be >= 1".into()));
        }
        if self.e_pre > self.epochs {
            return Err(Error::InvalidArgument(format!(
                "e_pre = {} exceeds epochs = {}",
                self.e_pre, self.epochs
            )));
        }
        if !(self.adam.lr > 0.0) || !(0.0..1.0).contains(&self.adam.beta1) || !(0.0..1.0).contains(&self.adam.beta2) {
            return Err(Error::InvalidArgument(format!("invalid Adam settings {:?}", self.adam)));
        }
        if let Some(lr) = self.pisco_lr {
            if !(lr > 0.0) || !lr.is_finite() {
                return Err(Error::InvalidArgument(format!("pisco_lr must be > 0, got {lr}")));
            }
        }
        self.dc.validate()?;
        if self.regularized() {
            self.pisco.validate(n_coils)?;
            let n_n = self.kernel_size.0 * self.kernel_size.1 - 1;
            let (_, n_m) = overdetermination(n_n, n_coils, self.pisco.coils_out(n_coils), self.pisco.f_od)?;
            if self.batch < 2 * n_m {
                return Err(Error::TooFewSamples {
                    needed: 2 * n_m,
                    available: self.batch,
                });
            }
        }
        Ok(())
    }
}

/// One batch iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub epoch: usize,
    pub step: usize,
    pub l_dc: f64,
    /// Unweighted regularizer value, absent during pretraining.
    pub l_pisco: Option<f64>,
    /// `l_dc / l_pisco`: the weight that would equalize the two terms.
    pub ratio: Option<f64>,
    pub ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub records: Vec<StepRecord>,
}

pub const TRAIN_LOG_HEADER: &str = "epoch,step,l_dc,l_pisco,ratio,ms";

impl TrainLog {
    /// CSV with an empty `ms` column unless `with_time`, so logs of
    /// identical runs are byte-identical by default.
    pub fn to_csv(&self, with_time: bool) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut s = format!("{TRAIN_LOG_HEADER}\n");
        for r in &self.records {
            let ms = if with_time { format!("{:.3}", r.ms) } else { String::new() };
            s.push_str(&format!("{},{},{},{},{},{ms}\n", r.epoch, r.step, r.l_dc, opt(r.l_pisco), opt(r.ratio)));
        }
        s
    }

    /// Mean `l_dc` per epoch, in epoch order.
    pub fn epoch_mean_dc(&self) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64, usize)> = Vec::new();
        for r in &self.records {
            match out.last_mut() {
                Some(last) if last.0 == r.epoch => {
                    last.1 += r.l_dc;
                    last.2 += 1;
                }
                _ => out.push((r.epoch, r.l_dc, 1)),
            }
        }
        out.into_iter().map(|(e, s, n)| (e, s / n as f64)).collect()
    }
}

/// `⌊M/B⌋` near-equal batches (each at least `B` rows), or one batch when
/// `M < B`.
pub fn batch_bounds(m: usize, b: usize) -> Vec<(usize, usize)> {
    let n = (m / b).max(1);
    (0..n).map(|i| (i * m / n, (i + 1) * m / n)).collect()
}

/// Row order for `epoch`, reproducible from the master seed.
pub fn epoch_permutation(m: usize, seed: u64, epoch: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch as u64);
    let mut idx: Vec<usize> = (0..m).collect();
    idx.shuffle(&mut rng);
    idx
}

fn kernel_for(data: &KSampleSet, cfg: &TrainConfig) -> Result<KernelGeometry> {
    let delta = match cfg.kernel_delta {
        Some(d) => d,
        None => {
            let per_spoke = data.len() / data.n_distinct_spokes().max(1);
            1.0 / per_spoke.max(1) as f64
        }
    };
    kernel_offsets(cfg.kernel_size, delta)
}

/// Data-consistency loss and parameter gradients on one batch.
pub fn dc_gradients<T: Real>(
    model: &SirenModel<T>,
    coords: &[[f64; 3]],
    targets: &RealTensor<T>,
    cfg: &DcLossConfig,
) -> Result<(T, Vec<RealTensor<T>>)> {
    let mut tape = Tape::new();
    let params = model.register(&mut tape);
    let y = model.forward_tape(&mut tape, &params, coords)?;
    let l = dc_loss_tape(&mut tape, y, targets, cfg)?;
    let mut g = tape.backward(l)?;
    let grads = params
        .iter()
        .zip(model.params())
        .map(|(&v, p)| g.take(v).unwrap_or_else(|| RealTensor::zeros(p.shape().to_vec())))
        .collect();
    Ok((tape.value(l).data()[0], grads))
}

/// Both optimizer states after training, for inspection.
#[derive(Debug, Clone)]
pub struct Optimizers<T> {
    pub dc: AdamState<T>,
    pub pisco: AdamState<T>,
}

pub fn train<T: Real>(data: &KSampleSet, model: &mut SirenModel<T>, cfg: &TrainConfig) -> Result<TrainLog> {
    train_with(data, model, cfg, |_| {}).map(|(log, _)| log)
}

/// Trains in place, calling `on_step` after every batch iteration.
pub fn train_with<T: Real>(
    data: &KSampleSet,
    model: &mut SirenModel<T>,
    cfg: &TrainConfig,
    mut on_step: impl FnMut(&StepRecord),
) -> Result<(TrainLog, Optimizers<T>)> {
    if data.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, available: 0 });
    }
    if data.n_coils() != model.n_coils() {
        return Err(Error::ShapeMismatch(format!(
            "data has {} coils, model outputs {}",
            data.n_coils(),
            model.n_coils()
        )));
    }
    cfg.validate(data.n_coils())?;
    let kernel = kernel_for(data, cfg)?;
    let scale = data.max_abs();
    let scale = if scale > 0.0 { scale } else { 1.0 };
    model.output_scale = scale;
    let n_c = data.n_coils();
    let values = data.values();
    let pisco_adam = AdamConfig {
        lr: cfg.pisco_lr.unwrap_or(cfg.adam.lr),
        ..cfg.adam
    };
    let mut opt = Optimizers {
        dc: AdamState::new(model.params()),
        pisco: AdamState::new(model.params()),
    };
    let mut log = TrainLog::default();
    let mut step = 0usize;
    let mut pisco_steps = 0usize;
    for epoch in 1..=cfg.epochs {
        let order = epoch_permutation(data.len(), cfg.seed, epoch);
        for (lo, hi) in batch_bounds(data.len(), cfg.batch) {
            let start = Instant::now();
            let rows = &order[lo..hi];
            let coords: Vec<[f64; 3]> = rows.iter().map(|&r| data.coords()[r]).collect();
            let mut target = Vec::with_capacity(rows.len() * 2 * n_c);
            for &r in rows {
                for v in &values[r * n_c..(r + 1) * n_c] {
                    target.push(T::lit(v.re / scale));
                    target.push(T::lit(v.im / scale));
                }
            }
            let target = RealTensor::new(vec![rows.len(), 2 * n_c], target)?;
            let (l_dc, grads) = dc_gradients(model, &coords, &target, &cfg.dc)?;
            let l_dc = l_dc.as_f64();
            if !l_dc.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    step,
                    detail: format!("data-consistency loss {l_dc}"),
                });
            }
            adam_step(model.params_mut(), &grads, &mut opt.dc, &cfg.adam)?;
            let mut l_pisco = None;
            if cfg.pisco_enabled && epoch > cfg.e_pre {
                let res = pisco_step(model, &coords, &kernel, &cfg.pisco, pisco_steps)?;
                let raw = res.raw.as_f64();
                if !raw.is_finite() || res.grads.iter().any(|g| !g.all_finite()) {
                    return Err(Error::NonFiniteLoss {
                        epoch,
                        step,
                        detail: format!("regularizer {raw}"),
                    });
                }
                adam_step(model.params_mut(), &res.grads, &mut opt.pisco, &pisco_adam)?;
                pisco_steps += 1;
                l_pisco = Some(raw);
            }
            let record = StepRecord {
                epoch,
                step,
                l_dc,
                l_pisco,
                ratio: l_pisco.filter(|&p| p > 0.0).map(|p| l_dc / p),
                ms: start.elapsed().as_secs_f64() * 1e3,
            };
            on_step(&record);
            log.records.push(record);
            step += 1;
        }
    }
    Ok((log, opt))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params_and_decays_moments() {
        let mut p = vec![RealTensor::new(vec![2], vec![1.0, -2.0]).unwrap()];
        let mut st = AdamState::new(&p);
        let g1 = vec![RealTensor::new(vec![2], vec![1.0, 1.0]).unwrap()];
        adam_step(&mut p, &g1, &mut st, &AdamConfig::default()).unwrap();
        let m1 = st.first_moments()[0].data()[0];
        let before = p.clone();
        let g0 = vec![RealTensor::zeros(vec![2])];
        adam_step(&mut p, &g0, &mut st, &AdamConfig::default()).unwrap();
        assert!(st.first_moments()[0].data()[0] < m1);
        // momentum keeps moving the parameters; with no history they stay put
        assert_ne!(p, before);
        let mut q = vec![RealTensor::new(vec![2], vec![1.0, -2.0]).unwrap()];
        let mut fresh = AdamState::new(&q);
        adam_step(&mut q, &g0, &mut fresh, &AdamConfig::default()).unwrap();
        assert_eq!(q[0].data(), &[1.0, -2.0]);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = vec![RealTensor::scalar(0.5f64)];
        let mut st = AdamState::new(&p);
        adam_step(&mut p, &[RealTensor::scalar(1.0)], &mut st, &AdamConfig::default()).unwrap();
        let d = p[0].data()[0] - 0.5;
        assert!((d + 3e-5).abs() < 1e-12, "{d}");
    }

    #[test]
    fn shape_checks() {
        let mut p = vec![RealTensor::<f64>::zeros(vec![2])];
        let mut st = AdamState::new(&p);
        assert!(adam_step(&mut p, &[RealTensor::zeros(vec![3])], &mut st, &AdamConfig::default()).is_err());
        assert!(adam_step(&mut p, &[], &mut st, &AdamConfig::default()).is_err());
    }

    #[test]
    fn batches_cover_rows_once() {
        assert_eq!(batch_bounds(10, 3), vec![(0, 3), (3, 6), (6, 10)]);
        assert_eq!(batch_bounds(5, 10), vec![(0, 5)]);
        assert_eq!(batch_bounds(20_000, 10_000), vec![(0, 10_000), (10_000, 20_000)]);
    }

    #[test]
    fn permutations_are_seeded_per_epoch() {
        assert_eq!(epoch_permutation(50, 1, 3), epoch_permutation(50, 1, 3));
        assert_ne!(epoch_permutation(50, 1, 3), epoch_permutation(50, 1, 4));
        assert_ne!(epoch_permutation(50, 1, 3), epoch_permutation(50, 2, 3));
    }

    #[test]
    fn config_checks() {
        assert!(TrainConfig::default().validate(6).is_ok());
        let bad = TrainConfig { e_pre: 5, epochs: 4, ..Default::default() };
        assert!(bad.validate(6).is_err());
        let small = TrainConfig { batch: 500, ..Default::default() };
        assert!(matches!(small.validate(6), Err(Error::TooFewSamples { needed: 634, .. })));
        let off = TrainConfig { batch: 500, pisco_enabled: false, ..Default::default() };
        assert!(off.validate(6).is_ok());
    }

    #[test]
    fn csv_layout() {
        let log = TrainLog {
            records: vec![
                StepRecord { epoch: 1, step: 0, l_dc: 0.5, l_pisco: None, ratio: None, ms: 1.0 },
                StepRecord { epoch: 2, step: 1, l_dc: 0.25, l_pisco: Some(2.0), ratio: Some(0.125), ms: 1.5 },
            ],
        };
        assert_eq!(log.to_csv(false), "epoch,step,l_dc,l_pisco,ratio,ms\n1,0,0.5,,,\n2,1,0.25,2,0.125,\n");
        assert!(log.to_csv(true).ends_with(",1.500\n"));
        assert_eq!(log.epoch_mean_dc(), vec![(1, 0.5), (2, 0.25)]);
    }
}
