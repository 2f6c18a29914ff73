mod common;

use common::{central_diff, rel_err};
use pisco_core::kspace::{golden_angle_radial, simulate_acquisition, KSampleSet};
use pisco_core::nik::{dc_loss, DcLossConfig, SirenConfig, SirenModel};
use pisco_core::numcore::{interleaved_to_complex, RealTensor};
use pisco_core::phantom::{coil_maps, navigator_signal, DynamicPhantom};
use pisco_core::pisco::PiscoConfig;
use pisco_core::trainer::{adam_step, dc_gradients, train, train_with, AdamConfig, AdamState, TrainConfig};
use pisco_core::Error;

#[test]
fn adam_matches_scalar_simulation_on_parabola() {
    let cfg = AdamConfig::default();
    let mut p = vec![RealTensor::scalar(1.0f64)];
    let mut st = AdamState::new(&p);
    // independent scalar reference
    let (mut x, mut m, mut v) = (1.0f64, 0.0f64, 0.0f64);
    let mut prev = x.abs();
    for t in 1..=100 {
        let g = 2.0 * p[0].data()[0];
        adam_step(&mut p, &[RealTensor::scalar(g)], &mut st, &cfg).unwrap();
        let gr = 2.0 * x;
        m = 0.9 * m + 0.1 * gr;
        v = 0.999 * v + 0.001 * gr * gr;
        let mh = m / (1.0 - 0.9f64.powi(t));
        let vh = v / (1.0 - 0.999f64.powi(t));
        x -= 3e-5 * mh / (vh.sqrt() + 1e-8);
        assert_eq!(p[0].data()[0], x);
        if t > 3 {
            assert!(x.abs() < prev);
        }
        prev = x.abs();
    }
}

fn toy_data() -> KSampleSet {
    let n = 16;
    let phantom = DynamicPhantom::abdominal(n, n).unwrap();
    let maps = coil_maps(2, (n, n)).unwrap();
    let traj = golden_angle_radial(40, n).unwrap();
    let nav = navigator_signal(40, 20.0).unwrap();
    simulate_acquisition(&phantom, &maps, &traj, &nav).unwrap()
}

fn toy_model(seed: u64) -> SirenModel<f64> {
    let cfg = SirenConfig {
        hidden: 32,
        layers: 3,
        n_freqs: 16,
        sigma_k: 8.0,
        sigma_t: 2.0,
        seed,
        ..Default::default()
    };
    SirenModel::new(&cfg, 2).unwrap()
}

fn toy_cfg(epochs: usize, e_pre: usize) -> TrainConfig {
    TrainConfig {
        epochs,
        e_pre,
        batch: 320,
        adam: AdamConfig { lr: 1e-3, ..Default::default() },
        seed: 7,
        pisco: PiscoConfig { lambda: 0.01, ..Default::default() },
        ..Default::default()
    }
}

#[test]
fn training_is_deterministic() {
    let data = toy_data();
    let run = || {
        let mut m = toy_model(1);
        let log = train(&data, &mut m, &toy_cfg(4, 2)).unwrap();
        (log, m)
    };
    let (la, ma) = run();
    let (lb, mb) = run();
    assert_eq!(la.to_csv(false), lb.to_csv(false));
    assert_eq!(ma, mb);
}

#[test]
fn regularizer_is_gated_by_pretraining() {
    let data = toy_data();
    let mut m = toy_model(2);
    let (log, opt) = train_with(&data, &mut m, &toy_cfg(4, 2), |_| {}).unwrap();
    for r in &log.records {
        assert_eq!(r.l_pisco.is_some(), r.epoch > 2, "epoch {}", r.epoch);
    }
    let steps = log.records.len() as u64;
    assert_eq!(opt.dc.steps(), steps);
    assert_eq!(opt.pisco.steps(), steps / 2);

    let mut m = toy_model(2);
    let (log, opt) = train_with(&data, &mut m, &toy_cfg(3, 3), |_| {}).unwrap();
    assert!(log.records.iter().all(|r| r.l_pisco.is_none()));
    assert_eq!(opt.pisco.steps(), 0);
    assert!(opt.pisco.first_moments().iter().all(|t| t.data().iter().all(|&v| v == 0.0)));
}

#[test]
fn zero_lambda_and_disabled_regularizer_match_vanilla() {
    let data = toy_data();
    let vanilla = {
        let mut m = toy_model(3);
        let cfg = TrainConfig { pisco_enabled: false, ..toy_cfg(4, 1) };
        train(&data, &mut m, &cfg).unwrap();
        m
    };
    let zero = {
        let mut m = toy_model(3);
        let mut cfg = toy_cfg(4, 1);
        cfg.pisco.lambda = 0.0;
        let log = train(&data, &mut m, &cfg).unwrap();
        assert!(log.records.iter().any(|r| r.l_pisco.is_some()));
        m
    };
    let gated = {
        let mut m = toy_model(3);
        train(&data, &mut m, &toy_cfg(4, 4)).unwrap();
        m
    };
    assert_eq!(vanilla, zero);
    assert_eq!(vanilla, gated);
    let active = {
        let mut m = toy_model(3);
        train(&data, &mut m, &toy_cfg(4, 1)).unwrap();
        m
    };
    assert_ne!(vanilla, active);
}

#[test]
fn toy_run_reduces_data_consistency_loss() {
    let data = toy_data();
    let mut m = toy_model(4);
    let cfg = TrainConfig { pisco_enabled: false, ..toy_cfg(50, 50) };
    let log = train(&data, &mut m, &cfg).unwrap();
    let means = log.epoch_mean_dc();
    let (first, last) = (means[0].1, means[means.len() - 1].1);
    println!("epoch-mean L_DC {first:.4} -> {last:.4}");
    assert!(last < first);
}

#[test]
fn gradients_pass_finite_differences_after_training() {
    let data = toy_data();
    let mut m = toy_model(5);
    // 10 steps: 5 epochs of 2 batches, regularized from epoch 3
    let log = train(&data, &mut m, &toy_cfg(5, 2)).unwrap();
    assert_eq!(log.records.len(), 10);
    let rows: Vec<usize> = (0..48).map(|i| i * 13).collect();
    let sub = data.select(&rows);
    let scale = m.output_scale;
    let target = RealTensor::new(
        vec![rows.len(), 4],
        sub.values().iter().flat_map(|v| [v.re / scale, v.im / scale]).collect(),
    )
    .unwrap();
    let cfg = DcLossConfig::default();
    let (_, grads) = dc_gradients(&m, sub.coords(), &target, &cfg).unwrap();
    let meas = interleaved_to_complex(&target);
    let probes: Vec<(usize, usize)> = (0..m.params().len()).flat_map(|p| [(p, 0), (p, m.params()[p].len() / 2)]).collect();
    let analytic: Vec<f64> = probes.iter().map(|&(p, i)| grads[p].data()[i]).collect();
    let start: Vec<f64> = probes.iter().map(|&(p, i)| m.params()[p].data()[i]).collect();
    let numeric = central_diff(&start, 1e-6, |v| {
        let mut mm = m.clone();
        for (&(p, i), &x) in probes.iter().zip(v) {
            mm.params_mut()[p].data_mut()[i] = x;
        }
        let y = mm.forward(sub.coords()).unwrap();
        dc_loss(&interleaved_to_complex(&y), &meas, &cfg).unwrap()
    });
    let err = rel_err(&analytic, &numeric);
    assert!(err < 1e-4, "rel err {err}");
}

#[test]
fn non_finite_parameters_abort_training() {
    let data = toy_data();
    let mut m = toy_model(6);
    m.params_mut()[0].data_mut()[0] = f64::NAN;
    let err = train(&data, &mut m, &toy_cfg(1, 1)).unwrap_err();
    assert!(matches!(err, Error::NonFiniteLoss { epoch: 1, step: 0, .. }));
}

#[test]
fn coil_mismatch_rejected() {
    let data = toy_data();
    let mut m = SirenModel::<f64>::new(&SirenConfig { hidden: 8, layers: 1, n_freqs: 4, ..Default::default() }, 3).unwrap();
    assert!(matches!(train(&data, &mut m, &toy_cfg(1, 1)), Err(Error::ShapeMismatch(_))));
}

#[test]
fn single_precision_training_runs() {
    let data = toy_data();
    let cfg = SirenConfig { hidden: 16, layers: 2, n_freqs: 8, ..Default::default() };
    let mut m = SirenModel::<f32>::new(&cfg, 2).unwrap();
    let log = train(&data, &mut m, &toy_cfg(3, 1)).unwrap();
    assert!(log.records.iter().all(|r| r.l_dc.is_finite()));
}

#[test]
fn regularizer_learning_rate_defaults_to_shared_rate() {
    let data = toy_data();
    let run = |pisco_lr| {
        let mut m = toy_model(8);
        let cfg = TrainConfig { pisco_lr, ..toy_cfg(4, 2) };
        train(&data, &mut m, &cfg).unwrap();
        m
    };
    let shared = run(None);
    assert_eq!(shared, run(Some(1e-3)));
    assert_ne!(shared, run(Some(1e-4)));
    let mut m = toy_model(8);
    let bad = TrainConfig { pisco_lr: Some(0.0), ..toy_cfg(2, 1) };
    assert!(matches!(train(&data, &mut m, &bad), Err(Error::InvalidArgument(_))));
}
