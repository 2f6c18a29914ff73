use num_complex::Complex;

use crate::error::{Error, Result};
use crate::numcore::{RealTensor, Tape, Var};
use crate::scalar::Real;

/// Smoothing of the complex modulus so the loss is differentiable at zero.
pub const SMOOTH_ABS_EPS: f64 = 1e-12;

/// High-dynamic-range data-consistency loss settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcLossConfig {
    /// Floor added to `|meas|` in the denominator.
    pub epsilon: f64,
}

impl Default for DcLossConfig {
    fn default() -> Self {
        Self { epsilon: 1e-3 }
    }
}

impl DcLossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        Ok(())
    }
}

fn weights<T: Real>(meas: &RealTensor<T>, eps: T) -> Result<RealTensor<T>> {
    let (m, c2) = meas.dims2()?;
    let data = meas
        .data()
        .chunks_exact(2)
        .map(|p| T::one() / ((p[0] * p[0] + p[1] * p[1]).sqrt() + eps))
        .collect();
    RealTensor::new(vec![m, c2 / 2], data)
}

/// `mean |pred − meas| / (|meas| + ε)` over every complex entry, on the tape.
/// `meas` is interleaved `M × 2·N_c` like `pred`.
pub fn dc_loss_tape<T: Real>(tape: &mut Tape<T>, pred: Var, meas: &RealTensor<T>, cfg: &DcLossConfig) -> Result<Var> {
    if tape.value(pred).shape() != meas.shape() {
        return Err(Error::ShapeMismatch(format!(
            "prediction {:?} vs measurement {:?}",
            tape.value(pred).shape(),
            meas.shape()
        )));
    }
    let w = weights(meas, T::lit(cfg.epsilon))?;
    let target = tape.constant(meas.clone());
    let diff = tape.sub(pred, target)?;
    let modulus = tape.complex_abs_smooth(diff, T::lit(SMOOTH_ABS_EPS))?;
    let weighted = tape.mul_const(modulus, w)?;
    tape.mean(weighted)
}

/// Value-only evaluation of the same loss on complex arrays.
pub fn dc_loss<T: Real>(pred: &[Complex<T>], meas: &[Complex<T>], cfg: &DcLossConfig) -> Result<T> {
    if pred.len() != meas.len() || pred.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions vs {} measurements",
            pred.len(),
            meas.len()
        )));
    }
    let eps = T::lit(cfg.epsilon);
    let total: T = pred.iter().zip(meas).map(|(p, m)| (p - m).norm() / (m.norm() + eps)).sum();
    Ok(total / T::lit(pred.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn identical_inputs_give_zero() {
        let m = vec![c(1.0, 2.0), c(-0.5, 0.0)];
        assert_eq!(dc_loss(&m, &m, &DcLossConfig::default()).unwrap(), 0.0);
    }

    #[test]
    fn doubling_unit_measurements_costs_one() {
        let m: Vec<_> = (0..6).map(|i| Complex::from_polar(1.0, i as f64)).collect();
        let p: Vec<_> = m.iter().map(|z| z * 2.0).collect();
        let l = dc_loss(&p, &m, &DcLossConfig { epsilon: 1e-15 }).unwrap();
        assert!((l - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tape_and_direct_agree() {
        let meas = RealTensor::new(vec![2, 4], vec![1.0, 0.5, -0.2, 0.1, 0.0, 0.3, 2.0, -1.0]).unwrap();
        let pred = RealTensor::new(vec![2, 4], vec![0.7, 0.5, -0.1, 0.4, 0.2, 0.1, 1.5, -1.2]).unwrap();
        let cfg = DcLossConfig::default();
        let mut tape = Tape::new();
        let p = tape.leaf(pred.clone());
        let l = dc_loss_tape(&mut tape, p, &meas, &cfg).unwrap();
        let to_c = |t: &RealTensor<f64>| t.data().chunks_exact(2).map(|q| c(q[0], q[1])).collect::<Vec<_>>();
        let direct = dc_loss(&to_c(&pred), &to_c(&meas), &cfg).unwrap();
        let got = tape.value(l).data()[0];
        assert!((got - direct).abs() < 1e-10, "{got} vs {direct}");
        let bad = RealTensor::zeros(vec![3, 4]);
        assert!(dc_loss_tape(&mut tape, p, &bad, &cfg).is_err());
    }
}
