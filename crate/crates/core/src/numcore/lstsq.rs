//! Tikhonov-regularized complex least squares and its reverse-mode gradient.
//!
//! Gradients follow the real-channel convention used on the tape: for a real
//! loss `ℓ` and complex entry `w = a + ib`, the gradient is `∂ℓ/∂a + i·∂ℓ/∂b`.
//! With that convention `dℓ = Re tr(Gᴴ dW)`.

use num_complex::Complex;

use super::{Cholesky, ComplexMatrix};
use crate::error::{Error, Result};
use crate::scalar::Real;

fn check_inputs<T: Real>(p: &ComplexMatrix<T>, t: &ComplexMatrix<T>, alpha: T) -> Result<()> {
    if p.rows() != t.rows() {
        return Err(Error::DimensionMismatch(format!(
            "P has {} rows, T has {}",
            p.rows(),
            t.rows()
        )));
    }
    if p.rows() == 0 || p.cols() == 0 || t.cols() == 0 {
        return Err(Error::DimensionMismatch(format!(
            "empty system: P {}x{}, T {}x{}",
            p.rows(),
            p.cols(),
            t.rows(),
            t.cols()
        )));
    }
    if !(alpha >= T::zero()) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!("alpha must be finite and >= 0, got {alpha}")));
    }
    Ok(())
}

/// Cholesky factor of `PᴴP + αI`.
pub(crate) fn normal_factor<T: Real>(p: &ComplexMatrix<T>, alpha: T) -> Result<Cholesky<T>> {
    let mut normal = p.adjoint_matmul(p)?;
    for i in 0..normal.rows() {
        let d = normal.get(i, i);
        normal.set(i, i, Complex::new(d.re + alpha, T::zero()));
    }
    Cholesky::factor(&normal)
}

/// `W = argmin ‖PW − T‖² + α‖W‖²` through the normal equations.
pub fn solve_tikhonov<T: Real>(
    p: &ComplexMatrix<T>,
    t: &ComplexMatrix<T>,
    alpha: T,
) -> Result<ComplexMatrix<T>> {
    Ok(solve_tikhonov_factored(p, t, alpha)?.0)
}

pub(crate) fn solve_tikhonov_factored<T: Real>(
    p: &ComplexMatrix<T>,
    t: &ComplexMatrix<T>,
    alpha: T,
) -> Result<(ComplexMatrix<T>, Cholesky<T>)> {
    check_inputs(p, t, alpha)?;
    let factor = normal_factor(p, alpha)?;
    let mut w = p.adjoint_matmul(t)?;
    factor.solve_in_place(&mut w)?;
    Ok((w, factor))
}

/// Gradients of a real loss with respect to `P` and `T`, given its gradient
/// `G` with respect to `W = solve_tikhonov(P, T, α)`.
///
/// With `M = (PᴴP + αI)⁻¹`, `Z = M·G` and `R = T − P·W`:
/// `dT = P·Z` and `dP = R·Zᴴ − P·Z·Wᴴ`.
pub fn solve_tikhonov_grad<T: Real>(
    p: &ComplexMatrix<T>,
    t: &ComplexMatrix<T>,
    alpha: T,
    w: &ComplexMatrix<T>,
    g: &ComplexMatrix<T>,
) -> Result<(ComplexMatrix<T>, ComplexMatrix<T>)> {
    check_inputs(p, t, alpha)?;
    let factor = normal_factor(p, alpha)?;
    tikhonov_grad_with_factor(p, t, w, g, &factor)
}

pub(crate) fn tikhonov_grad_with_factor<T: Real>(
    p: &ComplexMatrix<T>,
    t: &ComplexMatrix<T>,
    w: &ComplexMatrix<T>,
    g: &ComplexMatrix<T>,
    factor: &Cholesky<T>,
) -> Result<(ComplexMatrix<T>, ComplexMatrix<T>)> {
    if w.rows() != p.cols() || w.cols() != t.cols() || g.rows() != w.rows() || g.cols() != w.cols() {
        return Err(Error::DimensionMismatch(format!(
            "W {}x{} / G {}x{} inconsistent with P {}x{}, T {}x{}",
            w.rows(),
            w.cols(),
            g.rows(),
            g.cols(),
            p.rows(),
            p.cols(),
            t.rows(),
            t.cols()
        )));
    }
    let mut z = g.clone();
    factor.solve_in_place(&mut z)?;
    let pz = p.matmul(&z)?;
    let residual = t.sub(&p.matmul(w)?)?;
    let dp = residual.matmul(&z.adjoint())?.sub(&pz.matmul(&w.adjoint())?)?;
    Ok((dp, pz))
}
