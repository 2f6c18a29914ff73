//! Reverse-mode automatic differentiation over [`RealTensor`]s.
//!
//! Operations are appended to a [`Tape`] in evaluation order, so the node list
//! is topologically sorted by construction. [`Tape::backward`] walks it once in
//! reverse. Complex quantities live on the tape as interleaved `(re, im)`
//! channels; the only complex-aware operations are
//! [`Tape::complex_abs_smooth`] and [`Tape::tikhonov_solve`].

use num_complex::Complex;

use super::lstsq::{solve_tikhonov_factored, tikhonov_grad_with_factor};
use super::{Cholesky, ComplexMatrix, RealTensor};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op<T> {
    Leaf,
    Constant,
    MatMul(Var, Var),
    AddRow(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    MulConst(Var, RealTensor<T>),
    Scale(Var, T),
    Sin(Var, T),
    AbsSmooth(Var, T),
    ComplexAbsSmooth(Var, T),
    Sum(Var),
    Mean(Var),
    Gather(Var, Vec<usize>),
    Tikhonov {
        p: Var,
        t: Var,
        factor: Cholesky<T>,
    },
    MeanPairwiseL1 {
        inputs: Vec<Var>,
        eps: T,
    },
}

#[derive(Debug, Clone)]
struct Node<T> {
    value: RealTensor<T>,
    op: Op<T>,
    requires_grad: bool,
}

/// Smooth modulus `s/√(s + ε²)` of a squared magnitude `s`. Zero at zero and
/// equal to `√s` in floating point once `√s ≫ ε`.
#[inline]
fn modulus_smooth<T: Real>(s: T, eps: T) -> T {
    if s == T::zero() {
        return T::zero();
    }
    s / (s + eps * eps).sqrt()
}

/// Derivative of [`modulus_smooth`] with respect to each component, divided
/// by that component: `(s + 2ε²)/(s + ε²)^{3/2}`.
#[inline]
fn modulus_smooth_slope<T: Real>(s: T, eps: T) -> T {
    let e2 = eps * eps;
    let d = s + e2;
    if d == T::zero() {
        return T::zero();
    }
    (s + e2 + e2) / (d * d.sqrt())
}

/// Smooth absolute value `x²/√(x² + ε²)`.
#[inline]
pub fn abs_smooth<T: Real>(x: T, eps: T) -> T {
    modulus_smooth(x * x, eps)
}

#[inline]
fn abs_smooth_grad<T: Real>(x: T, eps: T) -> T {
    x * modulus_smooth_slope(x * x, eps)
}

/// Operation record plus per-node values.
#[derive(Debug, Clone, Default)]
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
}

/// Gradients of a scalar root with respect to every node that requires them.
#[derive(Debug, Clone)]
pub struct Gradients<T> {
    grads: Vec<Option<RealTensor<T>>>,
}

impl<T: Real> Gradients<T> {
    pub fn get(&self, v: Var) -> Option<&RealTensor<T>> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, v: Var) -> Option<RealTensor<T>> {
        self.grads.get_mut(v.0).and_then(Option::take)
    }
}

impl<T: Real> Tape<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &RealTensor<T> {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: RealTensor<T>, op: Op<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Differentiable input.
    pub fn leaf(&mut self, value: RealTensor<T>) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// Non-differentiable input.
    pub fn constant(&mut self, value: RealTensor<T>) -> Var {
        self.push(value, Op::Constant, false)
    }

    /// Constant copy of `v`; gradients stop here.
    pub fn detach(&mut self, v: Var) -> Var {
        let value = self.value(v).clone();
        self.constant(value)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul(self.value(b))?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(value, Op::MatMul(a, b), rg))
    }

    /// `x + b` with `b` broadcast over the rows of the matrix `x`.
    pub fn add_row(&mut self, x: Var, b: Var) -> Result<Var> {
        let (m, n) = self.value(x).dims2()?;
        let bias = self.value(b);
        if bias.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "row bias of {} entries for {m}x{n}",
                bias.len()
            )));
        }
        let mut out = self.value(x).clone();
        for row in out.data_mut().chunks_exact_mut(n) {
            row.iter_mut().zip(bias.data()).for_each(|(o, &b)| *o += b);
        }
        let rg = self.rg(x) || self.rg(b);
        Ok(self.push(out, Op::AddRow(x, b), rg))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).zip_map(self.value(b), |x, y| x + y)?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(value, Op::Add(a, b), rg))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).zip_map(self.value(b), |x, y| x - y)?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(value, Op::Sub(a, b), rg))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).zip_map(self.value(b), |x, y| x * y)?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(value, Op::Mul(a, b), rg))
    }

    /// Elementwise product with a fixed tensor.
    pub fn mul_const(&mut self, a: Var, c: RealTensor<T>) -> Result<Var> {
        let value = self.value(a).zip_map(&c, |x, y| x * y)?;
        let rg = self.rg(a);
        Ok(self.push(value, Op::MulConst(a, c), rg))
    }

    pub fn scale(&mut self, a: Var, s: T) -> Var {
        let value = self.value(a).map(|x| x * s);
        let rg = self.rg(a);
        self.push(value, Op::Scale(a, s), rg)
    }

    /// `sin(freq · x)` elementwise.
    pub fn sin(&mut self, a: Var, freq: T) -> Var {
        let value = self.value(a).map(|x| (freq * x).sin());
        let rg = self.rg(a);
        self.push(value, Op::Sin(a, freq), rg)
    }

    pub fn abs_smooth(&mut self, a: Var, eps: T) -> Var {
        let value = self.value(a).map(|x| abs_smooth(x, eps));
        let rg = self.rg(a);
        self.push(value, Op::AbsSmooth(a, eps), rg)
    }

    /// Smooth modulus of interleaved complex pairs; halves the last axis.
    pub fn complex_abs_smooth(&mut self, a: Var, eps: T) -> Result<Var> {
        let input = self.value(a);
        let mut shape = input.shape().to_vec();
        match shape.last_mut() {
            Some(last) if *last % 2 == 0 => *last /= 2,
            _ => {
                return Err(Error::ShapeMismatch(format!(
                    "complex modulus needs an even last axis, got {:?}",
                    input.shape()
                )))
            }
        }
        let data = input
            .data()
            .chunks_exact(2)
            .map(|p| modulus_smooth(p[0] * p[0] + p[1] * p[1], eps))
            .collect();
        let value = RealTensor::new(shape, data)?;
        let rg = self.rg(a);
        Ok(self.push(value, Op::ComplexAbsSmooth(a, eps), rg))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let value = RealTensor::scalar(self.value(a).sum());
        let rg = self.rg(a);
        self.push(value, Op::Sum(a), rg)
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let n = self.value(a).len();
        if n == 0 {
            return Err(Error::ShapeMismatch("mean of an empty tensor".into()));
        }
        let value = RealTensor::scalar(self.value(a).sum() / T::lit(n as f64));
        let rg = self.rg(a);
        Ok(self.push(value, Op::Mean(a), rg))
    }

    /// `out[i] = a[index[i]]` over flat storage, reshaped to `shape`.
    pub fn gather(&mut self, a: Var, index: Vec<usize>, shape: Vec<usize>) -> Result<Var> {
        let src = self.value(a).data();
        if let Some(&bad) = index.iter().find(|&&i| i >= src.len()) {
            return Err(Error::ShapeMismatch(format!(
                "gather index {bad} out of range for {} elements",
                src.len()
            )));
        }
        let data = index.iter().map(|&i| src[i]).collect();
        let value = RealTensor::new(shape, data)?;
        let rg = self.rg(a);
        Ok(self.push(value, Op::Gather(a, index), rg))
    }

    /// Regularized least-squares solve on interleaved complex matrices:
    /// `p` is `N_m × 2K`, `t` is `N_m × 2C`, the result is `K × 2C`.
    pub fn tikhonov_solve(&mut self, p: Var, t: Var, alpha: T) -> Result<Var> {
        let pm = ComplexMatrix::from_interleaved(self.value(p))?;
        let tm = ComplexMatrix::from_interleaved(self.value(t))?;
        let (w, factor) = solve_tikhonov_factored(&pm, &tm, alpha)?;
        let rg = self.rg(p) || self.rg(t);
        Ok(self.push(w.to_interleaved(), Op::Tikhonov { p, t, factor }, rg))
    }

    /// `(1/N²)·Σᵢ Σⱼ Σₑ |wᵢ[e] − wⱼ[e]|` with smooth absolute value.
    ///
    /// Pair distances are summed in sorted order, so the result is bitwise
    /// invariant under permutation of `inputs`.
    pub fn mean_pairwise_l1(&mut self, inputs: &[Var], eps: T) -> Result<Var> {
        let n = inputs.len();
        if n == 0 {
            return Err(Error::ShapeMismatch("pairwise distance of an empty list".into()));
        }
        let shape = self.value(inputs[0]).shape().to_vec();
        for &v in inputs {
            if self.value(v).shape() != shape.as_slice() {
                return Err(Error::ShapeMismatch(format!(
                    "pairwise operands {:?} vs {shape:?}",
                    self.value(v).shape()
                )));
            }
        }
        let mut dists = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                let a = self.value(inputs[i]).data();
                let b = self.value(inputs[j]).data();
                dists.push(a.iter().zip(b).map(|(&x, &y)| abs_smooth(x - y, eps)).sum::<T>());
            }
        }
        dists.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        let total: T = dists.into_iter().sum();
        let nn = T::lit((n * n) as f64);
        let value = RealTensor::scalar((total + total) / nn);
        let rg = inputs.iter().any(|&v| self.rg(v));
        Ok(self.push(
            value,
            Op::MeanPairwiseL1 {
                inputs: inputs.to_vec(),
                eps,
            },
            rg,
        ))
    }

    /// Backpropagates from a single-element `root`.
    pub fn backward(&self, root: Var) -> Result<Gradients<T>> {
        if self.value(root).len() != 1 {
            return Err(Error::ShapeMismatch(format!(
                "backward root must be scalar, got {:?}",
                self.value(root).shape()
            )));
        }
        let mut grads: Vec<Option<RealTensor<T>>> = vec![None; root.0 + 1];
        grads[root.0] = Some(RealTensor::filled(self.value(root).shape().to_vec(), T::one()));
        for idx in (0..=root.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            if node.requires_grad {
                self.propagate(node, &g, &mut grads)?;
            }
            grads[idx] = Some(g);
        }
        for (i, g) in grads.iter_mut().enumerate() {
            if !self.nodes[i].requires_grad {
                *g = None;
            }
        }
        Ok(Gradients { grads })
    }

    fn accumulate(&self, grads: &mut [Option<RealTensor<T>>], v: Var, g: RealTensor<T>) -> Result<()> {
        if !self.rg(v) {
            return Ok(());
        }
        match &mut grads[v.0] {
            Some(acc) => acc.add_assign(&g)?,
            slot @ None => *slot = Some(g),
        }
        Ok(())
    }

    fn propagate(&self, node: &Node<T>, g: &RealTensor<T>, grads: &mut [Option<RealTensor<T>>]) -> Result<()> {
        match &node.op {
            Op::Leaf | Op::Constant => {}
            Op::MatMul(a, b) => {
                let av = self.value(*a);
                let bv = self.value(*b);
                let (m, k) = av.dims2()?;
                let (_, n) = bv.dims2()?;
                if self.rg(*a) {
                    let mut da = vec![T::zero(); m * k];
                    T::gemm(m, n, k, g.data(), (n as isize, 1), bv.data(), (1, n as isize), T::zero(), &mut da);
                    self.accumulate(grads, *a, RealTensor::new(vec![m, k], da)?)?;
                }
                if self.rg(*b) {
                    let mut db = vec![T::zero(); k * n];
                    T::gemm(k, m, n, av.data(), (1, k as isize), g.data(), (n as isize, 1), T::zero(), &mut db);
                    self.accumulate(grads, *b, RealTensor::new(vec![k, n], db)?)?;
                }
            }
            Op::AddRow(x, b) => {
                self.accumulate(grads, *x, g.clone())?;
                if self.rg(*b) {
                    let bv = self.value(*b);
                    let n = bv.len();
                    let mut db = vec![T::zero(); n];
                    for row in g.data().chunks_exact(n) {
                        db.iter_mut().zip(row).for_each(|(d, &r)| *d += r);
                    }
                    self.accumulate(grads, *b, RealTensor::new(bv.shape().to_vec(), db)?)?;
                }
            }
            Op::Add(a, b) => {
                self.accumulate(grads, *a, g.clone())?;
                self.accumulate(grads, *b, g.clone())?;
            }
            Op::Sub(a, b) => {
                self.accumulate(grads, *a, g.clone())?;
                self.accumulate(grads, *b, g.map(|x| -x))?;
            }
            Op::Mul(a, b) => {
                if self.rg(*a) {
                    self.accumulate(grads, *a, g.zip_map(self.value(*b), |x, y| x * y)?)?;
                }
                if self.rg(*b) {
                    self.accumulate(grads, *b, g.zip_map(self.value(*a), |x, y| x * y)?)?;
                }
            }
            Op::MulConst(a, c) => {
                self.accumulate(grads, *a, g.zip_map(c, |x, y| x * y)?)?;
            }
            Op::Scale(a, s) => {
                let s = *s;
                self.accumulate(grads, *a, g.map(|x| x * s))?;
            }
            Op::Sin(a, f) => {
                let f = *f;
                let d = g.zip_map(self.value(*a), |gx, x| gx * f * (f * x).cos())?;
                self.accumulate(grads, *a, d)?;
            }
            Op::AbsSmooth(a, eps) => {
                let eps = *eps;
                let d = g.zip_map(self.value(*a), |gx, x| gx * abs_smooth_grad(x, eps))?;
                self.accumulate(grads, *a, d)?;
            }
            Op::ComplexAbsSmooth(a, eps) => {
                let input = self.value(*a);
                let mut d = vec![T::zero(); input.len()];
                for ((out, p), &gx) in d.chunks_exact_mut(2).zip(input.data().chunks_exact(2)).zip(g.data()) {
                    let k = gx * modulus_smooth_slope(p[0] * p[0] + p[1] * p[1], *eps);
                    out[0] = k * p[0];
                    out[1] = k * p[1];
                }
                self.accumulate(grads, *a, RealTensor::new(input.shape().to_vec(), d)?)?;
            }
            Op::Sum(a) => {
                let gs = g.data()[0];
                let shape = self.value(*a).shape().to_vec();
                self.accumulate(grads, *a, RealTensor::filled(shape, gs))?;
            }
            Op::Mean(a) => {
                let input = self.value(*a);
                let gs = g.data()[0] / T::lit(input.len() as f64);
                self.accumulate(grads, *a, RealTensor::filled(input.shape().to_vec(), gs))?;
            }
            Op::Gather(a, index) => {
                let input = self.value(*a);
                let mut d = vec![T::zero(); input.len()];
                for (&i, &gx) in index.iter().zip(g.data()) {
                    d[i] += gx;
                }
                self.accumulate(grads, *a, RealTensor::new(input.shape().to_vec(), d)?)?;
            }
            Op::Tikhonov { p, t, factor } => {
                let pm = ComplexMatrix::from_interleaved(self.value(*p))?;
                let tm = ComplexMatrix::from_interleaved(self.value(*t))?;
                let wm = ComplexMatrix::from_interleaved(&node.value)?;
                let gm = ComplexMatrix::from_interleaved(g)?;
                let (dp, dt) = tikhonov_grad_with_factor(&pm, &tm, &wm, &gm, factor)?;
                self.accumulate(grads, *p, dp.to_interleaved())?;
                self.accumulate(grads, *t, dt.to_interleaved())?;
            }
            Op::MeanPairwiseL1 { inputs, eps } => {
                let n = inputs.len();
                let scale = g.data()[0] * T::lit(2.0) / T::lit((n * n) as f64);
                let len = self.value(inputs[0]).len();
                let mut d: Vec<Vec<T>> = vec![vec![T::zero(); len]; n];
                for i in 0..n {
                    for j in i + 1..n {
                        let a = self.value(inputs[i]).data();
                        let b = self.value(inputs[j]).data();
                        for e in 0..len {
                            let s = scale * abs_smooth_grad(a[e] - b[e], *eps);
                            d[i][e] += s;
                            d[j][e] -= s;
                        }
                    }
                }
                for (v, dv) in inputs.iter().zip(d) {
                    let shape = self.value(*v).shape().to_vec();
                    self.accumulate(grads, *v, RealTensor::new(shape, dv)?)?;
                }
            }
        }
        Ok(())
    }
}

/// Converts an interleaved `rows × 2·cols` tensor into complex entries.
pub fn interleaved_to_complex<T: Real>(t: &RealTensor<T>) -> Vec<Complex<T>> {
    t.data().chunks_exact(2).map(|p| Complex::new(p[0], p[1])).collect()
}
