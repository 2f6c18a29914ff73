use num_complex::Complex;

use super::RealTensor;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> ComplexMatrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "{rows}x{cols} matrix from {} entries",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::new(T::zero(), T::zero()); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex<T>) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let n = rhs.cols;
        let mut out = Self::zeros(self.rows, n);
        for i in 0..self.rows {
            let orow = &mut out.data[i * n..(i + 1) * n];
            for (l, &a) in self.row(i).iter().enumerate() {
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                for (o, &b) in orow.iter_mut().zip(rhs.row(l)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᴴ · rhs` without materializing the adjoint.
    pub fn adjoint_matmul(&self, rhs: &Self) -> Result<Self> {
        if self.rows != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "({}x{})ᴴ times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let (k, n) = (self.cols, rhs.cols);
        let mut out = Self::zeros(k, n);
        for r in 0..self.rows {
            let prow = self.row(r);
            let trow = rhs.row(r);
            for (i, &p) in prow.iter().enumerate() {
                let pc = p.conj();
                let orow = &mut out.data[i * n..(i + 1) * n];
                for (o, &t) in orow.iter_mut().zip(trow) {
                    *o += pc * t;
                }
            }
        }
        Ok(out)
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.check_same(rhs)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
        })
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.check_same(rhs)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect(),
        })
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&a| a * s).collect(),
        }
    }

    /// Frobenius norm.
    pub fn norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    fn check_same(&self, rhs: &Self) -> Result<()> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(())
    }

    /// Interleaved real layout: `rows × 2·cols`, `(re, im)` pairs.
    pub fn to_interleaved(&self) -> RealTensor<T> {
        let data = self.data.iter().flat_map(|z| [z.re, z.im]).collect();
        RealTensor::new(vec![self.rows, 2 * self.cols], data).expect("consistent shape")
    }

    pub fn from_interleaved(t: &RealTensor<T>) -> Result<Self> {
        let (rows, c2) = t.dims2()?;
        if c2 % 2 != 0 {
            return Err(Error::ShapeMismatch(format!(
                "interleaved complex matrix needs an even column count, got {c2}"
            )));
        }
        let data = t
            .data()
            .chunks_exact(2)
            .map(|p| Complex::new(p[0], p[1]))
            .collect();
        Ok(Self {
            rows,
            cols: c2 / 2,
            data,
        })
    }
}

/// Lower Cholesky factor `L` of a Hermitian positive-definite matrix, `A = L·Lᴴ`.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    n: usize,
    l: Vec<Complex<T>>,
}

impl<T: Real> Cholesky<T> {
    pub fn factor(a: &ComplexMatrix<T>) -> Result<Self> {
        if a.rows != a.cols {
            return Err(Error::DimensionMismatch(format!(
                "Cholesky of non-square {}x{}",
                a.rows, a.cols
            )));
        }
        let n = a.rows;
        let mut l = vec![Complex::new(T::zero(), T::zero()); n * n];
        for j in 0..n {
            let mut d = a.get(j, j).re;
            for k in 0..j {
                d -= l[j * n + k].norm_sqr();
            }
            if !(d > T::zero()) || !d.is_finite() {
                return Err(Error::SingularSystem {
                    pivot: j,
                    value: d.as_f64(),
                });
            }
            let djj = d.sqrt();
            l[j * n + j] = Complex::new(djj, T::zero());
            for i in j + 1..n {
                let mut s = a.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = s / djj;
            }
        }
        Ok(Self { n, l })
    }

    /// Smallest squared pivot, a cheap lower-end conditioning indicator.
    pub fn min_pivot_sq(&self) -> T {
        (0..self.n)
            .map(|i| self.l[i * self.n + i].re.powi(2))
            .fold(T::infinity(), T::min)
    }

    /// Solves `A·X = B` in place.
    pub fn solve_in_place(&self, b: &mut ComplexMatrix<T>) -> Result<()> {
        let n = self.n;
        if b.rows != n {
            return Err(Error::DimensionMismatch(format!(
                "rhs has {} rows, factor is {n}x{n}",
                b.rows
            )));
        }
        let m = b.cols;
        // L·Y = B
        for i in 0..n {
            for k in 0..i {
                let lik = self.l[i * n + k];
                for c in 0..m {
                    let yk = b.data[k * m + c];
                    b.data[i * m + c] -= lik * yk;
                }
            }
            let d = self.l[i * n + i].re;
            for c in 0..m {
                b.data[i * m + c] /= d;
            }
        }
        // Lᴴ·X = Y
        for i in (0..n).rev() {
            for k in i + 1..n {
                let lki = self.l[k * n + i].conj();
                for c in 0..m {
                    let xk = b.data[k * m + c];
                    b.data[i * m + c] -= lki * xk;
                }
            }
            let d = self.l[i * n + i].re;
            for c in 0..m {
                b.data[i * m + c] /= d;
            }
        }
        Ok(())
    }
}
