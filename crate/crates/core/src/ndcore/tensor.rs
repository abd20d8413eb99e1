use rayon::prelude::*;

use super::Scalar;
use crate::error::{Error, Result};

/// Work (multiply-adds) below which matrix products stay on the calling thread.
const PAR_THRESHOLD: usize = 1 << 16;

/// Dense row-major tensor. `shape.iter().product() == data.len()` always holds.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T = f32> {
    shape: Vec<usize>,
    data: Vec<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReduceKind {
    Max,
    Mean,
    Sum,
}

/// Output of [`Tensor::reduce`]. `argmax` is populated only for [`ReduceKind::Max`].
#[derive(Clone, Debug)]
pub struct Reduced<T> {
    pub values: Tensor<T>,
    pub argmax: Option<Vec<usize>>,
}

impl<T: Scalar> Tensor<T> {
    pub fn new(shape: &[usize], data: Vec<T>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::Dimension(format!("shape {shape:?} needs {expected} values, got {}", data.len())));
        }
        Ok(Tensor { shape: shape.to_vec(), data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::filled(shape, T::zero())
    }

    pub fn filled(shape: &[usize], value: T) -> Self {
        Tensor { shape: shape.to_vec(), data: vec![value; shape.iter().product()] }
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Self::zeros(&[n, n]);
        for i in 0..n {
            t.data[i * n + i] = T::one();
        }
        t
    }

    pub fn from_f64(shape: &[usize], data: &[f64]) -> Result<Self> {
        Self::new(shape, data.iter().map(|&x| T::from_f64(x)).collect())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Leading extent of a 2-D tensor.
    pub fn rows(&self) -> usize {
        self.shape.first().copied().unwrap_or(1)
    }

    /// Trailing extent of a 2-D tensor.
    pub fn cols(&self) -> usize {
        self.shape.get(1).copied().unwrap_or(1)
    }

    pub fn row(&self, i: usize) -> &[T] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn reshape(mut self, shape: &[usize]) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != self.data.len() {
            return Err(Error::Dimension(format!("cannot reshape {:?} into {shape:?}", self.shape)));
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor { shape: self.shape.clone(), data: self.data.iter().map(|&x| U::from_f64(x.to_f64())).collect() }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Fails with [`Error::NonFinite`] naming `what` if any element is NaN or infinite.
    pub fn check_finite(&self, what: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::non_finite(what))
        }
    }

    fn expect_2d(&self, op: &str) -> Result<(usize, usize)> {
        match self.shape.as_slice() {
            [r, c] => Ok((*r, *c)),
            s => Err(Error::Dimension(format!("{op} expects a 2-D tensor, got shape {s:?}"))),
        }
    }

    pub fn transpose(&self) -> Result<Self> {
        let (r, c) = self.expect_2d("transpose")?;
        let mut data = vec![T::zero(); r * c];
        for i in 0..r {
            for j in 0..c {
                data[j * r + i] = self.data[i * c + j];
            }
        }
        Ok(Tensor { shape: vec![c, r], data })
    }

    /// Matrix product `self · other`.
    ///
    /// Each output row is accumulated independently in a fixed order, so the
    /// result is bitwise identical for any rayon thread count.
    pub fn matmul(&self, other: &Tensor<T>) -> Result<Self> {
        let (m, k) = self.expect_2d("matmul")?;
        let (k2, p) = other.expect_2d("matmul")?;
        if k != k2 {
            return Err(Error::Dimension(format!(
                "matmul inner dimensions differ: {:?} x {:?}",
                self.shape, other.shape
            )));
        }
        let mut out = vec![T::zero(); m * p];
        if p > 0 {
            let b = &other.data;
            let row_kernel = |(i, row): (usize, &mut [T])| {
                let a_row = &self.data[i * k..(i + 1) * k];
                for (kk, &a) in a_row.iter().enumerate() {
                    if a == T::zero() {
                        continue;
                    }
                    let b_row = &b[kk * p..(kk + 1) * p];
                    for (o, &bv) in row.iter_mut().zip(b_row) {
                        *o += a * bv;
                    }
                }
            };
            if m * k * p >= PAR_THRESHOLD {
                out.par_chunks_mut(p).enumerate().for_each(row_kernel);
            } else {
                out.chunks_mut(p).enumerate().for_each(row_kernel);
            }
        }
        let t = Tensor { shape: vec![m, p], data: out };
        t.check_finite("matmul")?;
        Ok(t)
    }

    /// `selfᵀ · other` without materialising the caller-visible transpose.
    pub fn matmul_tn(&self, other: &Tensor<T>) -> Result<Self> {
        self.transpose()?.matmul(other)
    }

    /// `self · otherᵀ`.
    pub fn matmul_nt(&self, other: &Tensor<T>) -> Result<Self> {
        self.matmul(&other.transpose()?)
    }

    fn zip_with(&self, other: &Tensor<T>, op: &str, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::Dimension(format!("{op}: shapes {:?} and {:?} differ", self.shape, other.shape)));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        let t = Tensor { shape: self.shape.clone(), data };
        t.check_finite(op)?;
        Ok(t)
    }

    pub fn add(&self, other: &Tensor<T>) -> Result<Self> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor<T>) -> Result<Self> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    pub fn mul(&self, other: &Tensor<T>) -> Result<Self> {
        self.zip_with(other, "mul", |a, b| a * b)
    }

    /// In-place `self += other`.
    pub fn add_assign(&mut self, other: &Tensor<T>) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::Dimension(format!("add_assign: shapes {:?} and {:?} differ", self.shape, other.shape)));
        }
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|x| x * s)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Tensor { shape: self.shape.clone(), data: self.data.iter().map(|&x| f(x)).collect() }
    }

    /// Adds `bias` (length = last extent) to every row of a 2-D tensor.
    pub fn add_row_vector(&mut self, bias: &Tensor<T>) -> Result<()> {
        let (_, c) = self.expect_2d("add_row_vector")?;
        if bias.len() != c {
            return Err(Error::Dimension(format!("row vector of length {} does not match {c} columns", bias.len())));
        }
        for row in self.data.chunks_mut(c) {
            for (x, &b) in row.iter_mut().zip(&bias.data) {
                *x += b;
            }
        }
        Ok(())
    }

    /// Reduces along `axis`, removing it from the shape.
    ///
    /// `Max` also reports, for every output element, the position along
    /// `axis` that produced it; ties go to the lowest index.
    pub fn reduce(&self, axis: usize, kind: ReduceKind) -> Result<Reduced<T>> {
        if axis >= self.shape.len() {
            return Err(Error::Dimension(format!("axis {axis} out of range for shape {:?}", self.shape)));
        }
        let extent = self.shape[axis];
        if extent == 0 {
            return Err(Error::Dimension(format!("cannot reduce over empty axis {axis}")));
        }
        let outer: usize = self.shape[..axis].iter().product();
        let inner: usize = self.shape[axis + 1..].iter().product();
        let mut out_shape = self.shape.clone();
        out_shape.remove(axis);

        let mut values = vec![T::zero(); outer * inner];
        let mut argmax = (kind == ReduceKind::Max).then(|| vec![0usize; outer * inner]);
        for o in 0..outer {
            for i in 0..inner {
                let at = |e: usize| self.data[(o * extent + e) * inner + i];
                let slot = o * inner + i;
                match kind {
                    ReduceKind::Max => {
                        let (mut best, mut best_e) = (at(0), 0);
                        for e in 1..extent {
                            if at(e) > best {
                                best = at(e);
                                best_e = e;
                            }
                        }
                        values[slot] = best;
                        if let Some(a) = argmax.as_mut() {
                            a[slot] = best_e;
                        }
                    }
                    ReduceKind::Sum | ReduceKind::Mean => {
                        let mut acc = T::zero();
                        for e in 0..extent {
                            acc += at(e);
                        }
                        if kind == ReduceKind::Mean {
                            acc = acc / T::from_f64(extent as f64);
                        }
                        values[slot] = acc;
                    }
                }
            }
        }
        let values = Tensor { shape: out_shape, data: values };
        values.check_finite("reduce")?;
        Ok(Reduced { values, argmax })
    }
}
