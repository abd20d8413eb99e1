//! Conventional building blocks: dense layer, ReLU, weighted softmax
//! cross-entropy, Adam and the cosine learning-rate schedule.

mod activation;
mod linear;
mod loss;
mod optim;

pub use activation::{relu_backward, relu_forward};
pub use linear::{LinearCache, LinearLayer};
pub use loss::{weighted_cross_entropy, CrossEntropy};
pub use optim::{AdamConfig, AdamState, LrSchedule};

use crate::error::Result;
use crate::ndcore::{Scalar, Tensor};

/// Gradients produced by [`Layer::backward`].
#[derive(Clone, Debug)]
pub struct LayerGrads<T> {
    /// One tensor per entry of [`Layer::params`], same order and shape.
    pub params: Vec<Tensor<T>>,
    /// Gradient with respect to the layer input.
    pub input: Tensor<T>,
}

/// A trainable map from `[batch × d_in]` to `[batch × d_out]`.
pub trait Layer<T: Scalar> {
    /// Whatever the backward pass needs from the forward pass.
    type Cache;

    fn d_in(&self) -> usize;
    fn d_out(&self) -> usize;

    fn forward(&self, x: &Tensor<T>) -> Result<(Tensor<T>, Self::Cache)>;

    fn backward(&self, cache: &Self::Cache, grad_out: &Tensor<T>) -> Result<LayerGrads<T>>;

    fn params(&self) -> Vec<&Tensor<T>>;

    fn params_mut(&mut self) -> Vec<&mut Tensor<T>>;

    fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// Forward without keeping a cache.
    fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.forward(x).map(|(y, _)| y)
    }
}

/// Column sums of a 2-D tensor, the bias gradient of any affine layer.
pub(crate) fn column_sums<T: Scalar>(g: &Tensor<T>) -> Tensor<T> {
    let c = g.cols();
    let mut out = vec![T::zero(); c];
    for row in g.data().chunks(c.max(1)) {
        for (o, &v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
    Tensor::new(&[c], out).expect("length matches")
}

pub(crate) fn expect_input<T: Scalar>(x: &Tensor<T>, d_in: usize, layer: &str) -> Result<usize> {
    use crate::error::Error;
    match x.shape() {
        [b, d] if *d == d_in => {
            x.check_finite(layer)?;
            Ok(*b)
        }
        s => Err(Error::Dimension(format!("{layer} expects [batch x {d_in}], got {s:?}"))),
    }
}

pub(crate) fn expect_grad<T: Scalar>(g: &Tensor<T>, rows: usize, d_out: usize, layer: &str) -> Result<()> {
    use crate::error::Error;
    if g.shape() != [rows, d_out] {
        return Err(Error::Dimension(format!(
            "{layer}: gradient shape {:?} does not match output [{rows} x {d_out}]",
            g.shape()
        )));
    }
    Ok(())
}
