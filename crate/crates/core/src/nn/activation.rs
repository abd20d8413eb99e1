use crate::error::{Error, Result};
use crate::ndcore::{Scalar, Tensor};

pub fn relu_forward<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    x.map(|v| if v > T::zero() { v } else { T::zero() })
}

/// Gradient through ReLU given its forward output; the subgradient at 0 is 0.
pub fn relu_backward<T: Scalar>(output: &Tensor<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    if output.shape() != grad_out.shape() {
        return Err(Error::Dimension(format!("relu: output {:?} vs gradient {:?}", output.shape(), grad_out.shape())));
    }
    let data =
        output.data().iter().zip(grad_out.data()).map(|(&y, &g)| if y > T::zero() { g } else { T::zero() }).collect();
    Tensor::new(output.shape(), data)
}
