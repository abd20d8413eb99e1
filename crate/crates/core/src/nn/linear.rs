use super::{column_sums, expect_grad, expect_input, Layer, LayerGrads};
use crate::error::{Error, Result};
use crate::ndcore::{Rng, Scalar, Tensor};

const NAME: &str = "linear";

/// `y = x·Wᵀ + b` with `W: [d_out × d_in]`.
#[derive(Clone, Debug)]
pub struct LinearLayer<T = f32> {
    weight: Tensor<T>,
    bias: Tensor<T>,
}

/// The input batch, needed for the weight gradient.
#[derive(Clone, Debug)]
pub struct LinearCache<T> {
    input: Tensor<T>,
}

impl<T: Scalar> LinearLayer<T> {
    /// Weights and bias ~ U(−1/√d_in, 1/√d_in).
    pub fn init(d_in: usize, d_out: usize, rng: &mut Rng) -> Result<Self> {
        if d_in == 0 || d_out == 0 {
            return Err(Error::Config(format!("linear layer needs positive sizes, got {d_in}->{d_out}")));
        }
        let bound = 1.0 / (d_in as f64).sqrt();
        let weight = rng.uniform(-bound, bound, &[d_out, d_in])?;
        let bias = rng.uniform(-bound, bound, &[d_out])?;
        Ok(LinearLayer { weight, bias })
    }

    pub fn from_parts(weight: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        match weight.shape() {
            [o, i] if *o > 0 && *i > 0 && bias.shape() == [*o] => Ok(LinearLayer { weight, bias }),
            s => Err(Error::Dimension(format!("linear: weight {s:?} and bias {:?} do not fit", bias.shape()))),
        }
    }

    pub fn param_count_for(d_in: usize, d_out: usize) -> usize {
        d_out * d_in + d_out
    }

    pub fn weight(&self) -> &Tensor<T> {
        &self.weight
    }

    pub fn bias(&self) -> &Tensor<T> {
        &self.bias
    }
}

impl<T: Scalar> Layer<T> for LinearLayer<T> {
    type Cache = LinearCache<T>;

    fn d_in(&self) -> usize {
        self.weight.cols()
    }

    fn d_out(&self) -> usize {
        self.weight.rows()
    }

    fn forward(&self, x: &Tensor<T>) -> Result<(Tensor<T>, LinearCache<T>)> {
        expect_input(x, self.d_in(), NAME)?;
        let mut y = x.matmul_nt(&self.weight)?;
        y.add_row_vector(&self.bias)?;
        y.check_finite(NAME)?;
        Ok((y, LinearCache { input: x.clone() }))
    }

    fn backward(&self, cache: &LinearCache<T>, grad_out: &Tensor<T>) -> Result<LayerGrads<T>> {
        expect_grad(grad_out, cache.input.rows(), self.d_out(), NAME)?;
        let grad_w = grad_out.matmul_tn(&cache.input)?;
        let grad_x = grad_out.matmul(&self.weight)?;
        Ok(LayerGrads { params: vec![grad_w, column_sums(grad_out)], input: grad_x })
    }

    fn params(&self) -> Vec<&Tensor<T>> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        vec![&mut self.weight, &mut self.bias]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_weight_adds_bias() {
        let bias = Tensor::from_f64(&[3], &[1., -1., 0.5]).unwrap();
        let layer = LinearLayer::<f64>::from_parts(Tensor::identity(3), bias).unwrap();
        let x = Tensor::from_f64(&[1, 3], &[2., 3., 4.]).unwrap();
        assert_eq!(layer.infer(&x).unwrap().data(), &[3., 2., 4.5]);
        assert_eq!(layer.infer(&Tensor::zeros(&[1, 3])).unwrap().data(), &[1., -1., 0.5]);
    }

    #[test]
    fn param_count() {
        let layer = LinearLayer::<f32>::init(64, 128, &mut Rng::new(0)).unwrap();
        assert_eq!(layer.param_count(), 8_320);
        assert_eq!(LinearLayer::<f32>::param_count_for(2048, 7), 14_343);
    }

    #[test]
    fn shape_errors() {
        let layer = LinearLayer::<f32>::init(3, 2, &mut Rng::new(0)).unwrap();
        assert!(matches!(layer.forward(&Tensor::zeros(&[1, 4])), Err(Error::Dimension(_))));
        assert!(LinearLayer::from_parts(Tensor::<f32>::zeros(&[2, 3]), Tensor::zeros(&[3])).is_err());
    }
}
