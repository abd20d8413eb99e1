//! Fourier-series KAN layer: every input coordinate passes through its own
//! truncated Fourier series, `y[o] = Σ_i Σ_k a[o,i,k]·cos(k·x_i) + b[o,i,k]·sin(k·x_i) + bias[o]`
//! with `k = 1..=G`. Unlike [`crate::stft_kan`], this is nonlinear in `x`.

use crate::error::{Error, Result};
use crate::ndcore::{Rng, Scalar, Tensor};
use crate::nn::{column_sums, expect_grad, expect_input, Layer, LayerGrads};

const NAME: &str = "fourier_kan";

#[derive(Clone, Debug)]
pub struct FourierKanLayer<T = f32> {
    d_in: usize,
    d_out: usize,
    grid_size: usize,
    a: Tensor<T>,
    b: Tensor<T>,
    bias: Tensor<T>,
}

/// Input batch plus its `cos(k·x)` / `sin(k·x)` features, `[batch × d_in·G]`.
#[derive(Clone, Debug)]
pub struct FourierKanCache<T> {
    cos_feat: Tensor<T>,
    sin_feat: Tensor<T>,
}

/// `2·d_out·d_in·G + d_out`.
pub fn fourier_kan_param_count(d_in: usize, d_out: usize, grid_size: usize) -> usize {
    2 * d_out * d_in * grid_size + d_out
}

impl<T: Scalar> FourierKanLayer<T> {
    /// Coefficients ~ N(0, 1/(d_in·G)), zero bias.
    pub fn init(d_in: usize, d_out: usize, grid_size: usize, rng: &mut Rng) -> Result<Self> {
        if d_in == 0 || d_out == 0 || grid_size == 0 {
            return Err(Error::Config(format!(
                "fourier-kan needs positive sizes, got d_in={d_in} d_out={d_out} G={grid_size}"
            )));
        }
        let shape = [d_out, d_in, grid_size];
        let std = 1.0 / ((d_in * grid_size) as f64).sqrt();
        let a = rng.normal(std, &shape);
        let b = rng.normal(std, &shape);
        Self::from_parts(grid_size, a, b, Tensor::zeros(&[d_out]))
    }

    pub fn from_parts(grid_size: usize, a: Tensor<T>, b: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        let (d_out, d_in) = match a.shape() {
            [o, i, g] if *g == grid_size && *o > 0 && *i > 0 => (*o, *i),
            s => return Err(Error::Dimension(format!("fourier-kan a: bad shape {s:?}"))),
        };
        if b.shape() != a.shape() || bias.shape() != [d_out] {
            return Err(Error::Dimension("fourier-kan: b or bias shape mismatch".into()));
        }
        Ok(FourierKanLayer { d_in, d_out, grid_size, a, b, bias })
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    fn as_matrix(&self, t: &Tensor<T>) -> Tensor<T> {
        t.clone().reshape(&[self.d_out, self.d_in * self.grid_size]).expect("coefficient layout")
    }
}

impl<T: Scalar> Layer<T> for FourierKanLayer<T> {
    type Cache = FourierKanCache<T>;

    fn d_in(&self) -> usize {
        self.d_in
    }

    fn d_out(&self) -> usize {
        self.d_out
    }

    fn forward(&self, x: &Tensor<T>) -> Result<(Tensor<T>, FourierKanCache<T>)> {
        let batch = expect_input(x, self.d_in, NAME)?;
        let g = self.grid_size;
        let mut cos = Vec::with_capacity(x.len() * g);
        let mut sin = Vec::with_capacity(x.len() * g);
        for &xi in x.data() {
            for k in 1..=g {
                let (s, c) = (T::from_f64(k as f64) * xi).sin_cos();
                cos.push(c);
                sin.push(s);
            }
        }
        let shape = [batch, self.d_in * g];
        let cos_feat = Tensor::new(&shape, cos)?;
        let sin_feat = Tensor::new(&shape, sin)?;
        let mut y = cos_feat.matmul_nt(&self.as_matrix(&self.a))?;
        y.add_assign(&sin_feat.matmul_nt(&self.as_matrix(&self.b))?)?;
        y.add_row_vector(&self.bias)?;
        y.check_finite(NAME)?;
        Ok((y, FourierKanCache { cos_feat, sin_feat }))
    }

    fn backward(&self, cache: &FourierKanCache<T>, grad_out: &Tensor<T>) -> Result<LayerGrads<T>> {
        let batch = cache.cos_feat.rows();
        expect_grad(grad_out, batch, self.d_out, NAME)?;
        let shape = [self.d_out, self.d_in, self.grid_size];
        let grad_a = grad_out.matmul_tn(&cache.cos_feat)?.reshape(&shape)?;
        let grad_b = grad_out.matmul_tn(&cache.sin_feat)?.reshape(&shape)?;

        // d cos(kx)/dx = −k·sin(kx), d sin(kx)/dx = k·cos(kx)
        let g_cos = grad_out.matmul(&self.as_matrix(&self.a))?;
        let g_sin = grad_out.matmul(&self.as_matrix(&self.b))?;
        let g = self.grid_size;
        let grad_x: Vec<T> = (0..batch * self.d_in)
            .map(|i| {
                let mut acc = T::zero();
                for k in 0..g {
                    let j = i * g + k;
                    let kk = T::from_f64((k + 1) as f64);
                    acc +=
                        kk * (g_sin.data()[j] * cache.cos_feat.data()[j] - g_cos.data()[j] * cache.sin_feat.data()[j]);
                }
                acc
            })
            .collect();

        Ok(LayerGrads {
            params: vec![grad_a, grad_b, column_sums(grad_out)],
            input: Tensor::new(&[batch, self.d_in], grad_x)?,
        })
    }

    fn params(&self) -> Vec<&Tensor<T>> {
        vec![&self.a, &self.b, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        vec![&mut self.a, &mut self.b, &mut self.bias]
    }
}
