//! The STFT-KAN layer.
//!
//! An input vector is cut into `N_w` frames of `W` samples spaced `S` apart,
//! each frame is tapered by a window `h`, projected onto `G` cosine and `G`
//! sine harmonics, and the projections are mixed by trainable per-output
//! coefficients:
//!
//! ```text
//! y[o] = Σ_w Σ_k a[o,w,k]·Ycos[w,k] + b[o,w,k]·Ysin[w,k] + bias[o]
//! Ycos[w,k] = Σ_n h[n]·x[w·S + n]·cos(2πkn/W)
//! ```
//!
//! For fixed coefficients the layer is linear in `x`. Inputs shorter than
//! the framed length `L = (N_w − 1)·S + W` are zero-padded at the tail,
//! longer inputs lose their tail.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::ndcore::{Rng, Scalar, Tensor};
use crate::nn::{column_sums, expect_grad, expect_input, Layer, LayerGrads};
use crate::windows::{make_window, WindowKind, WindowSpec, DEFAULT_KAISER_BETA};

const NAME: &str = "stft_kan";

/// Frame count `N_w` and framed length `L` for an input of `d_in` samples.
///
/// Inputs shorter than one window are treated as a single padded frame.
pub fn num_windows(d_in: usize, window_size: usize, stride: usize) -> (usize, usize) {
    let n_w = (d_in.max(window_size) - window_size) / stride + 1;
    (n_w, (n_w - 1) * stride + window_size)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StftKanConfig {
    pub d_in: usize,
    pub d_out: usize,
    pub window_size: usize,
    pub stride: usize,
    pub grid_size: usize,
    pub window: WindowKind,
    pub kaiser_beta: f64,
    pub smooth_init: bool,
    pub use_bias: bool,
}

impl StftKanConfig {
    /// Config with bias on, smooth initialisation off and the default Kaiser beta.
    pub fn new(
        d_in: usize,
        d_out: usize,
        window_size: usize,
        stride: usize,
        grid_size: usize,
        window: WindowKind,
    ) -> Self {
        StftKanConfig {
            d_in,
            d_out,
            window_size,
            stride,
            grid_size,
            window,
            kaiser_beta: DEFAULT_KAISER_BETA,
            smooth_init: false,
            use_bias: true,
        }
    }

    pub fn smooth(mut self, on: bool) -> Self {
        self.smooth_init = on;
        self
    }

    pub fn bias(mut self, on: bool) -> Self {
        self.use_bias = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("stft-kan: {what}")));
        if self.d_in == 0 {
            return bad("d_in must be >= 1");
        }
        if self.d_out == 0 {
            return bad("d_out must be >= 1");
        }
        if self.window_size == 0 {
            return bad("window size must be >= 1");
        }
        if self.stride == 0 {
            return bad("stride must be >= 1");
        }
        if self.grid_size == 0 {
            return bad("grid size must be >= 1");
        }
        if !(self.kaiser_beta >= 0.0 && self.kaiser_beta.is_finite()) {
            return bad("kaiser beta must be finite and >= 0");
        }
        Ok(())
    }

    pub fn num_windows(&self) -> usize {
        num_windows(self.d_in, self.window_size, self.stride).0
    }

    pub fn framed_len(&self) -> usize {
        num_windows(self.d_in, self.window_size, self.stride).1
    }

    /// `2·d_out·N_w·G`, plus `d_out` with bias.
    pub fn param_count(&self) -> usize {
        2 * self.d_out * self.num_windows() * self.grid_size + if self.use_bias { self.d_out } else { 0 }
    }

    pub fn window_spec(&self) -> WindowSpec {
        WindowSpec { kind: self.window, width: self.window_size, beta: self.kaiser_beta }
    }
}

/// `(cos, sin)` of `2π·r/W` with exact values on the quarter points, so that
/// e.g. the sine basis at `W = 2` is identically zero.
fn harmonic(r: usize, w: usize) -> (f64, f64) {
    if r == 0 {
        (1.0, 0.0)
    } else if 2 * r == w {
        (-1.0, 0.0)
    } else if 4 * r == w {
        (0.0, 1.0)
    } else if 4 * r == 3 * w {
        (0.0, -1.0)
    } else {
        let (s, c) = (2.0 * PI * r as f64 / w as f64).sin_cos();
        (c, s)
    }
}

/// `[G × W]` cosine and sine bases for harmonics `k = 1..=G`.
pub fn harmonic_basis<T: Scalar>(grid_size: usize, window_size: usize) -> (Tensor<T>, Tensor<T>) {
    let mut cos = Vec::with_capacity(grid_size * window_size);
    let mut sin = Vec::with_capacity(grid_size * window_size);
    for k in 1..=grid_size {
        for n in 0..window_size {
            let (c, s) = harmonic((k * n) % window_size, window_size);
            cos.push(T::from_f64(c));
            sin.push(T::from_f64(s));
        }
    }
    let shape = [grid_size, window_size];
    (Tensor::new(&shape, cos).unwrap(), Tensor::new(&shape, sin).unwrap())
}

/// Windowed frames `[N_w × W]` of a single signal.
pub fn frame<T: Scalar>(x: &[T], cfg: &StftKanConfig) -> Result<Tensor<T>> {
    if x.len() != cfg.d_in {
        return Err(Error::Dimension(format!("frame: signal has {} samples, config expects {}", x.len(), cfg.d_in)));
    }
    cfg.validate()?;
    let h: Vec<T> = make_window(&cfg.window_spec())?.into_iter().map(T::from_f64).collect();
    let (n_w, w, s) = (cfg.num_windows(), cfg.window_size, cfg.stride);
    let mut out = Vec::with_capacity(n_w * w);
    for win in 0..n_w {
        for (n, &hn) in h.iter().enumerate() {
            let v = x.get(win * s + n).copied().unwrap_or_else(T::zero);
            out.push(hn * v);
        }
    }
    Tensor::new(&[n_w, w], out)
}

#[derive(Clone, Debug)]
pub struct StftKanLayer<T = f32> {
    config: StftKanConfig,
    num_windows: usize,
    /// `[d_out × N_w × G]` cosine coefficients.
    a: Tensor<T>,
    /// `[d_out × N_w × G]` sine coefficients.
    b: Tensor<T>,
    bias: Option<Tensor<T>>,
    window: Vec<T>,
    cos_basis: Tensor<T>,
    sin_basis: Tensor<T>,
}

/// Harmonic projections of the last forward batch, `[batch × N_w·G]` each.
#[derive(Clone, Debug)]
pub struct StftKanCache<T> {
    cos_proj: Tensor<T>,
    sin_proj: Tensor<T>,
}

impl<T: Scalar> StftKanLayer<T> {
    /// Coefficients ~ N(0, σ²) with σ = 1/√(N_w·G·W); with smooth
    /// initialisation harmonic `k` is additionally scaled by `k⁻²`.
    /// The bias starts at zero.
    pub fn init(config: StftKanConfig, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let n_w = config.num_windows();
        let g = config.grid_size;
        let shape = [config.d_out, n_w, g];
        let std = 1.0 / ((n_w * g * config.window_size) as f64).sqrt();
        let mut a = rng.normal::<T>(std, &shape);
        let mut b = rng.normal::<T>(std, &shape);
        if config.smooth_init {
            for t in [&mut a, &mut b] {
                for (i, v) in t.data_mut().iter_mut().enumerate() {
                    let k = (i % g + 1) as f64;
                    *v *= T::from_f64(1.0 / (k * k));
                }
            }
        }
        let bias = config.use_bias.then(|| Tensor::zeros(&[config.d_out]));
        Self::from_parts(config, a, b, bias)
    }

    /// Assembles a layer from explicit coefficients.
    pub fn from_parts(config: StftKanConfig, a: Tensor<T>, b: Tensor<T>, bias: Option<Tensor<T>>) -> Result<Self> {
        config.validate()?;
        let n_w = config.num_windows();
        let shape = [config.d_out, n_w, config.grid_size];
        for (name, t) in [("a", &a), ("b", &b)] {
            if t.shape() != shape {
                return Err(Error::Dimension(format!("stft-kan {name}: expected {shape:?}, got {:?}", t.shape())));
            }
        }
        match (&bias, config.use_bias) {
            (Some(t), true) if t.shape() == [config.d_out] => {}
            (None, false) => {}
            _ => return Err(Error::Dimension("stft-kan bias does not match config (presence or length)".into())),
        }
        let window = make_window(&config.window_spec())?.into_iter().map(T::from_f64).collect();
        let (cos_basis, sin_basis) = harmonic_basis(config.grid_size, config.window_size);
        Ok(StftKanLayer { num_windows: n_w, a, b, bias, window, cos_basis, sin_basis, config })
    }

    pub fn config(&self) -> &StftKanConfig {
        &self.config
    }

    pub fn num_windows(&self) -> usize {
        self.num_windows
    }

    pub fn a(&self) -> &Tensor<T> {
        &self.a
    }

    pub fn b(&self) -> &Tensor<T> {
        &self.b
    }

    pub fn bias(&self) -> Option<&Tensor<T>> {
        self.bias.as_ref()
    }

    pub fn window(&self) -> &[T] {
        &self.window
    }

    fn coeff_width(&self) -> usize {
        self.num_windows * self.config.grid_size
    }

    /// Coefficients viewed as `[d_out × N_w·G]`.
    fn as_matrix(&self, t: &Tensor<T>) -> Tensor<T> {
        t.clone().reshape(&[self.config.d_out, self.coeff_width()]).expect("coefficient layout")
    }

    /// Windowed frames of every row, `[batch·N_w × W]`.
    fn frames(&self, x: &Tensor<T>, batch: usize) -> Tensor<T> {
        let (d_in, w, s, n_w) = (self.config.d_in, self.config.window_size, self.config.stride, self.num_windows);
        let mut out = Vec::with_capacity(batch * n_w * w);
        for r in 0..batch {
            let row = &x.data()[r * d_in..(r + 1) * d_in];
            for win in 0..n_w {
                let start = win * s;
                for (n, &h) in self.window.iter().enumerate() {
                    let v = row.get(start + n).copied().unwrap_or_else(T::zero);
                    out.push(h * v);
                }
            }
        }
        Tensor::new(&[batch * n_w, w], out).expect("frame layout")
    }

    /// The dense `[d_out × d_in]` matrix this layer applies (bias excluded).
    pub fn effective_matrix(&self) -> Tensor<T> {
        let c = &self.config;
        let (n_w, g, w) = (self.num_windows, c.grid_size, c.window_size);
        let mut m = vec![T::zero(); c.d_out * c.d_in];
        for o in 0..c.d_out {
            for win in 0..n_w {
                for n in 0..w {
                    let pos = win * c.stride + n;
                    if pos >= c.d_in {
                        continue;
                    }
                    let mut acc = T::zero();
                    for k in 0..g {
                        let ix = (o * n_w + win) * g + k;
                        acc += self.a.data()[ix] * self.cos_basis.data()[k * w + n]
                            + self.b.data()[ix] * self.sin_basis.data()[k * w + n];
                    }
                    m[o * c.d_in + pos] += self.window[n] * acc;
                }
            }
        }
        Tensor::new(&[c.d_out, c.d_in], m).expect("matrix layout")
    }
}

impl<T: Scalar> Layer<T> for StftKanLayer<T> {
    type Cache = StftKanCache<T>;

    fn d_in(&self) -> usize {
        self.config.d_in
    }

    fn d_out(&self) -> usize {
        self.config.d_out
    }

    fn forward(&self, x: &Tensor<T>) -> Result<(Tensor<T>, StftKanCache<T>)> {
        let batch = expect_input(x, self.config.d_in, NAME)?;
        let frames = self.frames(x, batch);
        let width = self.coeff_width();
        let cos_proj = frames.matmul_nt(&self.cos_basis)?.reshape(&[batch, width])?;
        let sin_proj = frames.matmul_nt(&self.sin_basis)?.reshape(&[batch, width])?;
        let mut y = cos_proj.matmul_nt(&self.as_matrix(&self.a))?;
        y.add_assign(&sin_proj.matmul_nt(&self.as_matrix(&self.b))?)?;
        if let Some(bias) = &self.bias {
            y.add_row_vector(bias)?;
        }
        y.check_finite(NAME)?;
        Ok((y, StftKanCache { cos_proj, sin_proj }))
    }

    fn backward(&self, cache: &StftKanCache<T>, grad_out: &Tensor<T>) -> Result<LayerGrads<T>> {
        let c = &self.config;
        let batch = cache.cos_proj.rows();
        expect_grad(grad_out, batch, c.d_out, NAME)?;
        let (n_w, g) = (self.num_windows, c.grid_size);
        let shape = [c.d_out, n_w, g];

        let grad_a = grad_out.matmul_tn(&cache.cos_proj)?.reshape(&shape)?;
        let grad_b = grad_out.matmul_tn(&cache.sin_proj)?.reshape(&shape)?;

        // Back through the harmonic projection into the windowed frames.
        let g_cos = grad_out.matmul(&self.as_matrix(&self.a))?.reshape(&[batch * n_w, g])?;
        let g_sin = grad_out.matmul(&self.as_matrix(&self.b))?.reshape(&[batch * n_w, g])?;
        let mut g_frames = g_cos.matmul(&self.cos_basis)?;
        g_frames.add_assign(&g_sin.matmul(&self.sin_basis)?)?;

        // Overlapping frames accumulate; padded positions fall off the end.
        let mut grad_x = vec![T::zero(); batch * c.d_in];
        for r in 0..batch {
            let gx = &mut grad_x[r * c.d_in..(r + 1) * c.d_in];
            for win in 0..n_w {
                let gf = g_frames.row(r * n_w + win);
                for (n, (&wn, &g)) in self.window.iter().zip(gf).enumerate() {
                    let pos = win * c.stride + n;
                    if pos < c.d_in {
                        gx[pos] += wn * g;
                    }
                }
            }
        }

        let mut params = vec![grad_a, grad_b];
        if self.bias.is_some() {
            params.push(column_sums(grad_out));
        }
        Ok(LayerGrads { params, input: Tensor::new(&[batch, c.d_in], grad_x)? })
    }

    fn params(&self) -> Vec<&Tensor<T>> {
        let mut p = vec![&self.a, &self.b];
        p.extend(self.bias.as_ref());
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut p = vec![&mut self.a, &mut self.b];
        p.extend(self.bias.as_mut());
        p
    }
}
