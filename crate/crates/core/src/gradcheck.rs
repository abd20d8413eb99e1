//! Central finite-difference checks of every analytic gradient, in 64-bit.
//!
//! Each layer is checked against the scalar objective `Σ y ⊙ R` for a fixed
//! random `R`, so the upstream gradient is `R` itself. The end-to-end model is
//! checked against the weighted cross-entropy loss.

use crate::error::Result;
use crate::fourier_kan::FourierKanLayer;
use crate::graph;
use crate::model::{LiteDgcnn, ModelConfig, ModelVariant};
use crate::ndcore::{Rng, Tensor};
use crate::nn::{relu_backward, relu_forward, weighted_cross_entropy, Layer, LinearLayer};
use crate::stft_kan::{StftKanConfig, StftKanLayer};
use crate::windows::WindowKind;

/// Finite-difference step.
pub const STEP: f64 = 1e-6;
/// Largest accepted relative error.
pub const TOLERANCE: f64 = 1e-4;
/// Denominator floor of the relative error. Rounding in a central difference
/// of an O(1) loss at this step is about `ε/STEP ≈ 2e-10`, so gradients below
/// the floor compare on an absolute scale.
pub const REL_FLOOR: f64 = 1e-5;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Outcome of comparing one group of analytic gradients with finite differences.
#[derive(Clone, Debug)]
pub struct GradCheck {
    pub name: String,
    pub entries: usize,
    pub max_rel_error: f64,
}

impl GradCheck {
    pub fn passed(&self) -> bool {
        self.max_rel_error < TOLERANCE
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    pub checks: Vec<GradCheck>,
    /// Largest |∂/∂b| for a layer with `W = 2`, whose sine basis vanishes.
    pub dead_sine_max_abs: f64,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.dead_sine_max_abs == 0.0 && self.checks.iter().all(GradCheck::passed)
    }

    pub fn max_rel_error(&self) -> f64 {
        self.checks.iter().map(|c| c.max_rel_error).fold(0.0, f64::max)
    }
}

/// Anything whose tensors can be perturbed in place.
pub trait Perturb {
    fn tensors_mut(&mut self) -> Vec<&mut Tensor<f64>>;
}

impl<L: Layer<f64>> Perturb for L {
    fn tensors_mut(&mut self) -> Vec<&mut Tensor<f64>> {
        self.params_mut()
    }
}

impl Perturb for LiteDgcnn<f64> {
    fn tensors_mut(&mut self) -> Vec<&mut Tensor<f64>> {
        self.params_mut()
    }
}

impl Perturb for Tensor<f64> {
    fn tensors_mut(&mut self) -> Vec<&mut Tensor<f64>> {
        vec![self]
    }
}

/// Central differences of `f` with respect to every entry of `m`'s tensors.
pub fn numeric_grads<M: Perturb>(m: &mut M, f: impl Fn(&M) -> Result<f64>) -> Result<Vec<Tensor<f64>>> {
    let shapes: Vec<Vec<usize>> = m.tensors_mut().iter().map(|t| t.shape().to_vec()).collect();
    let mut out = Vec::with_capacity(shapes.len());
    for (ti, shape) in shapes.iter().enumerate() {
        let len = shape.iter().product();
        let mut g = Vec::with_capacity(len);
        for j in 0..len {
            let orig = m.tensors_mut()[ti].data()[j];
            m.tensors_mut()[ti].data_mut()[j] = orig + STEP;
            let plus = f(m)?;
            m.tensors_mut()[ti].data_mut()[j] = orig - STEP;
            let minus = f(m)?;
            m.tensors_mut()[ti].data_mut()[j] = orig;
            g.push((plus - minus) / (2.0 * STEP));
        }
        out.push(Tensor::new(shape, g)?);
    }
    Ok(out)
}

pub fn compare(name: impl Into<String>, analytic: &[Tensor<f64>], numeric: &[Tensor<f64>]) -> GradCheck {
    assert_eq!(analytic.len(), numeric.len(), "gradient groups differ in length");
    let mut entries = 0;
    let mut worst = 0.0f64;
    for (a, n) in analytic.iter().zip(numeric) {
        assert_eq!(a.shape(), n.shape(), "gradient shapes differ");
        for (&x, &y) in a.data().iter().zip(n.data()) {
            worst = worst.max(relative_error(x, y));
            entries += 1;
        }
    }
    GradCheck { name: name.into(), entries, max_rel_error: worst }
}

fn dot(a: &Tensor<f64>, b: &Tensor<f64>) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

/// Parameter and input gradients of `layer` at `x`.
pub fn check_layer<L: Layer<f64>>(name: &str, layer: &mut L, x: &Tensor<f64>, rng: &mut Rng) -> Result<Vec<GradCheck>> {
    let (y, cache) = layer.forward(x)?;
    let r = rng.uniform::<f64>(-1.0, 1.0, y.shape())?;
    let grads = layer.backward(&cache, &r)?;
    let objective = |l: &L, x: &Tensor<f64>| -> Result<f64> { Ok(dot(&l.infer(x)?, &r)) };

    let num_params = numeric_grads(layer, |l| objective(l, x))?;
    let mut probe = x.clone();
    let num_input = numeric_grads(&mut probe, |x| objective(layer, x))?;
    Ok(vec![
        compare(format!("{name} params"), &grads.params, &num_params),
        compare(format!("{name} input"), &[grads.input], &num_input),
    ])
}

/// Gradient of `Σ op(x) ⊙ R` for a parameter-free op with a known backward.
fn check_op(
    name: &str,
    x: &Tensor<f64>,
    rng: &mut Rng,
    forward: impl Fn(&Tensor<f64>) -> Result<Tensor<f64>>,
    backward: impl Fn(&Tensor<f64>) -> Result<Tensor<f64>>,
) -> Result<GradCheck> {
    let y = forward(x)?;
    let r = rng.uniform::<f64>(-1.0, 1.0, y.shape())?;
    let analytic = backward(&r)?;
    let mut probe = x.clone();
    let numeric = numeric_grads(&mut probe, |x| Ok(dot(&forward(x)?, &r)))?;
    Ok(compare(name, &[analytic], &numeric))
}

/// The STFT-KAN configurations covered: overlap, padding, truncation, no
/// bias, every window kind.
pub fn stft_cases() -> Vec<(&'static str, StftKanConfig)> {
    use WindowKind::*;
    vec![
        ("stft-kan overlap", StftKanConfig::new(12, 3, 5, 2, 3, Hann).smooth(true)),
        ("stft-kan padded", StftKanConfig::new(3, 2, 7, 2, 4, Kaiser)),
        ("stft-kan truncated", StftKanConfig::new(11, 3, 4, 3, 2, Blackman).bias(false)),
        ("stft-kan hamming", StftKanConfig::new(10, 2, 6, 4, 3, Hamming)),
        ("stft-kan bartlett", StftKanConfig::new(8, 2, 8, 1, 5, Bartlett).smooth(true)),
        ("stft-kan boxcar", StftKanConfig::new(6, 4, 2, 2, 3, Boxcar)),
    ]
}

/// Per-layer checks for every layer type and graph operation.
pub fn layer_checks(seed: u64) -> Result<Vec<GradCheck>> {
    let mut rng = Rng::new(seed);
    let mut checks = Vec::new();

    let mut linear = LinearLayer::<f64>::init(5, 4, &mut rng)?;
    let x = rng.uniform(-1.0, 1.0, &[3, 5])?;
    checks.extend(check_layer("linear", &mut linear, &x, &mut rng)?);

    for (name, cfg) in stft_cases() {
        let mut layer = StftKanLayer::<f64>::init(cfg.clone(), &mut rng)?;
        let x = rng.uniform(-1.0, 1.0, &[3, cfg.d_in])?;
        checks.extend(check_layer(name, &mut layer, &x, &mut rng)?);
    }

    let mut fourier = FourierKanLayer::<f64>::init(4, 3, 3, &mut rng)?;
    let x = rng.uniform(-2.0, 2.0, &[2, 4])?;
    checks.extend(check_layer("fourier-kan", &mut fourier, &x, &mut rng)?);

    let x = rng.uniform(-1.0, 1.0, &[4, 6])?;
    checks.push(check_op("relu", &x, &mut rng, |x| Ok(relu_forward(x)), |g| relu_backward(&relu_forward(&x), g))?);

    let points = rng.uniform(-1.0, 1.0, &[10, 3])?;
    let knn = graph::knn(&points, 3)?;
    checks.push(check_op(
        "edge features",
        &points,
        &mut rng,
        |x| graph::edge_features(x, &knn),
        |g| graph::edge_features_backward(g, &knn),
    )?);

    let per_edge = rng.uniform(-1.0, 1.0, &[5 * 3, 4])?;
    let (_, edge_arg) = graph::edge_aggregate_max(&per_edge, 3)?;
    checks.push(check_op(
        "edge max",
        &per_edge,
        &mut rng,
        |x| graph::edge_aggregate_max(x, 3).map(|(y, _)| y),
        |g| graph::edge_aggregate_max_backward(g, &edge_arg, 3),
    )?);

    let features = rng.uniform(-1.0, 1.0, &[6, 4])?;
    let (_, pool_arg) = graph::global_pool(&features)?;
    checks.push(check_op(
        "global pool",
        &features,
        &mut rng,
        |x| graph::global_pool(x).map(|(y, _)| y),
        |g| graph::global_pool_backward(g, &pool_arg, 6),
    )?);

    let logits = rng.uniform(-3.0, 3.0, &[4, 3])?;
    let (labels, weights) = ([0, 2, 1, 2], [1.0, 2.0, 0.5]);
    let analytic = weighted_cross_entropy(&logits, &labels, &weights)?.grad_logits;
    let mut probe = logits.clone();
    let numeric = numeric_grads(&mut probe, |z| Ok(weighted_cross_entropy(z, &labels, &weights)?.loss))?;
    checks.push(compare("cross-entropy", &[analytic], &numeric));

    Ok(checks)
}

/// Loss gradient of a scaled-down model (32 points, k = 4) for one variant.
pub fn model_check(variant: ModelVariant, seed: u64) -> Result<GradCheck> {
    let mut rng = Rng::new(seed);
    let mut model = LiteDgcnn::<f64>::build(ModelConfig::scaled(variant, 3), &mut rng)?;
    let points = rng.uniform(-1.0, 1.0, &[32, 3])?;
    let (labels, weights) = ([1], [1.0, 1.5, 0.8]);

    let (logits, cache) = model.forward(&points)?;
    let ce = weighted_cross_entropy(&logits, &labels, &weights)?;
    let analytic = model.backward(&cache, &ce.grad_logits)?;
    let numeric =
        numeric_grads(&mut model, |m| Ok(weighted_cross_entropy(&m.predict(&points)?, &labels, &weights)?.loss))?;
    Ok(compare(format!("model {variant}"), &analytic, &numeric))
}

/// Largest |∂/∂b| of a `W = 2` layer; the sine basis `sin(πkn)` is zero there.
pub fn dead_sine_max_abs(seed: u64) -> Result<f64> {
    let mut rng = Rng::new(seed);
    let layer = StftKanLayer::<f64>::init(StftKanConfig::new(6, 4, 2, 2, 3, WindowKind::Boxcar), &mut rng)?;
    let x = rng.uniform(-1.0, 1.0, &[3, 6])?;
    let (y, cache) = layer.forward(&x)?;
    let r = rng.uniform(-1.0, 1.0, y.shape())?;
    let grads = layer.backward(&cache, &r)?;
    Ok(grads.params[1].data().iter().fold(0.0, |m, g| m.max(g.abs())))
}

/// Every check: per-layer, end-to-end for all variants, and the dead-sine case.
pub fn run(seed: u64) -> Result<Report> {
    let mut checks = layer_checks(seed)?;
    for (i, v) in ModelVariant::ALL.into_iter().enumerate() {
        checks.push(model_check(v, seed.wrapping_add(1 + i as u64))?);
    }
    Ok(Report { checks, dead_sine_max_abs: dead_sine_max_abs(seed)? })
}
