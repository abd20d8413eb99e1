//! liteDGCNN: one EdgeConv block over a k-NN graph of the input
//! coordinates, per-point feature expansion, parallel max+mean pooling and a
//! classifier. Each of the four trainable slots holds a linear layer, an
//! STFT-KAN layer or a Fourier-KAN layer depending on [`ModelVariant`].

mod config;

pub(crate) use config::LayerKind;
pub use config::{ModelConfig, ModelVariant, Position, StftLayerSpec, HYBRID_CL_LAYER, REFERENCE_STFT_LAYERS};

use crate::error::{Error, Result};
use crate::fourier_kan::{FourierKanCache, FourierKanLayer};
use crate::graph::{self, KnnGraph};
use crate::ndcore::{Rng, Scalar, Tensor};

use crate::nn::{relu_backward, relu_forward, Layer, LayerGrads, LinearCache, LinearLayer};
use crate::stft_kan::{StftKanCache, StftKanLayer};

/// A layer in one of the model's slots.
#[derive(Clone, Debug)]
pub enum AnyLayer<T> {
    Linear(LinearLayer<T>),
    Stft(StftKanLayer<T>),
    Fourier(FourierKanLayer<T>),
}

#[derive(Clone, Debug)]
pub enum AnyCache<T> {
    Linear(LinearCache<T>),
    Stft(StftKanCache<T>),
    Fourier(FourierKanCache<T>),
}

impl<T: Scalar> Layer<T> for AnyLayer<T> {
    type Cache = AnyCache<T>;

    fn d_in(&self) -> usize {
        match self {
            AnyLayer::Linear(l) => l.d_in(),
            AnyLayer::Stft(l) => l.d_in(),
            AnyLayer::Fourier(l) => l.d_in(),
        }
    }

    fn d_out(&self) -> usize {
        match self {
            AnyLayer::Linear(l) => l.d_out(),
            AnyLayer::Stft(l) => l.d_out(),
            AnyLayer::Fourier(l) => l.d_out(),
        }
    }

    fn forward(&self, x: &Tensor<T>) -> Result<(Tensor<T>, AnyCache<T>)> {
        Ok(match self {
            AnyLayer::Linear(l) => {
                let (y, c) = l.forward(x)?;
                (y, AnyCache::Linear(c))
            }
            AnyLayer::Stft(l) => {
                let (y, c) = l.forward(x)?;
                (y, AnyCache::Stft(c))
            }
            AnyLayer::Fourier(l) => {
                let (y, c) = l.forward(x)?;
                (y, AnyCache::Fourier(c))
            }
        })
    }

    fn backward(&self, cache: &AnyCache<T>, grad_out: &Tensor<T>) -> Result<LayerGrads<T>> {
        match (self, cache) {
            (AnyLayer::Linear(l), AnyCache::Linear(c)) => l.backward(c, grad_out),
            (AnyLayer::Stft(l), AnyCache::Stft(c)) => l.backward(c, grad_out),
            (AnyLayer::Fourier(l), AnyCache::Fourier(c)) => l.backward(c, grad_out),
            _ => Err(Error::Usage("cache does not belong to this layer type".into())),
        }
    }

    fn params(&self) -> Vec<&Tensor<T>> {
        match self {
            AnyLayer::Linear(l) => l.params(),
            AnyLayer::Stft(l) => l.params(),
            AnyLayer::Fourier(l) => l.params(),
        }
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        match self {
            AnyLayer::Linear(l) => l.params_mut(),
            AnyLayer::Stft(l) => l.params_mut(),
            AnyLayer::Fourier(l) => l.params_mut(),
        }
    }
}

/// Activations kept by [`LiteDgcnn::forward`] for the backward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache<T> {
    n: usize,
    layer_caches: Vec<AnyCache<T>>,
    /// Post-ReLU outputs, for slots followed by an activation.
    relu_out: Vec<Option<Tensor<T>>>,
    edge_argmax: Vec<usize>,
    pool_argmax: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct LiteDgcnn<T = f32> {
    config: ModelConfig,
    layers: Vec<AnyLayer<T>>,
}

fn rename<T>(r: Result<T>, pos: Position) -> Result<T> {
    r.map_err(|e| match e {
        Error::NonFinite { batch, .. } => Error::NonFinite { layer: pos.name().into(), batch },
        other => other,
    })
}

impl<T: Scalar> LiteDgcnn<T> {
    /// Initialises all four slots in order ecl1, ecl2, fel, cl from `rng`.
    pub fn build(config: ModelConfig, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let mut layers = Vec::with_capacity(4);
        for pos in Position::ALL {
            let (d_in, d_out) = config.widths(pos);
            let layer = match config.variant.kind_at(pos) {
                LayerKind::Linear => AnyLayer::Linear(LinearLayer::init(d_in, d_out, rng)?),
                LayerKind::Stft => {
                    AnyLayer::Stft(StftKanLayer::init(config.stft[pos.index()].layer_config(d_in, d_out), rng)?)
                }
                LayerKind::Fourier => AnyLayer::Fourier(FourierKanLayer::init(d_in, d_out, config.fourier_grid, rng)?),
            };
            layers.push(layer);
        }
        Ok(LiteDgcnn { config, layers })
    }

    /// Rebuilds a model around existing layers (used by checkpoint loading).
    pub fn from_layers(config: ModelConfig, layers: Vec<AnyLayer<T>>) -> Result<Self> {
        config.validate()?;
        if layers.len() != 4 {
            return Err(Error::Checkpoint(format!("expected 4 layers, got {}", layers.len())));
        }
        for (pos, layer) in Position::ALL.into_iter().zip(&layers) {
            let kind = match layer {
                AnyLayer::Linear(_) => LayerKind::Linear,
                AnyLayer::Stft(_) => LayerKind::Stft,
                AnyLayer::Fourier(_) => LayerKind::Fourier,
            };
            if kind != config.variant.kind_at(pos) || (layer.d_in(), layer.d_out()) != config.widths(pos) {
                return Err(Error::Checkpoint(format!("layer `{}` does not match the config", pos.name())));
            }
        }
        Ok(LiteDgcnn { config, layers })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layer(&self, pos: Position) -> &AnyLayer<T> {
        &self.layers[pos.index()]
    }

    pub fn layers(&self) -> &[AnyLayer<T>] {
        &self.layers
    }

    pub fn params(&self) -> Vec<&Tensor<T>> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.param_count()).sum()
    }

    pub fn cast<U: Scalar>(&self) -> LiteDgcnn<U> {
        let mut out = LiteDgcnn::<U>::build(self.config.clone(), &mut Rng::new(0)).expect("validated config");
        for (dst, src) in out.params_mut().into_iter().zip(self.params()) {
            *dst = src.cast();
        }
        out
    }

    /// Logits `[1 × C]` for a cloud of `[n × 3]` coordinates.
    pub fn forward(&self, points: &Tensor<T>) -> Result<(Tensor<T>, ForwardCache<T>)> {
        let graph = self.graph_for(points)?;
        self.forward_with_graph(points, &graph)
    }

    pub fn predict(&self, points: &Tensor<T>) -> Result<Tensor<T>> {
        self.forward(points).map(|(y, _)| y)
    }

    /// The k-NN graph the model builds over the input coordinates.
    pub fn graph_for(&self, points: &Tensor<T>) -> Result<KnnGraph> {
        match points.shape() {
            [n, 3] if *n > self.config.k => {}
            s => return Err(Error::Data(format!("cloud must be [n x 3] with n > k = {}, got {s:?}", self.config.k))),
        }
        points.check_finite("input")?;
        graph::knn(points, self.config.k)
    }

    /// Forward pass with a precomputed graph over the same `points`.
    pub fn forward_with_graph(&self, points: &Tensor<T>, graph: &KnnGraph) -> Result<(Tensor<T>, ForwardCache<T>)> {
        let n = points.rows();
        if graph.n() != n || graph.k() != self.config.k {
            return Err(Error::Dimension("graph does not match cloud or k".into()));
        }
        let variant = self.config.variant;
        let mut layer_caches = Vec::with_capacity(4);
        let mut relu_out = Vec::with_capacity(4);

        let mut run = |pos: Position, x: &Tensor<T>| -> Result<Tensor<T>> {
            let (y, cache) = rename(self.layers[pos.index()].forward(x), pos)?;
            layer_caches.push(cache);
            if variant.relu_after(pos) {
                let y = relu_forward(&y);
                relu_out.push(Some(y.clone()));
                Ok(y)
            } else {
                relu_out.push(None);
                Ok(y)
            }
        };

        let edges = graph::edge_features(points, graph)?;
        let h1 = run(Position::Ecl1, &edges)?;
        let h2 = run(Position::Ecl2, &h1)?;
        let (point_feat, edge_argmax) = graph::edge_aggregate_max(&h2, graph.k())?;
        let expanded = run(Position::Fel, &point_feat)?;
        let (pooled, pool_argmax) = graph::global_pool(&expanded)?;
        let logits = run(Position::Cl, &pooled)?;
        Ok((logits, ForwardCache { n, layer_caches, relu_out, edge_argmax, pool_argmax }))
    }

    /// Gradients for every tensor of [`LiteDgcnn::params`], same order.
    ///
    /// Edge-layer gradients are summed over all `n·k` edge applications.
    pub fn backward(&self, cache: &ForwardCache<T>, grad_logits: &Tensor<T>) -> Result<Vec<Tensor<T>>> {
        if cache.layer_caches.len() != 4 {
            return Err(Error::Usage("forward cache is incomplete".into()));
        }
        let mut per_layer: Vec<Vec<Tensor<T>>> = vec![Vec::new(); 4];
        let mut step = |pos: Position, grad: Tensor<T>| -> Result<Tensor<T>> {
            let i = pos.index();
            let grad = match &cache.relu_out[i] {
                Some(out) => relu_backward(out, &grad)?,
                None => grad,
            };
            let g = self.layers[i].backward(&cache.layer_caches[i], &grad)?;
            per_layer[i] = g.params;
            Ok(g.input)
        };

        let g_pooled = step(Position::Cl, grad_logits.clone())?;
        let g_expanded = graph::global_pool_backward(&g_pooled, &cache.pool_argmax, cache.n)?;
        let g_point = step(Position::Fel, g_expanded)?;
        let g_h2 = graph::edge_aggregate_max_backward(&g_point, &cache.edge_argmax, self.config.k)?;
        let g_h1 = step(Position::Ecl2, g_h2)?;
        step(Position::Ecl1, g_h1)?;
        Ok(per_layer.into_iter().flatten().collect())
    }
}
