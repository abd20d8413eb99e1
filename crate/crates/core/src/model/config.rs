use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fourier_kan::fourier_kan_param_count;
use crate::nn::LinearLayer;
use crate::stft_kan::StftKanConfig;
use crate::windows::{WindowKind, DEFAULT_KAISER_BETA};

/// Which layer family fills the four trainable positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelVariant {
    /// Linear layers with ReLU everywhere but the classifier.
    Mlp,
    /// STFT-KAN in all four positions.
    StftKan,
    /// MLP edge convolution, STFT-KAN expansion and classifier.
    StftKanMlp,
    /// Fourier-KAN in all four positions.
    FourierKan,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 4] =
        [ModelVariant::Mlp, ModelVariant::StftKan, ModelVariant::StftKanMlp, ModelVariant::FourierKan];

    pub fn name(self) -> &'static str {
        match self {
            ModelVariant::Mlp => "mlp",
            ModelVariant::StftKan => "stft-kan",
            ModelVariant::StftKanMlp => "stft-kan-mlp",
            ModelVariant::FourierKan => "fourier-kan",
        }
    }

    pub fn tag(self) -> u8 {
        self as u8
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        Self::ALL.get(tag as usize).copied().ok_or_else(|| Error::Checkpoint(format!("unknown variant tag {tag}")))
    }

    pub(crate) fn kind_at(self, pos: Position) -> LayerKind {
        use LayerKind::*;
        match (self, pos) {
            (ModelVariant::Mlp, _) => Linear,
            (ModelVariant::StftKan, _) => Stft,
            (ModelVariant::StftKanMlp, Position::Ecl1 | Position::Ecl2) => Linear,
            (ModelVariant::StftKanMlp, _) => Stft,
            (ModelVariant::FourierKan, _) => Fourier,
        }
    }

    /// ReLU follows every linear layer except the classifier.
    pub fn relu_after(self, pos: Position) -> bool {
        pos != Position::Cl && self.kind_at(pos) == LayerKind::Linear
    }

    /// Batch size used for this variant unless overridden.
    pub fn default_batch_size(self) -> usize {
        if self == ModelVariant::FourierKan {
            2
        } else {
            16
        }
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Usage(format!("unknown variant `{s}` (mlp|stft-kan|stft-kan-mlp|fourier-kan)")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum LayerKind {
    Linear,
    Stft,
    Fourier,
}

/// The four trainable slots of liteDGCNN.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Position {
    /// First shared edge layer.
    Ecl1,
    /// Second shared edge layer.
    Ecl2,
    /// Per-point feature expansion.
    Fel,
    /// Classifier on the pooled descriptor.
    Cl,
}

impl Position {
    pub const ALL: [Position; 4] = [Position::Ecl1, Position::Ecl2, Position::Fel, Position::Cl];

    pub fn name(self) -> &'static str {
        match self {
            Position::Ecl1 => "ecl1",
            Position::Ecl2 => "ecl2",
            Position::Fel => "fel",
            Position::Cl => "cl",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Framing hyperparameters of one STFT-KAN slot; widths come from the model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StftLayerSpec {
    pub grid_size: usize,
    pub window_size: usize,
    pub stride: usize,
    pub smooth_init: bool,
    pub window: WindowKind,
    pub kaiser_beta: f64,
}

impl StftLayerSpec {
    pub const fn new(
        grid_size: usize,
        window_size: usize,
        stride: usize,
        smooth_init: bool,
        window: WindowKind,
    ) -> Self {
        StftLayerSpec { grid_size, window_size, stride, smooth_init, window, kaiser_beta: DEFAULT_KAISER_BETA }
    }

    pub fn layer_config(&self, d_in: usize, d_out: usize) -> StftKanConfig {
        StftKanConfig {
            kaiser_beta: self.kaiser_beta,
            ..StftKanConfig::new(d_in, d_out, self.window_size, self.stride, self.grid_size, self.window)
                .smooth(self.smooth_init)
        }
    }
}

/// The minimal STFT-KAN settings used for the reference liteDGCNN.
pub const REFERENCE_STFT_LAYERS: [StftLayerSpec; 4] = [
    StftLayerSpec::new(3, 2, 2, true, WindowKind::Boxcar),
    StftLayerSpec::new(1, 28, 5, false, WindowKind::Blackman),
    StftLayerSpec::new(7, 52, 20, true, WindowKind::Bartlett),
    StftLayerSpec::new(6, 197, 10, false, WindowKind::Hann),
];

/// Classifier override for the hybrid variant (stride 7, grid 7).
pub const HYBRID_CL_LAYER: StftLayerSpec = StftLayerSpec::new(7, 197, 7, false, WindowKind::Hann);

/// Full architecture description; enough to rebuild a model from a checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub variant: ModelVariant,
    pub classes: usize,
    /// Neighbours per point in the edge graph.
    pub k: usize,
    pub edge_hidden: usize,
    pub edge_out: usize,
    pub emb_dims: usize,
    /// STFT-KAN settings for ecl1, ecl2, fel, cl (read only where the variant uses STFT-KAN).
    pub stft: [StftLayerSpec; 4],
    pub fourier_grid: usize,
}

impl ModelConfig {
    /// Reference architecture: k = 8, widths 6→64→128, 128→1024, 2048→C.
    pub fn reference(variant: ModelVariant, classes: usize) -> Self {
        let mut stft = REFERENCE_STFT_LAYERS;
        if variant == ModelVariant::StftKanMlp {
            stft[3] = HYBRID_CL_LAYER;
        }
        ModelConfig { variant, classes, k: 8, edge_hidden: 64, edge_out: 128, emb_dims: 1024, stft, fourier_grid: 1 }
    }

    /// A small model for fast tests: k = 4, widths 6→8→16, 16→32, 64→C.
    ///
    /// The STFT-KAN slots exercise overlap, truncation and several windows.
    pub fn scaled(variant: ModelVariant, classes: usize) -> Self {
        ModelConfig {
            variant,
            classes,
            k: 4,
            edge_hidden: 8,
            edge_out: 16,
            emb_dims: 32,
            stft: [
                StftLayerSpec::new(3, 2, 2, true, WindowKind::Boxcar),
                StftLayerSpec::new(2, 4, 2, false, WindowKind::Blackman),
                StftLayerSpec::new(3, 6, 4, true, WindowKind::Bartlett),
                StftLayerSpec::new(2, 20, 7, false, WindowKind::Hann),
            ],
            fourier_grid: 2,
        }
    }

    /// `(d_in, d_out)` of each slot.
    pub fn widths(&self, pos: Position) -> (usize, usize) {
        match pos {
            Position::Ecl1 => (6, self.edge_hidden),
            Position::Ecl2 => (self.edge_hidden, self.edge_out),
            Position::Fel => (self.edge_out, self.emb_dims),
            Position::Cl => (2 * self.emb_dims, self.classes),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::Config(format!("need at least 2 classes, got {}", self.classes)));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be >= 1".into()));
        }
        if self.edge_hidden == 0 || self.edge_out == 0 || self.emb_dims == 0 {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        if self.fourier_grid == 0 {
            return Err(Error::Config("fourier grid size must be >= 1".into()));
        }
        for pos in Position::ALL {
            if self.variant.kind_at(pos) == LayerKind::Stft {
                let (i, o) = self.widths(pos);
                self.stft[pos.index()].layer_config(i, o).validate()?;
            }
        }
        Ok(())
    }

    /// Trainable parameters in one slot, in closed form.
    pub fn layer_param_count(&self, pos: Position) -> usize {
        let (i, o) = self.widths(pos);
        match self.variant.kind_at(pos) {
            LayerKind::Linear => LinearLayer::<f32>::param_count_for(i, o),
            LayerKind::Stft => self.stft[pos.index()].layer_config(i, o).param_count(),
            LayerKind::Fourier => fourier_kan_param_count(i, o, self.fourier_grid),
        }
    }

    pub fn param_count(&self) -> usize {
        Position::ALL.iter().map(|&p| self.layer_param_count(p)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_parameter_counts() {
        let count = |v| ModelConfig::reference(v, 7).param_count();
        assert_eq!(count(ModelVariant::StftKan), 77_391);
        assert_eq!(count(ModelVariant::Mlp), 155_207);
        assert_eq!(count(ModelVariant::StftKanMlp), 93_113);
        assert_eq!(count(ModelVariant::FourierKan), 309_191);
    }

    #[test]
    fn per_layer_breakdown() {
        let c = ModelConfig::reference(ModelVariant::StftKan, 7);
        let per: Vec<_> = Position::ALL.iter().map(|&p| c.layer_param_count(p)).collect();
        assert_eq!(per, vec![1_216, 2_176, 58_368, 15_631]);
        let c = ModelConfig::reference(ModelVariant::Mlp, 7);
        let per: Vec<_> = Position::ALL.iter().map(|&p| c.layer_param_count(p)).collect();
        assert_eq!(per, vec![448, 8_320, 132_096, 14_343]);
        let c = ModelConfig::reference(ModelVariant::StftKanMlp, 7);
        assert_eq!(c.layer_param_count(Position::Cl), 25_977);
        let c = ModelConfig::reference(ModelVariant::FourierKan, 7);
        let per: Vec<_> = Position::ALL.iter().map(|&p| c.layer_param_count(p)).collect();
        assert_eq!(per, vec![832, 16_512, 263_168, 28_679]);
    }

    #[test]
    fn variant_names() {
        for v in ModelVariant::ALL {
            assert_eq!(v.name().parse::<ModelVariant>().unwrap(), v);
            assert_eq!(ModelVariant::from_tag(v.tag()).unwrap(), v);
        }
        assert!("kan".parse::<ModelVariant>().is_err());
    }

    #[test]
    fn activation_placement() {
        use ModelVariant::*;
        assert!(Mlp.relu_after(Position::Fel));
        assert!(!Mlp.relu_after(Position::Cl));
        assert!(StftKanMlp.relu_after(Position::Ecl2));
        assert!(!StftKanMlp.relu_after(Position::Fel));
        assert!(Position::ALL.iter().all(|&p| !StftKan.relu_after(p) && !FourierKan.relu_after(p)));
    }

    #[test]
    fn rejects_single_class() {
        assert!(ModelConfig::reference(ModelVariant::Mlp, 1).validate().is_err());
        assert!(ModelConfig::reference(ModelVariant::Mlp, 2).validate().is_ok());
    }
}
