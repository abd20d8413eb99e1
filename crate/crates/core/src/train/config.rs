use std::fs;
use std::path::Path;

use crate::data::{DEFAULT_MAX_SHIFT, TRAIN_RATIO};
use crate::error::{Error, Result};
use crate::model::{ModelConfig, ModelVariant, Position, StftLayerSpec};
use crate::nn::{AdamConfig, LrSchedule};

/// Everything a training run depends on.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub variant: ModelVariant,
    pub batch_size: usize,
    pub epochs: usize,
    pub lr: f64,
    /// Floor of the cosine schedule.
    pub eta_min: f64,
    pub weight_decay: f64,
    pub seed: u64,
    pub k: usize,
    /// Points per cloud the data is expected to carry.
    pub points: usize,
    pub edge_hidden: usize,
    pub edge_out: usize,
    pub emb_dims: usize,
    pub stft: [StftLayerSpec; 4],
    pub fourier_grid: usize,
    pub augment: bool,
    pub max_shift: f64,
    pub train_ratio: f64,
}

impl TrainConfig {
    /// Reference settings for `variant`.
    pub fn new(variant: ModelVariant) -> Self {
        let m = ModelConfig::reference(variant, 2);
        let schedule = LrSchedule::default();
        TrainConfig {
            variant,
            batch_size: variant.default_batch_size(),
            epochs: schedule.total_epochs,
            lr: schedule.base_lr,
            eta_min: schedule.eta_min,
            weight_decay: AdamConfig::default().weight_decay,
            seed: 0,
            k: m.k,
            points: 1024,
            edge_hidden: m.edge_hidden,
            edge_out: m.edge_out,
            emb_dims: m.emb_dims,
            stft: m.stft,
            fourier_grid: m.fourier_grid,
            augment: true,
            max_shift: DEFAULT_MAX_SHIFT,
            train_ratio: TRAIN_RATIO,
        }
    }

    pub fn model_config(&self, classes: usize) -> ModelConfig {
        ModelConfig {
            variant: self.variant,
            classes,
            k: self.k,
            edge_hidden: self.edge_hidden,
            edge_out: self.edge_out,
            emb_dims: self.emb_dims,
            stft: self.stft,
            fourier_grid: self.fourier_grid,
        }
    }

    /// Adopts the architecture of an existing model.
    pub fn with_model(mut self, m: &ModelConfig) -> Self {
        self.variant = m.variant;
        self.k = m.k;
        self.edge_hidden = m.edge_hidden;
        self.edge_out = m.edge_out;
        self.emb_dims = m.emb_dims;
        self.stft = m.stft;
        self.fourier_grid = m.fourier_grid;
        self
    }

    pub fn schedule(&self) -> LrSchedule {
        LrSchedule { base_lr: self.lr, eta_min: self.eta_min, total_epochs: self.epochs }
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig { lr: self.lr, weight_decay: self.weight_decay, ..AdamConfig::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.epochs == 0 || self.points == 0 {
            return Err(Error::Config("batch_size, epochs and points must be positive".into()));
        }
        if !(self.lr > 0.0) || !(self.eta_min >= 0.0) || !(self.weight_decay >= 0.0) || !(self.max_shift >= 0.0) {
            return Err(Error::Config("lr must be positive; eta_min, weight_decay, max_shift non-negative".into()));
        }
        if !(self.train_ratio > 0.0 && self.train_ratio < 1.0) {
            return Err(Error::Config(format!("train_ratio must lie in (0, 1), got {}", self.train_ratio)));
        }
        self.model_config(2).validate()
    }

    /// Applies `key = value` settings, `variant` first so that it resets the
    /// variant-dependent defaults before the other keys override them.
    pub fn apply_pairs(mut self, pairs: &[(String, String)]) -> Result<Self> {
        if let Some((_, v)) = pairs.iter().rev().find(|(k, _)| k == "variant") {
            self = TrainConfig { seed: self.seed, ..TrainConfig::new(v.parse()?) };
        }
        for (k, v) in pairs.iter().filter(|(k, _)| k != "variant") {
            self.set(k, v)?;
        }
        Ok(self)
    }

    /// Sets one field by name. Per-slot STFT keys read `<slot>.<field>` with
    /// slot one of `ecl1 ecl2 fel cl`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("`{key}`: expected {what}, got `{value}`"));
        let uint = || value.parse::<usize>().map_err(|_| bad("a non-negative integer"));
        let float = || value.parse::<f64>().map_err(|_| bad("a number"));
        let flag = || parse_bool(value).ok_or_else(|| bad("true or false"));
        match key {
            "variant" => *self = TrainConfig { seed: self.seed, ..TrainConfig::new(value.parse()?) },
            "batch_size" | "batch" => self.batch_size = uint()?,
            "epochs" => self.epochs = uint()?,
            "lr" => self.lr = float()?,
            "eta_min" => self.eta_min = float()?,
            "weight_decay" => self.weight_decay = float()?,
            "seed" => self.seed = value.parse().map_err(|_| bad("an unsigned 64-bit integer"))?,
            "k" => self.k = uint()?,
            "points" => self.points = uint()?,
            "edge_hidden" => self.edge_hidden = uint()?,
            "edge_out" => self.edge_out = uint()?,
            "emb_dims" => self.emb_dims = uint()?,
            "fourier_grid" => self.fourier_grid = uint()?,
            "augment" => self.augment = flag()?,
            "max_shift" => self.max_shift = float()?,
            "train_ratio" => self.train_ratio = float()?,
            _ => {
                let (slot, field) = key.split_once('.').ok_or_else(|| Error::Config(format!("unknown key `{key}`")))?;
                let pos = parse_position(slot).ok_or_else(|| Error::Config(format!("unknown layer slot `{slot}`")))?;
                let spec = &mut self.stft[pos.index()];
                match field {
                    "grid_size" | "grid" => spec.grid_size = uint()?,
                    "window_size" => spec.window_size = uint()?,
                    "stride" => spec.stride = uint()?,
                    "smooth_init" | "smooth" => spec.smooth_init = flag()?,
                    "window" => spec.window = value.parse()?,
                    "kaiser_beta" => spec.kaiser_beta = float()?,
                    _ => return Err(Error::Config(format!("unknown key `{key}`"))),
                }
            }
        }
        Ok(())
    }

    /// The full configuration as `key = value` lines that [`TrainConfig::from_file`]
    /// reads back unchanged.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "variant = {}\nbatch_size = {}\nepochs = {}\nlr = {}\neta_min = {}\nweight_decay = {}\nseed = {}\n\
             k = {}\npoints = {}\nedge_hidden = {}\nedge_out = {}\nemb_dims = {}\nfourier_grid = {}\n\
             augment = {}\nmax_shift = {}\ntrain_ratio = {}\n",
            self.variant,
            self.batch_size,
            self.epochs,
            self.lr,
            self.eta_min,
            self.weight_decay,
            self.seed,
            self.k,
            self.points,
            self.edge_hidden,
            self.edge_out,
            self.emb_dims,
            self.fourier_grid,
            self.augment,
            self.max_shift,
            self.train_ratio
        );
        for (p, s) in Position::ALL.iter().zip(&self.stft) {
            let n = p.name();
            out += &format!(
                "{n}.grid_size = {}\n{n}.window_size = {}\n{n}.stride = {}\n{n}.smooth_init = {}\n{n}.window = {}\n{n}.kaiser_beta = {}\n",
                s.grid_size, s.window_size, s.stride, s.smooth_init, s.window, s.kaiser_beta
            );
        }
        out
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let pairs = read_pairs(path)?;
        TrainConfig::new(ModelVariant::StftKan).apply_pairs(&pairs)
    }
}

pub fn parse_position(s: &str) -> Option<Position> {
    Position::ALL.into_iter().find(|p| p.name() == s)
}

pub fn parse_bool(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Some(true),
        "false" | "no" | "off" | "0" => Some(false),
        _ => None,
    }
}

/// `key = value` lines; blank lines and `#` comments are ignored.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse { line: i + 1, msg: format!("expected key = value, got `{line}`") })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::Parse { line: i + 1, msg: "empty key".into() });
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

pub fn read_pairs(path: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_pairs(&text)
}
