//! Uniform random search over the STFT-KAN framing hyperparameters.

use std::fmt::Write as _;
use std::ops::RangeInclusive;
use std::path::Path;

use crate::data::DatasetSplit;
use crate::error::{Error, Result};
use crate::model::{Position, StftLayerSpec};
use crate::ndcore::Rng;
use crate::windows::{WindowKind, DEFAULT_KAISER_BETA};

use super::config::{parse_bool, parse_position, read_pairs};
use super::{train, TrainConfig};

/// Resampling budget per trial for configs whose window exceeds the input.
pub const MAX_ATTEMPTS: usize = 100;
const SEARCH_STREAM: u64 = 3;

/// Sampling bounds for one STFT-KAN slot.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerSpace {
    pub grid_size: RangeInclusive<usize>,
    pub window_size: RangeInclusive<usize>,
    pub stride: RangeInclusive<usize>,
    pub smooth_init: Vec<bool>,
    pub windows: Vec<WindowKind>,
}

impl LayerSpace {
    fn new(grid: RangeInclusive<usize>, window: RangeInclusive<usize>, stride: RangeInclusive<usize>) -> Self {
        LayerSpace {
            grid_size: grid,
            window_size: window,
            stride,
            smooth_init: vec![true, false],
            windows: WindowKind::ALL.to_vec(),
        }
    }

    fn sample(&self, rng: &mut Rng) -> StftLayerSpec {
        let pick = |r: &RangeInclusive<usize>, rng: &mut Rng| rng.int_inclusive(*r.start(), *r.end());
        let grid = pick(&self.grid_size, rng);
        let window = pick(&self.window_size, rng);
        let stride = pick(&self.stride, rng);
        let smooth = self.smooth_init[rng.int_inclusive(0, self.smooth_init.len() - 1)];
        let kind = self.windows[rng.int_inclusive(0, self.windows.len() - 1)];
        StftLayerSpec { kaiser_beta: DEFAULT_KAISER_BETA, ..StftLayerSpec::new(grid, window, stride, smooth, kind) }
    }

    pub fn contains(&self, s: &StftLayerSpec) -> bool {
        self.grid_size.contains(&s.grid_size)
            && self.window_size.contains(&s.window_size)
            && self.stride.contains(&s.stride)
            && self.smooth_init.contains(&s.smooth_init)
            && self.windows.contains(&s.window)
    }

    fn validate(&self, slot: &str) -> Result<()> {
        let ok = |r: &RangeInclusive<usize>| r.start() <= r.end() && *r.start() >= 1;
        if !ok(&self.grid_size) || !ok(&self.window_size) || !ok(&self.stride) {
            return Err(Error::Config(format!("{slot}: ranges must be non-empty and start at 1 or more")));
        }
        if self.smooth_init.is_empty() || self.windows.is_empty() {
            return Err(Error::Config(format!("{slot}: smooth_init and window lists must be non-empty")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchSpace {
    /// Bounds for ecl1, ecl2, fel, cl.
    pub layers: [LayerSpace; 4],
}

impl Default for SearchSpace {
    /// The reference bounds.
    fn default() -> Self {
        SearchSpace {
            layers: [
                LayerSpace::new(1..=4, 2..=4, 1..=3),
                LayerSpace::new(1..=7, 10..=64, 5..=20),
                LayerSpace::new(5..=10, 20..=100, 10..=25),
                LayerSpace::new(5..=8, 150..=400, 8..=15),
            ],
        }
    }
}

fn parse_range(v: &str) -> Option<RangeInclusive<usize>> {
    match v.split_once("..") {
        Some((a, b)) => Some(a.trim().parse().ok()?..=b.trim().trim_start_matches('=').parse().ok()?),
        None => {
            let x = v.trim().parse().ok()?;
            Some(x..=x)
        }
    }
}

impl SearchSpace {
    /// Overrides the default bounds with `<slot>.<field> = value` pairs, where
    /// ranges read `lo..hi` (inclusive) and lists are comma-separated.
    pub fn apply_pairs(mut self, pairs: &[(String, String)]) -> Result<Self> {
        for (key, value) in pairs {
            let bad = || Error::Config(format!("`{key}`: cannot parse `{value}`"));
            let (slot, field) = key.split_once('.').ok_or_else(|| Error::Config(format!("unknown key `{key}`")))?;
            let pos = parse_position(slot).ok_or_else(|| Error::Config(format!("unknown layer slot `{slot}`")))?;
            let l = &mut self.layers[pos.index()];
            let list = || value.split(',').map(str::trim).filter(|s| !s.is_empty());
            match field {
                "grid_size" | "grid" => l.grid_size = parse_range(value).ok_or_else(bad)?,
                "window_size" => l.window_size = parse_range(value).ok_or_else(bad)?,
                "stride" => l.stride = parse_range(value).ok_or_else(bad)?,
                "smooth_init" | "smooth" => {
                    l.smooth_init = list().map(|s| parse_bool(s).ok_or_else(bad)).collect::<Result<_>>()?
                }
                "window" | "windows" => l.windows = list().map(str::parse).collect::<Result<_>>()?,
                _ => return Err(Error::Config(format!("unknown key `{key}`"))),
            }
        }
        self.validate()?;
        Ok(self)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        SearchSpace::default().apply_pairs(&read_pairs(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        for (p, l) in Position::ALL.iter().zip(&self.layers) {
            l.validate(p.name())?;
        }
        Ok(())
    }

    /// Draws one spec per slot, redrawing any whose window is wider than the
    /// slot's input.
    pub fn sample(&self, base: &TrainConfig, rng: &mut Rng) -> Result<[StftLayerSpec; 4]> {
        let widths = base.model_config(2);
        let mut specs = base.stft;
        for pos in Position::ALL {
            let d_in = widths.widths(pos).0;
            let space = &self.layers[pos.index()];
            let mut attempts = 0;
            specs[pos.index()] = loop {
                let s = space.sample(rng);
                if s.window_size <= d_in {
                    break s;
                }
                attempts += 1;
                if attempts >= MAX_ATTEMPTS {
                    return Err(Error::Config(format!(
                        "{}: no window size within {d_in} inputs after {MAX_ATTEMPTS} draws",
                        pos.name()
                    )));
                }
            };
        }
        Ok(specs)
    }
}

#[derive(Clone, Debug)]
pub struct Trial {
    pub index: usize,
    pub stft: [StftLayerSpec; 4],
    pub param_count: usize,
    pub final_oa: f64,
    pub final_ba: f64,
    pub best_oa: f64,
}

/// Trains `trials` sampled configurations for `epochs` each, every one with
/// the base seed, and ranks them by final test OA (ties by trial index).
pub fn random_search(
    base: &TrainConfig,
    space: &SearchSpace,
    trials: usize,
    epochs: usize,
    split: &DatasetSplit,
) -> Result<Vec<Trial>> {
    if trials == 0 {
        return Err(Error::Usage("need at least one trial".into()));
    }
    space.validate()?;
    let mut rng = Rng::stream(base.seed, SEARCH_STREAM);
    let mut out = Vec::with_capacity(trials);
    for index in 0..trials {
        let stft = space.sample(base, &mut rng)?;
        let cfg = TrainConfig { stft, epochs, ..base.clone() };
        log::info!("trial {index}: {}", describe(&stft));
        let outcome = train(&cfg, split)?;
        out.push(Trial {
            index,
            stft,
            param_count: outcome.final_model.param_count(),
            final_oa: outcome.final_metrics.oa,
            final_ba: outcome.final_metrics.ba,
            best_oa: outcome.best_metrics.oa,
        });
    }
    out.sort_by(|a, b| b.final_oa.total_cmp(&a.final_oa).then(a.index.cmp(&b.index)));
    Ok(out)
}

fn describe(stft: &[StftLayerSpec; 4]) -> String {
    Position::ALL
        .iter()
        .zip(stft)
        .map(|(p, s)| {
            format!(
                "{} G={} W={} S={} {} {}",
                p.name(),
                s.grid_size,
                s.window_size,
                s.stride,
                s.window,
                if s.smooth_init { "smooth" } else { "plain" }
            )
        })
        .collect::<Vec<_>>()
        .join("; ")
}

/// Ranked trial table as CSV.
pub fn trials_csv(trials: &[Trial]) -> String {
    let mut out = String::from("rank,trial,final_oa,final_ba,best_oa,params");
    for p in Position::ALL {
        let n = p.name();
        write!(out, ",{n}_grid,{n}_window_size,{n}_stride,{n}_smooth,{n}_window").unwrap();
    }
    out.push('\n');
    for (rank, t) in trials.iter().enumerate() {
        write!(out, "{},{},{:.6},{:.6},{:.6},{}", rank + 1, t.index, t.final_oa, t.final_ba, t.best_oa, t.param_count)
            .unwrap();
        for s in &t.stft {
            write!(out, ",{},{},{},{},{}", s.grid_size, s.window_size, s.stride, s.smooth_init, s.window).unwrap();
        }
        out.push('\n');
    }
    out
}
