//! Tapering windows applied to each frame before harmonic projection.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Kaiser shape parameter used when none is configured.
pub const DEFAULT_KAISER_BETA: f64 = 8.0;

/// Relative size of the last Bessel series term that is still summed.
const BESSEL_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum WindowKind {
    Boxcar,
    Hann,
    Hamming,
    Bartlett,
    Blackman,
    Kaiser,
}

impl WindowKind {
    pub const ALL: [WindowKind; 6] = [
        WindowKind::Boxcar,
        WindowKind::Hann,
        WindowKind::Hamming,
        WindowKind::Bartlett,
        WindowKind::Blackman,
        WindowKind::Kaiser,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WindowKind::Boxcar => "boxcar",
            WindowKind::Hann => "hann",
            WindowKind::Hamming => "hamming",
            WindowKind::Bartlett => "bartlett",
            WindowKind::Blackman => "blackman",
            WindowKind::Kaiser => "kaiser",
        }
    }

    /// Stable one-byte tag used in checkpoints.
    pub fn tag(self) -> u8 {
        self as u8
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        Self::ALL.get(tag as usize).copied().ok_or_else(|| Error::Config(format!("unknown window tag {tag}")))
    }
}

impl fmt::Display for WindowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WindowKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| Error::Config(format!("unknown window kind `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowSpec {
    pub kind: WindowKind,
    pub width: usize,
    /// Only read for [`WindowKind::Kaiser`].
    pub beta: f64,
}

impl WindowSpec {
    pub fn new(kind: WindowKind, width: usize) -> Self {
        WindowSpec { kind, width, beta: DEFAULT_KAISER_BETA }
    }
}

/// Zeroth-order modified Bessel function of the first kind, by power series.
pub fn bessel_i0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut j = 1.0;
    loop {
        term *= q / (j * j);
        sum += term;
        if term < BESSEL_TOLERANCE * sum {
            return sum;
        }
        j += 1.0;
    }
}

/// Window coefficients `h[0..W]`.
///
/// A single-sample window is `[1]` for every kind. Values are clamped to
/// `[0, 1]` so that rounding at Blackman's endpoints cannot go negative.
pub fn make_window(spec: &WindowSpec) -> Result<Vec<f64>> {
    let w = spec.width;
    if w == 0 {
        return Err(Error::Config("window width must be at least 1".into()));
    }
    if spec.kind == WindowKind::Kaiser && !(spec.beta >= 0.0 && spec.beta.is_finite()) {
        return Err(Error::Config(format!("kaiser beta must be finite and >= 0, got {}", spec.beta)));
    }
    if w == 1 {
        return Ok(vec![1.0]);
    }
    let m = (w - 1) as f64;
    let kaiser_norm = bessel_i0(spec.beta);
    let h = (0..w)
        .map(|n| {
            let n = n as f64;
            let v = match spec.kind {
                WindowKind::Boxcar => 1.0,
                WindowKind::Hann => 0.5 * (1.0 - (2.0 * PI * n / m).cos()),
                WindowKind::Hamming => 0.54 - 0.46 * (2.0 * PI * n / m).cos(),
                WindowKind::Bartlett => 1.0 - (2.0 * n / m - 1.0).abs(),
                WindowKind::Blackman => 0.42 - 0.5 * (2.0 * PI * n / m).cos() + 0.08 * (4.0 * PI * n / m).cos(),
                WindowKind::Kaiser => {
                    let r = 2.0 * n / m - 1.0;
                    bessel_i0(spec.beta * (1.0 - r * r).max(0.0).sqrt()) / kaiser_norm
                }
            };
            v.clamp(0.0, 1.0)
        })
        .collect();
    Ok(h)
}
