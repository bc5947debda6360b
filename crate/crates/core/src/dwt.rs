//! Orthonormal periodic discrete wavelet transform.
//!
//! The pyramid algorithm splits a signal into a low-pass approximation
//! (the trend carried by the scaling function) and high-pass details at
//! each level. Stages with odd length are extended by repeating the last
//! sample, so a stage of length `n` yields `ceil(n / 2)` coefficients per
//! band. Parseval's identity is exact whenever every stage length is even.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::SpatialSeries;

/// Upper bound on decomposition depth.
pub const MAX_LEVELS: usize = 30;

const DEGENERATE_DETAIL_RATIO: f64 = 1e-24;

#[derive(Debug, Error, PartialEq)]
pub enum DwtError {
    #[error("series too short: {len} samples for {levels} levels (need at least {})", 1usize << levels)]
    TooShort { len: usize, levels: usize },
    #[error("levels must be in [1, {MAX_LEVELS}], got {0}")]
    BadLevels(usize),
    #[error("unknown wavelet {0:?} (expected haar, db2 or db4)")]
    UnknownWavelet(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("degenerate: all detail coefficients are zero")]
    DegenerateSignal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveletKind {
    Haar,
    /// Daubechies, 2 vanishing moments (4 taps).
    Db2,
    /// Daubechies, 4 vanishing moments (8 taps).
    Db4,
}

impl WaveletKind {
    pub fn as_str(self) -> &'static str {
        match self {
            WaveletKind::Haar => "haar",
            WaveletKind::Db2 => "db2",
            WaveletKind::Db4 => "db4",
        }
    }
}

impl fmt::Display for WaveletKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WaveletKind {
    type Err = DwtError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "haar" | "db1" => Ok(WaveletKind::Haar),
            "db2" => Ok(WaveletKind::Db2),
            "db4" => Ok(WaveletKind::Db4),
            _ => Err(DwtError::UnknownWavelet(s.to_string())),
        }
    }
}

const HAAR: [f64; 2] = [
    std::f64::consts::FRAC_1_SQRT_2,
    std::f64::consts::FRAC_1_SQRT_2,
];

// Minimum-phase Daubechies scaling filters, from spectral factorization
// carried out at 50 significant digits.
#[allow(clippy::excessive_precision)]
const DB2: [f64; 4] = [
    0.482_962_913_144_534_143_37,
    0.836_516_303_737_807_905_58,
    0.224_143_868_042_013_381_03,
    -0.129_409_522_551_260_381_17,
];

#[allow(clippy::excessive_precision)]
const DB4: [f64; 8] = [
    0.230_377_813_308_896_500_86,
    0.714_846_570_552_915_647_09,
    0.630_880_767_929_858_907_88,
    -0.027_983_769_416_859_854_211,
    -0.187_034_811_719_093_084_08,
    0.030_841_381_835_560_763_627,
    0.032_883_011_666_885_199_735,
    -0.010_597_401_785_069_032_105,
];

/// A quadrature-mirror filter pair.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletSpec {
    kind: WaveletKind,
    lowpass: Vec<f64>,
    highpass: Vec<f64>,
}

impl WaveletSpec {
    pub fn new(kind: WaveletKind) -> Self {
        let lowpass: Vec<f64> = match kind {
            WaveletKind::Haar => HAAR.to_vec(),
            WaveletKind::Db2 => DB2.to_vec(),
            WaveletKind::Db4 => DB4.to_vec(),
        };
        let len = lowpass.len();
        let highpass = (0..len)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * lowpass[len - 1 - k]
            })
            .collect();
        Self {
            kind,
            lowpass,
            highpass,
        }
    }

    pub fn kind(&self) -> WaveletKind {
        self.kind
    }

    pub fn lowpass(&self) -> &[f64] {
        &self.lowpass
    }

    pub fn highpass(&self) -> &[f64] {
        &self.highpass
    }

    pub fn len(&self) -> usize {
        self.lowpass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lowpass.is_empty()
    }
}

impl From<WaveletKind> for WaveletSpec {
    fn from(kind: WaveletKind) -> Self {
        WaveletSpec::new(kind)
    }
}

/// Approximation and per-level detail coefficients. `details[0]` is the
/// finest level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletDecomposition {
    pub wavelet: WaveletKind,
    pub levels: usize,
    pub approx: Vec<f64>,
    pub details: Vec<Vec<f64>>,
    pub original_length: usize,
    pub boundary: String,
}

impl WaveletDecomposition {
    /// Input length of each analysis stage, finest first.
    pub fn stage_lengths(&self) -> Vec<usize> {
        stage_lengths(self.original_length, self.levels)
    }

    pub fn energy(&self) -> f64 {
        sum_sq(&self.approx) + self.details.iter().map(|d| sum_sq(d)).sum::<f64>()
    }
}

fn stage_lengths(n: usize, levels: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(levels);
    let mut len = n;
    for _ in 0..levels {
        out.push(len);
        len = len.div_ceil(2);
    }
    out
}

fn sum_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// One analysis stage. Returns `(approx, detail)`, each `ceil(n / 2)` long.
fn analysis_step(x: &[f64], w: &WaveletSpec) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let padded = n + n % 2;
    let half = padded / 2;
    let sample = |i: usize| if i < n { x[i] } else { x[n - 1] };
    let mut approx = vec![0.0; half];
    let mut detail = vec![0.0; half];
    for i in 0..half {
        let mut a = 0.0;
        let mut d = 0.0;
        for (k, (&h, &g)) in w.lowpass.iter().zip(&w.highpass).enumerate() {
            let v = sample((2 * i + k) % padded);
            a += h * v;
            d += g * v;
        }
        approx[i] = a;
        detail[i] = d;
    }
    (approx, detail)
}

/// Inverse of [`analysis_step`] for an output of length `n`.
fn synthesis_step(approx: &[f64], detail: &[f64], w: &WaveletSpec, n: usize) -> Vec<f64> {
    let padded = 2 * approx.len();
    let mut y = vec![0.0; padded];
    for (i, (&a, &d)) in approx.iter().zip(detail).enumerate() {
        for (k, (&h, &g)) in w.lowpass.iter().zip(&w.highpass).enumerate() {
            y[(2 * i + k) % padded] += h * a + g * d;
        }
    }
    y.truncate(n);
    y
}

/// Multilevel periodic decomposition.
pub fn dwt_forward(
    signal: &[f64],
    wavelet: &WaveletSpec,
    levels: usize,
) -> Result<WaveletDecomposition, DwtError> {
    if levels == 0 || levels > MAX_LEVELS {
        return Err(DwtError::BadLevels(levels));
    }
    if signal.len() < (1usize << levels) {
        return Err(DwtError::TooShort {
            len: signal.len(),
            levels,
        });
    }
    let mut details = Vec::with_capacity(levels);
    let mut current = signal.to_vec();
    for _ in 0..levels {
        let (a, d) = analysis_step(&current, wavelet);
        details.push(d);
        current = a;
    }
    Ok(WaveletDecomposition {
        wavelet: wavelet.kind,
        levels,
        approx: current,
        details,
        original_length: signal.len(),
        boundary: "periodic".to_string(),
    })
}

/// Reconstructs the signal from its coefficients.
pub fn dwt_inverse(
    decomp: &WaveletDecomposition,
    wavelet: &WaveletSpec,
) -> Result<Vec<f64>, DwtError> {
    if decomp.wavelet != wavelet.kind {
        return Err(DwtError::ShapeMismatch(format!(
            "decomposition uses {}, inverse requested with {}",
            decomp.wavelet, wavelet.kind
        )));
    }
    if decomp.boundary != "periodic" {
        return Err(DwtError::ShapeMismatch(format!(
            "unsupported boundary mode {:?}",
            decomp.boundary
        )));
    }
    if decomp.levels == 0 || decomp.details.len() != decomp.levels {
        return Err(DwtError::ShapeMismatch(format!(
            "{} detail bands for {} levels",
            decomp.details.len(),
            decomp.levels
        )));
    }
    let lengths = decomp.stage_lengths();
    for (j, (d, &n)) in decomp.details.iter().zip(&lengths).enumerate() {
        if d.len() != n.div_ceil(2) {
            return Err(DwtError::ShapeMismatch(format!(
                "level {} has {} coefficients, expected {}",
                j + 1,
                d.len(),
                n.div_ceil(2)
            )));
        }
    }
    let coarsest = lengths[decomp.levels - 1].div_ceil(2);
    if decomp.approx.len() != coarsest {
        return Err(DwtError::ShapeMismatch(format!(
            "approximation has {} coefficients, expected {coarsest}",
            decomp.approx.len()
        )));
    }
    let mut current = decomp.approx.clone();
    for j in (0..decomp.levels).rev() {
        current = synthesis_step(&current, &decomp.details[j], wavelet, lengths[j]);
    }
    Ok(current)
}

/// Trend/fluctuation split of a series.
#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseResult {
    /// Reconstruction from the approximation band alone.
    pub denoised: SpatialSeries,
    /// `series - denoised`: everything carried by the detail bands.
    pub residual: SpatialSeries,
}

/// Zeroes every detail band and reconstructs the trend; the residual holds
/// the fluctuations.
pub fn denoise(
    series: &SpatialSeries,
    wavelet: &WaveletSpec,
    levels: usize,
) -> Result<DenoiseResult, DwtError> {
    let mut decomp = dwt_forward(series.values(), wavelet, levels)?;
    for d in &mut decomp.details {
        d.iter_mut().for_each(|c| *c = 0.0);
    }
    let trend = dwt_inverse(&decomp, wavelet)?;
    let residual: Vec<f64> = series
        .values()
        .iter()
        .zip(&trend)
        .map(|(x, t)| x - t)
        .collect();
    Ok(DenoiseResult {
        denoised: series.derived(trend, "denoised"),
        residual: series.derived(residual, "residual"),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyProfile {
    /// Share of the total detail energy at each level, finest first.
    pub detail_energy: Vec<f64>,
    /// Approximation energy over total coefficient energy.
    pub approx_fraction: f64,
}

/// Per-level energy of the detail bands, normalized over detail levels only.
/// Detail energy below `1e-24` of the approximation energy counts as zero.
pub fn normalized_energy(decomp: &WaveletDecomposition) -> Result<EnergyProfile, DwtError> {
    let per_level: Vec<f64> = decomp.details.iter().map(|d| sum_sq(d)).collect();
    let detail_total: f64 = per_level.iter().sum();
    let approx = sum_sq(&decomp.approx);
    // rounding noise left by the filters on a constant signal is not detail
    if !detail_total.is_finite() || detail_total <= DEGENERATE_DETAIL_RATIO * approx {
        return Err(DwtError::DegenerateSignal);
    }
    Ok(EnergyProfile {
        detail_energy: per_level.iter().map(|e| e / detail_total).collect(),
        approx_fraction: approx / (approx + detail_total),
    })
}
