//! Synthetic series with known scaling, used as validation oracles.
//!
//! Randomness comes from ChaCha8 seeded with a `u64`, so a given seed
//! produces the same series on every platform.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{ImageGrid, SpatialSeries};

pub const MIN_FGN_LENGTH: usize = 256;
pub const MAX_CASCADE_LEVELS: usize = 24;

// Circulant eigenvalues above -EIGEN_ROUNDOFF * max are rounding noise of
// a non-negative spectrum and are taken as zero.
const EIGEN_ROUNDOFF: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("Hurst parameter must lie in (0, 1), got {0}")]
    BadH(f64),
    #[error("bad length: {0}")]
    BadLength(String),
    #[error("degenerate: circulant embedding has negative eigenvalue {min_eigenvalue}")]
    EmbeddingFailure { min_eigenvalue: f64 },
    #[error("bad parameter: {0}")]
    BadParam(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorKind {
    WhiteNoise,
    Fgn { hurst: f64 },
    BinomialCascade { a: f64, levels: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub length: usize,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn generate(&self) -> Result<SpatialSeries, SynthError> {
        let (values, label) = match self.kind {
            GeneratorKind::WhiteNoise => (
                white_noise(self.length, self.seed),
                format!("white_noise(n={}, seed={})", self.length, self.seed),
            ),
            GeneratorKind::Fgn { hurst } => (
                fgn(hurst, self.length, self.seed)?,
                format!("fgn(H={hurst}, n={}, seed={})", self.length, self.seed),
            ),
            GeneratorKind::BinomialCascade { a, levels } => {
                if self.length != 1usize << levels.min(63) {
                    return Err(SynthError::BadLength(format!(
                        "cascade with {levels} levels has length {}, not {}",
                        1u64 << levels.min(63),
                        self.length
                    )));
                }
                (
                    gen_binomial_cascade(a, levels)?,
                    format!("binomial_cascade(a={a}, levels={levels})"),
                )
            }
        };
        SpatialSeries::new(values, label).map_err(|e| SynthError::BadLength(e.to_string()))
    }
}

/// I.i.d. standard normal samples.
pub fn white_noise(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

pub fn gen_white_noise(n: usize, seed: u64) -> Result<SpatialSeries, SynthError> {
    GeneratorSpec {
        kind: GeneratorKind::WhiteNoise,
        length: n,
        seed,
    }
    .generate()
}

/// Autocovariance of unit-variance fractional Gaussian noise at lag `k`.
pub fn fgn_autocovariance(hurst: f64, k: usize) -> f64 {
    let k = k as f64;
    let e = 2.0 * hurst;
    0.5 * ((k + 1.0).powf(e) - 2.0 * k.powf(e) + (k - 1.0).abs().powf(e))
}

/// Fractional Gaussian noise by exact circulant embedding of the
/// autocovariance (Davies-Harte).
pub fn fgn(hurst: f64, n: usize, seed: u64) -> Result<Vec<f64>, SynthError> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(SynthError::BadH(hurst));
    }
    if n < MIN_FGN_LENGTH || !n.is_power_of_two() {
        return Err(SynthError::BadLength(format!(
            "fGn length must be a power of two >= {MIN_FGN_LENGTH}, got {n}"
        )));
    }
    let m = 2 * n;
    let mut row: Vec<Complex64> = (0..m)
        .map(|j| {
            let lag = if j <= n { j } else { m - j };
            Complex64::new(fgn_autocovariance(hurst, lag), 0.0)
        })
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(m);
    fft.process(&mut row);
    let max = row.iter().map(|c| c.re).fold(f64::NEG_INFINITY, f64::max);
    let min = row.iter().map(|c| c.re).fold(f64::INFINITY, f64::min);
    if min < -EIGEN_ROUNDOFF * max {
        return Err(SynthError::EmbeddingFailure {
            min_eigenvalue: min,
        });
    }
    let eigen: Vec<f64> = row.iter().map(|c| c.re.max(0.0)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let mf = m as f64;
    let mut w = vec![Complex64::new(0.0, 0.0); m];
    w[0] = Complex64::new((eigen[0] / mf).sqrt() * normal(), 0.0);
    w[n] = Complex64::new((eigen[n] / mf).sqrt() * normal(), 0.0);
    for k in 1..n {
        let amp = (eigen[k] / (2.0 * mf)).sqrt();
        let z = Complex64::new(amp * normal(), amp * normal());
        w[k] = z;
        w[m - k] = z.conj();
    }
    fft.process(&mut w);
    Ok(w[..n].iter().map(|c| c.re).collect())
}

pub fn gen_fgn(hurst: f64, n: usize, seed: u64) -> Result<SpatialSeries, SynthError> {
    GeneratorSpec {
        kind: GeneratorKind::Fgn { hurst },
        length: n,
        seed,
    }
    .generate()
}

/// Deterministic binomial multiplicative cascade with `2^levels` cells;
/// each cell `v` splits into `(v a, v (1 - a))`.
pub fn gen_binomial_cascade(a: f64, levels: usize) -> Result<Vec<f64>, SynthError> {
    if !(a > 0.0 && a < 1.0) {
        return Err(SynthError::BadParam(format!(
            "cascade weight a = {a} outside (0, 1)"
        )));
    }
    if !(1..=MAX_CASCADE_LEVELS).contains(&levels) {
        return Err(SynthError::BadParam(format!(
            "cascade levels {levels} outside [1, {MAX_CASCADE_LEVELS}]"
        )));
    }
    let mut cells = vec![1.0];
    for _ in 0..levels {
        cells = cells.iter().flat_map(|&v| [v * a, v * (1.0 - a)]).collect();
    }
    Ok(cells)
}

/// Closed-form generalized Hurst exponent of the binomial cascade,
/// `h(q) = 1/q - ln(a^q + (1-a)^q) / (q ln 2)`. At `q = 0` the limit
/// `-(ln a + ln(1-a)) / (2 ln 2)` is returned.
pub fn analytic_cascade_h(q: f64, a: f64) -> Result<f64, SynthError> {
    if !(a > 0.0 && a < 1.0) {
        return Err(SynthError::BadParam(format!(
            "cascade weight a = {a} outside (0, 1)"
        )));
    }
    if !q.is_finite() {
        return Err(SynthError::BadParam(format!(
            "moment q = {q} is not finite"
        )));
    }
    let b = 1.0 - a;
    let ln2 = std::f64::consts::LN_2;
    if q.abs() < 1e-9 {
        return Ok(-(a.ln() + b.ln()) / (2.0 * ln2));
    }
    Ok(1.0 / q - (a.powf(q) + b.powf(q)).ln() / (q * ln2))
}

/// Refolds a series row-major into a `rows x cols` image, mapping its
/// range linearly onto `[0, max_value]`.
pub fn series_to_grid(
    values: &[f64],
    rows: usize,
    cols: usize,
    max_value: u16,
) -> Result<ImageGrid, SynthError> {
    if rows * cols != values.len() || values.is_empty() {
        return Err(SynthError::BadLength(format!(
            "{} values cannot fill a {rows}x{cols} image",
            values.len()
        )));
    }
    if max_value == 0 {
        return Err(SynthError::BadParam("max_value must be >= 1".into()));
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(SynthError::BadParam(
            "series contains non-finite values".into(),
        ));
    }
    let span = hi - lo;
    let pixels = values
        .iter()
        .map(|&v| {
            if span > 0.0 {
                ((v - lo) / span * max_value as f64).round() as u16
            } else {
                0
            }
        })
        .collect();
    ImageGrid::new(rows, cols, max_value, pixels).map_err(|e| SynthError::BadParam(e.to_string()))
}

/// Image whose rows are independent fGn realisations with exponent
/// `hurst`; columns are uncorrelated. Each row is cut from a series of
/// power-of-two length at least [`MIN_FGN_LENGTH`].
pub fn row_fgn_image(
    rows: usize,
    cols: usize,
    hurst: f64,
    seed: u64,
    max_value: u16,
) -> Result<ImageGrid, SynthError> {
    if rows == 0 || cols == 0 {
        return Err(SynthError::BadLength(format!("empty {rows}x{cols} image")));
    }
    let n = cols.max(MIN_FGN_LENGTH).next_power_of_two();
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        let row = fgn(hurst, n, seeds.next_u64())?;
        values.extend_from_slice(&row[..cols]);
    }
    series_to_grid(&values, rows, cols, max_value)
}

/// Refolds a series of perfect-square length into a square image.
pub fn series_to_square_grid(values: &[f64], max_value: u16) -> Result<ImageGrid, SynthError> {
    let side = (values.len() as f64).sqrt().round() as usize;
    if side * side != values.len() {
        return Err(SynthError::BadLength(format!(
            "{} values do not form a square image",
            values.len()
        )));
    }
    series_to_grid(values, side, side, max_value)
}
