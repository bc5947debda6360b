//! Multifractal detrended fluctuation analysis.
//!
//! The series is integrated into a profile, cut into `N_s = floor(N / s)`
//! non-overlapping segments from the start and another `N_s` from the end,
//! and each segment is detrended with a least-squares polynomial of order
//! `m`. The segment variances are averaged with moment `q` to give
//! `F_q(s)`, and the generalized Hurst exponent `h(q)` is the slope of
//! `ln F_q(s)` against `ln s`.
//!
//! Segments whose detrended variance vanishes (flat regions, exact
//! polynomial stretches) are counted separately. Under
//! [`ZeroSegmentPolicy::Exclude`] they are dropped from every moment; under
//! [`ZeroSegmentPolicy::Error`] they make every `q <= 0` moment an error.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{SpatialSeries, MIN_SERIES_LEN};

pub const DEFAULT_DETREND_ORDER: usize = 1;
pub const MAX_DETREND_ORDER: usize = 3;
pub const DEFAULT_MIN_SCALE: usize = 16;
/// Default largest scale is `N / DEFAULT_MAX_SCALE_DIVISOR`.
pub const DEFAULT_MAX_SCALE_DIVISOR: usize = 4;
pub const DEFAULT_SCALE_COUNT: usize = 20;
pub const DEFAULT_Q_MIN: f64 = -5.0;
pub const DEFAULT_Q_MAX: f64 = 5.0;
pub const DEFAULT_Q_STEP: f64 = 0.5;
/// Fewest scales a scaling fit is attempted on.
pub const MIN_FIT_SCALES: usize = 8;

// A detrended variance at or below this fraction of the segment's mean
// squared profile value is rounding noise and counts as zero.
const ZERO_VARIANCE_RATIO: f64 = 1e-20;

#[derive(Debug, Error, PartialEq)]
pub enum MfdfaError {
    #[error("series too short: {len} values, at least {min} required")]
    TooShort { len: usize, min: usize },
    #[error("degenerate: zero variance")]
    ZeroVariance,
    #[error("bad scale {scale} for a profile of length {len} (need s <= N)")]
    BadScale { scale: usize, len: usize },
    #[error(
        "singular polynomial fit: scale {scale} cannot support order {order} (need s >= order + 2)"
    )]
    SingularFit { scale: usize, order: usize },
    #[error("degenerate: every segment at scale {scale} has zero variance")]
    AllSegmentsDegenerate { scale: usize },
    #[error("degenerate: zero-variance segment at scale {scale} with moment q = {q}")]
    NegativeMomentOnZero { scale: usize, q: f64 },
    #[error("degenerate: scaling fit for q = {q} has only {valid} usable scales (need {MIN_FIT_SCALES})")]
    FitFailure { q: f64, valid: usize },
    #[error("invalid MFDFA configuration: {0}")]
    BadConfig(String),
    #[error("singularity spectrum needs at least 5 q values, got {0}")]
    TooFewPoints(usize),
}

/// Cumulative sum of mean-subtracted values, `Y(i) = Σ_{k<=i} (x_k - mean)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    values: Vec<f64>,
}

impl Profile {
    /// Integrates `x` with no length or variance checks.
    pub fn integrate(x: &[f64]) -> Profile {
        let mean = x.iter().sum::<f64>() / x.len().max(1) as f64;
        let mut acc = 0.0;
        let values = x
            .iter()
            .map(|v| {
                acc += v - mean;
                acc
            })
            .collect();
        Profile { values }
    }

    /// Wraps values that already form a profile.
    pub fn from_values(values: Vec<f64>) -> Profile {
        Profile { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Profile of a series, rejecting constant input.
pub fn profile(series: &SpatialSeries) -> Result<Profile, MfdfaError> {
    let x = series.values();
    if x.len() < MIN_SERIES_LEN {
        return Err(MfdfaError::TooShort {
            len: x.len(),
            min: MIN_SERIES_LEN,
        });
    }
    if x.iter().all(|&v| v == x[0]) {
        return Err(MfdfaError::ZeroVariance);
    }
    Ok(Profile::integrate(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroSegmentPolicy {
    #[default]
    Exclude,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfdfaConfig {
    pub scales: Vec<usize>,
    pub q_grid: Vec<f64>,
    pub detrend_order: usize,
    pub zero_segment_policy: ZeroSegmentPolicy,
}

/// `count` distinct integers spread logarithmically over `[min, max]`. If
/// the range holds fewer than `count` integers, all of them are returned.
pub fn log_spaced_scales(min: usize, max: usize, count: usize) -> Vec<usize> {
    if count == 0 || min == 0 || max < min {
        return Vec::new();
    }
    if max - min < count {
        return (min..=max).collect();
    }
    let (lo, hi) = ((min as f64).ln(), (max as f64).ln());
    let step = if count > 1 {
        (hi - lo) / (count - 1) as f64
    } else {
        0.0
    };
    let mut out: Vec<usize> = (0..count)
        .map(|i| ((lo + step * i as f64).exp().round() as usize).clamp(min, max))
        .collect();
    // Rounding can collide at the small end; push forward, then back.
    for i in 1..count {
        out[i] = out[i].max(out[i - 1] + 1);
    }
    out[count - 1] = out[count - 1].min(max);
    for i in (0..count - 1).rev() {
        out[i] = out[i].min(out[i + 1] - 1);
    }
    out
}

/// `q_min, q_min + step, ..., q_max` with values snapped to the step lattice.
pub fn q_range(q_min: f64, q_max: f64, step: f64) -> Result<Vec<f64>, MfdfaError> {
    if !(q_min.is_finite() && q_max.is_finite() && step.is_finite() && step > 0.0 && q_max >= q_min)
    {
        return Err(MfdfaError::BadConfig(format!(
            "q range [{q_min}, {q_max}] with step {step}"
        )));
    }
    let count = ((q_max - q_min) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| {
            let q = q_min + step * i as f64;
            // keep exact lattice values such as 0.0 and 2.0
            let snapped = (q / step).round() * step;
            if (q - snapped).abs() < 1e-9 * step {
                snapped
            } else {
                q
            }
        })
        .collect())
}

pub fn default_q_grid() -> Vec<f64> {
    q_range(DEFAULT_Q_MIN, DEFAULT_Q_MAX, DEFAULT_Q_STEP).expect("default q range is valid")
}

impl MfdfaConfig {
    /// Default configuration for a series of length `n`: order 1, q from -5
    /// to 5 in steps of 0.5 and 20 scales between 16 and `n / 4`.
    pub fn for_length(n: usize) -> MfdfaConfig {
        MfdfaConfig {
            scales: log_spaced_scales(
                DEFAULT_MIN_SCALE,
                n / DEFAULT_MAX_SCALE_DIVISOR,
                DEFAULT_SCALE_COUNT,
            ),
            q_grid: default_q_grid(),
            detrend_order: DEFAULT_DETREND_ORDER,
            zero_segment_policy: ZeroSegmentPolicy::Exclude,
        }
    }

    pub fn validate(&self, n: usize) -> Result<(), MfdfaError> {
        let bad = |msg: String| Err(MfdfaError::BadConfig(msg));
        if self.detrend_order > MAX_DETREND_ORDER {
            return bad(format!(
                "detrend order {} outside [0, {MAX_DETREND_ORDER}]",
                self.detrend_order
            ));
        }
        if self.scales.len() < MIN_FIT_SCALES {
            return bad(format!(
                "{} scales configured for length {n}, need at least {MIN_FIT_SCALES}",
                self.scales.len()
            ));
        }
        if self.scales.windows(2).any(|w| w[1] <= w[0]) {
            return bad("scales must be strictly increasing".into());
        }
        let lo = self.detrend_order + 2;
        let hi = n / 4;
        if let Some(s) = self.scales.iter().find(|&&s| s < lo || s > hi) {
            return bad(format!("scale {s} outside [{lo}, {hi}] for length {n}"));
        }
        if self.q_grid.iter().any(|q| !q.is_finite())
            || self.q_grid.windows(2).any(|w| w[1] <= w[0])
        {
            return bad("q grid must be finite and strictly increasing".into());
        }
        if !self.q_grid.contains(&2.0) {
            return bad("q grid must contain 2".into());
        }
        Ok(())
    }
}

/// Detrended variances `F²(b, s)` of all `2 N_s` segments at one scale.
/// Zero-variance segments are stored as exact zeros and counted in
/// `excluded_count`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentFluctuations {
    pub scale: usize,
    pub order: usize,
    pub values: Vec<f64>,
    pub excluded_count: usize,
}

impl SegmentFluctuations {
    pub fn from_values(scale: usize, order: usize, values: Vec<f64>) -> Self {
        let excluded_count = values.iter().filter(|&&v| v == 0.0).count();
        Self {
            scale,
            order,
            values,
            excluded_count,
        }
    }

    pub fn retained(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().copied().filter(|&v| v > 0.0)
    }

    pub fn retained_count(&self) -> usize {
        self.values.len() - self.excluded_count
    }
}

/// Orthonormal basis of polynomials of degree `<= order` on `s` equally
/// spaced points, built by modified Gram-Schmidt on centred monomials.
fn polynomial_basis(s: usize, order: usize) -> Vec<Vec<f64>> {
    let centre = (s as f64 - 1.0) / 2.0;
    let t: Vec<f64> = (0..s).map(|i| (i as f64 - centre) / s as f64).collect();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(order + 1);
    for p in 0..=order {
        let mut v: Vec<f64> = t.iter().map(|x| x.powi(p as i32)).collect();
        // two passes keep the basis orthogonal to working precision
        for _ in 0..2 {
            for b in &basis {
                let dot: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
                v.iter_mut().zip(b).for_each(|(a, c)| *a -= dot * c);
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= norm);
        basis.push(v);
    }
    basis
}

fn detrended_variance(segment: &[f64], basis: &[Vec<f64>], residual: &mut Vec<f64>) -> f64 {
    residual.clear();
    residual.extend_from_slice(segment);
    for b in basis {
        let coef: f64 = segment.iter().zip(b).map(|(y, q)| y * q).sum();
        residual.iter_mut().zip(b).for_each(|(r, q)| *r -= coef * q);
    }
    let s = segment.len() as f64;
    let var = residual.iter().map(|r| r * r).sum::<f64>() / s;
    let scale = segment.iter().map(|y| y * y).sum::<f64>() / s;
    if var <= ZERO_VARIANCE_RATIO * scale {
        0.0
    } else {
        var
    }
}

/// Segment variances at scale `s` with detrending order `m`. Segments are
/// taken from the start (`b = 1..N_s`) and then from the end. Any scale
/// with at least one segment is accepted here; [`MfdfaConfig::validate`]
/// applies the tighter `s <= N/4` rule used for scaling fits.
pub fn segment_fluctuation(
    p: &Profile,
    s: usize,
    m: usize,
) -> Result<SegmentFluctuations, MfdfaError> {
    let n = p.len();
    if s <= m + 1 {
        return Err(MfdfaError::SingularFit { scale: s, order: m });
    }
    if s > n {
        return Err(MfdfaError::BadScale { scale: s, len: n });
    }
    let basis = polynomial_basis(s, m);
    let segments = n / s;
    let y = p.values();
    let mut residual = Vec::with_capacity(s);
    let mut values = Vec::with_capacity(2 * segments);
    for b in 0..segments {
        values.push(detrended_variance(
            &y[b * s..(b + 1) * s],
            &basis,
            &mut residual,
        ));
    }
    for b in 0..segments {
        let start = n - (b + 1) * s;
        values.push(detrended_variance(
            &y[start..start + s],
            &basis,
            &mut residual,
        ));
    }
    Ok(SegmentFluctuations::from_values(s, m, values))
}

/// q-th order fluctuation function `F_q(s)`.
///
/// For `q = 0` the logarithmic average `exp(mean(ln F²) / 2)` is used.
pub fn fluctuation_function(
    sf: &SegmentFluctuations,
    q: f64,
    policy: ZeroSegmentPolicy,
) -> Result<f64, MfdfaError> {
    let retained = sf.retained_count();
    if retained == 0 {
        return Err(MfdfaError::AllSegmentsDegenerate { scale: sf.scale });
    }
    let divisor = match policy {
        ZeroSegmentPolicy::Exclude => retained,
        ZeroSegmentPolicy::Error if sf.excluded_count > 0 && q <= 0.0 => {
            return Err(MfdfaError::NegativeMomentOnZero { scale: sf.scale, q });
        }
        // zero segments contribute nothing to positive moments
        ZeroSegmentPolicy::Error => sf.values.len(),
    } as f64;

    if q == 0.0 {
        let mean_log = sf.retained().map(f64::ln).sum::<f64>() / divisor;
        return Ok((0.5 * mean_log).exp());
    }
    // log-sum-exp of (q/2) ln F² keeps large |q| in range
    let logs: Vec<f64> = sf.retained().map(|v| 0.5 * q * v.ln()).collect();
    let peak = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logs.iter().map(|l| (l - peak).exp()).sum();
    Ok(((peak + (sum / divisor).ln()) / q).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluctuationRow {
    pub q: f64,
    pub s: usize,
    pub fq: f64,
}

/// `F_q(s)` for every usable (q, s) cell, ordered by q then s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluctuationTable {
    pub rows: Vec<FluctuationRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HurstEntry {
    pub q: f64,
    pub h: f64,
    pub stderr: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HurstSpectrum {
    pub entries: Vec<HurstEntry>,
    /// `h(2)`
    pub hurst: f64,
    /// q values where `h` rises to the next grid point by more than three
    /// combined standard errors.
    pub monotonicity_violations: Vec<f64>,
}

impl HurstSpectrum {
    pub fn h(&self, q: f64) -> Option<f64> {
        self.entries.iter().find(|e| e.q == q).map(|e| e.h)
    }
}

/// Ordinary least squares of `y` on `x`: `(slope, stderr, r²)`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let stderr = if n > 2.0 {
        (ssr / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    let r2 = if syy > 0.0 { 1.0 - ssr / syy } else { 1.0 };
    (slope, stderr, r2)
}

/// Fluctuation table and generalized Hurst exponents.
pub fn hurst_spectrum(
    p: &Profile,
    cfg: &MfdfaConfig,
) -> Result<(FluctuationTable, HurstSpectrum), MfdfaError> {
    cfg.validate(p.len())?;
    let segments = cfg
        .scales
        .par_iter()
        .map(|&s| segment_fluctuation(p, s, cfg.detrend_order))
        .collect::<Result<Vec<_>, _>>()?;

    let per_q = cfg
        .q_grid
        .par_iter()
        .map(|&q| {
            let mut cells = Vec::with_capacity(segments.len());
            for sf in &segments {
                match fluctuation_function(sf, q, cfg.zero_segment_policy) {
                    Ok(fq) if fq > 0.0 && fq.is_finite() => {
                        cells.push(FluctuationRow { q, s: sf.scale, fq })
                    }
                    Ok(_) | Err(MfdfaError::AllSegmentsDegenerate { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
            if cells.len() < MIN_FIT_SCALES {
                return Err(MfdfaError::FitFailure {
                    q,
                    valid: cells.len(),
                });
            }
            let x: Vec<f64> = cells.iter().map(|c| (c.s as f64).ln()).collect();
            let y: Vec<f64> = cells.iter().map(|c| c.fq.ln()).collect();
            let (h, stderr, r2) = ols_slope(&x, &y);
            Ok((cells, HurstEntry { q, h, stderr, r2 }))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut rows = Vec::new();
    let mut entries = Vec::with_capacity(per_q.len());
    for (cells, entry) in per_q {
        rows.extend(cells);
        entries.push(entry);
    }
    let monotonicity_violations = entries
        .windows(2)
        .filter(|w| w[1].h - w[0].h > 3.0 * w[0].stderr.hypot(w[1].stderr))
        .map(|w| w[0].q)
        .collect();
    let hurst = entries
        .iter()
        .find(|e| e.q == 2.0)
        .map(|e| e.h)
        .expect("validated q grid contains 2");
    Ok((
        FluctuationTable { rows },
        HurstSpectrum {
            entries,
            hurst,
            monotonicity_violations,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub q: f64,
    pub tau: f64,
    pub alpha: f64,
    pub f_alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularitySpectrum {
    pub points: Vec<SpectrumPoint>,
    /// `max α - min α`
    pub width: f64,
}

/// Legendre transform of `τ(q) = q h(q) - 1` on a q grid. `α` is the
/// finite-difference derivative of `τ` (central inside, one-sided at the
/// ends) and `f(α) = q α - τ`.
pub fn legendre_spectrum(q: &[f64], h: &[f64]) -> Result<SingularitySpectrum, MfdfaError> {
    let n = q.len();
    if n < 5 || h.len() != n {
        return Err(MfdfaError::TooFewPoints(n.min(h.len())));
    }
    let tau: Vec<f64> = q.iter().zip(h).map(|(q, h)| q * h - 1.0).collect();
    let points: Vec<SpectrumPoint> = (0..n)
        .map(|i| {
            let (lo, hi) = (i.saturating_sub(1), (i + 1).min(n - 1));
            let alpha = (tau[hi] - tau[lo]) / (q[hi] - q[lo]);
            SpectrumPoint {
                q: q[i],
                tau: tau[i],
                alpha,
                f_alpha: q[i] * alpha - tau[i],
            }
        })
        .collect();
    let (lo, hi) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.alpha), hi.max(p.alpha))
        });
    Ok(SingularitySpectrum {
        points,
        width: hi - lo,
    })
}

pub fn singularity_spectrum(hs: &HurstSpectrum) -> Result<SingularitySpectrum, MfdfaError> {
    let q: Vec<f64> = hs.entries.iter().map(|e| e.q).collect();
    let h: Vec<f64> = hs.entries.iter().map(|e| e.h).collect();
    legendre_spectrum(&q, &h)
}

/// Profile, Hurst spectrum and singularity spectrum in one pass.
#[derive(Debug, Clone, PartialEq)]
pub struct MfdfaResult {
    pub fluctuation: FluctuationTable,
    pub hurst: HurstSpectrum,
    pub spectrum: SingularitySpectrum,
}

pub fn analyze(series: &SpatialSeries, cfg: &MfdfaConfig) -> Result<MfdfaResult, MfdfaError> {
    let p = profile(series)?;
    let (fluctuation, hurst) = hurst_spectrum(&p, cfg)?;
    let spectrum = singularity_spectrum(&hurst)?;
    Ok(MfdfaResult {
        fluctuation,
        hurst,
        spectrum,
    })
}
