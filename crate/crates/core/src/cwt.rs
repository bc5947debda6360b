//! Complex Morlet continuous wavelet transform and its scale profile.
//!
//! `W(s, b) = s^{-1/2} Σ_t x(t) ψ*((t - b) / s)` with
//! `ψ(u) = π^{-1/4} e^{i ω0 u} e^{-u²/2}`. The wavelet is periodized over the
//! series length, so a circular shift of the input circularly shifts every
//! row of the scalogram. Rows are computed as circular cross-correlations
//! in the Fourier domain.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_OMEGA0: f64 = 6.0;
pub const DEFAULT_SCALE_COUNT: usize = 32;
pub const DEFAULT_MIN_SCALE: f64 = 2.0;
/// Default largest scale is `N / DEFAULT_MAX_SCALE_DIVISOR`.
pub const DEFAULT_MAX_SCALE_DIVISOR: f64 = 8.0;
/// Smallest centre frequency accepted; below it the Morlet wavelet is too
/// far from admissible.
pub const MIN_OMEGA0: f64 = 5.0;

// e^{-u²/2} underflows to zero beyond this many scale units.
const ENVELOPE_CUTOFF: f64 = 38.6;

#[derive(Debug, Error, PartialEq)]
pub enum CwtError {
    #[error("bad scale {0}: scales must be finite, >= 1 and strictly increasing")]
    BadScale(f64),
    #[error("omega0 must be >= {MIN_OMEGA0}, got {0}")]
    BadOmega(f64),
    #[error("no scales requested")]
    NoScales,
    #[error("degenerate: zero mean power at scale {scale}")]
    ZeroPower { scale: f64 },
}

/// `count` logarithmically spaced scales in `[min, max]`.
pub fn log_scales(min: f64, max: f64, count: usize) -> Result<Vec<f64>, CwtError> {
    if count == 0 {
        return Err(CwtError::NoScales);
    }
    if !(min.is_finite() && min >= 1.0) {
        return Err(CwtError::BadScale(min));
    }
    if !(max.is_finite() && max > min) && !(count == 1 && max == min) {
        return Err(CwtError::BadScale(max));
    }
    if count == 1 {
        return Ok(vec![min]);
    }
    let (lo, hi) = (min.ln(), max.ln());
    let step = (hi - lo) / (count - 1) as f64;
    let mut out: Vec<f64> = (0..count).map(|i| (lo + step * i as f64).exp()).collect();
    // pin the ends exactly
    out[0] = min;
    out[count - 1] = max;
    Ok(out)
}

/// The default grid: 32 log-spaced scales from 2 to `n / 8` samples.
pub fn default_scales(n: usize) -> Result<Vec<f64>, CwtError> {
    log_scales(
        DEFAULT_MIN_SCALE,
        n as f64 / DEFAULT_MAX_SCALE_DIVISOR,
        DEFAULT_SCALE_COUNT,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scalogram {
    pub scales: Vec<f64>,
    /// `power[i][b] = |W(scales[i], b)|²`
    pub power: Vec<Vec<f64>>,
    pub omega0: f64,
}

impl Scalogram {
    pub fn len(&self) -> usize {
        self.power.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn validate(scales: &[f64], omega0: f64) -> Result<(), CwtError> {
    if !(omega0.is_finite() && omega0 >= MIN_OMEGA0) {
        return Err(CwtError::BadOmega(omega0));
    }
    if scales.is_empty() {
        return Err(CwtError::NoScales);
    }
    let mut prev = 0.0;
    for &s in scales {
        if !(s.is_finite() && s >= 1.0 && s > prev) {
            return Err(CwtError::BadScale(s));
        }
        prev = s;
    }
    Ok(())
}

/// Morlet mother wavelet.
pub fn morlet(u: f64, omega0: f64) -> Complex64 {
    let envelope = PI.powf(-0.25) * (-0.5 * u * u).exp();
    Complex64::from_polar(envelope, omega0 * u)
}

/// `s^{-1/2} Σ_m ψ((τ + mN) / s)` for `τ = 0..N`.
fn periodized_kernel(n: usize, scale: f64, omega0: f64) -> Vec<Complex64> {
    let norm = scale.sqrt().recip();
    let reach = ENVELOPE_CUTOFF * scale;
    let nf = n as f64;
    (0..n)
        .map(|tau| {
            let t = tau as f64;
            let first = ((-reach - t) / nf).ceil() as i64;
            let last = ((reach - t) / nf).floor() as i64;
            (first..=last)
                .map(|m| morlet((t + m as f64 * nf) / scale, omega0))
                .sum::<Complex64>()
                * norm
        })
        .collect()
}

/// Subtracts the mean. A constant series maps to exact zeros.
pub(crate) fn centered(series: &[f64]) -> Vec<f64> {
    match series.first() {
        None => Vec::new(),
        Some(&first) if series.iter().all(|&v| v == first) => vec![0.0; series.len()],
        Some(_) => {
            let mean = series.iter().sum::<f64>() / series.len() as f64;
            series.iter().map(|v| v - mean).collect()
        }
    }
}

/// Morlet scalogram of the mean-subtracted series.
pub fn cwt_morlet(series: &[f64], scales: &[f64], omega0: f64) -> Result<Scalogram, CwtError> {
    validate(scales, omega0)?;
    let n = series.len();
    let x = centered(series);
    if n == 0 {
        return Ok(Scalogram {
            scales: scales.to_vec(),
            power: vec![Vec::new(); scales.len()],
            omega0,
        });
    }
    let mut planner = FftPlanner::<f64>::new();
    let forward: Arc<dyn Fft<f64>> = planner.plan_fft_forward(n);
    let inverse: Arc<dyn Fft<f64>> = planner.plan_fft_inverse(n);

    let mut spectrum: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    forward.process(&mut spectrum);

    let inv_n = 1.0 / n as f64;
    let power = scales
        .par_iter()
        .map(|&s| {
            let mut kernel = periodized_kernel(n, s, omega0);
            forward.process(&mut kernel);
            let mut row: Vec<Complex64> = spectrum
                .iter()
                .zip(&kernel)
                .map(|(a, k)| a * k.conj())
                .collect();
            inverse.process(&mut row);
            row.iter().map(|w| (w * inv_n).norm_sqr()).collect()
        })
        .collect();
    Ok(Scalogram {
        scales: scales.to_vec(),
        power,
        omega0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalePoint {
    pub scale: f64,
    pub log10_mean_power: f64,
}

/// Semi-log scale profile: linear scale against log10 of position-averaged
/// power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleProfile {
    pub points: Vec<ScalePoint>,
}

impl ScaleProfile {
    /// Scale with the largest mean power.
    pub fn peak_scale(&self) -> Option<f64> {
        self.points
            .iter()
            .max_by(|a, b| a.log10_mean_power.total_cmp(&b.log10_mean_power))
            .map(|p| p.scale)
    }
}

pub fn semilog_profile(scalogram: &Scalogram) -> Result<ScaleProfile, CwtError> {
    let points = scalogram
        .scales
        .iter()
        .zip(&scalogram.power)
        .map(|(&scale, row)| {
            let mean = row.iter().sum::<f64>() / row.len().max(1) as f64;
            if mean > 0.0 && mean.is_finite() {
                Ok(ScalePoint {
                    scale,
                    log10_mean_power: mean.log10(),
                })
            } else {
                Err(CwtError::ZeroPower { scale })
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ScaleProfile { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    fn sine(n: usize, period: f64, amp: f64) -> Vec<f64> {
        (0..n)
            .map(|t| amp * (2.0 * PI * t as f64 / period).sin())
            .collect()
    }

    /// Defining double sum, evaluated term by term.
    fn direct_power(x: &[f64], s: f64, omega0: f64) -> Vec<f64> {
        let n = x.len();
        let mean = x.iter().sum::<f64>() / n as f64;
        let images = (ENVELOPE_CUTOFF * s / n as f64).ceil() as i64 + 1;
        (0..n)
            .map(|b| {
                let mut w = Complex64::new(0.0, 0.0);
                for (t, &xt) in x.iter().enumerate() {
                    for m in -images..=images {
                        let u = (t as f64 - b as f64 + m as f64 * n as f64) / s;
                        w += (xt - mean) * morlet(u, omega0).conj();
                    }
                }
                (w / s.sqrt()).norm_sqr()
            })
            .collect()
    }

    #[test]
    fn matches_direct_sum() {
        for (n, seed) in [(64usize, 1u64), (100, 2), (256, 3)] {
            let x = noise(n, seed);
            let scales = log_scales(1.0, n as f64 / 2.0, 7).unwrap();
            let sg = cwt_morlet(&x, &scales, 6.0).unwrap();
            for (s, row) in scales.iter().zip(&sg.power) {
                let direct = direct_power(&x, *s, 6.0);
                let peak = direct.iter().cloned().fold(0.0, f64::max);
                for (a, b) in row.iter().zip(&direct) {
                    assert!((a - b).abs() <= 1e-6 * peak, "n={n} s={s}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn zero_series_gives_zero_scalogram() {
        let sg = cwt_morlet(&[0.0; 128], &[2.0, 4.0, 8.0], 6.0).unwrap();
        assert!(sg.power.iter().flatten().all(|&p| p == 0.0));
        assert_eq!(
            semilog_profile(&sg),
            Err(CwtError::ZeroPower { scale: 2.0 })
        );
        let sg = cwt_morlet(&[3.0; 128], &[2.0], 6.0).unwrap();
        assert!(sg.power.iter().flatten().all(|&p| p == 0.0));
    }

    #[test]
    fn doubling_amplitude_quadruples_power() {
        let x = noise(200, 5);
        let x2: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let scales = default_scales(200).unwrap();
        let a = cwt_morlet(&x, &scales, 6.0).unwrap();
        let b = cwt_morlet(&x2, &scales, 6.0).unwrap();
        for (ra, rb) in a.power.iter().zip(&b.power) {
            for (p, q) in ra.iter().zip(rb) {
                assert!((4.0 * p - q).abs() <= 1e-12 * q.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn sine_peak_near_period_over_fourier_factor() {
        let x = sine(1024, 32.0, 1.0);
        let scales: Vec<f64> = (2..=128).map(|s| s as f64).collect();
        let profile = semilog_profile(&cwt_morlet(&x, &scales, 6.0).unwrap()).unwrap();
        let peak = profile.peak_scale().unwrap();
        assert!((28.0..=36.0).contains(&peak), "peak {peak}");
        assert_eq!(peak, 31.0);
    }

    #[test]
    fn uniform_power_profile() {
        let sg = Scalogram {
            scales: vec![2.0, 3.0],
            power: vec![vec![100.0; 10], vec![100.0; 10]],
            omega0: 6.0,
        };
        let p = semilog_profile(&sg).unwrap();
        assert!(p
            .points
            .iter()
            .all(|pt| (pt.log10_mean_power - 2.0).abs() < 1e-15));
        let scaled = Scalogram {
            power: vec![vec![1000.0; 10], vec![1000.0; 10]],
            ..sg
        };
        let q = semilog_profile(&scaled).unwrap();
        for (a, b) in p.points.iter().zip(&q.points) {
            assert!((b.log10_mean_power - a.log10_mean_power - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn profile_is_shift_invariant_and_amplitude_equivariant() {
        let x = noise(512, 9);
        let scales = default_scales(512).unwrap();
        let base = semilog_profile(&cwt_morlet(&x, &scales, 6.0).unwrap()).unwrap();

        let mut shifted = x.clone();
        shifted.rotate_right(37);
        let sg_shift = cwt_morlet(&shifted, &scales, 6.0).unwrap();
        let p_shift = semilog_profile(&sg_shift).unwrap();
        for (a, b) in base.points.iter().zip(&p_shift.points) {
            assert!((a.log10_mean_power - b.log10_mean_power).abs() < 1e-12);
        }
        // rows themselves shift
        let sg = cwt_morlet(&x, &scales, 6.0).unwrap();
        for (row, srow) in sg.power.iter().zip(&sg_shift.power) {
            let peak = row.iter().cloned().fold(0.0, f64::max);
            for b in 0..512 {
                assert!((row[b] - srow[(b + 37) % 512]).abs() < 1e-10 * peak);
            }
        }

        let k = 3.7;
        let scaled: Vec<f64> = x.iter().map(|v| k * v).collect();
        let p_scaled = semilog_profile(&cwt_morlet(&scaled, &scales, 6.0).unwrap()).unwrap();
        for (a, b) in base.points.iter().zip(&p_scaled.points) {
            assert!((b.log10_mean_power - a.log10_mean_power - 2.0 * k.log10()).abs() < 1e-12);
        }
    }

    #[test]
    fn removing_a_tone_lowers_its_matched_scale() {
        let n = 1024;
        let one = sine(n, 16.0, 1.0);
        let two: Vec<f64> = one
            .iter()
            .zip(sine(n, 64.0, 0.8))
            .map(|(a, b)| a + b)
            .collect();
        // matched scale for period 64 at omega0 = 6
        let matched = 64.0 * (6.0 + (2.0f64 + 36.0).sqrt()) / (4.0 * PI);
        let scales = [matched / 2.0, matched];
        let p1 = semilog_profile(&cwt_morlet(&one, &scales, 6.0).unwrap()).unwrap();
        let p2 = semilog_profile(&cwt_morlet(&two, &scales, 6.0).unwrap()).unwrap();
        assert!(p1.points[1].log10_mean_power < p2.points[1].log10_mean_power);
        assert!(p1.points[0].log10_mean_power <= p2.points[0].log10_mean_power + 1e-12);
    }

    #[test]
    fn validation() {
        assert_eq!(
            cwt_morlet(&[1.0; 8], &[0.5], 6.0),
            Err(CwtError::BadScale(0.5))
        );
        assert_eq!(
            cwt_morlet(&[1.0; 8], &[2.0, 2.0], 6.0),
            Err(CwtError::BadScale(2.0))
        );
        assert_eq!(
            cwt_morlet(&[1.0; 8], &[2.0], 4.0),
            Err(CwtError::BadOmega(4.0))
        );
        assert_eq!(cwt_morlet(&[1.0; 8], &[], 6.0), Err(CwtError::NoScales));
    }

    #[test]
    fn default_grid_shape() {
        let s = default_scales(16384).unwrap();
        assert_eq!(s.len(), 32);
        assert_eq!(s[0], 2.0);
        assert_eq!(s[31], 2048.0);
        assert!(s.windows(2).all(|w| w[1] > w[0]));
    }
}
