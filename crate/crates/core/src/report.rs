//! Per-image pipeline, direction comparison and report serialization.
//!
//! Each unfolding is decomposed with the DWT (normalized detail energy
//! and a trend/fluctuation split). The Morlet profile and MFDFA are then
//! computed on the fluctuation series, or on the raw series when
//! [`PipelineConfig::raw`] is set. The verdict is `Heterogeneous` when any
//! mismatch metric strictly exceeds its threshold.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cwt::{self, ScaleProfile};
use crate::dwt::{self, EnergyProfile, WaveletKind, WaveletSpec};
use crate::grid::{self, ImageGrid, SpatialSeries, UnfoldDirection};
use crate::mfdfa::{
    self, FluctuationTable, HurstSpectrum, MfdfaConfig, SingularitySpectrum, ZeroSegmentPolicy,
};
use crate::{Error, Result};

pub const SCHEMA_VERSION: &str = "1";
pub const DEFAULT_LEVELS: usize = 5;
pub const DEFAULT_WAVELET: WaveletKind = WaveletKind::Db4;
pub const DEFAULT_THETA_HURST: f64 = 0.05;
pub const DEFAULT_THETA_WIDTH: f64 = 0.10;
pub const DEFAULT_THETA_ENERGY: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub hurst: f64,
    pub width: f64,
    pub energy: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            hurst: DEFAULT_THETA_HURST,
            width: DEFAULT_THETA_WIDTH,
            energy: DEFAULT_THETA_ENERGY,
        }
    }
}

/// How MFDFA scales are placed between the minimum and maximum scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleSpacing {
    /// `scale_count` distinct integers, logarithmically spaced.
    #[default]
    Logarithmic,
    /// Every power of two in range; `scale_count` is ignored.
    Dyadic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CwtSettings {
    pub omega0: f64,
    pub scale_count: usize,
    pub min_scale: f64,
    /// `None` means `N / 8`.
    pub max_scale: Option<f64>,
}

impl Default for CwtSettings {
    fn default() -> Self {
        Self {
            omega0: cwt::DEFAULT_OMEGA0,
            scale_count: cwt::DEFAULT_SCALE_COUNT,
            min_scale: cwt::DEFAULT_MIN_SCALE,
            max_scale: None,
        }
    }
}

impl CwtSettings {
    pub fn scales_for(&self, n: usize) -> Result<Vec<f64>> {
        let max = self
            .max_scale
            .unwrap_or(n as f64 / cwt::DEFAULT_MAX_SCALE_DIVISOR);
        Ok(cwt::log_scales(self.min_scale, max, self.scale_count)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfdfaSettings {
    pub q_min: f64,
    pub q_max: f64,
    pub q_step: f64,
    pub detrend_order: usize,
    pub min_scale: usize,
    /// `None` means `N / 4`.
    pub max_scale: Option<usize>,
    pub scale_count: usize,
    pub scale_spacing: ScaleSpacing,
    pub zero_segment_policy: ZeroSegmentPolicy,
}

impl Default for MfdfaSettings {
    fn default() -> Self {
        Self {
            q_min: mfdfa::DEFAULT_Q_MIN,
            q_max: mfdfa::DEFAULT_Q_MAX,
            q_step: mfdfa::DEFAULT_Q_STEP,
            detrend_order: mfdfa::DEFAULT_DETREND_ORDER,
            min_scale: mfdfa::DEFAULT_MIN_SCALE,
            max_scale: None,
            scale_count: mfdfa::DEFAULT_SCALE_COUNT,
            scale_spacing: ScaleSpacing::Logarithmic,
            zero_segment_policy: ZeroSegmentPolicy::Exclude,
        }
    }
}

impl MfdfaSettings {
    /// Concrete, validated configuration for a series of length `n`.
    pub fn config_for(&self, n: usize) -> Result<MfdfaConfig> {
        let max = self
            .max_scale
            .unwrap_or(n / mfdfa::DEFAULT_MAX_SCALE_DIVISOR);
        let scales = match self.scale_spacing {
            ScaleSpacing::Logarithmic => {
                mfdfa::log_spaced_scales(self.min_scale, max, self.scale_count)
            }
            ScaleSpacing::Dyadic => (0..usize::BITS)
                .map(|k| 1usize << k)
                .filter(|s| (self.min_scale..=max).contains(s))
                .collect(),
        };
        let cfg = MfdfaConfig {
            scales,
            q_grid: mfdfa::q_range(self.q_min, self.q_max, self.q_step)?,
            detrend_order: self.detrend_order,
            zero_segment_policy: self.zero_segment_policy,
        };
        cfg.validate(n)?;
        Ok(cfg)
    }
}

/// Everything that controls [`analyze_image`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub wavelet: WaveletKind,
    pub levels: usize,
    pub cwt: CwtSettings,
    pub mfdfa: MfdfaSettings,
    pub thresholds: Thresholds,
    /// Run the Morlet and MFDFA stages on the raw series instead of the
    /// DWT fluctuation series.
    pub raw: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            wavelet: DEFAULT_WAVELET,
            levels: DEFAULT_LEVELS,
            cwt: CwtSettings::default(),
            mfdfa: MfdfaSettings::default(),
            thresholds: Thresholds::default(),
            raw: false,
        }
    }
}

impl PipelineConfig {
    /// Checks the settings that do not depend on the series length.
    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidConfig(msg));
        if self.levels == 0 || self.levels > dwt::MAX_LEVELS {
            return invalid(format!(
                "levels must be in [1, {}], got {}",
                dwt::MAX_LEVELS,
                self.levels
            ));
        }
        if !(self.cwt.omega0.is_finite() && self.cwt.omega0 >= cwt::MIN_OMEGA0) {
            return invalid(format!(
                "omega0 must be >= {}, got {}",
                cwt::MIN_OMEGA0,
                self.cwt.omega0
            ));
        }
        if self.cwt.scale_count == 0 {
            return invalid("cwt scale count must be positive".into());
        }
        if !(self.cwt.min_scale.is_finite() && self.cwt.min_scale >= 1.0) {
            return invalid(format!(
                "cwt min scale must be >= 1, got {}",
                self.cwt.min_scale
            ));
        }
        if let Some(max) = self.cwt.max_scale {
            if !(max.is_finite() && max >= self.cwt.min_scale) {
                return invalid(format!(
                    "cwt max scale {max} below min scale {}",
                    self.cwt.min_scale
                ));
            }
        }
        mfdfa::q_range(self.mfdfa.q_min, self.mfdfa.q_max, self.mfdfa.q_step)?;
        if self.mfdfa.detrend_order > mfdfa::MAX_DETREND_ORDER {
            return invalid(format!(
                "detrend order must be in [0, {}], got {}",
                mfdfa::MAX_DETREND_ORDER,
                self.mfdfa.detrend_order
            ));
        }
        if self.mfdfa.min_scale < self.mfdfa.detrend_order + 2 {
            return invalid(format!(
                "mfdfa min scale {} too small for detrend order {}",
                self.mfdfa.min_scale, self.mfdfa.detrend_order
            ));
        }
        if let Some(max) = self.mfdfa.max_scale {
            if max < self.mfdfa.min_scale {
                return invalid(format!(
                    "mfdfa max scale {max} below min scale {}",
                    self.mfdfa.min_scale
                ));
            }
        }
        let t = &self.thresholds;
        if [t.hurst, t.width, t.energy]
            .iter()
            .any(|v| !(v.is_finite() && *v >= 0.0))
        {
            return invalid("thresholds must be finite and non-negative".into());
        }
        Ok(())
    }
}

/// Summary of the trend/fluctuation split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DenoiseSummary {
    /// Share of the series energy (about its mean) left in the residual.
    pub residual_energy_fraction: f64,
    pub residual_rms: f64,
}

/// All results for one unfolding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnfoldAnalysis {
    pub direction: UnfoldDirection,
    pub series_length: usize,
    pub energy: EnergyProfile,
    pub denoise: DenoiseSummary,
    pub scale_profile: ScaleProfile,
    pub fluctuation: FluctuationTable,
    pub hurst: HurstSpectrum,
    pub spectrum: SingularitySpectrum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MismatchMetrics {
    /// `|h_v(2) - h_h(2)|`
    pub delta_hurst: f64,
    /// `|Δα_v - Δα_h|`
    pub delta_width: f64,
    /// L1 distance between the normalized detail-energy vectors.
    pub energy_l1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Heterogeneous,
    /// No metric exceeded its threshold. This is absence of evidence, not
    /// a claim of homogeneity.
    NotDistinguished,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Heterogeneous => "Heterogeneous",
            Verdict::NotDistinguished => "NotDistinguished",
        }
    }
}

/// Interpretive choices baked into the analysis, echoed for readers of
/// the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisNotes {
    pub unfold_scan: String,
    pub dwt_boundary: String,
    pub energy_normalization: String,
    pub analysis_series: String,
    pub semilog_axes: String,
    pub q_zero_moment: String,
}

impl AnalysisNotes {
    fn for_config(cfg: &PipelineConfig) -> Self {
        Self {
            unfold_scan: "raster: horizontal row-major top row first, vertical column-major leftmost column first".into(),
            dwt_boundary: "periodic".into(),
            energy_normalization: "detail levels only; approximation reported as approx_fraction".into(),
            analysis_series: if cfg.raw {
                "raw unfolded series".into()
            } else {
                "dwt fluctuation series (input minus approximation-only reconstruction)".into()
            },
            semilog_axes: "linear scale in samples vs log10 of position-averaged Morlet power".into(),
            q_zero_moment: "logarithmic average".into(),
        }
    }
}

/// Parameters that depend on the image size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveParameters {
    pub series_length: usize,
    pub cwt_scales: Vec<f64>,
    pub mfdfa_scales: Vec<usize>,
    pub q_grid: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageInfo {
    pub rows: usize,
    pub cols: usize,
    pub max_value: u16,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeterogeneityReport {
    pub schema_version: String,
    pub input_digest: String,
    pub image: ImageInfo,
    pub config: PipelineConfig,
    pub effective: EffectiveParameters,
    pub notes: AnalysisNotes,
    pub vertical: UnfoldAnalysis,
    pub horizontal: UnfoldAnalysis,
    pub metrics: MismatchMetrics,
    pub thresholds: Thresholds,
    pub verdict: Verdict,
}

/// SHA-256 of the image's canonical byte form.
pub fn image_digest(grid: &ImageGrid) -> String {
    format!(
        "sha256:{}",
        hex::encode(Sha256::digest(grid.canonical_bytes()))
    )
}

/// Runs the DWT, Morlet and MFDFA stages on one series.
pub fn analyze_series(
    series: &SpatialSeries,
    direction: UnfoldDirection,
    cfg: &PipelineConfig,
) -> Result<UnfoldAnalysis> {
    let wavelet = WaveletSpec::new(cfg.wavelet);
    let decomp = dwt::dwt_forward(series.values(), &wavelet, cfg.levels)?;
    let energy = dwt::normalized_energy(&decomp)?;
    let split = dwt::denoise(series, &wavelet, cfg.levels)?;

    let centred = cwt::centered(series.values());
    let total: f64 = centred.iter().map(|v| v * v).sum();
    let residual_energy: f64 = split.residual.values().iter().map(|v| v * v).sum();
    let denoise = DenoiseSummary {
        residual_energy_fraction: if total > 0.0 {
            residual_energy / total
        } else {
            0.0
        },
        residual_rms: (residual_energy / series.len() as f64).sqrt(),
    };

    let target = if cfg.raw { series } else { &split.residual };
    let scales = cfg.cwt.scales_for(target.len())?;
    let scalogram = cwt::cwt_morlet(target.values(), &scales, cfg.cwt.omega0)?;
    let scale_profile = cwt::semilog_profile(&scalogram)?;
    drop(scalogram);

    let mfdfa_cfg = cfg.mfdfa.config_for(target.len())?;
    let result = mfdfa::analyze(target, &mfdfa_cfg)?;

    Ok(UnfoldAnalysis {
        direction,
        series_length: series.len(),
        energy,
        denoise,
        scale_profile,
        fluctuation: result.fluctuation,
        hurst: result.hurst,
        spectrum: result.spectrum,
    })
}

fn configs_match(a: &UnfoldAnalysis, b: &UnfoldAnalysis) -> std::result::Result<(), String> {
    if a.series_length != b.series_length {
        return Err(format!(
            "series lengths {} and {}",
            a.series_length, b.series_length
        ));
    }
    if a.energy.detail_energy.len() != b.energy.detail_energy.len() {
        return Err(format!(
            "{} and {} detail levels",
            a.energy.detail_energy.len(),
            b.energy.detail_energy.len()
        ));
    }
    let qa: Vec<f64> = a.hurst.entries.iter().map(|e| e.q).collect();
    let qb: Vec<f64> = b.hurst.entries.iter().map(|e| e.q).collect();
    if qa != qb {
        return Err("q grids differ".into());
    }
    let sa: Vec<f64> = a.scale_profile.points.iter().map(|p| p.scale).collect();
    let sb: Vec<f64> = b.scale_profile.points.iter().map(|p| p.scale).collect();
    if sa != sb {
        return Err("Morlet scale grids differ".into());
    }
    Ok(())
}

/// Mismatch metrics between two unfoldings and the resulting verdict.
pub fn compare(
    v: &UnfoldAnalysis,
    h: &UnfoldAnalysis,
    thresholds: &Thresholds,
) -> Result<(MismatchMetrics, Verdict)> {
    configs_match(v, h).map_err(Error::ConfigMismatch)?;
    let metrics = MismatchMetrics {
        delta_hurst: (v.hurst.hurst - h.hurst.hurst).abs(),
        delta_width: (v.spectrum.width - h.spectrum.width).abs(),
        energy_l1: v
            .energy
            .detail_energy
            .iter()
            .zip(&h.energy.detail_energy)
            .map(|(a, b)| (a - b).abs())
            .sum(),
    };
    let verdict = if metrics.delta_hurst > thresholds.hurst
        || metrics.delta_width > thresholds.width
        || metrics.energy_l1 > thresholds.energy
    {
        Verdict::Heterogeneous
    } else {
        Verdict::NotDistinguished
    };
    Ok((metrics, verdict))
}

/// Full pipeline on both unfoldings of an image.
pub fn analyze_image(grid: &ImageGrid, cfg: &PipelineConfig) -> Result<HeterogeneityReport> {
    cfg.validate()?;
    let run = |direction: UnfoldDirection| -> Result<UnfoldAnalysis> {
        let series = grid::unfold(grid, direction)?;
        analyze_series(&series, direction, cfg).map_err(|e| Error::Unfolding {
            direction,
            source: Box::new(e),
        })
    };
    let (vertical, horizontal) = rayon::join(
        || run(UnfoldDirection::Vertical),
        || run(UnfoldDirection::Horizontal),
    );
    let (vertical, horizontal) = (vertical?, horizontal?);
    let (metrics, verdict) = compare(&vertical, &horizontal, &cfg.thresholds)?;

    let n = grid.rows() * grid.cols();
    let effective = EffectiveParameters {
        series_length: n,
        cwt_scales: horizontal
            .scale_profile
            .points
            .iter()
            .map(|p| p.scale)
            .collect(),
        mfdfa_scales: cfg.mfdfa.config_for(n)?.scales,
        q_grid: horizontal.hurst.entries.iter().map(|e| e.q).collect(),
    };
    Ok(HeterogeneityReport {
        schema_version: SCHEMA_VERSION.to_string(),
        input_digest: image_digest(grid),
        image: ImageInfo {
            rows: grid.rows(),
            cols: grid.cols(),
            max_value: grid.max_value(),
        },
        config: cfg.clone(),
        effective,
        notes: AnalysisNotes::for_config(cfg),
        vertical,
        horizontal,
        metrics,
        thresholds: cfg.thresholds,
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    CsvBundle,
}

/// Pretty-printed JSON with fields in declaration order and a trailing
/// newline. Floats use the shortest representation that round-trips.
pub fn to_json(report: &HeterogeneityReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json(text: &str) -> Result<HeterogeneityReport> {
    Ok(serde_json::from_str(text)?)
}

/// Shortest round-trip rendering, never locale dependent.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn csv_file(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    out
}

/// The CSV bundle as `(file name, contents)` pairs.
pub fn csv_bundle(report: &HeterogeneityReport) -> Vec<(&'static str, String)> {
    let dirs = [&report.vertical, &report.horizontal];
    let energy = csv_file(
        "direction,level,energy",
        dirs.iter().flat_map(|a| {
            a.energy
                .detail_energy
                .iter()
                .enumerate()
                .map(move |(j, e)| format!("{},{},{}", a.direction, j + 1, fmt_f64(*e)))
        }),
    );
    let scalogram = csv_file(
        "direction,scale,log10_mean_power",
        dirs.iter().flat_map(|a| {
            a.scale_profile.points.iter().map(move |p| {
                format!(
                    "{},{},{}",
                    a.direction,
                    fmt_f64(p.scale),
                    fmt_f64(p.log10_mean_power)
                )
            })
        }),
    );
    let fluctuation = csv_file(
        "direction,q,s,Fq",
        dirs.iter().flat_map(|a| {
            a.fluctuation
                .rows
                .iter()
                .map(move |r| format!("{},{},{},{}", a.direction, fmt_f64(r.q), r.s, fmt_f64(r.fq)))
        }),
    );
    let hurst = csv_file(
        "direction,q,h,stderr,r2",
        dirs.iter().flat_map(|a| {
            a.hurst.entries.iter().map(move |e| {
                format!(
                    "{},{},{},{},{}",
                    a.direction,
                    fmt_f64(e.q),
                    fmt_f64(e.h),
                    fmt_f64(e.stderr),
                    fmt_f64(e.r2)
                )
            })
        }),
    );
    let spectrum = csv_file(
        "direction,q,alpha,f_alpha",
        dirs.iter().flat_map(|a| {
            a.spectrum.points.iter().map(move |p| {
                format!(
                    "{},{},{},{}",
                    a.direction,
                    fmt_f64(p.q),
                    fmt_f64(p.alpha),
                    fmt_f64(p.f_alpha)
                )
            })
        }),
    );
    let m = &report.metrics;
    let t = &report.thresholds;
    let metrics = csv_file(
        "delta_hurst,delta_width,energy_l1,theta_hurst,theta_width,theta_energy,verdict",
        [format!(
            "{},{},{},{},{},{},{}",
            fmt_f64(m.delta_hurst),
            fmt_f64(m.delta_width),
            fmt_f64(m.energy_l1),
            fmt_f64(t.hurst),
            fmt_f64(t.width),
            fmt_f64(t.energy),
            report.verdict.as_str()
        )],
    );
    vec![
        ("energy.csv", energy),
        ("scalogram.csv", scalogram),
        ("fluctuation.csv", fluctuation),
        ("hurst.csv", hurst),
        ("spectrum.csv", spectrum),
        ("metrics.csv", metrics),
    ]
}

/// Writes the report. JSON goes to the file `out`; the CSV bundle goes
/// into the directory `out`, which is created if needed. Returns the
/// paths written.
pub fn serialize_report(
    report: &HeterogeneityReport,
    format: ReportFormat,
    out: &Path,
) -> Result<Vec<PathBuf>> {
    match format {
        ReportFormat::Json => {
            fs::write(out, to_json(report)?).map_err(|e| Error::io(out, e))?;
            Ok(vec![out.to_path_buf()])
        }
        ReportFormat::CsvBundle => {
            fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
            csv_bundle(report)
                .into_iter()
                .map(|(name, body)| {
                    let path = out.join(name);
                    fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
                    Ok(path)
                })
                .collect()
        }
    }
}
