//! Command-line frontend.
//!
//! Exit codes: 0 success, 1 usage error, 2 input or format error,
//! 3 numerically degenerate data.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, ColorChoice, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

use crate::cwt;
use crate::dwt::{self, WaveletKind, WaveletSpec};
use crate::grid::{self, PgmEncoding, SpatialSeries};
use crate::mfdfa::{self, ZeroSegmentPolicy};
use crate::report::{
    self, CwtSettings, MfdfaSettings, PipelineConfig, ReportFormat, ScaleSpacing, Thresholds,
};
use crate::synth;
use crate::{Error, ErrorCategory, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "hetscan",
    version,
    about = "Directional heterogeneity analysis of grayscale images"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Analyze both unfoldings of a PGM image and report the verdict.
    Analyze(AnalyzeArgs),
    /// Wavelet decomposition of a single-column CSV series.
    Dwt(DwtArgs),
    /// Morlet semi-log scale profile of a single-column CSV series.
    Cwt(CwtArgs),
    /// MFDFA of a single-column CSV series.
    Mfdfa(MfdfaArgs),
    /// Generate a synthetic series (CSV) and optionally its PGM refold.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SpacingArg {
    Log,
    Dyadic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    Exclude,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    WhiteNoise,
    Fgn,
    Cascade,
    RowFgn,
}

impl From<SpacingArg> for ScaleSpacing {
    fn from(v: SpacingArg) -> Self {
        match v {
            SpacingArg::Log => ScaleSpacing::Logarithmic,
            SpacingArg::Dyadic => ScaleSpacing::Dyadic,
        }
    }
}

impl From<PolicyArg> for ZeroSegmentPolicy {
    fn from(v: PolicyArg) -> Self {
        match v {
            PolicyArg::Exclude => ZeroSegmentPolicy::Exclude,
            PolicyArg::Error => ZeroSegmentPolicy::Error,
        }
    }
}

fn parse_wavelet(s: &str) -> std::result::Result<WaveletKind, String> {
    s.parse().map_err(|e: dwt::DwtError| e.to_string())
}

#[derive(Debug, Args)]
struct WaveletArgs {
    /// Wavelet family: haar, db2 or db4.
    #[arg(long, default_value_t = report::DEFAULT_WAVELET, value_parser = parse_wavelet)]
    wavelet: WaveletKind,
    /// Number of decomposition levels.
    #[arg(long, default_value_t = report::DEFAULT_LEVELS)]
    levels: usize,
}

#[derive(Debug, Args)]
struct CwtKnobs {
    /// Morlet centre frequency.
    #[arg(long, default_value_t = cwt::DEFAULT_OMEGA0)]
    omega0: f64,
    /// Number of log-spaced Morlet scales.
    #[arg(long, default_value_t = cwt::DEFAULT_SCALE_COUNT)]
    cwt_scales: usize,
    /// Smallest Morlet scale in samples.
    #[arg(long, default_value_t = cwt::DEFAULT_MIN_SCALE)]
    cwt_min_scale: f64,
    /// Largest Morlet scale in samples [default: N/8].
    #[arg(long)]
    cwt_max_scale: Option<f64>,
}

impl CwtKnobs {
    fn settings(&self) -> CwtSettings {
        CwtSettings {
            omega0: self.omega0,
            scale_count: self.cwt_scales,
            min_scale: self.cwt_min_scale,
            max_scale: self.cwt_max_scale,
        }
    }
}

#[derive(Debug, Args)]
struct MfdfaKnobs {
    /// Smallest moment order q.
    #[arg(long, default_value_t = mfdfa::DEFAULT_Q_MIN, allow_hyphen_values = true)]
    q_min: f64,
    /// Largest moment order q.
    #[arg(long, default_value_t = mfdfa::DEFAULT_Q_MAX, allow_hyphen_values = true)]
    q_max: f64,
    /// Step of the q grid.
    #[arg(long, default_value_t = mfdfa::DEFAULT_Q_STEP)]
    q_step: f64,
    /// Polynomial detrending order (0 to 3).
    #[arg(long, default_value_t = mfdfa::DEFAULT_DETREND_ORDER)]
    order: usize,
    /// Smallest MFDFA segment length.
    #[arg(long, default_value_t = mfdfa::DEFAULT_MIN_SCALE)]
    min_scale: usize,
    /// Largest MFDFA segment length [default: N/4].
    #[arg(long)]
    max_scale: Option<usize>,
    /// Number of MFDFA scales for log spacing.
    #[arg(long, default_value_t = mfdfa::DEFAULT_SCALE_COUNT)]
    scales: usize,
    /// Placement of MFDFA scales: log (distinct log-spaced integers) or
    /// dyadic (every power of two in range).
    #[arg(long, value_enum, default_value_t = SpacingArg::Log)]
    spacing: SpacingArg,
    /// Handling of segments with zero fluctuation: exclude them, or fail
    /// when a non-positive q meets one.
    #[arg(long, value_enum, default_value_t = PolicyArg::Exclude)]
    zero_segments: PolicyArg,
}

impl MfdfaKnobs {
    fn settings(&self) -> MfdfaSettings {
        MfdfaSettings {
            q_min: self.q_min,
            q_max: self.q_max,
            q_step: self.q_step,
            detrend_order: self.order,
            min_scale: self.min_scale,
            max_scale: self.max_scale,
            scale_count: self.scales,
            scale_spacing: self.spacing.into(),
            zero_segment_policy: self.zero_segments.into(),
        }
    }
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Input image (PGM, P2 or P5).
    #[arg(long, required_unless_present = "dump_config")]
    input: Option<PathBuf>,
    /// Output file for json, output directory for csv [default: stdout for json].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format.
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
    /// Run the Morlet and MFDFA stages on the raw series instead of the
    /// wavelet fluctuation series.
    #[arg(long)]
    raw: bool,
    /// Print the effective configuration as JSON and exit.
    #[arg(long)]
    dump_config: bool,
    #[command(flatten)]
    wavelet: WaveletArgs,
    #[command(flatten)]
    cwt: CwtKnobs,
    #[command(flatten)]
    mfdfa: MfdfaKnobs,
    /// Threshold on |h_v(2) - h_h(2)|.
    #[arg(long, default_value_t = report::DEFAULT_THETA_HURST)]
    theta_hurst: f64,
    /// Threshold on the difference of singularity-spectrum widths.
    #[arg(long, default_value_t = report::DEFAULT_THETA_WIDTH)]
    theta_width: f64,
    /// Threshold on the L1 distance of normalized detail energies.
    #[arg(long, default_value_t = report::DEFAULT_THETA_ENERGY)]
    theta_energy: f64,
}

impl AnalyzeArgs {
    fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            wavelet: self.wavelet.wavelet,
            levels: self.wavelet.levels,
            cwt: self.cwt.settings(),
            mfdfa: self.mfdfa.settings(),
            thresholds: Thresholds {
                hurst: self.theta_hurst,
                width: self.theta_width,
                energy: self.theta_energy,
            },
            raw: self.raw,
        }
    }
}

#[derive(Debug, Args)]
struct DwtArgs {
    /// Input series (single-column CSV).
    #[arg(long)]
    input: PathBuf,
    /// Normalized detail energy per level (CSV) [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the fluctuation (residual) series here.
    #[arg(long)]
    residual: Option<PathBuf>,
    /// Write the trend (approximation-only reconstruction) here.
    #[arg(long)]
    trend: Option<PathBuf>,
    #[command(flatten)]
    wavelet: WaveletArgs,
}

#[derive(Debug, Args)]
struct CwtArgs {
    /// Input series (single-column CSV).
    #[arg(long)]
    input: PathBuf,
    /// Semi-log scale profile (CSV) [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    cwt: CwtKnobs,
}

#[derive(Debug, Args)]
struct MfdfaArgs {
    /// Input series (single-column CSV).
    #[arg(long)]
    input: PathBuf,
    /// Generalized Hurst exponents (CSV) [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the fluctuation function table here.
    #[arg(long)]
    fluctuation: Option<PathBuf>,
    /// Write the singularity spectrum here.
    #[arg(long)]
    spectrum: Option<PathBuf>,
    #[command(flatten)]
    mfdfa: MfdfaKnobs,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Generator.
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Random seed; required by every random generator.
    #[arg(long)]
    seed: Option<u64>,
    /// Series length for white-noise and fgn.
    #[arg(long, default_value_t = 1 << 14)]
    length: usize,
    /// Hurst exponent for fgn and row-fgn.
    #[arg(long, default_value_t = 0.7)]
    hurst: f64,
    /// Cascade weight.
    #[arg(long, default_value_t = 0.6)]
    a: f64,
    /// Cascade levels; the series has 2^levels samples.
    #[arg(long, default_value_t = 14)]
    levels: usize,
    /// Image rows for row-fgn.
    #[arg(long, default_value_t = 128)]
    rows: usize,
    /// Image columns for row-fgn.
    #[arg(long, default_value_t = 128)]
    cols: usize,
    /// Series output (CSV) [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the series as a square PGM image (row-major refold).
    #[arg(long)]
    pgm: Option<PathBuf>,
    /// Maximum grey level of the PGM image.
    #[arg(long, default_value_t = 65535)]
    max_value: u16,
}

/// Parses a single numeric column with an optional non-numeric header.
/// Blank lines are skipped; line numbers in errors are 1-based.
pub fn parse_series_csv(bytes: &[u8]) -> Result<SpatialSeries> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse {
        line: 1 + bytes[..e.valid_up_to()]
            .iter()
            .filter(|&&b| b == b'\n')
            .count(),
        message: "invalid UTF-8".into(),
    })?;
    let mut values = Vec::new();
    let mut seen_line = false;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let first = !seen_line;
        seen_line = true;
        match line.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            Ok(_) => {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("non-finite value {line:?}"),
                })
            }
            Err(_) if first && !line.contains(',') => {}
            Err(_) => {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected a single number, found {line:?}"),
                })
            }
        }
    }
    Ok(SpatialSeries::new(values, "csv")?)
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn read_series(path: &Path) -> Result<SpatialSeries> {
    parse_series_csv(&read_file(path)?)
}

fn emit(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, body).map_err(|e| Error::io(path, e)),
        None => io::stdout()
            .write_all(body.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn series_csv(values: &[f64]) -> String {
    let mut s = String::from("value\n");
    for v in values {
        let _ = writeln!(s, "{}", report::fmt_f64(*v));
    }
    s
}

fn run_analyze(args: &AnalyzeArgs) -> Result<()> {
    let cfg = args.pipeline();
    cfg.validate()?;
    if args.dump_config {
        let mut s = serde_json::to_string_pretty(&cfg)?;
        s.push('\n');
        return emit(None, &s);
    }
    let input = args.input.as_deref().expect("clap enforces --input");
    let image = grid::load_pgm(&read_file(input)?)?;
    let report = report::analyze_image(&image, &cfg)?;
    match (args.format, args.out.as_deref()) {
        (FormatArg::Json, None) => emit(None, &report::to_json(&report)?),
        (FormatArg::Json, Some(out)) => {
            report::serialize_report(&report, ReportFormat::Json, out).map(drop)
        }
        (FormatArg::Csv, Some(out)) => {
            report::serialize_report(&report, ReportFormat::CsvBundle, out).map(drop)
        }
        (FormatArg::Csv, None) => Err(Error::InvalidConfig(
            "--format csv needs --out <DIR>".into(),
        )),
    }
}

fn run_dwt(args: &DwtArgs) -> Result<()> {
    let series = read_series(&args.input)?;
    let wavelet = WaveletSpec::new(args.wavelet.wavelet);
    let decomp = dwt::dwt_forward(series.values(), &wavelet, args.wavelet.levels)?;
    let energy = dwt::normalized_energy(&decomp)?;
    let mut body = String::from("level,energy\n");
    for (j, e) in energy.detail_energy.iter().enumerate() {
        let _ = writeln!(body, "{},{}", j + 1, report::fmt_f64(*e));
    }
    if args.residual.is_some() || args.trend.is_some() {
        let split = dwt::denoise(&series, &wavelet, args.wavelet.levels)?;
        if let Some(path) = &args.residual {
            emit(Some(path), &series_csv(split.residual.values()))?;
        }
        if let Some(path) = &args.trend {
            emit(Some(path), &series_csv(split.denoised.values()))?;
        }
    }
    emit(args.out.as_deref(), &body)
}

fn run_cwt(args: &CwtArgs) -> Result<()> {
    let series = read_series(&args.input)?;
    let settings = args.cwt.settings();
    let scales = settings.scales_for(series.len())?;
    let scalogram = cwt::cwt_morlet(series.values(), &scales, settings.omega0)?;
    let profile = cwt::semilog_profile(&scalogram)?;
    let mut body = String::from("scale,log10_mean_power\n");
    for p in &profile.points {
        let _ = writeln!(
            body,
            "{},{}",
            report::fmt_f64(p.scale),
            report::fmt_f64(p.log10_mean_power)
        );
    }
    emit(args.out.as_deref(), &body)
}

fn run_mfdfa(args: &MfdfaArgs) -> Result<()> {
    let series = read_series(&args.input)?;
    let cfg = args.mfdfa.settings().config_for(series.len())?;
    let result = mfdfa::analyze(&series, &cfg)?;
    let mut body = String::from("q,h,stderr,r2\n");
    for e in &result.hurst.entries {
        let _ = writeln!(
            body,
            "{},{},{},{}",
            report::fmt_f64(e.q),
            report::fmt_f64(e.h),
            report::fmt_f64(e.stderr),
            report::fmt_f64(e.r2)
        );
    }
    if let Some(path) = &args.fluctuation {
        let mut s = String::from("q,s,Fq\n");
        for r in &result.fluctuation.rows {
            let _ = writeln!(
                s,
                "{},{},{}",
                report::fmt_f64(r.q),
                r.s,
                report::fmt_f64(r.fq)
            );
        }
        emit(Some(path), &s)?;
    }
    if let Some(path) = &args.spectrum {
        let mut s = String::from("q,tau,alpha,f_alpha\n");
        for p in &result.spectrum.points {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                report::fmt_f64(p.q),
                report::fmt_f64(p.tau),
                report::fmt_f64(p.alpha),
                report::fmt_f64(p.f_alpha)
            );
        }
        emit(Some(path), &s)?;
    }
    emit(args.out.as_deref(), &body)
}

fn run_synth(args: &SynthArgs) -> Result<()> {
    let need_seed = || {
        args.seed
            .ok_or_else(|| Error::InvalidConfig("random generators need an explicit --seed".into()))
    };
    let (values, image) = match args.kind {
        KindArg::WhiteNoise => (
            synth::gen_white_noise(args.length, need_seed()?)?.into_values(),
            None,
        ),
        KindArg::Fgn => (
            synth::gen_fgn(args.hurst, args.length, need_seed()?)?.into_values(),
            None,
        ),
        KindArg::Cascade => (synth::gen_binomial_cascade(args.a, args.levels)?, None),
        KindArg::RowFgn => {
            let image = synth::row_fgn_image(
                args.rows,
                args.cols,
                args.hurst,
                need_seed()?,
                args.max_value,
            )?;
            let values = image.pixels().iter().map(|&p| p as f64).collect();
            (values, Some(image))
        }
    };
    if let Some(path) = &args.pgm {
        let image = match image {
            Some(image) => image,
            None => synth::series_to_square_grid(&values, args.max_value)?,
        };
        fs::write(path, image.to_pgm(PgmEncoding::Binary)).map_err(|e| Error::io(path, e))?;
    }
    emit(args.out.as_deref(), &series_csv(&values))
}

fn exit_code(category: ErrorCategory) -> i32 {
    match category {
        ErrorCategory::Usage => EXIT_USAGE,
        ErrorCategory::Input => EXIT_INPUT,
        ErrorCategory::Degenerate => EXIT_DEGENERATE,
    }
}

fn color_choice() -> ColorChoice {
    match std::env::var_os("NO_COLOR") {
        Some(v) if !v.is_empty() => ColorChoice::Never,
        _ => ColorChoice::Auto,
    }
}

/// Parses `argv` (including the program name), runs the command and
/// returns the process exit code. Diagnostics go to stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match Cli::command()
        .color(color_choice())
        .try_get_matches_from(argv)
    {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return EXIT_USAGE;
        }
    };
    let result = match &cli.command {
        Command::Analyze(a) => run_analyze(a),
        Command::Dwt(a) => run_dwt(a),
        Command::Cwt(a) => run_cwt(a),
        Command::Mfdfa(a) => run_mfdfa(a),
        Command::Synth(a) => run_synth(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("hetscan: {e}");
            exit_code(e.category())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn padded(body: &str) -> String {
        let mut s = body.to_string();
        for i in 0..64 {
            let _ = writeln!(s, "{i}");
        }
        s
    }

    #[test]
    fn csv_values_in_order() {
        let s = parse_series_csv(padded("1\n2\n3\n").as_bytes()).unwrap();
        assert_eq!(&s.values()[..3], &[1.0, 2.0, 3.0]);
        assert_eq!(s.len(), 67);
    }

    #[test]
    fn csv_header_is_skipped() {
        let s = parse_series_csv(padded("value\n1.5\n").as_bytes()).unwrap();
        assert_eq!(s.values()[0], 1.5);
        let s = parse_series_csv(padded("\r\n-2e-3\r\n").as_bytes()).unwrap();
        assert_eq!(s.values()[0], -0.002);
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        match parse_series_csv(b"x\n1\nabc\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        match parse_series_csv(b"1\nNaN\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        match parse_series_csv(b"1,2\n3\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(
            parse_series_csv(b"1\n2\n").unwrap_err().category(),
            ErrorCategory::Input
        );
    }

    #[test]
    fn defaults_match_library() {
        let cli = Cli::try_parse_from(["hetscan", "analyze", "--input", "x.pgm"]).unwrap();
        let Command::Analyze(args) = cli.command else {
            panic!("wrong subcommand")
        };
        assert_eq!(args.pipeline(), PipelineConfig::default());
    }

    #[test]
    fn usage_errors() {
        assert_eq!(
            run(["hetscan", "analyze", "--levels", "x", "--input", "a"]),
            EXIT_USAGE
        );
        assert_eq!(run(["hetscan", "frobnicate"]), EXIT_USAGE);
        assert_eq!(run(["hetscan", "--help"]), EXIT_OK);
        assert_eq!(run(["hetscan", "synth", "--kind", "fgn"]), EXIT_USAGE);
    }

    #[test]
    fn negative_q_is_accepted() {
        let cli =
            Cli::try_parse_from(["hetscan", "mfdfa", "--input", "x", "--q-min", "-3"]).unwrap();
        let Command::Mfdfa(args) = cli.command else {
            panic!("wrong subcommand")
        };
        assert_eq!(args.mfdfa.q_min, -3.0);
    }
}
