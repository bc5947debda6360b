//! C ABI over the hetscan pipeline.
//!
//! Objects are opaque handles created and destroyed by this library.
//! Every fallible function returns an [`HsStatus`]; on failure a message
//! is available from [`hs_last_error_message`] on the same thread.
//! Panics never cross the boundary and are reported as
//! [`HsStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hetscan::grid::{self, ImageGrid, SpatialSeries, UnfoldDirection};
use hetscan::mfdfa::{self, MfdfaConfig};
use hetscan::report::{self, HeterogeneityReport, PipelineConfig, Thresholds, Verdict};
use hetscan::{synth, Error, ErrorCategory};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InputError = 3,
    Degenerate = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HsDirection {
    Vertical = 0,
    Horizontal = 1,
}

/// Mismatch metrics and verdict of a report.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HsMetrics {
    pub delta_hurst: f64,
    pub delta_width: f64,
    pub energy_l1: f64,
    pub heterogeneous: bool,
}

/// Grayscale image.
pub struct HsImage(ImageGrid);

/// Pipeline configuration.
pub struct HsConfig(PipelineConfig);

/// Analysis result for one image.
pub struct HsReport(HeterogeneityReport);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(HsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.category() {
            ErrorCategory::Usage => HsStatus::InvalidArgument,
            ErrorCategory::Input => HsStatus::InputError,
            ErrorCategory::Degenerate => HsStatus::Degenerate,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(HsStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(HsStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            HsStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            HsStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn as_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or an empty string.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn hs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses a binary or ASCII PGM image from memory.
///
/// # Safety
/// `data` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hs_image_from_pgm(
    data: *const u8,
    len: usize,
    out: *mut *mut HsImage,
) -> HsStatus {
    guard(|| {
        let bytes = slice(data, len, "data")?;
        let image = grid::load_pgm(bytes).map_err(Error::from)?;
        put(out, HsImage(image))
    })
}

/// Builds an image from row-major samples.
///
/// # Safety
/// `pixels` must point to `rows * cols` readable values; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn hs_image_from_pixels(
    rows: usize,
    cols: usize,
    max_value: u16,
    pixels: *const u16,
    out: *mut *mut HsImage,
) -> HsStatus {
    guard(|| {
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| invalid("image size overflows"))?;
        let px = slice(pixels, n, "pixels")?;
        let image = ImageGrid::new(rows, cols, max_value, px.to_vec()).map_err(Error::from)?;
        put(out, HsImage(image))
    })
}

/// # Safety
/// `image` must be a live handle; `rows` and `cols` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hs_image_dims(
    image: *const HsImage,
    rows: *mut usize,
    cols: *mut usize,
) -> HsStatus {
    guard(|| {
        let image = &as_ref(image, "image")?.0;
        *as_mut(rows, "rows")? = image.rows();
        *as_mut(cols, "cols")? = image.cols();
        Ok(())
    })
}

/// # Safety
/// `image` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hs_image_free(image: *mut HsImage) {
    if !image.is_null() {
        drop(Box::from_raw(image));
    }
}

/// Default configuration.
#[no_mangle]
pub extern "C" fn hs_config_new() -> *mut HsConfig {
    Box::into_raw(Box::new(HsConfig(PipelineConfig::default())))
}

/// Parses a configuration from JSON in the format written to reports.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hs_config_from_json(
    json: *const c_char,
    out: *mut *mut HsConfig,
) -> HsStatus {
    guard(|| {
        let text = c_str(json, "json")?;
        let cfg: PipelineConfig = serde_json::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        put(out, HsConfig(cfg))
    })
}

/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hs_config_set_thresholds(
    config: *mut HsConfig,
    hurst: f64,
    width: f64,
    energy: f64,
) -> HsStatus {
    guard(|| {
        let cfg = &mut as_mut(config, "config")?.0;
        let mut next = cfg.clone();
        next.thresholds = Thresholds {
            hurst,
            width,
            energy,
        };
        next.validate()?;
        *cfg = next;
        Ok(())
    })
}

/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hs_config_set_raw(config: *mut HsConfig, raw: bool) -> HsStatus {
    guard(|| {
        as_mut(config, "config")?.0.raw = raw;
        Ok(())
    })
}

/// Sets the wavelet by name (`haar`, `db2`, `db4`) and level count.
///
/// # Safety
/// `config` must be a live handle; `name` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hs_config_set_wavelet(
    config: *mut HsConfig,
    name: *const c_char,
    levels: usize,
) -> HsStatus {
    guard(|| {
        let cfg = &mut as_mut(config, "config")?.0;
        let kind = c_str(name, "name")?.parse().map_err(Error::from)?;
        let mut next = cfg.clone();
        next.wavelet = kind;
        next.levels = levels;
        next.validate()?;
        *cfg = next;
        Ok(())
    })
}

/// # Safety
/// `config` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hs_config_free(config: *mut HsConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs the full pipeline. A null `config` means the defaults.
///
/// # Safety
/// `image` must be a live handle, `config` null or a live handle, and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hs_analyze(
    image: *const HsImage,
    config: *const HsConfig,
    out: *mut *mut HsReport,
) -> HsStatus {
    guard(|| {
        let image = &as_ref(image, "image")?.0;
        let default;
        let cfg = match config.as_ref() {
            Some(c) => &c.0,
            None => {
                default = PipelineConfig::default();
                &default
            }
        };
        let report = report::analyze_image(image, cfg)?;
        put(out, HsReport(report))
    })
}

/// # Safety
/// `report` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hs_report_metrics(
    report: *const HsReport,
    out: *mut HsMetrics,
) -> HsStatus {
    guard(|| {
        let r = &as_ref(report, "report")?.0;
        *as_mut(out, "out")? = HsMetrics {
            delta_hurst: r.metrics.delta_hurst,
            delta_width: r.metrics.delta_width,
            energy_l1: r.metrics.energy_l1,
            heterogeneous: r.verdict == Verdict::Heterogeneous,
        };
        Ok(())
    })
}

/// Copies the generalized Hurst exponents of one direction into `q` and
/// `h`. `len` receives the number of entries; if `capacity` is too small
/// nothing is copied and `HS_STATUS_INVALID_ARGUMENT` is returned, so a
/// call with `capacity = 0` queries the size.
///
/// # Safety
/// `report` must be a live handle; `q` and `h` must have room for
/// `capacity` values; `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hs_report_hurst(
    report: *const HsReport,
    direction: HsDirection,
    q: *mut f64,
    h: *mut f64,
    capacity: usize,
    len: *mut usize,
) -> HsStatus {
    guard(|| {
        let r = &as_ref(report, "report")?.0;
        let analysis = match direction {
            HsDirection::Vertical => &r.vertical,
            HsDirection::Horizontal => &r.horizontal,
        };
        let entries = &analysis.hurst.entries;
        *as_mut(len, "len")? = entries.len();
        if capacity < entries.len() {
            return Err(invalid(format!(
                "capacity {capacity} below {} entries",
                entries.len()
            )));
        }
        if q.is_null() || h.is_null() {
            return Err(null("q or h"));
        }
        for (i, e) in entries.iter().enumerate() {
            *q.add(i) = e.q;
            *h.add(i) = e.h;
        }
        Ok(())
    })
}

/// The report as JSON. Release the string with [`hs_string_free`].
///
/// # Safety
/// `report` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hs_report_to_json(
    report: *const HsReport,
    out: *mut *mut c_char,
) -> HsStatus {
    guard(|| {
        let r = &as_ref(report, "report")?.0;
        let json = report::to_json(r)?;
        let c = CString::new(json).map_err(|e| invalid(e.to_string()))?;
        *as_mut(out, "out")? = c.into_raw();
        Ok(())
    })
}

/// # Safety
/// `report` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hs_report_free(report: *mut HsReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Generalized Hurst exponent `h(q)` of a series with the default MFDFA
/// configuration for its length.
///
/// # Safety
/// `values` must point to `len` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hs_mfdfa_hurst(
    values: *const f64,
    len: usize,
    q: f64,
    out: *mut f64,
) -> HsStatus {
    guard(|| {
        let x = slice(values, len, "values")?;
        let series = SpatialSeries::new(x.to_vec(), "ffi").map_err(Error::from)?;
        let mut cfg = MfdfaConfig::for_length(len);
        if !cfg.q_grid.contains(&q) {
            cfg.q_grid.push(q);
            cfg.q_grid.sort_by(f64::total_cmp);
        }
        cfg.validate(len).map_err(Error::from)?;
        let result = mfdfa::analyze(&series, &cfg).map_err(Error::from)?;
        *as_mut(out, "out")? = result.hurst.h(q).expect("q is on the grid");
        Ok(())
    })
}

/// Fills `out` with `len` samples of unit-variance fractional Gaussian
/// noise. `len` must be a power of two of at least 256.
///
/// # Safety
/// `out` must have room for `len` values.
#[no_mangle]
pub unsafe extern "C" fn hs_gen_fgn(hurst: f64, len: usize, seed: u64, out: *mut f64) -> HsStatus {
    guard(|| {
        let values = synth::fgn(hurst, len, seed).map_err(Error::from)?;
        if out.is_null() {
            return Err(null("out"));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), out, len);
        Ok(())
    })
}

/// Series of one unfolding of an image: `len` receives `rows * cols`;
/// values are copied only when `capacity` suffices.
///
/// # Safety
/// `image` must be a live handle; `out` must have room for `capacity`
/// values; `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hs_image_unfold(
    image: *const HsImage,
    direction: HsDirection,
    out: *mut f64,
    capacity: usize,
    len: *mut usize,
) -> HsStatus {
    guard(|| {
        let image = &as_ref(image, "image")?.0;
        let dir = match direction {
            HsDirection::Vertical => UnfoldDirection::Vertical,
            HsDirection::Horizontal => UnfoldDirection::Horizontal,
        };
        let values = grid::scan(image, dir);
        *as_mut(len, "len")? = values.len();
        if capacity < values.len() {
            return Err(invalid(format!(
                "capacity {capacity} below {} samples",
                values.len()
            )));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
        Ok(())
    })
}
