//! Grayscale rasters, PGM ingestion and unfolding into 1-D series.
//!
//! An image is turned into two spatial series by plain raster scans:
//! horizontal unfolding reads rows left to right (top row first), vertical
//! unfolding reads columns top to bottom (leftmost column first).

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Shortest series accepted by the analysis pipeline.
pub const MIN_SERIES_LEN: usize = 64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GridError {
    #[error("bad magic number: expected P2 or P5")]
    BadMagic,
    #[error("malformed PGM header: {0}")]
    BadHeader(String),
    #[error("truncated data: expected {expected} samples, found {found}")]
    TruncatedData { expected: usize, found: usize },
    #[error("range error: {0}")]
    RangeError(String),
    #[error("invalid image shape: {0}")]
    InvalidShape(String),
    #[error("series too small: {len} values, at least {MIN_SERIES_LEN} required")]
    TooSmall { len: usize },
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnfoldDirection {
    Horizontal,
    Vertical,
}

impl UnfoldDirection {
    pub fn as_str(self) -> &'static str {
        match self {
            UnfoldDirection::Horizontal => "horizontal",
            UnfoldDirection::Vertical => "vertical",
        }
    }
}

impl fmt::Display for UnfoldDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Rectangular grayscale raster with row-major pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageGrid {
    rows: usize,
    cols: usize,
    max_value: u16,
    pixels: Vec<u16>,
}

impl ImageGrid {
    pub fn new(
        rows: usize,
        cols: usize,
        max_value: u16,
        pixels: Vec<u16>,
    ) -> Result<Self, GridError> {
        if rows == 0 || cols == 0 {
            return Err(GridError::InvalidShape(format!(
                "{rows}x{cols} has no pixels"
            )));
        }
        if max_value == 0 {
            return Err(GridError::RangeError(
                "max_value must be in [1, 65535]".into(),
            ));
        }
        let expected = rows
            .checked_mul(cols)
            .ok_or_else(|| GridError::InvalidShape(format!("{rows}x{cols} overflows")))?;
        if pixels.len() != expected {
            return Err(GridError::InvalidShape(format!(
                "{rows}x{cols} needs {expected} pixels, got {}",
                pixels.len()
            )));
        }
        if let Some((i, &v)) = pixels.iter().enumerate().find(|(_, &v)| v > max_value) {
            return Err(GridError::RangeError(format!(
                "pixel {i} has value {v} > max_value {max_value}"
            )));
        }
        Ok(Self {
            rows,
            cols,
            max_value,
            pixels,
        })
    }

    /// Builds a grid from a generator closure `f(row, col)`.
    pub fn from_fn(
        rows: usize,
        cols: usize,
        max_value: u16,
        mut f: impl FnMut(usize, usize) -> u16,
    ) -> Result<Self, GridError> {
        let mut pixels = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                pixels.push(f(r, c));
            }
        }
        Self::new(rows, cols, max_value, pixels)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn max_value(&self) -> u16 {
        self.max_value
    }

    pub fn pixels(&self) -> &[u16] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> u16 {
        self.pixels[row * self.cols + col]
    }

    pub fn transpose(&self) -> ImageGrid {
        let mut pixels = Vec::with_capacity(self.pixels.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                pixels.push(self.get(r, c));
            }
        }
        ImageGrid {
            rows: self.cols,
            cols: self.rows,
            max_value: self.max_value,
            pixels,
        }
    }

    /// Serializes as PGM. Binary output uses one byte per sample when
    /// `max_value < 256`, otherwise two big-endian bytes.
    pub fn to_pgm(&self, encoding: PgmEncoding) -> Vec<u8> {
        let mut out = Vec::new();
        match encoding {
            PgmEncoding::Ascii => {
                out.extend_from_slice(
                    format!("P2\n{} {}\n{}\n", self.cols, self.rows, self.max_value).as_bytes(),
                );
                for row in self.pixels.chunks(self.cols) {
                    let line: Vec<String> = row.iter().map(u16::to_string).collect();
                    out.extend_from_slice(line.join(" ").as_bytes());
                    out.push(b'\n');
                }
            }
            PgmEncoding::Binary => {
                out.extend_from_slice(
                    format!("P5\n{} {}\n{}\n", self.cols, self.rows, self.max_value).as_bytes(),
                );
                if self.max_value < 256 {
                    out.extend(self.pixels.iter().map(|&p| p as u8));
                } else {
                    for &p in &self.pixels {
                        out.extend_from_slice(&p.to_be_bytes());
                    }
                }
            }
        }
        out
    }

    /// Canonical byte form used for content digests: dimensions, max value
    /// and samples, all big-endian.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(18 + 2 * self.pixels.len());
        out.extend_from_slice(&(self.rows as u64).to_be_bytes());
        out.extend_from_slice(&(self.cols as u64).to_be_bytes());
        out.extend_from_slice(&self.max_value.to_be_bytes());
        for &p in &self.pixels {
            out.extend_from_slice(&p.to_be_bytes());
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgmEncoding {
    /// `P2`
    Ascii,
    /// `P5`
    Binary,
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderReader<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    /// Reads the next unsigned decimal token, or `None` at end of input.
    fn next_number(&mut self, what: &str) -> Result<Option<u64>, GridError> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            if self.bytes[self.pos] == b'#' {
                break;
            }
            self.pos += 1;
        }
        if start == self.pos {
            return Ok(None);
        }
        let token = &self.bytes[start..self.pos];
        std::str::from_utf8(token)
            .ok()
            .and_then(|s| s.parse::<u64>().ok())
            .map(Some)
            .ok_or_else(|| {
                GridError::BadHeader(format!(
                    "{what}: cannot parse {:?} as a non-negative integer",
                    String::from_utf8_lossy(token)
                ))
            })
    }

    fn header_field(&mut self, what: &str) -> Result<u64, GridError> {
        self.next_number(what)?
            .ok_or_else(|| GridError::BadHeader(format!("missing {what}")))
    }
}

/// Parses an ASCII (`P2`) or binary (`P5`) PGM image.
pub fn load_pgm(bytes: &[u8]) -> Result<ImageGrid, GridError> {
    let binary = match bytes.get(..2) {
        Some(b"P2") => false,
        Some(b"P5") => true,
        _ => return Err(GridError::BadMagic),
    };
    let mut reader = HeaderReader { bytes, pos: 2 };
    if reader.pos < bytes.len()
        && !bytes[reader.pos].is_ascii_whitespace()
        && bytes[reader.pos] != b'#'
    {
        return Err(GridError::BadMagic);
    }
    let cols = reader.header_field("width")? as usize;
    let rows = reader.header_field("height")? as usize;
    let max_value = reader.header_field("max value")?;
    if rows == 0 || cols == 0 {
        return Err(GridError::BadHeader(format!("empty image {cols}x{rows}")));
    }
    if !(1..=65535).contains(&max_value) {
        return Err(GridError::RangeError(format!(
            "max value {max_value} outside [1, 65535]"
        )));
    }
    let max_value = max_value as u16;
    let expected = rows
        .checked_mul(cols)
        .ok_or_else(|| GridError::BadHeader(format!("{cols}x{rows} overflows")))?;

    let mut pixels = Vec::with_capacity(expected);
    if binary {
        // Exactly one whitespace byte separates the header from the raster.
        if reader.pos >= bytes.len() || !bytes[reader.pos].is_ascii_whitespace() {
            return Err(GridError::TruncatedData { expected, found: 0 });
        }
        let raster = &bytes[reader.pos + 1..];
        let width = if max_value < 256 { 1 } else { 2 };
        let found = raster.len() / width;
        if found < expected {
            return Err(GridError::TruncatedData { expected, found });
        }
        if width == 1 {
            pixels.extend(raster[..expected].iter().map(|&b| b as u16));
        } else {
            pixels.extend(
                raster[..2 * expected]
                    .chunks_exact(2)
                    .map(|c| u16::from_be_bytes([c[0], c[1]])),
            );
        }
    } else {
        while pixels.len() < expected {
            match reader.next_number("sample")? {
                Some(v) if v > max_value as u64 => {
                    return Err(GridError::RangeError(format!(
                        "sample {} has value {v} > max value {max_value}",
                        pixels.len()
                    )))
                }
                Some(v) => pixels.push(v as u16),
                None => {
                    return Err(GridError::TruncatedData {
                        expected,
                        found: pixels.len(),
                    })
                }
            }
        }
    }
    ImageGrid::new(rows, cols, max_value, pixels)
}

/// A 1-D real-valued series of at least [`MIN_SERIES_LEN`] finite values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialSeries {
    values: Vec<f64>,
    provenance: String,
}

impl SpatialSeries {
    pub fn new(values: Vec<f64>, provenance: impl Into<String>) -> Result<Self, GridError> {
        if values.len() < MIN_SERIES_LEN {
            return Err(GridError::TooSmall { len: values.len() });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite { index });
        }
        Ok(Self {
            values,
            provenance: provenance.into(),
        })
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

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Same provenance, new values. Used for derived series such as the
    /// trend and residual of a decomposition.
    pub(crate) fn derived(&self, values: Vec<f64>, suffix: &str) -> SpatialSeries {
        SpatialSeries {
            values,
            provenance: format!("{}:{suffix}", self.provenance),
        }
    }
}

/// Raster scan of the pixels in the given direction, without the length
/// floor that [`unfold`] applies.
pub fn scan(grid: &ImageGrid, dir: UnfoldDirection) -> Vec<f64> {
    match dir {
        UnfoldDirection::Horizontal => grid.pixels.iter().map(|&p| p as f64).collect(),
        UnfoldDirection::Vertical => (0..grid.cols)
            .flat_map(|c| (0..grid.rows).map(move |r| (r, c)))
            .map(|(r, c)| grid.get(r, c) as f64)
            .collect(),
    }
}

/// Raster-scans the image into a spatial series.
pub fn unfold(grid: &ImageGrid, dir: UnfoldDirection) -> Result<SpatialSeries, GridError> {
    let n = grid.rows * grid.cols;
    if n < MIN_SERIES_LEN {
        return Err(GridError::TooSmall { len: n });
    }
    Ok(SpatialSeries {
        values: scan(grid, dir),
        provenance: dir.as_str().to_string(),
    })
}
