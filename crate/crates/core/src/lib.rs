//! Directional heterogeneity analysis of grayscale images.
//!
//! An image is unfolded into a horizontal (row-major) and a vertical
//! (column-major) series. Each series goes through a periodic discrete
//! wavelet transform (per-level normalized detail energy and a
//! trend/fluctuation split), a Morlet scalogram summarized as a semi-log
//! scale profile, and multifractal detrended fluctuation analysis
//! (generalized Hurst exponents and singularity spectrum). Differences
//! between the two directions are scored against thresholds to decide
//! whether the image is heterogeneous.
//!
//! ```no_run
//! use hetscan::{grid, report};
//!
//! let bytes = std::fs::read("slice.pgm").unwrap();
//! let image = grid::load_pgm(&bytes).unwrap();
//! let report = report::analyze_image(&image, &report::PipelineConfig::default()).unwrap();
//! println!("{:?}", report.verdict);
//! ```

pub mod cli;
pub mod cwt;
pub mod dwt;
mod error;
pub mod grid;
pub mod mfdfa;
pub mod report;
pub mod synth;

pub use error::{Error, ErrorCategory, Result};
pub use grid::{ImageGrid, SpatialSeries, UnfoldDirection};
