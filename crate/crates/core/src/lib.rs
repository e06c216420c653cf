//! Numerical engine for fusing multi-scale score maps into one refined
//! prediction map via continuous-CRF mean-field inference.
//!
//! The crate is organized around six layers:
//!
//! - [`grid`] / [`features`] / [`io`]: maps, images, resampling, feature
//!   extraction and bit-exact file formats.
//! - [`filter`] / [`permutohedral`]: Gaussian-kernel message passing — an
//!   exact dense path and the linear-time lattice approximation.
//! - [`cmf`]: one continuous mean-field update for one scale, with gates
//!   selecting multi-scale vs cascade semantics, plus its exact backward.
//! - [`fusion`] / [`oracle`]: the cascade of scale-specific CRFs and the
//!   single multi-scale CRF, with a quadratic-MAP linear-solve oracle.
//! - [`frontend`] / [`train`]: a small learnable front end, two-phase SGD
//!   training, gradient checking and a synthetic dataset generator.
//! - [`metrics`] / [`model`]: depth evaluation metrics and the model file.

pub mod cmf;
pub mod error;
pub mod features;
pub mod filter;
pub mod frontend;
pub mod fusion;
pub mod grid;
pub mod io;
pub mod kernels;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod permutohedral;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
pub use features::{extract_features, FeatureField, FeatureKind};
pub use filter::{dense_filter, DenseKernel, FilterPath, FilterPlan, DENSE_CROSSOVER};
pub use grid::{resample_bilinear, resample_bilinear_adjoint, Grid, RgbImage};
pub use io::{read_grid, read_ppm, write_grid, write_ppm, GrdDtype};
pub use permutohedral::PermutohedralLattice;
