//! Per-pixel feature vectors feeding the Gaussian kernels.
//!
//! Bandwidths are folded into the features at extraction time, so every
//! downstream kernel is the unit-bandwidth Gaussian `exp(-||h_i - h_j||^2 / 2)`
//! and one filtering implementation serves all kernels.

use crate::error::{Error, Result};
use crate::grid::RgbImage;

/// Which features a kernel compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    /// Pixel position only: `(x, y)`, dimension 2. The smoothness kernel.
    Spatial,
    /// Position plus color: `(x, y, r, g, b)`, dimension 5. The appearance kernel.
    Bilateral,
}

impl FeatureKind {
    pub fn dim(self) -> usize {
        match self {
            FeatureKind::Spatial => 2,
            FeatureKind::Bilateral => 5,
        }
    }
}

/// `n` feature vectors of fixed dimension, already divided by their
/// per-dimension bandwidths.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureField {
    kind: FeatureKind,
    dim: usize,
    n: usize,
    data: Vec<f64>,
}

impl FeatureField {
    /// Builds a field from raw (already bandwidth-scaled) vectors.
    /// `data` is row-major `n x kind.dim()`.
    pub fn new(kind: FeatureKind, n: usize, data: Vec<f64>) -> Result<Self> {
        let dim = kind.dim();
        if data.len() != n * dim {
            return Err(Error::InvalidArgument(format!(
                "feature data length {} does not match {} x {}",
                data.len(),
                n,
                dim
            )));
        }
        Ok(Self { kind, dim, n, data })
    }

    /// Test/bench constructor for arbitrary dimensions (bypasses the
    /// kind-to-dimension pairing; the lattice itself only cares about `dim`).
    pub(crate) fn from_parts(kind: FeatureKind, dim: usize, n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * dim);
        Self { kind, dim, n, data }
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Squared distance between feature vectors `i` and `j`.
    #[inline]
    pub fn dist2(&self, i: usize, j: usize) -> f64 {
        self.row(i)
            .iter()
            .zip(self.row(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

/// Extracts a feature field from an image.
///
/// Spatial features are `(x / spatial_bw, y / spatial_bw)`; bilateral adds
/// `(r, g, b) / color_bw`. Coordinates are integer (column, row) with the
/// origin at the top-left pixel.
pub fn extract_features(
    image: &RgbImage,
    kind: FeatureKind,
    spatial_bw: f64,
    color_bw: f64,
) -> Result<FeatureField> {
    if spatial_bw <= 0.0 || color_bw <= 0.0 {
        return Err(Error::InvalidArgument(
            "feature bandwidths must be positive".into(),
        ));
    }
    let (w, h) = image.dims();
    let n = w * h;
    let dim = kind.dim();
    let mut data = Vec::with_capacity(n * dim);
    for y in 0..h {
        for x in 0..w {
            data.push(x as f64 / spatial_bw);
            data.push(y as f64 / spatial_bw);
            if kind == FeatureKind::Bilateral {
                data.push(image.channel(0).at(x, y) / color_bw);
                data.push(image.channel(1).at(x, y) / color_bw);
                data.push(image.channel(2).at(x, y) / color_bw);
            }
        }
    }
    FeatureField::new(kind, n, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn image(w: usize, h: usize, rgb: [f64; 3]) -> RgbImage {
        RgbImage::new([
            Grid::filled(w, h, rgb[0]),
            Grid::filled(w, h, rgb[1]),
            Grid::filled(w, h, rgb[2]),
        ])
        .unwrap()
    }

    #[test]
    fn one_pixel_spatial_features_are_origin() {
        let f = extract_features(&image(1, 1, [1.0, 1.0, 1.0]), FeatureKind::Spatial, 2.0, 1.0)
            .unwrap();
        assert_eq!(f.row(0), &[0.0, 0.0]);
    }

    #[test]
    fn second_pixel_gets_column_coordinate() {
        let f = extract_features(&image(2, 1, [0.0, 0.0, 0.0]), FeatureKind::Spatial, 1.0, 1.0)
            .unwrap();
        assert_eq!(f.row(1), &[1.0, 0.0]);
    }

    #[test]
    fn bilateral_scales_color_by_bandwidth() {
        let f = extract_features(
            &image(1, 1, [0.5, 0.5, 0.5]),
            FeatureKind::Bilateral,
            1.0,
            0.25,
        )
        .unwrap();
        assert_eq!(&f.row(0)[2..], &[2.0, 2.0, 2.0]);
    }

    #[test]
    fn unit_bandwidths_return_raw_coordinates() {
        let img = image(3, 2, [0.25, 0.5, 0.75]);
        let f = extract_features(&img, FeatureKind::Bilateral, 1.0, 1.0).unwrap();
        assert_eq!(f.row(4), &[1.0, 1.0, 0.25, 0.5, 0.75]);
    }

    #[test]
    fn non_positive_bandwidth_rejected() {
        let img = image(1, 1, [0.0, 0.0, 0.0]);
        assert!(extract_features(&img, FeatureKind::Spatial, 0.0, 1.0).is_err());
        assert!(extract_features(&img, FeatureKind::Bilateral, 1.0, -2.0).is_err());
    }
}
