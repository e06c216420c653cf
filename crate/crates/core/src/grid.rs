//! Single-channel maps, RGB images and bilinear resampling.
//!
//! A [`Grid`] is a `width x height` map of real values stored row-major.
//! It is the carrier for score maps, depth maps and mean-field state.
//! All public constructors reject non-finite values; operations are pure.

use crate::error::{Error, Result};

/// A `width x height` single-channel map of `f64` values, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Grid {
    /// Builds a grid from row-major data. Panics if `data.len() != w * h`
    /// (programmer error); returns an error if any value is non-finite.
    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        assert_eq!(
            data.len(),
            width * height,
            "grid data length must equal width * height"
        );
        let bad = data.iter().filter(|v| !v.is_finite()).count();
        if bad > 0 {
            return Err(Error::NonFiniteData { count: bad });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// All-`value` grid.
    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Pixel count.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    pub fn same_dims(&self, other: &Grid) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Errors with `ShapeMismatch` unless `other` has identical dimensions.
    pub fn check_same_dims(&self, other: &Grid) -> Result<()> {
        if self.same_dims(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                expected: self.dims(),
                got: other.dims(),
            })
        }
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Element-wise map into a new grid.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Grid {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Element-wise combination of two same-shaped grids.
    pub fn zip_with(&self, other: &Grid, f: impl Fn(f64, f64) -> f64) -> Grid {
        debug_assert!(self.same_dims(other));
        Grid {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &Grid) -> Grid {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Grid) -> Grid {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Grid {
        self.map(|v| v * s)
    }

    pub fn relu(&self) -> Grid {
        self.map(|v| if v > 0.0 { v } else { 0.0 })
    }

    /// In-place `self += s * other`.
    pub fn add_scaled_assign(&mut self, other: &Grid, s: f64) {
        debug_assert!(self.same_dims(other));
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn dot(&self, other: &Grid) -> f64 {
        debug_assert!(self.same_dims(other));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a * b)
            .sum()
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Max-abs difference; grids must share a shape.
    pub fn linf_distance(&self, other: &Grid) -> f64 {
        debug_assert!(self.same_dims(other));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Relative L2 distance `||a - b|| / ||b||` (0 when both are zero).
    pub fn rel_l2_distance(&self, reference: &Grid) -> f64 {
        debug_assert!(self.same_dims(reference));
        let mut num = 0.0;
        let mut den = 0.0;
        for (&a, &b) in self.data.iter().zip(&reference.data) {
            num += (a - b) * (a - b);
            den += b * b;
        }
        if den == 0.0 {
            return if num == 0.0 { 0.0 } else { f64::INFINITY };
        }
        (num / den).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// A three-channel image with values in `[0, 1]`, channels stored as grids.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    channels: [Grid; 3],
}

impl RgbImage {
    pub fn new(channels: [Grid; 3]) -> Result<Self> {
        let (w, h) = channels[0].dims();
        for c in &channels {
            if c.dims() != (w, h) {
                return Err(Error::ShapeMismatch {
                    expected: (w, h),
                    got: c.dims(),
                });
            }
        }
        Ok(Self {
            width: w,
            height: h,
            channels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn channel(&self, c: usize) -> &Grid {
        &self.channels[c]
    }

    /// Per-channel bilinear resampling (align-corners).
    pub fn resampled(&self, new_w: usize, new_h: usize) -> Result<RgbImage> {
        let r = |g: &Grid| resample_bilinear(g, new_w, new_h);
        RgbImage::new([
            r(&self.channels[0])?,
            r(&self.channels[1])?,
            r(&self.channels[2])?,
        ])
    }
}

/// Bilinear resampling with the align-corners convention: the four corner
/// pixels map exactly onto each other, so constants and endpoints are
/// preserved and outputs stay inside the input min/max.
pub fn resample_bilinear(grid: &Grid, new_w: usize, new_h: usize) -> Result<Grid> {
    if new_w == 0 || new_h == 0 {
        return Err(Error::InvalidArgument(
            "resample target dimensions must be >= 1".into(),
        ));
    }
    if (new_w, new_h) == grid.dims() {
        return Ok(grid.clone());
    }
    let (sw, sh) = grid.dims();
    let x_step = if new_w > 1 {
        (sw - 1) as f64 / (new_w - 1) as f64
    } else {
        0.0
    };
    let y_step = if new_h > 1 {
        (sh - 1) as f64 / (new_h - 1) as f64
    } else {
        0.0
    };
    let mut out = Vec::with_capacity(new_w * new_h);
    for y in 0..new_h {
        let sy = y as f64 * y_step;
        let y0 = (sy.floor() as usize).min(sh - 1);
        let y1 = (y0 + 1).min(sh - 1);
        let fy = sy - y0 as f64;
        for x in 0..new_w {
            let sx = x as f64 * x_step;
            let x0 = (sx.floor() as usize).min(sw - 1);
            let x1 = (x0 + 1).min(sw - 1);
            let fx = sx - x0 as f64;
            let top = grid.at(x0, y0) * (1.0 - fx) + grid.at(x1, y0) * fx;
            let bot = grid.at(x0, y1) * (1.0 - fx) + grid.at(x1, y1) * fx;
            out.push(top * (1.0 - fy) + bot * fy);
        }
    }
    Ok(Grid {
        width: new_w,
        height: new_h,
        data: out,
    })
}

/// Adjoint of [`resample_bilinear`]: scatters an upstream gradient defined on
/// the `grad` grid back onto a `src_w x src_h` grid with the same bilinear
/// weights. Satisfies `<R u, v> == <u, R^T v>` exactly (up to roundoff).
pub fn resample_bilinear_adjoint(grad: &Grid, src_w: usize, src_h: usize) -> Result<Grid> {
    if src_w == 0 || src_h == 0 {
        return Err(Error::InvalidArgument(
            "resample source dimensions must be >= 1".into(),
        ));
    }
    if grad.dims() == (src_w, src_h) {
        return Ok(grad.clone());
    }
    let (dw, dh) = grid_dims(grad);
    let x_step = if dw > 1 {
        (src_w - 1) as f64 / (dw - 1) as f64
    } else {
        0.0
    };
    let y_step = if dh > 1 {
        (src_h - 1) as f64 / (dh - 1) as f64
    } else {
        0.0
    };
    let mut out = Grid::zeros(src_w, src_h);
    for y in 0..dh {
        let sy = y as f64 * y_step;
        let y0 = (sy.floor() as usize).min(src_h - 1);
        let y1 = (y0 + 1).min(src_h - 1);
        let fy = sy - y0 as f64;
        for x in 0..dw {
            let sx = x as f64 * x_step;
            let x0 = (sx.floor() as usize).min(src_w - 1);
            let x1 = (x0 + 1).min(src_w - 1);
            let fx = sx - x0 as f64;
            let g = grad.at(x, y);
            out.data[y0 * src_w + x0] += g * (1.0 - fx) * (1.0 - fy);
            out.data[y0 * src_w + x1] += g * fx * (1.0 - fy);
            out.data[y1 * src_w + x0] += g * (1.0 - fx) * fy;
            out.data[y1 * src_w + x1] += g * fx * fy;
        }
    }
    Ok(out)
}

fn grid_dims(g: &Grid) -> (usize, usize) {
    (g.width, g.height)
}
