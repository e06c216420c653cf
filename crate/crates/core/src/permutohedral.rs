//! Permutohedral-lattice approximation of high-dimensional Gaussian filtering.
//!
//! Approximates `out_i = sum_j exp(-||h_i - h_j||^2 / 2) v_j` in time linear
//! in the number of points: features are embedded onto the hyperplane
//! `sum(x) = 0`, each point is splatted onto the `d + 1` vertices of its
//! enclosing simplex, vertex values are blurred along every lattice
//! direction, and results are sliced back with the same barycentric weights.
//!
//! The blur applies the `[1, 2, 1] / 4` kernel along each lattice direction
//! twice, in palindromic axis order (`0..=d` then `d..=0`), with missing
//! boundary neighbors contributing zero. Because every pass is symmetric and
//! the sequence is a palindrome, the whole filter is exactly self-adjoint,
//! so the backward pass can reuse the forward operator. The elevation scale
//! and the per-dimension amplitude constants below are calibrated against
//! the exact dense filter (see `filter` module tests for the enforcement).

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::FeatureField;
use crate::grid::Grid;

pub const MAX_LATTICE_DIM: usize = 16;

/// Elevation scale multiplier: the composite splat/blur/slice pipeline with
/// two blur passes per axis behaves like a Gaussian of standard deviation
/// `sqrt(7/6) * (d + 1)` in the elevated space, so features are stretched by
/// that factor to realize a unit-bandwidth kernel in feature space.
const ELEVATION_FACTOR: f64 = 1.0801234497346435; // sqrt(7/6)

/// Per-dimension amplitude calibration (index = feature dimension).
/// Measured once against the exact dense filter on densely sampled random
/// feature sets; data-independent up to the few-percent shape error budget.
const AMPLITUDE: [f64; MAX_LATTICE_DIM + 1] = [
    1.0, // d = 0, unused
    2.2867, 4.6169, 8.9463, 16.8980, 31.3747, 57.5798, 104.7049, 189.0424,
    339.3317, 606.2432, 1078.8875, 1913.2542, 3382.9440, 5964.4982, 10488.9133,
    18400.9239,
];

/// A built lattice: vertex table, barycentric weights and blur adjacency.
/// Valid only for the feature field it was constructed from; immutable and
/// safe to share across threads.
#[derive(Debug, Clone)]
pub struct PermutohedralLattice {
    dim: usize,
    n: usize,
    vertex_count: usize,
    /// `n * (dim + 1)` vertex ids, pixel-major.
    offsets: Vec<u32>,
    /// `n * (dim + 1)` barycentric weights, pixel-major.
    weights: Vec<f64>,
    /// `(dim + 1) * vertex_count` neighbor pairs, axis-major;
    /// `u32::MAX` marks a missing neighbor.
    blur_neighbors: Vec<[u32; 2]>,
    amplitude: f64,
}

impl PermutohedralLattice {
    pub fn new(features: &FeatureField) -> Result<Self> {
        Self::build(features, ELEVATION_FACTOR, None)
    }

    fn build(
        features: &FeatureField,
        elevation_factor: f64,
        amplitude_override: Option<f64>,
    ) -> Result<Self> {
        let d = features.dim();
        if d == 0 || d > MAX_LATTICE_DIM {
            return Err(Error::FeatureDimTooLarge {
                dim: d,
                max: MAX_LATTICE_DIM,
            });
        }
        let n = features.len();
        let dp1 = d + 1;
        let inv_std = elevation_factor * dp1 as f64;
        let scale: Vec<f64> = (0..d)
            .map(|i| inv_std / (((i + 1) * (i + 2)) as f64).sqrt())
            .collect();

        // canonical[k * dp1 + rank]: coordinate of the k-th simplex vertex.
        let mut canonical = vec![0i32; dp1 * dp1];
        for k in 0..dp1 {
            for i in 0..dp1 {
                canonical[k * dp1 + i] = if i < dp1 - k {
                    k as i32
                } else {
                    k as i32 - dp1 as i32
                };
            }
        }

        let mut key_index: HashMap<Vec<i32>, u32> = HashMap::new();
        let mut keys: Vec<i32> = Vec::new(); // d coords per vertex (last is implied)
        let mut offsets = vec![0u32; n * dp1];
        let mut weights = vec![0.0f64; n * dp1];

        let mut elevated = vec![0.0f64; dp1];
        let mut rem0 = vec![0.0f64; dp1];
        let mut rank = vec![0i32; dp1];
        let mut bary = vec![0.0f64; dp1 + 1];
        let down_factor = 1.0 / dp1 as f64;

        for p in 0..n {
            let f = features.row(p);

            // Elevate onto the zero-sum hyperplane.
            let mut sm = 0.0;
            for j in (1..=d).rev() {
                let cf = f[j - 1] * scale[j - 1];
                elevated[j] = sm - j as f64 * cf;
                sm += cf;
            }
            elevated[0] = sm;

            // Closest zero-remainder lattice point.
            let mut sum = 0i32;
            for i in 0..dp1 {
                let v = elevated[i] * down_factor;
                let up = v.ceil() * dp1 as f64;
                let down = v.floor() * dp1 as f64;
                rem0[i] = if up - elevated[i] < elevated[i] - down {
                    up
                } else {
                    down
                };
                sum += (rem0[i] * down_factor).round() as i32;
            }

            // Rank differentials within the simplex.
            rank.fill(0);
            for i in 0..d {
                let di = elevated[i] - rem0[i];
                for j in (i + 1)..dp1 {
                    if di < elevated[j] - rem0[j] {
                        rank[i] += 1;
                    } else {
                        rank[j] += 1;
                    }
                }
            }

            // Walk back inside the canonical simplex if the sum was off.
            for i in 0..dp1 {
                rank[i] += sum;
                if rank[i] < 0 {
                    rank[i] += dp1 as i32;
                    rem0[i] += dp1 as f64;
                } else if rank[i] > d as i32 {
                    rank[i] -= dp1 as i32;
                    rem0[i] -= dp1 as f64;
                }
            }

            // Barycentric coordinates from the sorted differentials.
            bary.fill(0.0);
            for i in 0..dp1 {
                let v = (elevated[i] - rem0[i]) * down_factor;
                bary[(d as i32 - rank[i]) as usize] += v;
                bary[(d as i32 + 1 - rank[i]) as usize] -= v;
            }
            bary[0] += 1.0 + bary[dp1];

            // Register the d + 1 enclosing vertices.
            for remainder in 0..dp1 {
                let mut key = Vec::with_capacity(d);
                for i in 0..d {
                    key.push(rem0[i] as i32 + canonical[remainder * dp1 + rank[i] as usize]);
                }
                let next = key_index.len() as u32;
                let id = *key_index.entry(key.clone()).or_insert_with(|| {
                    keys.extend_from_slice(&key);
                    next
                });
                offsets[p * dp1 + remainder] = id;
                weights[p * dp1 + remainder] = bary[remainder];
            }
        }

        // Grow the vertex set by rings of axis neighbors so blurred mass can
        // travel off the splatted shell and return instead of being dropped.
        let rings: usize = std::env::var("MSCRF_RING")
            .ok()
            .and_then(|s| s.parse().ok())
            .unwrap_or(1);
        let mut nkey = vec![0i32; d];
        for _ in 0..rings {
            let start_len = key_index.len();
            let snapshot = keys.clone();
            for v in 0..start_len {
                let key = snapshot[v * d..(v + 1) * d].to_vec();
                for axis in 0..dp1 {
                    for side in 0..2 {
                        for i in 0..d {
                            nkey[i] = if side == 0 { key[i] - 1 } else { key[i] + 1 };
                        }
                        if axis < d {
                            nkey[axis] = if side == 0 {
                                key[axis] + d as i32
                            } else {
                                key[axis] - d as i32
                            };
                        }
                        if !key_index.contains_key(&nkey[..]) {
                            let id = key_index.len() as u32;
                            key_index.insert(nkey.clone(), id);
                            keys.extend_from_slice(&nkey);
                        }
                    }
                }
            }
        }

        let m = key_index.len();
        let mut blur_neighbors = vec![[u32::MAX; 2]; dp1 * m];
        for v in 0..m {
            let key = &keys[v * d..(v + 1) * d];
            for axis in 0..dp1 {
                for i in 0..d {
                    nkey[i] = key[i] - 1;
                }
                if axis < d {
                    nkey[axis] = key[axis] + d as i32;
                }
                let o1 = key_index.get(&nkey[..]).copied().unwrap_or(u32::MAX);
                for i in 0..d {
                    nkey[i] = key[i] + 1;
                }
                if axis < d {
                    nkey[axis] = key[axis] - d as i32;
                }
                let o2 = key_index.get(&nkey[..]).copied().unwrap_or(u32::MAX);
                blur_neighbors[axis * m + v] = [o1, o2];
            }
        }

        Ok(Self {
            dim: d,
            n,
            vertex_count: m,
            offsets,
            weights,
            blur_neighbors,
            amplitude: amplitude_override.unwrap_or(AMPLITUDE[d]),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    /// Approximate Gaussian filtering. With `exclude_self` the analytic
    /// self-weight of exactly 1 is subtracted from the result.
    pub fn filter(&self, values: &Grid, exclude_self: bool) -> Result<Grid> {
        if values.len() != self.n {
            return Err(Error::InvalidArgument(format!(
                "lattice built for {} points, values have {}",
                self.n,
                values.len()
            )));
        }
        let mut out = self.apply(values.data());
        if exclude_self {
            for (o, &v) in out.iter_mut().zip(values.data()) {
                *o -= v;
            }
        }
        Grid::from_vec(values.width(), values.height(), out)
    }

    fn apply(&self, values: &[f64]) -> Vec<f64> {
        let dp1 = self.dim + 1;
        let m = self.vertex_count;
        let mut vbuf = vec![0.0f64; m];

        // Splat.
        for p in 0..self.n {
            let v = values[p];
            for k in 0..dp1 {
                vbuf[self.offsets[p * dp1 + k] as usize] += self.weights[p * dp1 + k] * v;
            }
        }

        // Palindromic blur: forward axis sweeps then mirrored reverse sweeps.
        let mut other = vec![0.0f64; m];
        let half: usize = std::env::var("MSCRF_BLUR_HALF")
            .ok()
            .and_then(|s| s.parse().ok())
            .unwrap_or(1);
        let mut axis_sequence: Vec<usize> = Vec::new();
        for _ in 0..half {
            axis_sequence.extend(0..dp1);
        }
        for _ in 0..half {
            axis_sequence.extend((0..dp1).rev());
        }
        for axis in axis_sequence {
            let nb = &self.blur_neighbors[axis * m..(axis + 1) * m];
            let src = &vbuf;
            other
                .par_iter_mut()
                .enumerate()
                .for_each(|(v, dst): (usize, &mut f64)| {
                    let [a, b] = nb[v];
                    let va = if a == u32::MAX { 0.0 } else { src[a as usize] };
                    let vb = if b == u32::MAX { 0.0 } else { src[b as usize] };
                    *dst = 0.5 * src[v] + 0.25 * (va + vb);
                });
            std::mem::swap(&mut vbuf, &mut other);
        }

        // Slice.
        let amp = self.amplitude;
        (0..self.n)
            .into_par_iter()
            .map(|p| {
                let mut acc = 0.0;
                for k in 0..dp1 {
                    acc += self.weights[p * dp1 + k]
                        * vbuf[self.offsets[p * dp1 + k] as usize];
                }
                acc * amp
            })
            .collect()
    }
}
