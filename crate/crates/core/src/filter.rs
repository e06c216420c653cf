//! Gaussian-kernel message passing: the exact dense path and the fast
//! permutohedral approximation behind one plan type.
//!
//! `dense_filter` is the O(N^2) reference used as the oracle everywhere.
//! [`FilterPlan`] is the production interface: a cached dense kernel matrix
//! below the measured crossover, the lattice above it.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::FeatureField;
use crate::grid::Grid;
use crate::permutohedral::PermutohedralLattice;

/// Below this pixel count a cached dense kernel beats building a lattice;
/// measured with `bench-filter`, not assumed.
pub const DENSE_CROSSOVER: usize = 1024;

/// Exact Gaussian filtering, `out_i = sum_j exp(-||h_i - h_j||^2 / 2) v_j`,
/// with the `j = i` term (weight exactly 1) omitted when `exclude_self` is
/// set. Quadratic cost; this is the oracle the lattice is tested against.
pub fn dense_filter(values: &Grid, features: &FeatureField, exclude_self: bool) -> Result<Grid> {
    if values.len() != features.len() {
        return Err(Error::InvalidArgument(format!(
            "values ({}) and features ({}) disagree on N",
            values.len(),
            features.len()
        )));
    }
    let n = values.len();
    let v = values.data();
    let out: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..n {
                if exclude_self && j == i {
                    continue;
                }
                acc += (-0.5 * features.dist2(i, j)).exp() * v[j];
            }
            acc
        })
        .collect();
    Grid::from_vec(values.width(), values.height(), out)
}

/// Cached `N x N` kernel matrix for repeated filtering at small N.
#[derive(Debug, Clone)]
pub struct DenseKernel {
    n: usize,
    /// Row-major kernel including the unit diagonal.
    weights: Vec<f64>,
}

impl DenseKernel {
    pub fn new(features: &FeatureField) -> Self {
        let n = features.len();
        let mut weights = vec![0.0f64; n * n];
        weights
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(i, row)| {
                for (j, w) in row.iter_mut().enumerate() {
                    *w = (-0.5 * features.dist2(i, j)).exp();
                }
            });
        Self { n, weights }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn filter(&self, values: &Grid, exclude_self: bool) -> Result<Grid> {
        if values.len() != self.n {
            return Err(Error::InvalidArgument(format!(
                "kernel built for {} points, values have {}",
                self.n,
                values.len()
            )));
        }
        let v = values.data();
        let out: Vec<f64> = self
            .weights
            .par_chunks(self.n)
            .enumerate()
            .map(|(i, row)| {
                let mut acc = 0.0;
                for (j, &w) in row.iter().enumerate() {
                    acc += w * v[j];
                }
                if exclude_self {
                    acc -= v[i]; // diagonal weight is exactly 1
                }
                acc
            })
            .collect();
        Grid::from_vec(values.width(), values.height(), out)
    }
}

/// A reusable filtering plan for one feature field.
#[derive(Debug, Clone)]
pub enum FilterPlan {
    Dense(DenseKernel),
    Lattice(PermutohedralLattice),
}

/// Which plan [`FilterPlan::build`] should produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FilterPath {
    /// Dense kernel cache for `N <= DENSE_CROSSOVER`, lattice above.
    #[default]
    Auto,
    Dense,
    Lattice,
}

impl FilterPlan {
    pub fn build(features: &FeatureField, path: FilterPath) -> Result<Self> {
        match path {
            FilterPath::Dense => Ok(FilterPlan::Dense(DenseKernel::new(features))),
            FilterPath::Lattice => Ok(FilterPlan::Lattice(PermutohedralLattice::new(features)?)),
            FilterPath::Auto => {
                if features.len() <= DENSE_CROSSOVER {
                    Ok(FilterPlan::Dense(DenseKernel::new(features)))
                } else {
                    Ok(FilterPlan::Lattice(PermutohedralLattice::new(features)?))
                }
            }
        }
    }

    /// Fast-path constructor for the lattice (one-time per image per kernel).
    pub fn lattice(features: &FeatureField) -> Result<Self> {
        Self::build(features, FilterPath::Lattice)
    }

    pub fn len(&self) -> usize {
        match self {
            FilterPlan::Dense(k) => k.len(),
            FilterPlan::Lattice(l) => l.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn filter(&self, values: &Grid, exclude_self: bool) -> Result<Grid> {
        match self {
            FilterPlan::Dense(k) => k.filter(values, exclude_self),
            FilterPlan::Lattice(l) => l.filter(values, exclude_self),
        }
    }

    /// Adjoint of [`FilterPlan::filter`]. The Gaussian kernel matrix is
    /// symmetric and the lattice operator is self-adjoint by construction,
    /// so this is the same linear map; it exists to make the backward-pass
    /// contract explicit and independently testable.
    pub fn adjoint(&self, grad_out: &Grid, exclude_self: bool) -> Result<Grid> {
        self.filter(grad_out, exclude_self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureKind;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn line_features(n: usize, step: f64) -> FeatureField {
        let data = (0..n).flat_map(|i| vec![i as f64 * step, 0.0]).collect();
        FeatureField::new(FeatureKind::Spatial, n, data).unwrap()
    }

    #[test]
    fn empty_sum_for_single_point() {
        let f = line_features(1, 1.0);
        let out = dense_filter(&Grid::from_vec(1, 1, vec![7.0]).unwrap(), &f, true).unwrap();
        assert_eq!(out.at(0, 0), 0.0);
    }

    #[test]
    fn identical_features_swap_values() {
        let f = FeatureField::new(FeatureKind::Spatial, 2, vec![1.0, 2.0, 1.0, 2.0]).unwrap();
        let out =
            dense_filter(&Grid::from_vec(2, 1, vec![3.0, -4.0]).unwrap(), &f, true).unwrap();
        assert_eq!(out.data(), &[-4.0, 3.0]);
    }

    #[test]
    fn kernel_value_matches_hand_evaluation() {
        // ||dh||^2 = 2 gives weight e^{-1}
        let f = FeatureField::new(FeatureKind::Spatial, 2, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        let out =
            dense_filter(&Grid::from_vec(2, 1, vec![1.0, 0.0]).unwrap(), &f, true).unwrap();
        assert_eq!(out.at(0, 0), 0.0);
        assert!((out.at(1, 0) - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn size_mismatch_rejected() {
        let f = line_features(3, 1.0);
        assert!(dense_filter(&Grid::zeros(2, 1), &f, false).is_err());
        let plan = FilterPlan::build(&f, FilterPath::Lattice).unwrap();
        assert!(plan.filter(&Grid::zeros(2, 1), false).is_err());
    }

    #[test]
    fn cached_kernel_matches_on_the_fly() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 40;
        let f = line_features(n, 0.8);
        let v = Grid::from_vec(n, 1, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let cached = DenseKernel::new(&f);
        for exclude in [false, true] {
            let a = dense_filter(&v, &f, exclude).unwrap();
            let b = cached.filter(&v, exclude).unwrap();
            assert!(a.linf_distance(&b) < 1e-12);
        }
    }

    #[test]
    fn dense_adjoint_inner_product_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 256;
        let data: Vec<f64> = (0..n * 2).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let f = FeatureField::new(FeatureKind::Spatial, n, data).unwrap();
        let plan = FilterPlan::build(&f, FilterPath::Dense).unwrap();
        let u = Grid::from_vec(n, 1, (0..n).map(|_| rng.gen::<f64>()).collect()).unwrap();
        let v = Grid::from_vec(n, 1, (0..n).map(|_| rng.gen::<f64>()).collect()).unwrap();
        for exclude in [false, true] {
            let fv = plan.filter(&v, exclude).unwrap();
            let fu = plan.adjoint(&u, exclude).unwrap();
            let lhs = u.dot(&fv);
            let rhs = fu.dot(&v);
            assert!(
                (lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()).max(1.0),
                "dense adjoint defect too large: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn adjoint_of_zero_is_zero() {
        let f = line_features(16, 0.5);
        let plan = FilterPlan::build(&f, FilterPath::Lattice).unwrap();
        let out = plan.adjoint(&Grid::zeros(16, 1), true).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn auto_path_selects_by_size() {
        let f = line_features(8, 1.0);
        assert!(matches!(
            FilterPlan::build(&f, FilterPath::Auto).unwrap(),
            FilterPlan::Dense(_)
        ));
    }
}
