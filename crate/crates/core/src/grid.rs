//! Uniform periodic grids over a flat torus and the centered stencils on
//! them.
//!
//! Nodes are stored row major; the last axis varies fastest. All derivative
//! operators are second order central differences with periodic index wrap,
//! so neighbor lookups never fall off the grid.

use thiserror::Error;

use crate::scalar::Real;

/// Highest spatial dimension the solver handles.
pub const MAX_DIM: usize = 2;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid dimension must be 1 or 2, got {0}")]
    UnsupportedDimension(usize),
    #[error("grid.points[{axis}] = {count}: point counts must be even and at least 8")]
    BadPointCount { axis: usize, count: usize },
    #[error("grid.lengths[{axis}]: torus lengths must be finite and positive")]
    BadLength { axis: usize },
    #[error("points ({points}) and lengths ({lengths}) disagree on the dimension")]
    DimensionMismatch { points: usize, lengths: usize },
}

/// Uniform periodic grid on the torus `prod_k [0, L_k)`.
///
/// Point counts are kept even so every node has the antipodal node needed by
/// symmetry arguments in the convergence tests, and at least 8 so the
/// centered stencils resolve the lowest Fourier mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<S> {
    dim: usize,
    points: [usize; MAX_DIM],
    lengths: [S; MAX_DIM],
}

impl<S: Real> GridSpec<S> {
    pub fn new(points: &[usize], lengths: &[S]) -> Result<Self, GridError> {
        if points.len() != lengths.len() {
            return Err(GridError::DimensionMismatch {
                points: points.len(),
                lengths: lengths.len(),
            });
        }
        let dim = points.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(GridError::UnsupportedDimension(dim));
        }
        for (axis, &count) in points.iter().enumerate() {
            if count < 8 || count % 2 != 0 {
                return Err(GridError::BadPointCount { axis, count });
            }
        }
        for (axis, &length) in lengths.iter().enumerate() {
            if !(length.is_finite() && length > S::zero()) {
                return Err(GridError::BadLength { axis });
            }
        }
        let mut p = [1usize; MAX_DIM];
        let mut l = [S::one(); MAX_DIM];
        p[..dim].copy_from_slice(points);
        l[..dim].copy_from_slice(lengths);
        Ok(GridSpec {
            dim,
            points: p,
            lengths: l,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self, axis: usize) -> usize {
        self.points[axis]
    }

    pub fn length(&self, axis: usize) -> S {
        self.lengths[axis]
    }

    pub fn spacing(&self, axis: usize) -> S {
        self.lengths[axis] / S::from_count(self.points[axis])
    }

    pub fn node_count(&self) -> usize {
        self.points[..self.dim].iter().product()
    }

    /// Multi-index of a linear node index.
    pub fn decompose(&self, node: usize) -> [usize; MAX_DIM] {
        let mut idx = [0usize; MAX_DIM];
        let mut rest = node;
        for axis in (0..self.dim).rev() {
            idx[axis] = rest % self.points[axis];
            rest /= self.points[axis];
        }
        idx
    }

    /// Linear index of a multi-index.
    pub fn index(&self, idx: [usize; MAX_DIM]) -> usize {
        let mut node = 0usize;
        for axis in 0..self.dim {
            node = node * self.points[axis] + idx[axis];
        }
        node
    }

    /// Node shifted by `offset` cells along `axis`, wrapping periodically.
    pub fn neighbor(&self, node: usize, axis: usize, offset: isize) -> usize {
        let mut idx = self.decompose(node);
        let count = self.points[axis] as isize;
        let shifted = (idx[axis] as isize + offset).rem_euclid(count);
        idx[axis] = shifted as usize;
        self.index(idx)
    }

    /// Coordinates of a node; unused axes are zero.
    pub fn coords(&self, node: usize) -> [S; MAX_DIM] {
        let idx = self.decompose(node);
        let mut x = [S::zero(); MAX_DIM];
        for axis in 0..self.dim {
            x[axis] = self.spacing(axis) * S::from_count(idx[axis]);
        }
        x
    }

    /// Grid with every point count scaled by `factor`, same torus.
    pub fn refined(&self, factor: usize) -> Result<Self, GridError> {
        let points: Vec<usize> = self.points[..self.dim].iter().map(|&n| n * factor).collect();
        GridSpec::new(&points, &self.lengths[..self.dim])
    }

    fn check_field(&self, field: &[S]) {
        assert_eq!(
            field.len(),
            self.node_count(),
            "field length does not match grid node count"
        );
    }

    /// First derivative along `axis`: (f[+1] - f[-1]) / (2h).
    pub fn partial_first(&self, field: &[S], axis: usize) -> Vec<S> {
        self.check_field(field);
        let two_h = self.spacing(axis) + self.spacing(axis);
        (0..self.node_count())
            .map(|node| {
                let fwd = field[self.neighbor(node, axis, 1)];
                let bwd = field[self.neighbor(node, axis, -1)];
                (fwd - bwd) / two_h
            })
            .collect()
    }

    /// Second derivative: the usual three point stencil on the diagonal and
    /// the symmetric four point cross stencil off it.
    pub fn partial_second(&self, field: &[S], axis_a: usize, axis_b: usize) -> Vec<S> {
        self.check_field(field);
        if axis_a == axis_b {
            let h2 = self.spacing(axis_a) * self.spacing(axis_a);
            let two = S::lit(2.0);
            (0..self.node_count())
                .map(|node| {
                    let fwd = field[self.neighbor(node, axis_a, 1)];
                    let bwd = field[self.neighbor(node, axis_a, -1)];
                    (fwd - two * field[node] + bwd) / h2
                })
                .collect()
        } else {
            // grouped so that swapping the two axes reproduces the exact
            // same floating point result
            let denom = S::lit(4.0) * (self.spacing(axis_a) * self.spacing(axis_b));
            (0..self.node_count())
                .map(|node| {
                    let pp = field[self.neighbor(self.neighbor(node, axis_a, 1), axis_b, 1)];
                    let pm = field[self.neighbor(self.neighbor(node, axis_a, 1), axis_b, -1)];
                    let mp = field[self.neighbor(self.neighbor(node, axis_a, -1), axis_b, 1)];
                    let mm = field[self.neighbor(self.neighbor(node, axis_a, -1), axis_b, -1)];
                    ((pp + mm) - (pm + mp)) / denom
                })
                .collect()
        }
    }
}
