//! Dense rank-3 arrays and the small linear-algebra helpers shared by the
//! reduction, oracle and lattice code.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, WongError};

/// Condition-number ceiling for every guarded inversion.
pub const COND_LIMIT: f64 = 1e12;

/// Row-major rank-3 array `t[i][j][k]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensor3 {
    dims: [usize; 3],
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(d0: usize, d1: usize, d2: usize) -> Self {
        Self {
            dims: [d0, d1, d2],
            data: vec![0.0; d0 * d1 * d2],
        }
    }

    pub fn from_vec(dims: [usize; 3], data: Vec<f64>) -> Result<Self> {
        if data.len() != dims[0] * dims[1] * dims[2] {
            return Err(WongError::dim(format!(
                "rank-3 array of shape {:?} needs {} entries, got {}",
                dims,
                dims[0] * dims[1] * dims[2],
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn from_fn(d0: usize, d1: usize, d2: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(d0, d1, d2);
        for i in 0..d0 {
            for j in 0..d1 {
                for k in 0..d2 {
                    t.data[(i * d1 + j) * d2 + k] = f(i, j, k);
                }
            }
        }
        t
    }

    /// Stack matrices `m[k]` (each d0 x d1) along the last index.
    pub fn from_slices(slices: &[DMatrix<f64>]) -> Self {
        let d2 = slices.len();
        let (d0, d1) = slices.first().map(|m| m.shape()).unwrap_or((0, 0));
        Self::from_fn(d0, d1, d2, |i, j, k| slices[k][(i, j)])
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.dims[1] + j) * self.dims[2] + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let d1 = self.dims[1];
        let d2 = self.dims[2];
        self.data[(i * d1 + j) * d2 + k] = v;
    }

    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let d1 = self.dims[1];
        let d2 = self.dims[2];
        self.data[(i * d1 + j) * d2 + k] += v;
    }

    /// Matrix `t[., ., k]`.
    pub fn slice_last(&self, k: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.dims[0], self.dims[1], |i, j| self.get(i, j, k))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Tensor3) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Contract the last two slots with `u` and `w`: `r_i = t_ijk u_j w_k`.
    pub fn contract_last_two(&self, u: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        let [d0, d1, d2] = self.dims;
        DVector::from_fn(d0, |i, _| {
            let mut s = 0.0;
            for j in 0..d1 {
                let uj = u[j];
                if uj == 0.0 {
                    continue;
                }
                for k in 0..d2 {
                    s += self.get(i, j, k) * uj * w[k];
                }
            }
            s
        })
    }
}

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Condition number (2-norm) from singular values; infinite when singular.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Inverse guarded by [`COND_LIMIT`]; `on_fail` maps the condition number to
/// the typed error of the caller.
pub fn guarded_inverse(m: &DMatrix<f64>, on_fail: impl Fn(f64) -> WongError) -> Result<DMatrix<f64>> {
    let cond = condition_number(m);
    if !(cond <= COND_LIMIT) {
        return Err(on_fail(cond));
    }
    m.clone().try_inverse().ok_or_else(|| on_fail(cond))
}

/// Like [`guarded_inverse`], but also rejects matrices whose smallest
/// singular value is tiny against `scale` (the size of the factors `m` was
/// built from), which catches 1 x 1 degeneracies.
pub fn scaled_inverse(m: &DMatrix<f64>, scale: f64, on_fail: impl Fn(f64) -> WongError) -> Result<DMatrix<f64>> {
    if m.nrows() > 0 {
        let smin = m.clone().singular_values().iter().cloned().fold(f64::INFINITY, f64::min);
        let rel = if smin > 0.0 { scale / smin } else { f64::INFINITY };
        if !(rel <= COND_LIMIT) {
            return Err(on_fail(rel));
        }
    }
    guarded_inverse(m, on_fail)
}

/// Central-difference step for coordinate `x`.
pub fn fd_step(x: f64) -> f64 {
    f64::EPSILON.cbrt() * x.abs().max(1.0)
}
