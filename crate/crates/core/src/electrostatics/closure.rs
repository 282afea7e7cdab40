//! Exponential closure for the coupling matrix.
//!
//! 1/C_ii = s / C_0; off-diagonal entries decay as exp(-r_ij / lambda) with
//! the periodic (torus) centre distance r_ij, normalised so that every row
//! sums to 1/C_0.

use serde::{Deserialize, Serialize};

use super::CouplingMatrix;
use crate::domains::GridSpec;
use crate::{FtjError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosureKernel {
    /// Fraction s of 1/C_0 kept on the diagonal, 0 < s <= 1.
    pub self_fraction: f64,
    /// Decay length lambda of the off-diagonal weights, m.
    pub decay_length: f64,
}

impl Default for ClosureKernel {
    /// Fitted to the diagonal and nearest-neighbour entries of the Laplace
    /// matrix for TiN/HZO(12 nm)/Al2O3(2 nm)/TiN on the default 20 x 20 grid
    /// and mesh.
    fn default() -> Self {
        Self {
            self_fraction: 0.3362,
            decay_length: 3.219e-9,
        }
    }
}

impl ClosureKernel {
    pub fn validate(&self) -> Result<()> {
        if !(self.self_fraction > 0.0 && self.self_fraction <= 1.0) {
            return Err(FtjError::InvalidParameter(
                "closure self fraction must lie in (0, 1]".into(),
            ));
        }
        if !(self.decay_length > 0.0) {
            return Err(FtjError::InvalidParameter(
                "closure decay length must be positive".into(),
            ));
        }
        Ok(())
    }
}

fn offset_weights(grid: &GridSpec, decay_length: f64) -> Vec<f64> {
    // weight of the domain at offset (ox, oy) from domain 0
    (0..grid.n_domains())
        .map(|k| {
            if k == 0 {
                0.0
            } else {
                (-grid.torus_distance(k, 0) / decay_length).exp()
            }
        })
        .collect()
}

pub fn build_coupling_closure(
    grid: &GridSpec,
    c_0: f64,
    kernel: &ClosureKernel,
) -> Result<CouplingMatrix> {
    grid.validate()?;
    kernel.validate()?;
    if !(c_0 > 0.0) {
        return Err(FtjError::InvalidParameter("C_0 must be positive".into()));
    }
    let n = grid.n_domains();
    let inv_c0 = 1.0 / c_0;
    let weights = offset_weights(grid, kernel.decay_length);
    let total: f64 = weights.iter().sum();
    let kernel_vals: Vec<f64> = if n == 1 || total == 0.0 {
        let mut k = vec![0.0; n];
        k[0] = inv_c0;
        k
    } else {
        let off = (1.0 - kernel.self_fraction) * inv_c0;
        let mut k: Vec<f64> = weights.iter().map(|w| off * w / total).collect();
        // diagonal absorbs the rounding so the row sum is 1/C_0 to the last ulp
        let off_sum: f64 = k.iter().sum();
        k[0] = inv_c0 - off_sum;
        k
    };
    let m = CouplingMatrix::from_offset_kernel(grid, &kernel_vals)?;
    Ok(m.symmetrized())
}

/// Fits (s, lambda) so the closure reproduces the diagonal and the mean
/// nearest-neighbour entry of `reference`.
pub fn fit_closure(reference: &CouplingMatrix, grid: &GridSpec, c_0: f64) -> Result<ClosureKernel> {
    let n = grid.n_domains();
    if reference.n() != n {
        return Err(FtjError::DimensionMismatch {
            expected: n,
            got: reference.n(),
        });
    }
    let s = (reference.get(0, 0) * c_0).clamp(f64::MIN_POSITIVE, 1.0);
    if n == 1 || s >= 1.0 {
        return Ok(ClosureKernel {
            self_fraction: 1.0,
            decay_length: grid.d,
        });
    }
    let nb = grid.neighbors(0)?;
    let target = nb.iter().map(|&j| reference.get(j, 0)).sum::<f64>() / 4.0 * c_0;
    let nn_of = |lambda: f64| -> f64 {
        let w = offset_weights(grid, lambda);
        let total: f64 = w.iter().sum();
        let w_nn = nb.iter().map(|&j| w[j]).sum::<f64>() / 4.0;
        (1.0 - s) * w_nn / total
    };
    // nearest-neighbour share grows monotonically as lambda shrinks
    let (mut lo, mut hi) = (grid.d * 1e-3, grid.d * 1e3);
    if target >= nn_of(lo) || target <= nn_of(hi) {
        return Err(FtjError::InvalidParameter(
            "reference matrix nearest-neighbour entry outside the closure family".into(),
        ));
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if nn_of(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ClosureKernel {
        self_fraction: s,
        decay_length: (lo * hi).sqrt(),
    })
}
