//! Finite-difference construction of the coupling matrix.
//!
//! Solves div(eps grad phi) = 0 on the two-layer stack with grounded
//! electrodes, periodic lateral boundaries and a 1 C/m^2 surface charge on one
//! domain footprint at the ferroelectric/dielectric interface. The mesh is
//! cell-centred laterally and vertex-centred across the thickness, so the
//! interface (and the charge sheet) lies on a node plane and the laterally
//! uniform solution is exact. Translational symmetry of the periodic lattice
//! means one solve yields every entry.
//!
//! Unknowns are stored column-major in z so that each vertical line is
//! contiguous; the preconditioner is an exact tridiagonal solve along these
//! lines.

use serde::{Deserialize, Serialize};

use super::CouplingMatrix;
use crate::domains::GridSpec;
use crate::exec::Execution;
use crate::stack::StackSpec;
use crate::{FtjError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceMesh {
    /// Cells per domain side.
    pub lateral_cells: usize,
    /// Cells across the dielectric thickness.
    pub dielectric_cells: usize,
    /// Cells across the ferroelectric thickness.
    pub ferroelectric_cells: usize,
    /// Relative residual at which conjugate gradients stops.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for LaplaceMesh {
    fn default() -> Self {
        Self {
            lateral_cells: 4,
            dielectric_cells: 4,
            ferroelectric_cells: 12,
            tolerance: 1e-10,
            max_iterations: 20_000,
        }
    }
}

impl LaplaceMesh {
    pub fn validate(&self) -> Result<()> {
        if self.lateral_cells < 1 {
            return Err(FtjError::InvalidParameter(
                "Laplace mesh needs at least one lateral cell per domain".into(),
            ));
        }
        if self.dielectric_cells < 2 || self.ferroelectric_cells < 2 {
            return Err(FtjError::InvalidParameter(
                "Laplace mesh needs at least two cells per layer".into(),
            ));
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(FtjError::InvalidParameter(
                "Laplace tolerance must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }

    /// Mesh refined by `factor` in every direction.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            lateral_cells: self.lateral_cells * factor,
            dielectric_cells: self.dielectric_cells * factor,
            ferroelectric_cells: self.ferroelectric_cells * factor,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceReport {
    pub iterations: usize,
    /// Final relative residual of the linear solve.
    pub residual: f64,
    /// max |row or column sum * C_0 - 1|.
    pub sum_rule_residual: f64,
    pub c_0: f64,
    pub unknowns: usize,
}

/// Discrete operator for one stack/mesh.
struct Operator {
    nx: usize,
    ny: usize,
    nz: usize,
    /// Lateral coupling eps*dz/h^2 per z level.
    lat: Vec<f64>,
    /// Coupling to the node below / above per z level.
    down: Vec<f64>,
    up: Vec<f64>,
    diag: Vec<f64>,
    /// z level of the interface node.
    interface: usize,
    /// Thomas factorisation of the line operator.
    thomas_c: Vec<f64>,
    thomas_inv: Vec<f64>,
}

impl Operator {
    fn new(stack: &StackSpec, grid: &GridSpec, mesh: &LaplaceMesh) -> Self {
        let (kd, kf) = (mesh.dielectric_cells, mesh.ferroelectric_cells);
        let h = grid.d / mesh.lateral_cells as f64;
        let dz_d = stack.t_d / kd as f64;
        let dz_f = stack.t_f / kf as f64;
        let (eps_d, eps_f) = (stack.eps_d(), stack.eps_f());
        // interior nodes 1..kd+kf-1; node kd is the interface
        let nz = kd + kf - 1;
        let mut lat = Vec::with_capacity(nz);
        let mut down = Vec::with_capacity(nz);
        let mut up = Vec::with_capacity(nz);
        for level in 0..nz {
            let node = level + 1;
            let (w, lo, hi) = if node < kd {
                (eps_d * dz_d, eps_d / dz_d, eps_d / dz_d)
            } else if node == kd {
                (0.5 * (eps_d * dz_d + eps_f * dz_f), eps_d / dz_d, eps_f / dz_f)
            } else {
                (eps_f * dz_f, eps_f / dz_f, eps_f / dz_f)
            };
            lat.push(w / (h * h));
            down.push(lo);
            up.push(hi);
        }
        let diag: Vec<f64> = (0..nz).map(|k| 4.0 * lat[k] + down[k] + up[k]).collect();
        // tridiagonal: -down[k] x[k-1] + diag[k] x[k] - up[k] x[k+1]
        let mut thomas_c = vec![0.0; nz];
        let mut thomas_inv = vec![0.0; nz];
        let mut prev_c = 0.0;
        for k in 0..nz {
            let denom = diag[k] - if k > 0 { down[k] * prev_c } else { 0.0 };
            thomas_inv[k] = 1.0 / denom;
            thomas_c[k] = up[k] * thomas_inv[k];
            prev_c = thomas_c[k];
        }
        Self {
            nx: grid.nx * mesh.lateral_cells,
            ny: grid.ny * mesh.lateral_cells,
            nz,
            lat,
            down,
            up,
            diag,
            interface: kd - 1,
            thomas_c,
            thomas_inv,
        }
    }

    fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    #[inline]
    fn col(&self, x: usize, y: usize) -> usize {
        (y * self.nx + x) * self.nz
    }

    /// out = A phi, parallel over lateral rows.
    fn apply(&self, phi: &[f64], out: &mut [f64], exec: Execution) {
        let (nx, ny, nz) = (self.nx, self.ny, self.nz);
        exec.for_each_chunk_mut(out, nx * nz, |y, row| {
            let ym = (y + ny - 1) % ny;
            let yp = (y + 1) % ny;
            for x in 0..nx {
                let xm = (x + nx - 1) % nx;
                let xp = (x + 1) % nx;
                let c = self.col(x, y);
                let (cxm, cxp) = (self.col(xm, y), self.col(xp, y));
                let (cym, cyp) = (self.col(x, ym), self.col(x, yp));
                let o = &mut row[x * nz..(x + 1) * nz];
                for k in 0..nz {
                    let lateral = phi[cxm + k] + phi[cxp + k] + phi[cym + k] + phi[cyp + k];
                    let mut v = self.diag[k] * phi[c + k] - self.lat[k] * lateral;
                    if k > 0 {
                        v -= self.down[k] * phi[c + k - 1];
                    }
                    if k + 1 < nz {
                        v -= self.up[k] * phi[c + k + 1];
                    }
                    o[k] = v;
                }
            }
        });
    }

    /// z = M^-1 r with M the block of vertical lines.
    fn precondition(&self, r: &[f64], z: &mut [f64], exec: Execution) {
        let nz = self.nz;
        exec.for_each_chunk_mut(z, self.nx * nz, |y, row| {
            let base = y * self.nx * nz;
            for (x, line) in row.chunks_exact_mut(nz).enumerate() {
                let rr = &r[base + x * nz..base + (x + 1) * nz];
                let mut prev = 0.0;
                for k in 0..nz {
                    let v = (rr[k] + if k > 0 { self.down[k] * prev } else { 0.0 })
                        * self.thomas_inv[k];
                    line[k] = v;
                    prev = v;
                }
                for k in (0..nz.saturating_sub(1)).rev() {
                    line[k] += self.thomas_c[k] * line[k + 1];
                }
            }
        });
    }
}

fn par_dot(a: &[f64], b: &[f64], chunk: usize, exec: Execution) -> f64 {
    let n_chunks = a.len().div_ceil(chunk);
    exec.map(n_chunks, |c| {
        let lo = c * chunk;
        let hi = (lo + chunk).min(a.len());
        super::dot(&a[lo..hi], &b[lo..hi])
    })
    .into_iter()
    .sum()
}

/// Preconditioned conjugate gradients. Returns (iterations, relative residual).
fn pcg(
    op: &Operator,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
    exec: Execution,
) -> Result<(usize, f64)> {
    let n = op.len();
    let chunk = op.nx * op.nz;
    let b_norm = par_dot(b, b, chunk, exec).sqrt();
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok((0, 0.0));
    }
    let mut r = vec![0.0; n];
    op.apply(x, &mut r, exec);
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
    let mut z = vec![0.0; n];
    op.precondition(&r, &mut z, exec);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = par_dot(&r, &z, chunk, exec);
    let mut res = par_dot(&r, &r, chunk, exec).sqrt() / b_norm;
    for it in 0..max_iter {
        if res < tol {
            return Ok((it, res));
        }
        op.apply(&p, &mut ap, exec);
        let alpha = rz / par_dot(&p, &ap, chunk, exec);
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut().zip(&ap).for_each(|(ri, api)| *ri -= alpha * api);
        res = par_dot(&r, &r, chunk, exec).sqrt() / b_norm;
        op.precondition(&r, &mut z, exec);
        let rz_new = par_dot(&r, &z, chunk, exec);
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
    }
    if res < tol {
        Ok((max_iter, res))
    } else {
        Err(FtjError::SolverNonConvergence {
            iterations: max_iter,
            residual: res,
        })
    }
}

/// Average interface potential over each domain footprint for a unit charge
/// sheet on domain 0, indexed by lattice offset `ox + nx * oy`.
fn offset_kernel(
    grid: &GridSpec,
    stack: &StackSpec,
    mesh: &LaplaceMesh,
    exec: Execution,
) -> Result<(Vec<f64>, usize, f64, usize)> {
    let op = Operator::new(stack, grid, mesh);
    let m = mesh.lateral_cells;
    let mut b = vec![0.0; op.len()];
    for y in 0..m {
        for x in 0..m {
            b[op.col(x, y) + op.interface] = 1.0;
        }
    }
    let mut phi = vec![0.0; op.len()];
    let (iterations, residual) = pcg(&op, &b, &mut phi, mesh.tolerance, mesh.max_iterations, exec)?;
    let norm = 1.0 / (m * m) as f64;
    let kernel = (0..grid.n_domains())
        .map(|k| {
            let (dx, dy) = grid.coords(k);
            let mut acc = 0.0;
            for y in 0..m {
                for x in 0..m {
                    acc += phi[op.col(dx * m + x, dy * m + y) + op.interface];
                }
            }
            acc * norm
        })
        .collect();
    Ok((kernel, iterations, residual, op.len()))
}

/// Builds the symmetrized coupling matrix from one finite-difference solve.
pub fn build_coupling_laplace(
    grid: &GridSpec,
    stack: &StackSpec,
    mesh: &LaplaceMesh,
    exec: Execution,
) -> Result<(CouplingMatrix, LaplaceReport)> {
    grid.validate()?;
    mesh.validate()?;
    let c_0 = stack.derive_capacitances()?.c_0;
    let (kernel, iterations, residual, unknowns) = offset_kernel(grid, stack, mesh, exec)?;
    let matrix = CouplingMatrix::from_offset_kernel(grid, &kernel)?.symmetrized();
    let sum_rule_residual = matrix.sum_rule_residual(c_0);
    log::debug!(
        "laplace coupling: {unknowns} unknowns, {iterations} PCG iterations, residual {residual:.2e}, sum rule {sum_rule_residual:.2e}"
    );
    Ok((
        matrix,
        LaplaceReport {
            iterations,
            residual,
            sum_rule_residual,
            c_0,
            unknowns,
        },
    ))
}
