//! Depolarization electrostatics.
//!
//! The coupling matrix holds inverse per-area capacitances 1/C_ij (m^2/F):
//! the average interface potential over domain `i` produced by a unit surface
//! charge (1 C/m^2) on domain `j`'s footprint at the ferroelectric/dielectric
//! interface, with both electrodes grounded. Uniform charge recovers the
//! series-capacitor limit, so each row and column sums to 1/C_0.

mod circulant;
mod closure;
mod laplace;

use std::io::Write;
use std::sync::Arc;

pub use closure::{build_coupling_closure, fit_closure, ClosureKernel};
pub use laplace::{build_coupling_laplace, LaplaceMesh, LaplaceReport};

use serde::{Deserialize, Serialize};

use crate::domains::GridSpec;
use crate::stack::StackSpec;
use crate::{FtjError, Result};

/// Which builder produces the coupling matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingMethod {
    Closure,
    Laplace,
}

impl std::str::FromStr for CouplingMethod {
    type Err = FtjError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "closure" => Ok(Self::Closure),
            "laplace" => Ok(Self::Laplace),
            other => Err(FtjError::InvalidParameter(format!(
                "unknown coupling method '{other}' (expected closure or laplace)"
            ))),
        }
    }
}

impl std::fmt::Display for CouplingMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Closure => "closure",
            Self::Laplace => "laplace",
        })
    }
}

/// Dense n_D x n_D inverse-capacitance matrix, row-major.
///
/// Matrices built from a periodic offset kernel keep it and multiply through
/// the FFT; the dense entries stay authoritative for inspection and output.
#[derive(Debug, Clone)]
pub struct CouplingMatrix {
    n: usize,
    inv_c: Vec<f64>,
    symmetrized: bool,
    structure: Structure,
}

#[derive(Debug, Clone)]
enum Structure {
    Dense,
    Zero,
    Circulant {
        nx: usize,
        ny: usize,
        kernel: Vec<f64>,
        spectrum: Arc<circulant::Spectrum>,
    },
}

impl PartialEq for CouplingMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.symmetrized == other.symmetrized && self.inv_c == other.inv_c
    }
}

impl CouplingMatrix {
    pub fn from_dense(n: usize, inv_c: Vec<f64>) -> Result<Self> {
        if inv_c.len() != n * n {
            return Err(FtjError::DimensionMismatch {
                expected: n * n,
                got: inv_c.len(),
            });
        }
        Ok(Self {
            n,
            inv_c,
            symmetrized: false,
            structure: Structure::Dense,
        })
    }

    /// All-zero coupling: no depolarization (bare ferroelectric test mode).
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            inv_c: vec![0.0; n * n],
            symmetrized: true,
            structure: Structure::Zero,
        }
    }

    /// Diagonal 1/C_0 coupling (mean-field / one-dimensional limit).
    pub fn diagonal(n: usize, c_0: f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.inv_c[i * n + i] = 1.0 / c_0;
        }
        m.structure = Structure::Dense;
        m
    }

    /// Circulant matrix on the periodic lattice: entry (i, j) is
    /// `kernel[ox + nx * oy]` with (ox, oy) the periodic offset of i from j.
    pub fn from_offset_kernel(grid: &GridSpec, kernel: &[f64]) -> Result<Self> {
        let n = grid.n_domains();
        if kernel.len() != n {
            return Err(FtjError::DimensionMismatch {
                expected: n,
                got: kernel.len(),
            });
        }
        let mut inv_c = vec![0.0; n * n];
        for i in 0..n {
            let (xi, yi) = grid.coords(i);
            for j in 0..n {
                let (xj, yj) = grid.coords(j);
                let ox = (xi + grid.nx - xj) % grid.nx;
                let oy = (yi + grid.ny - yj) % grid.ny;
                inv_c[i * n + j] = kernel[ox + grid.nx * oy];
            }
        }
        Ok(Self {
            n,
            inv_c,
            symmetrized: false,
            structure: Structure::Circulant {
                nx: grid.nx,
                ny: grid.ny,
                kernel: kernel.to_vec(),
                spectrum: Arc::new(circulant::Spectrum::new(grid.nx, grid.ny, kernel)),
            },
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_symmetrized(&self) -> bool {
        self.symmetrized
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inv_c[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.inv_c[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.inv_c
    }

    /// Replaces the matrix by 1/2 (M + M^T).
    pub fn symmetrize(&mut self) {
        let n = self.n;
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (self.inv_c[i * n + j] + self.inv_c[j * n + i]);
                self.inv_c[i * n + j] = avg;
                self.inv_c[j * n + i] = avg;
            }
        }
        self.symmetrized = true;
        if let Structure::Circulant { nx, ny, kernel, spectrum } = &mut self.structure {
            let (nx, ny) = (*nx, *ny);
            let old = kernel.clone();
            for oy in 0..ny {
                for ox in 0..nx {
                    let mirror = (nx - ox) % nx + nx * ((ny - oy) % ny);
                    kernel[ox + nx * oy] = 0.5 * (old[ox + nx * oy] + old[mirror]);
                }
            }
            *spectrum = Arc::new(circulant::Spectrum::new(nx, ny, kernel));
        }
    }

    pub fn symmetrized(mut self) -> Self {
        self.symmetrize();
        self
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n];
        for i in 0..self.n {
            for (acc, v) in s.iter_mut().zip(self.row(i)) {
                *acc += v;
            }
        }
        s
    }

    /// max over rows and columns of |sum - 1/C_0| * C_0.
    pub fn sum_rule_residual(&self, c_0: f64) -> f64 {
        self.row_sums()
            .into_iter()
            .chain(self.col_sums())
            .map(|s| (s * c_0 - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest |M_ij - M_ji|.
    pub fn asymmetry(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// out = M p.
    pub fn apply(&self, p: &[f64], out: &mut [f64]) {
        debug_assert_eq!(p.len(), self.n);
        debug_assert_eq!(out.len(), self.n);
        match &self.structure {
            Structure::Zero => out.fill(0.0),
            Structure::Circulant { spectrum, .. } => spectrum.apply(p, out),
            Structure::Dense => self.apply_dense(p, out),
        }
    }

    /// out = M p by explicit row products, whatever the structure.
    pub fn apply_dense(&self, p: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(self.inv_c.chunks_exact(self.n)) {
            *o = dot(row, p);
        }
    }

    /// Row-major CSV with a `row,col_0,...` header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["row".to_string()];
        header.extend((0..self.n).map(|j| format!("col_{j}")));
        w.write_record(&header)?;
        for i in 0..self.n {
            let mut rec = vec![i.to_string()];
            rec.extend(self.row(i).iter().map(|v| format!("{v:e}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Four-way unrolled dot product; the fixed accumulation order keeps results
/// independent of the caller's thread.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

/// Linear part of the voltage partition: V_D,i = (M P)_i + c_f_over_c0 (V_T + v_bi).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoltagePartition {
    /// C_F / C_0
    pub c_f_over_c0: f64,
    /// C_D / C_0, the drive gain of the LGD equation.
    pub c_d_over_c0: f64,
    /// Built-in bias (Phi_MD - Phi_MF)/q added to V_T, V.
    pub v_bi: f64,
}

impl VoltagePartition {
    pub fn from_stack(stack: &StackSpec) -> Result<Self> {
        if stack.is_bare() {
            stack.validate()?;
            return Ok(Self::bare());
        }
        let c = stack.derive_capacitances()?;
        Ok(Self {
            c_f_over_c0: c.c_f / c.c_0,
            c_d_over_c0: c.c_d / c.c_0,
            v_bi: -stack.builtin_voltage(),
        })
    }

    /// Metal/ferroelectric/metal: the full bias drops on the ferroelectric.
    pub fn bare() -> Self {
        Self {
            c_f_over_c0: 0.0,
            c_d_over_c0: 1.0,
            v_bi: 0.0,
        }
    }
}

/// V_D,i = sum_j P_j / C_ij + (C_F/C_0)(V_T + V_bi).
pub fn dielectric_voltages(
    p: &[f64],
    v_t: f64,
    m: &CouplingMatrix,
    partition: &VoltagePartition,
) -> Result<Vec<f64>> {
    if p.len() != m.n() {
        return Err(FtjError::DimensionMismatch {
            expected: m.n(),
            got: p.len(),
        });
    }
    let mut v = vec![0.0; p.len()];
    m.apply(p, &mut v);
    let offset = partition.c_f_over_c0 * (v_t + partition.v_bi);
    v.iter_mut().for_each(|x| *x += offset);
    Ok(v)
}

/// V_F,i = V_T + V_bi - V_D,i.
pub fn ferroelectric_voltages(v_d: &[f64], v_t: f64, partition: &VoltagePartition) -> Vec<f64> {
    v_d.iter().map(|vd| v_t + partition.v_bi - vd).collect()
}

/// E_DEP = P_r / (eps0 eps_F (C_D/C_F + 1)), V/m.
pub fn depolarization_field(p_r: f64, stack: &StackSpec) -> Result<f64> {
    if !(p_r >= 0.0) {
        return Err(FtjError::InvalidParameter(
            "remnant polarization must be non-negative".into(),
        ));
    }
    let c = stack.derive_capacitances()?;
    if c.c_f <= 0.0 {
        return Err(FtjError::InvalidStack("C_F must be positive".into()));
    }
    Ok(p_r / (stack.eps_f() * (c.c_d / c.c_f + 1.0)))
}

/// Builds the symmetrized coupling matrix with the requested method.
pub fn build_coupling(
    method: CouplingMethod,
    grid: &GridSpec,
    stack: &StackSpec,
    closure: &ClosureKernel,
    mesh: &LaplaceMesh,
    exec: crate::exec::Execution,
) -> Result<(CouplingMatrix, Option<LaplaceReport>)> {
    if stack.is_bare() {
        stack.validate()?;
        return Ok((CouplingMatrix::zeros(grid.n_domains()), None));
    }
    match method {
        CouplingMethod::Closure => {
            let c_0 = stack.derive_capacitances()?.c_0;
            Ok((build_coupling_closure(grid, c_0, closure)?, None))
        }
        CouplingMethod::Laplace => {
            let (m, report) = build_coupling_laplace(grid, stack, mesh, exec)?;
            Ok((m, Some(report)))
        }
    }
}
